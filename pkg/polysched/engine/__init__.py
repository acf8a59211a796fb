from .simulator import SchedulerView, simulate, next_completion
from .trace import (
    Segment,
    Event,
    Trace,
    Metrics,
    TraceCheck,
    metrics,
    check_trace,
    export_trace,
    load_trace,
    trace_to_dict,
    trace_from_dict,
)
