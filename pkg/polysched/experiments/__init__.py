from .runner import (
    ExperimentConfig,
    Report,
    ReportRow,
    SpeedRow,
    build_instances,
    compare_flowtime_speed,
    load_config,
    run_experiment,
    write_report,
)
