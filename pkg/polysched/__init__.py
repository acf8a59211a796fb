from .errors import PolyschedError
from .instances import Instance, Job
from .engine import Trace, simulate
from .schedulers import make_scheduler

__version__ = "0.1.0"
