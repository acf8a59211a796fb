from typing import Any, Optional


class PolyschedError(Exception):
    pass


# instances
class InstanceError(PolyschedError):
    pass


class InstanceParseError(InstanceError):
    pass


class InstanceValidationError(InstanceError):
    def __init__(self, message: str, job_id: Optional[int] = None):
        if job_id is not None:
            message = f"job {job_id}: {message}"
        super().__init__(message)
        self.job_id = job_id


class GeneratorError(InstanceError):
    pass


# polytope
class PolytopeError(PolyschedError):
    pass


class UnprocessableJobError(PolytopeError):
    def __init__(self, job_id: int, reason: str = "all-zero column"):
        super().__init__(f"job {job_id} can never be processed ({reason})")
        self.job_id = job_id


class DimensionMismatchError(PolytopeError):
    pass


# solver
class SolverError(PolyschedError):
    pass


class NonConvergenceError(SolverError):
    def __init__(self, message: str, best: Any = None, report: Any = None):
        super().__init__(message)
        self.best = best
        self.report = report


# engine
class SimulationError(PolyschedError):
    pass


class InfeasibleDecisionError(SimulationError):
    def __init__(self, message: str, segment: Any = None):
        super().__init__(message)
        self.segment = segment


class LivelockError(SimulationError):
    pass


class NoProgressError(SimulationError):
    pass


class IncompleteTraceError(SimulationError):
    pass


# schedulers
class SchedulerError(PolyschedError):
    pass


class UnsupportedFamilyError(SchedulerError):
    pass


class InvariantViolationError(SchedulerError):
    def __init__(self, invariant: str, witness: Any):
        super().__init__(f"{invariant} violated: {witness}")
        self.invariant = invariant
        self.witness = witness


# certify
class CertificateError(PolyschedError):
    pass


class MissingDualsError(CertificateError):
    pass


class SlotWidthError(CertificateError):
    pass


class OracleError(CertificateError):
    pass


class ConfigError(PolyschedError):
    pass
