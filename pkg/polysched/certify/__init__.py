from .blass_cert import UnrelatedDualCert, blass_duals, check_blass_cert
from .completion_cert import CompletionDualCert, check_completion_cert, completion_duals
from .oracles import OracleResult, brute_force_opt, flowtime_lower_bound, smith_opt
from .report import CertificateReport, Violation, export_certificate
from .slotting import SlottedTrace, slot_trace, weighted_median
