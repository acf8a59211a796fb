from .packing_polytope import (
    PackingPolytope,
    FeasibilityReport,
    Lifting,
    build_polytope,
    check_feasible,
    gauge,
    job_caps,
    support_value,
    cut_key,
    rows_to_matrix,
    injective_decomposition,
)
