from .job import (
    Job,
    Instance,
    make_job,
    load_instance,
    emit_instance,
    canonical,
    instance_to_dict,
    instance_from_dict,
    enumerate_feasible_subsets,
)
from .generators import GeneratorParams, gen_family, gen_flowtime_concat, params_from_dict
from .tree import (
    TreeInstance,
    census,
    gen_lower_bound_tree,
    verify_tree_witness,
    witness_completions,
    equal_share_makespan,
)
