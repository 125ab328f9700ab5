"""Low-dimensional Max-Cut: SDP embeddings, rounding with local improvement,
and numerical checks of Gaussian sign anti-concentration."""
from .anticonc import (
    SignConfiguration,
    arcsin_coeff,
    exact_second_moment,
    hadamard_rank_check,
    matrix_certificate,
    mc_second_moment,
    net_certificate,
    power_sum,
    psd_sum_check,
    sheppard,
    theorem_lower_bound_report,
)
from .embedding import (
    SolverConfig,
    UnitEmbedding,
    check_feasibility,
    gram_rank,
    load_embedding,
    save_embedding,
    sdp_objective,
    solve_low_rank,
)
from .graph import (
    Cut,
    WeightedGraph,
    brute_force_maxcut,
    cut_value,
    parse_graph,
    total_weight,
    vertex_weight,
)
from .kernels import BACKEND
from .rounding import (
    RoundingConfig,
    alpha_gw,
    candidate_set,
    hyperplane_round,
    local_improve,
    rho_star,
    round_once,
    rounding_trials,
)

__version__ = "0.1.0"
