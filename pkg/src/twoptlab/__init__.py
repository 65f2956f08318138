"""twoptlab: a laboratory for 2-opt on randomly perturbed point sets.

The package instruments the classic 2-opt TSP heuristic on random inputs:
it runs the heuristic under three metrics and three pivot rules, solves
small instances exactly for ground truth, Monte-Carlo-checks the Gaussian
estimates that drive smoothed running-time bounds, and constructs a layered
instance family on which 2-opt provably stays far from the optimum even
after perturbation.
"""

from .geometry import (
    Metric,
    delta,
    distance,
    eta_geometry_y,
    pairwise_distances,
    two_change_gain,
)
from .stochastic import (
    DominanceSample,
    Instance,
    OneStepSpec,
    chi_inverse_moment,
    chi_pdf,
    chi_square_tail,
    d_max_bound,
    make_origins,
    mc_ball_mass,
    mc_dominance,
    mc_line_closeness,
    one_step_sample,
    perturb,
)
from .tour import (
    LinkedPairType,
    RunRecord,
    Tour,
    TwoChange,
    Violation,
    apply_two_change,
    certify_two_optimality,
    classify_linked_pair,
    count_disjoint_linked_pairs,
    find_improving,
    initial_tour,
    linked_pair_bound,
    min_improvement,
    run_two_opt,
    tour_length,
)
from .exact import (
    ExactResult,
    brute_force,
    edge_length_histogram,
    estimate_two_opt_max,
    held_karp,
    mst_length,
)
from .layered import (
    LayeredInstance,
    LayeredParams,
    build_layered,
    build_long_tour,
    check_containers,
    default_t,
    layered_params,
    ratio_lower_bound,
)
from .harness import (
    FitResult,
    SweepConfig,
    VerificationError,
    VerifyReport,
    load_config,
    parse_config,
    ratio_experiment,
    replay_row,
    run_sweep,
    scaling_fit,
    task_seed,
    verify_suite,
    write_csv,
)

__version__ = "0.1.0"
