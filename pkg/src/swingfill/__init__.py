"""Per-bit voltage swing allocation for noisy memory reads.

The library picks one swing per bit position of a B-bit word so that the
word-level mean squared error stays under a budget while energy, peak
swing, or their product is minimized. Closed-form water-filling solvers
(continuous), greedy grid loaders (discrete), LSB-dropping and selective
Hamming-ECC baselines, and a Monte-Carlo read-channel simulator share the
same metric definitions.
"""

from .baselines import (
    HammingCode,
    SelectiveEccLayout,
    active_positions,
    decoded_bit_error_rates,
    hamming_7_4,
    hamming_15_11,
    layout_secc_7_4,
    layout_secc_15_11,
    lsb_dropping_curve,
    lsb_dropping_mse,
    lsb_dropping_psnr_ceiling,
    selective_ecc_curve,
    selective_ecc_mse,
)
from .continuous import (
    ConvergenceError,
    Criterion,
    InfeasibleError,
    SolverSolution,
    ground_levels,
    kkt_report,
    kkt_residuals,
    single_cap_sand_capacity,
    solve,
    solve_max_speed,
    solve_min_edp,
    solve_min_energy,
)
from .discrete import (
    BudgetError,
    GridSearchResult,
    brute_force_discrete,
    discrete_water_fill,
    levin_campello,
    sand_pour_water_fill,
)
from .metrics import (
    BOUNDED_UNIFORM,
    GAUSSIAN,
    LAPLACE,
    MAX_BIT_WIDTH,
    NOISE_KINDS,
    FidelitySpec,
    NoiseModel,
    SourceStats,
    SwingVector,
    WordFormat,
    bit_weights,
    edp,
    energy,
    inverse_tail,
    max_swing,
    mse_from_psnr,
    mse_nonuniform,
    mse_uniform,
    overall_ber,
    pasr,
    psnr_from_mse,
    tail_prob,
)
from .simulate import (
    BLOCK_SIZE,
    MseEstimate,
    SimConfig,
    apply_bit_errors,
    extract_source_stats,
    load_corpus_words,
    monte_carlo_mse,
    read_pgm,
    simulate_read,
)

__version__ = "0.1.0"

__all__ = [
    "BLOCK_SIZE",
    "BOUNDED_UNIFORM",
    "BudgetError",
    "ConvergenceError",
    "Criterion",
    "FidelitySpec",
    "GAUSSIAN",
    "GridSearchResult",
    "HammingCode",
    "InfeasibleError",
    "LAPLACE",
    "MAX_BIT_WIDTH",
    "MseEstimate",
    "NOISE_KINDS",
    "NoiseModel",
    "SelectiveEccLayout",
    "SimConfig",
    "SolverSolution",
    "SourceStats",
    "SwingVector",
    "WordFormat",
    "active_positions",
    "apply_bit_errors",
    "bit_weights",
    "brute_force_discrete",
    "decoded_bit_error_rates",
    "discrete_water_fill",
    "edp",
    "energy",
    "extract_source_stats",
    "ground_levels",
    "hamming_15_11",
    "hamming_7_4",
    "inverse_tail",
    "kkt_report",
    "kkt_residuals",
    "layout_secc_15_11",
    "layout_secc_7_4",
    "levin_campello",
    "load_corpus_words",
    "lsb_dropping_curve",
    "lsb_dropping_mse",
    "lsb_dropping_psnr_ceiling",
    "max_swing",
    "monte_carlo_mse",
    "mse_from_psnr",
    "mse_nonuniform",
    "mse_uniform",
    "overall_ber",
    "pasr",
    "psnr_from_mse",
    "read_pgm",
    "sand_pour_water_fill",
    "selective_ecc_curve",
    "selective_ecc_mse",
    "simulate_read",
    "single_cap_sand_capacity",
    "solve",
    "solve_max_speed",
    "solve_min_edp",
    "solve_min_energy",
    "tail_prob",
]
