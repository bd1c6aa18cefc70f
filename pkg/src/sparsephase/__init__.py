"""Two-stage compressive phase retrieval.

Recovers a sparse complex vector from squared-magnitude measurements of a
composed random map: a lifted PSD program first recovers the compressed
linear measurements up to a global phase, then basis pursuit denoising
recovers the sparse vector from those.  The package also ships the
measurement-ensemble constructors, phase-invariant error metrics,
small-instance matrix verifiers, and a seeded benchmark harness.
"""

from .analysis import brute_force_ric, check_cx_bounds, probe_nsp
from .bpdn import BpdnOptions, BpdnSolution, soft_threshold_complex, solve_bpdn
from .ensembles import (
    MagnitudeMeasurements,
    MeasurementEnsemble,
    add_noise,
    forward,
    gen_cs_matrix,
    gen_phase_matrix,
    load_ensemble,
    make_ensemble,
    save_ensemble,
)
from .errors import NumericalError
from .phaselift import (
    LiftedSolution,
    PhaseliftOptions,
    estimate_stage1_noise,
    lifted_adjoint,
    lifted_forward,
    solve_phaselift,
)
from .pipeline import RecoverOptions, RecoveryResult, check_cpr_error_bound, recover
from .signals import ErrorReport, SparseSignal, align_phase, best_s_term_error, gen_sparse_signal

__version__ = "0.1.0"

__all__ = [
    "BpdnOptions",
    "BpdnSolution",
    "ErrorReport",
    "LiftedSolution",
    "MagnitudeMeasurements",
    "MeasurementEnsemble",
    "NumericalError",
    "PhaseliftOptions",
    "RecoverOptions",
    "RecoveryResult",
    "SparseSignal",
    "add_noise",
    "align_phase",
    "best_s_term_error",
    "brute_force_ric",
    "check_cpr_error_bound",
    "check_cx_bounds",
    "estimate_stage1_noise",
    "forward",
    "gen_cs_matrix",
    "gen_phase_matrix",
    "gen_sparse_signal",
    "lifted_adjoint",
    "lifted_forward",
    "load_ensemble",
    "make_ensemble",
    "probe_nsp",
    "recover",
    "save_ensemble",
    "soft_threshold_complex",
    "solve_bpdn",
    "solve_phaselift",
]
