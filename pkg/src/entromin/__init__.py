"""Sparse signal recovery by minimizing entropy measures of the magnitude
distribution, with l1/lp baselines, matrix-free operators, and benchmark
harnesses (phase transitions, noisy sweeps, frame-based image recovery).
"""

__version__ = "0.1.0"

from .backend import BACKEND, get_kernels
from .errors import ConfigError, DimensionError, NumericError
from .operators import (
    CompositionOperator,
    DenseOperator,
    Identity,
    LinearOperator,
    RandomSeed,
    SRMOperator,
    WaveletFrameOperator,
    make_gaussian,
    make_srm,
    make_wavelet_frame,
    operator_from_manifest,
    read_pgm,
    write_pgm,
)
from .regularizers import (
    RegularizerSpec,
    baseline_value_and_weight,
    mapped_simplex,
    nu_threshold,
    penalty_value,
    prob_map,
    ref_grad_mag,
    ref_value,
    sef_grad_mag,
    sef_value,
    weight_vector,
)
from .shrinkage import reweighted_prox_step, soft_threshold, soft_threshold_vec
from .solver import (
    SolverConfig,
    SolverTrace,
    estimate_kappa,
    gradient_step,
    inner_reweighted_solve,
    solve,
    solve_analysis_image,
    solve_l1,
)
from .experiments import (
    ExperimentGrid,
    Method,
    extract_ptc,
    gen_instance,
    make_test_image,
    metrics,
    nu_for_image_snr,
    nu_for_vector_snr,
    run_image_recovery,
    run_noisy_sweep,
    run_phase_transition,
)

__all__ = [name for name in dir() if not name.startswith("_")]
