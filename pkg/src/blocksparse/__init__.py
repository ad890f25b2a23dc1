"""Overlapping block-sparsity regularization and solvers.

The penalty sums l2 norms over all translated square pixel cliques of an
image, promoting sparse supports with smooth, contiguous boundaries.  Three
solver families build on it: a consensus-ADMM proximal operator, an
FFT-accelerated forward-backward splitting for sparse-plus-low-rank
decomposition, and a greedy pursuit (CoLaMP) for compressive recovery; block
total-variation denoising applies the penalty to image gradients.
"""

from .blocktv import BlockTvConfig, GradientField, denoise_block_tv, discrete_gradient, discrete_gradient_adjoint
from .common import (AllocationTracker, ConfigError, NumericalError, ShapeError,
                     SolverReport, StepFailureError, backtrack_step)
from .grids import CliqueSystem, GridShape, build_clique_system
from .metrics import measured_snr_db, psnr_db, relative_error, support_prf, support_set
from .prox import ProxConfig, ProxResult, group_shrink, prox_block_norm, prox_block_norm_framewise
from .pursuit import (ColampConfig, MeasurementModel, cg_solve_normal, colamp_solve,
                      truncate_top_k)
from .regularizer import (block_norm, block_norm_smoothed, block_norm_smoothed_grad_fft,
                          block_norm_smoothed_grad_naive, default_epsilon)
from .rpca import (RpcaConfig, RpcaResult, default_lambda, numerical_rank,
                   rpca_objective, solve_rpca, svt)
from .synthetic import SyntheticData, SyntheticSpec, gen_synthetic

__version__ = "0.1.0"

__all__ = [
    "AllocationTracker", "BlockTvConfig", "CliqueSystem", "ColampConfig",
    "ConfigError", "GradientField", "GridShape", "MeasurementModel",
    "NumericalError", "ProxConfig", "ProxResult", "RpcaConfig", "RpcaResult",
    "ShapeError", "SolverReport", "StepFailureError", "SyntheticData",
    "SyntheticSpec", "backtrack_step", "block_norm", "block_norm_smoothed",
    "block_norm_smoothed_grad_fft", "block_norm_smoothed_grad_naive",
    "build_clique_system", "cg_solve_normal", "colamp_solve", "default_epsilon",
    "default_lambda", "denoise_block_tv", "discrete_gradient",
    "discrete_gradient_adjoint", "gen_synthetic", "group_shrink",
    "measured_snr_db", "numerical_rank", "prox_block_norm",
    "prox_block_norm_framewise", "psnr_db", "relative_error", "rpca_objective",
    "solve_rpca", "support_prf", "support_set", "svt", "truncate_top_k",
]
