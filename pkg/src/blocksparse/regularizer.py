"""Overlapping-block l1/l2 regularizer: exact value, hyperbolic smoothing, gradients.

The penalty sums the l2 norms of all clique restrictions of an image; the
smoothed variant replaces each norm ``||x_c||`` by ``sqrt(||x_c||^2 + eps^2)``
so the penalty becomes differentiable everywhere.  Two gradient paths are
provided: a direct gather/scale/scatter evaluation (the correctness oracle)
and a box-filter FFT pipeline whose cost does not grow with clique size
(the performance path).  They agree to floating-point tolerance.
"""

from __future__ import annotations

import numpy as np

from .common import ConfigError, ShapeError
from .fftops import box_correlate_full, box_correlate_valid
from .grids import CliqueSystem


def default_epsilon(x) -> float:
    """Scale-relative smoothing default: ``1e-4 * max(1, max|x|)``."""
    x = np.asarray(x, dtype=float)
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    return 1e-4 * max(1.0, scale)


def _checked(x, cliques: CliqueSystem) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (cliques.shape.height, cliques.shape.width):
        raise ShapeError(
            f"image shape {x.shape} does not match clique grid "
            f"{cliques.shape.height}x{cliques.shape.width}")
    return x


def _clique_sq_norms(flat: np.ndarray, cliques: CliqueSystem) -> np.ndarray:
    vals = flat[cliques.indices]
    return np.einsum("ij,ij->i", vals, vals)


def block_norm(x, cliques: CliqueSystem) -> float:
    """Sum of clique l2 norms.  Zero iff x vanishes on every covered pixel."""
    x = _checked(x, cliques)
    return float(np.sqrt(_clique_sq_norms(x.ravel(), cliques)).sum())


def block_norm_smoothed(x, cliques: CliqueSystem, eps: float) -> float:
    """Smoothed penalty ``sum_c sqrt(||x_c||^2 + eps^2)``; equals
    :func:`block_norm` at ``eps == 0``."""
    x = _checked(x, cliques)
    if eps < 0:
        raise ConfigError("smoothing eps must be nonnegative")
    return float(np.sqrt(_clique_sq_norms(x.ravel(), cliques) + eps * eps).sum())


def block_norm_smoothed_grad_naive(x, cliques: CliqueSystem, eps: float) -> np.ndarray:
    """Gradient of the smoothed penalty by per-clique gather/scale/scatter-add.

    Per pixel p the gradient is ``x_p * sum_{c containing p} (||x_c||^2 + eps^2)^(-1/2)``.
    Requires ``eps > 0`` (the unsmoothed penalty is not differentiable at zero
    cliques).
    """
    x = _checked(x, cliques)
    if eps <= 0:
        raise ConfigError("gradient evaluation requires eps > 0")
    flat = x.ravel()
    weights = 1.0 / np.sqrt(_clique_sq_norms(flat, cliques) + eps * eps)
    contrib = flat[cliques.indices] * weights[:, None]
    out = np.zeros_like(flat)
    np.add.at(out, cliques.indices, contrib)
    return out.reshape(x.shape)


def block_norm_smoothed_grad_fft(x, cliques: CliqueSystem, eps: float) -> np.ndarray:
    """Gradient of the smoothed penalty via two box-filter FFT correlations.

    Pipeline: square entries -> valid correlation with the ones box (squared
    clique norms on the corner grid) -> add ``eps^2`` and raise to -1/2 ->
    full correlation back to the pixel grid -> multiply by x.  Matches
    :func:`block_norm_smoothed_grad_naive` to floating-point tolerance.
    """
    x = _checked(x, cliques)
    if eps <= 0:
        raise ConfigError("gradient evaluation requires eps > 0")
    sq_norm_map = box_correlate_valid(x * x, cliques.side)
    recip = 1.0 / np.sqrt(sq_norm_map + eps * eps)
    weight_map = box_correlate_full(recip, cliques.side)
    return x * weight_map


def stack_smoothed_value(stack: np.ndarray, side: int, eps: float) -> float:
    """Smoothed penalty summed over the frames of an ``(H, W, L)`` stack,
    evaluated with the FFT box filter (used inside frame-batched solvers)."""
    frames = np.moveaxis(np.asarray(stack, dtype=float), -1, 0)
    sq_norm_map = box_correlate_valid(frames * frames, side)
    return float(np.sqrt(sq_norm_map + eps * eps).sum())


def stack_smoothed_value_and_grad(stack: np.ndarray, side: int, eps: float):
    """Smoothed penalty and its gradient for an ``(H, W, L)`` stack, frame-batched."""
    stack = np.asarray(stack, dtype=float)
    frames = np.moveaxis(stack, -1, 0)
    sq_norm_map = box_correlate_valid(frames * frames, side)
    smoothed = np.sqrt(sq_norm_map + eps * eps)
    weight_map = box_correlate_full(1.0 / smoothed, side)
    grad = np.moveaxis(frames * weight_map, 0, -1)
    return float(smoothed.sum()), grad
