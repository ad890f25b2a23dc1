"""Proximal operator of the overlapping-block penalty via consensus ADMM.

Solves ``argmin_x ||x - v||^2 + lam * sum_c ||x_c||_2``.  Note the data term
carries coefficient 1, not 1/2: this prox equals the standard
``argmin 1/2||x - v||^2 + (lam/2) * J(x)``, so a single isolated group is
shrunk with threshold ``lam / 2``.  To reproduce the 1/2-convention prox
with weight ``tau``, pass ``lam = 2 * tau``.

The penalty is split over the ``side**2`` disjoint clique subsets, one
consensus copy ``z^i`` per subset, which makes every z-update a closed-form
group shrinkage.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .common import AllocationTracker, ConfigError, ShapeError, SolverReport
from .grids import CliqueSystem


@dataclass(frozen=True)
class ProxConfig:
    """Weight and ADMM controls for :func:`prox_block_norm`.

    ``rho=None`` resolves to ``lam + 1``.  Stopping follows the usual
    primal/dual residual rule with absolute plus relative tolerances.
    """

    lam: float
    rho: Optional[float] = None
    max_iters: int = 1000
    tol_abs: float = 1e-8
    tol_rel: float = 1e-6

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("lam must be nonnegative")
        if self.rho is not None and self.rho <= 0:
            raise ConfigError("rho must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.tol_abs < 0 or self.tol_rel < 0:
            raise ConfigError("tolerances must be nonnegative")

    def resolved_rho(self) -> float:
        return self.rho if self.rho is not None else self.lam + 1.0


@dataclass
class ProxResult:
    """Prox output plus the final consensus copies and scaled duals.

    ``z`` has one row per clique subset; ``rho * u`` decomposes the penalty
    subgradient at the solution, which the optimality-certificate tests use.
    Both are ``None`` when the solve short-circuits (``lam == 0``).
    """

    x: np.ndarray
    report: SolverReport
    z: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None


def group_shrink(v, tau: float) -> np.ndarray:
    """Closed-form minimizer of ``tau*||z|| + 1/2*||z - v||^2``:
    ``max(1 - tau/||v||, 0) * v`` (zero when ``||v|| <= tau``)."""
    if tau < 0:
        raise ConfigError("shrinkage threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    nv = float(np.linalg.norm(v))
    if nv <= tau:
        return np.zeros_like(v)
    return (1.0 - tau / nv) * v


def _block_norm_flat(flat: np.ndarray, cliques: CliqueSystem) -> float:
    vals = flat[cliques.indices]
    return float(np.sqrt(np.einsum("ij,ij->i", vals, vals)).sum())


def prox_block_norm(v, cliques: CliqueSystem, cfg: ProxConfig, x0=None,
                    tracker: Optional[AllocationTracker] = None) -> ProxResult:
    """Consensus-ADMM prox of the overlapping-block penalty.

    Parameters
    ----------
    v : (H, W) array
        Prox center.
    cliques : CliqueSystem
        Group structure; its grid must match ``v``.
    cfg : ProxConfig
        Weight ``lam`` and ADMM controls.
    x0 : (H, W) array, optional
        Warm start for the consensus variable (pursuit loops reuse the
        previous estimate).
    tracker : AllocationTracker, optional
        Shared accounting for the ``2 * side**2 * N`` auxiliary entries
        (consensus copies plus scaled duals); a fresh tracker is used when
        omitted.

    Returns
    -------
    ProxResult
        Solution, run report, and the final ADMM variables.  Non-convergence
        within ``max_iters`` is reported as termination reason
        ``"max-iterations"``, not raised.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (cliques.shape.height, cliques.shape.width):
        raise ShapeError(f"prox center shape {v.shape} does not match clique grid")
    t0 = time.perf_counter()

    if cfg.lam == 0.0:
        report = SolverReport(0, [], [], "converged", peak_aux_entries=0,
                              wall_clock=time.perf_counter() - t0)
        return ProxResult(v.copy(), report)

    n = cliques.shape.n
    s = cliques.n_subsets
    rho = cfg.resolved_rho()
    tau = cfg.lam / rho
    vflat = v.ravel()

    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != v.shape:
            raise ShapeError("warm start shape does not match prox center")
        x = x0.ravel().copy()
    else:
        x = vflat.copy()

    z = np.tile(x, (s, 1))
    u = np.zeros((s, n))
    if tracker is None:
        tracker = AllocationTracker()
    tracker.register("prox-consensus-z", z.size)
    tracker.register("prox-scaled-duals", u.size)

    objective_trace: list[float] = []
    residual_trace: list[float] = []
    reason = "max-iterations"
    denom = 2.0 + s * rho

    for _ in range(cfg.max_iters):
        x_prev = x
        x = (2.0 * vflat + rho * (z + u).sum(axis=0)) / denom

        np.subtract(x[None, :], u, out=z)
        for i in range(s):
            idx = cliques.subset_indices[i]
            if idx.size == 0:
                continue
            vals = z[i, idx]
            norms = np.sqrt(np.einsum("ij,ij->i", vals, vals))
            scale = np.zeros_like(norms)
            live = norms > tau
            scale[live] = 1.0 - tau / norms[live]
            z[i, idx] = vals * scale[:, None]
        u += z - x[None, :]

        zbar = z.mean(axis=0)
        primal = float(np.linalg.norm(zbar - x))
        dual = rho * float(np.linalg.norm(x - x_prev))
        objective_trace.append(
            float(np.sum((x - vflat) ** 2)) + cfg.lam * _block_norm_flat(x, cliques))
        residual_trace.append(primal + dual)

        primal_tol = cfg.tol_abs + cfg.tol_rel * max(np.linalg.norm(x), np.linalg.norm(zbar))
        dual_tol = cfg.tol_abs + cfg.tol_rel * rho * np.linalg.norm(u.mean(axis=0))
        if primal <= primal_tol and dual <= dual_tol:
            reason = "converged"
            break

    report = SolverReport(len(objective_trace), objective_trace, residual_trace,
                          reason, peak_aux_entries=tracker.peak,
                          wall_clock=time.perf_counter() - t0,
                          extra={"rho": rho})
    shape = (cliques.shape.height, cliques.shape.width)
    tracker.release("prox-consensus-z")
    tracker.release("prox-scaled-duals")
    return ProxResult(x.reshape(shape), report, z=z, u=u)


def prox_block_norm_framewise(stack, cliques: CliqueSystem, cfg: ProxConfig,
                              x0=None) -> tuple[np.ndarray, list[SolverReport]]:
    """Apply :func:`prox_block_norm` independently to each frame of an
    ``(H, W, L)`` stack; returns the denoised stack and per-frame reports."""
    stack = np.asarray(stack, dtype=float)
    if stack.ndim != 3 or stack.shape[:2] != (cliques.shape.height, cliques.shape.width):
        raise ShapeError(f"stack shape {stack.shape} does not match clique grid")
    out = np.empty_like(stack)
    reports = []
    for t in range(stack.shape[2]):
        warm = None if x0 is None else np.asarray(x0, dtype=float)[:, :, t]
        res = prox_block_norm(stack[:, :, t], cliques, cfg, x0=warm)
        out[:, :, t] = res.x
        reports.append(res.report)
    return out, reports
