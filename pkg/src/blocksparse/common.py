"""Shared solver plumbing: run reports, Armijo line search, allocation accounting."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

TERMINATION_REASONS = ("converged", "max-iterations", "diverged", "support-collapse")


class ConfigError(ValueError):
    """Invalid solver or problem configuration."""


class ShapeError(ValueError):
    """Array operands have inconsistent shapes."""


class NumericalError(RuntimeError):
    """A numerical routine broke down (SVD failure, line-search failure, ...)."""


class StepFailureError(NumericalError):
    """Armijo search exhausted its halvings; usually signals a wrong gradient."""


@dataclass
class SolverReport:
    """Outcome of a single solver run.

    ``objective_trace`` and ``residual_trace`` hold one entry per completed
    iteration.  ``peak_aux_entries`` counts declared working-buffer entries
    (element counts, not bytes) and excludes problem inputs.  Solver-specific
    scalars (ranks, resolved weights, ...) live in ``extra``.
    """

    iterations: int
    objective_trace: list[float]
    residual_trace: list[float]
    termination_reason: str
    peak_aux_entries: int = 0
    wall_clock: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.termination_reason not in TERMINATION_REASONS:
            raise ValueError(f"unknown termination reason {self.termination_reason!r}")
        if len(self.objective_trace) != self.iterations or len(self.residual_trace) != self.iterations:
            raise ValueError("trace lengths must equal the number of iterations performed")


class AllocationTracker:
    """Counts live working-buffer entries and remembers the peak for one run.

    The peak is nondecreasing during a run; use a fresh tracker per run.
    Registration is thread-safe so frame-parallel workers can share one
    tracker.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._live: dict[str, int] = {}
        self._current = 0
        self._peak = 0

    def register(self, tag: str, entries: int):
        with self._lock:
            self._current += int(entries)
            self._live[tag] = self._live.get(tag, 0) + int(entries)
            if self._current > self._peak:
                self._peak = self._current

    def release(self, tag: str):
        with self._lock:
            self._current -= self._live.pop(tag, 0)

    @property
    def current(self) -> int:
        return self._current

    @property
    def peak(self) -> int:
        return self._peak


def backtrack_step(f, x, g, alpha0: float, shrink: float = 0.5, c: float = 1e-4,
                   max_halvings: int = 60) -> float:
    """Armijo backtracking: largest ``alpha0 * shrink**k`` satisfying sufficient decrease.

    Accepts ``alpha`` when ``f(x - alpha*g) <= f(x) - c*alpha*||g||^2``.
    Returns ``alpha0`` unchanged for a zero gradient.  Raises
    :class:`StepFailureError` after ``max_halvings`` rejected halvings.
    """
    if alpha0 <= 0:
        raise ConfigError("initial step must be positive")
    fx = float(f(x))
    if not np.isfinite(fx):
        raise ConfigError("objective is not finite at the current iterate")
    g = np.asarray(g)
    gsq = float(np.vdot(g, g).real)
    if gsq == 0.0:
        return alpha0
    alpha = float(alpha0)
    for _ in range(max_halvings + 1):
        f_new = float(f(x - alpha * g))
        # strict decrease guards against roundoff plateaus spuriously
        # satisfying the Armijo inequality at vanishing steps
        if f_new <= fx - c * alpha * gsq and f_new < fx:
            return alpha
        alpha *= shrink
    raise StepFailureError("no acceptable step after %d halvings" % max_halvings)
