import threading

import numpy as np
import pytest

from blocksparse import (AllocationTracker, ConfigError, SolverReport,
                         StepFailureError, backtrack_step)


def test_report_validates_trace_lengths():
    with pytest.raises(ValueError):
        SolverReport(2, [1.0], [1.0, 0.5], "converged")


def test_report_validates_reason():
    with pytest.raises(ValueError):
        SolverReport(0, [], [], "finished")


def test_tracker_peak_monotone():
    t = AllocationTracker()
    assert t.peak == 0
    t.register("a", 100)
    t.register("b", 50)
    assert t.peak == 150
    t.release("a")
    assert t.current == 50
    assert t.peak == 150  # peak never decreases within a run
    t.register("c", 30)
    assert t.peak == 150


def test_tracker_empty():
    assert AllocationTracker().peak == 0


def test_tracker_thread_safety():
    t = AllocationTracker()

    def worker(i):
        for k in range(200):
            t.register(f"w{i}-{k}", 1)
        for k in range(200):
            t.release(f"w{i}-{k}")

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert t.current == 0
    assert t.peak <= 1600


def test_backtrack_quadratic_accepts_unit_step():
    f = lambda z: 0.5 * float(np.sum(z * z))
    x = np.array([3.0, -4.0])
    assert backtrack_step(f, x, x, 1.0) == 1.0


def test_backtrack_zero_gradient_returns_alpha0():
    f = lambda z: 0.5 * float(np.sum(z * z))
    assert backtrack_step(f, np.ones(3), np.zeros(3), 0.7) == 0.7


def test_backtrack_stiff_quadratic_scales_with_curvature():
    curvature = 4096.0
    f = lambda z: 0.5 * curvature * float(np.sum(z * z))
    x = np.array([1.0])
    g = curvature * x
    alpha0 = 1024.0 / curvature
    alpha = backtrack_step(f, x, g, alpha0)
    # accepted step within a factor of two of 1/curvature
    assert 1.0 / curvature <= alpha <= 2.0 / curvature


def test_backtrack_requires_positive_alpha0():
    with pytest.raises(ConfigError):
        backtrack_step(lambda z: 0.0, np.zeros(2), np.ones(2), 0.0)


def test_backtrack_wrong_gradient_fails():
    f = lambda z: 0.5 * float(np.sum(z * z))
    x = np.array([1.0, 1.0])
    wrong = -x  # ascent direction
    with pytest.raises(StepFailureError):
        backtrack_step(f, x, wrong, 1.0)
