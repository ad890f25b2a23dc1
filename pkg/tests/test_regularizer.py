import math

import numpy as np
import pytest

from blocksparse import (ConfigError, GridShape, ShapeError, block_norm,
                         block_norm_smoothed, block_norm_smoothed_grad_fft,
                         block_norm_smoothed_grad_naive, build_clique_system,
                         default_epsilon)
from blocksparse.regularizer import stack_smoothed_value, stack_smoothed_value_and_grad

import helpers


def system(h, w, side):
    return build_clique_system(GridShape(h, w), side)


def test_value_zero_image():
    assert block_norm(np.zeros((4, 4)), system(4, 4, 2)) == 0.0


def test_value_single_clique_345():
    cs = system(2, 2, 2)
    assert block_norm(np.array([[3.0, 4.0], [0.0, 0.0]]), cs) == pytest.approx(5.0)


def test_value_all_ones_3x3():
    # four cliques, each norm sqrt(4) = 2
    assert block_norm(np.ones((3, 3)), system(3, 3, 2)) == pytest.approx(8.0)


def test_value_matches_loop_oracle():
    rng = np.random.default_rng(1)
    for h, w, side in [(5, 5, 2), (6, 4, 3), (7, 7, 1)]:
        cs = system(h, w, side)
        x = rng.standard_normal((h, w))
        expected = helpers.block_norm_by_loop(x, cs.indices.tolist())
        assert block_norm(x, cs) == pytest.approx(expected, rel=1e-12)


def test_value_shape_mismatch():
    with pytest.raises(ShapeError):
        block_norm(np.zeros((3, 4)), system(4, 4, 2))


def test_smoothed_at_zero():
    cs = system(3, 3, 2)  # 4 cliques
    assert block_norm_smoothed(np.zeros((3, 3)), cs, 0.1) == pytest.approx(0.4)


def test_smoothed_eps_zero_equals_plain():
    rng = np.random.default_rng(2)
    cs = system(5, 5, 2)
    x = rng.standard_normal((5, 5))
    assert block_norm_smoothed(x, cs, 0.0) == pytest.approx(block_norm(x, cs), abs=1e-12)


def test_smoothed_single_clique_sqrt26():
    cs = system(2, 2, 2)
    x = np.array([[3.0, 4.0], [0.0, 0.0]])
    assert block_norm_smoothed(x, cs, 1.0) == pytest.approx(math.sqrt(26.0))


def test_smoothing_bound():
    rng = np.random.default_rng(3)
    for side in (1, 2, 3):
        cs = system(6, 6, side)
        x = rng.standard_normal((6, 6))
        for eps in (0.01, 0.1, 1.0):
            gap = block_norm_smoothed(x, cs, eps) - block_norm(x, cs)
            assert -1e-12 <= gap <= cs.n_cliques * eps + 1e-12


def test_smoothed_rejects_negative_eps():
    with pytest.raises(ConfigError):
        block_norm_smoothed(np.zeros((3, 3)), system(3, 3, 2), -0.1)


def test_absolute_homogeneity():
    rng = np.random.default_rng(4)
    cs = system(6, 6, 2)
    x = rng.standard_normal((6, 6))
    for a in (-3.0, -0.5, 0.0, 0.25, 7.0):
        assert block_norm(a * x, cs) == pytest.approx(abs(a) * block_norm(x, cs), abs=1e-12)


def test_convexity_surrogate():
    rng = np.random.default_rng(5)
    cs = system(5, 5, 2)
    for _ in range(50):
        x = rng.standard_normal((5, 5))
        y = rng.standard_normal((5, 5))
        t = rng.uniform()
        lhs = block_norm(t * x + (1 - t) * y, cs)
        rhs = t * block_norm(x, cs) + (1 - t) * block_norm(y, cs)
        assert lhs <= rhs + 1e-10


def test_grad_zero_image():
    cs = system(4, 4, 2)
    assert np.all(block_norm_smoothed_grad_naive(np.zeros((4, 4)), cs, 0.1) == 0)
    assert np.allclose(block_norm_smoothed_grad_fft(np.zeros((4, 4)), cs, 0.1), 0.0)


def test_grad_requires_positive_eps():
    cs = system(3, 3, 2)
    with pytest.raises(ConfigError):
        block_norm_smoothed_grad_naive(np.ones((3, 3)), cs, 0.0)
    with pytest.raises(ConfigError):
        block_norm_smoothed_grad_fft(np.ones((3, 3)), cs, 0.0)


def test_grad_single_clique_direction():
    cs = system(2, 2, 2)
    x = np.array([[3.0, 4.0], [0.0, 0.0]])
    g = block_norm_smoothed_grad_naive(x, cs, 1e-9)
    assert g[0, 0] == pytest.approx(0.6, abs=1e-9)
    assert g[0, 1] == pytest.approx(0.8, abs=1e-9)


def test_grad_constant_image_interior():
    side, val, eps = 2, 1.7, 0.05
    cs = system(8, 8, side)
    g = block_norm_smoothed_grad_fft(np.full((8, 8), val), cs, eps)
    expected = val * side ** 2 / math.sqrt(side ** 2 * val ** 2 + eps ** 2)
    assert g[3, 3] == pytest.approx(expected, rel=1e-12)


def test_grad_matches_loop_oracle():
    rng = np.random.default_rng(6)
    cs = system(6, 6, 2)
    x = rng.standard_normal((6, 6))
    expected = helpers.smoothed_grad_by_loop(x, cs.indices.tolist(), 0.1)
    assert np.allclose(block_norm_smoothed_grad_naive(x, cs, 0.1), expected, rtol=1e-12)


@pytest.mark.parametrize("side", [1, 2, 3, 4, 8])
def test_grad_paths_agree(side):
    rng = np.random.default_rng(7)
    for h, w in [(side, side), (16, 16), (32, 32), (17, 23)]:
        if side > min(h, w):
            continue
        cs = system(h, w, side)
        x = rng.standard_normal((h, w))
        g_naive = block_norm_smoothed_grad_naive(x, cs, 0.05)
        g_fft = block_norm_smoothed_grad_fft(x, cs, 0.05)
        denom = np.linalg.norm(g_naive)
        assert np.linalg.norm(g_fft - g_naive) <= 1e-10 * denom


def test_grad_matches_finite_differences():
    rng = np.random.default_rng(8)
    cs = system(6, 6, 2)
    x = rng.standard_normal((6, 6))
    eps = 0.1
    step = 1e-6 * float(np.max(np.abs(x)))
    fd = helpers.central_difference_gradient(
        lambda z: block_norm_smoothed(z, cs, eps), x, step)
    for g in (block_norm_smoothed_grad_naive(x, cs, eps),
              block_norm_smoothed_grad_fft(x, cs, eps)):
        assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(fd)


def test_default_epsilon_scale():
    assert default_epsilon(np.zeros((3, 3))) == pytest.approx(1e-4)
    assert default_epsilon(np.full((2, 2), 50.0)) == pytest.approx(5e-3)


def test_stack_helpers_match_framewise():
    rng = np.random.default_rng(9)
    cs = system(8, 8, 3)
    stack = rng.standard_normal((8, 8, 4))
    eps = 0.07
    val, grad = stack_smoothed_value_and_grad(stack, 3, eps)
    expected_val = sum(block_norm_smoothed(stack[:, :, t], cs, eps) for t in range(4))
    assert val == pytest.approx(expected_val, rel=1e-12)
    assert stack_smoothed_value(stack, 3, eps) == pytest.approx(expected_val, rel=1e-12)
    for t in range(4):
        g = block_norm_smoothed_grad_naive(stack[:, :, t], cs, eps)
        assert np.allclose(grad[:, :, t], g, rtol=1e-10, atol=1e-12)
