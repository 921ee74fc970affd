import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from fracspec.besov import (
    BesovParams,
    MixedFunction,
    besov_norm,
    box_besov_norm,
    embedding_exponent,
    embedding_report,
    finite_difference,
    integer_multi_indices,
    lp_norm,
    mixed_norm,
    parse_exponent,
    time_besov_norm,
    y_samples,
)
from fracspec.grid import GridFunction, SpatialGrid, sample_closure
from fracspec.probes import bump, random_bandlimited

GRID = SpatialGrid(1, math.pi, 256)
BP = BesovParams()


def test_parameters_and_defaults():
    bp = BesovParams(s=1.5)
    assert bp.k == (1,) and bp.m == (2,)
    assert parse_exponent("inf") == math.inf
    with pytest.raises(ValueError):
        BesovParams(s=2.5, m=1, k=0)
    with pytest.raises(ValueError):
        BesovParams(p=0.5)
    assert BesovParams.from_dict(bp.to_dict()) == bp
    with pytest.raises(ValueError, match="unknown"):
        BesovParams.from_dict({"r": 1})


def test_difference_of_cosine():
    # Delta(pi) cos = cos(x + pi) - cos x = -2 cos x
    g = SpatialGrid(1, math.pi, 64)
    f = sample_closure(g, np.cos)
    d, mask = finite_difference(f, 0, 1, math.pi)
    np.testing.assert_allclose(d.values[mask], -2 * np.cos(g.nodes)[mask[:]], atol=1e-12)
    d2, mask2 = finite_difference(f, 0, 2, math.pi / 2)
    x = g.nodes[mask2]
    np.testing.assert_allclose(d2.values[mask2], np.cos(x + math.pi) - 2 * np.cos(x + math.pi / 2)
                               + np.cos(x), atol=1e-12)


def test_second_difference_of_linear_function_vanishes():
    f = sample_closure(GRID, lambda x: 3 * x - 1)
    for step in (0.013, 0.5, 1.7):
        d, mask = finite_difference(f, 0, 2, step)
        assert np.abs(d.values[mask]).max() < 1e-12
        assert not mask[-1]


def test_difference_errors():
    f = sample_closure(GRID, np.sin)
    with pytest.raises(ValueError, match="no node"):
        finite_difference(f, 0, 2, 4.0)
    with pytest.raises(ValueError):
        finite_difference(f, 1, 1, 0.1)


def test_holder_norm_of_identity():
    g = SpatialGrid(1, math.pi, 512)
    x = sample_closure(g, lambda x: x)
    bp = BesovParams(s=0.5, p="inf", q="inf", m=1, k=0)
    # sup |x| = pi; sup y^{-1/2} |Delta(y) x| = sup y^{1/2} = 1 at y = h0
    assert besov_norm(x, bp) == pytest.approx(math.pi + 1, abs=1e-3)


def direct_besov(fn, grid, bp):
    """Independent evaluator: exact samples of ``fn`` at every stencil point."""
    (s, m, k), = bp.axis_params(1)
    h = grid.spacing
    x = grid.nodes
    base = (h * np.sum(np.abs(fn(x)) ** bp.p)) ** (1 / bp.p)
    ys = y_samples(h, bp.h0, bp.samples, grid.points, m)
    norms = []
    for y in ys:
        valid = x + m * y <= x[-1] + 1e-9 * h
        d = sum(math.comb(m, j) * (-1) ** (m - j) * fn(x[valid] + j * y) for j in range(m + 1))
        norms.append((h * np.sum(np.abs(d) ** bp.p)) ** (1 / bp.p))
    integrand = (ys ** (-s) * np.array(norms)) ** bp.q
    return base + trapezoid(integrand, np.log(ys)) ** (1 / bp.q)


@pytest.mark.parametrize("fn", [np.sin, lambda x: np.cos(2 * x) + 0.3 * np.sin(x),
                                lambda x: np.exp(-x**2)])
@pytest.mark.parametrize("bp", [BesovParams(), BesovParams(s=0.75, p=3, q=1.5, m=1),
                                BesovParams(s=0.3, p=1, q=4, m=3, h0=0.5)])
def test_matches_direct_evaluation(fn, bp):
    g = SpatialGrid(1, math.pi, 512)
    got = besov_norm(sample_closure(g, fn), bp)
    assert got == pytest.approx(direct_besov(fn, g, bp), rel=1e-6)


functions = st.integers(0, 10_000).map(lambda seed: random_bandlimited(GRID, seed, 10))


@settings(max_examples=25)
@given(functions, st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_absolute_homogeneity(f, c):
    assert besov_norm(c * f, BP) == pytest.approx(abs(c) * besov_norm(f, BP), rel=1e-12)


@settings(max_examples=25)
@given(functions, functions)
def test_triangle_inequality(f, g):
    assert besov_norm(f + g, BP) <= besov_norm(f, BP) + besov_norm(g, BP) + 1e-10


def test_zero_function_has_zero_norm():
    assert besov_norm(GridFunction(GRID, np.zeros(GRID.shape)), BP) == 0.0


def test_quadrature_drift_under_doubling():
    f = bump(GRID, 0.0, 1.5)
    a = besov_norm(f, BP)
    assert abs(besov_norm(f, BP.replace(samples=128)) - a) <= 0.01 * a


def test_two_dimensional_norm_sums_axis_seminorms():
    g2 = SpatialGrid(2, math.pi, 64)
    f = sample_closure(g2, lambda x, y: np.sin(x) + 0 * y)
    g1 = SpatialGrid(1, math.pi, 64)
    f1 = sample_closure(g1, np.sin)
    lp1 = lp_norm(f1)
    semi = besov_norm(f1, BP) - lp1
    # x-only function: L2 norm scales by sqrt(2 pi), y-differences vanish
    assert besov_norm(f, BP) == pytest.approx(math.sqrt(2 * math.pi) * (lp1 + semi), rel=1e-10)


def test_integer_multi_indices():
    got = sorted(a.orders for a in integer_multi_indices(2, 2))
    assert got == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)]


def separable(g_fn, w, steps=64, horizon=2.0):
    t = np.linspace(0, horizon, steps + 1)
    return MixedFunction(w.grid, t, g_fn(t)[:, None] * w.values[None]), t


def test_mixed_norm_factorises_for_separable_functions():
    w = bump(SpatialGrid(1, math.pi, 128), 0.0, 1.5)
    u, t = separable(lambda t: np.sin(t) + 1, w)
    bt = BesovParams(h0=0.5)
    tnorm = time_besov_norm(np.sin(t) + 1, t[1] - t[0], bt, np.abs)
    assert mixed_norm(u, BP, bt) == pytest.approx(tnorm * besov_norm(w, BP), rel=1e-3)


def test_mixed_norm_dominates_box_norm_by_product_of_seminorms():
    w = bump(SpatialGrid(1, math.pi, 128), 0.0, 1.5)
    u, t = separable(lambda t: t**2, w)
    bt = BesovParams(h0=0.5)
    dt = t[1] - t[0]
    g_full = time_besov_norm(t**2, dt, bt, np.abs)
    g_lp = (dt * np.sum(np.abs(t**2) ** 2)) ** 0.5
    w_semi = besov_norm(w, BP) - lp_norm(w)
    Y, box = mixed_norm(u, BP, bt), box_besov_norm(u, BP, bt)
    assert Y >= box
    assert Y - box == pytest.approx((g_full - g_lp) * w_semi, rel=1e-9)


def test_time_norm_needs_enough_nodes():
    w = bump(SpatialGrid(1, math.pi, 64), 0.0, 1.0)
    u = MixedFunction(w.grid, [0.0, 1.0], np.stack([w.values, w.values]))
    with pytest.raises(ValueError, match="time nodes"):
        mixed_norm(u, BP, BP)
    with pytest.raises(ValueError, match="offsets"):
        time_besov_norm(np.ones(8), 0.1, BesovParams(s=1.5), np.abs)


def test_mixed_function_requires_uniform_times():
    g = SpatialGrid(1, 1.0, 8)
    with pytest.raises(ValueError, match="uniform"):
        MixedFunction(g, [0, 1, 3], np.zeros((3, 8)))


def test_embedding_exponent_and_errors():
    assert embedding_exponent([1.0], 2.0, 1, 2.0, 2.0) == pytest.approx(0.5)
    assert embedding_exponent([1.0], 2.0, 1, 2.0, math.inf) == pytest.approx(0.75)
    u = bump(GRID, 0.0, 1.5)
    with pytest.raises(ValueError, match="exceeds 1"):
        embedding_report(u, [2.0], 1.0, BP, 2.0, 0.0)
    with pytest.raises(ValueError, match="mu"):
        embedding_report(u, [1.0], 2.0, BP, 2.0, 0.6)


def test_embedding_report_examples():
    u = bump(GRID, 0.0, 1.5)
    rep = embedding_report(u, [1.0], 2.0, BP, 2.0, 0.4, refined=bump(GRID.refined(), 0.0, 1.5))
    assert rep.passed and 0 < rep.value < math.inf
    trivial = embedding_report(u, [0.0], 2.0, BP, 2.0, 0.0)
    assert trivial.value <= 1.0
    zero = embedding_report(GridFunction(GRID, np.zeros(GRID.shape)), [1.0], 2.0, BP, 2.0, 0.0)
    assert zero.passed and zero.value == 0.0 and zero.meta["degenerate"]
