import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracspec.fractional import FractionalMultiIndex
from fracspec.grid import SpatialGrid
from fracspec.kernels import builtin_kernel
from fracspec.symbols import (
    ConstantSymbol,
    DegeneratePointError,
    GaussSymbol,
    KernelSet,
    KernelTerm,
    SectorParameter,
    check_sector_condition,
    default_lambda_sweep,
    eval_L,
    eval_sigma,
    lower_bound_constant,
    mikhlin_sup,
    sector_membership,
    sigma_closure,
    uniformity_report,
    young_inequality_constant,
)

GRID = SpatialGrid(1, math.pi, 128)
MODEL = builtin_kernel("neg_laplace", 1)


def test_eval_L_examples():
    assert eval_L([3.0], MODEL) == pytest.approx(9.0)
    assert eval_L([0.0], MODEL) == 0
    k = KernelSet(2.0, (KernelTerm(FractionalMultiIndex((2.0,)), ConstantSymbol(-1)),
                        KernelTerm(FractionalMultiIndex((1.0,)), GaussSymbol(1, 1))))
    assert eval_L([1.0], k) == pytest.approx(1 + 1j * math.exp(-1))


def test_eval_L_two_dimensions():
    k = builtin_kernel("neg_laplace", 2)
    assert eval_L([1.0, 2.0], k) == pytest.approx(5.0)


@pytest.mark.parametrize("z, phi, want", [
    (1.0, 0.0, True), (1j, math.pi / 2, True), (1j, 1.0, False),
    (0.0, 0.0, True), (-1.0, 3.0, False), (-1 + 1e-9j, 3.0, False)])
def test_sector_membership_examples(z, phi, want):
    assert sector_membership(z, phi) is want


def test_sigma_examples():
    assert eval_sigma(0, [1.0], 1.0, MODEL) == pytest.approx(0.5)
    assert eval_sigma(1, [1.0], 1j, MODEL) == pytest.approx(1j / (1 + 1j))
    # sigma_2 = |lambda|^0 L / (L + lambda) for a pure order-l kernel
    assert eval_sigma(2, [2.0], 4.0, MODEL) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        eval_sigma(3, [1.0], 1.0, MODEL)


def test_sigma_degenerate_point():
    with pytest.raises(DegeneratePointError):
        eval_sigma(0, [0.0], 0.0, MODEL)


@given(st.floats(-100, 100), st.floats(0.01, 1e3), st.floats(-1.4, 1.4))
def test_sigma_0_inverts_symbol_plus_lambda(xi, r, arg):
    lam = r * complex(math.cos(arg), math.sin(arg))
    val = eval_sigma(0, [xi], lam, MODEL) * (eval_L([xi], MODEL) + lam)
    assert val == pytest.approx(1.0, rel=1e-12)


def test_condition_check_on_model_and_bad_sign():
    rep = check_sector_condition(MODEL, GRID)
    assert rep.passed and rep.value == pytest.approx(1.0)
    bad = builtin_kernel("bad_sign", 1)
    rep = check_sector_condition(bad, GRID)
    assert not rep.passed and rep.meta["max_abs_arg"] == pytest.approx(math.pi)
    with pytest.raises(ValueError, match="empty"):
        check_sector_condition(MODEL, np.zeros((0, 1)))


def test_lower_bound_constant_real_and_imaginary():
    real = [SectorParameter(10.0**d, 0.5) for d in range(-2, 3)]
    assert lower_bound_constant(MODEL, real, GRID).value == pytest.approx(1.0)
    imag = [SectorParameter(1j * 10.0**d, math.pi / 2) for d in range(-2, 3)]
    assert lower_bound_constant(MODEL, imag, GRID).value == pytest.approx(1 / math.sqrt(2), abs=1e-3)


def test_sector_parameter_validation():
    with pytest.raises(ValueError):
        SectorParameter(1j, 1.0)
    with pytest.raises(ValueError):
        SectorParameter(1.0, math.pi)
    sweep = default_lambda_sweep(1.0, decades=[0, 1])
    assert len(sweep) == 10
    assert [s.modulus for s in sweep] == sorted(s.modulus for s in sweep)


def test_mikhlin_examples():
    (delta,) = mikhlin_sup(lambda xi: np.full(np.shape(xi[0]), 2.0 + 0j), GRID, betas=[(1,)])
    assert delta.value == pytest.approx(0.0, abs=1e-9)
    g = GaussSymbol(1.0, 1.0)
    # |xi| |d/dxi e^{-xi^2}| = 2 xi^2 e^{-xi^2}, largest at xi = 1
    (gauss,) = mikhlin_sup(g, GRID, betas=[(1,)], refine=False)
    assert gauss.value == pytest.approx(2 / math.e)
    (s0,) = mikhlin_sup(sigma_closure(0, 1.0, MODEL), GRID, betas=[(1,)])
    assert s0.value == pytest.approx(0.5, abs=1e-6) and s0.passed


def test_mikhlin_rejects_bad_beta():
    with pytest.raises(ValueError):
        mikhlin_sup(GaussSymbol(1, 1), GRID, betas=[(2,)])


@pytest.mark.parametrize("l, alpha, want", [(2, [0], 1.0), (2, [2], 1.0), (2, [1], 0.5)])
def test_young_constants(l, alpha, want):
    assert young_inequality_constant(l, alpha).value == pytest.approx(want, rel=1e-3)


def test_young_rejects_oversized_alpha():
    with pytest.raises(ValueError):
        young_inequality_constant(1, [2])


def test_sigma_scaling_on_dyadic_moduli():
    # for a homogeneous symbol sigma_i(mu xi, mu^l lambda) = sigma_i(xi, lambda)
    xi = np.linspace(-5, 5, 11)
    for i in (0, 1, 2):
        base = eval_sigma(i, [xi], 1.0 + 1j, MODEL)
        for mu in (2.0, 4.0, 8.0):
            scaled = eval_sigma(i, [mu * xi], mu**2 * (1.0 + 1j), MODEL)
            factor = mu**2 if i == 0 else 1.0
            np.testing.assert_allclose(scaled * factor, base, rtol=1e-12)


def test_uniformity_report_on_model():
    reps = uniformity_report(MODEL, GRID, default_lambda_sweep(1.0))
    assert [r.quantity for r in reps] == ["sup_abs_sigma_0", "sup_abs_sigma_1", "sup_abs_sigma_2"]
    assert all(r.passed for r in reps)
    assert reps[1].value == pytest.approx(1.0)
