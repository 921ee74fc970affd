import math

import numpy as np
import pytest

from fracspec.grid import SpatialGrid
from fracspec.kernels import BUILTIN_NAMES, builtin_kernel, kernel_from_spec, parse_call, parse_kernel_file
from fracspec.probes import bump, probe_generator, random_bandlimited
from fracspec.symbols import eval_L

GRID = SpatialGrid(1, math.pi, 64)


def test_parse_call():
    assert parse_call("gauss_conv(-1, 1)") == ("gauss_conv", [-1.0, 1.0])
    assert parse_call("neg_laplace") == ("neg_laplace", [])
    with pytest.raises(ValueError):
        parse_call("gauss(a)")


@pytest.mark.parametrize("spec, xi, want", [
    ("neg_laplace", 2.0, 4.0),
    ("frac_laplace(1.5)", 4.0, 8.0),
    ("frac_laplace(1.5)", -4.0, 8.0),
    ("gauss_conv(-1, 1)", 1.0, 1 + math.exp(-1)),
    ("expdecay_conv(0.5, 1)", 1.0, 1 + 0.5 * math.exp(-1)),
])
def test_builtin_symbols(spec, xi, want):
    assert eval_L([xi], kernel_from_spec(spec)) == pytest.approx(want)


def test_builtin_names_and_errors():
    assert "bad_sign" in BUILTIN_NAMES
    with pytest.raises(ValueError, match="unknown"):
        builtin_kernel("nope")
    with pytest.raises(ValueError, match="parameter"):
        builtin_kernel("gauss_conv", 1, [1.0])
    # gauss_conv(2, 0.1) turns L negative near the origin
    with pytest.raises(ValueError, match="sector"):
        builtin_kernel("gauss_conv", 1, [2.0, 0.1])


def test_kernel_file_with_table(tmp_path):
    r = np.linspace(0, 50, 101)
    lines = ["r,re,im"] + [f"{float(x)!r},{math.exp(-x)!r},0.0" for x in r]
    (tmp_path / "prof.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "k.txt").write_text(
        "# mixed kernel\norder: 2\nsector_angle: 0.1\n"
        "alpha: 2 ; symbol: delta(-1)\nalpha: 0 ; symbol: prof.csv  # radial\n")
    k = parse_kernel_file(tmp_path / "k.txt")
    assert k.order == 2 and k.sector_angle == 0.1 and len(k.terms) == 2
    assert eval_L([1.0], k) == pytest.approx(1 + math.exp(-1), rel=1e-4)


@pytest.mark.parametrize("body, msg", [
    ("alpha: 2 ; symbol: banana(1)\n", ":1:"),
    ("order: 2\nalpha 2\n", ":2:"),
    ("alpha: 2 ; symbol: missing.csv\n", "not found"),
    ("# nothing\n", "no 'alpha"),
])
def test_kernel_file_errors(tmp_path, body, msg):
    p = tmp_path / "k.txt"
    p.write_text(body)
    with pytest.raises(ValueError, match=msg):
        parse_kernel_file(p)


def test_probe_dispatch_and_determinism():
    a = probe_generator("random_bandlimited(42, 8)", GRID)
    b = random_bandlimited(GRID, 42, 8)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, random_bandlimited(GRID, 43, 8).values)
    np.testing.assert_allclose(probe_generator("mode 2", GRID).values, np.cos(2 * GRID.nodes))
    np.testing.assert_allclose(probe_generator("constant", GRID).values, 1.0)
    with pytest.raises(ValueError):
        probe_generator("sawtooth", GRID)


def test_random_probe_is_band_limited():
    f = random_bandlimited(GRID, 1, 5)
    coef = np.fft.fftshift(np.fft.fft(f.values))
    assert np.abs(coef[np.abs(GRID.wavenumbers) > 5]).max() < 1e-10
    assert np.isrealobj(f.values) or np.abs(f.values.imag).max() == 0


def test_bump_support_and_margin():
    f = bump(GRID, 0.5, 1.0)
    x = GRID.nodes
    assert np.all(f.values[np.abs(x - 0.5) >= 1.0] == 0)
    assert f.values.real.max() == pytest.approx(math.exp(-1), rel=1e-3)
    with pytest.raises(ValueError, match="edge"):
        bump(GRID, 2.5, 0.5)
