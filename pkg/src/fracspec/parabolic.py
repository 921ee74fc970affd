"""Zero-initial-data Cauchy problem ``u_t + O u = f`` by an exponential integrator.

Per frequency the exact solution is ``u_hat(t) = int_0^t exp(-(t - tau) L) f_hat(tau) dtau``.
Replacing ``f_hat`` by its piecewise-linear interpolant in time and
integrating exactly gives, with ``z = dt L``,

    u_{n+1} = exp(-z) u_n + dt psi(z) f_n + dt (phi1(z) - psi(z)) f_{n+1}
    phi1(z) = (1 - exp(-z)) / z,   psi(z) = (1 - exp(-z)(1 + z)) / z^2,

which is second order in ``dt`` and stable for every ``Re L >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fracspec import _kernels
from fracspec.besov import BesovParams, MixedFunction, mixed_norm
from fracspec.elliptic import CoercivityReport, CoercivityRow, _lattice_L, term_symbols
from fracspec.grid import GridFunction, SpatialGrid, forward, inverse, read_csv
from fracspec.symbols import KernelSet, check_sector_condition


class StabilityError(ArithmeticError):
    """The semigroup ``exp(-t L)`` overflows at some lattice frequency."""

    def __init__(self, xi, growth):
        self.xi = tuple(float(x) for x in xi)
        super().__init__(f"exp(-t L) grows by {growth:.3g} at xi={self.xi}")


_SERIES_TERMS = 16
_SMALL = 0.1


def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(phi1(z), psi(z))`` with a Taylor series for ``|z| < 0.1``."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SMALL
    zs = np.where(small, 1.0, z)
    phi1 = -np.expm1(-zs) / zs
    psi = (1.0 - np.exp(-zs) * (1.0 + zs)) / zs**2
    if small.any():
        zz = z[small]
        p1 = np.zeros_like(zz)
        ps = np.zeros_like(zz)
        for k in range(_SERIES_TERMS):
            p1 += (-zz) ** k / math.factorial(k + 1)
        for k in range(2, _SERIES_TERMS + 2):
            ps += (-1) ** k * (k - 1) * zz ** (k - 2) / math.factorial(k)
        phi1[small] = p1
        psi[small] = ps
    return phi1, psi


def _check_growth(L: np.ndarray, t: float, grid: SpatialGrid):
    expo = -t * L.real
    worst = int(np.argmax(expo))
    if expo.flat[worst] > 690.0:
        j = np.unravel_index(worst, L.shape)
        raise StabilityError([x[j] for x in grid.lattice], math.exp(min(expo.flat[worst], 709)))


def check_parabolic_kernel(k: KernelSet, grid: SpatialGrid):
    """Require ``L`` in a sector of half-angle below ``pi/2`` on the lattice."""
    if not k.sector_angle < np.pi / 2:
        raise ValueError(f"sector angle {k.sector_angle:.6g} must be below pi/2")
    rep = check_sector_condition(k, grid, include_zero=True)
    if not rep.meta["sector_ok"]:
        raise ValueError(
            f"L leaves the sector of angle {k.sector_angle:.6g} "
            f"(|arg L| = {rep.meta['max_abs_arg']:.6g} at xi={rep.meta['max_abs_arg_xi']})"
        )


@dataclass(frozen=True, eq=False)
class ParabolicProblem:
    """Kernel set, forcing sampled at ``t_j = j T / M`` (``M + 1`` nodes), horizon and steps."""

    kernels: KernelSet
    forcing: MixedFunction
    horizon: float
    steps: int

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon T must be positive")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps M must be a positive integer")
        t = np.linspace(0.0, self.horizon, int(self.steps) + 1)
        if self.forcing.steps != len(t) or not np.allclose(self.forcing.times, t, atol=1e-12):
            raise ValueError(f"forcing must be sampled at the {len(t)} nodes of [0, T]")
        if self.kernels.dim != self.forcing.grid.dim:
            raise ValueError("kernel and forcing dimensions differ")
        check_parabolic_kernel(self.kernels, self.forcing.grid)

    @property
    def dt(self) -> float:
        return self.horizon / self.steps


@dataclass(frozen=True, eq=False)
class ParabolicSolution:
    """Solution samples and the L2 residual of ``u_t + O u - f`` at each half step."""

    u: MixedFunction
    residuals: np.ndarray


def duhamel_solve(p: ParabolicProblem) -> ParabolicSolution:
    grid = p.forcing.grid
    L = _lattice_L(p.kernels, grid)
    _check_growth(L, p.horizon, grid)
    dt = p.dt
    z = dt * L.ravel()
    phi1, psi = phi_functions(z)
    decay = np.exp(-z)
    w_prev = dt * psi
    w_next = dt * (phi1 - psi)
    axes = tuple(range(1, grid.dim + 1))
    f_hat = forward(p.forcing.values, axes=axes).reshape(p.steps + 1, -1)
    u_hat = _kernels.duhamel_march(decay, w_prev, w_next, f_hat)
    u_vals = inverse(u_hat.reshape(p.forcing.values.shape), axes=axes)
    u_vals[0] = 0.0
    # half-step residual: forward difference in time, averages elsewhere
    ut = (u_hat[1:] - u_hat[:-1]) / dt
    ou = 0.5 * L.ravel() * (u_hat[1:] + u_hat[:-1])
    fm = 0.5 * (f_hat[1:] + f_hat[:-1])
    res = np.sqrt(grid.cell_volume * np.sum(np.abs(ut + ou - fm) ** 2, axis=1))
    return ParabolicSolution(MixedFunction(grid, p.forcing.times, u_vals), res)


def semigroup_apply(t: float, g: GridFunction, k: KernelSet) -> GridFunction:
    """``F^{-1}[exp(-t L) g_hat]``."""
    if not t >= 0:
        raise ValueError("t must be nonnegative")
    check_parabolic_kernel(k, g.grid)
    L = _lattice_L(k, g.grid)
    _check_growth(L, t, g.grid)
    return GridFunction(g.grid, inverse(np.exp(-t * L) * forward(g.values)))


# -- forcing construction --------------------------------------------------

TIME_PROFILES = {
    "constant": lambda t: np.ones_like(t),
    "decay": lambda t: np.exp(-t),
    "ramp": lambda t: t,
}


def separable_forcing(w: GridFunction, profile, horizon: float, steps: int) -> MixedFunction:
    """``f(t, x) = g(t) w(x)`` on ``M + 1`` time nodes; ``profile`` is a name or callable."""
    if isinstance(profile, str):
        if profile not in TIME_PROFILES:
            raise ValueError(f"unknown time profile {profile!r}; known: {sorted(TIME_PROFILES)}")
        profile = TIME_PROFILES[profile]
    t = np.linspace(0.0, horizon, int(steps) + 1)
    g = np.asarray(profile(t), dtype=complex)
    return MixedFunction(w.grid, t, g[(slice(None),) + (None,) * w.grid.dim] * w.values)


def read_forcing_dir(path, radius: float, horizon: float) -> MixedFunction:
    """Time series from ``slice_0000.csv, slice_0001.csv, ...`` spread uniformly over ``[0, T]``."""
    files = sorted(Path(path).glob("slice_*.csv"))
    if len(files) < 2:
        raise ValueError(f"{path}: need at least two slice_NNNN.csv files")
    slices = [read_csv(f, radius) for f in files]
    return MixedFunction.from_slices(np.linspace(0.0, horizon, len(slices)), slices)


# -- maximal regularity report ---------------------------------------------


def time_derivative(u: MixedFunction) -> MixedFunction:
    """Second-order central differences in time, one-sided at the ends."""
    if u.steps < 3:
        raise ValueError("need at least three time nodes")
    return MixedFunction(u.grid, u.times, np.gradient(u.values, u.dt, axis=0, edge_order=2))


def parabolic_coercivity_report(p: ParabolicProblem, bp_space: BesovParams,
                                bp_time: BesovParams, convolution: bool = True,
                                solution: ParabolicSolution | None = None,
                                workers: int = 1) -> CoercivityReport:
    """Mixed norms of ``u_t``, each ``a_alpha * D^alpha u`` and ``u`` against ``||f||``.

    Rows use ``alpha_index = "dt"`` for the time derivative; ``u_norm_scaled``
    holds ``||u||`` (no spectral parameter here) and ``lambda`` is 0.
    """
    if not np.any(p.forcing.values):
        raise ValueError("forcing must be nonzero")
    sol = solution or duhamel_solve(p)
    u = sol.u
    grid = u.grid
    axes = tuple(range(1, grid.dim + 1))
    u_hat = forward(u.values, axes=axes)

    def norm(vals):
        return mixed_norm(MixedFunction(grid, u.times, vals), bp_space, bp_time, workers)

    f_norm = norm(p.forcing.values)
    dt_norm = norm(time_derivative(u).values)
    terms = [norm(inverse(sym * u_hat, axes=axes))
             for sym in term_symbols(p.kernels, grid, convolution)]
    u_norm = norm(u.values)
    total = (dt_norm + sum(terms) + u_norm) / f_norm
    rows = [CoercivityRow(0.0, 0.0, "dt", dt_norm, u_norm, total)]
    rows += [CoercivityRow(0.0, 0.0, i, v, u_norm, total) for i, v in enumerate(terms)]
    desc = {"kind": "mixed", "space": bp_space.to_dict(), "time": bp_time.to_dict(),
            "variant": "convolution" if convolution else "derivative"}
    return CoercivityReport(rows, desc, math.inf)
