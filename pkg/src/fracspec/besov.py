"""Difference-quotient Besov norms on the grid, mixed time-space norms and embedding checks.

For a function on the box the norm is

    ||f||_{L_p} + sum_i ( int_0^{h0} y^{-[(s_i - k_i) q + 1]} ||Delta_i^{m_i}(y) D_i^{k_i} f||_{L_p}^q dy )^{1/q}

where ``Delta_i^m(y)`` is the m-th forward difference with step ``y`` along
axis ``i``, restricted to nodes whose stencil stays in the box (no periodic
wrap). Off-grid stencil points are filled in by cubic interpolation. The
y-integral runs over ``J`` log-spaced samples on ``[h, h0]`` (``h`` = one
grid cell) with the trapezoid rule in ``ln y``; ``q = inf`` takes the sup.
``h0`` is clipped to the largest step whose stencil still fits in the box.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from fracspec import _kernels
from fracspec.fractional import FractionalMultiIndex, as_multi_index, spectral_derivative
from fracspec.grid import GridFunction, SpatialGrid, forward, inverse
from fracspec.symbols import SymbolReport

INF = math.inf


def parse_exponent(v) -> float:
    """Accept numbers or the token ``"inf"``."""
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity"):
            return INF
        v = float(v)
    v = float(v)
    if not v >= 1:
        raise ValueError(f"exponent must lie in [1, inf], got {v}")
    return v


def _fmt_exponent(v):
    return "inf" if v == INF else v


def _tuple(v):
    return tuple(float(x) for x in np.atleast_1d(v))


@dataclass(frozen=True)
class BesovParams:
    """Smoothness ``s``, integrability ``p``, ``q``, difference order ``m``,
    derivative offset ``k`` and y-integral cutoff ``h0``.

    ``s``, ``m`` and ``k`` are per-axis; a single value applies to every axis.
    By default ``k = floor(s)`` and ``m = 2``. ``samples`` is the number of
    y-quadrature points.
    """

    s: tuple = (0.5,)
    p: float = 2.0
    q: float = 2.0
    m: tuple | None = None
    k: tuple | None = None
    h0: float = 1.0
    samples: int = 64

    def __post_init__(self):
        s = _tuple(self.s)
        k = tuple(int(math.floor(x)) for x in s) if self.k is None else _int_tuple(self.k)
        m = (2,) * len(s) if self.m is None else _int_tuple(self.m)
        n = max(len(s), len(k), len(m))
        for name, v in (("s", s), ("k", k), ("m", m)):
            if len(v) not in (1, n):
                raise ValueError(f"{name} has {len(v)} components, expected 1 or {n}")
        s, k, m = (v * n if len(v) == 1 else v for v in (s, k, m))
        for si, ki, mi in zip(s, k, m):
            if ki < 0:
                raise ValueError("derivative offsets k must be nonnegative")
            if not (mi > si - ki > 0):
                raise ValueError(f"need m > s - k > 0, got m={mi}, s={si}, k={ki}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "p", parse_exponent(self.p))
        object.__setattr__(self, "q", parse_exponent(self.q))
        if not (0 < float(self.h0) < INF):
            raise ValueError("h0 must be positive and finite")
        object.__setattr__(self, "h0", float(self.h0))
        if int(self.samples) < 2:
            raise ValueError("need at least 2 y-quadrature samples")
        object.__setattr__(self, "samples", int(self.samples))

    def axis_params(self, dim: int) -> list[tuple[float, int, int]]:
        """``(s_i, m_i, k_i)`` for each of ``dim`` axes."""
        if len(self.s) == 1:
            return [(self.s[0], self.m[0], self.k[0])] * dim
        if len(self.s) != dim:
            raise ValueError(f"parameters are given for {len(self.s)} axes, grid has {dim}")
        return list(zip(self.s, self.m, self.k))

    def replace(self, **changes) -> "BesovParams":
        d = self.to_dict()
        d.update(changes)
        return BesovParams.from_dict(d)

    def to_dict(self) -> dict:
        return {
            "s": list(self.s), "p": _fmt_exponent(self.p), "q": _fmt_exponent(self.q),
            "m": list(self.m), "k": list(self.k), "h0": self.h0, "samples": self.samples,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BesovParams":
        known = {"s", "p", "q", "m", "k", "h0", "samples"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown Besov keys {sorted(extra)}")
        return cls(**d)


def _int_tuple(v):
    out = []
    for x in np.atleast_1d(v):
        if float(x) != int(x):
            raise ValueError(f"expected integers, got {x}")
        out.append(int(x))
    return tuple(out)


# -- building blocks -------------------------------------------------------


def _lp(arr: np.ndarray, p: float, weight: float, axes) -> np.ndarray:
    a = np.abs(arr)
    if p == INF:
        return a.max(axis=axes) if a.size else np.zeros(())
    return (weight * (a**p).sum(axis=axes)) ** (1.0 / p)


def shifted_difference(values: np.ndarray, axis: int, order: int, shift: float):
    """``Delta^order`` with a step of ``shift`` nodes along ``axis``; entries past
    the last valid node are zero. Returns ``(diff, n_valid)``."""
    v = np.moveaxis(np.asarray(values), axis, -1)
    rows = v.reshape(-1, v.shape[-1])
    d, nv = _kernels.shifted_difference_rows(rows, shift, order)
    return np.moveaxis(d.reshape(v.shape), -1, axis), nv


def finite_difference(f: GridFunction, axis: int, order: int, step: float):
    """``(Delta_axis^order(step) f, mask)`` with ``mask`` marking nodes whose whole
    stencil ``x + j step e_axis`` (``j <= order``) lies inside the box."""
    g = f.grid
    if not 0 <= axis < g.dim:
        raise ValueError(f"axis {axis} out of range for dim {g.dim}")
    if not step > 0:
        raise ValueError("difference step must be positive")
    if order < 1 or int(order) != order:
        raise ValueError("difference order must be a positive integer")
    d, nv = shifted_difference(f.values, axis, int(order), step / g.spacing)
    if nv == 0:
        raise ValueError(f"step {step} of order {order} leaves no node inside the box")
    shape = [1] * g.dim
    shape[axis] = g.points
    mask = np.broadcast_to((np.arange(g.points) < nv).reshape(shape), g.shape)
    return GridFunction(g, d), mask


def y_samples(y_min: float, h0: float, count: int, nodes: int | None = None,
              order: int = 1) -> np.ndarray:
    """``count`` log-spaced steps on ``[y_min, h0]``.

    With ``nodes`` given, the upper end is clipped to ``(nodes - 1) y_min / order``,
    the largest step whose stencil still fits in the domain.
    """
    if nodes is not None:
        h0 = min(h0, (nodes - 1) * y_min / order)
    if not h0 > y_min:
        raise ValueError(f"h0={h0} must exceed the smallest step {y_min}")
    return np.geomspace(y_min, h0, count)


def _modulus(norms: np.ndarray, ys: np.ndarray, smooth: float, q: float) -> np.ndarray:
    """``(int y^{-smooth q} norms^q dy/y)^{1/q}``; ``norms`` has shape ``(J, B)``."""
    weights = ys[:, None] ** (-smooth)
    if q == INF:
        return (weights * norms).max(axis=0)
    integrand = (weights * norms) ** q
    return trapezoid(integrand, np.log(ys), axis=0) ** (1.0 / q)


def _seminorm(values, axis, spacing, smooth, order, q, ys, inner, workers=1):
    """Difference seminorm along ``axis`` (>= 1) of a batch ``values`` (axis 0 = batch).

    ``inner`` maps a batch of difference arrays to a vector of norms.
    """

    def one(y):
        d, nv = shifted_difference(values, axis, order, y / spacing)
        return (inner(d), nv)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(one, ys))
    else:
        results = [one(y) for y in ys]
    keep = [i for i, (_, nv) in enumerate(results) if nv > 0]
    if len(keep) < len(ys):
        warnings.warn(f"{len(ys) - len(keep)} difference steps left no node in the box; skipped")
    if len(keep) < 2 and q != INF:
        raise ValueError("too few usable difference steps for the y-quadrature")
    norms = np.array([results[i][0] for i in keep])
    return _modulus(norms, ys[keep], smooth, q)


def _axis_derivative(values, grid: SpatialGrid, axis: int, order: int):
    """Integer-order spectral derivative along one spatial axis of a batch."""
    if order == 0:
        return values
    ax = axis + 1
    xi = grid.wavenumbers
    shape = [1] * values.ndim
    shape[ax] = grid.points
    sym = ((1j * xi) ** order).reshape(shape)
    return inverse(sym * forward(values, axes=(ax,)), axes=(ax,))


# -- spatial norms ---------------------------------------------------------


def besov_norm_batch(values: np.ndarray, grid: SpatialGrid, bp: BesovParams,
                     workers: int = 1) -> np.ndarray:
    """Besov norms of a stack of grid functions, ``values.shape = (B, *grid.shape)``."""
    vals = np.asarray(values).reshape((-1,) + grid.shape)
    axes = tuple(range(1, grid.dim + 1))

    def lp(a):
        return _lp(a, bp.p, grid.cell_volume, axes)

    total = lp(vals)
    for i, (s, m, k) in enumerate(bp.axis_params(grid.dim)):
        ys = y_samples(grid.spacing, bp.h0, bp.samples, grid.points, m)
        g = _axis_derivative(vals, grid, i, k)
        total = total + _seminorm(g, i + 1, grid.spacing, s - k, m, bp.q, ys, lp, workers)
    return total


def besov_norm(f: GridFunction, bp: BesovParams, workers: int = 1) -> float:
    """Difference-quotient Besov norm of ``f``; see the module docstring."""
    return float(besov_norm_batch(f.values[None], f.grid, bp, workers)[0])


def lp_norm(f: GridFunction, p: float = 2.0) -> float:
    p = parse_exponent(p)
    return float(_lp(f.values, p, f.grid.cell_volume, None))


def integer_multi_indices(dim: int, l: float) -> list[FractionalMultiIndex]:
    """All integer multi-indices with ``|alpha| <= l``, zero included."""
    top = int(math.floor(l + 1e-12))
    return [
        FractionalMultiIndex(tuple(float(a) for a in c))
        for c in itertools.product(range(top + 1), repeat=dim)
        if sum(c) <= top
    ]


def sobolev_besov_norm(u: GridFunction, l: float, bp: BesovParams, alphas,
                       workers: int = 1) -> float:
    """``||u||_B + sum_{alpha, |alpha| <= l} ||D^alpha u||_B`` over the given multi-indices."""
    alphas = [as_multi_index(a) for a in alphas]
    vals = [u.values]
    for a in alphas:
        if a.total > l + 1e-12:
            raise ValueError(f"|alpha| = {a.total} exceeds l = {l}")
        vals.append(spectral_derivative(u, a).values)
    return float(besov_norm_batch(np.stack(vals), u.grid, bp, workers).sum())


# -- time-space norms ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MixedFunction:
    """Samples ``u(t_j, .)`` on a uniform time grid ``t_j = t0 + j dt``, one
    :class:`GridFunction` per node, stored as an array of shape ``(M, *grid.shape)``."""

    grid: SpatialGrid
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.array(self.values, dtype=complex, copy=True)
        if t.ndim != 1 or len(t) < 1:
            raise ValueError("time grid must be a nonempty vector")
        if v.shape != (len(t),) + self.grid.shape:
            v = v.reshape((len(t),) + self.grid.shape)
        if len(t) > 1:
            dt = np.diff(t)
            if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
                raise ValueError("time grid must be uniform and increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("MixedFunction values must be finite")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_slices(cls, times, slices) -> "MixedFunction":
        slices = list(slices)
        if not slices:
            raise ValueError("no slices")
        grid = slices[0].grid
        if any(s.grid != grid for s in slices):
            raise ValueError("all slices must share one grid")
        return cls(grid, times, np.stack([s.values for s in slices]))

    @property
    def steps(self) -> int:
        return len(self.times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def slice(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.values[j])


def time_besov_norm(series: np.ndarray, dt: float, bp_time: BesovParams, inner) -> float:
    """Besov norm in time of a sampled function with values measured by ``inner``.

    ``series`` has time along axis 0; ``inner`` maps a stack of values
    ``(K, ...)`` to ``K`` nonnegative numbers. Time differences use the same
    interpolated, domain-restricted stencil as the spatial norm.
    """
    (s, m, k), = bp_time.axis_params(1)
    if k != 0:
        raise ValueError("time derivative offsets are not supported; use k = 0")
    M = series.shape[0]
    if M < m + 1:
        raise ValueError(f"need at least {m + 1} time nodes for a difference of order {m}")
    p1 = bp_time.p

    def outer(stack):
        # stack: (K, ...) slices -> L_p1 over time of their inner norms
        norms = inner(stack)
        if p1 == INF:
            return np.array([norms.max() if norms.size else 0.0])
        return np.array([(dt * np.sum(norms**p1)) ** (1.0 / p1)])

    base = outer(series)[0]
    ys = y_samples(dt, bp_time.h0, bp_time.samples, M, m)

    norms, used = [], []
    for y in ys:
        d, nv = shifted_difference(series, 0, m, y / dt)
        if nv > 0:
            norms.append(outer(d[:nv]))
            used.append(y)
    if len(used) < len(ys):
        warnings.warn(f"{len(ys) - len(used)} time steps left no node in the window; skipped")
    if len(used) < 2 and bp_time.q != INF:
        raise ValueError("too few usable time steps for the y-quadrature")
    semi = _modulus(np.array(norms), np.array(used), s, bp_time.q)[0]
    return float(base + semi)


def mixed_norm(u: MixedFunction, bp_space: BesovParams, bp_time: BesovParams,
               workers: int = 1) -> float:
    """Besov-in-time (exponent ``bp_time.p``) norm of the slices measured in the
    spatial Besov norm ``bp_space``."""
    if u.steps < 2:
        raise ValueError("a mixed norm needs at least two time nodes")

    def inner(stack):
        if len(stack) == 0:
            return np.zeros(0)
        return besov_norm_batch(stack, u.grid, bp_space, workers)

    return time_besov_norm(u.values, u.dt, bp_time, inner)


def box_besov_norm(u: MixedFunction, bp_space: BesovParams, bp_time: BesovParams) -> float:
    """Besov norm on the time-space box with the anisotropic ``L_p1(L_p)`` norm.

    Time differences and each spatial difference are measured in ``L_p1(L_p)``
    rather than nesting the spatial Besov norm inside, so for separable
    ``g(t) w(x)`` the mixed norm exceeds this one by the product of the two
    seminorms.
    """
    if u.steps < 2:
        raise ValueError("a box norm needs at least two time nodes")
    g = u.grid
    dt = u.dt
    p, p1 = bp_space.p, bp_time.p
    sp_axes = tuple(range(1, g.dim + 1))

    def mixed_lp(stack):
        # stack: (K, *grid.shape) -> scalar L_p1 over time of L_p over space
        inner = _lp(stack, p, g.cell_volume, sp_axes)
        if p1 == INF:
            return inner.max() if inner.size else 0.0
        return (dt * np.sum(inner**p1)) ** (1.0 / p1)

    def inner_lp(stack):
        if len(stack) == 0:
            return np.zeros(0)
        return _lp(stack, p, g.cell_volume, sp_axes)

    total = time_besov_norm(u.values, dt, bp_time, inner_lp)
    for i, (s, m, k) in enumerate(bp_space.axis_params(g.dim)):
        ys = y_samples(g.spacing, bp_space.h0, bp_space.samples, g.points, m)
        vals = _axis_derivative(u.values, g, i, k)
        total += float(_seminorm(vals[None], i + 2, g.spacing, s - k, m, bp_space.q, ys,
                                 lambda d: np.array([mixed_lp(d[0])]))[0])
    return float(total)


# -- embedding -------------------------------------------------------------


def embedding_exponent(alpha, l: float, dim: int, p: float, p1: float) -> float:
    """``(|alpha| + n (1/p - 1/p1)) / l``."""
    alpha = as_multi_index(alpha)
    inv = (lambda v: 0.0 if v == INF else 1.0 / v)
    return (alpha.total + dim * (inv(p) - inv(p1))) / l


def _embedding_sup(u, alpha, l, bp, bp1, mu, hs):
    num = besov_norm(spectral_derivative(u, alpha), bp1)
    full = sobolev_besov_norm(u, l, bp, integer_multi_indices(u.grid.dim, l))
    base = besov_norm(u, bp)
    ratios = num / (hs**mu * full + hs ** (-(1.0 - mu)) * base)
    i = int(np.argmax(ratios))
    return ratios, i, {"numerator": num, "full_norm": full, "base_norm": base}


def embedding_report(u: GridFunction, alpha, l: float, bp: BesovParams, p1, mu: float,
                     h_sweep=None, refined: GridFunction | None = None,
                     tolerance: float = 0.10) -> SymbolReport:
    """Empirical constant of the interpolation-type embedding inequality.

    For each ``h`` the ratio ``||D^alpha u||_{B^s_{p1,q}} / (h^mu ||u||_{B^{s,l}}
    + h^{-(1-mu)} ||u||_{B^s_{p,q}})`` is computed; the report carries its sup.
    PASS iff the sup is finite and, when a refined sampling of ``u`` is given,
    agrees with it to ``tolerance``.
    """
    alpha = as_multi_index(alpha)
    p1 = parse_exponent(p1)
    kappa = embedding_exponent(alpha, l, u.grid.dim, bp.p, p1)
    if kappa > 1 + 1e-12:
        raise ValueError(f"embedding exponent {kappa:.6g} exceeds 1")
    if not (-1e-12 <= mu <= 1 - kappa + 1e-12):
        raise ValueError(f"mu={mu} must lie in [0, {1 - kappa:.6g}]")
    hs = np.asarray(h_sweep if h_sweep is not None else 2.0 ** np.arange(-6, 1), dtype=float)
    if np.any(hs <= 0):
        raise ValueError("h values must be positive")
    meta = {"kappa": kappa, "mu": mu, "p1": _fmt_exponent(p1), "h": hs.tolist()}
    if not np.any(u.values):
        meta["degenerate"] = True
        return SymbolReport("embedding_constant", 0.0, {}, True, meta)
    bp1 = bp.replace(p=_fmt_exponent(p1))
    ratios, i, parts = _embedding_sup(u, alpha, l, bp, bp1, mu, hs)
    sup = float(ratios[i])
    meta.update(parts, ratios=ratios.tolist())
    passed = bool(np.isfinite(sup))
    if refined is not None:
        r2, j, _ = _embedding_sup(refined, alpha, l, bp, bp1, mu, hs)
        meta["refined_value"] = float(r2[j])
        passed = passed and abs(r2[j] - sup) <= tolerance * sup
    return SymbolReport("embedding_constant", sup, {"h": float(hs[i])}, passed, meta)
