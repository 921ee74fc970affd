"""Characteristic symbols of nonlocal fractional operators and their checks.

A :class:`KernelSet` is the family of terms ``(alpha, a_hat)`` defining

    L(xi) = sum_alpha a_hat_alpha(xi) (i xi)^alpha

and the resolvent multipliers

    sigma_0 = 1 / (L + lambda)
    sigma_1 = lambda * sigma_0
    sigma_2 = sum_alpha |lambda|^(1 - |alpha|/l) a_hat_alpha (i xi)^alpha sigma_0.

The checks here sweep these functions over a frequency lattice and report
empirical constants: nothing in the theory fixes their values, so a check
passes when the constant is positive/finite and stable under refinement.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from fracspec.fractional import FractionalMultiIndex, as_multi_index, frac_power_symbol
from fracspec.grid import SpatialGrid


class DegeneratePointError(ArithmeticError):
    """``L(xi) + lambda`` vanishes (numerically) at a lattice point."""

    def __init__(self, xi, lam):
        self.xi = tuple(float(x) for x in xi)
        self.lam = complex(lam)
        super().__init__(f"L(xi) + lambda = 0 at xi={self.xi}, lambda={self.lam}")


def _radius2(xi):
    return sum(np.asarray(x, dtype=float) ** 2 for x in xi)


# -- symbols ---------------------------------------------------------------


class Symbol:
    """Fourier transform ``a_hat(xi)`` of a convolution kernel.

    Subclasses implement ``__call__(xi)`` for a tuple of per-axis coordinate
    arrays; ``partial(xi, axis)`` returns the analytic first partial or
    ``None`` when only finite differences are available.
    """

    spec = "symbol"

    def __call__(self, xi):
        raise NotImplementedError

    def partial(self, xi, axis):
        return None

    def __repr__(self):
        return self.spec


class ConstantSymbol(Symbol):
    """``a_hat = c``: the kernel ``c * delta``."""

    def __init__(self, c):
        self.c = complex(c)
        self.spec = f"delta({_fmt(self.c)})"

    def __call__(self, xi):
        shape = np.broadcast_shapes(*(np.shape(x) for x in xi))
        return np.full(shape, self.c)

    def partial(self, xi, axis):
        return np.zeros(np.broadcast_shapes(*(np.shape(x) for x in xi)), dtype=complex)


class GaussSymbol(Symbol):
    """``a_hat = c exp(-w |xi|^2)``."""

    def __init__(self, c, w):
        self.c, self.w = complex(c), float(w)
        if not self.w > 0:
            raise ValueError("gauss width parameter must be positive")
        self.spec = f"gauss({_fmt(self.c)}, {self.w!r})"

    def __call__(self, xi):
        return self.c * np.exp(-self.w * _radius2(xi))

    def partial(self, xi, axis):
        return -2.0 * self.w * np.asarray(xi[axis], dtype=float) * self(xi)


class ExpDecaySymbol(Symbol):
    """``a_hat = c exp(-w |xi|)``, the transform of a Poisson-type kernel."""

    def __init__(self, c, w):
        self.c, self.w = complex(c), float(w)
        if not self.w > 0:
            raise ValueError("expdecay rate must be positive")
        self.spec = f"expdecay({_fmt(self.c)}, {self.w!r})"

    def __call__(self, xi):
        return self.c * np.exp(-self.w * np.sqrt(_radius2(xi)))

    def partial(self, xi, axis):
        r = np.sqrt(_radius2(xi))
        with np.errstate(invalid="ignore", divide="ignore"):
            d = np.where(r > 0, -self.w * np.asarray(xi[axis], dtype=float) / r, 0.0)
        return d * self(xi)


class PhaseSymbol(Symbol):
    """``a_hat = exp(-i pi beta/2 sgn xi_k)``; turns ``(i xi_k)^beta`` into ``|xi_k|^beta``."""

    def __init__(self, beta, axis):
        self.beta, self.axis = float(beta), int(axis)
        self.spec = f"phase({self.beta!r}, {self.axis})"

    def __call__(self, xi):
        s = np.sign(np.asarray(xi[self.axis], dtype=float))
        out = np.exp(-0.5j * np.pi * self.beta * s)
        shape = np.broadcast_shapes(*(np.shape(x) for x in xi))
        return np.broadcast_to(out, shape).astype(complex)

    def partial(self, xi, axis):
        return np.zeros(np.broadcast_shapes(*(np.shape(x) for x in xi)), dtype=complex)


class TableSymbol(Symbol):
    """Radial profile ``a_hat(|xi|)`` from samples, cubic-spline interpolated.

    Outside the sampled range the end values are held constant.
    """

    def __init__(self, r, values, source="table"):
        r = np.asarray(r, dtype=float)
        values = np.asarray(values, dtype=complex)
        order = np.argsort(r)
        self.r, self.values = r[order], values[order]
        if len(self.r) < 4 or np.any(np.diff(self.r) <= 0):
            raise ValueError("table symbols need at least 4 distinct radii")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("table symbol values must be finite")
        self._re = CubicSpline(self.r, self.values.real)
        self._im = CubicSpline(self.r, self.values.imag)
        self.spec = str(source)

    def __call__(self, xi):
        rr = np.clip(np.sqrt(_radius2(xi)), self.r[0], self.r[-1])
        return self._re(rr) + 1j * self._im(rr)


def _fmt(c: complex) -> str:
    return repr(c.real) if c.imag == 0 else repr(c)


# -- kernels and sector parameters -----------------------------------------


@dataclass(frozen=True)
class KernelTerm:
    alpha: FractionalMultiIndex
    symbol: Symbol

    def values(self, xi):
        """``a_hat_alpha(xi) (i xi)^alpha``."""
        return self.symbol(xi) * frac_power_symbol(xi, self.alpha)


@dataclass(frozen=True)
class KernelSet:
    """Terms ``(alpha, a_hat_alpha)`` of the operator, its order ``l`` and sector angle."""

    order: float
    terms: tuple[KernelTerm, ...]
    sector_angle: float = 0.0
    name: str = "kernel"

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("a kernel set needs at least one term")
        dims = {t.alpha.dim for t in terms}
        if len(dims) != 1:
            raise ValueError("all multi-indices must have the same dimension")
        if not self.order > 0:
            raise ValueError("kernel order l must be positive")
        if not 0 <= self.sector_angle < np.pi:
            raise ValueError("sector angle must lie in [0, pi)")
        for t in terms:
            if t.alpha.total > self.order + 1e-12:
                raise ValueError(f"|alpha| = {t.alpha.total} exceeds l = {self.order}")
        object.__setattr__(self, "terms", terms)
        n = dims.pop()
        probe = tuple(np.array([0.5, 1.0, 2.0]) for _ in range(n))
        for k in range(n):
            if not self.principal_terms(k):
                raise ValueError(f"missing principal term of order {self.order} on axis {k}")
            if np.all(self.principal_symbol(k, probe) == 0):
                raise ValueError(f"principal symbol on axis {k} vanishes identically")

    @property
    def dim(self) -> int:
        return self.terms[0].alpha.dim

    def principal_terms(self, k: int) -> list[KernelTerm]:
        target = tuple(self.order if i == k else 0.0 for i in range(self.dim))
        return [t for t in self.terms if np.allclose(t.alpha.orders, target)]

    def principal_symbol(self, k: int, xi):
        """Sum of ``a_hat`` over all terms with ``alpha = l e_k``."""
        return sum(t.symbol(xi) for t in self.principal_terms(k))

    def has_zero_order_term(self) -> bool:
        zero = tuple(0.0 for _ in range(self.dim))
        return any(t.alpha.orders == zero for t in self.terms)

    def with_sector_angle(self, phi: float) -> "KernelSet":
        return KernelSet(self.order, self.terms, phi, self.name)


def _as_complex(lam) -> complex:
    return complex(lam.lam) if isinstance(lam, SectorParameter) else complex(lam)


def _principal_arg(z: complex) -> float:
    return math.atan2(z.imag, z.real)


@dataclass(frozen=True)
class SectorParameter:
    """Spectral parameter ``lambda`` together with the sector half-angle it must lie in."""

    lam: complex
    angle_bound: float

    def __post_init__(self):
        lam = complex(self.lam)
        object.__setattr__(self, "lam", lam)
        if not 0 <= self.angle_bound < np.pi:
            raise ValueError("sector angle bound must lie in [0, pi)")
        if lam != 0 and abs(_principal_arg(lam)) > self.angle_bound + 1e-12:
            raise ValueError(
                f"lambda={lam} has |arg| {abs(_principal_arg(lam)):.6g} > {self.angle_bound:.6g}"
            )

    @property
    def modulus(self) -> float:
        return abs(self.lam)

    @property
    def argument(self) -> float:
        return _principal_arg(self.lam) if self.lam != 0 else 0.0


def default_lambda_sweep(phi2: float, decades: Sequence[int] = range(-2, 5),
                         arguments: Sequence[float] | None = None) -> list[SectorParameter]:
    """Moduli ``10^d`` for each decade ``d`` times arguments ``0, +-phi2/2, +-phi2``."""
    if arguments is None:
        arguments = (-phi2, -phi2 / 2, 0.0, phi2 / 2, phi2)
    out = [
        SectorParameter(10.0**d * complex(math.cos(a), math.sin(a)), phi2)
        for d in decades
        for a in arguments
    ]
    return sort_sweep(out)


def sort_sweep(sweep):
    return sorted(sweep, key=lambda s: (s.modulus, s.argument))


@dataclass
class SymbolReport:
    """Outcome of one empirical check: the extremal value, where it was attained, PASS/FAIL."""

    quantity: str
    value: float
    location: dict
    passed: bool
    meta: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        return {
            "quantity": self.quantity,
            "value": self.value,
            "location": self.location,
            "passed": self.passed,
            **{f"meta_{k}": v for k, v in self.meta.items() if np.isscalar(v)},
        }


# -- pointwise evaluation --------------------------------------------------


def _xi_tuple(xi, dim=None):
    if isinstance(xi, tuple) and all(np.ndim(x) > 0 for x in xi):
        return xi
    arr = np.asarray(xi, dtype=float)
    if arr.ndim == 0:
        arr = arr[None]
    if arr.ndim == 1:
        return tuple(arr[i] for i in range(arr.shape[0]))
    return tuple(np.asarray(x) for x in xi)


def eval_L(xi, k: KernelSet):
    """``L(xi) = sum a_hat_alpha (i xi)^alpha``; ``xi`` may be a point or per-axis arrays."""
    xi = _xi_tuple(xi)
    out = sum(t.values(xi) for t in k.terms)
    out = np.asarray(out, dtype=complex)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("kernel symbol is not finite on the given frequencies")
    return out[()] if out.ndim == 0 else out


def sector_membership(z, phi: float, atol: float = 0.0):
    """``z == 0`` or ``|arg z| <= phi`` (principal argument); vectorised."""
    z = np.asarray(z, dtype=complex)
    out = (z == 0) | (np.abs(np.angle(z)) <= phi + atol)
    return bool(out) if out.ndim == 0 else out


def _sigmas_from(L, term_vals, lam, order, which):
    lam = complex(lam)
    den = L + lam
    scale = np.maximum(np.abs(L), abs(lam))
    bad = (den == 0) | (np.abs(den) <= 1e-14 * scale)
    if np.any(bad):
        return None, bad
    s0 = 1.0 / den
    if which == 0:
        return s0, None
    if which == 1:
        return lam * s0, None
    r = abs(lam)
    acc = sum((r ** (1.0 - tot / order)) * v for tot, v in term_vals)
    return acc * s0, None


def eval_sigma(i: int, xi, lam, k: KernelSet):
    """Resolvent multiplier ``sigma_i(xi, lambda)`` for ``i`` in {0, 1, 2}."""
    if i not in (0, 1, 2):
        raise ValueError("sigma index must be 0, 1 or 2")
    lam = _as_complex(lam)
    xi = _xi_tuple(xi)
    L = np.asarray(eval_L(xi, k))
    term_vals = [(t.alpha.total, t.values(xi)) for t in k.terms] if i == 2 else []
    out, bad = _sigmas_from(L, term_vals, lam, k.order, i)
    if out is None:
        where = np.argwhere(np.atleast_1d(bad))[0]
        pt = tuple(float(np.broadcast_to(x, np.shape(L))[tuple(where)]) if np.ndim(L) else float(x)
                   for x in xi)
        raise DegeneratePointError(pt, lam)
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


def sigma_closure(i: int, lam, k: KernelSet) -> Callable:
    """``xi -> sigma_i(xi, lam)`` for use with :func:`mikhlin_sup`."""
    lam = _as_complex(lam)

    def target(xi):
        return eval_sigma(i, xi, lam, k)

    target.__name__ = f"sigma_{i}"
    return target


# -- lattice sweeps --------------------------------------------------------


def lattice_points(where, include_zero: bool = True) -> tuple[np.ndarray, ...]:
    """Flattened lattice coordinates from a grid or an explicit ``(P, n)`` array."""
    if isinstance(where, SpatialGrid):
        pts = tuple(x.ravel() for x in where.lattice)
    else:
        arr = np.asarray(where, dtype=float)
        if arr.size == 0:
            raise ValueError("empty frequency set")
        if arr.ndim == 1:
            arr = arr[:, None]
        pts = tuple(arr[:, i] for i in range(arr.shape[1]))
    if not include_zero:
        nz = _radius2(pts) > 0
        pts = tuple(x[nz] for x in pts)
    if pts[0].size == 0:
        raise ValueError("empty frequency set")
    return pts


def _loc(pts, idx):
    return {"xi": [float(x[idx]) for x in pts]}


def check_sector_condition(k: KernelSet, where, include_zero: bool = False,
                        angle_tol: float = 1e-12) -> SymbolReport:
    """Sector membership of ``L`` on the lattice and the best lower-bound constant.

    ``C* = min |L(xi)| / sum_k |a_hat_{l e_k}(xi)| |xi_k|^l`` over lattice
    points with a nonzero denominator. PASS iff ``L`` is in the sector of
    half-angle ``k.sector_angle`` everywhere and ``C* > 0``.
    """
    pts = lattice_points(where, include_zero)
    L = np.asarray(eval_L(pts, k))
    in_sector = sector_membership(L, k.sector_angle, angle_tol)
    args = np.where(L == 0, 0.0, np.abs(np.angle(L)))
    worst = int(np.argmax(args))
    den = sum(np.abs(k.principal_symbol(j, pts)) * np.abs(pts[j]) ** k.order
              for j in range(k.dim))
    ok = den > 0
    ratio = np.full(L.shape, np.inf)
    ratio[ok] = np.abs(L[ok]) / den[ok]
    i_min = int(np.argmin(ratio))
    c_star = float(ratio[i_min]) if ok.any() else float("nan")
    sector_ok = bool(np.all(in_sector))
    passed = sector_ok and ok.any() and c_star > 0
    return SymbolReport(
        "sector_and_lower_bound",
        c_star,
        _loc(pts, i_min),
        bool(passed),
        {
            "sector_ok": sector_ok,
            "phi1": k.sector_angle,
            "max_abs_arg": float(args[worst]),
            "max_abs_arg_xi": [float(x[worst]) for x in pts],
            "points": int(L.size),
        },
    )


def _lower_bound_min(k, sweep, pts):
    L = np.asarray(eval_L(pts, k))
    absL = np.abs(L)
    best, where, skipped = np.inf, None, 0
    for s in sweep:
        lam = s.lam
        den = abs(lam) + absL
        zero = den == 0
        skipped += int(zero.sum())
        ratio = np.where(zero, np.inf, np.abs(L + lam) / np.where(zero, 1.0, den))
        i = int(np.argmin(ratio))
        if ratio[i] < best:
            best = float(ratio[i])
            where = {"xi": [float(x[i]) for x in pts], "lambda": [lam.real, lam.imag]}
    return best, where, skipped


def lower_bound_constant(k: KernelSet, lam_sweep: Sequence[SectorParameter],
                         grid: SpatialGrid, refine: bool = True,
                         tolerance: float = 0.10) -> SymbolReport:
    """Empirical ``C = min |lambda + L| / (|lambda| + |L|)`` over sweep x lattice.

    Points with ``|lambda| + |L| = 0`` are skipped and counted. PASS iff
    ``C > 0`` and, when ``refine``, the value on the twice-refined grid is
    within ``tolerance`` (relative).
    """
    for s in lam_sweep:
        if s.angle_bound + k.sector_angle >= np.pi:
            raise ValueError("sector angles must satisfy phi1 + phi2 < pi")
    pts = lattice_points(grid, include_zero=True)
    c, where, skipped = _lower_bound_min(k, lam_sweep, pts)
    meta = {"skipped": skipped, "sweep_size": len(lam_sweep)}
    passed = np.isfinite(c) and c > 0
    if refine:
        c2, _, _ = _lower_bound_min(k, lam_sweep, lattice_points(grid.refined(), True))
        meta["refined_value"] = c2
        passed = passed and abs(c2 - c) <= tolerance * c
    return SymbolReport("sector_lower_bound", c, where, bool(passed), meta)


_STENCIL = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))


def _derivative(target, pts, beta, step):
    """``D^beta target`` at ``pts`` by tensor-product 4th-order central differences.

    Single first partials use the analytic ``target.partial`` when available.
    """
    active = [i for i, b in enumerate(beta) if b]
    if not active:
        return np.asarray(target(pts), dtype=complex)
    partial = getattr(target, "partial", None)
    if len(active) == 1 and partial is not None:
        d = partial(pts, active[0])
        if d is not None:
            return np.asarray(d, dtype=complex)
    acc = 0.0
    for combo in itertools.product(_STENCIL, repeat=len(active)):
        shifted = list(pts)
        w = 1.0
        for axis, (off, c) in zip(active, combo):
            shifted[axis] = pts[axis] + off * step
            w *= c / (12.0 * step)
        acc = acc + w * np.asarray(target(tuple(shifted)), dtype=complex)
    return acc


def _mikhlin_values(target, grid, beta, step_fraction):
    pts = lattice_points(grid, include_zero=True)
    r = np.sqrt(_radius2(pts))
    keep = r >= grid.frequency_spacing * (1 - 1e-9)
    pts = tuple(x[keep] for x in pts)
    r = r[keep]
    step = step_fraction * grid.frequency_spacing
    vals = r ** sum(beta) * np.abs(_derivative(target, pts, beta, step))
    i = int(np.argmax(vals))
    return float(vals[i]), [float(x[i]) for x in pts]


def all_betas(dim: int) -> list[tuple[int, ...]]:
    return [b for b in itertools.product((0, 1), repeat=dim)]


def mikhlin_sup(target: Callable, grid: SpatialGrid, betas=None, refine: bool = True,
                tolerance: float = 0.05, step_fraction: float = 1e-2,
                name: str | None = None) -> list[SymbolReport]:
    """``sup |xi|^{|beta|} |D^beta target(xi)|`` over the punctured lattice, per ``beta``.

    The origin (the open ball of one lattice cell) is excluded. Derivatives
    use the target's analytic partials where available and 4th-order central
    differences with step ``step_fraction * (pi / R)`` otherwise. PASS iff the
    sup is finite and, when ``refine``, changes by at most ``tolerance``
    between the grid and its 2x refinement.
    """
    betas = all_betas(grid.dim) if betas is None else [tuple(b) for b in betas]
    name = name or getattr(target, "__name__", "target")
    out = []
    for beta in betas:
        if len(beta) != grid.dim or any(b not in (0, 1) for b in beta):
            raise ValueError(f"beta must be a 0/1 vector of length {grid.dim}")
        val, loc = _mikhlin_values(target, grid, beta, step_fraction)
        meta = {"points": grid.points}
        passed = bool(np.isfinite(val))
        if refine:
            val2, _ = _mikhlin_values(target, grid.refined(), beta, step_fraction)
            meta["refined_value"] = val2
            scale = max(abs(val), 1e-12)
            meta["relative_change"] = abs(val2 - val) / scale if scale > 1e-12 else 0.0
            passed = passed and np.isfinite(val2) and (
                abs(val2 - val) <= tolerance * scale or max(abs(val), abs(val2)) <= 1e-12
            )
        out.append(SymbolReport(f"mikhlin[{name}, beta={beta}]", val, {"xi": loc}, passed, meta))
    return out


def young_inequality_constant(l: float, alpha, y_samples=None) -> SymbolReport:
    """Empirical ``C = max prod y_k^alpha_k / (1 + sum y_k^l)`` over nonnegative samples.

    Default samples: ``{0} U logspace(-3, 6, 91)`` on each axis, tensored.
    """
    alpha = as_multi_index(alpha)
    if alpha.total > l + 1e-12:
        raise ValueError(f"|alpha| = {alpha.total} exceeds l = {l}")
    n = alpha.dim
    if y_samples is None:
        axis = np.concatenate([[0.0], np.logspace(-3, 6, 91)])
        mesh = np.meshgrid(*([axis] * n), indexing="ij")
        y = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        y = np.asarray(y_samples, dtype=float).reshape(-1, n)
        if np.any(y < 0):
            raise ValueError("samples must be nonnegative")
    num = np.prod([y[:, k] ** a for k, a in enumerate(alpha)], axis=0)
    den = 1.0 + np.sum(y**l, axis=1)
    ratio = num / den
    i = int(np.argmax(ratio))
    c = float(ratio[i])
    return SymbolReport("young_constant", c, {"y": y[i].tolist()}, bool(np.isfinite(c)),
                        {"samples": int(len(y))})


def uniformity_report(k: KernelSet, grid: SpatialGrid, lam_sweep: Sequence[SectorParameter],
                      tolerance: float = 0.01) -> list[SymbolReport]:
    """Uniform boundedness of ``sigma_0, sigma_1, sigma_2`` over a lambda sweep.

    For each ``i`` and each fixed argument of ``lambda`` the sup over the
    lattice is recorded per modulus. The check is that this sup never grows
    by more than ``tolerance`` above its value at the smallest modulus as
    ``|lambda|`` increases. Decreasing sups are allowed: ``sup |sigma_0|``
    falls like ``1/|lambda|``.
    """
    pts = lattice_points(grid, include_zero=True)
    L = np.asarray(eval_L(pts, k))
    term_vals = [(t.alpha.total, t.values(pts)) for t in k.terms]
    table: dict[int, dict[float, list[tuple[float, float, list]]]] = {0: {}, 1: {}, 2: {}}
    for s in sort_sweep(lam_sweep):
        if s.angle_bound + k.sector_angle >= np.pi:
            raise ValueError("sector angles must satisfy phi1 + phi2 < pi")
        for i in (0, 1, 2):
            vals, bad = _sigmas_from(L, term_vals, s.lam, k.order, i)
            if vals is None:
                j = int(np.argmax(bad))
                raise DegeneratePointError([x[j] for x in pts], s.lam)
            a = np.abs(vals)
            j = int(np.argmax(a))
            arg = round(s.argument, 12)
            table[i].setdefault(arg, []).append((s.modulus, float(a[j]), [float(x[j]) for x in pts]))
    out = []
    for i in (0, 1, 2):
        growth, overall, where, per_arg = 0.0, 0.0, None, {}
        for arg, rows in table[i].items():
            rows.sort()
            base = rows[0][1]
            g = max(r[1] for r in rows) / base - 1.0 if base > 0 else 0.0
            per_arg[arg] = {"moduli": [r[0] for r in rows], "sups": [r[1] for r in rows],
                            "growth": g}
            growth = max(growth, g)
            for m, v, xi in rows:
                if v > overall:
                    overall, where = v, {"xi": xi, "lambda_modulus": m, "lambda_arg": arg}
        passed = bool(np.isfinite(overall) and growth <= tolerance)
        out.append(SymbolReport(f"sup_abs_sigma_{i}", overall, where or {}, passed,
                                {"max_growth": growth, "per_argument": per_arg}))
    return out
