"""Spectral solution of ``sum a_alpha * D^alpha u + lambda u = f`` and its diagnostics.

Every operator here is a Fourier multiplier on the periodic box: the
operator ``O`` multiplies by ``L(xi)``, the resolvent ``(O + lambda)^{-1}``
by ``sigma_0 = 1 / (L + lambda)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fracspec.besov import BesovParams, besov_norm_batch, _lp, parse_exponent
from fracspec.fractional import frac_power_symbol
from fracspec.grid import GridFunction, SpatialGrid, forward, inverse, l2_norm
from fracspec.symbols import (
    DegeneratePointError,
    KernelSet,
    SectorParameter,
    SymbolReport,
    _sigmas_from,
    eval_L,
    sort_sweep,
)


# -- norms -----------------------------------------------------------------


@dataclass(frozen=True)
class NormSpec:
    """The norm ``X`` used in reports: Besov with ``besov`` params, or plain ``L_p``."""

    besov: BesovParams | None = None
    p: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "p", parse_exponent(self.p))

    def batch(self, values: np.ndarray, grid: SpatialGrid, workers: int = 1) -> np.ndarray:
        vals = np.asarray(values).reshape((-1,) + grid.shape)
        if self.besov is None:
            return _lp(vals, self.p, grid.cell_volume, tuple(range(1, grid.dim + 1)))
        return besov_norm_batch(vals, grid, self.besov, workers)

    def __call__(self, f: GridFunction) -> float:
        return float(self.batch(f.values[None], f.grid)[0])

    def describe(self) -> dict:
        if self.besov is None:
            return {"kind": "lp", "p": "inf" if self.p == math.inf else self.p}
        return {"kind": "besov", **self.besov.to_dict()}


def default_norm() -> NormSpec:
    return NormSpec(BesovParams())


# -- operator and solver ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class EllipticProblem:
    kernels: KernelSet
    lam: SectorParameter
    rhs: GridFunction

    def __post_init__(self):
        if not isinstance(self.lam, SectorParameter):
            raise TypeError("lam must be a SectorParameter")
        if self.kernels.sector_angle + self.lam.angle_bound >= np.pi:
            raise ValueError(
                f"sector angles {self.kernels.sector_angle:.6g} + {self.lam.angle_bound:.6g} "
                "must stay below pi"
            )
        if self.kernels.dim != self.rhs.grid.dim:
            raise ValueError("kernel and right-hand side dimensions differ")


def _lattice_L(k: KernelSet, grid: SpatialGrid) -> np.ndarray:
    return np.asarray(eval_L(grid.lattice, k))


def term_symbols(k: KernelSet, grid: SpatialGrid, convolution: bool = True) -> list[np.ndarray]:
    """Per-term multipliers ``a_hat (i xi)^alpha``, or ``(i xi)^alpha`` without the convolution."""
    out = []
    for t in k.terms:
        sym = frac_power_symbol(grid.lattice, t.alpha)
        if convolution:
            sym = sym * t.symbol(grid.lattice)
        out.append(np.asarray(sym, dtype=complex))
    return out


def apply_operator(u: GridFunction, k: KernelSet) -> GridFunction:
    """``F^{-1}[L(xi) u_hat]``."""
    out = inverse(_lattice_L(k, u.grid) * forward(u.values))
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("operator output is not finite")
    return GridFunction(u.grid, out)


def _resolvent_multiplier(k: KernelSet, grid: SpatialGrid, lam: complex, L=None) -> np.ndarray:
    L = _lattice_L(k, grid) if L is None else L
    lam = complex(lam)
    if lam == 0:
        zero_ok = k.has_zero_order_term() and abs(complex(eval_L([0.0] * k.dim, k))) > 0
        if not zero_ok:
            raise DegeneratePointError([0.0] * k.dim, lam)
    s0, bad = _sigmas_from(L, [], lam, k.order, 0)
    if s0 is None:
        j = np.unravel_index(int(np.argmax(bad)), bad.shape)
        raise DegeneratePointError([x[j] for x in grid.lattice], lam)
    return s0


def solve_elliptic(p: EllipticProblem) -> GridFunction:
    """``u = F^{-1}[sigma_0 f_hat]`` with ``sigma_0 = 1 / (L + lambda)``."""
    s0 = _resolvent_multiplier(p.kernels, p.rhs.grid, p.lam.lam)
    return GridFunction(p.rhs.grid, inverse(s0 * forward(p.rhs.values)))


def resolvent_apply(k: KernelSet, f: GridFunction, lam) -> GridFunction:
    lam = lam.lam if isinstance(lam, SectorParameter) else complex(lam)
    s0 = _resolvent_multiplier(k, f.grid, lam)
    return GridFunction(f.grid, inverse(s0 * forward(f.values)))


def residual(u: GridFunction, f: GridFunction, k: KernelSet, lam) -> float:
    """``||(O + lambda) u - f||_2 / ||f||_2``."""
    lam = lam.lam if isinstance(lam, SectorParameter) else complex(lam)
    r = apply_operator(u, k).values + lam * u.values - f.values
    return l2_norm(r, f.grid) / l2_norm(f)


# -- coercivity ------------------------------------------------------------


@dataclass
class CoercivityRow:
    lambda_re: float
    lambda_im: float
    alpha_index: int | str
    scaled_term_norm: float
    u_norm_scaled: float
    total_ratio: float

    FIELDS = ("lambda_re", "lambda_im", "alpha_index", "scaled_term_norm",
              "u_norm_scaled", "total_ratio")

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.FIELDS}


@dataclass
class CoercivityReport:
    """Rows per (lambda, term); ``uniform`` iff max/min total ratio <= ``factor``."""

    rows: list[CoercivityRow]
    norm: dict
    factor: float
    errors: list[dict] = field(default_factory=list)

    def totals(self) -> list[tuple[complex, float]]:
        seen = {}
        for r in self.rows:
            seen.setdefault((r.lambda_re, r.lambda_im), r.total_ratio)
        return [(complex(a, b), v) for (a, b), v in seen.items()]

    @property
    def spread(self) -> float:
        vals = [v for _, v in self.totals()]
        if not vals or min(vals) <= 0:
            return math.inf
        return max(vals) / min(vals)

    @property
    def uniform(self) -> bool:
        return not self.errors and bool(self.rows) and self.spread <= self.factor


def _coercivity_rows(k, f, s, L, term_syms, norm, f_norm, f_hat):
    lam = s.lam
    s0 = _resolvent_multiplier(k, f.grid, lam, L)
    u_hat = s0 * f_hat
    fields = [inverse(u_hat)] + [inverse(sym * u_hat) for sym in term_syms]
    norms = norm.batch(np.stack(fields), f.grid)
    r = abs(lam)
    u_scaled = r * float(norms[0])
    scaled = [
        (r ** (1.0 - t.alpha.total / k.order)) * float(n) for t, n in zip(k.terms, norms[1:])
    ]
    total = (sum(scaled) + u_scaled) / f_norm
    return [
        CoercivityRow(lam.real, lam.imag, i, v, u_scaled, total) for i, v in enumerate(scaled)
    ]


def coercivity_report(k: KernelSet, f: GridFunction, lam_sweep: Sequence[SectorParameter],
                      norm: NormSpec | None = None, convolution: bool = True,
                      factor: float = 4.0, workers: int = 1) -> CoercivityReport:
    """Scaled term norms ``|lambda|^{1 - |alpha|/l} ||a_alpha * D^alpha u||_X`` per lambda.

    ``convolution=False`` drops the kernel and measures ``D^alpha u`` alone.
    Rows are ordered by ``|lambda|`` then ``arg lambda``; a failing solve is
    recorded in ``errors`` and the sweep continues.
    """
    norm = norm or default_norm()
    if not np.any(f.values):
        raise ValueError("right-hand side must be nonzero")
    sweep = sort_sweep(lam_sweep)
    for s in sweep:
        if s.angle_bound + k.sector_angle >= np.pi:
            raise ValueError("sector angles must satisfy phi1 + phi2 < pi")
    L = _lattice_L(k, f.grid)
    term_syms = term_symbols(k, f.grid, convolution)
    f_norm = norm(f)
    f_hat = forward(f.values)

    def one(s):
        try:
            return _coercivity_rows(k, f, s, L, term_syms, norm, f_norm, f_hat), None
        except (DegeneratePointError, FloatingPointError, ValueError) as exc:
            return [], {"lambda_re": s.lam.real, "lambda_im": s.lam.imag, "error": str(exc)}

    results = _map(one, sweep, workers)
    rows = [r for rs, _ in results for r in rs]
    errors = [e for _, e in results if e]
    desc = norm.describe() | {"variant": "convolution" if convolution else "derivative"}
    return CoercivityReport(rows, desc, factor, errors)


def _map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# -- resolvent checks ------------------------------------------------------


def resolvent_sweep(k: KernelSet, probes: Sequence[GridFunction],
                    lam_sweep: Sequence[SectorParameter], norm: NormSpec | None = None,
                    bound: float = 1.0 + 1e-6, workers: int = 1) -> SymbolReport:
    """``sup |lambda| ||(O + lambda)^{-1} f||_X / ||f||_X`` over probes x sweep.

    PASS iff every ratio is finite and the sup does not exceed ``bound``.
    """
    norm = norm or default_norm()
    probes = list(probes)
    if not probes:
        raise ValueError("empty probe set")
    for f in probes:
        if not np.any(f.values):
            raise ValueError("probes must be nonzero")
    sweep = sort_sweep(lam_sweep)
    pre = [(_lattice_L(k, f.grid), forward(f.values), norm(f)) for f in probes]

    def one(s):
        out = []
        for f, (L, f_hat, fn) in zip(probes, pre):
            s0 = _resolvent_multiplier(k, f.grid, s.lam, L)
            un = float(norm.batch(inverse(s0 * f_hat)[None], f.grid)[0])
            out.append(abs(s.lam) * un / fn)
        return out

    table = np.array(_map(one, sweep, workers))
    i, j = np.unravel_index(int(np.argmax(table)), table.shape)
    sup = float(table[i, j])
    lam = sweep[i].lam
    passed = bool(np.all(np.isfinite(table)) and sup <= bound)
    return SymbolReport(
        "resolvent_decay",
        sup,
        {"probe": int(j), "lambda": [lam.real, lam.imag]},
        passed,
        {"bound": bound, "per_probe_sup": table.max(axis=0).tolist(), "norm": norm.describe(),
         "table": table.tolist(), "sweep": [s.lam for s in sweep]},
    )


def resolvent_identity_residual(k: KernelSet, f: GridFunction, lam, mu) -> float:
    """Relative L2 defect of ``R(lam) - R(mu) = (mu - lam) R(lam) R(mu)`` applied to ``f``."""
    lam = lam.lam if isinstance(lam, SectorParameter) else complex(lam)
    mu = mu.lam if isinstance(mu, SectorParameter) else complex(mu)
    a = resolvent_apply(k, f, lam).values
    b = resolvent_apply(k, f, mu).values
    c = (mu - lam) * resolvent_apply(k, resolvent_apply(k, f, mu), lam).values
    scale = max(l2_norm(a - b, f.grid), l2_norm(c, f.grid), 1e-300)
    return l2_norm(a - b - c, f.grid) / scale


def separability_report(k: KernelSet, probes: Sequence[GridFunction],
                        norm: NormSpec | None = None) -> SymbolReport:
    """Ratio ``(sum_alpha ||a_alpha * D^alpha u||_X + ||u||_X) / ||O u + u||_X`` per probe.

    The report value is the max ratio; ``meta`` carries the ``[min, max]``
    window. PASS iff the window is finite with a positive lower end.
    """
    norm = norm or default_norm()
    probes = list(probes)
    if not probes:
        raise ValueError("empty probe set")
    ratios = []
    for u in probes:
        syms = term_symbols(k, u.grid, True)
        u_hat = forward(u.values)
        fields = [u.values] + [inverse(s * u_hat) for s in syms]
        fields.append(inverse((_lattice_L(k, u.grid) + 1.0) * u_hat))
        n = norm.batch(np.stack(fields), u.grid)
        ratios.append(float(n[:-1].sum() / n[-1]) if n[-1] > 0 else math.inf)
    ratios = np.array(ratios)
    lo, hi = float(ratios.min()), float(ratios.max())
    passed = bool(np.isfinite(hi) and lo > 0)
    return SymbolReport("separability_window", hi, {"probe": int(np.argmax(ratios))}, passed,
                        {"min": lo, "max": hi, "ratios": ratios.tolist()})
