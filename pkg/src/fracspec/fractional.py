"""Fractional power symbols and a quadrature Caputo derivative.

The spectral route ``F^{-1}[(i xi)^alpha F u]`` is what the solvers use. The
Caputo quadrature exists as an independent check of that route on test
functions that vanish identically near the left edge of the box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fracspec import _kernels
from fracspec.grid import GridFunction, forward, inverse


@dataclass(frozen=True)
class FractionalMultiIndex:
    """Per-axis derivative orders ``alpha = (alpha_1, ..., alpha_n)``."""

    orders: tuple[float, ...]

    def __post_init__(self):
        orders = tuple(float(a) for a in np.atleast_1d(self.orders))
        if not orders:
            raise ValueError("a multi-index needs at least one component")
        if any(not (a >= 0 and math.isfinite(a)) for a in orders):
            raise ValueError(f"orders must be finite and nonnegative, got {orders}")
        object.__setattr__(self, "orders", orders)

    @property
    def total(self) -> float:
        return float(sum(self.orders))

    @property
    def dim(self) -> int:
        return len(self.orders)

    def __add__(self, other: "FractionalMultiIndex") -> "FractionalMultiIndex":
        return FractionalMultiIndex(tuple(a + b for a, b in zip(self.orders, other.orders)))

    def __iter__(self):
        return iter(self.orders)


def as_multi_index(alpha) -> FractionalMultiIndex:
    if isinstance(alpha, FractionalMultiIndex):
        return alpha
    return FractionalMultiIndex(tuple(np.atleast_1d(alpha)))


_I_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


def _axis_power(xi: np.ndarray, a: float) -> np.ndarray:
    if a == 0:
        return np.ones_like(xi, dtype=complex)
    if float(a).is_integer():
        # exact integer powers: (i xi)^m = i^m xi^m
        m = int(a)
        return _I_POWERS[m % 4] * xi**m
    mag = np.abs(xi) ** a
    phase = 0.5 * np.pi * a * np.sign(xi)
    out = mag * (np.cos(phase) + 1j * np.sin(phase))
    return np.where(xi == 0, 0.0 + 0j, out)


def frac_power_symbol(xi: Sequence, alpha) -> np.ndarray | complex:
    """``(i xi)^alpha`` on the principal branch ``exp[a (ln|xi| + i pi/2 sgn xi)]``.

    ``xi`` is a sequence of per-axis coordinates (scalars or broadcastable
    arrays). A component with positive order and ``xi_k = 0`` makes the whole
    product zero; components with order zero contribute a factor 1.
    """
    alpha = as_multi_index(alpha)
    if len(xi) != alpha.dim:
        raise ValueError(f"xi has {len(xi)} components but alpha has {alpha.dim}")
    out = np.ones(np.broadcast_shapes(*(np.shape(x) for x in xi)), dtype=complex)
    for x, a in zip(xi, alpha):
        out = out * _axis_power(np.asarray(x, dtype=float), a)
    return out[()] if out.ndim == 0 else out


def gamma(x: float) -> float:
    """Gamma function for positive real arguments."""
    if not x > 0:
        raise ValueError(f"gamma is only defined here for x > 0, got {x}")
    return math.gamma(x)


def spectral_derivative(f: GridFunction, alpha, pad: int = 1) -> GridFunction:
    """``F^{-1}[(i xi)^alpha F f]`` on the grid of ``f``.

    With ``pad > 1`` every axis with positive order is zero-extended to the
    right to ``pad`` times its length before transforming and cropped back
    afterwards. That moves the periodic images ``pad`` box-lengths away, which
    is needed when the derivative of a compactly supported function has a
    slowly decaying tail (it does for every non-integer order).
    """
    alpha = as_multi_index(alpha)
    g = f.grid
    if alpha.dim != g.dim:
        raise ValueError(f"alpha has {alpha.dim} components, grid has dim {g.dim}")
    if pad < 1 or int(pad) != pad:
        raise ValueError("pad must be a positive integer")
    if pad == 1:
        sym = frac_power_symbol(g.lattice, alpha)
        return GridFunction(g, inverse(sym * forward(f.values)))
    shape = tuple(g.points * (pad if a > 0 else 1) for a in alpha)
    big = np.zeros(shape, dtype=complex)
    big[tuple(slice(0, g.points) for _ in shape)] = f.values
    axes_xi = []
    for n in shape:
        j = np.arange(-n // 2, n // 2)
        axes_xi.append(2.0 * np.pi * j / (n * g.spacing))
    mesh = np.meshgrid(*axes_xi, indexing="ij")
    out = inverse(frac_power_symbol(tuple(mesh), alpha) * forward(big))
    return GridFunction(g, out[tuple(slice(0, g.points) for _ in shape)])


@dataclass(frozen=True)
class CaputoSpec:
    """Order and lower limit of a Caputo derivative along one axis.

    ``smoothness_index`` is ``floor(order) + 1``; integer orders are rejected
    because the quadrature form then degenerates (see :func:`caputo_derivative`).
    ``lower_limit=None`` means the left edge of the box.
    """

    order: float
    lower_limit: float | None = None

    def __post_init__(self):
        a = float(self.order)
        if not a > 0 or not math.isfinite(a):
            raise ValueError(f"Caputo order must be positive, got {a}")
        if a.is_integer():
            raise ValueError(
                f"integer order {a} sits on the m-1 <= alpha < m boundary; "
                "use the spectral path for integer orders"
            )
        object.__setattr__(self, "order", a)

    @property
    def smoothness_index(self) -> int:
        return int(math.floor(self.order)) + 1


def _second_difference(f: np.ndarray, h: float) -> np.ndarray:
    g = np.empty_like(f)
    g[..., 1:-1] = (f[..., 2:] - 2.0 * f[..., 1:-1] + f[..., :-2]) / h**2
    g[..., 0] = (2.0 * f[..., 0] - 5.0 * f[..., 1] + 4.0 * f[..., 2] - f[..., 3]) / h**2
    g[..., -1] = (2.0 * f[..., -1] - 5.0 * f[..., -2] + 4.0 * f[..., -3] - f[..., -4]) / h**2
    return g


def nodal_derivative(f: np.ndarray, h: float, m: int) -> np.ndarray:
    """m-th derivative along the last axis by second-order finite differences."""
    g = f
    for _ in range(m // 2):
        g = _second_difference(g, h)
    if m % 2:
        g = np.gradient(g, h, axis=-1, edge_order=2)
    return g


def caputo_weights(n: int, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """Product-integration weights for the kernel ``s^(mu-1)`` on unit cells.

    Integrating ``s^(mu-1)`` against the linear interpolant on cell
    ``[k-1, k]`` (``s`` = distance from the evaluation node in cell units)
    gives a weight ``far[k-1]`` for the node at distance ``k`` and ``near``
    for the node at distance ``k-1``. Returns ``(conv, far)`` with
    ``conv[0] = near(1)`` and ``conv[k] = far(k) + near(k+1)``.
    """
    k = np.arange(1, n + 1, dtype=float)
    A = (k**mu - (k - 1.0) ** mu) / mu
    B = (k ** (mu + 1.0) - (k - 1.0) ** (mu + 1.0)) / (mu + 1.0)
    far = B - (k - 1.0) * A
    near = k * A - B
    conv = np.empty(n)
    conv[0] = near[0]
    conv[1:] = far[:-1] + near[1:]
    return conv, far


def caputo_derivative(f: GridFunction, axis: int, spec: CaputoSpec) -> GridFunction:
    """Caputo derivative of order ``spec.order`` along ``axis`` from the box's left edge.

    ``f^(m)`` is taken by second-order central differences at the nodes and
    integrated against ``(x - tau)^(m - alpha - 1) / Gamma(m - alpha)`` with
    weights that are exact for piecewise-linear ``f^(m)``, so the weak
    singularity at ``tau = x`` is integrated analytically cell by cell.
    """
    g = f.grid
    if not 0 <= axis < g.dim:
        raise ValueError(f"axis {axis} out of range for dim {g.dim}")
    a = g.nodes[0]
    if spec.lower_limit is not None and not np.isclose(spec.lower_limit, a):
        raise ValueError(
            f"lower limit {spec.lower_limit} must be the left box edge {a}"
        )
    m = spec.smoothness_index
    if g.points < 2 * m + 3:
        raise ValueError(f"{g.points} nodes are too few for a derivative of order {m}")
    mu = m - spec.order
    vals = np.moveaxis(f.values, axis, -1)
    rows = vals.reshape(-1, g.points)
    dm = nodal_derivative(rows, g.spacing, m)
    conv, far = caputo_weights(g.points, mu)
    integral = _kernels.caputo_rows(dm, conv, far)
    out = g.spacing**mu / gamma(mu) * integral
    out = np.moveaxis(out.reshape(vals.shape), -1, axis)
    return GridFunction(g, out)
