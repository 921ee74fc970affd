"""Deterministic test functions on a grid."""

from __future__ import annotations

import numpy as np

from fracspec.grid import GridFunction, SpatialGrid, inverse, sample_closure
from fracspec.kernels import parse_call

PROBE_KINDS = ("mode", "bump", "random_bandlimited", "constant")


def mode(grid: SpatialGrid, k: int = 1) -> GridFunction:
    """``cos(k x_1)``; ``k = 0`` is the constant 1."""
    return sample_closure(grid, lambda *x: np.cos(k * x[0]))


def bump(grid: SpatialGrid, center=0.0, width: float = 1.0) -> GridFunction:
    """Radial ``exp(-1 / (1 - |x - c|^2 / w^2))`` inside the ball, 0 outside.

    The support must stay at least ``0.1 R`` away from the box faces.
    """
    c = np.broadcast_to(np.asarray(center, dtype=float), (grid.dim,))
    if not width > 0:
        raise ValueError("bump width must be positive")
    margin = 0.1 * grid.radius
    if np.any(np.abs(c) + width > grid.radius - margin):
        raise ValueError(
            f"bump(center={c.tolist()}, width={width}) comes within {margin:.3g} of the box edge"
        )

    def rule(*x):
        r2 = sum((xi - ci) ** 2 for xi, ci in zip(x, c)) / width**2
        inside = r2 < 1.0
        out = np.zeros_like(r2)
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out

    return sample_closure(grid, rule)


def random_bandlimited(grid: SpatialGrid, seed: int = 0, cutoff: int = 8) -> GridFunction:
    """Real part of a random trigonometric polynomial with lattice indices ``|j_k| <= cutoff``."""
    if cutoff < 0 or cutoff >= grid.points // 2:
        raise ValueError(f"cutoff must lie in [0, {grid.points // 2 - 1}]")
    rng = np.random.default_rng(seed)
    j = np.arange(-grid.points // 2, grid.points // 2)
    keep = np.abs(j) <= cutoff
    mask = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.points
        mask = mask & keep.reshape(shape)
    coef = np.zeros(grid.shape, dtype=complex)
    count = int(mask.sum())
    coef[mask] = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    return GridFunction(grid, inverse(coef).real)


def probe_generator(kind: str, grid: SpatialGrid, *params) -> GridFunction:
    """Dispatch by name: ``mode k``, ``bump(center, width)``, ``random_bandlimited(seed, cutoff)``.

    ``kind`` may also carry its parameters, as in ``"bump(0, 1)"`` or ``"mode 2"``.
    """
    kind = kind.strip()
    if not params:
        if kind.startswith("mode") and "(" not in kind:
            rest = kind[4:].strip()
            kind, params = "mode", ((float(rest),) if rest else ())
        else:
            kind, params = parse_call(kind)
    if kind == "mode":
        k = params[0] if params else 1
        if float(k) != int(k):
            raise ValueError("mode number must be an integer")
        return mode(grid, int(k))
    if kind == "constant":
        return mode(grid, 0)
    if kind == "bump":
        return bump(grid, *params)
    if kind == "random_bandlimited":
        seed, cutoff = (list(params) + [0, 8][len(params):])[:2]
        return random_bandlimited(grid, int(seed), int(cutoff))
    raise ValueError(f"unknown probe kind {kind!r}; known: {', '.join(PROBE_KINDS)}")
