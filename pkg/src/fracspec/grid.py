"""Periodic box discretisation, sample containers and the unitary DFT pair.

The box is ``[-R, R)^n`` sampled at ``x_j = -R + 2 R j / N``. Its frequency
lattice is ``xi_j = (pi / R) j`` for ``j = -N/2, ..., N/2 - 1``, stored in
ascending order. Spectra are the orthonormal DFT of the node samples
(``norm="ortho"``), so the discrete l2 norm is preserved exactly and
multiplier operators act diagonally on the stored coefficients.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on ``[-radius, radius)^dim`` with ``points`` nodes per axis."""

    dim: int
    radius: float
    points: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not self.radius > 0 or not np.isfinite(self.radius):
            raise ValueError(f"radius must be positive, got {self.radius}")
        if int(self.points) != self.points or self.points < 8 or self.points % 2:
            raise ValueError(f"points must be an even integer >= 8, got {self.points}")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points**self.dim

    @property
    def spacing(self) -> float:
        return 2.0 * self.radius / self.points

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def frequency_spacing(self) -> float:
        return np.pi / self.radius

    @cached_property
    def nodes(self) -> np.ndarray:
        """1-D node coordinates shared by every axis."""
        return -self.radius + self.spacing * np.arange(self.points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """1-D ascending frequency lattice shared by every axis."""
        j = np.arange(-self.points // 2, self.points // 2)
        return self.frequency_spacing * j

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.nodes] * self.dim), indexing="ij"))

    @cached_property
    def lattice(self) -> tuple[np.ndarray, ...]:
        """Frequency lattice as a tuple of ``dim`` arrays of shape ``self.shape``."""
        return tuple(np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij"))

    def refined(self, factor: int = 2) -> "SpatialGrid":
        """Same box, ``factor`` times more nodes per axis."""
        return SpatialGrid(self.dim, self.radius, self.points * factor)


def make_grid(dim: int, radius: float, points: int) -> SpatialGrid:
    return SpatialGrid(dim, radius, points)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples of a function at the nodes of ``grid``."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.size != self.grid.size:
            raise ValueError(
                f"expected {self.grid.size} samples for {self.grid}, got {vals.size}"
            )
        vals = _frozen(vals.reshape(self.grid.shape))
        if not np.all(np.isfinite(vals)):
            raise ValueError("GridFunction values must be finite")
        object.__setattr__(self, "values", vals)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectrumFunction:
    """Orthonormal DFT coefficients on the ascending frequency lattice of ``grid``."""

    grid: SpatialGrid
    coefficients: np.ndarray

    def __post_init__(self):
        coef = np.asarray(self.coefficients)
        if coef.size != self.grid.size:
            raise ValueError(
                f"expected {self.grid.size} coefficients for {self.grid}, got {coef.size}"
            )
        object.__setattr__(self, "coefficients", _frozen(coef.reshape(self.grid.shape)))


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("grid functions live on different grids")


def forward(values: np.ndarray, axes=None) -> np.ndarray:
    """Orthonormal DFT of node samples, shifted to ascending frequency order."""
    return np.fft.fftshift(np.fft.fftn(values, axes=axes, norm="ortho"), axes=axes)


def inverse(coefficients: np.ndarray, axes=None) -> np.ndarray:
    return np.fft.ifftn(np.fft.ifftshift(coefficients, axes=axes), axes=axes, norm="ortho")


def dft(f: GridFunction | SpectrumFunction, direction: str = "forward"):
    """Unitary DFT pair between :class:`GridFunction` and :class:`SpectrumFunction`."""
    if direction == "forward":
        if not isinstance(f, GridFunction):
            raise TypeError("forward transform expects a GridFunction")
        return SpectrumFunction(f.grid, forward(f.values))
    if direction == "inverse":
        if not isinstance(f, SpectrumFunction):
            raise TypeError("inverse transform expects a SpectrumFunction")
        return GridFunction(f.grid, inverse(f.coefficients))
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def apply_multiplier(f: GridFunction, multiplier: np.ndarray) -> GridFunction:
    """``F^{-1}[multiplier * F f]`` with ``multiplier`` sampled on ``f.grid.lattice``."""
    out = inverse(np.asarray(multiplier) * forward(f.values))
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("multiplier produced non-finite values")
    return GridFunction(f.grid, out)


def sample_closure(grid: SpatialGrid, rule: Callable[..., np.ndarray]) -> GridFunction:
    """Evaluate ``rule(x_1, ..., x_n)`` on the node mesh.

    ``rule`` receives one coordinate array per axis and must broadcast.
    """
    vals = np.broadcast_to(np.asarray(rule(*grid.coords), dtype=complex), grid.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        where = tuple(int(i[0]) for i in np.nonzero(bad))
        raise ValueError(f"rule is not finite at node index {where}")
    return GridFunction(grid, vals)


def l2_norm(f: GridFunction | np.ndarray, grid: SpatialGrid | None = None) -> float:
    """Discrete L2 norm with the cell volume as quadrature weight."""
    if isinstance(f, GridFunction):
        grid, f = f.grid, f.values
    return float(np.sqrt(grid.cell_volume * np.sum(np.abs(f) ** 2)))


def relative_l2(a: GridFunction, b: GridFunction) -> float:
    """``||a - b|| / ||b||`` in the discrete L2 norm."""
    _check_same_grid(a, b)
    return l2_norm(a.values - b.values, a.grid) / l2_norm(b)


# -- serialisation ---------------------------------------------------------


def write_csv(f: GridFunction, path) -> None:
    """CSV with columns ``index_0..index_{n-1}, re, im`` in row-major order."""
    n = f.grid.dim
    idx = np.indices(f.grid.shape).reshape(n, -1).T
    vals = f.values.ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"index_{i}" for i in range(n)] + ["re", "im"])
        for ind, v in zip(idx, vals):
            w.writerow([*map(int, ind), repr(float(v.real)), repr(float(v.imag))])


def read_csv(path, radius: float) -> GridFunction:
    """Inverse of :func:`write_csv`; the box radius is not stored in the CSV."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        n = sum(1 for h in header if h.startswith("index_"))
        if header != [f"index_{i}" for i in range(n)] + ["re", "im"] or n == 0:
            raise ValueError(f"{path}: unexpected CSV header {header}")
        rows = [row for row in r if row]
    data = np.array(rows, dtype=float)
    idx = data[:, :n].astype(int)
    points = int(idx.max()) + 1
    grid = SpatialGrid(n, radius, points)
    vals = np.full(grid.shape, np.nan, dtype=complex)
    vals[tuple(idx.T)] = data[:, n] + 1j * data[:, n + 1]
    if np.isnan(vals).any():
        raise ValueError(f"{path}: missing samples")
    return GridFunction(grid, vals)


def write_binary(f: GridFunction, path) -> None:
    """Text header ``"n N R\\n"`` followed by little-endian interleaved re/im float64."""
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(f"{g.dim} {g.points} {g.radius!r}\n".encode("ascii"))
        fh.write(f.values.ravel().astype("<c16").tobytes())


def read_binary(path) -> GridFunction:
    raw = Path(path).read_bytes()
    head, _, body = raw.partition(b"\n")
    n, N, R = head.decode("ascii").split()
    grid = SpatialGrid(int(n), float(R), int(N))
    vals = np.frombuffer(body, dtype="<c16")
    return GridFunction(grid, vals)
