"""Spectral solvers and numerical checks for nonlocal fractional elliptic and parabolic equations."""

__version__ = "0.1.0"

from fracspec.grid import (  # noqa: E402
    GridFunction,
    SpatialGrid,
    SpectrumFunction,
    dft,
    make_grid,
    sample_closure,
)
from fracspec.fractional import (  # noqa: E402
    CaputoSpec,
    FractionalMultiIndex,
    caputo_derivative,
    frac_power_symbol,
    gamma,
    spectral_derivative,
)
from fracspec.symbols import (  # noqa: E402
    KernelSet,
    SectorParameter,
    SymbolReport,
    eval_L,
    eval_sigma,
    sector_membership,
)
from fracspec.kernels import builtin_kernel, parse_kernel_file  # noqa: E402
from fracspec.besov import BesovParams, MixedFunction, besov_norm, mixed_norm  # noqa: E402
from fracspec.elliptic import EllipticProblem, apply_operator, solve_elliptic  # noqa: E402
from fracspec.parabolic import ParabolicProblem, duhamel_solve, semigroup_apply  # noqa: E402

__all__ = [
    "BesovParams", "CaputoSpec", "EllipticProblem", "FractionalMultiIndex", "GridFunction",
    "KernelSet", "MixedFunction", "ParabolicProblem", "SectorParameter", "SpatialGrid",
    "SpectrumFunction", "SymbolReport", "apply_operator", "besov_norm", "builtin_kernel",
    "caputo_derivative", "dft", "duhamel_solve", "eval_L", "eval_sigma", "frac_power_symbol",
    "gamma", "make_grid", "mixed_norm", "parse_kernel_file", "sample_closure",
    "sector_membership", "semigroup_apply", "solve_elliptic", "spectral_derivative",
]
