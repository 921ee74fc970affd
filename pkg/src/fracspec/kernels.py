"""Built-in kernel sets and the plain-text kernel file format.

Kernel file, one directive per line (``#`` starts a comment)::

    order: 2                      # optional; default max |alpha|
    sector_angle: 0.0             # optional; default 0
    alpha: 2 ; symbol: delta(-1)
    alpha: 2 ; symbol: gauss(-1, 1)
    alpha: 0 ; symbol: expdecay(0.5, 1)
    alpha: 1 ; symbol: profile.csv   # radial table with columns r,re,im

Table paths are resolved relative to the kernel file.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np

from fracspec.fractional import FractionalMultiIndex
from fracspec.grid import SpatialGrid
from fracspec.symbols import (
    ConstantSymbol,
    ExpDecaySymbol,
    GaussSymbol,
    KernelSet,
    KernelTerm,
    PhaseSymbol,
    TableSymbol,
    check_sector_condition,
)

BUILTIN_NAMES = ("neg_laplace", "frac_laplace", "gauss_conv", "expdecay_conv", "bad_sign")

_CALL = re.compile(r"^\s*([A-Za-z_][\w]*)\s*(?:\((.*)\))?\s*$")


def parse_call(text: str) -> tuple[str, list[float]]:
    """``"gauss_conv(-1, 1)"`` -> ``("gauss_conv", [-1.0, 1.0])``."""
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"cannot parse {text!r} as name(params)")
    name, args = m.group(1), m.group(2)
    params = []
    if args and args.strip():
        try:
            params = [float(a) for a in args.split(",")]
        except ValueError as exc:
            raise ValueError(f"non-numeric parameter in {text!r}") from exc
    return name, params


def _axis_alpha(dim, k, order):
    return FractionalMultiIndex(tuple(order if i == k else 0.0 for i in range(dim)))


def default_check_grid(dim: int) -> SpatialGrid:
    return SpatialGrid(dim, np.pi, 128 if dim < 3 else 32)


def builtin_kernel(name: str, dim: int = 1, params=(), validate: bool = True) -> KernelSet:
    """Named kernel set; non-``bad_`` kernels are checked on the default lattice.

    - ``neg_laplace``: ``alpha = 2 e_k``, ``a_hat = -1``; ``L = |xi|^2``
    - ``frac_laplace(beta)``: ``alpha = beta e_k`` with a phase symbol; ``L = sum |xi_k|^beta``
    - ``gauss_conv(c, w)``: ``neg_laplace`` plus ``alpha = 2 e_k``, ``a_hat = c exp(-w|xi|^2)``
    - ``expdecay_conv(c, w)``: ``neg_laplace`` plus a zero-order term ``c exp(-w|xi|)``
    - ``bad_sign``: ``alpha = 2 e_k``, ``a_hat = +1``; ``L = -|xi|^2`` leaves every sector
      narrower than pi
    """
    params = list(params)
    base = [KernelTerm(_axis_alpha(dim, k, 2.0), ConstantSymbol(-1.0)) for k in range(dim)]

    def want(count):
        if len(params) != count:
            raise ValueError(f"{name} takes {count} parameter(s), got {len(params)}")

    if name == "neg_laplace":
        want(0)
        kset = KernelSet(2.0, tuple(base), 0.0, name)
    elif name == "frac_laplace":
        want(1)
        beta = params[0]
        if not beta > 0:
            raise ValueError("frac_laplace order must be positive")
        terms = [KernelTerm(_axis_alpha(dim, k, beta), PhaseSymbol(beta, k)) for k in range(dim)]
        kset = KernelSet(beta, tuple(terms), 0.0, f"frac_laplace({beta!r})")
    elif name == "gauss_conv":
        want(2)
        c, w = params
        extra = [KernelTerm(_axis_alpha(dim, k, 2.0), GaussSymbol(c, w)) for k in range(dim)]
        kset = KernelSet(2.0, tuple(base + extra), 0.0, f"gauss_conv({c!r}, {w!r})")
    elif name == "expdecay_conv":
        want(2)
        c, w = params
        zero = FractionalMultiIndex((0.0,) * dim)
        kset = KernelSet(2.0, tuple(base + [KernelTerm(zero, ExpDecaySymbol(c, w))]), 0.0,
                         f"expdecay_conv({c!r}, {w!r})")
    elif name == "bad_sign":
        want(0)
        terms = [KernelTerm(_axis_alpha(dim, k, 2.0), ConstantSymbol(1.0)) for k in range(dim)]
        return KernelSet(2.0, tuple(terms), np.pi / 2, name)
    else:
        raise ValueError(f"unknown builtin kernel {name!r}; known: {', '.join(BUILTIN_NAMES)}")
    if validate:
        rep = check_sector_condition(kset, default_check_grid(dim))
        if not rep.passed:
            raise ValueError(
                f"{kset.name} fails the sector/lower-bound check "
                f"(C*={rep.value:.3g}, max |arg L|={rep.meta['max_abs_arg']:.3g})"
            )
    return kset


def kernel_from_spec(spec: str, dim: int = 1) -> KernelSet:
    """Builtin kernel from a call-like string such as ``"gauss_conv(-1, 1)"``."""
    name, params = parse_call(spec)
    return builtin_kernel(name, dim, params)


def read_radial_table(path) -> TableSymbol:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["r", "re", "im"]:
        raise ValueError(f"{path}: table header must be r,re,im")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric table entry") from exc
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError(f"{path}: expected three columns")
    return TableSymbol(data[:, 0], data[:, 1] + 1j * data[:, 2], source=str(path))


def _symbol_from_text(text: str, base: Path):
    text = text.strip()
    m = _CALL.match(text)
    if m and m.group(2) is not None:
        name, params = parse_call(text)
        if name == "delta" and len(params) == 1:
            return ConstantSymbol(params[0])
        if name == "gauss" and len(params) == 2:
            return GaussSymbol(*params)
        if name == "expdecay" and len(params) == 2:
            return ExpDecaySymbol(*params)
        raise ValueError(f"unknown symbol {text!r}; use delta(c), gauss(c, w), expdecay(c, w)")
    path = (base / text) if not Path(text).is_absolute() else Path(text)
    if not path.is_file():
        raise FileNotFoundError(f"symbol table {path} not found")
    return read_radial_table(path)


def parse_kernel_file(path) -> KernelSet:
    """Read a :class:`KernelSet` from the text format described in the module docstring."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"kernel file {path} not found")
    order = None
    angle = 0.0
    terms = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            fields = {}
            for part in line.split(";"):
                key, sep, val = part.partition(":")
                if not sep:
                    raise ValueError(f"expected 'key: value', got {part.strip()!r}")
                fields[key.strip().lower()] = val.strip()
            if set(fields) == {"order"}:
                order = float(fields["order"])
            elif set(fields) == {"sector_angle"}:
                angle = float(fields["sector_angle"])
            elif set(fields) == {"alpha", "symbol"}:
                alpha = FractionalMultiIndex(tuple(float(a) for a in fields["alpha"].split(",")))
                terms.append(KernelTerm(alpha, _symbol_from_text(fields["symbol"], path.parent)))
            else:
                raise ValueError(f"unrecognised keys {sorted(fields)}")
        except (ValueError, FileNotFoundError) as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if not terms:
        raise ValueError(f"{path}: no 'alpha: ... ; symbol: ...' lines")
    if order is None:
        order = max(t.alpha.total for t in terms)
    return KernelSet(order, tuple(terms), angle, path.stem)
