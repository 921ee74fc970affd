"""Flat JSON experiment configuration.

Every key is optional except ``command``. Keys and defaults are the fields
of :class:`ExperimentConfig`; unknown keys are rejected so typos surface as
errors instead of silently falling back to defaults.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fracspec.besov import BesovParams
from fracspec.grid import SpatialGrid
from fracspec.kernels import kernel_from_spec, parse_kernel_file
from fracspec.probes import probe_generator
from fracspec.symbols import KernelSet, SectorParameter, default_lambda_sweep

COMMANDS = (
    "solve-elliptic",
    "solve-parabolic",
    "analyze-symbol",
    "besov-norm",
    "verify-coercivity",
    "verify-resolvent",
    "verify-embedding",
)


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass
class ExperimentConfig:
    command: str
    # grid
    dim: int = 1
    radius: float = math.pi
    points: int = 256
    # kernel: builtin spec such as "gauss_conv(-1, 1)", or a kernel file
    kernel: str = "neg_laplace"
    kernel_file: str | None = None
    sector_angle: float | None = None
    # spatial Besov norm; norm = "lp" switches reports to plain L_p
    norm: str = "besov"
    s: float | list = 0.5
    p: float | str = 2.0
    q: float | str = 2.0
    m: int | list | None = None
    k: int | list | None = None
    h0: float = 1.0
    y_samples: int = 64
    # lambda sweep: 10^d for d in lambda_decades, times lambda_args (default 0, +-phi2/2, +-phi2)
    phi2: float = math.pi / 2 - 0.1
    lambda_decades: list = field(default_factory=lambda: [-2, -1, 0, 1, 2, 3, 4])
    lambda_args: list | None = None
    lam: list | None = None
    # probes: "mode 1", "bump(0, 1)", "random_bandlimited(seed, cutoff)", "constant"
    probes: list = field(default_factory=lambda: ["mode 1"])
    seed: int = 0
    # thresholds
    factor: float = 4.0
    bound: float = 1.0 + 1e-6
    residual_tol: float = 1e-10
    identity_tol: float = 1e-9
    mikhlin_lambdas: list = field(default_factory=lambda: [[1.0, 0.0], [0.0, 1.0]])
    refine: bool = True
    variant: str = "convolution"
    # parabolic
    horizon: float = 1.0
    steps: int = 128
    time_profile: str = "constant"
    forcing_dir: str | None = None
    time_s: float = 0.5
    time_p: float | str = 2.0
    time_q: float | str = 2.0
    time_m: int = 2
    time_h0: float = 1.0
    parabolic_bound: float = 10.0
    # embedding
    alpha: list = field(default_factory=lambda: [1.0])
    order: float = 2.0
    p1: float | str = 2.0
    mu: list = field(default_factory=lambda: [0.0, 0.4])
    h_sweep: list | None = None

    # -- parsing -----------------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None,
                  command: str | None = None) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        for key in d:
            if key not in names:
                raise ConfigError(key, "unknown key")
        if command is not None:
            if d.setdefault("command", command) != command:
                raise ConfigError("command", f"config says {d['command']!r}, CLI says {command!r}")
        if "command" not in d:
            raise ConfigError("command", "missing")
        try:
            cfg = cls(**d)
        except TypeError as exc:
            raise ConfigError("<root>", str(exc)) from exc
        cfg._base = base_dir or Path.cwd()
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out["lambda" if f.name == "lam" else f.name] = v
        return out

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()

    # -- validation --------------------------------------------------------

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
        _wrap("dim/radius/points", self.grid)
        _wrap("s/p/q/m/k/h0", self.besov)
        if self.norm not in ("besov", "lp"):
            raise ConfigError("norm", "must be 'besov' or 'lp'")
        if self.variant not in ("convolution", "derivative"):
            raise ConfigError("variant", "must be 'convolution' or 'derivative'")
        if not 0 <= self.phi2 < math.pi:
            raise ConfigError("phi2", "must lie in [0, pi)")
        if self.kernel_file is not None and not self.kernel_path.is_file():
            raise ConfigError("kernel_file", f"{self.kernel_path} does not exist")
        if self.forcing_dir is not None and not self.forcing_path.is_dir():
            raise ConfigError("forcing_dir", f"{self.forcing_path} is not a directory")
        if not isinstance(self.probes, list) or not self.probes:
            raise ConfigError("probes", "must be a nonempty list of probe specs")
        kset = _wrap("kernel" if self.kernel_file is None else "kernel_file", self.kernels)
        if kset.sector_angle + self.phi2 >= math.pi:
            raise ConfigError("phi2", f"phi1 + phi2 = {kset.sector_angle + self.phi2:.6g} must be < pi")
        _wrap("lambda_decades/lambda_args", self.sweep)
        if self.lam is not None:
            _wrap("lambda", self.single_lambda)
        for i, lm in enumerate(self.mikhlin_lambdas):
            if len(lm) != 2:
                raise ConfigError(f"mikhlin_lambdas[{i}]", "expected [re, im]")
        if self.command in ("solve-parabolic",):
            if not self.horizon > 0:
                raise ConfigError("horizon", "must be positive")
            if int(self.steps) != self.steps or self.steps < 2:
                raise ConfigError("steps", "must be an integer >= 2")
            _wrap("time_s/time_p/time_q/time_m/time_h0", self.time_besov)
        if int(self.y_samples) < 2:
            raise ConfigError("y_samples", "must be >= 2")

    # -- derived objects ---------------------------------------------------

    @property
    def base_dir(self) -> Path:
        return getattr(self, "_base", Path.cwd())

    @property
    def kernel_path(self) -> Path:
        p = Path(self.kernel_file)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def forcing_path(self) -> Path:
        p = Path(self.forcing_dir)
        return p if p.is_absolute() else self.base_dir / p

    def grid(self, refine: int = 1) -> SpatialGrid:
        return SpatialGrid(int(self.dim), float(self.radius), int(self.points) * refine)

    def besov(self) -> BesovParams:
        return BesovParams(s=self.s, p=self.p, q=self.q, m=self.m, k=self.k, h0=self.h0,
                           samples=self.y_samples)

    def time_besov(self) -> BesovParams:
        return BesovParams(s=self.time_s, p=self.time_p, q=self.time_q, m=self.time_m, k=0,
                           h0=self.time_h0, samples=self.y_samples)

    def kernels(self) -> KernelSet:
        if self.kernel_file is not None:
            kset = parse_kernel_file(self.kernel_path)
            if kset.dim != self.dim:
                raise ValueError(f"kernel file has dimension {kset.dim}, config dim is {self.dim}")
        else:
            kset = kernel_from_spec(self.kernel, int(self.dim))
        if self.sector_angle is not None:
            kset = kset.with_sector_angle(float(self.sector_angle))
        return kset

    def sweep(self) -> list[SectorParameter]:
        return default_lambda_sweep(self.phi2, [float(d) for d in self.lambda_decades],
                                    None if self.lambda_args is None
                                    else [float(a) for a in self.lambda_args])

    def single_lambda(self) -> SectorParameter:
        re, im = (float(v) for v in self.lam)
        return SectorParameter(complex(re, im), self.phi2)

    def probe_functions(self, grid: SpatialGrid | None = None):
        grid = grid or self.grid()
        out = []
        for i, spec in enumerate(self.probes):
            try:
                if spec.strip() == "random_bandlimited":
                    spec = f"random_bandlimited({self.seed}, 8)"
                out.append((spec, probe_generator(spec, grid)))
            except ValueError as exc:
                raise ConfigError(f"probes[{i}]", str(exc)) from exc
        return out


def _wrap(name, fn):
    try:
        return fn()
    except (ValueError, TypeError, FileNotFoundError) as exc:
        raise ConfigError(name, str(exc)) from exc


def load_config(path, command: str | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("--config", f"{path} does not exist")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(data, base_dir=path.parent, command=command)


def json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _finite(o):
    # JSON has no inf/nan; write them as strings
    if isinstance(o, float) and not math.isfinite(o):
        return "inf" if o > 0 else ("-inf" if o < 0 else "nan")
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    return o


def dumps(obj) -> str:
    return json.dumps(_finite(json.loads(json.dumps(obj, default=json_default,
                                                      allow_nan=True))),
                      indent=2, sort_keys=True) + "\n"
