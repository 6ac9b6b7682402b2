"""Run configuration: a sectioned key-value file read and written with configparser.

Schema (every key optional, defaults in :class:`RunConfig`)::

    [grid]     dim, n, cutoff          (cutoff = radius squared, or "none")
    [time]     T, steps, snapshot_stride
    [model]    lam, eps, noise
    [scheme]   name, renormalize, dealias, l2_projection, ito_correction
    [run]      seed, output_dir
    [initial]  kind, plus ansatz parameters (center, R, sign, q, ...)

Floats are written with ``repr`` so a write/read cycle is lossless. The noise
spec is a preset name or ``;``-separated terms:

    none                      no noise
    uniform                   one constant field e3
    const:a,b,c               constant field (a, b, c)
    mode:k1,k2,k3:a,b,c       (a, b, c) cos(2 pi k.x)
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .initial_data import KINDS, AnsatzSpec
from .integrator import SCHEMES, SchemeConfig
from .model import ModelParams
from .spectral import TWO_PI, SpectralCutoff, TorusGrid, VectorField

OUTPUT_ROOT_ENV = "SLLG_OUTPUT_ROOT"
NOISE_PRESETS = {"none": "", "uniform": "const:0.0,0.0,1.0"}

# (section, key) -> RunConfig attribute
_LAYOUT = {
    ("grid", "dim"): "dim",
    ("grid", "n"): "n",
    ("grid", "cutoff"): "cutoff",
    ("time", "T"): "T",
    ("time", "steps"): "steps",
    ("time", "snapshot_stride"): "snapshot_stride",
    ("model", "lam"): "lam",
    ("model", "eps"): "eps",
    ("model", "noise"): "noise",
    ("scheme", "name"): "scheme",
    ("scheme", "renormalize"): "renormalize",
    ("scheme", "dealias"): "dealias",
    ("scheme", "l2_projection"): "l2_projection",
    ("scheme", "ito_correction"): "ito_correction",
    ("run", "seed"): "seed",
    ("run", "output_dir"): "output_dir",
}
_BY_ATTR = {attr: key for key, attr in _LAYOUT.items()}


def parse_noise(spec: str, grid: TorusGrid) -> tuple:
    """Noise fields described by ``spec`` (see module docstring)."""
    spec = NOISE_PRESETS.get(spec.strip(), spec.strip())
    out = []
    for term in filter(None, (t.strip() for t in spec.split(";"))):
        head, _, rest = term.partition(":")
        try:
            if head == "const":
                vec = _floats(rest, 3)
                out.append(tuple(vec))
            elif head == "mode":
                kpart, _, apart = rest.partition(":")
                k = _floats(kpart, 3)
                amp = np.asarray(_floats(apart, 3))
                phase = TWO_PI * sum(kj * x for kj, x in zip(k, grid.coords()))
                out.append(VectorField(grid, amp.reshape((3,) + (1,) * grid.dim) * np.cos(phase)))
            else:
                raise ConfigError(f"unknown noise term {term!r}")
        except ValueError as exc:
            raise ConfigError(f"bad noise term {term!r}: {exc}") from exc
    return tuple(out)


def _floats(text: str, count: int) -> list:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != count:
        raise ConfigError(f"expected {count} comma-separated numbers, got {text!r}")
    return [float(p) for p in parts]


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        body = ",".join(_format_value(x) for x in v)
        return body + "," if len(v) == 1 else body
    return str(v)


def _parse_scalar(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


def _parse_param(text: str):
    if "," in text:
        return tuple(_parse_scalar(p) for p in text.split(",") if p.strip())
    return _parse_scalar(text)


def _parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    dim: int = 2
    n: int = 16
    cutoff: Optional[float] = None
    T: float = 0.1
    steps: int = 100
    snapshot_stride: int = 10
    lam: float = 1.0
    eps: float = 0.1
    noise: str = "uniform"
    scheme: str = "imex-heun"
    renormalize: bool = False
    dealias: bool = False
    l2_projection: bool = True
    ito_correction: bool = True
    seed: int = 0
    output_dir: str = "sllg-out"
    initial: AnsatzSpec = field(default_factory=AnsatzSpec)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ConfigError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 4 or self.n % 2:
            raise ConfigError(f"n must be an even integer >= 4, got {self.n}")
        if self.cutoff is not None and not self.cutoff > 0:
            raise ConfigError("cutoff radius squared must be positive")
        if not self.T >= 0 or not np.isfinite(self.T):
            raise ConfigError("T must be finite and nonnegative")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be >= 1")
        if not self.lam > 0 or not self.eps > 0:
            raise ConfigError("lam and eps must be positive")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.initial.kind not in KINDS:
            raise ConfigError(f"unknown initial kind {self.initial.kind!r}")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")

    # derived objects

    @property
    def dt(self) -> float:
        return self.T / self.steps

    def grid(self) -> TorusGrid:
        return TorusGrid(self.dim, self.n)

    def model_params(self, grid: Optional[TorusGrid] = None) -> ModelParams:
        grid = grid or self.grid()
        return ModelParams(self.lam, self.eps, parse_noise(self.noise, grid))

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(
            scheme=self.scheme,
            renormalize=self.renormalize,
            cutoff=None if self.cutoff is None else SpectralCutoff(self.cutoff),
            dealias=self.dealias,
            l2_projection=self.l2_projection,
            ito_correction=self.ito_correction,
        )

    def initial_field(self, grid: Optional[TorusGrid] = None) -> VectorField:
        grid = grid or self.grid()
        try:
            return self.initial.build(grid)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"cannot build initial data: {exc}") from exc

    def resolved_output_dir(self) -> Path:
        out = Path(self.output_dir)
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not out.is_absolute():
            out = Path(root) / out
        return out

    # serialization

    def to_dict(self) -> dict:
        d = asdict(self)
        d["initial"] = {"kind": self.initial.kind, "params": dict(self.initial.params)}
        return d

    def to_parser(self) -> configparser.ConfigParser:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for (section, key), attr in _LAYOUT.items():
            if not cp.has_section(section):
                cp.add_section(section)
            v = getattr(self, attr)
            cp.set(section, key, "none" if v is None else _format_value(v))
        cp.add_section("initial")
        cp.set("initial", "kind", self.initial.kind)
        for k in sorted(self.initial.params):
            cp.set("initial", k, _format_value(self.initial.params[k]))
        return cp

    def dumps(self) -> str:
        buf = io.StringIO()
        self.to_parser().write(buf)
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser) -> "RunConfig":
        kwargs = {}
        for section in cp.sections():
            if section == "initial":
                continue
            for key, text in cp.items(section):
                attr = _LAYOUT.get((section, key))
                if attr is None:
                    raise ConfigError(f"unknown config key [{section}] {key}")
                kwargs[attr] = text
        initial = AnsatzSpec()
        if cp.has_section("initial"):
            items = dict(cp.items("initial"))
            kind = items.pop("kind", "constant")
            try:
                initial = AnsatzSpec(kind, {k: _parse_param(v) for k, v in items.items()})
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return cls.from_strings(kwargs, initial)

    @classmethod
    def from_strings(cls, values: dict, initial: Optional[AnsatzSpec] = None) -> "RunConfig":
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for attr, text in values.items():
            kwargs[attr] = _convert(attr, types[attr], text)
        if initial is not None:
            kwargs["initial"] = initial
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return cls.from_parser(cp)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.loads(text)

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """Apply ``{"section.key": text}`` or ``{"attr": text}`` overrides.

        Keys under ``initial.`` set ansatz parameters (``initial.kind`` the kind).
        """
        plain = {}
        params = dict(self.initial.params)
        kind = self.initial.kind
        for key, text in overrides.items():
            if key.startswith("initial."):
                name = key.split(".", 1)[1]
                if name == "kind":
                    kind = text
                else:
                    params[name] = _parse_param(text)
                continue
            if "." in key:
                section, name = key.split(".", 1)
                attr = _LAYOUT.get((section, name))
            else:
                attr = key if key in _BY_ATTR else None
            if attr is None:
                raise ConfigError(f"unknown config key {key!r}")
            plain[attr] = text
        types = {f.name: f.type for f in fields(self)}
        converted = {a: _convert(a, types[a], t) for a, t in plain.items()}
        try:
            return replace(self, initial=AnsatzSpec(kind, params), **converted)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _convert(attr: str, typ, text):
    if not isinstance(text, str):
        return text
    t = text.strip()
    try:
        if attr == "cutoff":
            return None if t.lower() in ("", "none") else float(t)
        if typ in ("int", int):
            return int(t)
        if typ in ("float", float):
            return float(t)
        if typ in ("bool", bool):
            return _parse_bool(t)
    except ValueError as exc:
        raise ConfigError(f"bad value for {attr}: {text!r}") from exc
    return t
