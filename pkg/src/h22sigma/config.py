"""Experiment configuration: TOML file with [model], [run], [quadrature], [output] tables."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .exact import QuadratureSpec, default_spec
from .lattice import Lattice
from .model import ModelParams, PinningScheme


class ConfigError(ValueError):
    pass


@dataclass
class ModelBlock:
    extents: list = field(default_factory=lambda: [16])
    bc: str = "neumann"
    beta: float = 0.05
    pinning: str = "two_point"
    eps: list = field(default_factory=lambda: [1.0, 1.0])
    sites: list | None = None
    d: int | None = None


@dataclass
class RunBlock:
    seed: int = 0
    chains: int = 4
    sweeps: int = 200_000
    burn_in: int | None = None
    proposal_sigma: float = 1.0
    tune: bool = False
    workers: int = 1


@dataclass
class QuadratureBlock:
    T: float | None = None
    panels: int | None = None
    order: int | None = None


@dataclass
class OutputBlock:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["csv", "json"])


@dataclass
class ExperimentConfig:
    model: ModelBlock = field(default_factory=ModelBlock)
    run: RunBlock = field(default_factory=RunBlock)
    quadrature: QuadratureBlock = field(default_factory=QuadratureBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # -- derived objects -------------------------------------------------
    def lattice(self) -> Lattice:
        return Lattice(tuple(self.model.extents), self.model.bc)

    def pinning(self) -> PinningScheme:
        m = self.model
        n = self.lattice().n_sites
        if m.pinning == "uniform":
            return PinningScheme.uniform(m.eps[0])
        if m.pinning == "two_point":
            sites = m.sites if m.sites is not None else [0, n - 1]
            return PinningScheme.two_point(sites[0], m.eps[0], sites[1], m.eps[1])
        sites = m.sites if m.sites is not None else [0]
        return PinningScheme.single(sites[0], m.eps[0])

    def params(self) -> ModelParams:
        return ModelParams(self.model.beta, self.lattice(), self.pinning())

    def quadrature_spec(self, params: ModelParams) -> QuadratureSpec:
        q = self.quadrature
        base = default_spec(params)
        return QuadratureSpec(q.T or base.T, q.panels or base.panels, q.order or base.order)


_BLOCKS = {f.name: f.default_factory for f in fields(ExperimentConfig)}


def _coerce_block(name: str, raw: dict):
    cls = type(_BLOCKS[name]())
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    return cls(**raw)


def from_dict(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - set(_BLOCKS)
    if unknown:
        raise ConfigError(f"unknown table(s): {', '.join(sorted(unknown))}")
    cfg = ExperimentConfig(**{name: _coerce_block(name, raw.get(name, {})) for name in _BLOCKS})
    validate(cfg)
    return cfg


def load(path: str | None, overrides: list[str] = ()) -> ExperimentConfig:
    raw: dict = {}
    if path:
        with open(path, "rb") as fh:
            try:
                raw = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
    raw = copy.deepcopy(raw)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"override {item!r} is not of the form table.key=value")
        table, name = key.split(".", 1)
        try:
            parsed = tomllib.loads(f"v = {value}")["v"]
        except tomllib.TOMLDecodeError:
            parsed = value
        raw.setdefault(table, {})[name] = parsed
    return from_dict(raw)


def validate(cfg: ExperimentConfig) -> None:
    m, r = cfg.model, cfg.run
    if m.bc not in ("periodic", "neumann"):
        raise ConfigError(f"model.bc must be 'periodic' or 'neumann', got {m.bc!r}")
    if not m.extents or any(int(e) < 1 for e in m.extents):
        raise ConfigError("model.extents must be a non-empty list of positive integers")
    if m.d is not None and m.d != len(m.extents):
        raise ConfigError(f"model.d={m.d} disagrees with len(model.extents)={len(m.extents)}")
    if not m.beta > 0:
        raise ConfigError("model.beta must be > 0")
    need = {"uniform": 1, "two_point": 2, "single": 1}
    if m.pinning not in need:
        raise ConfigError(f"model.pinning must be one of {sorted(need)}, got {m.pinning!r}")
    if len(m.eps) != need[m.pinning]:
        raise ConfigError(f"model.eps needs {need[m.pinning]} value(s) for {m.pinning} pinning")
    if any(e < 0 for e in m.eps):
        raise ConfigError("model.eps must be >= 0")
    if not any(e > 0 for e in m.eps):
        raise ConfigError("model.eps: at least one pinning strength must be > 0 (the measure is not normalizable otherwise)")
    if r.chains < 1 or r.sweeps < 1:
        raise ConfigError("run.chains and run.sweeps must be positive")
    if r.burn_in is not None and not 0 <= r.burn_in < r.sweeps:
        raise ConfigError("run.burn_in must satisfy 0 <= burn_in < sweeps")
    if not r.proposal_sigma >= 0:
        raise ConfigError("run.proposal_sigma must be >= 0")
    try:
        cfg.params()
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"model: {exc}") from None
