"""Horospherical t-field representation of the H^(2|2) model.

For a field ``t`` on a lattice the (already normalized) measure is

    prod_j dt_j / sqrt(2 pi) * exp(-F(t) - M(t)) * sqrt(det D(t))

with ``F = beta * sum_<jk> (cosh(t_j - t_k) - 1)``,
``M = sum_j eps_j (cosh t_j - 1)`` and

    D_jk = -beta                                  (j ~ k)
    D_jj = beta * sum_{k ~ j} exp(t_k - t_j) + eps_j exp(-t_j)

``A = diag(e^t) D diag(e^t)`` is the random-walk (diffusion) form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .lattice import Lattice
from .linalg import NotPositiveDefinite, factor, logdet


class PinningMode(str, enum.Enum):
    UNIFORM = "uniform"
    TWO_POINT = "two_point"
    SINGLE = "single"


@dataclass(frozen=True)
class PinningScheme:
    """Where the regularizing masses eps_j sit.

    ``sites``/``values`` are only used by the two-point and single modes; the
    uniform mode puts ``values[0]`` on every site.
    """

    mode: PinningMode
    values: tuple[float, ...]
    sites: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mode", PinningMode(self.mode))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        expected = {PinningMode.UNIFORM: (1, 0), PinningMode.TWO_POINT: (2, 2), PinningMode.SINGLE: (1, 1)}
        n_val, n_site = expected[self.mode]
        if len(self.values) != n_val or len(self.sites) != n_site:
            raise ValueError(f"{self.mode.value} pinning takes {n_val} value(s) and {n_site} site(s)")
        if any(not np.isfinite(v) or v < 0 for v in self.values):
            raise ValueError(f"pinning strengths must be finite and >= 0, got {self.values}")
        if self.mode is PinningMode.TWO_POINT and self.sites[0] == self.sites[1]:
            raise ValueError("two-point pinning needs two distinct sites")

    @classmethod
    def uniform(cls, eps: float) -> "PinningScheme":
        return cls(PinningMode.UNIFORM, (eps,))

    @classmethod
    def two_point(cls, x: int, eps_x: float, y: int, eps_y: float) -> "PinningScheme":
        return cls(PinningMode.TWO_POINT, (eps_x, eps_y), (x, y))

    @classmethod
    def single(cls, site: int, eps: float) -> "PinningScheme":
        return cls(PinningMode.SINGLE, (eps,), (site,))

    def vector(self, n_sites: int) -> np.ndarray:
        eps = np.zeros(n_sites)
        if self.mode is PinningMode.UNIFORM:
            eps[:] = self.values[0]
            return eps
        for s, v in zip(self.sites, self.values):
            if not 0 <= s < n_sites:
                raise IndexError(f"pinned site {s} not in lattice of {n_sites} sites")
            eps[s] = v
        return eps

    def two_point_envelope_applicable(self, n_sites: int) -> bool:
        """Hypotheses of the G_xy decay bound: two positive masses, total mass <= 1."""
        eps = self.vector(n_sites)
        return self.mode is not PinningMode.SINGLE and np.count_nonzero(eps) >= 1 and eps.sum() <= 1.0


@dataclass(frozen=True)
class ModelParams:
    beta: float
    lattice: Lattice
    pinning: PinningScheme
    eps: np.ndarray = field(init=False, repr=False, compare=False)
    edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        object.__setattr__(self, "beta", float(self.beta))
        eps = self.pinning.vector(self.lattice.n_sites)
        eps.setflags(write=False)
        object.__setattr__(self, "eps", eps)
        edges = self.lattice.edge_array()
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    def with_eps(self, eps) -> "ModelParams":
        """Same model with an arbitrary mass vector (used for conditioned measures)."""
        p = ModelParams(self.beta, self.lattice, self.pinning)
        eps = np.array(eps, dtype=float)
        if eps.shape != (self.n_sites,) or np.any(eps < 0):
            raise ValueError("eps must be a nonnegative vector over the sites")
        eps.setflags(write=False)
        object.__setattr__(p, "eps", eps)
        return p


def _as_config(params: ModelParams, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape != (params.n_sites,):
        raise ValueError(f"config has shape {t.shape}, lattice has {params.n_sites} sites")
    return t


def action_F(params: ModelParams, t) -> float:
    t = _as_config(params, t)
    if len(params.edges) == 0:
        return 0.0
    i, k = params.edges.T
    return float(params.beta * np.sum(np.cosh(t[i] - t[k]) - 1.0))


def mass_M(params: ModelParams, t) -> float:
    t = _as_config(params, t)
    return float(np.sum(params.eps * (np.cosh(t) - 1.0)))


def grad_action(params: ModelParams, t) -> np.ndarray:
    """Gradient of ``F + M`` with respect to ``t``."""
    t = _as_config(params, t)
    g = params.eps * np.sinh(t)
    if len(params.edges):
        i, k = params.edges.T
        s = params.beta * np.sinh(t[i] - t[k])
        np.add.at(g, i, s)
        np.add.at(g, k, -s)
    return g


def build_D(params: ModelParams, t) -> np.ndarray:
    t = _as_config(params, t)
    n = params.n_sites
    d = np.zeros((n, n))
    diag = params.eps * np.exp(-t)
    if len(params.edges):
        i, k = params.edges.T
        d[i, k] = d[k, i] = -params.beta
        np.add.at(diag, i, params.beta * np.exp(t[k] - t[i]))
        np.add.at(diag, k, params.beta * np.exp(t[i] - t[k]))
    d[np.diag_indices(n)] = diag
    if not np.all(np.isfinite(d)):
        raise FloatingPointError("D has non-finite entries")
    return d


def build_A(params: ModelParams, t) -> np.ndarray:
    """Diffusion form: off-diagonal ``-beta e^{t_i+t_j}``, diagonal row sums plus ``eps_i e^{t_i}``."""
    t = _as_config(params, t)
    n = params.n_sites
    a = np.zeros((n, n))
    diag = params.eps * np.exp(t)
    if len(params.edges):
        i, k = params.edges.T
        w = params.beta * np.exp(t[i] + t[k])
        a[i, k] = a[k, i] = -w
        np.add.at(diag, i, w)
        np.add.at(diag, k, w)
    a[np.diag_indices(n)] = diag
    return a


def log_weight(params: ModelParams, t) -> float:
    """Log density ``-F - M + 1/2 log det D`` relative to ``prod dt_j / sqrt(2 pi)``."""
    if not np.any(params.eps > 0):
        raise ValueError("all pinning strengths vanish: the measure is not normalizable")
    d = build_D(params, t)
    return -action_F(params, t) - mass_M(params, t) + 0.5 * logdet(factor(d))


def build_D_batch(params: ModelParams, ts: np.ndarray) -> np.ndarray:
    """``build_D`` for a stack of configs of shape (K, N); returns (K, N, N)."""
    ts = np.asarray(ts, dtype=float)
    k_cfg, n = ts.shape
    d = np.zeros((k_cfg, n, n))
    diag = params.eps[None, :] * np.exp(-ts)
    for i, k in params.edges:
        d[:, i, k] = d[:, k, i] = -params.beta
        diag[:, i] += params.beta * np.exp(ts[:, k] - ts[:, i])
        diag[:, k] += params.beta * np.exp(ts[:, i] - ts[:, k])
    idx = np.arange(n)
    d[:, idx, idx] = diag
    return d


def action_batch(params: ModelParams, ts: np.ndarray) -> np.ndarray:
    """``F + M`` for a stack of configs."""
    ts = np.asarray(ts, dtype=float)
    out = (np.cosh(ts) - 1.0) @ params.eps
    for i, k in params.edges:
        out += params.beta * (np.cosh(ts[:, i] - ts[:, k]) - 1.0)
    return out


def log_weight_batch(params: ModelParams, ts: np.ndarray) -> np.ndarray:
    """Vectorized ``log_weight``; entries where D is not positive definite are ``-inf``."""
    sign, ld = np.linalg.slogdet(build_D_batch(params, ts))
    out = -action_batch(params, ts) + 0.5 * ld
    return np.where(sign > 0, out, -np.inf)
