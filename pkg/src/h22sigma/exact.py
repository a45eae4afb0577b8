"""Tensor-product Gauss-Legendre quadrature over the t-field of small lattices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .combinatorics import check_self_avoiding
from .model import ModelParams, build_D_batch, action_batch

MAX_SITES = 4
_CHUNK = 1 << 17


@dataclass(frozen=True)
class QuadratureSpec:
    """Each t_j is integrated over ``[-T, T]`` with ``panels`` panels of ``order`` nodes."""

    T: float = 40.0
    panels: int = 80
    order: int = 12

    def __post_init__(self):
        if not (self.T > 0 and self.panels > 0 and self.order > 0):
            raise ValueError(f"T, panels and order must be positive: {self}")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        x, w = np.polynomial.legendre.leggauss(self.order)
        edges = np.linspace(-self.T, self.T, self.panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return nodes, weights

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(self.T, 2 * self.panels, self.order)


@dataclass(frozen=True)
class Observable:
    """``kind`` is ``"G"`` for D^{-1}_{xy} or ``"O"`` for exp(t_x / 2)."""

    kind: str
    x: int
    y: int | None = None

    @classmethod
    def G(cls, x: int, y: int) -> "Observable":
        return cls("G", x, y)

    @classmethod
    def O(cls, x: int) -> "Observable":
        return cls("O", x)

    def __post_init__(self):
        if self.kind not in ("G", "O"):
            raise ValueError(f"unknown observable kind {self.kind!r}")
        if self.kind == "G" and self.y is None:
            raise ValueError("G observable needs two sites")

    @property
    def label(self) -> str:
        return f"G_{self.x}_{self.y}" if self.kind == "G" else f"O_{self.x}"


def tail_estimate(params: ModelParams, spec: QuadratureSpec) -> float:
    """Bound on the integrand outside the box in the weakest pinned direction."""
    eps = params.eps[params.eps > 0]
    if eps.size == 0:
        return math.inf
    return math.exp(-float(eps.min()) * (math.cosh(spec.T) - 1.0))


def default_spec(params: ModelParams, *, nodes_per_unit: float = 6.0) -> QuadratureSpec:
    """Box size from the slowest double-exponential decay, node density from beta.

    A pinned site decays like exp(-eps (cosh t - 1)); every bond away from the
    pinned set adds roughly ``acosh(1 + 40 / beta)`` of spread.
    """
    eps = params.eps
    pinned = np.flatnonzero(eps > 0)
    if pinned.size == 0:
        raise ValueError("no positive pinning")
    lat = params.lattice
    hops = max(min(lat.graph_distance(j, p) for p in pinned) for j in lat.sites())
    T = math.acosh(1.0 + 40.0 / float(eps[pinned].min())) + hops * math.acosh(1.0 + 40.0 / params.beta)
    T = math.ceil(T)
    # narrowest feature is the bond Gaussian of width ~ 1/sqrt(beta)
    density = nodes_per_unit * max(1.0, math.sqrt(params.beta))
    order = 10
    panels = max(4, math.ceil(2 * T * density / order))
    return QuadratureSpec(T=float(T), panels=panels, order=order)


def _grid_sum(n_dim: int, spec: QuadratureSpec, integrand: Callable[[np.ndarray], np.ndarray]) -> float:
    nodes, weights = spec.nodes()
    m = nodes.size
    total = m ** n_dim
    acc = 0.0
    shape = (m,) * n_dim
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        idx = np.unravel_index(flat, shape)
        ts = np.stack([nodes[i] for i in idx], axis=1)
        w = np.prod(np.stack([weights[i] for i in idx], axis=1), axis=1)
        vals = integrand(ts)
        acc += float(np.sum(w * vals))
    return acc / (2.0 * math.pi) ** (n_dim / 2)


def _check_size(params: ModelParams) -> None:
    if params.n_sites > MAX_SITES:
        raise ValueError(f"exact quadrature supports at most {MAX_SITES} sites, got {params.n_sites}")
    if not np.any(params.eps > 0):
        raise ValueError("at least one pinning strength must be positive")


def _density(params: ModelParams, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = build_D_batch(params, ts)
    sign, ld = np.linalg.slogdet(d)
    logw = -action_batch(params, ts) + 0.5 * ld
    with np.errstate(under="ignore"):
        dens = np.where(sign > 0, np.exp(logw), 0.0)
    return dens, d


def partition_function(params: ModelParams, spec: QuadratureSpec | None = None) -> float:
    """Integral of the measure; equals 1 up to quadrature error."""
    _check_size(params)
    spec = spec or default_spec(params)
    z = _grid_sum(params.n_sites, spec, lambda ts: _density(params, ts)[0])
    if not math.isfinite(z):
        raise FloatingPointError("quadrature produced a non-finite value")
    return z


def _observable_values(obs: Observable, ts: np.ndarray, d: np.ndarray) -> np.ndarray:
    if obs.kind == "O":
        return np.exp(0.5 * ts[:, obs.x])
    n = d.shape[-1]
    rhs = np.zeros((d.shape[0], n, 1))
    rhs[:, obs.y, 0] = 1.0
    return np.linalg.solve(d, rhs)[:, obs.x, 0]


def expectation(
    params: ModelParams,
    obs: Observable,
    spec: QuadratureSpec | None = None,
    *,
    normalize: bool = False,
) -> float:
    """``<f>`` under the measure; with ``normalize`` the result is divided by the computed Z."""
    _check_size(params)
    n = params.n_sites
    for s in (obs.x, obs.y):
        if s is not None and not 0 <= s < n:
            raise IndexError(f"site {s} outside lattice")
    if obs.kind == "G" and not (params.eps[obs.x] > 0 and params.eps[obs.y] > 0):
        raise ValueError("G_xy requires positive pinning at both x and y")
    spec = spec or default_spec(params)

    def integrand(ts):
        dens, d = _density(params, ts)
        vals = np.zeros_like(dens)
        ok = dens > 0
        vals[ok] = dens[ok] * _observable_values(obs, ts[ok], d[ok])
        return vals

    value = _grid_sum(n, spec, integrand)
    if normalize:
        value /= partition_function(params, spec)
    return value


def conditioned_Z(params: ModelParams, gamma, t_gamma, spec: QuadratureSpec | None = None) -> float:
    """Integral over the sites off ``gamma`` with the path field frozen at ``t_gamma``.

    Integrand: ``exp(-F_inside - M_inside) sqrt(det D_restricted) exp(-F_boundary)``,
    where D is restricted to the complement of the path (which is the path-deleted
    matrix with the enlarged masses).
    """
    gamma = [int(j) for j in gamma]
    check_self_avoiding(params.lattice, gamma)
    t_gamma = np.asarray(t_gamma, dtype=float)
    if t_gamma.shape != (len(gamma),):
        raise ValueError("t_gamma must have one value per path site")
    n = params.n_sites
    comp = np.array([j for j in range(n) if j not in set(gamma)], dtype=np.int64)
    if comp.size == 0:
        return 1.0
    if comp.size > MAX_SITES:
        raise ValueError(f"complement has {comp.size} sites; at most {MAX_SITES} supported")
    on_path = np.zeros(n, dtype=bool)
    on_path[gamma] = True
    inner = [(i, k) for i, k in params.edges if not on_path[i] and not on_path[k]]
    border = [(i, k) if not on_path[i] else (k, i) for i, k in params.edges if on_path[i] != on_path[k]]
    eps_c = params.eps[comp]
    beta = params.beta
    if spec is None:
        eps_tilde = eps_c.copy()
        for j, k in border:
            eps_tilde[np.searchsorted(comp, j)] += beta * math.exp(t_gamma[gamma.index(k)])
        t_shift = max(0.0, float(np.max(np.abs(t_gamma))))
        T = math.ceil(t_shift + math.acosh(1.0 + 40.0 / max(1e-300, eps_tilde[eps_tilde > 0].min())) + comp.size * math.acosh(1.0 + 40.0 / beta))
        density = 6.0 * max(1.0, math.sqrt(beta))
        spec = QuadratureSpec(T=float(T), panels=max(4, math.ceil(2 * T * density / 10)), order=10)

    full_template = np.zeros(n)
    full_template[gamma] = t_gamma

    def integrand(tc):
        ts = np.repeat(full_template[None, :], tc.shape[0], axis=0)
        ts[:, comp] = tc
        d = build_D_batch(params, ts)[:, comp[:, None], comp[None, :]]
        sign, ld = np.linalg.slogdet(d)
        expo = -((np.cosh(tc) - 1.0) @ eps_c)
        for i, k in inner:
            expo -= beta * (np.cosh(ts[:, i] - ts[:, k]) - 1.0)
        for j, k in border:
            expo -= beta * (np.cosh(ts[:, j] - ts[:, k]) - 1.0)
        with np.errstate(under="ignore"):
            return np.where(sign > 0, np.exp(expo + 0.5 * ld), 0.0)

    return _grid_sum(comp.size, spec, integrand)


def conditioned_Z_bound(params: ModelParams, gamma, t_gamma, t_star: float | None = None) -> float:
    """``exp(beta sum_k d_k (1 - e^{t_k - t*})) exp(sum_j eps_j (1 - e^{-t*}))``.

    ``d_k`` counts neighbours of path site ``k`` off the path; ``t*`` defaults to
    ``max(0, max_k t_k)``.
    """
    gamma = [int(j) for j in gamma]
    t_gamma = np.asarray(t_gamma, dtype=float)
    if t_star is None:
        t_star = max(0.0, float(t_gamma.max()))
    if t_star < 0 or t_star < t_gamma.max():
        raise ValueError("t* must be >= 0 and >= every path field value")
    on_path = set(gamma)
    lat = params.lattice
    expo = 0.0
    for k, tk in zip(gamma, t_gamma):
        d_k = sum(1 for j in lat.neighbors(k) if j not in on_path)
        expo += params.beta * d_k * (1.0 - math.exp(tk - t_star))
    comp = [j for j in lat.sites() if j not in on_path]
    expo += float(np.sum(params.eps[comp])) * (1.0 - math.exp(-t_star))
    return math.exp(expo)
