"""Single-site Metropolis sampling of the determinant-weighted t-field measure.

Every proposal rebuilds D and refactorizes it from scratch; the inner loop is
compiled with numba so desk-scale lattices (a few hundred sites) stay usable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numba
import numpy as np

from .exact import Observable
from .linalg import SpdFactor
from .model import ModelParams, PinningMode, log_weight

_BLOCK = 2048


@dataclass(frozen=True)
class EstimatorResult:
    mean: float
    stderr: float
    n_samples: int
    acceptance_rate: float
    batch_count: int
    label: str = ""
    chain_means: tuple[float, ...] = field(default=(), repr=False)


@dataclass
class ChainState:
    config: np.ndarray
    lower: np.ndarray
    log_weight: float
    rng: np.random.Generator
    stream_id: int = 0
    step: int = 0
    n_proposed: int = 0
    n_accepted: int = 0
    n_failed: int = 0

    @property
    def factor(self) -> SpdFactor:
        return SpdFactor(self.lower)

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_proposed if self.n_proposed else 1.0

    def copy(self) -> "ChainState":
        return replace(self, config=self.config.copy(), lower=self.lower.copy())


def neighbor_table(params: ModelParams) -> np.ndarray:
    lat = params.lattice
    deg = max((lat.degree(j) for j in lat.sites()), default=0)
    nbr = -np.ones((lat.n_sites, max(deg, 1)), dtype=np.int64)
    for j in lat.sites():
        nb = lat.neighbors(j)
        nbr[j, : len(nb)] = nb
    return nbr


@numba.njit(cache=True)
def _fill_D(t, nbr, eps, beta, d):
    n = t.shape[0]
    for i in range(n):
        for k in range(n):
            d[i, k] = 0.0
    for i in range(n):
        diag = eps[i] * math.exp(-t[i])
        for a in range(nbr.shape[1]):
            k = nbr[i, a]
            if k < 0:
                continue
            d[i, k] = -beta
            diag += beta * math.exp(t[k] - t[i])
        d[i, i] = diag


@numba.njit(cache=True)
def _cholesky(d, low):
    """In-place lower Cholesky; returns (ok, logdet)."""
    n = d.shape[0]
    ld = 0.0
    for j in range(n):
        s = d[j, j]
        for k in range(j):
            s -= low[j, k] * low[j, k]
        if not (s > 0.0) or not math.isfinite(s):
            return False, 0.0
        ljj = math.sqrt(s)
        low[j, j] = ljj
        ld += 2.0 * math.log(ljj)
        for i in range(j + 1, n):
            s = d[i, j]
            for k in range(j):
                s -= low[i, k] * low[j, k]
            low[i, j] = s / ljj
        for i in range(j):
            low[i, j] = 0.0
    return True, ld


@numba.njit(cache=True)
def _site_action(t, j, tj, nbr, eps, beta):
    s = eps[j] * (math.cosh(tj) - 1.0)
    for a in range(nbr.shape[1]):
        k = nbr[j, a]
        if k >= 0:
            s += beta * (math.cosh(tj - t[k]) - 1.0)
    return s


@numba.njit(cache=True)
def _lower_inverse(low, out):
    n = low.shape[0]
    for c in range(n):
        for i in range(n):
            s = 1.0 if i == c else 0.0
            for k in range(i):
                s -= low[i, k] * out[k, c]
            out[i, c] = s / low[i, i]


@numba.njit(cache=True)
def _sweeps(t, low, logdet, nbr, eps, beta, sigma, normals, uniforms, obs_kind, obs_x, obs_y, out, counters):
    """Run ``normals.shape[0]`` site-ordered sweeps, recording observables after each.

    counters: [proposed, accepted, failed]. Returns the updated log det D.
    """
    n = t.shape[0]
    d = np.empty((n, n))
    lprop = np.zeros((n, n))
    linv = np.empty((n, n))
    need_inv = False
    for q in range(obs_kind.shape[0]):
        if obs_kind[q] == 0:
            need_inv = True
    for s in range(normals.shape[0]):
        for j in range(n):
            old = t[j]
            new = old + sigma * normals[s, j]
            ds = _site_action(t, j, new, nbr, eps, beta) - _site_action(t, j, old, nbr, eps, beta)
            t[j] = new
            _fill_D(t, nbr, eps, beta, d)
            ok, ld = _cholesky(d, lprop)
            counters[0] += 1
            if not ok:
                t[j] = old
                counters[2] += 1
                continue
            dlog = -ds + 0.5 * (ld - logdet)
            if math.log(uniforms[s, j]) < dlog:
                counters[1] += 1
                logdet = ld
                for a in range(n):
                    for b in range(n):
                        low[a, b] = lprop[a, b]
            else:
                t[j] = old
        if need_inv:
            _lower_inverse(low, linv)
        for q in range(obs_kind.shape[0]):
            if obs_kind[q] == 1:
                out[s, q] = math.exp(0.5 * t[obs_x[q]])
            else:
                acc = 0.0
                x, y = obs_x[q], obs_y[q]
                for k in range(max(x, y), n):
                    acc += linv[k, x] * linv[k, y]
                out[s, q] = acc
    return logdet


def init_state(params: ModelParams, seed=None, stream_id: int = 0, config=None) -> ChainState:
    """Chain started from ``t = 0`` (or ``config``) with a private generator."""
    t = np.zeros(params.n_sites) if config is None else np.array(config, dtype=float)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    low = np.zeros((params.n_sites, params.n_sites))
    d = np.empty_like(low)
    _fill_D(t, neighbor_table(params), params.eps, params.beta, d)
    ok, _ = _cholesky(d, low)
    if not ok:
        raise ValueError("initial configuration has a singular D (is every pinning zero?)")
    return ChainState(t, low, log_weight(params, t), rng, stream_id)


def _encode(observables: Sequence[Observable]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    kind = np.array([0 if o.kind == "G" else 1 for o in observables], dtype=np.int64)
    xs = np.array([o.x for o in observables], dtype=np.int64)
    ys = np.array([o.y if o.y is not None else o.x for o in observables], dtype=np.int64)
    return kind, xs, ys


def run_sweeps(
    state: ChainState,
    params: ModelParams,
    n_sweeps: int,
    proposal_sigma: float = 1.0,
    observables: Sequence[Observable] = (),
) -> tuple[ChainState, np.ndarray]:
    """Advance a copy of ``state`` by ``n_sweeps``; returns it and the per-sweep observable samples."""
    state = state.copy()
    nbr = neighbor_table(params)
    kind, xs, ys = _encode(observables)
    samples = np.empty((n_sweeps, len(kind)))
    counters = np.zeros(3, dtype=np.int64)
    n = params.n_sites
    logdet = 2.0 * float(np.sum(np.log(np.diag(state.lower))))
    for start in range(0, n_sweeps, _BLOCK):
        m = min(_BLOCK, n_sweeps - start)
        normals = state.rng.standard_normal((m, n))
        uniforms = 1.0 - state.rng.random((m, n))
        logdet = _sweeps(
            state.config, state.lower, logdet, nbr, params.eps, params.beta, float(proposal_sigma),
            normals, uniforms, kind, xs, ys, samples[start : start + m], counters,
        )
    state.step += n_sweeps
    state.n_proposed += int(counters[0])
    state.n_accepted += int(counters[1])
    state.n_failed += int(counters[2])
    state.log_weight = log_weight(params, state.config)
    return state, samples


def metropolis_sweep(state: ChainState, params: ModelParams, proposal_sigma: float = 1.0) -> ChainState:
    return run_sweeps(state, params, 1, proposal_sigma)[0]


def metropolis_site_update(params: ModelParams, config, site: int, proposal: float, u: float) -> tuple[np.ndarray, bool]:
    """One Metropolis decision for moving ``config[site]`` to ``proposal`` given a uniform ``u``."""
    cur = np.array(config, dtype=float)
    new = cur.copy()
    new[site] = proposal
    try:
        dlog = log_weight(params, new) - log_weight(params, cur)
    except np.linalg.LinAlgError:
        return cur, False
    if math.log(u) < dlog:
        return new, True
    return cur, False


def tune_sigma(
    params: ModelParams, state: ChainState, sigma: float = 1.0, *, rounds: int = 8, sweeps: int = 200,
    target: tuple[float, float] = (0.3, 0.5),
) -> tuple[float, ChainState]:
    """Crude multiplicative search for an acceptance rate inside ``target``; run before measuring."""
    for _ in range(rounds):
        before = (state.n_proposed, state.n_accepted)
        state, _ = run_sweeps(state, params, sweeps, sigma)
        rate = (state.n_accepted - before[1]) / max(1, state.n_proposed - before[0])
        if target[0] <= rate <= target[1]:
            break
        sigma *= math.exp(rate - 0.5 * (target[0] + target[1])) ** 2 if rate > target[1] else 0.6
    return sigma, state


def batch_means(x: np.ndarray, n_batches: int) -> np.ndarray:
    """Means of ``n_batches`` contiguous equal batches (the trailing remainder is dropped)."""
    x = np.asarray(x, dtype=float)
    size = x.size // n_batches
    if size < 1:
        raise ValueError(f"{x.size} samples cannot fill {n_batches} batches")
    return x[: size * n_batches].reshape(n_batches, size).mean(axis=1)


def _check_observables(params: ModelParams, observables: Sequence[Observable]) -> None:
    for o in observables:
        for s in (o.x, o.y):
            if s is not None and not 0 <= s < params.n_sites:
                raise IndexError(f"site {s} outside lattice")


def _chain_worker(args):
    params, observables, n_sweeps, burn_in, sigma, tune, seed_seq, stream = args
    state = init_state(params, np.random.default_rng(seed_seq), stream)
    if tune:
        sigma, state = tune_sigma(params, state, sigma)
    state, _ = run_sweeps(state, params, burn_in, sigma)
    measured_from = (state.n_proposed, state.n_accepted)
    state, samples = run_sweeps(state, params, n_sweeps - burn_in, sigma, observables)
    acc = (state.n_accepted - measured_from[1]) / max(1, state.n_proposed - measured_from[0])
    return samples, acc


def sample_chains(
    params: ModelParams,
    observables: Sequence[Observable],
    n_sweeps: int,
    burn_in: int | None = None,
    n_chains: int = 4,
    seed: int = 0,
    proposal_sigma: float = 1.0,
    tune: bool = False,
    workers: int = 1,
) -> tuple[list[np.ndarray], list[float]]:
    """Raw per-sweep samples of every chain (after burn-in) plus acceptance rates."""
    burn_in = n_sweeps // 10 if burn_in is None else burn_in
    if not 0 <= burn_in < n_sweeps:
        raise ValueError("need 0 <= burn_in < n_sweeps")
    if n_chains < 1:
        raise ValueError("need at least one chain")
    _check_observables(params, observables)
    seqs = np.random.SeedSequence(seed).spawn(n_chains)
    jobs = [(params, list(observables), n_sweeps, burn_in, proposal_sigma, tune, s, i) for i, s in enumerate(seqs)]
    if workers > 1 and n_chains > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_chain_worker, jobs))
    else:
        results = [_chain_worker(j) for j in jobs]
    return [r[0] for r in results], [r[1] for r in results]


def summarize(
    chains: Sequence[np.ndarray], acceptance: Sequence[float], labels: Sequence[str] = (), n_batches: int = 32
) -> list[EstimatorResult]:
    """Pool batch means across chains, so between-chain spread enters the error bar."""
    n_meas = chains[0].shape[0]
    n_batches = min(n_batches, n_meas)
    if n_batches < 8:
        raise ValueError(f"{n_meas} measured sweeps per chain; at least 8 are needed for batch means")
    out = []
    for q in range(chains[0].shape[1]):
        bm = np.concatenate([batch_means(c[:, q], n_batches) for c in chains])
        mean = float(bm.mean())
        stderr = float(bm.std(ddof=1) / math.sqrt(bm.size))
        out.append(
            EstimatorResult(
                mean=mean,
                stderr=stderr,
                n_samples=n_meas * len(chains),
                acceptance_rate=float(np.mean(acceptance)),
                batch_count=int(bm.size),
                label=labels[q] if labels else "",
                chain_means=tuple(float(c[:, q].mean()) for c in chains),
            )
        )
    return out


def estimate_many(params: ModelParams, observables: Sequence[Observable], n_sweeps: int, burn_in=None,
                  n_chains: int = 4, seed: int = 0, **kw) -> list[EstimatorResult]:
    for o in observables:
        if o.kind == "G" and not (params.eps[o.x] > 0 and params.eps[o.y] > 0) and not kw.get("allow_unpinned", False):
            raise ValueError(f"{o.label}: G_xy requires positive pinning at x and y (pass allow_unpinned=True to override)")
    kw.pop("allow_unpinned", None)
    n_batches = kw.pop("n_batches", 32)
    chains, acc = sample_chains(params, observables, n_sweeps, burn_in, n_chains, seed, **kw)
    return summarize(chains, acc, [o.label for o in observables], n_batches)


def estimate(params: ModelParams, obs: Observable, n_sweeps: int, burn_in=None, n_chains: int = 4,
             seed: int = 0, **kw) -> EstimatorResult:
    return estimate_many(params, [obs], n_sweeps, burn_in, n_chains, seed, **kw)[0]


def estimate_Ox(params: ModelParams, x: int, n_sweeps: int, burn_in=None, n_chains: int = 4,
                seed: int = 0, **kw) -> EstimatorResult:
    """``<exp(t_x / 2)>`` under a single pinning."""
    if params.pinning.mode is not PinningMode.SINGLE:
        raise ValueError("O_x is the single-pinning observable")
    return estimate(params, Observable.O(x), n_sweeps, burn_in, n_chains, seed, **kw)
