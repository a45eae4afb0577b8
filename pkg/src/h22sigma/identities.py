"""Machine checks of the exact identities and inequalities behind the localization proof.

Each check returns an :class:`IdentityResult`; ``run_suite`` runs them all.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import combinatorics as comb
from .exact import QuadratureSpec, conditioned_Z, conditioned_Z_bound, partition_function
from .lattice import Lattice
from .linalg import det_minor, factor, inverse_entry
from .model import ModelParams, PinningScheme, build_D


@dataclass(frozen=True)
class IdentityResult:
    name: str
    instances: int
    max_error: float
    tolerance: float
    passed: bool
    seconds: float = 0.0
    kind: str = "relative error"

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name:<28} n={self.instances:<5d} max {self.kind}={self.max_error:.3e} (tol {self.tolerance:.0e})"

    def as_dict(self) -> dict:
        return asdict(self)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _timed(name: str, tol: float, kind: str = "relative error"):
    def deco(fn: Callable[..., tuple[int, float]]):
        def run(*args, **kw) -> IdentityResult:
            t0 = time.perf_counter()
            n, err = fn(*args, **kw)
            return IdentityResult(name, n, err, tol, bool(err <= tol), time.perf_counter() - t0, kind)

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return deco


WARD_INSTANCES = [
    (Lattice.chain(1), 0.05, PinningScheme.single(0, 1.0)),
    (Lattice.chain(1), 5.0, PinningScheme.uniform(0.3)),
    (Lattice.chain(2), 1.0, PinningScheme.uniform(0.4)),
    (Lattice.chain(2), 0.05, PinningScheme.two_point(0, 0.5, 1, 0.5)),
    (Lattice.chain(2), 5.0, PinningScheme.single(1, 0.7)),
    (Lattice.chain(3), 0.05, PinningScheme.single(0, 1.0)),
    (Lattice.chain(3), 1.0, PinningScheme.single(1, 1.0)),
    (Lattice.chain(3), 5.0, PinningScheme.two_point(0, 1.0, 2, 0.5)),
    (Lattice.chain(3, "periodic"), 1.0, PinningScheme.uniform(1 / 3)),
]


@_timed("ward_identity_Z=1", 1e-6, "absolute error")
def check_ward_identity(extra: list[ModelParams] = ()) -> tuple[int, float]:
    """Quadrature of the measure equals 1 for every pinning scheme."""
    params = [ModelParams(b, lat, p) for lat, b, p in WARD_INSTANCES] + list(extra)
    err = max(abs(partition_function(p) - 1.0) for p in params)
    return len(params), err


def random_dominant_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    m = rng.uniform(-1.0, 1.0, (n, n))
    m[np.diag_indices(n)] = rng.choice([-1.0, 1.0], n) * (n + rng.uniform(0.0, 1.0, n))
    return m


@_timed("path_expansion_random", 1e-10)
def check_path_expansion_random(seed: int = 0, count: int = 200, max_n: int = 6) -> tuple[int, float]:
    """Path expansion vs the Leibniz cofactor (and LAPACK inverse) of full-support matrices."""
    rng = np.random.default_rng(seed)
    err = 0.0
    for _ in range(count):
        n = int(rng.integers(2, max_n + 1))
        m = random_dominant_matrix(rng, n)
        x, y = (int(v) for v in rng.integers(0, n, 2))
        lhs = comb.path_expansion(m, x, y)
        exact = comb.permutation_cofactor(m.tolist(), x, y)
        lapack = np.linalg.inv(m)[x, y] * np.linalg.det(m)
        err = max(err, _rel(lhs, exact), _rel(lapack, exact) if abs(exact) > 1e-8 else 0.0)
    return count, err


@_timed("path_expansion_model_D", 1e-10)
def check_path_expansion_model(seed: int = 0, configs: int = 10) -> tuple[int, float]:
    """D from a 2x3 lattice: path sum with beta^|gamma| det D_tilde, and generic path expansion."""
    rng = np.random.default_rng(seed)
    lat = Lattice((2, 3))
    n_inst, err = 0, 0.0
    for _ in range(configs):
        params = ModelParams(rng.uniform(0.1, 2.0), lat, PinningScheme.uniform(rng.uniform(0.05, 1.0)))
        t = rng.normal(0.0, 1.0, lat.n_sites)
        d = build_D(params, t)
        f = factor(d)
        det = math.exp(2 * np.sum(np.log(np.diag(f.lower))))
        for x in range(lat.n_sites):
            for y in range(x + 1, lat.n_sites):
                target = inverse_entry(f, x, y) * det
                generic = comb.path_expansion(d, x, y)
                via_tilde = sum(
                    params.beta ** g.length * np.linalg.det(comb.delete_path_matrix(params, t, g.sites)[0])
                    for g in comb.enumerate_saws(lat, x, y, lat.n_sites)
                )
                err = max(err, _rel(generic, target), _rel(via_tilde, target))
                n_inst += 1
    return n_inst, err


@_timed("path_deleted_matrix", 1e-10)
def check_path_deleted(seed: int = 0, configs: int = 5) -> tuple[int, float]:
    """det of the enlarged-mass complement matrix equals the corresponding minor of D."""
    rng = np.random.default_rng(seed)
    lat = Lattice((2, 3))
    n_inst, err = 0, 0.0
    for _ in range(configs):
        params = ModelParams(rng.uniform(0.1, 2.0), lat, PinningScheme.two_point(0, rng.uniform(0.1, 1), 5, rng.uniform(0.1, 1)))
        t = rng.normal(0.0, 1.0, lat.n_sites)
        d = build_D(params, t)
        for g in comb.enumerate_saws(lat, 0, 5, lat.n_sites):
            dt, _, _ = comb.delete_path_matrix(params, t, g.sites)
            lhs = float(np.linalg.det(dt)) if dt.size else 1.0
            err = max(err, _rel(lhs, det_minor(d, g.sites)))
            n_inst += 1
    return n_inst, err


MATRIX_TREE_LATTICES = [Lattice.chain(n) for n in range(1, 7)] + [Lattice((2, 2)), Lattice((2, 3))]


@_timed("matrix_tree_theorem", 1e-10)
def check_matrix_tree(seed: int = 0, configs: int = 5) -> tuple[int, float]:
    """det A = eps_0 e^{t_0} * sum over spanning trees of prod beta e^{t_j + t_k}."""
    rng = np.random.default_rng(seed)
    n_inst, err = 0, 0.0
    for lat in MATRIX_TREE_LATTICES:
        for _ in range(configs):
            params = ModelParams(rng.uniform(0.1, 2.0), lat, PinningScheme.single(int(rng.integers(lat.n_sites)), rng.uniform(0.2, 2.0)))
            lhs, rhs = comb.matrix_tree_check(params, rng.normal(0.0, 1.0, lat.n_sites))
            err = max(err, _rel(lhs, rhs))
            n_inst += 1
    return n_inst, err


@_timed("single_pinning_identity", 1e-10, "absolute error")
def check_single_pinning(seed: int = 0, configs: int = 100) -> tuple[int, float]:
    """eps_0 e^{t_0} (A^{-1})_{0x} = 1 at every x on a 3x3 lattice."""
    rng = np.random.default_rng(seed)
    lat = Lattice((3, 3))
    n_inst, err = 0, 0.0
    for _ in range(configs):
        params = ModelParams(rng.uniform(0.1, 2.0), lat, PinningScheme.single(0, rng.uniform(0.2, 2.0)))
        t = rng.normal(0.0, 1.0, lat.n_sites)
        for x in lat.sites():
            err = max(err, abs(comb.single_pinning_identity(params, t, x) - 1.0))
            n_inst += 1
    return n_inst, err


@_timed("inverse_entry_bound", 0.0, "violations")
def check_inverse_bound(seed: int = 0, configs: int = 1000, lattice: Lattice | None = None) -> tuple[int, float]:
    """D^{-1}_xy <= e^{t_x}/eps_x + e^{t_y}/eps_y whenever both masses are positive."""
    rng = np.random.default_rng(seed)
    lat = lattice or Lattice((3, 3))
    n = lat.n_sites
    violations = 0
    for i in range(configs):
        eps = rng.uniform(0.01, 1.0, n) * (rng.random(n) < 0.5)
        x, y = (int(v) for v in rng.choice(n, 2, replace=False))
        eps[x], eps[y] = rng.uniform(0.01, 1.0, 2)
        params = ModelParams(rng.uniform(0.05, 3.0), lat, PinningScheme.uniform(1.0)).with_eps(eps)
        t = rng.normal(0.0, 2.0, n)
        ginv = inverse_entry(factor(build_D(params, t)), x, y)
        if ginv > math.exp(t[x]) / eps[x] + math.exp(t[y]) / eps[y]:
            violations += 1
    return configs, float(violations)


def conditioned_instances(seed: int = 0, count: int = 24):
    """Small (lattice, path, path field) instances with at most three sites off the path."""
    rng = np.random.default_rng(seed)
    shapes = [(3,), (4,), (5,), (2, 2), (2, 3), (3,), (4,), (2, 2)]
    out = []
    while len(out) < count:
        lat = Lattice(shapes[len(out) % len(shapes)])
        n = lat.n_sites
        x, y = (int(v) for v in rng.choice(n, 2, replace=False))
        saws = [g for g in comb.enumerate_saws(lat, x, y, n) if 1 <= n - len(g) <= 3]
        if not saws:
            continue
        gamma = saws[int(rng.integers(len(saws)))]
        eps = rng.uniform(0.0, 0.5, n) * (rng.random(n) < 0.6)
        params = ModelParams(float(rng.choice([0.05, 0.3, 1.0])), lat, PinningScheme.uniform(1.0)).with_eps(eps)
        t_gamma = rng.normal(0.0, 1.5, len(gamma))
        out.append((params, gamma.sites, t_gamma))
    return out


@_timed("conditioned_Z_bound", 0.0, "violations")
def check_conditioned_Z(seed: int = 0, count: int = 24) -> tuple[int, float]:
    """Conditioned partition function stays below the translation bound."""
    violations = 0
    for params, gamma, t_gamma in conditioned_instances(seed, count):
        z = conditioned_Z(params, gamma, t_gamma)
        if z > conditioned_Z_bound(params, gamma, t_gamma) * (1.0 + 1e-9):
            violations += 1
    return count, float(violations)


@_timed("kirchhoff_tree_count", 1e-9)
def check_kirchhoff() -> tuple[int, float]:
    lats = [Lattice.chain(n) for n in range(1, 8)] + [Lattice((2, 2)), Lattice((2, 3)), Lattice((3, 3)),
                                                      Lattice((2, 4)), Lattice.chain(5, "periodic"), Lattice((3, 3), "periodic")]
    err = max(_rel(len(comb.enumerate_spanning_trees(lat)), comb.kirchhoff_count(lat)) for lat in lats)
    return len(lats), err


@_timed("saw_growth_bound", 0.0, "violations")
def check_saw_bound(max_len: int = 10) -> tuple[int, float]:
    """count(n) <= 2d (2d-1)^(n-1) <= 2 c_d^n for walks in Z^2 and Z^3."""
    violations, n_inst = 0, 0
    for d in (2, 3):
        lat = Lattice((2 * max_len + 1,) * d)
        counts = comb.saw_counts(lat, lat.n_sites // 2, max_len)
        for n in range(1, max_len + 1):
            n_inst += 1
            if not counts[n] <= comb.saw_count_bound(d, n) <= 2 * (2 * d - 1) ** n:
                violations += 1
    return n_inst, float(violations)


def quad1d(f, T: float, panels: int = 400, order: int = 12) -> float:
    nodes, weights = QuadratureSpec(T, panels, order).nodes()
    return float(np.sum(weights * f(nodes)))


@_timed("closed_form_integrals", 1e-8)
def check_closed_forms(values=(0.01, 0.1, 1.0, 10.0)) -> tuple[int, float]:
    """sqrt(b/2pi) int cosh(t/2) e^{-b(cosh t - 1)} = 1 and int e^{t/2} e^{-e(cosh t - 1)} / sqrt(2pi) = 1/sqrt(e)."""
    err = 0.0
    for v in values:
        T = math.acosh(1.0 + 60.0 / v) + 1.0
        a = math.sqrt(v / (2 * math.pi)) * quad1d(lambda t: np.cosh(t / 2) * np.exp(-v * (np.cosh(t) - 1)), T)
        b = quad1d(lambda t: np.exp(t / 2 - v * (np.cosh(t) - 1)), T) / math.sqrt(2 * math.pi)
        err = max(err, abs(a - 1.0), _rel(b, 1.0 / math.sqrt(v)))
    return 2 * len(values), err


def run_suite(seed: int = 0, model: ModelParams | None = None, quick: bool = False) -> list[IdentityResult]:
    """Every check; ``model`` (if small enough) joins the Z=1 instances and drives the inverse-bound check."""
    extra = [model] if model is not None and model.n_sites <= 3 else []
    bound_lat = model.lattice if model is not None and 2 <= model.n_sites <= 64 else None
    return [
        check_ward_identity(extra),
        check_closed_forms(),
        check_inverse_bound(seed, 200 if quick else 1000, bound_lat),
        check_path_expansion_random(seed, 50 if quick else 200),
        check_path_expansion_model(seed, 3 if quick else 10),
        check_path_deleted(seed),
        check_conditioned_Z(seed, 8 if quick else 24),
        check_matrix_tree(seed),
        check_single_pinning(seed, 20 if quick else 100),
        check_kirchhoff(),
        check_saw_bound(8 if quick else 10),
    ]
