"""Self-avoiding walks, the path expansion of M^{-1}_xy det M, spanning trees.

Everything here is exhaustive enumeration with a deterministic DFS order, meant
for lattices small enough to list every object.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numba
import numpy as np

from .lattice import Lattice
from .linalg import det_minor, factor, inverse_entry
from .model import ModelParams, PinningMode, build_A

MAX_TREE_SITES = 9


@dataclass(frozen=True)
class Path:
    """Ordered list of distinct sites, consecutive ones adjacent."""

    sites: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.sites) - 1

    @property
    def start(self) -> int:
        return self.sites[0]

    @property
    def end(self) -> int:
        return self.sites[-1]

    def __iter__(self):
        return iter(self.sites)

    def __len__(self) -> int:
        return len(self.sites)


@dataclass(frozen=True)
class SpanningTree:
    edges: frozenset[tuple[int, int]]

    def weight(self, t, beta: float) -> float:
        return math.prod(beta * math.exp(t[j] + t[k]) for j, k in self.edges)


def check_self_avoiding(lat: Lattice, sites) -> None:
    sites = list(sites)
    if not sites:
        raise ValueError("empty path")
    for s in sites:
        if not 0 <= s < lat.n_sites:
            raise ValueError(f"path leaves the lattice at site {s}")
    if len(set(sites)) != len(sites):
        raise ValueError("path is not self-avoiding")
    for a, b in zip(sites, sites[1:]):
        if b not in lat.neighbors(a):
            raise ValueError(f"sites {a} and {b} are not nearest neighbours")


def enumerate_saws(lat: Lattice, x: int, y: int, max_len: int) -> list[Path]:
    """All self-avoiding walks x -> y with at most ``max_len`` steps, DFS order."""
    if x == y:
        raise ValueError("endpoints must differ")
    lat.coords(x), lat.coords(y)
    out: list[Path] = []
    path = [x]
    visited = {x}

    def dfs(j: int) -> None:
        remaining = max_len - (len(path) - 1)
        for k in lat.neighbors(j):
            if k in visited:
                continue
            if k == y:
                out.append(Path(tuple(path) + (y,)))
                continue
            if lat.graph_distance(k, y) > remaining - 1:
                continue
            path.append(k)
            visited.add(k)
            dfs(k)
            path.pop()
            visited.remove(k)

    if max_len >= 1:
        dfs(x)
    return out


@numba.njit(cache=True)
def _count_saws(nbr, origin, max_len):
    counts = np.zeros(max_len + 1, dtype=np.int64)
    counts[0] = 1
    n_sites, deg = nbr.shape
    visited = np.zeros(n_sites, dtype=np.bool_)
    stack_site = np.zeros(max_len + 1, dtype=np.int64)
    stack_next = np.zeros(max_len + 1, dtype=np.int64)
    visited[origin] = True
    stack_site[0] = origin
    depth = 0
    while depth >= 0:
        slot = stack_next[depth]
        if slot >= deg or depth == max_len:
            visited[stack_site[depth]] = False
            stack_next[depth] = 0
            depth -= 1
            continue
        stack_next[depth] = slot + 1
        k = nbr[stack_site[depth], slot]
        if k < 0 or visited[k]:
            continue
        depth += 1
        counts[depth] += 1
        visited[k] = True
        stack_site[depth] = k
        stack_next[depth] = 0
    return counts


def saw_counts(lat: Lattice, origin: int, max_len: int) -> np.ndarray:
    """Number of self-avoiding walks from ``origin`` of each length 0..max_len (any endpoint)."""
    deg = max(lat.degree(j) for j in lat.sites())
    nbr = -np.ones((lat.n_sites, max(deg, 1)), dtype=np.int64)
    for j in lat.sites():
        nb = lat.neighbors(j)
        nbr[j, : len(nb)] = nb
    return _count_saws(nbr, int(origin), int(max_len))


def saw_count_bound(d: int, n: int) -> float:
    """``2d (2d-1)^(n-1)``: walks that never step straight back."""
    return 1.0 if n == 0 else 2 * d * (2 * d - 1) ** (n - 1)


def boundary_size(lat: Lattice, gamma) -> int:
    """Sites off the path with at least one neighbour on it."""
    on_path = set(gamma)
    return sum(1 for j in lat.sites() if j not in on_path and any(k in on_path for k in lat.neighbors(j)))


def boundary_bound(d: int, length: int) -> int:
    """``(2d-2)|gamma| + 2d``: each of the |gamma|+1 sites has 2d neighbours, 2|gamma| of them on the path."""
    return (2 * d - 2) * length + 2 * d


def _support_neighbors(m: np.ndarray) -> list[list[int]]:
    n = m.shape[0]
    return [[k for k in range(n) if k != j and m[j, k] != 0] for j in range(n)]


def path_expansion(m, x: int, y: int) -> float:
    """``sum_gamma prod(-M along gamma) * det(M off gamma)`` over SAWs x -> y in the support of M.

    Equals ``M^{-1}_xy det M`` (the (y, x) cofactor) for any square M.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if not (0 <= x < n and 0 <= y < n):
        raise IndexError("index out of range")
    if x == y:
        return det_minor(m, [x])
    nbrs = _support_neighbors(m)
    total = 0.0
    path = [x]
    on_path = [False] * n
    on_path[x] = True

    def dfs(j: int, weight: float) -> None:
        nonlocal total
        for k in nbrs[j]:
            if on_path[k]:
                continue
            w = weight * -m[j, k]
            if k == y:
                total += w * det_minor(m, path + [y])
                continue
            path.append(k)
            on_path[k] = True
            dfs(k, w)
            path.pop()
            on_path[k] = False

    dfs(x, 1.0)
    return total


def delete_path_matrix(params: ModelParams, t, gamma) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Matrix on the sites off ``gamma`` with masses enlarged by the path.

    Returns ``(D_tilde, eps_tilde, complement_sites)`` where
    ``eps_tilde_i = eps_i + beta * sum_{k on path, k ~ i} e^{t_k}`` and the diagonal
    carries ``eps_tilde_i * e^{-t_i}``.
    """
    lat = params.lattice
    check_self_avoiding(lat, gamma)
    t = np.asarray(t, dtype=float)
    on_path = set(int(j) for j in gamma)
    comp = np.array([j for j in lat.sites() if j not in on_path], dtype=np.int64)
    pos = {int(j): a for a, j in enumerate(comp)}
    beta = params.beta
    eps_t = params.eps[comp].astype(float)
    dt = np.zeros((comp.size, comp.size))
    for a, i in enumerate(comp):
        diag = 0.0
        for k in lat.neighbors(int(i)):
            if k in on_path:
                eps_t[a] += beta * math.exp(t[k])
            else:
                dt[a, pos[k]] = -beta
                diag += beta * math.exp(t[k] - t[i])
        dt[a, a] = diag
    dt[np.diag_indices(comp.size)] += eps_t * np.exp(-t[comp])
    return dt, eps_t, comp


def enumerate_spanning_trees(lat: Lattice) -> list[SpanningTree]:
    """Every spanning tree, by include/exclude recursion over the sorted edge list."""
    n = lat.n_sites
    if n > MAX_TREE_SITES:
        raise ValueError(f"spanning-tree enumeration limited to {MAX_TREE_SITES} sites, got {n}")
    edges = lat.edges()
    out: list[SpanningTree] = []

    def find(parent, a):
        while parent[a] != a:
            a = parent[a]
        return a

    def connected_with(chosen_parent, start):
        # can the chosen forest plus edges[start:] still connect every site?
        parent = list(chosen_parent)
        comps = n - sum(1 for a in range(n) if parent[a] != a)
        for j, k in edges[start:]:
            rj, rk = find(parent, j), find(parent, k)
            if rj != rk:
                parent[rj] = rk
                comps -= 1
        return comps == 1

    def rec(i: int, chosen: list, parent: list) -> None:
        if len(chosen) == n - 1:
            out.append(SpanningTree(frozenset(chosen)))
            return
        if i == len(edges) or not connected_with(parent, i):
            return
        j, k = edges[i]
        rj, rk = find(parent, j), find(parent, k)
        if rj != rk:
            p2 = list(parent)
            p2[rj] = rk
            rec(i + 1, chosen + [(j, k)], p2)
        rec(i + 1, chosen, parent)

    if n == 1:
        return [SpanningTree(frozenset())]
    rec(0, [], list(range(n)))
    return out


def kirchhoff_count(lat: Lattice) -> float:
    """Spanning-tree count from the reduced graph Laplacian."""
    if lat.n_sites == 1:
        return 1.0
    return det_minor(lat.laplacian(), [0])


def _require_single(params: ModelParams) -> tuple[int, float]:
    if params.pinning.mode is not PinningMode.SINGLE:
        raise ValueError("single-pinning scheme required")
    return params.pinning.sites[0], params.pinning.values[0]


def matrix_tree_check(params: ModelParams, t) -> tuple[float, float]:
    """``(det A, eps_0 e^{t_0} * sum_T prod_{(jk) in T} beta e^{t_j + t_k})``."""
    site0, eps0 = _require_single(params)
    t = np.asarray(t, dtype=float)
    lhs = float(np.linalg.det(build_A(params, t)))
    trees = enumerate_spanning_trees(params.lattice)
    rhs = eps0 * math.exp(t[site0]) * math.fsum(tree.weight(t, params.beta) for tree in trees)
    return lhs, rhs


def single_pinning_identity(params: ModelParams, t, x: int) -> float:
    """``eps_0 e^{t_0} (A^{-1})_{0x}``, which is 1 for every x."""
    site0, eps0 = _require_single(params)
    t = np.asarray(t, dtype=float)
    return eps0 * math.exp(t[site0]) * inverse_entry(factor(build_A(params, t)), site0, x)


# ---------------------------------------------------------------------------
# determinant oracles (generic over the entry type so Fractions stay exact)

def _perm_sign(p) -> int:
    inv = sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])
    return -1 if inv % 2 else 1


def permutation_det(m):
    """Leibniz expansion; O(n!) and only for tiny matrices."""
    n = len(m)
    if n == 0:
        return 1
    total = 0
    for p in itertools.permutations(range(n)):
        term = _perm_sign(p)
        for i, j in enumerate(p):
            term = term * m[i][j]
        total = total + term
    return total


def permutation_cofactor(m, x: int, y: int):
    """``(M^{-1})_{xy} det M`` as ``(-1)^{x+y}`` times the minor without row y, column x."""
    n = len(m)
    sub = [[m[i][j] for j in range(n) if j != x] for i in range(n) if i != y]
    return (-1) ** (x + y) * permutation_det(sub)


def loop_gas_det(m):
    """Determinant as a sum over covers of the index set by disjoint directed loops.

    A loop ``(j1..jm)`` contributes ``M_j1j1`` if m == 1, else
    ``-prod(-M_{j_i j_{i+1}})`` around the cycle.
    """
    n = len(m)

    def rec(free: tuple[int, ...]):
        if not free:
            return 1
        first, rest = free[0], free[1:]
        total = 0
        for size in range(len(rest) + 1):
            for others in itertools.permutations(rest, size):
                cyc = (first,) + others
                if size == 0:
                    amp = m[first][first]
                else:
                    amp = -1
                    for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                        amp = amp * -m[a][b]
                remaining = tuple(j for j in rest if j not in others)
                total = total + amp * rec(remaining)
        return total

    return rec(tuple(range(n)))
