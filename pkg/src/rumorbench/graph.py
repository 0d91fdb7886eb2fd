"""Undirected simple graphs, the graph families used in the experiments, and
structural metrics (degrees, distances, diameter)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, TextIO

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import GenerationRetryExhausted, InvalidParameters
from .rng import numpy_rng

INF = math.inf

FAMILIES = (
    "complete",
    "hypercube",
    "gnp",
    "random_regular",
    "fixed_degree_sequence",
    "kary_tree",
    "path",
    "two_clique_hub",
    "cycle",
    "star",
)
RANDOM_FAMILIES = frozenset({"gnp", "random_regular", "fixed_degree_sequence"})

DEFAULT_MAX_RESTARTS = 10_000


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph in CSR form.

    ``indices[indptr[v]:indptr[v + 1]]`` is the ascending neighbor list of ``v``.
    Use :meth:`from_edges` rather than the constructor.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    name: str = ""

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]] | np.ndarray, name: str = "") -> "Graph":
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if n < 1:
            raise InvalidParameters("graph needs at least one vertex")
        if e.size and (e.min() < 0 or e.max() >= n):
            raise InvalidParameters("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise InvalidParameters("self-loop in edge list")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            raise InvalidParameters("duplicate edge in edge list")
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, _frozen(indptr), _frozen(dst.astype(np.int64)), name)

    @cached_property
    def degrees(self) -> np.ndarray:
        return _frozen(np.diff(self.indptr))

    @property
    def edge_count(self) -> int:
        return int(self.indices.size // 2)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(v).tolist() for v in range(self.n)]

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of edges with ``u < v``, sorted lexicographically."""
        src = np.repeat(np.arange(self.n), self.degrees)
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])

    @cached_property
    def csr(self) -> sparse.csr_matrix:
        data = np.ones(self.indices.size, dtype=np.float64)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def metrics(self) -> "GraphMetrics":
        return metrics(self)

    def is_regular(self) -> bool:
        return bool(self.n == 0 or self.degrees.min() == self.degrees.max())

    def __repr__(self) -> str:
        return f"Graph({self.name or 'unnamed'}, n={self.n}, m={self.edge_count})"


@dataclass(frozen=True)
class GraphMetrics:
    min_degree: int
    avg_degree: float
    max_degree: int
    diameter: float  # int when connected, INF otherwise
    connected: bool

    @property
    def delta(self) -> int:
        return self.min_degree

    @property
    def Delta(self) -> int:
        return self.max_degree

    def to_dict(self) -> dict[str, Any]:
        return {
            "min_degree": self.min_degree,
            "avg_degree": self.avg_degree,
            "max_degree": self.max_degree,
            "diameter": None if self.diameter == INF else int(self.diameter),
            "connected": self.connected,
        }


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    ncomp, _ = csgraph.connected_components(g.csr, directed=False)
    return ncomp == 1


def bfs_distances(g: Graph, sources: int | Iterable[int]) -> np.ndarray:
    """Hop distances from each source (rows); unreachable vertices get -1."""
    src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    d = csgraph.shortest_path(g.csr, method="D", directed=False, unweighted=True, indices=src)
    d = np.where(np.isinf(d), -1, d).astype(np.int64)
    return d


def eccentricity(g: Graph, v: int) -> float:
    d = bfs_distances(g, v)[0]
    return INF if np.any(d < 0) else int(d.max())


def ball_sizes(g: Graph, block_bytes: int = 1 << 25) -> np.ndarray:
    """``out[u, k] = |Γ^{<=k}(u)|`` for ``k = 0 .. max eccentricity``.

    All-sources BFS at once: row ``u`` of ``reach`` is the packed bitset of
    ``Γ^{<=k}(u)``; one round ORs every vertex's neighbor rows into it.
    """
    n = g.n
    words = (n + 63) // 64
    bits = np.zeros((n, words * 64), dtype=bool)
    bits[np.arange(n), np.arange(n)] = True
    reach = np.packbits(bits, axis=1).view(np.uint64)
    del bits
    budget = max(1, block_bytes // (8 * words))
    deg = g.degrees
    sizes = [np.ones(n, dtype=np.int64)]
    while True:
        nxt = reach.copy()
        v = 0
        while v < n:
            # vertex block whose gathered neighbor rows stay within block_bytes
            w = int(np.searchsorted(g.indptr, g.indptr[v] + budget, side="right")) - 1
            w = min(n, max(w, v + 1))
            lo, hi = g.indptr[v], g.indptr[w]
            has = deg[v:w] > 0
            if hi > lo:
                gathered = reach[g.indices[lo:hi]]
                red = np.bitwise_or.reduceat(gathered, (g.indptr[v:w] - lo)[has], axis=0)
                nxt[np.arange(v, w)[has]] |= red
            v = w
        cnt = np.bitwise_count(nxt).sum(axis=1, dtype=np.int64)
        if np.array_equal(cnt, sizes[-1]):
            break
        sizes.append(cnt)
        reach = nxt
    return np.column_stack(sizes)


def metrics(g: Graph) -> GraphMetrics:
    """Exact degree statistics and diameter (BFS from every vertex)."""
    deg = g.degrees
    connected = is_connected(g)
    diameter: float = ball_sizes(g).shape[1] - 1 if connected else INF
    return GraphMetrics(
        min_degree=int(deg.min()) if g.n else 0,
        avg_degree=2.0 * g.edge_count / g.n,
        max_degree=int(deg.max()) if g.n else 0,
        diameter=diameter,
        connected=connected,
    )


def neighborhood_layers(g: Graph, u: int, k_max: int | None = None) -> list[set[int]]:
    """``[Γ^0(u), Γ^1(u), ...]``: vertex sets at exact distance k from ``u``."""
    if not 0 <= u < g.n:
        raise InvalidParameters(f"vertex {u} out of range")
    layers = [{u}]
    seen = {u}
    frontier = [u]
    while frontier and (k_max is None or len(layers) <= k_max):
        nxt: set[int] = set()
        for x in frontier:
            for y in g.neighbors(x).tolist():
                if y not in seen:
                    seen.add(y)
                    nxt.add(y)
        if not nxt:
            break
        layers.append(nxt)
        frontier = sorted(nxt)
    return layers


# --------------------------------------------------------------------------
# graph specifications and generators
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphSpec:
    family: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def of(cls, family: str, seed: int = 0, **params: Any) -> "GraphSpec":
        return cls(family, dict(params), seed)

    def with_seed(self, seed: int) -> "GraphSpec":
        return GraphSpec(self.family, dict(self.params), seed)

    @property
    def is_random(self) -> bool:
        return self.family in RANDOM_FAMILIES

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GraphSpec":
        return cls(d["family"], dict(d.get("params", {})), int(d.get("seed", 0)))

    def vertex_count(self) -> int:
        """Number of vertices the spec generates, without generating it."""
        p = self.params
        if self.family == "hypercube":
            return 1 << int(p["d"])
        if self.family == "kary_tree":
            k, depth = int(p["k"]), int(p["depth"])
            return (k ** (depth + 1) - 1) // (k - 1)
        if self.family == "fixed_degree_sequence":
            return len(p["degrees"])
        if self.family == "star":
            return int(p.get("n", int(p.get("leaves", 0)) + 1))
        return int(p["n"])


def _req(params: dict[str, Any], key: str, family: str) -> Any:
    if key not in params:
        raise InvalidParameters(f"{family} requires parameter '{key}'")
    return params[key]


def _int_param(params, key, family, minimum) -> int:
    val = _req(params, key, family)
    if isinstance(val, bool) or int(val) != val:
        raise InvalidParameters(f"{family}: '{key}' must be an integer")
    if int(val) < minimum:
        raise InvalidParameters(f"{family}: '{key}' must be >= {minimum}")
    return int(val)


def complete_graph(n: int) -> Graph:
    iu, ju = np.triu_indices(n, k=1)
    return Graph.from_edges(n, np.column_stack([iu, ju]), name=f"complete(n={n})")


def hypercube_graph(d: int) -> Graph:
    n = 1 << d
    v = np.arange(n)
    parts = []
    for i in range(d):
        w = v ^ (1 << i)
        mask = v < w
        parts.append(np.column_stack([v[mask], w[mask]]))
    edges = np.concatenate(parts) if parts else np.zeros((0, 2), dtype=np.int64)
    return Graph.from_edges(n, edges, name=f"hypercube(d={d})")


def path_graph(n: int) -> Graph:
    v = np.arange(n - 1)
    return Graph.from_edges(n, np.column_stack([v, v + 1]), name=f"path(n={n})")


def cycle_graph(n: int) -> Graph:
    v = np.arange(n)
    return Graph.from_edges(n, np.column_stack([v, (v + 1) % n]), name=f"cycle(n={n})")


def star_graph(leaves: int) -> Graph:
    """Hub 0 joined to leaves 1..leaves."""
    v = np.arange(1, leaves + 1)
    return Graph.from_edges(leaves + 1, np.column_stack([np.zeros_like(v), v]), name=f"star(leaves={leaves})")


def kary_tree(k: int, depth: int) -> Graph:
    """Complete k-ary tree in BFS order: root 0, children of v are k*v+1 .. k*v+k."""
    n = (k ** (depth + 1) - 1) // (k - 1)
    child = np.arange(1, n)
    return Graph.from_edges(n, np.column_stack([(child - 1) // k, child]), name=f"kary_tree(k={k},depth={depth})")


def two_clique_sizes(n: int) -> tuple[int, int]:
    a = (n - 1) // 2
    return a, n - 1 - a


def two_clique_hub(n: int) -> Graph:
    """Cliques on ``0..a-1`` and ``a..n-2`` plus hub ``n-1`` adjacent to all others."""
    a, b = two_clique_sizes(n)
    parts = []
    for lo, size in ((0, a), (a, b)):
        iu, ju = np.triu_indices(size, k=1)
        parts.append(np.column_stack([iu + lo, ju + lo]))
    others = np.arange(n - 1)
    parts.append(np.column_stack([others, np.full_like(others, n - 1)]))
    return Graph.from_edges(n, np.concatenate(parts), name=f"two_clique_hub(n={n})")


def _pair_index_to_edges(k: np.ndarray) -> np.ndarray:
    # k enumerates pairs i < j column-wise: k = j(j-1)/2 + i
    j = np.floor((1.0 + np.sqrt(1.0 + 8.0 * k.astype(np.float64))) / 2.0).astype(np.int64)
    j = np.where(j * (j - 1) // 2 > k, j - 1, j)
    j = np.where((j + 1) * j // 2 <= k, j + 1, j)
    i = k - j * (j - 1) // 2
    return np.column_stack([i, j])


def gnp_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    total = n * (n - 1) // 2
    if total <= 5_000_000:
        keys = np.flatnonzero(rng.random(total) < p)
    else:
        m = int(rng.binomial(total, p))
        keys = np.unique(rng.integers(0, total, size=m))
        while keys.size < m:
            extra = rng.integers(0, total, size=m - keys.size)
            keys = np.unique(np.concatenate([keys, extra]))
        # m distinct pairs, uniformly: conditioned on m this is G(n, p)
    return Graph.from_edges(n, _pair_index_to_edges(keys), name=f"gnp(n={n},p={p:.6g})")


def _expected_simple_probability(degrees: np.ndarray) -> float:
    s = degrees.sum()
    lam = float((degrees * (degrees - 1)).sum()) / (2.0 * s) if s else 0.0
    return math.exp(-lam - lam * lam)


def _pairing_restart(stubs: np.ndarray, n: int, rng: np.random.Generator, max_restarts: int) -> np.ndarray:
    for _ in range(max_restarts):
        perm = rng.permutation(stubs)
        a, b = perm[0::2], perm[1::2]
        if np.any(a == b):
            continue
        keys = np.minimum(a, b) * n + np.maximum(a, b)
        if np.unique(keys).size == keys.size:
            return np.column_stack([a, b])
    raise GenerationRetryExhausted(f"configuration model: no simple pairing in {max_restarts} restarts")


def _pairing_repair(stubs: np.ndarray, n: int, rng: np.random.Generator, max_restarts: int) -> np.ndarray:
    # pair all stubs; keep valid edges; re-pair only the stubs of rejected pairs
    for _ in range(max_restarts):
        keys = np.zeros(0, dtype=np.int64)
        left = stubs
        stale = 0
        while left.size and stale < 50:
            perm = rng.permutation(left)
            a, b = perm[0::2], perm[1::2]
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            k = lo * n + hi
            ok = (lo != hi) & ~np.isin(k, keys)
            _, first = np.unique(k, return_index=True)
            once = np.zeros(k.size, dtype=bool)
            once[first] = True
            ok &= once
            if ok.any():
                keys = np.concatenate([keys, k[ok]])
                stale = 0
            else:
                stale += 1
            left = np.concatenate([a[~ok], b[~ok]])
        if left.size == 0:
            return np.column_stack([keys // n, keys % n])
    raise GenerationRetryExhausted(f"configuration model: no simple pairing in {max_restarts} restarts")


def configuration_model(
    degrees: Iterable[int],
    rng: np.random.Generator,
    method: str = "auto",
    max_restarts: int = DEFAULT_MAX_RESTARTS,
    name: str = "",
) -> Graph:
    """Simple graph with the given degree sequence via stub pairing.

    ``method="restart"`` rejects whole pairings until one is simple, which is
    exactly uniform but only practical for small degrees.  ``"repair"``
    re-pairs only the offending stubs.  ``"auto"`` picks ``restart`` when the
    expected acceptance rate is at least 1e-3.
    """
    deg = np.asarray(list(degrees), dtype=np.int64)
    n = deg.size
    if n == 0 or deg.min() < 0 or deg.max() >= n:
        raise InvalidParameters("degrees must lie in [0, n)")
    if deg.sum() % 2:
        raise InvalidParameters("degree sum must be even")
    stubs = np.repeat(np.arange(n), deg)
    if method == "auto":
        method = "restart" if _expected_simple_probability(deg) >= 1e-3 else "repair"
    if method == "restart":
        edges = _pairing_restart(stubs, n, rng, max_restarts)
    elif method == "repair":
        edges = _pairing_repair(stubs, n, rng, max_restarts)
    else:
        raise InvalidParameters(f"unknown pairing method {method!r}")
    return Graph.from_edges(n, edges, name=name or f"degree_sequence(n={n})")


def generate(spec: GraphSpec) -> Graph:
    """Build the graph described by ``spec``; equal specs give identical graphs."""
    fam, p = spec.family, spec.params
    if fam == "complete":
        return complete_graph(_int_param(p, "n", fam, 1))
    if fam == "hypercube":
        return hypercube_graph(_int_param(p, "d", fam, 1))
    if fam == "path":
        return path_graph(_int_param(p, "n", fam, 2))
    if fam == "cycle":
        return cycle_graph(_int_param(p, "n", fam, 3))
    if fam == "star":
        leaves = int(p["leaves"]) if "leaves" in p else _int_param(p, "n", fam, 2) - 1
        if leaves < 1:
            raise InvalidParameters("star needs at least one leaf")
        return star_graph(leaves)
    if fam == "kary_tree":
        k = _int_param(p, "k", fam, 2)
        depth = _int_param(p, "depth", fam, 1)
        return kary_tree(k, depth)
    if fam == "two_clique_hub":
        n = _int_param(p, "n", fam, 4)
        return two_clique_hub(n)
    if fam == "gnp":
        n = _int_param(p, "n", fam, 1)
        prob = float(_req(p, "p", fam))
        if not 0.0 <= prob <= 1.0:
            raise InvalidParameters("gnp: p must lie in [0, 1]")
        return gnp_graph(n, prob, numpy_rng(spec.seed, fam))
    if fam == "random_regular":
        n = _int_param(p, "n", fam, 1)
        d = _int_param(p, "d", fam, 0)
        if d >= n:
            raise InvalidParameters("random_regular requires d < n")
        if (n * d) % 2:
            raise InvalidParameters("random_regular requires n*d even")
        return configuration_model(
            [d] * n,
            numpy_rng(spec.seed, fam),
            method=p.get("method", "auto"),
            max_restarts=int(p.get("max_restarts", DEFAULT_MAX_RESTARTS)),
            name=f"random_regular(n={n},d={d})",
        )
    if fam == "fixed_degree_sequence":
        degrees = list(_req(p, "degrees", fam))
        return configuration_model(
            degrees,
            numpy_rng(spec.seed, fam),
            method=p.get("method", "auto"),
            max_restarts=int(p.get("max_restarts", DEFAULT_MAX_RESTARTS)),
        )
    raise InvalidParameters(f"unknown graph family {fam!r}")


def sparse_gnp_probability(n: int) -> float:
    """``(ln n + 2 ln ln n) / n``: just above the connectivity threshold."""
    ln = math.log(n)
    return (ln + 2.0 * math.log(ln)) / n


# --------------------------------------------------------------------------
# edge-list text format
# --------------------------------------------------------------------------


def write_edge_list(g: Graph, fh: TextIO) -> None:
    edges = g.edges()
    fh.write(f"{g.n} {len(edges)}\n")
    for u, v in edges.tolist():
        fh.write(f"{u} {v}\n")


def read_edge_list(fh: TextIO, name: str = "") -> Graph:
    lines = [ln.split() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or len(lines[0]) != 2:
        raise InvalidParameters("edge list must start with 'n m'")
    n, m = int(lines[0][0]), int(lines[0][1])
    body = lines[1:]
    if len(body) != m:
        raise InvalidParameters(f"edge list header says {m} edges, found {len(body)}")
    edges = np.array([[int(a), int(b)] for a, b in body], dtype=np.int64).reshape(-1, 2)
    return Graph.from_edges(n, edges, name=name)
