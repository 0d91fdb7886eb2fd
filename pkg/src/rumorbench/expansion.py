"""Finite-size audits of vertex expansion (P1), edge expansion (P2), degree
balance (P3), and spectral checks for regular graphs.

The expansion properties are asymptotic statements about constants; these
auditors measure the constants on a concrete graph and compare them with
configurable pass bars.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from scipy.sparse import csgraph
from scipy.sparse.linalg import eigsh

from .errors import GraphDisconnected, InvalidParameters, NotRegular, SizeWindowEmpty
from .graph import Graph, ball_sizes, is_connected
from .rng import numpy_rng

EXACT_P1_LIMIT = 20
DENSE_SPECTRAL_LIMIT = 4096
NUMERIC_SLACK = 1e-6


@dataclass(frozen=True)
class ExpansionParams:
    C_alpha: float = 1.0
    C_beta_threshold: float = 0.05
    C_delta: float = 1.0 / 6.0
    C_omega: float = 32.0
    p3_max_ratio: float = 5.0
    p3_min_ratio: float = 0.5

    def __post_init__(self) -> None:
        if self.C_alpha <= 0:
            raise InvalidParameters("C_alpha must be positive")
        if not 0 < self.C_delta < 1:
            raise InvalidParameters("C_delta must lie in (0, 1)")
        if self.C_omega <= 0:
            raise InvalidParameters("C_omega must be positive")
        if not 0 < self.C_beta_threshold < 1:
            raise InvalidParameters("C_beta_threshold must lie in (0, 1)")


@dataclass
class P1Report:
    min_observed_ratio: float
    witness: list[int]
    mode: str
    passed: bool
    witness_kind: str
    boundary_size: int
    window: tuple[int, int]
    subsets_examined: int
    level_set_ratio: float | None = None
    level_set: list[int] | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        d["window"] = list(self.window)
        return d


@dataclass
class P2Report:
    max_deficient_excess: float
    witness: list[int]
    passed: bool
    worst_deficient_count: int
    subsets_examined: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass
class P3Report:
    delta: int
    d: float
    Delta: int
    delta_ratio: float
    max_ratio: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass
class ExpansionReport:
    p1: P1Report
    p2: P2Report
    p3: P3Report

    @property
    def passed(self) -> bool:
        return self.p1.passed and self.p2.passed and self.p3.passed

    def to_dict(self) -> dict:
        return {"p1": self.p1.to_dict(), "p2": self.p2.to_dict(), "p3": self.p3.to_dict(), "pass": self.passed}


def _require_connected(g: Graph) -> None:
    if not is_connected(g):
        raise GraphDisconnected("expansion audits need a connected graph")


def avg_degree(g: Graph) -> float:
    return 2.0 * g.edge_count / g.n


def p1_window(g: Graph, params: ExpansionParams) -> tuple[int, int]:
    hi = math.floor(params.C_alpha * g.n / avg_degree(g) + 1e-9)
    hi = min(hi, g.n - 1)  # S = V has no boundary at all
    if hi < 3:
        raise SizeWindowEmpty(f"C_alpha*n/d = {params.C_alpha * g.n / avg_degree(g):.3f} < 3")
    return 3, hi


def outer_boundary(g: Graph, subset: Iterable[int]) -> set[int]:
    """``Γ(S) \\ S``."""
    s = set(subset)
    out: set[int] = set()
    for v in s:
        out.update(g.neighbors(v).tolist())
    return out - s


def expansion_ratio(g: Graph, subset: Iterable[int]) -> float:
    s = set(subset)
    return len(outer_boundary(g, s)) / (avg_degree(g) * len(s))


def is_hypercube(g: Graph) -> bool:
    n = g.n
    d = n.bit_length() - 1
    if n < 2 or n != 1 << d or not g.is_regular() or g.degree(0) != d:
        return False
    v = np.arange(n)
    flips = np.sort(np.stack([v ^ (1 << i) for i in range(d)], axis=1), axis=1)
    return bool(np.array_equal(flips.ravel(), g.indices))


def hypercube_level_set(d: int) -> list[int]:
    """Vertices of Hamming weight ``1 .. max(1, floor(ln d))``."""
    top = max(1, math.floor(math.log(d)))
    weights = np.bitwise_count(np.arange(1 << d, dtype=np.uint64))
    return np.flatnonzero((weights >= 1) & (weights <= top)).tolist()


def _connected_subsets_exact(g: Graph, lo: int, hi: int):
    """Yield ``(mask, neighborhood mask)`` of every connected subset with ``lo <= |S| <= hi``."""
    nb = [0] * g.n
    for v in range(g.n):
        for u in g.neighbors(v).tolist():
            nb[v] |= 1 << u
    level = {1 << v: nb[v] for v in range(g.n)}
    size = 1
    while level and size < hi:
        nxt: dict[int, int] = {}
        for mask, nmask in level.items():
            ext = nmask & ~mask
            while ext:
                low = ext & -ext
                ext ^= low
                new = mask | low
                if new not in nxt:
                    nxt[new] = nmask | nb[low.bit_length() - 1]
        size += 1
        level = nxt
        if size >= lo:
            yield from level.items()


def _bridge_sides(g: Graph) -> list[tuple[int, int, int]]:
    """``(child, parent, size)`` per bridge: the side containing ``child`` of a
    BFS tree rooted at 0 has ``size`` vertices; the other side ``n - size``."""
    import networkx as nx

    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edges().tolist())
    bridges = list(nx.bridges(G))
    if not bridges:
        return []
    order, pred = csgraph.breadth_first_order(g.csr, 0, directed=False, return_predecessors=True)
    size = np.ones(g.n, dtype=np.int64)
    for v in order[::-1][:-1]:
        size[pred[v]] += size[v]
    out = []
    for a, b in bridges:
        child, parent = (a, b) if pred[a] == b else (b, a)
        out.append((int(child), int(parent), int(size[child])))
    return out


def _side_of(g: Graph, child: int, parent: int) -> list[int]:
    seen = {child}
    stack = [child]
    while stack:
        x = stack.pop()
        for y in g.neighbors(x).tolist():
            if y not in seen and not (x == child and y == parent):
                seen.add(y)
                stack.append(y)
    return sorted(seen)


def audit_p1(
    g: Graph,
    params: ExpansionParams = ExpansionParams(),
    mode: str = "sampled",
    sample_count: int = 500,
    seed: int = 0,
) -> P1Report:
    """Smallest ``|Γ(S)\\S| / (d|S|)`` over connected ``S`` with ``3 <= |S| <= C_alpha n/d``.

    ``exact`` enumerates every connected subset (n <= 20).  ``sampled``
    grows random connected subsets and adds deterministic witnesses: every
    BFS ball in the window, both sides of every bridge, and the low-weight
    level set on hypercubes.
    """
    _require_connected(g)
    lo, hi = p1_window(g, params)
    d = avg_degree(g)
    best = (math.inf, [], "none", 0)
    examined = 0

    def consider(ratio: float, witness, kind: str, boundary: int) -> None:
        nonlocal best
        if ratio < best[0]:
            best = (ratio, witness, kind, boundary)

    level_ratio = level_set = None
    if mode == "exact":
        if g.n > EXACT_P1_LIMIT:
            raise InvalidParameters(f"exact P1 audit limited to n <= {EXACT_P1_LIMIT}")
        for mask, nmask in _connected_subsets_exact(g, lo, hi):
            examined += 1
            s = mask.bit_count()
            b = (nmask & ~mask).bit_count()
            r = b / (d * s)
            if r < best[0]:
                best = (r, mask, "enumerated", b)
        if isinstance(best[1], int):
            m = best[1]
            best = (best[0], [v for v in range(g.n) if m >> v & 1], best[2], best[3])
    elif mode == "sampled":
        balls = ball_sizes(g)
        for k in range(balls.shape[1] - 1):
            inner, outer = balls[:, k], balls[:, k + 1]
            ok = (inner >= lo) & (inner <= hi)
            if not ok.any():
                continue
            examined += int(ok.sum())
            ratios = np.where(ok, (outer - inner) / (d * np.maximum(inner, 1)), np.inf)
            u = int(np.argmin(ratios))
            if ratios[u] < best[0]:
                dist = csgraph.shortest_path(g.csr, directed=False, unweighted=True, indices=[u])[0]
                consider(float(ratios[u]), np.flatnonzero(dist <= k).tolist(), f"bfs_ball(u={u},k={k})", int(outer[u] - inner[u]))
        for child, parent, size in _bridge_sides(g):
            for side_size, inside_child in ((size, True), (g.n - size, False)):
                if lo <= side_size <= hi:
                    examined += 1
                    r = 1.0 / (d * side_size)
                    if r < best[0]:
                        side = _side_of(g, child, parent)
                        if not inside_child:
                            side = sorted(set(range(g.n)) - set(side))
                        consider(r, side, "bridge_side", 1)
        if is_hypercube(g):
            level_set = hypercube_level_set(g.degree(0))
            b = len(outer_boundary(g, level_set))
            level_ratio = b / (d * len(level_set))
            if lo <= len(level_set) <= hi:
                examined += 1
                consider(level_ratio, level_set, "hypercube_level_set", b)
        rng = numpy_rng(seed, "p1")
        for _ in range(sample_count):
            target = int(rng.integers(lo, hi + 1))
            root = int(rng.integers(g.n))
            s = {root}
            frontier = set(g.neighbors(root).tolist())
            while len(s) < target and frontier:
                pick = sorted(frontier)[int(rng.integers(len(frontier)))]
                s.add(pick)
                frontier.discard(pick)
                frontier.update(u for u in g.neighbors(pick).tolist() if u not in s)
            if len(s) >= lo:
                examined += 1
                consider(len(frontier) / (d * len(s)), s, "random_growth", len(frontier))
    else:
        raise InvalidParameters(f"unknown P1 mode {mode!r}")
    ratio, witness, kind, boundary = best
    return P1Report(
        min_observed_ratio=float(ratio),
        witness=sorted(int(v) for v in witness),
        mode=mode,
        passed=bool(ratio >= params.C_beta_threshold),
        witness_kind=kind,
        boundary_size=int(boundary),
        window=(lo, hi),
        subsets_examined=examined,
        level_set_ratio=level_ratio,
        level_set=level_set,
    )


def deficient_count(g: Graph, subset: Sequence[int], C_delta: float) -> int:
    """Vertices outside ``S`` with fewer than ``C_delta·d·|S|/n`` neighbors in ``S``."""
    ind = np.zeros(g.n)
    ind[list(subset)] = 1.0
    deg_s = g.csr @ ind
    outside = ind == 0
    need = C_delta * avg_degree(g) * len(subset) / g.n
    return int(np.count_nonzero(outside & (deg_s < need - 1e-12)))


def p2_size_grid(n: int, points: int = 16) -> list[int]:
    if n - 1 < 3:
        return [max(1, n - 1)]
    return sorted({int(round(x)) for x in np.geomspace(3, n - 1, num=points)})


def audit_p2(
    g: Graph,
    params: ExpansionParams = ExpansionParams(),
    subset_samples: int = 200,
    seed: int = 0,
    subsets: Iterable[Sequence[int]] | None = None,
) -> P2Report:
    """Largest excess of deficient outside vertices over ``C_omega n^2 / (d|S|)``.

    Samples uniform subsets whose sizes cycle through a geometric grid
    ``3 .. n-1``; ``subsets`` replaces the sample with explicit sets.
    """
    _require_connected(g)
    d = avg_degree(g)
    n = g.n
    if subsets is None:
        rng = numpy_rng(seed, "p2")
        grid = p2_size_grid(n)
        subsets = [rng.choice(n, size=grid[i % len(grid)], replace=False).tolist() for i in range(subset_samples)]
    best_excess, best_witness, worst_count, examined = -math.inf, [], 0, 0
    for s in subsets:
        s = list(s)
        if not s:
            continue
        examined += 1
        c = deficient_count(g, s, params.C_delta)
        excess = c - params.C_omega * n * n / (d * len(s))
        worst_count = max(worst_count, c)
        if excess > best_excess:
            best_excess, best_witness = excess, sorted(s)
    return P2Report(
        max_deficient_excess=float(best_excess),
        witness=best_witness,
        passed=bool(best_excess <= 0),
        worst_deficient_count=worst_count,
        subsets_examined=examined,
    )


def audit_p3(g: Graph, params: ExpansionParams = ExpansionParams()) -> P3Report:
    deg = g.degrees
    d = avg_degree(g)
    delta, Delta = int(deg.min()), int(deg.max())
    ok = Delta <= params.p3_max_ratio * d and (d <= math.log(g.n) or delta >= params.p3_min_ratio * d)
    return P3Report(delta, d, Delta, delta / d, Delta / d, bool(ok))


def audit(
    g: Graph,
    params: ExpansionParams = ExpansionParams(),
    p1_mode: str | None = None,
    sample_count: int = 500,
    subset_samples: int = 200,
    seed: int = 0,
) -> ExpansionReport:
    mode = p1_mode or ("exact" if g.n <= EXACT_P1_LIMIT else "sampled")
    return ExpansionReport(
        audit_p1(g, params, mode, sample_count, seed),
        audit_p2(g, params, subset_samples, seed),
        audit_p3(g, params),
    )


# --------------------------------------------------------------------------
# spectral checks
# --------------------------------------------------------------------------


@dataclass
class SpectralReport:
    lambda1: float
    lambda2: float
    lambda_n: float
    lam: float
    is_regular: bool
    ramanujan_pass: bool | None
    strong_expander_constant: float
    approximate: bool
    max_residual: float
    eigenvalues: np.ndarray | None = field(default=None, repr=False)

    def trace_identities(self) -> tuple[float, float]:
        """``(Σλ_i, Σλ_i²)``; dense path only."""
        if self.eigenvalues is None:
            raise InvalidParameters("full spectrum not available on the iterative path")
        ev = self.eigenvalues
        return float(ev.sum()), float((ev * ev).sum())

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "lambda_n": self.lambda_n,
            "is_regular": self.is_regular,
            "ramanujan_pass": self.ramanujan_pass,
            "strong_expander_constant": self.strong_expander_constant,
            "approximate": self.approximate,
            "max_residual": self.max_residual,
        }


def spectral(g: Graph, dense_limit: int = DENSE_SPECTRAL_LIMIT) -> SpectralReport:
    """Extremal adjacency eigenvalues; ``lam = max(|λ_2|, |λ_n|)``.

    Dense symmetric eigendecomposition up to ``dense_limit`` vertices,
    Lanczos (flagged approximate) beyond.  ``ramanujan_pass`` is ``None``
    for irregular graphs.
    """
    n = g.n
    if n < 2:
        raise InvalidParameters("spectral report needs n >= 2")
    A = g.csr
    if n <= dense_limit:
        vals, vecs = scipy.linalg.eigh(A.toarray())
        idx = [n - 1, n - 2, 0]
        pairs = [(vals[i], vecs[:, i]) for i in idx]
        approximate = False
        eigenvalues = vals[::-1].copy()
    else:
        top_vals, top_vecs = eigsh(A, k=2, which="LA", tol=1e-12)
        bot_vals, bot_vecs = eigsh(A, k=1, which="SA", tol=1e-12)
        o = np.argsort(top_vals)[::-1]
        pairs = [(top_vals[o[0]], top_vecs[:, o[0]]), (top_vals[o[1]], top_vecs[:, o[1]]), (bot_vals[0], bot_vecs[:, 0])]
        approximate = True
        eigenvalues = None
    residual = max(float(np.linalg.norm(A @ v - lam * v) / np.linalg.norm(v)) for lam, v in pairs)
    l1, l2, ln = (float(p[0]) for p in pairs)
    lam = max(abs(l2), abs(ln))
    regular = g.is_regular()
    d = avg_degree(g)
    ram = bool(lam <= 2.0 * math.sqrt(d - 1) + 1e-9) if regular and d >= 1 else None
    return SpectralReport(
        lambda1=l1,
        lambda2=l2,
        lambda_n=ln,
        lam=lam,
        is_regular=regular,
        ramanujan_pass=ram,
        strong_expander_constant=lam / math.sqrt(d) if d > 0 else math.inf,
        approximate=approximate,
        max_residual=residual,
        eigenvalues=eigenvalues,
    )


def _regular_degree(g: Graph) -> int:
    if not g.is_regular():
        raise NotRegular("check requires a regular graph")
    return int(g.degrees[0])


def edges_between(g: Graph, a: Sequence[int], b: Sequence[int]) -> int:
    """``|E(A, B)|`` counting ordered pairs ``(u, v)`` with ``u ∈ A``, ``v ∈ B``."""
    ia = np.zeros(g.n)
    ib = np.zeros(g.n)
    ia[list(a)] = 1.0
    ib[list(b)] = 1.0
    return int(round(ia @ (g.csr @ ib)))


@dataclass
class MixingReport:
    pairs: int
    max_violation: float
    violations: int
    slack: float = NUMERIC_SLACK

    def to_dict(self) -> dict:
        return asdict(self)


def mixing_check(
    g: Graph,
    lam: float,
    pair_samples: int = 100,
    seed: int = 0,
    pairs: Iterable[tuple[Sequence[int], Sequence[int]]] | None = None,
    slack: float = NUMERIC_SLACK,
) -> MixingReport:
    """Largest ``| |E(A,B)| - d|A||B|/n | - λ sqrt(|A||B|)`` over sampled pairs."""
    d = _regular_degree(g)
    n = g.n
    if pairs is None:
        rng = numpy_rng(seed, "mixing")
        pairs = []
        for _ in range(pair_samples):
            sa, sb = (int(x) for x in rng.integers(0, n + 1, size=2))
            pairs.append((rng.choice(n, sa, replace=False).tolist(), rng.choice(n, sb, replace=False).tolist()))
    worst, bad, count = -math.inf, 0, 0
    for a, b in pairs:
        count += 1
        e = edges_between(g, a, b)
        dev = abs(e - d * len(a) * len(b) / n) - lam * math.sqrt(len(a) * len(b))
        worst = max(worst, dev)
        bad += dev > slack
    return MixingReport(count, float(worst), int(bad), slack)


@dataclass
class TannerReport:
    subsets: int
    min_margin: float
    violations: int
    slack: float = NUMERIC_SLACK

    def to_dict(self) -> dict:
        return asdict(self)


def tanner_bound(d: float, lam: float, s: int, n: int) -> float:
    return d * d * s / (lam * lam + (d * d - lam * lam) * s / n)


def tanner_check(
    g: Graph,
    lam: float,
    samples: int = 100,
    seed: int = 0,
    slack: float = NUMERIC_SLACK,
) -> TannerReport:
    """Check ``|Γ(S)| >= d²|S| / (λ² + (d² - λ²)|S|/n)`` on random and BFS-grown subsets."""
    d = _regular_degree(g)
    n = g.n
    rng = numpy_rng(seed, "tanner")
    worst, bad = math.inf, 0
    for i in range(samples):
        s = int(rng.integers(1, n + 1))
        if i % 2:
            subset = rng.choice(n, s, replace=False)
        else:
            dist = csgraph.shortest_path(g.csr, directed=False, unweighted=True, indices=[int(rng.integers(n))])[0]
            subset = np.argsort(dist, kind="stable")[:s]
        ind = np.zeros(n)
        ind[subset] = 1.0
        gamma = int(np.count_nonzero(g.csr @ ind))
        margin = gamma - tanner_bound(d, lam, s, n)
        worst = min(worst, margin)
        bad += margin < -slack * max(1.0, gamma)
    return TannerReport(samples, float(worst), int(bad), slack)
