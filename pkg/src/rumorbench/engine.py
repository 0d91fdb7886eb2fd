"""Round-synchronous push rumor spreading.

Three call models share one batched core:

``fully_random``
    every informed vertex calls an independent uniform neighbor each round.
``quasirandom_rolling``
    every vertex ``v`` fixes an offset ``i_v`` up front; its round-``t`` call
    goes to ``π_v^{t-1}(i_v)``, i.e. list position ``(i_v + t - 1) mod deg(v)``.
    Calls only carry the rumor once ``v`` is informed.
``quasirandom_literal``
    a vertex informed in round ``t_v`` picks a uniform list position ``j_v``
    for its first call (round ``t_v + 1``) and walks its list from there.

A vertex informed in round ``t`` first calls in round ``t + 1``.  All random
choices come from counter-based streams keyed by the run seed, so a run is a
pure function of ``(graph, lists, config)`` and batched runs agree exactly
with single runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np
from scipy import stats

from .errors import BoundViolation, InvalidParameters, InvalidPermutation
from .graph import INF, Graph, bfs_distances, path_graph, two_clique_hub, two_clique_sizes
from .rng import (
    CALL_STREAM,
    LOSS_STREAM,
    OFFSET_STREAM,
    counter_index,
    counter_uniform,
    derive_seed,
    numpy_rng,
)

FULLY_RANDOM = "fully_random"
ROLLING = "quasirandom_rolling"
LITERAL = "quasirandom_literal"
MODELS = (FULLY_RANDOM, ROLLING, LITERAL)
QUASIRANDOM = frozenset({ROLLING, LITERAL})
MODEL_ALIASES = {"quasirandom": ROLLING, "random": FULLY_RANDOM, "rolling": ROLLING, "literal": LITERAL}

NEVER = np.iinfo(np.int64).max


def canonical_model(name: str) -> str:
    name = MODEL_ALIASES.get(name, name)
    if name not in MODELS:
        raise InvalidParameters(f"unknown model {name!r}; expected one of {MODELS}")
    return name


def default_max_rounds(n: int, adversarial: bool = False) -> int:
    if adversarial:
        return max(1, 4 * n)
    # never below the quasirandom worst case 2n - 3
    return max(1, 40 * math.ceil(math.log2(max(n, 2))), 2 * n - 3)


def run_key(seed: int) -> int:
    return derive_seed(seed, "run")


# --------------------------------------------------------------------------
# lists and offsets
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ListAssignment:
    """Cyclic neighbor order per vertex, stored CSR-aligned with the graph."""

    indptr: np.ndarray
    order: np.ndarray
    strategy: str = "natural"

    def of(self, v: int) -> list[int]:
        return self.order[self.indptr[v] : self.indptr[v + 1]].tolist()

    def validate(self, g: Graph) -> None:
        if self.indptr.shape != g.indptr.shape or not np.array_equal(self.indptr, g.indptr):
            raise InvalidPermutation("list assignment does not match the graph's degrees")
        for v in range(g.n):
            lo, hi = g.indptr[v], g.indptr[v + 1]
            if not np.array_equal(np.sort(self.order[lo:hi]), g.indices[lo:hi]):
                raise InvalidPermutation(f"list of vertex {v} is not a permutation of its neighbors")

    def to_json(self) -> list[list[int]]:
        return [self.of(v) for v in range(self.indptr.size - 1)]


def make_lists(
    g: Graph,
    strategy: str = "natural",
    seed: int = 0,
    explicit: Sequence[Sequence[int]] | None = None,
) -> ListAssignment:
    """``natural`` (ascending ids), ``random`` (seeded per-vertex shuffles) or ``explicit``."""
    if strategy == "natural":
        return ListAssignment(g.indptr, g.indices, "natural")
    if strategy in ("random", "seeded-random-permutation"):
        # one sort over (vertex, random key) shuffles every list independently
        keys = numpy_rng(seed, "lists").random(g.indices.size)
        owner = np.repeat(np.arange(g.n), g.degrees)
        perm = np.lexsort((keys, owner))
        order = g.indices[perm]
        order.setflags(write=False)
        return ListAssignment(g.indptr, order, "random")
    if strategy == "explicit":
        if explicit is None or len(explicit) != g.n:
            raise InvalidPermutation("explicit strategy needs one list per vertex")
        flat = []
        for v, lst in enumerate(explicit):
            lst = [int(x) for x in lst]
            if sorted(lst) != g.neighbors(v).tolist():
                raise InvalidPermutation(f"list of vertex {v} is not a permutation of its neighbors")
            flat.extend(lst)
        order = np.asarray(flat, dtype=np.int64)
        order.setflags(write=False)
        return ListAssignment(g.indptr, order, "explicit")
    raise InvalidParameters(f"unknown list strategy {strategy!r}")


@dataclass(frozen=True, eq=False)
class Offsets:
    """Initial list position ``i_v`` of every vertex (rolling semantics)."""

    index: np.ndarray

    def validate(self, g: Graph) -> None:
        deg = np.maximum(g.degrees, 1)
        if self.index.shape != (g.n,) or np.any(self.index < 0) or np.any(self.index >= deg):
            raise InvalidParameters("offsets must satisfy 0 <= i_v < deg(v)")


def draw_offsets(g: Graph, seed: int) -> Offsets:
    idx = counter_index(run_key(seed), np.arange(g.n), 0, np.maximum(g.degrees, 1), OFFSET_STREAM)
    return Offsets(idx)


def scheduled_callee(g: Graph, lists: ListAssignment, offsets: Offsets, t: int) -> np.ndarray:
    """Target of every vertex's round-``t`` call under ever-rolling lists.

    Isolated vertices make no call; they are reported as calling themselves.
    """
    deg = np.maximum(g.degrees, 1)
    pos = (offsets.index + (t - 1)) % deg
    out = lists.order[np.minimum(lists.indptr[:-1] + pos, max(lists.order.size - 1, 0))] if lists.order.size else np.arange(g.n)
    return np.where(g.degrees > 0, out, np.arange(g.n))


# --------------------------------------------------------------------------
# runs and traces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    model: str = ROLLING
    start_vertex: int = 0
    seed: int = 0
    max_rounds: int | None = None
    loss_probability: float = 0.0
    record_trace: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", canonical_model(self.model))
        if self.max_rounds is not None and self.max_rounds < 1:
            raise InvalidParameters("max_rounds must be >= 1")
        if not 0.0 <= self.loss_probability < 1.0:
            raise InvalidParameters("loss_probability must lie in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "start_vertex": self.start_vertex,
            "seed": self.seed,
            "max_rounds": self.max_rounds,
            "loss_probability": self.loss_probability,
        }


@dataclass(frozen=True)
class CallEvent:
    t: int
    caller: int
    callee: int
    newly_informed: bool
    delivered: bool = True


@dataclass
class Trace:
    model: str
    seed: int
    start: int
    n: int
    informed_at: np.ndarray
    rounds_run: int
    events: list[CallEvent] = field(default_factory=list)
    first_positions: np.ndarray | None = None  # literal model: j_v of each vertex

    @property
    def broadcast_time(self) -> float:
        if np.any(self.informed_at == NEVER):
            return INF
        return int(self.informed_at.max())

    @property
    def completed(self) -> bool:
        return self.broadcast_time != INF

    def informed_counts(self) -> np.ndarray:
        """``|I_t|`` for ``t = 0 .. rounds_run``."""
        return informed_counts(self.informed_at[None, :], self.rounds_run)[0]

    def informed_at_list(self) -> list[int | None]:
        return [None if x == NEVER else int(x) for x in self.informed_at]

    def write_jsonl(self, fh: TextIO, extra_header: dict | None = None) -> None:
        header = {"model": self.model, "seed": self.seed, "n": self.n, "start": self.start}
        bt = self.broadcast_time
        header["broadcast_time"] = None if bt == INF else bt
        if extra_header:
            header.update(extra_header)
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for e in self.events:
            rec = {"t": e.t, "caller": e.caller, "callee": e.callee, "new": e.newly_informed}
            if not e.delivered:
                rec["lost"] = True
            fh.write(json.dumps(rec) + "\n")


def informed_counts(informed_at: np.ndarray, rounds: int) -> np.ndarray:
    """Row-wise ``|I_t|`` for ``t = 0..rounds`` from a ``(B, n)`` informed-at matrix."""
    B = informed_at.shape[0]
    out = np.zeros((B, rounds + 1), dtype=np.int64)
    for b in range(B):
        row = informed_at[b]
        hist = np.bincount(row[row <= rounds], minlength=rounds + 1)
        out[b] = np.cumsum(hist[: rounds + 1])
    return out


@dataclass
class BatchResult:
    informed_at: np.ndarray  # (B, n)
    rounds_run: int
    positions: np.ndarray | None = None

    @property
    def broadcast_times(self) -> np.ndarray:
        """Float array; ``inf`` for runs that did not finish."""
        done = np.all(self.informed_at != NEVER, axis=1)
        bt = np.full(self.informed_at.shape[0], np.inf)
        if done.any():
            bt[done] = self.informed_at[done].max(axis=1)
        return bt


def _run_core(
    g: Graph,
    lists: ListAssignment,
    model: str,
    keys: np.ndarray,
    starts: np.ndarray,
    max_rounds: int,
    loss: float = 0.0,
    offsets: np.ndarray | None = None,
    events: list | None = None,
) -> BatchResult:
    B, n = keys.size, g.n
    deg = g.degrees
    bound = np.maximum(deg, 1)
    base = lists.indptr[:-1]
    order = lists.order
    informed_at = np.full((B, n), NEVER, dtype=np.int64)
    rows0 = np.arange(B)
    informed_at[rows0, starts] = 0
    count = np.ones(B, dtype=np.int64)
    pos0 = None
    if model in QUASIRANDOM:
        if offsets is None:
            pos0 = counter_index(keys[:, None], np.arange(n)[None, :], 0, bound[None, :], OFFSET_STREAM)
        else:
            pos0 = np.broadcast_to(np.asarray(offsets, dtype=np.int64), (B, n))
    # A caller whose neighbors are all informed cannot change anything, and
    # every draw is keyed by (run, vertex, round), so skipping its calls leaves
    # the run unchanged.  Pruning needs per-vertex uninformed-neighbor counts,
    # which only pay off on sparse graphs; traces keep every call.
    prune = events is None and lists.order.size <= 64 * n
    unf = None
    if prune:
        unf = np.broadcast_to(deg, (B, n)).copy()
        _discount(g, unf, rows0, starts)
    cr, cv = rows0, np.asarray(starts, dtype=np.int64)
    keep = deg[cv] > 0
    if prune:
        keep &= unf[cr, cv] > 0
    cr, cv = cr[keep], cv[keep]
    t = 0
    while cr.size and t < max_rounds:
        t += 1
        if events is not None:
            srt = np.lexsort((cv, cr))
            cr, cv = cr[srt], cv[srt]
        if model == FULLY_RANDOM:
            pos = counter_index(keys[cr], cv, t, bound[cv], CALL_STREAM)
        elif model == ROLLING:
            pos = (pos0[cr, cv] + (t - 1)) % bound[cv]
        else:
            pos = (pos0[cr, cv] + (t - 1 - informed_at[cr, cv])) % bound[cv]
        callee = order[base[cv] + pos]
        if loss > 0.0:
            delivered = counter_uniform(keys[cr], cv, t, LOSS_STREAM) >= loss
            hit = delivered & (informed_at[cr, callee] == NEVER)
        else:
            delivered = None
            hit = informed_at[cr, callee] == NEVER
        cand = np.flatnonzero(hit)
        first = cand[np.unique(cr[cand] * n + callee[cand], return_index=True)[1]] if cand.size else cand
        nr, nw = cr[first], callee[first]
        informed_at[nr, nw] = t
        if events is not None:
            new = np.zeros(cv.size, dtype=bool)
            new[first] = True
            dl = np.ones(cv.size, dtype=bool) if delivered is None else delivered
            for x, y, z, w in zip(cv.tolist(), callee.tolist(), new.tolist(), dl.tolist()):
                events.append(CallEvent(t, x, y, z, w))
        if nr.size:
            count += np.bincount(nr, minlength=B)
            if prune:
                _discount(g, unf, nr, nw)
            cr = np.concatenate([cr, nr])
            cv = np.concatenate([cv, nw])
        keep = (count[cr] < n) & (deg[cv] > 0)
        if prune:
            keep &= unf[cr, cv] > 0
        cr, cv = cr[keep], cv[keep]
    positions = None
    if model == LITERAL and pos0 is not None:
        positions = np.array(pos0)
    return BatchResult(informed_at, t, positions)


def _discount(g: Graph, unf: np.ndarray, rows: np.ndarray, verts: np.ndarray) -> None:
    # newly informed (rows[i], verts[i]): their neighbors lose one uninformed neighbor
    d = g.degrees[verts]
    if not d.sum():
        return
    r = np.repeat(rows, d)
    starts = np.repeat(g.indptr[verts] - np.cumsum(d) + d, d) + np.arange(d.sum())
    np.subtract.at(unf, (r, g.indices[starts]), 1)


def check_quasirandom_bounds(
    g: Graph,
    informed_at: np.ndarray,
    rounds_run: int,
    diameter: float | None = None,
    starts: np.ndarray | None = None,
) -> None:
    """Raise :class:`BoundViolation` unless every row obeys the deterministic bounds.

    Checked per row: broadcast time ``<= 2n - 3``; ``<= Δ·ecc(start)`` when
    starts are given and ``<= Δ·diam`` when a diameter is given (both follow
    from a vertex calling every neighbor within ``deg`` rounds); and, when
    the batch is small enough, the edge-local form of that fact:
    ``informed_at(v) <= informed_at(u) + deg(u)`` for every edge ``(u, v)``
    whose right side has been simulated.
    """
    n = g.n
    if n < 2:
        return
    deg = g.degrees
    src = np.repeat(np.arange(n), deg)
    dst = g.indices
    Delta = int(deg.max())
    if diameter is None and informed_at.shape[0] * src.size > 20_000_000:
        diameter = g.metrics.diameter
    edge_budget = 20_000_000 if informed_at.shape[0] * src.size <= 20_000_000 else 0
    ecc_cap = None
    if starts is not None:
        uniq, inv = np.unique(np.asarray(starts), return_inverse=True)
        dist = bfs_distances(g, uniq)
        ecc = np.where((dist < 0).any(axis=1), NEVER // 2, dist.max(axis=1))
        ecc_cap = Delta * ecc[inv]
    chunk = max(1, 4_000_000 // max(1, src.size))
    for lo in range(0, informed_at.shape[0], chunk):
        rows = informed_at[lo : lo + chunk]
        done = np.all(rows != NEVER, axis=1)
        bt = np.where(done, np.where(done[:, None], rows, 0).max(axis=1), -1)
        if ecc_cap is not None and np.any(bt > ecc_cap[lo : lo + chunk]):
            raise BoundViolation("broadcast time exceeds Δ·ecc(start)")
        if np.any(bt > 2 * n - 3):
            raise BoundViolation(f"broadcast time {int(bt.max())} exceeds 2n-3 = {2 * n - 3}")
        if diameter is not None and diameter != INF and np.any(bt > Delta * diameter):
            raise BoundViolation(f"broadcast time {int(bt.max())} exceeds Δ·diam = {Delta * diameter}")
        if not edge_budget:
            continue
        ru = rows[:, src]
        rhs = np.where(ru == NEVER, NEVER, ru + deg[src])
        lhs = rows[:, dst]
        bad = (rhs <= rounds_run) & (lhs > rhs)
        if np.any(bad):
            b, e = np.argwhere(bad)[0]
            raise BoundViolation(
                f"vertex {int(dst[e])} not informed within deg({int(src[e])}) rounds of its informed neighbor"
            )


def simulate(g: Graph, lists: ListAssignment | None, cfg: RunConfig, offsets: Offsets | None = None) -> Trace:
    """Run one broadcast from ``cfg.start_vertex``.

    ``offsets`` overrides the seeded draw of ``i_v`` (rolling) or ``j_v``
    (literal).  Quasirandom lossless runs are checked against the
    deterministic bounds and raise :class:`BoundViolation` on a breach.
    Hitting ``max_rounds`` is not an error: the trace reports an infinite
    broadcast time with partial ``informed_at``.
    """
    if not 0 <= cfg.start_vertex < g.n:
        raise InvalidParameters("start_vertex out of range")
    if lists is None:
        lists = make_lists(g)
    if offsets is not None:
        offsets.validate(g)
    max_rounds = cfg.max_rounds or default_max_rounds(g.n)
    events: list | None = [] if cfg.record_trace else None
    res = _run_core(
        g,
        lists,
        cfg.model,
        np.array([run_key(cfg.seed)], dtype=np.uint64),
        np.array([cfg.start_vertex]),
        max_rounds,
        cfg.loss_probability,
        None if offsets is None else offsets.index,
        events,
    )
    if cfg.model in QUASIRANDOM and cfg.loss_probability == 0.0:
        diam = g.__dict__["metrics"].diameter if "metrics" in g.__dict__ else None
        check_quasirandom_bounds(g, res.informed_at, res.rounds_run, diam, np.array([cfg.start_vertex]))
    return Trace(
        model=cfg.model,
        seed=cfg.seed,
        start=cfg.start_vertex,
        n=g.n,
        informed_at=res.informed_at[0],
        rounds_run=res.rounds_run,
        events=events or [],
        first_positions=None if res.positions is None else res.positions[0],
    )


def simulate_batch(
    g: Graph,
    lists: ListAssignment | None,
    model: str,
    seeds: Sequence[int],
    starts: Sequence[int] | int = 0,
    max_rounds: int | None = None,
    loss_probability: float = 0.0,
    check_bounds: bool = True,
) -> BatchResult:
    """Many independent runs on one graph; row ``b`` equals
    ``simulate(g, lists, RunConfig(model, starts[b], seeds[b], ...))``."""
    model = canonical_model(model)
    if lists is None:
        lists = make_lists(g)
    keys = np.array([run_key(s) for s in seeds], dtype=np.uint64)
    st = np.broadcast_to(np.asarray(starts, dtype=np.int64), keys.shape).copy()
    if np.any(st < 0) or np.any(st >= g.n):
        raise InvalidParameters("start vertex out of range")
    res = _run_core(g, lists, model, keys, st, max_rounds or default_max_rounds(g.n), loss_probability)
    if check_bounds and model in QUASIRANDOM and loss_probability == 0.0:
        diam = g.__dict__["metrics"].diameter if "metrics" in g.__dict__ else None
        check_quasirandom_bounds(g, res.informed_at, res.rounds_run, diam, st)
    return res


def literal_to_rolling_offsets(g: Graph, trace: Trace) -> Offsets:
    """Rolling offsets reproducing a literal run: ``i_v = (j_v - t_v) mod deg(v)``.

    Uninformed vertices keep ``j_v``; they never call with the rumor.
    """
    if trace.first_positions is None:
        raise InvalidParameters("trace has no literal first positions")
    deg = np.maximum(g.degrees, 1)
    t = np.where(trace.informed_at == NEVER, 0, trace.informed_at)
    return Offsets((trace.first_positions - t) % deg)


# --------------------------------------------------------------------------
# reach sets (backward analysis of ever-rolling schedules)
# --------------------------------------------------------------------------


def reach_set(g: Graph, lists: ListAssignment, offsets: Offsets, w: int, a: int, b: int) -> set[int]:
    """``U_[a,b](w)``: vertices with a chain of scheduled calls at strictly
    increasing times in ``[a, b]`` ending at ``w`` (``w`` itself excluded)."""
    if not 1 <= a <= b:
        raise InvalidParameters("need 1 <= a <= b")
    inside = np.zeros(g.n, dtype=bool)
    inside[w] = True
    for tau in range(b, a - 1, -1):
        inside = inside | inside[scheduled_callee(g, lists, offsets, tau)]
    inside[w] = False
    return set(np.flatnonzero(inside).tolist())


def reach_matrix(g: Graph, lists: ListAssignment, offsets: Offsets, a: int, b: int) -> np.ndarray:
    """Boolean ``M[x, w]`` = ``x ∈ U_[a,b](w)`` for all pairs at once."""
    if not 1 <= a <= b:
        raise InvalidParameters("need 1 <= a <= b")
    n = g.n
    packed = np.packbits(np.eye(n, dtype=bool), axis=1)
    for tau in range(b, a - 1, -1):
        packed = packed | packed[scheduled_callee(g, lists, offsets, tau)]
    m = np.unpackbits(packed, axis=1, count=n).astype(bool)
    np.fill_diagonal(m, False)
    return m


# --------------------------------------------------------------------------
# adversarial constructions
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Schedule:
    graph: Graph
    lists: ListAssignment
    start: int
    offsets: Offsets | None = None


def adversarial_path_schedule(n: int) -> Schedule:
    """Path ``0-1-...-(n-1)`` started at 0 where every internal vertex wastes
    its first call on its (already informed) predecessor: ``2n - 3`` rounds."""
    if n < 2:
        raise InvalidParameters("adversarial path needs n >= 2")
    g = path_graph(n)
    explicit = [[1]] + [[v - 1, v + 1] for v in range(1, n - 1)] + [[n - 2]]
    lists = make_lists(g, "explicit", explicit=explicit)
    # vertex v >= 1 is informed at 2v - 1 and calls position (i_v + t - 1) mod 2
    # at t = 2v; i_v = 1 makes that position 0 (the predecessor)
    idx = np.zeros(n, dtype=np.int64)
    idx[1 : n - 1] = 1
    return Schedule(g, lists, 0, Offsets(idx))


def adversarial_two_clique_schedule(n: int, seed: int = 0) -> Schedule:
    """Two cliques plus a hub joined to everything; the hub lists all of
    clique 1 before clique 2 and the rumor starts in clique 1."""
    if n < 8:
        raise InvalidParameters("two-clique construction needs n >= 8")
    g = two_clique_hub(n)
    a, _ = two_clique_sizes(n)
    hub = n - 1
    explicit = [g.neighbors(v).tolist() for v in range(n)]
    explicit[hub] = list(range(0, a)) + list(range(a, n - 1))
    lists = make_lists(g, "explicit", explicit=explicit)
    start = int(counter_index(derive_seed(seed, "two_clique_start"), 0, 0, a)[0])
    return Schedule(g, lists, start)


# --------------------------------------------------------------------------
# first-call distribution
# --------------------------------------------------------------------------


@dataclass
class FirstCallDistribution:
    vertex: int
    neighbors: list[int]
    rolling_counts: np.ndarray
    literal_counts: np.ndarray

    @property
    def samples(self) -> int:
        return int(self.rolling_counts.sum())

    def frequencies(self, model: str = ROLLING) -> np.ndarray:
        c = self.rolling_counts if canonical_model(model) == ROLLING else self.literal_counts
        return c / c.sum()

    def chisquare_pvalue(self, model: str = ROLLING) -> float:
        c = self.rolling_counts if canonical_model(model) == ROLLING else self.literal_counts
        if len(c) == 1:
            return 1.0
        return float(stats.chisquare(c).pvalue)


def first_call_distribution(
    g: Graph,
    lists: ListAssignment,
    v: int,
    sample_count: int,
    seed: int,
    start: int | None = None,
    batch: int = 20_000,
) -> FirstCallDistribution:
    """Empirical distribution of ``v``'s first callee after it is informed.

    Each sample is a full run from ``start`` (uniform per sample if None).
    Rolling: callee at list position ``(i_v + t_v) mod deg(v)``.
    Literal: callee at position ``j_v``.
    """
    if sample_count < 1:
        raise InvalidParameters("sample_count must be >= 1")
    d = g.degree(v)
    if d == 0:
        raise InvalidParameters("vertex has no neighbors")
    nbrs = lists.of(v)
    where = {u: k for k, u in enumerate(nbrs)}
    counts = {ROLLING: np.zeros(d, dtype=np.int64), LITERAL: np.zeros(d, dtype=np.int64)}
    lo = g.indptr[v]
    for b0 in range(0, sample_count, batch):
        seeds = [derive_seed(seed, "first_call", s) for s in range(b0, min(sample_count, b0 + batch))]
        if start is None:
            starts = np.array([counter_index(s, 0, 0, g.n, 7)[0] for s in seeds])
        else:
            starts = np.full(len(seeds), start)
        for model in (ROLLING, LITERAL):
            res = simulate_batch(g, lists, model, seeds, starts, check_bounds=False)
            keys = np.array([run_key(s) for s in seeds], dtype=np.uint64)
            pos0 = counter_index(keys, v, 0, d, OFFSET_STREAM)
            t_v = res.informed_at[:, v]
            ok = t_v != NEVER
            pos = (pos0 + t_v) % d if model == ROLLING else pos0
            callee = lists.order[lo + pos[ok]]
            counts[model] += np.bincount([where[c] for c in callee.tolist()], minlength=d)
    return FirstCallDistribution(v, nbrs, counts[ROLLING], counts[LITERAL])
