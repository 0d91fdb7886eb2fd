"""Slow, obviously-correct reference implementations used to check the fast code."""

from __future__ import annotations

import itertools
from collections import deque
from fractions import Fraction

from rumorbench.engine import FULLY_RANDOM, LITERAL, ROLLING, run_key
from rumorbench.rng import CALL_STREAM, OFFSET_STREAM, counter_index


def adjacency(g) -> list[list[int]]:
    return [g.neighbors(v).tolist() for v in range(g.n)]


def bfs(adj: list[list[int]], s: int) -> list[int]:
    dist = [-1] * len(adj)
    dist[s] = 0
    q = deque([s])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def diameter(adj: list[list[int]]) -> float:
    best = 0
    for s in range(len(adj)):
        d = bfs(adj, s)
        if min(d) < 0:
            return float("inf")
        best = max(best, max(d))
    return best


def draw(seed: int, v: int, counter: int, bound: int, stream: int) -> int:
    return int(counter_index(run_key(seed), v, counter, bound, stream)[0])


def reference_run(g, lists, model: str, start: int, seed: int, max_rounds: int, offsets=None) -> list[float]:
    """Round-by-round simulation with plain Python sets; returns informed_at."""
    n = g.n
    L = [lists.of(v) for v in range(n)]
    informed_at = [float("inf")] * n
    informed_at[start] = 0
    pos0 = [draw(seed, v, 0, max(len(L[v]), 1), OFFSET_STREAM) if offsets is None else int(offsets[v])
            for v in range(n)]
    t = 0
    while t < max_rounds and any(x == float("inf") for x in informed_at):
        t += 1
        active = [v for v in range(n) if informed_at[v] <= t - 1 and L[v]]
        new = []
        for v in active:
            d = len(L[v])
            if model == FULLY_RANDOM:
                p = draw(seed, v, t, d, CALL_STREAM)
            elif model == ROLLING:
                p = (pos0[v] + t - 1) % d
            elif model == LITERAL:
                p = (pos0[v] + t - 1 - informed_at[v]) % d
            else:
                raise ValueError(model)
            u = L[v][p]
            if informed_at[u] == float("inf"):
                new.append(u)
        for u in new:
            informed_at[u] = t
    return informed_at


def rolling_callee(lists, offsets, v: int, t: int) -> int:
    lv = lists.of(v)
    return lv[(int(offsets.index[v]) + t - 1) % len(lv)]


def forward_reach(g, lists, offsets, w: int, a: int, b: int) -> set[int]:
    """``u`` is in U_[a,b](w) iff a rumor placed at ``u`` just before round
    ``a`` reaches ``w`` by round ``b`` under the rolling schedule."""
    out = set()
    for u in range(g.n):
        if u == w:
            continue
        holders = {u}
        for t in range(a, b + 1):
            holders |= {rolling_callee(lists, offsets, x, t) for x in holders if g.degree(x)}
        if w in holders:
            out.add(u)
    return out


def chain_reach(g, lists, offsets, w: int, a: int, b: int) -> set[int]:
    """Enumerate call chains u_1 -> ... -> w with strictly increasing times."""
    out = set()

    def extend(x: int, t_min: int, seen: frozenset) -> bool:
        for t in range(t_min, b + 1):
            y = rolling_callee(lists, offsets, x, t)
            if y == w:
                return True
            if y not in seen and extend(y, t + 1, seen | {y}):
                return True
        return False

    for u in range(g.n):
        if u != w and g.degree(u) and extend(u, a, frozenset({u})):
            out.add(u)
    return out


def min_expansion_ratio(adj: list[list[int]], lo: int, hi: int) -> Fraction:
    """Minimum |Γ(S)\\S| / (d|S|) over connected S with lo <= |S| <= hi by brute force."""
    n = len(adj)
    d = Fraction(sum(len(a) for a in adj), n)
    best = None
    for size in range(lo, hi + 1):
        for S in itertools.combinations(range(n), size):
            s = set(S)
            seen = {S[0]}
            stack = [S[0]]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y in s and y not in seen:
                        seen.add(y)
                        stack.append(y)
            if len(seen) != size:
                continue
            bd = {y for x in S for y in adj[x]} - s
            r = Fraction(len(bd)) / (d * size)
            best = r if best is None or r < best else best
    return best


def harmonic(m: int) -> Fraction:
    return sum((Fraction(1, k) for k in range(1, m + 1)), Fraction(0))
