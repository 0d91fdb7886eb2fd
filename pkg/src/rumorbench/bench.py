"""Seeded multi-trial experiments comparing the call models."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import __version__
from .engine import (
    FULLY_RANDOM,
    NEVER,
    QUASIRANDOM,
    ROLLING,
    ListAssignment,
    RunConfig,
    adversarial_two_clique_schedule,
    canonical_model,
    check_quasirandom_bounds,
    default_max_rounds,
    make_lists,
    run_key,
    simulate_batch,
)
from .errors import InvalidParameters, RegenerationExhausted
from .graph import Graph, GraphSpec, generate, is_connected, sparse_gnp_probability
from .rng import counter_index, derive_seed

MAX_REGENERATIONS = 100
BATCH_CELLS = 2_000_000
START_POLICIES = ("uniform", "fixed", "exhaustive")
CSV_HEADER = ["n", "model", "trials", "mean", "stddev", "p50", "p90", "p99", "max", "timeouts"]


@dataclass(frozen=True)
class ExperimentConfig:
    graph_spec: GraphSpec
    models: tuple[RunConfig, ...] = (RunConfig(FULLY_RANDOM), RunConfig(ROLLING))
    trials: int = 100
    start_policy: str = "uniform"
    start_vertex: int = 0
    list_strategy: str = "natural"
    base_seed: int = 0
    resample: bool = True

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise InvalidParameters("trials must be >= 1")
        if self.start_policy not in START_POLICIES:
            raise InvalidParameters(f"start_policy must be one of {START_POLICIES}")
        models = tuple(m if isinstance(m, RunConfig) else RunConfig(m) for m in self.models)
        if not models:
            raise InvalidParameters("at least one model is required")
        object.__setattr__(self, "models", models)

    def trial_seed(self, i: int) -> int:
        return derive_seed(self.base_seed, "trial", i)

    def to_dict(self) -> dict[str, Any]:
        return {
            "graph_spec": self.graph_spec.to_dict(),
            "models": [m.to_dict() for m in self.models],
            "trials": self.trials,
            "start_policy": self.start_policy,
            "start_vertex": self.start_vertex,
            "list_strategy": self.list_strategy,
            "base_seed": self.base_seed,
            "resample": self.resample,
        }


@dataclass
class TrialStats:
    model: str
    n: int
    count: int
    timeout_count: int
    mean: float
    stddev: float
    min: float
    max: float
    p50: float
    p90: float
    p99: float
    informed_curve: list[float]
    success_curve: list[float]
    times: list[float] = field(default_factory=list, repr=False)

    def success_prob_at(self, t: int) -> float:
        """Fraction of trials finished by round ``t``."""
        if t < 0:
            return 0.0
        if t >= len(self.success_curve):
            return self.success_curve[-1] if self.success_curve else 0.0
        return self.success_curve[t]

    @classmethod
    def from_runs(cls, model: str, n: int, times: np.ndarray, informed_hist: np.ndarray) -> "TrialStats":
        finished = times[np.isfinite(times)]
        count = times.size
        if finished.size:
            q = np.quantile(finished, [0.5, 0.9, 0.99])
            mean = float(finished.mean())
            std = float(finished.std(ddof=1)) if finished.size > 1 else 0.0
            lo, hi = float(finished.min()), float(finished.max())
        else:
            q = [math.inf] * 3
            mean = std = lo = hi = math.inf
        horizon = informed_hist.size - 1
        curve = np.cumsum(informed_hist) / count
        success = np.array([np.count_nonzero(finished <= t) for t in range(horizon + 1)]) / count
        return cls(
            model=model,
            n=n,
            count=count,
            timeout_count=int(count - finished.size),
            mean=mean,
            stddev=std,
            min=lo,
            max=hi,
            p50=float(q[0]),
            p90=float(q[1]),
            p99=float(q[2]),
            informed_curve=[float(x) for x in curve],
            success_curve=[float(x) for x in success],
            times=[float(x) for x in times],
        )

    def to_dict(self, include_times: bool = False) -> dict[str, Any]:
        d = {
            "model": self.model,
            "n": self.n,
            "count": self.count,
            "timeout_count": self.timeout_count,
            "mean": _num(self.mean),
            "stddev": _num(self.stddev),
            "min": _num(self.min),
            "max": _num(self.max),
            "p50": _num(self.p50),
            "p90": _num(self.p90),
            "p99": _num(self.p99),
            "informed_curve": self.informed_curve,
            "success_curve": self.success_curve,
        }
        if include_times:
            d["times"] = [_num(t) for t in self.times]
        return d

    def csv_row(self) -> list:
        return [self.n, self.model, self.count, _fmt(self.mean), _fmt(self.stddev), _fmt(self.p50),
                _fmt(self.p90), _fmt(self.p99), _fmt(self.max), self.timeout_count]


def _num(x: float):
    return None if not math.isfinite(x) else x


def _fmt(x: float) -> str:
    return "inf" if not math.isfinite(x) else f"{x:.6g}"


@dataclass
class ComparisonReport:
    config: dict[str, Any]
    stats: dict[str, TrialStats]
    graph_metrics: dict[str, Any] | None = None
    bound_checked_runs: int = 0

    @property
    def speedup(self) -> float | None:
        """``mean(fully_random) / mean(quasirandom)``."""
        fr = self.stats.get(FULLY_RANDOM)
        qr = next((self.stats[m] for m in self.stats if m in QUASIRANDOM), None)
        if fr is None or qr is None or not qr.mean or not math.isfinite(qr.mean):
            return None
        return fr.mean / qr.mean

    def dominance_curve(self) -> list[float]:
        """Per round: success probability of the quasirandom model minus the fully random one."""
        fr = self.stats.get(FULLY_RANDOM)
        qr = next((self.stats[m] for m in self.stats if m in QUASIRANDOM), None)
        if fr is None or qr is None:
            return []
        h = max(len(fr.success_curve), len(qr.success_curve))
        return [qr.success_prob_at(t) - fr.success_prob_at(t) for t in range(h)]

    def to_dict(self, include_times: bool = False) -> dict[str, Any]:
        return {
            "tool": "rumorbench",
            "version": __version__,
            "config": self.config,
            "graph_metrics": self.graph_metrics,
            "stats": {m: s.to_dict(include_times) for m, s in self.stats.items()},
            "speedup": self.speedup,
            "dominance_curve": self.dominance_curve(),
            "bound_checked_runs": self.bound_checked_runs,
            # the worst case over all lists and starts is only sampled here
            "sampled_proxy": True,
        }

    def to_json(self, include_times: bool = False) -> str:
        return json.dumps(self.to_dict(include_times), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        return stats_csv(self.stats.values())

    def curves_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "t", "mean_informed"])
        for m, s in self.stats.items():
            for t, x in enumerate(s.informed_curve):
                w.writerow([m, t, f"{x:.6g}"])
        return buf.getvalue()


def stats_csv(stats: Sequence[TrialStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in stats:
        w.writerow(s.csv_row())
    return buf.getvalue()


def thread_count() -> int:
    env = os.environ.get("RUMORBENCH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameters("RUMORBENCH_THREADS must be an integer") from None
    return os.cpu_count() or 1


def connected_sample(spec: GraphSpec, seed: int, attempts: int = MAX_REGENERATIONS) -> Graph:
    """Generate ``spec`` with derived seeds until the sample is connected."""
    for a in range(attempts):
        g = generate(spec.with_seed(derive_seed(seed, "graph", a)))
        if is_connected(g):
            return g
    raise RegenerationExhausted(f"{spec.family}: {attempts} disconnected samples in a row")


@dataclass
class _Block:
    g: Graph
    lists: ListAssignment
    trials: list[int]
    seeds: list[int]
    starts: list[np.ndarray]  # per trial: one start, or all starts (exhaustive)


def _start_vertices(cfg: ExperimentConfig, n: int, trial_seed: int) -> np.ndarray:
    if cfg.start_policy == "fixed":
        if not 0 <= cfg.start_vertex < n:
            raise InvalidParameters("start_vertex out of range")
        return np.array([cfg.start_vertex])
    if cfg.start_policy == "exhaustive":
        if n > 256:
            raise InvalidParameters("exhaustive start policy is limited to n <= 256")
        return np.arange(n)
    return counter_index(derive_seed(trial_seed, "start"), 0, 0, n)


def _lists_for(g: Graph, cfg: ExperimentConfig, seed: int) -> ListAssignment:
    if cfg.list_strategy != "adversarial":
        return make_lists(g, cfg.list_strategy, seed)
    if cfg.graph_spec.family != "two_clique_hub":
        raise InvalidParameters("adversarial lists are defined for two_clique_hub only")
    return adversarial_two_clique_schedule(g.n).lists


def _blocks(cfg: ExperimentConfig) -> list[_Block]:
    spec = cfg.graph_spec
    per_trial_graph = spec.is_random and cfg.resample
    blocks: list[_Block] = []
    if per_trial_graph:
        for i in range(cfg.trials):
            ts = cfg.trial_seed(i)
            g = connected_sample(spec, ts)
            lists = _lists_for(g, cfg, derive_seed(ts, "lists"))
            blocks.append(_Block(g, lists, [i], [derive_seed(ts, "run")], [_start_vertices(cfg, g.n, ts)]))
        return blocks
    g = connected_sample(spec, cfg.base_seed) if spec.is_random else generate(spec)
    if not is_connected(g):
        raise InvalidParameters(f"{spec.family} graph is disconnected")
    lists = _lists_for(g, cfg, derive_seed(cfg.base_seed, "lists"))
    runs_per_trial = g.n if cfg.start_policy == "exhaustive" else 1
    per_block = max(1, BATCH_CELLS // (g.n * runs_per_trial))
    for lo in range(0, cfg.trials, per_block):
        idx = list(range(lo, min(cfg.trials, lo + per_block)))
        seeds = [derive_seed(cfg.trial_seed(i), "run") for i in idx]
        starts = [_start_vertices(cfg, g.n, cfg.trial_seed(i)) for i in idx]
        blocks.append(_Block(g, lists, idx, seeds, starts))
    return blocks


def _run_block(block: _Block, template: RunConfig, check_bounds: bool, diameter) -> tuple[np.ndarray, np.ndarray, int]:
    g = block.g
    seeds = np.repeat(block.seeds, [s.size for s in block.starts]).tolist()
    starts = np.concatenate(block.starts)
    max_rounds = template.max_rounds or default_max_rounds(g.n)
    res = simulate_batch(g, block.lists, template.model, seeds, starts, max_rounds,
                         template.loss_probability, check_bounds=False)
    checked = 0
    if check_bounds and template.model in QUASIRANDOM and template.loss_probability == 0.0:
        check_quasirandom_bounds(g, res.informed_at, res.rounds_run, diameter, starts)
        checked = len(seeds)
    bt = res.broadcast_times
    # exhaustive starts: one trial's time is the worst over all starts
    bounds = np.cumsum([0] + [s.size for s in block.starts])
    times = np.array([bt[a:b].max() for a, b in zip(bounds[:-1], bounds[1:])])
    vals = res.informed_at[res.informed_at != NEVER]
    hist = np.bincount(vals, minlength=max_rounds + 1)[: max_rounds + 1]
    hist = hist * (len(block.trials) / len(seeds))
    return times, hist, checked


def run_experiment(cfg: ExperimentConfig, workers: int | None = None, check_bounds: bool = True) -> ComparisonReport:
    """Run every model on every trial and summarize.

    Random families are resampled per trial (``cfg.resample``); both models
    see the same graph, lists, start and run seed within a trial.  The
    result is a deterministic fold in trial order, whatever ``workers`` is.
    """
    blocks = _blocks(cfg)
    fixed_graph = len({id(b.g) for b in blocks}) == 1
    metrics = blocks[0].g.metrics if fixed_graph else None
    diameter = metrics.diameter if metrics is not None else None
    workers = workers or thread_count()
    stats: dict[str, TrialStats] = {}
    checked_total = 0
    for template in cfg.models:
        def job(b, template=template):
            return _run_block(b, template, check_bounds, diameter)

        if workers > 1 and len(blocks) > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                results = list(ex.map(job, blocks))
        else:
            results = [job(b) for b in blocks]
        times = np.concatenate([r[0] for r in results])
        width = max(r[1].size for r in results)
        hist = np.zeros(width)
        for r in results:
            hist[: r[1].size] += r[1]
            checked_total += r[2]
        finite = times[np.isfinite(times)]
        horizon = int(finite.max()) if finite.size else width - 1
        if np.isfinite(times).all():
            hist = hist[: horizon + 1]
        n = blocks[0].g.n
        stats[template.model] = TrialStats.from_runs(template.model, n, times, hist)
    return ComparisonReport(
        config=cfg.to_dict(),
        stats=stats,
        graph_metrics=None if metrics is None else metrics.to_dict(),
        bound_checked_runs=checked_total,
    )


# --------------------------------------------------------------------------
# sweeps and tail comparisons
# --------------------------------------------------------------------------


def spec_for_size(family: str, n: int, seed: int = 0, **params) -> GraphSpec:
    """Graph spec of roughly ``n`` vertices for families parameterized otherwise."""
    if family == "hypercube":
        d = int(round(math.log2(n)))
        if 1 << d != n:
            raise InvalidParameters("hypercube sizes must be powers of two")
        return GraphSpec.of("hypercube", seed, d=d)
    if family == "kary_tree":
        k = int(params.get("k", 2))
        depth = max(1, int(round(math.log((k - 1) * n + 1, k))) - 1)
        return GraphSpec.of("kary_tree", seed, k=k, depth=depth)
    if family == "gnp" and "p" not in params:
        return GraphSpec.of("gnp", seed, n=n, p=sparse_gnp_probability(n))
    return GraphSpec.of(family, seed, n=n, **params)


@dataclass
class SweepRow:
    n: int
    model: str
    mean: float
    p99: float

    @property
    def mean_over_ln_n(self) -> float:
        return self.mean / math.log(self.n)

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "model": self.model, "mean": self.mean, "p99": self.p99,
                "mean_over_ln_n": self.mean_over_ln_n}


@dataclass
class SweepTable:
    family: str
    rows: list[SweepRow]
    reports: list[ComparisonReport] = field(default_factory=list, repr=False)

    def drift(self, model: str) -> float:
        """Last normalized mean over the first one; near 1 for Θ(log n) growth."""
        seq = [r.mean_over_ln_n for r in self.rows if r.model == model]
        return seq[-1] / seq[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "model", "mean", "p99", "mean_over_ln_n"])
        for r in self.rows:
            w.writerow([r.n, r.model, f"{r.mean:.6g}", f"{r.p99:.6g}", f"{r.mean_over_ln_n:.6g}"])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        models = sorted({r.model for r in self.rows})
        return {"family": self.family, "rows": [r.to_dict() for r in self.rows],
                "drift": {m: self.drift(m) for m in models}}


def scaling_sweep(
    family: str,
    sizes: Sequence[int],
    models: Sequence[str] = (FULLY_RANDOM, ROLLING),
    trials: int = 100,
    base_seed: int = 0,
    list_strategy: str = "natural",
    **params,
) -> SweepTable:
    if list(sizes) != sorted(sizes):
        raise InvalidParameters("sizes must be ascending")
    rows, reports = [], []
    for n in sizes:
        spec = spec_for_size(family, n, **params)
        cfg = ExperimentConfig(spec, tuple(RunConfig(canonical_model(m)) for m in models), trials,
                               list_strategy=list_strategy, base_seed=derive_seed(base_seed, "sweep", n))
        rep = run_experiment(cfg)
        reports.append(rep)
        for m, s in rep.stats.items():
            rows.append(SweepRow(spec.vertex_count(), m, s.mean, s.p99))
    return SweepTable(family, rows, reports)


@dataclass
class TailReport:
    n: int
    p99: dict[str, float]
    max: dict[str, float]
    report: ComparisonReport = field(repr=False)

    @property
    def p99_ratio(self) -> float:
        return self.p99[FULLY_RANDOM] / self.p99[ROLLING]

    @property
    def fully_random_tail_heavier(self) -> bool:
        return self.p99[FULLY_RANDOM] > self.p99[ROLLING]

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "p99": self.p99, "max": self.max, "p99_ratio": self.p99_ratio,
                "fully_random_tail_heavier": self.fully_random_tail_heavier,
                "report": self.report.to_dict()}


def tail_compare(n: int, trials: int, base_seed: int = 0, p: float | None = None) -> TailReport:
    """Upper quantiles of both models on connected sparse G(n, p) samples."""
    prob = sparse_gnp_probability(n) if p is None else p
    cfg = ExperimentConfig(GraphSpec.of("gnp", n=n, p=prob), (RunConfig(FULLY_RANDOM), RunConfig(ROLLING)),
                           trials, base_seed=base_seed)
    rep = run_experiment(cfg)
    return TailReport(
        n=n,
        p99={m: s.p99 for m, s in rep.stats.items()},
        max={m: s.max for m, s in rep.stats.items()},
        report=rep,
    )
