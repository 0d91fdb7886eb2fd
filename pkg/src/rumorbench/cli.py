"""``rumorbench`` command line."""

from __future__ import annotations

import argparse
import io
import json
import sys
from contextlib import contextmanager
from typing import Any, Iterator, Sequence, TextIO

from . import __version__
from .bench import (
    START_POLICIES,
    ExperimentConfig,
    connected_sample,
    run_experiment,
    scaling_sweep,
)
from .engine import (
    MODEL_ALIASES,
    MODELS,
    ROLLING,
    RunConfig,
    adversarial_path_schedule,
    adversarial_two_clique_schedule,
    canonical_model,
    default_max_rounds,
    draw_offsets,
    make_lists,
    reach_set,
    simulate,
)
from .errors import BoundViolation, InvalidParameters, RumorBenchError
from .expansion import ExpansionParams, audit, mixing_check, spectral, tanner_check
from .graph import FAMILIES, Graph, GraphSpec, generate, read_edge_list, write_edge_list
from .rng import derive_seed

SUBCOMMANDS = ("gen", "simulate", "bench", "sweep", "audit", "spectral", "reach")

# fallbacks applied after the config file and the command-line flags
DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "format": None,
    "out": None,
    "model": "quasirandom",
    "models": "fully_random,quasirandom",
    "start": 0,
    "trials": 100,
    "start_policy": "uniform",
    "lists": "natural",
    "loss": 0.0,
    "mode": None,
    "samples": 500,
    "subset_samples": 200,
    "c_alpha": 1.0,
    "c_beta": 0.05,
    "c_delta": 1 / 6,
    "c_omega": 32.0,
    "pairs": 100,
    "a": 1,
}

INT_KEYS = {"n", "d", "k", "depth", "seed", "start", "trials", "max_rounds", "samples",
            "subset_samples", "pairs", "w", "a", "b", "leaves", "threads"}
FLOAT_KEYS = {"p", "loss", "c_alpha", "c_beta", "c_delta", "c_omega"}
BOOL_KEYS = {"adversarial", "fixed_sample", "trace"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit code 1, not argparse's 2
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or key=value file; flags override its values")
    p.add_argument("--out", help="write machine output here instead of standard output")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--seed", type=int)


def _graph_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--graph-file", help="edge list: 'n m' then one 'u v' per line")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--leaves", type=int)
    p.add_argument("--degrees", help="comma-separated degree sequence")
    p.add_argument("--method", choices=("auto", "restart", "repair"))


def _model_choices() -> list[str]:
    return sorted(set(MODEL_ALIASES) | set(MODELS))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rumorbench", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rumorbench {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a graph and write its edge list")
    _common(g)
    _graph_flags(g)

    s = sub.add_parser("simulate", help="one broadcast run")
    _common(s)
    _graph_flags(s)
    s.add_argument("--model", choices=_model_choices())
    s.add_argument("--start", type=int)
    s.add_argument("--max-rounds", type=int)
    s.add_argument("--loss", type=float)
    s.add_argument("--lists", choices=("natural", "random"))
    s.add_argument("--adversarial", action="store_true", default=None,
                   help="worst-case lists/offsets (path, two_clique_hub)")
    s.add_argument("--trace", action="store_true", default=None,
                   help="write the JSONL call trace to --out")

    b = sub.add_parser("bench", help="multi-trial model comparison")
    _common(b)
    _graph_flags(b)
    b.add_argument("--models")
    b.add_argument("--trials", type=int)
    b.add_argument("--start-policy", choices=START_POLICIES)
    b.add_argument("--start", type=int)
    b.add_argument("--lists", choices=("natural", "random", "adversarial"))
    b.add_argument("--max-rounds", type=int)
    b.add_argument("--loss", type=float)
    b.add_argument("--fixed-sample", action="store_true", default=None,
                   help="one graph sample for all trials of a random family")
    b.add_argument("--curves", help="write per-round mean informed counts (CSV) here")

    w = sub.add_parser("sweep", help="broadcast time against n")
    _common(w)
    w.add_argument("--family", choices=FAMILIES)
    w.add_argument("--sizes", help="comma-separated ascending vertex counts")
    w.add_argument("--models")
    w.add_argument("--trials", type=int)
    w.add_argument("--k", type=int)
    w.add_argument("--d", type=int)
    w.add_argument("--lists", choices=("natural", "random"))

    a = sub.add_parser("audit", help="expansion properties")
    _common(a)
    _graph_flags(a)
    a.add_argument("--mode", choices=("exact", "sampled"))
    a.add_argument("--samples", type=int)
    a.add_argument("--subset-samples", type=int)
    a.add_argument("--c-alpha", type=float)
    a.add_argument("--c-beta", type=float)
    a.add_argument("--c-delta", type=float)
    a.add_argument("--c-omega", type=float)

    sp = sub.add_parser("spectral", help="eigenvalues, mixing and Tanner checks")
    _common(sp)
    _graph_flags(sp)
    sp.add_argument("--pairs", type=int)

    r = sub.add_parser("reach", help="reach set U_[a,b](w) under seeded offsets")
    _common(r)
    _graph_flags(r)
    r.add_argument("--w", type=int)
    r.add_argument("--a", type=int)
    r.add_argument("--b", type=int)
    r.add_argument("--lists", choices=("natural", "random"))
    return parser


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


def _coerce(key: str, value: Any) -> Any:
    if not isinstance(value, str):
        return value
    try:
        if key in INT_KEYS:
            return int(value)
        if key in FLOAT_KEYS:
            return float(value)
        if key in BOOL_KEYS:
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
    except ValueError:
        raise UsageError(f"config: bad value for {key}: {value!r}") from None
    return value


def load_config_file(path: str) -> dict[str, Any]:
    """JSON object, or ``key = value`` lines with ``#`` comments."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise UsageError(f"malformed JSON config: {e}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
    else:
        data = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line {lineno}: expected key = value")
            key, value = (x.strip() for x in line.split("=", 1))
            data[key] = value
    return {k.replace("-", "_"): _coerce(k.replace("-", "_"), v) for k, v in data.items()}


def effective_config(ns: argparse.Namespace) -> dict[str, Any]:
    flags = {k: v for k, v in vars(ns).items() if v is not None and k not in ("config", "command")}
    merged: dict[str, Any] = {}
    if ns.config:
        merged.update(load_config_file(ns.config))
    merged.update(flags)
    for k, v in DEFAULTS.items():
        if k in vars(ns):  # only options this subcommand understands
            merged.setdefault(k, v)
        else:
            merged.setdefault(k, None)
    merged["command"] = ns.command
    return merged


def _header(cfg: dict[str, Any]) -> dict[str, Any]:
    return {"tool": "rumorbench", "version": __version__,
            "config": {k: v for k, v in sorted(cfg.items()) if v is not None}}


def _comment_header(cfg: dict[str, Any]) -> str:
    return "# " + json.dumps(_header(cfg), sort_keys=True) + "\n"


@contextmanager
def _sink(path: str | None) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror}") from None
    with fh:
        yield fh


def _emit(cfg: dict[str, Any], payload: dict[str, Any], csv_text: str | None, summary: str) -> None:
    fmt = cfg["format"] or ("json" if cfg["out"] else None)
    if fmt is None:
        print(summary)
        return
    with _sink(cfg["out"]) as fh:
        if fmt == "json":
            fh.write(json.dumps({**_header(cfg), **payload}, sort_keys=True, indent=2) + "\n")
        else:
            if csv_text is None:
                raise UsageError(f"{cfg['command']} has no CSV output")
            fh.write(_comment_header(cfg) + csv_text)
    if cfg["out"]:
        print(summary)


# --------------------------------------------------------------------------
# graphs
# --------------------------------------------------------------------------


def graph_spec(cfg: dict[str, Any]) -> GraphSpec:
    fam = cfg.get("family")
    if fam is None:
        raise UsageError("either --family or --graph-file is required")
    keys = {
        "complete": ["n"], "path": ["n"], "cycle": ["n"], "two_clique_hub": ["n"],
        "hypercube": ["d"], "kary_tree": ["k", "depth"], "gnp": ["n", "p"],
        "random_regular": ["n", "d", "method"], "star": ["n", "leaves"],
        "fixed_degree_sequence": ["degrees", "method"],
    }[fam]
    params = {k: cfg[k] for k in keys if cfg.get(k) is not None}
    if isinstance(params.get("degrees"), str):
        try:
            params["degrees"] = [int(x) for x in params["degrees"].split(",") if x.strip()]
        except ValueError:
            raise UsageError("--degrees must be comma-separated integers") from None
    return GraphSpec(fam, params, derive_seed(cfg["seed"], "graph"))


def load_graph(cfg: dict[str, Any], connected: bool = True) -> Graph:
    if cfg.get("graph_file"):
        try:
            with open(cfg["graph_file"], encoding="utf-8") as fh:
                return read_edge_list(fh, name=cfg["graph_file"])
        except OSError as e:
            raise UsageError(f"cannot read {cfg['graph_file']}: {e.strerror}") from None
    spec = graph_spec(cfg)
    if connected and spec.is_random:
        return connected_sample(spec, spec.seed)
    return generate(spec)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_gen(cfg: dict[str, Any]) -> None:
    g = load_graph(cfg, connected=False)
    m = g.metrics
    summary = f"n={g.n} m={g.edge_count} min_degree={m.min_degree} max_degree={m.max_degree} diameter={m.to_dict()['diameter']}"
    fmt = cfg["format"]
    if fmt == "json":
        _emit(cfg, {"n": g.n, "edges": g.edges().tolist(), "metrics": m.to_dict()}, None, summary)
        return
    if fmt is None and not cfg["out"]:
        print(summary)
        return
    buf = io.StringIO()
    write_edge_list(g, buf)
    with _sink(cfg["out"]) as fh:
        fh.write(_comment_header(cfg) + buf.getvalue())


def cmd_simulate(cfg: dict[str, Any]) -> None:
    model = canonical_model(cfg["model"])
    offsets = None
    if cfg.get("adversarial"):
        if model != ROLLING:
            raise UsageError("--adversarial schedules fix ever-rolling offsets; use --model quasirandom")
        fam = cfg.get("family")
        n = cfg.get("n")
        if fam == "path" and n:
            sched = adversarial_path_schedule(n)
        elif fam == "two_clique_hub" and n:
            sched = adversarial_two_clique_schedule(n, cfg["seed"])
        else:
            raise UsageError("--adversarial needs --family path or two_clique_hub with --n")
        g, lists, start, offsets = sched.graph, sched.lists, sched.start, sched.offsets
        max_rounds = cfg.get("max_rounds") or default_max_rounds(g.n, adversarial=True)
    else:
        g = load_graph(cfg)
        lists = make_lists(g, cfg["lists"], derive_seed(cfg["seed"], "lists"))
        start = cfg["start"]
        max_rounds = cfg.get("max_rounds")
    rc = RunConfig(model, start, cfg["seed"], max_rounds, cfg["loss"], bool(cfg.get("trace")))
    trace = simulate(g, lists, rc, offsets)
    bt = trace.broadcast_time
    bt_out = int(bt) if bt != float("inf") else None
    summary = f"broadcast_time {bt_out if bt_out is not None else 'inf'}"
    if cfg.get("trace"):
        with _sink(cfg["out"]) as fh:
            trace.write_jsonl(fh, _header(cfg))
        if cfg["out"]:
            print(summary)
        return
    payload = {"broadcast_time": bt_out, "rounds_run": trace.rounds_run,
               "informed_at": trace.informed_at_list(), "informed_counts": trace.informed_counts().tolist()}
    csv_text = "t,informed\n" + "".join(f"{t},{c}\n" for t, c in enumerate(trace.informed_counts().tolist()))
    _emit(cfg, payload, csv_text, summary)


def _models(cfg: dict[str, Any]) -> list[str]:
    out = []
    for name in str(cfg["models"]).split(","):
        if name.strip():
            try:
                out.append(canonical_model(name.strip()))
            except InvalidParameters as e:
                raise UsageError(str(e)) from None
    if not out:
        raise UsageError("--models is empty")
    return out


def cmd_bench(cfg: dict[str, Any]) -> None:
    if cfg.get("graph_file"):
        raise UsageError("bench regenerates graphs per trial; use --family")
    spec = graph_spec(cfg)
    models = tuple(RunConfig(m, max_rounds=cfg.get("max_rounds"), loss_probability=cfg["loss"]) for m in _models(cfg))
    ec = ExperimentConfig(spec, models, cfg["trials"], cfg["start_policy"], cfg["start"], cfg["lists"],
                          cfg["seed"], resample=not cfg.get("fixed_sample"))
    rep = run_experiment(ec)
    if cfg.get("curves"):
        with _sink(cfg["curves"]) as fh:
            fh.write(_comment_header(cfg) + rep.curves_csv())
    lines = [f"{m}: mean {s.mean:.3f} p99 {s.p99:g} max {s.max:g} timeouts {s.timeout_count}"
             for m, s in rep.stats.items()]
    if rep.speedup is not None:
        lines.append(f"speedup {rep.speedup:.3f}")
    _emit(cfg, rep.to_dict(), rep.to_csv(), "\n".join(lines))


def cmd_sweep(cfg: dict[str, Any]) -> None:
    if not cfg.get("family") or not cfg.get("sizes"):
        raise UsageError("sweep needs --family and --sizes")
    try:
        sizes = [int(x) for x in str(cfg["sizes"]).split(",") if x.strip()]
    except ValueError:
        raise UsageError("--sizes must be comma-separated integers") from None
    extra = {k: cfg[k] for k in ("k", "d") if cfg.get(k) is not None}
    table = scaling_sweep(cfg["family"], sizes, _models(cfg), cfg["trials"], cfg["seed"], cfg["lists"], **extra)
    summary = "\n".join(f"n={r.n} {r.model}: mean {r.mean:.3f} mean/ln n {r.mean_over_ln_n:.3f}" for r in table.rows)
    _emit(cfg, table.to_dict(), table.to_csv(), summary)


def cmd_audit(cfg: dict[str, Any]) -> None:
    g = load_graph(cfg)
    params = ExpansionParams(C_alpha=cfg["c_alpha"], C_beta_threshold=cfg["c_beta"],
                             C_delta=cfg["c_delta"], C_omega=cfg["c_omega"])
    rep = audit(g, params, cfg["mode"], cfg["samples"], cfg["subset_samples"], derive_seed(cfg["seed"], "audit"))
    d = rep.to_dict()
    summary = "\n".join(f"{k.upper()}: {'pass' if d[k]['pass'] else 'fail'}" for k in ("p1", "p2", "p3"))
    _emit(cfg, d, None, summary)


def cmd_spectral(cfg: dict[str, Any]) -> None:
    g = load_graph(cfg)
    rep = spectral(g)
    payload: dict[str, Any] = rep.to_dict()
    lines = [f"lambda1 {rep.lambda1:.10g}", f"lambda {rep.lam:.10g}"]
    if rep.is_regular and g.n > 1:
        s = derive_seed(cfg["seed"], "spectral")
        mix = mixing_check(g, rep.lam, cfg["pairs"], s)
        tan = tanner_check(g, rep.lam, cfg["pairs"], s)
        payload["mixing"] = mix.to_dict()
        payload["tanner"] = tan.to_dict()
        lines += [f"ramanujan {rep.ramanujan_pass}", f"mixing_violations {mix.violations}",
                  f"tanner_violations {tan.violations}"]
    _emit(cfg, payload, None, "\n".join(lines))


def cmd_reach(cfg: dict[str, Any]) -> None:
    for key in ("w", "b"):
        if cfg.get(key) is None:
            raise UsageError(f"reach needs --{key}")
    g = load_graph(cfg)
    lists = make_lists(g, cfg["lists"], derive_seed(cfg["seed"], "lists"))
    offsets = draw_offsets(g, cfg["seed"])
    u = sorted(reach_set(g, lists, offsets, cfg["w"], cfg["a"], cfg["b"]))
    _emit(cfg, {"reach": u}, "vertex\n" + "".join(f"{v}\n" for v in u), json.dumps(u))


COMMANDS = {
    "gen": cmd_gen,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
    "spectral": cmd_spectral,
    "reach": cmd_reach,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(SUBCOMMANDS))
        cfg = effective_config(ns)
        COMMANDS[ns.command](cfg)
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except BoundViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return 2
    except (RumorBenchError, ValueError) as e:
        print(f"rumorbench: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
