"""Command-line entry point.

Subcommands:

    run    seeded episode batch with one backend; writes traces,
           per-episode records, an aggregate CSV row, and a run manifest
    trace  per-tick report of a recorded trace plus a plot-ready
           polyline file and recomputed metrics
    bench  (backend x n_humans) matrix of runs, one CSV row per cell

Exit codes: 0 success, 2 configuration or input error, 3 backend error,
4 I/O error, 5 replay-fixture error. Remote-backend credentials come from
the environment variable named by --token-env (never a flag). All output
files are written to a temp name and renamed, so interrupted runs never
leave truncated files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from . import metrics as metrics_mod
from . import reasoner, simulator
from .config import load_config
from .constraints import ComplianceParams
from .errors import (
    ChainError,
    ConfigError,
    FixtureError,
    InputError,
    SocnavError,
    TransportError,
)
from .metrics import aggregate, episode_metrics, metrics_from_trace, results_csv_rows
from .simulator import ScenarioConfig, run_episode, trace_records

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_IO = 4
EXIT_FIXTURE = 5


@dataclass(frozen=True)
class RunSpec:
    config_path: str
    backend: str = "oracle"
    episodes: int = 10
    seed_base: int = 0
    out_dir: str = "out"
    jobs: int = 1
    humans: int | None = None
    endpoint: str = ""
    model: str = ""
    token_env: str = "SOCNAV_API_TOKEN"

    def __post_init__(self):
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")


def _atomic_write(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _make_policy(selector: str, cfg: ScenarioConfig, spec: RunSpec):
    if selector == "oracle":
        return reasoner.chain_policy(cfg, reasoner.oracle_provider)
    if selector.startswith("replay:"):
        backend = reasoner.ReplayBackend.from_file(selector[len("replay:"):])
        return reasoner.chain_policy(cfg, reasoner.shared_provider(backend))
    if selector == "remote":
        if not spec.endpoint or not spec.model:
            raise ConfigError("remote backend needs --endpoint and --model")
        backend = reasoner.RemoteBackend(
            spec.endpoint, spec.model, token_env=spec.token_env
        )
        return reasoner.chain_policy(cfg, reasoner.shared_provider(backend))
    raise ConfigError(f"unknown backend selector {selector!r}")


def _preflight(selector: str, spec: RunSpec) -> None:
    """Fail fast on backends that cannot possibly serve the run."""
    if selector.startswith("replay:"):
        reasoner.ReplayBackend.from_file(selector[len("replay:"):])
    elif selector == "remote":
        if not os.environ.get(spec.token_env):
            raise TransportError("auth", f"{spec.token_env} is not set")


def _episode_payloads(cfg: ScenarioConfig, spec: RunSpec, selector: str):
    for i in range(spec.episodes):
        yield replace(cfg, seed=spec.seed_base + i), selector, spec


def _run_one(payload):
    cfg, selector, spec = payload
    policy = _make_policy(selector, cfg, spec)
    result = run_episode(cfg, policy)
    record = episode_metrics(result, cfg.params)
    lines = [json.dumps(r, sort_keys=True) for r in trace_records(result)]
    return cfg.seed, record, lines


def _run_cell(cfg: ScenarioConfig, spec: RunSpec, selector: str, traces_dir):
    """All episodes for one (backend, n_humans) cell, reduced in seed order."""
    payloads = list(_episode_payloads(cfg, spec, selector))
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_run_one, payloads))
    else:
        results = [_run_one(p) for p in payloads]
    records = []
    for seed, record, lines in results:
        records.append(record)
        if traces_dir is not None:
            _atomic_write(
                os.path.join(traces_dir, f"trace_{seed:06d}.jsonl"),
                "\n".join(lines) + "\n",
            )
    return records


def cmd_run(spec: RunSpec) -> int:
    cfg = load_config(spec.config_path)
    if spec.humans is not None:
        cfg = replace(cfg, n_humans=spec.humans)
    _preflight(spec.backend, spec)

    os.makedirs(spec.out_dir, exist_ok=True)
    traces_dir = os.path.join(spec.out_dir, "traces")
    os.makedirs(traces_dir, exist_ok=True)

    manifest = {
        "command": "run",
        "config": str(spec.config_path),
        "backend": spec.backend,
        "episodes": spec.episodes,
        "seed": spec.seed_base,
        "humans": spec.humans,
        "out": str(spec.out_dir),
        "jobs": spec.jobs,
        "n_humans_effective": cfg.n_humans,
    }
    _atomic_write(
        os.path.join(spec.out_dir, "manifest.json"),
        json.dumps(manifest, indent=1, sort_keys=True) + "\n",
    )

    records = _run_cell(cfg, spec, spec.backend, traces_dir)
    _atomic_write(
        os.path.join(spec.out_dir, "episodes.jsonl"),
        "\n".join(json.dumps(r.as_dict(), sort_keys=True) for r in records) + "\n",
    )
    report = aggregate(records)
    rows = results_csv_rows([(spec.backend, cfg.n_humans, report)])
    _atomic_write(os.path.join(spec.out_dir, "results.csv"), "\n".join(rows) + "\n")
    print(f"{len(records)} episodes -> {spec.out_dir}/results.csv "
          f"(SR={report.sr:.2f})")
    return EXIT_OK


def cmd_trace(trace_path, out_dir=None, config_path=None) -> int:
    records = simulator.read_trace(trace_path)
    if not records:
        raise InputError(f"{trace_path}: empty trace")
    params = load_config(config_path).params if config_path else ComplianceParams()

    forced_ticks = 0
    for r in records:
        flags = ""
        if r.get("forced"):
            flags += " FORCED"
            forced_ticks += 1
        if r.get("repaired"):
            flags += " repaired"
        pv = r.get("predicate_vector") or {}
        pv_text = (
            " ".join(f"{k}={int(bool(v))}" for k, v in sorted(pv.items()))
            if pv
            else "-"
        )
        print(
            f"tick {r['tick']:4d} t={r['time']:7.2f} level={r.get('level') or '-':>4} "
            f"{pv_text}{flags}"
        )

    recomputed = metrics_from_trace(records, params)
    print(
        f"ticks={recomputed['ticks']} NP={recomputed['np']:.2f} "
        f"NT={recomputed['nt']:.2f} UF={recomputed['uf']} HA={recomputed['ha']} "
        f"forced_ticks={forced_ticks}"
    )

    out_dir = out_dir or os.path.dirname(os.path.abspath(trace_path))
    lines = ["agent,tick,x,y"]
    for r in records:
        lines.append(f"robot,{r['tick']},{r['robot']['p'][0]},{r['robot']['p'][1]}")
        for h in r["humans"]:
            lines.append(f"{h['id']},{r['tick']},{h['p'][0]},{h['p'][1]}")
    polyline_path = os.path.join(out_dir, "polylines.csv")
    _atomic_write(polyline_path, "\n".join(lines) + "\n")
    print(f"polylines -> {polyline_path}")
    return EXIT_OK


def cmd_bench(spec: RunSpec, backends: list[str], humans_list: list[int]) -> int:
    base_cfg = load_config(spec.config_path)
    os.makedirs(spec.out_dir, exist_ok=True)
    rows = [metrics_mod.CSV_HEADER]
    for selector in backends:
        for n in humans_list:
            cfg = replace(base_cfg, n_humans=n)
            try:
                _preflight(selector, spec)
                records = _run_cell(cfg, spec, selector, None)
                report = aggregate(records)
                rows.extend(results_csv_rows([(selector, n, report)])[1:])
            except (SocnavError, OSError) as exc:
                rows.append(f"{selector},{n},ERROR,,,,,0")
                print(f"cell ({selector}, {n}) failed: {exc}", file=sys.stderr)
    path = os.path.join(spec.out_dir, "bench.csv")
    _atomic_write(path, "\n".join(rows) + "\n")
    print(f"bench matrix -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socnav", description="Socially-aware navigation experiment harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--episodes", type=int, default=10)
        p.add_argument("--seed", type=int, default=0, help="base seed")
        p.add_argument("--humans", type=int, default=None, help="override n_humans")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel episodes")
        p.add_argument("--endpoint", default="", help="remote backend URL")
        p.add_argument("--model", default="", help="remote backend model name")
        p.add_argument("--token-env", default="SOCNAV_API_TOKEN",
                       help="env var holding the remote bearer token")

    run_p = sub.add_parser("run", help="run one seeded episode batch")
    add_common(run_p)
    run_p.add_argument("--backend", default="oracle",
                       help="oracle | remote | replay:FILE")

    trace_p = sub.add_parser("trace", help="summarize a recorded trace")
    trace_p.add_argument("trace", help="trace .jsonl file")
    trace_p.add_argument("--out", default=None, help="directory for plot data")
    trace_p.add_argument("--config", default=None,
                         help="config supplying compliance parameters")

    bench_p = sub.add_parser("bench", help="run a (backend x humans) matrix")
    add_common(bench_p)
    bench_p.add_argument("--backend", default="oracle",
                         help="comma-separated backend selectors")
    bench_p.add_argument("--humans-list", default="5,10",
                         help="comma-separated crowd sizes")

    return parser


def _spec_from_args(args) -> RunSpec:
    return RunSpec(
        config_path=args.config,
        backend=getattr(args, "backend", "oracle"),
        episodes=args.episodes,
        seed_base=args.seed,
        out_dir=args.out,
        jobs=args.jobs,
        humans=args.humans,
        endpoint=args.endpoint,
        model=args.model,
        token_env=args.token_env,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_spec_from_args(args))
        if args.command == "trace":
            return cmd_trace(args.trace, out_dir=args.out, config_path=args.config)
        if args.command == "bench":
            spec = _spec_from_args(args)
            backends = [b.strip() for b in args.backend.split(",") if b.strip()]
            humans_list = [int(h) for h in args.humans_list.split(",") if h.strip()]
            return cmd_bench(spec, backends, humans_list)
        raise ConfigError(f"unknown command {args.command!r}")
    except FixtureError as exc:
        print(f"fixture error: {exc}", file=sys.stderr)
        return EXIT_FIXTURE
    except (ConfigError, InputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TransportError, ChainError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
