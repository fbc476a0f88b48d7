"""Command-line front end: generate, solve, compare, evaluate."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import svg
from .evolution import RunConfig, RunResult, run, select_default_solution
from .instance import (
    GeneratorSpec,
    InstanceFormatError,
    InvalidSpecError,
    dumps_instance,
    generate_instance,
    read_instance,
    validate_instance,
)
from .metrics import NormalizationBounds, average_ranks, hypervolume, win_counts
from .presets import preset_spec
from .schedule import (
    InstanceInfeasibleError,
    MalformedSolutionError,
    evaluate,
    gantt_csv,
    gantt_rows,
    read_solution,
    solution_to_dict,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3
EXIT_IO = 4


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(f"{self.prog}: {message}")


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=d(1), help="parallel runs (default 1)")
    p.add_argument("--out", default=d(None), help="output directory (default $SABA_OUT or ./saba_out)")
    p.add_argument("--format", choices=("csv", "json"), default=d("csv"), help="tabular output format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="saba", description="Energy-aware split-delivery harvest scheduling.")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write a generated instance file")
    g.add_argument("--preset", help="pro1..pro15 or realworld")
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--tasks", type=int, help="number of tasks (default rows*cols*harvest-fraction)")
    g.add_argument("--robots", type=int, default=4)
    g.add_argument("--yield-min", type=int, default=30)
    g.add_argument("--yield-max", type=int, default=50)
    g.add_argument("--harvest-fraction", type=float, default=1.0)
    g.add_argument("--name", help="instance name (also the file stem)")

    s = sub.add_parser("solve", parents=[common], help="run the optimizer on an instance file")
    s.add_argument("instance")
    s.add_argument("--pop", type=int, default=30, help="population size")
    s.add_argument("--p", type=float, default=0.42, help="SABM invocation probability")
    s.add_argument("--budget-factor", type=float, default=0.5, help="budget = n * factor seconds")
    s.add_argument("--budget-s", type=float, help="absolute budget in seconds (overrides --budget-factor)")
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--no-sabm", action="store_true")
    s.add_argument("--no-psrm", action="store_true")
    s.add_argument("--psrm-passes", type=int, default=1)
    s.add_argument("--trace", action="store_true", help="write SABM/PSRM step records as JSON lines")
    s.add_argument(
        "--clock",
        choices=("work", "wall"),
        default="work",
        help="budget clock: 'work' counts simulation steps (reproducible), 'wall' uses real time",
    )

    c = sub.add_parser("compare", parents=[common], help="HV, win counts and ranks across run sets")
    c.add_argument("runsets", nargs="+", metavar="LABEL=DIR")

    e = sub.add_parser("evaluate", parents=[common], help="evaluate a solution file")
    e.add_argument("instance")
    e.add_argument("solution")
    e.add_argument("--gantt", action="store_true", help="also write Gantt CSV and SVG under --out")
    return parser


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out or os.environ.get("SABA_OUT") or "saba_out")


def _write_table(path: Path, header: Sequence[str], rows: Sequence[Sequence], fmt: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = path.with_suffix(".json")
        path.write_text(json.dumps([dict(zip(header, r)) for r in rows], indent=1) + "\n", encoding="utf-8")
        return path
    path = path.with_suffix(".csv")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def _read_table(path: Path) -> list[dict]:
    if path.suffix == ".json":
        return json.loads(path.read_text(encoding="utf-8"))
    with path.open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------- generate


def cmd_generate(args: argparse.Namespace) -> int:
    if args.preset:
        spec = preset_spec(args.preset, seed=args.seed)
        if args.name:
            spec = dataclasses.replace(spec, name=args.name)
    else:
        if args.rows is None or args.cols is None:
            raise ConfigError("generate needs --preset or both --rows and --cols")
        spec = GeneratorSpec(
            rows=args.rows,
            cols=args.cols,
            task_count=args.tasks,
            robot_count=args.robots,
            yield_range=(args.yield_min, args.yield_max),
            harvest_fraction=args.harvest_fraction,
            seed=args.seed,
            name=args.name,
        )
    inst = generate_instance(spec)
    problems = validate_instance(inst)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{inst.name}.json"
    path.write_text(dumps_instance(inst), encoding="utf-8")
    print(f"{path}  n={inst.n} r={inst.robot_count} total_yield={inst.total_yield}")
    for p in problems:
        print(f"warning: {p}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- solve


def _run_one(job: tuple[str, RunConfig, bool]) -> tuple[RunResult, list[dict]]:
    path, cfg, trace = job
    inst = read_instance(path)
    records: list[dict] = []
    result = run(inst, cfg, tracer=records.append if trace else None)
    return result, records


def cmd_solve(args: argparse.Namespace) -> int:
    if args.runs < 1:
        raise ConfigError("--runs must be at least 1")
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    inst = read_instance(args.instance)
    try:
        base = RunConfig(
            population_size=args.pop,
            time_budget_s=args.budget_s,
            budget_factor=args.budget_factor,
            sabm_probability=args.p,
            disable_sabm=args.no_sabm,
            disable_psrm=args.no_psrm,
            psrm_passes=args.psrm_passes,
            clock=args.clock,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    seeds = np.random.SeedSequence(args.seed).generate_state(args.runs).tolist()
    jobs = [(args.instance, dataclasses.replace(base, seed=int(s)), args.trace) for s in seeds]
    if args.threads > 1 and args.runs > 1:
        with ProcessPoolExecutor(max_workers=min(args.threads, args.runs)) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]

    out = _out_dir(args) / inst.name
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for k, ((res, records), seed) in enumerate(zip(results, seeds)):
        tag = f"run{k:02d}"
        rows = []
        for j, ind in enumerate(res.front):
            rel = f"{tag}/solution_{j:03d}.json"
            (out / rel).parent.mkdir(parents=True, exist_ok=True)
            (out / rel).write_text(json.dumps(solution_to_dict(ind.solution)) + "\n", encoding="utf-8")
            rows.append((ind.report.makespan_s, ind.report.transport_energy_kJ, rel))
        _write_table(out / f"front_{tag}", ("makespan_s", "energy_kJ", "solution_file"), rows, args.format)

        points = [ind.objectives for ind in res.front]
        knee = select_default_solution(points)
        knee_ind = res.front[knee]
        (out / f"knee_{tag}.json").write_text(json.dumps(solution_to_dict(knee_ind.solution)) + "\n", encoding="utf-8")
        (out / f"knee_{tag}_gantt.csv").write_text(gantt_csv(knee_ind.report), encoding="utf-8")
        svg.write_svg(svg.gantt_chart(gantt_rows(knee_ind.report), f"{inst.name} {tag} knee schedule"), out / f"knee_{tag}_gantt.svg")
        svg.write_svg(svg.pareto_scatter(points, knee, f"{inst.name} {tag}"), out / f"front_{tag}.svg")
        log_header = ("generation", "elapsed_s", "front_size", "best_makespan", "best_energy", "hv_archive")
        _write_table(out / f"log_{tag}", log_header, [tuple(r[h] for h in log_header) for r in res.log], args.format)
        if args.trace:
            with (out / f"trace_{tag}.jsonl").open("w", encoding="utf-8") as fh:
                for rec in records:
                    fh.write(json.dumps(rec) + "\n")
        summary.append(
            (k, seed, res.generations, len(res.front), knee_ind.report.makespan_s, knee_ind.report.transport_energy_kJ)
        )
        print(
            f"{tag}: seed={seed} generations={res.generations} front={len(res.front)} "
            f"knee=({knee_ind.report.makespan_s:.1f} s, {knee_ind.report.transport_energy_kJ:.4f} kJ) wall={res.wall_s:.1f}s"
        )
    _write_table(
        out / "summary",
        ("run", "seed", "generations", "front_size", "knee_makespan_s", "knee_energy_kJ"),
        summary,
        args.format,
    )
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------- compare


def _load_runset(root: Path) -> dict[str, list[list[tuple[float, float]]]]:
    if not root.is_dir():
        raise FileNotFoundError(f"run directory not found: {root}")
    found: dict[str, list[list[tuple[float, float]]]] = {}
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        files = sorted(sub.glob("front_run*.csv")) + sorted(sub.glob("front_run*.json"))
        if files:
            found[sub.name] = [
                [(float(r["makespan_s"]), float(r["energy_kJ"])) for r in _read_table(f)] for f in files
            ]
    if not found:
        raise FileNotFoundError(f"no front_run* files under {root}")
    return found


def cmd_compare(args: argparse.Namespace) -> int:
    sets: dict[str, dict[str, list]] = {}
    for spec in args.runsets:
        label, sep, path = spec.partition("=")
        if not sep or not label or not path:
            raise ConfigError(f"expected LABEL=DIR, got {spec!r}")
        if label in sets:
            raise ConfigError(f"duplicate label {label!r}")
        sets[label] = _load_runset(Path(path))
    labels = list(sets)
    instances = sorted(sets[labels[0]])
    for lab in labels[1:]:
        if sorted(sets[lab]) != instances:
            raise ConfigError(f"run set {lab!r} covers {sorted(sets[lab])}, expected {instances}")

    metric_rows = []
    wins = {lab: 0 for lab in labels}
    ties = 0
    hv_all: dict[str, list[float]] = {lab: [] for lab in labels}
    mean_table: dict[str, dict[str, float]] = {}
    for name in instances:
        try:
            wc = win_counts({lab: sets[lab][name] for lab in labels})
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from exc
        for lab in labels:
            wins[lab] += wc.wins[lab]
        ties += wc.ties
        bounds = NormalizationBounds.from_points(p for lab in labels for front in sets[lab][name] for p in front)
        mean_table[name] = {}
        for lab in labels:
            vals = [hypervolume(front, bounds) for front in sets[lab][name]]
            for k, v in enumerate(vals):
                metric_rows.append((name, lab, k, v))
            hv_all[lab].extend(vals)
            mean_table[name][lab] = float(np.mean(vals))
    ranks = average_ranks(mean_table)
    out = _out_dir(args)
    p1 = _write_table(out / "metrics", ("instance", "algorithm", "run", "hv"), metric_rows, args.format)
    summary = [
        (lab, float(np.mean(hv_all[lab])), float(np.std(hv_all[lab])), wins[lab], ranks[lab]) for lab in labels
    ]
    p2 = _write_table(out / "summary", ("algorithm", "mean_hv", "std_hv", "wins", "avg_rank"), summary, args.format)
    svg.write_svg(svg.bar_chart({lab: wins[lab] for lab in labels}), out / "wins.svg")
    print("algorithm      mean_hv   std_hv  wins  avg_rank")
    for lab, m, s, w, r in summary:
        print(f"{lab:<12} {m:9.4f} {s:8.4f} {w:5d} {r:9.4f}")
    print(f"ties: {ties}")
    print(f"wrote {p1}, {p2}, {out / 'wins.svg'}")
    return EXIT_OK


# ---------------------------------------------------------------- evaluate


def cmd_evaluate(args: argparse.Namespace) -> int:
    inst = read_instance(args.instance)
    sol = read_solution(args.solution)
    report = evaluate(inst, sol)
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=1))
    else:
        print(f"makespan_s: {report.makespan_s:.6f}")
        print(f"transport_energy_kJ: {report.transport_energy_kJ:.6f}")
        print(f"feasible: {str(report.feasible).lower()}")
        print(f"bottleneck_robot: {report.bottleneck}")
        for k, robot in enumerate(report.per_robot):
            print(f"robot {k}: completion_time_s={robot.completion_time_s:.6f} transport_kJ={robot.transport_kJ:.6f}")
            for c in robot.cycles:
                flag = " forced" if c.forced_swap else ""
                print(
                    f"  cycle {c.ordinal} [{c.terminator}] travel={c.travel_s:.3f} pick={c.pick_s:.3f} "
                    f"swap={c.swap_s:.3f} T={c.cycle_time_s:.6f} E={c.transport_kJ:.6f} "
                    f"service={c.service_kJ:.6f} battery_on_return={c.battery_on_return_kJ:.6f}{flag}"
                )
            trace = " ".join(f"{node}:{b:.3f}/{load}" for node, b, load in report.battery_trace[k])
            print(f"  trace (node:battery/load): {trace}")
        for v in report.violations:
            print(f"violation: {v}")
    if args.gantt:
        out = _out_dir(args)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(args.solution).stem
        (out / f"{stem}_gantt.csv").write_text(gantt_csv(report), encoding="utf-8")
        svg.write_svg(svg.gantt_chart(gantt_rows(report), stem), out / f"{stem}_gantt.svg")
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "compare": cmd_compare, "evaluate": cmd_evaluate}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InstanceInfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InstanceFormatError, MalformedSolutionError, OSError, json.JSONDecodeError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidSpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
