"""Command line front end: ``g2kp solve|bench|enumerate|export|generate``.

Exit status of ``solve``: 0 proven optimal, 1 verification failed, 2 usage
error, 3 stopped early (time limit or feasible only), 4 infeasible, 5 error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from g2kp.backend import (
    ERROR,
    FEASIBLE,
    INFEASIBLE,
    LP_METHODS,
    OPTIMAL,
    TIME_LIMIT,
    BackendConfig,
    CommandBackend,
    HighsBackend,
)
from g2kp.enumeration import ENHANCED, FAITHFUL, RULES, stats_csv
from g2kp.instance import Bounds, InstanceError, generate_random_instance, read_instance, render_instance
from g2kp.milp import export_model, build_model, solution_values
from g2kp.pricing import phase_csv
from g2kp.runner import (
    STATS_FIELDS,
    ConfigError,
    RunConfig,
    RunResult,
    build_graph,
    solve_instance,
)

EXIT_OPTIMAL = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_STOPPED = 3
EXIT_INFEASIBLE = 4
EXIT_ERROR = 5

_STATUS_EXIT = {OPTIMAL: EXIT_OPTIMAL, TIME_LIMIT: EXIT_STOPPED, FEASIBLE: EXIT_STOPPED, INFEASIBLE: EXIT_INFEASIBLE, ERROR: EXIT_ERROR}

_TAGS = {"N": "normalize", "CP": "cut_position", "RC": "redundant_cut", "W": "warm_start", "P": "purge"}


def parse_variant(label: str, backend: BackendConfig = BackendConfig()) -> RunConfig:
    """``[priced+|plain+]{faithful|enhanced}[+N][+CP][+RC][+W][+P]`` -> RunConfig."""
    parts = [p for p in label.split("+") if p]
    flags = {}
    pricing = False
    formulation = None
    for part in parts:
        low = part.lower()
        if low in ("priced", "plain"):
            pricing = low == "priced"
        elif low in (FAITHFUL, ENHANCED):
            formulation = low
        elif part.upper() in _TAGS:
            flags[_TAGS[part.upper()]] = True
        else:
            raise ConfigError(f"unknown variant component {part!r} in {label!r}")
    if formulation is None:
        raise ConfigError(f"variant {label!r} names no formulation")
    return RunConfig(formulation=formulation, pricing=pricing, backend=backend, **flags)


# --------------------------------------------------------------------------
# shared options


def _add_model_flags(ap: argparse.ArgumentParser) -> None:
    form = ap.add_mutually_exclusive_group()
    form.add_argument("--enhanced", dest="formulation", action="store_const", const=ENHANCED)
    form.add_argument("--faithful", dest="formulation", action="store_const", const=FAITHFUL)
    ap.set_defaults(formulation=ENHANCED)
    ap.add_argument("--normalize", action="store_true", help="plate-size normalization")
    ap.add_argument("--cut-position", action="store_true", help="Cut-Position reduction pass")
    ap.add_argument("--redundant-cut", action="store_true", help="Redundant-Cut pass (faithful only)")


def _add_solver_flags(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--time-limit", type=float, default=10800.0, help="seconds for the whole run")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--lp-method", choices=LP_METHODS, default="automatic")
    ap.add_argument("--backend", choices=("highs", "command"), default="highs")
    ap.add_argument("--solver-cmd", help="command template for --backend command")
    ap.add_argument("--model-format", choices=("lp", "mps"), default="lp")
    ap.add_argument("--solution-format", choices=("highs", "plain"), default="highs")


def _backend_config(args) -> BackendConfig:
    return BackendConfig(time_limit=args.time_limit, threads=args.threads, lp_method=args.lp_method, seed=args.seed)


def _make_backend(args):
    if args.backend == "command":
        return CommandBackend(args.solver_cmd, args.model_format, args.solution_format)
    return HighsBackend()


def _run_config(args) -> RunConfig:
    return RunConfig(
        formulation=args.formulation,
        normalize=args.normalize,
        cut_position=args.cut_position,
        redundant_cut=args.redundant_cut,
        warm_start=args.warm_start,
        pricing=args.pricing,
        purge=args.purge,
        verify=not args.no_verify,
        backend=_backend_config(args),
    )


def _write_stats(path: str, rows: list[dict]) -> None:
    p = Path(path)
    new = not p.exists() or p.stat().st_size == 0
    with p.open("a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=STATS_FIELDS, lineterminator="\n")
        if new:
            w.writeheader()
        w.writerows(rows)


def solution_text(result: RunResult) -> str:
    lines = [f"# status {result.status}"]
    if result.lb is not None:
        lines.append(f"# objective {result.lb}")
    if result.solution is not None and result.model is not None:
        values = solution_values(result.solution, result.model, result.graph)
        lines += [f"{name} {int(v)}" for name, v in values.items() if v]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    config = _run_config(args)
    backend = _make_backend(args)
    try:
        config.check(backend)
    except ConfigError as exc:
        print(f"g2kp solve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        instance = read_instance(args.instance)
    except (OSError, InstanceError) as exc:
        print(f"g2kp solve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    result = solve_instance(instance, config, backend)
    ub = "" if result.ub is None else result.ub
    print(f"{instance.name}: status={result.status} lb={result.lb} ub={ub} vars={result.n_vars} plates={result.n_plates}")
    if result.message and result.status != OPTIMAL:
        print(f"  {result.message}")
    if args.solution_out:
        Path(args.solution_out).write_text(solution_text(result))
    if args.stats_out:
        _write_stats(args.stats_out, [result.stats_row()])
    if args.phases_out and config.pricing:
        from g2kp.pricing import PricingState

        state = PricingState(times={k: v for k, v in result.times.items() if k != "total"})
        Path(args.phases_out).write_text(phase_csv([(instance.name, state)]))
    if result.verdict is not None:
        print(f"verify: {'ok' if result.verdict.ok else 'FAILED: ' + result.verdict.message}")
        if not result.verdict.ok:
            return EXIT_VERIFY
    return _STATUS_EXIT.get(result.status, EXIT_ERROR)


def _bench_one(job) -> list[dict]:
    path, configs, enumerate_only, backend_args = job
    rows = []
    try:
        instance = read_instance(path)
    except (OSError, InstanceError) as exc:
        for cfg in configs:
            rows.append(_error_row(Path(path).stem, cfg, str(exc)))
        return rows
    backend = CommandBackend(*backend_args) if backend_args else HighsBackend()
    for cfg in configs:
        if enumerate_only:
            graph = build_graph(instance, cfg)
            s = graph.stats
            row = RunResult(instance.name, cfg, "enumerated", None, None, None, None, None, s.n_vars, s.n_plates, {}).stats_row()
        else:
            row = solve_instance(instance, cfg, backend).stats_row()
        rows.append(row)
    return rows


def _error_row(name: str, cfg: RunConfig, message: str) -> dict:
    row = RunResult(name, cfg, ERROR, None, None, None, None, None, 0, 0, {}).stats_row()
    row["n_vars"] = row["n_plates"] = ""
    return row


def bench_footer(rows: list[dict], configs: list[RunConfig], enumerate_only: bool = False) -> list[dict]:
    out = []
    for cfg in configs:
        probe = RunResult("#sum", cfg, "", None, None, None, None, None, 0, 0, {}).stats_row()
        mine = [r for r in rows if all(r[k] == probe[k] for k in STATS_FIELDS[1:8])]
        probe["n_vars"] = sum(int(r["n_vars"] or 0) for r in mine)
        probe["n_plates"] = sum(int(r["n_plates"] or 0) for r in mine)
        if enumerate_only:
            probe["status"] = f"rows={len(mine)}"
        else:
            probe["status"] = f"optimal={sum(r['status'] == OPTIMAL for r in mine)}/{len(mine)}"
        for f in STATS_FIELDS:
            if f.startswith("t_"):
                probe[f] = f"{sum(float(r[f] or 0) for r in mine):.3f}"
        out.append(probe)
    return out


def cmd_bench(args) -> int:
    base = _backend_config(args)
    try:
        configs = [parse_variant(v, base) for v in (args.variant or ["enhanced", "faithful"])]
        for cfg in configs:
            cfg.check(None if args.enumerate_only else _make_backend(args))
    except ConfigError as exc:
        print(f"g2kp bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    root = Path(args.directory)
    if not root.is_dir():
        print(f"g2kp bench: error: {root} is not a directory", file=sys.stderr)
        return EXIT_USAGE
    files = sorted(p for p in root.iterdir() if p.is_file() and p.suffix in (".txt", ".g2kp", ".dat"))
    backend_args = (args.solver_cmd, args.model_format, args.solution_format) if args.backend == "command" else None
    jobs = [(str(f), configs, args.enumerate_only, backend_args) for f in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            chunks = list(pool.map(_bench_one, jobs))
    else:
        chunks = [_bench_one(j) for j in jobs]
    rows = [r for chunk in chunks for r in chunk]
    rows += bench_footer(rows, configs, args.enumerate_only)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=STATS_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            out.close()
    return 0


def cmd_enumerate(args) -> int:
    try:
        instance = read_instance(args.instance)
        cfg = RunConfig(
            formulation=args.rules, normalize=args.normalize, cut_position=args.cut_position,
            redundant_cut=args.redundant_cut,
        )
        if args.redundant_cut and args.rules == ENHANCED:
            raise ConfigError("--redundant-cut is only valid with faithful or restricted rules")
    except (OSError, InstanceError, ConfigError) as exc:
        print(f"g2kp enumerate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    from g2kp.enumeration import enumerate_graph

    graph = enumerate_graph(
        instance, cfg.formulation, normalize=cfg.normalize, cut_position=cfg.cut_position, redundant_cut=cfg.redundant_cut
    )
    sys.stdout.write(stats_csv([graph]))
    return 0


def cmd_export(args) -> int:
    try:
        instance = read_instance(args.instance)
        cfg = RunConfig(
            formulation=args.formulation, normalize=args.normalize, cut_position=args.cut_position,
            redundant_cut=args.redundant_cut,
        )
        cfg.check()
    except (OSError, InstanceError, ConfigError) as exc:
        print(f"g2kp export: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    data = export_model(build_model(build_graph(instance, cfg)), args.format)
    if args.output and args.output != "-":
        Path(args.output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    return 0


def cmd_generate(args) -> int:
    bounds = Bounds(
        plate_length=tuple(args.plate_length),
        plate_width=tuple(args.plate_width),
        n_pieces=tuple(args.pieces),
        profit=tuple(args.profit),
        demand=tuple(args.demand),
        unweighted=args.unweighted,
    )
    try:
        inst = generate_random_instance(args.seed, bounds)
    except InstanceError as exc:
        print(f"g2kp generate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render_instance(inst)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="g2kp", description="Exact guillotine 2D knapsack models.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("instance")
    _add_model_flags(p)
    p.add_argument("--warm-start", action="store_true", help="MIP start from the greedy heuristic")
    p.add_argument("--pricing", action="store_true", help="run the priced pipeline")
    p.add_argument("--purge", action="store_true", help="drop unreachable plates and cuts")
    p.add_argument("--no-verify", action="store_true", help="skip independent verification")
    _add_solver_flags(p)
    p.add_argument("--solution-out", help="write 'name value' solution here")
    p.add_argument("--stats-out", help="append a stats CSV row here")
    p.add_argument("--phases-out", help="write the phase breakdown CSV (priced runs)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run variants over a directory of instances")
    p.add_argument("directory")
    p.add_argument(
        "--variant", action="append",
        help="e.g. enhanced+N+W or priced+enhanced+N+W+P; repeatable (default: enhanced, faithful)",
    )
    p.add_argument("--enumerate-only", action="store_true", help="sizes only, no solves")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("-o", "--out", help="CSV output path (default stdout)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("enumerate", aliases=["stats"], help="print enumeration statistics")
    p.add_argument("instance")
    p.add_argument("--rules", choices=RULES, default=ENHANCED)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--cut-position", action="store_true")
    p.add_argument("--redundant-cut", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("export", help="write the model as LP or MPS text")
    p.add_argument("instance")
    _add_model_flags(p)
    p.add_argument("--format", choices=("lp", "mps"), default="lp")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("generate", help="write a random instance")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--plate-length", type=int, nargs=2, default=(5, 16), metavar=("MIN", "MAX"))
    p.add_argument("--plate-width", type=int, nargs=2, default=(5, 16), metavar=("MIN", "MAX"))
    p.add_argument("--pieces", type=int, nargs=2, default=(2, 5), metavar=("MIN", "MAX"))
    p.add_argument("--profit", type=int, nargs=2, default=(1, 100), metavar=("MIN", "MAX"))
    p.add_argument("--demand", type=int, nargs=2, default=(1, 3), metavar=("MIN", "MAX"))
    p.add_argument("--unweighted", action="store_true", help="profit = piece area")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "time_limit", 1) is not None and getattr(args, "time_limit", 1) <= 0:
        print("g2kp: error: --time-limit must be positive", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
