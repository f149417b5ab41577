"""Command-line front end wiring generators, solvers, and the bench harness.

Exit codes are a total function of the outcome:

    0   success; for solver commands, a feasible result
    2   bad input: unknown flags, malformed spec strings, config or
        problem files that fail validation
    3   converged without reaching feasibility (solve / fig1), or no
        feasible point recovered from the relaxation (sdr)
    4   iteration budget exhausted or numerical failure
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .bench import (
    BenchConfig,
    default_start,
    export_fig1_traces,
    run_bench,
    run_multicast_study,
    write_report_files,
)
from .demo2d import START_STUCK, START_SUCCESS, run_demo
from .fpp import EngineFailure, FppParams, multi_start, run_fpp_sca
from .generators import generate, parse_generator_spec
from .sdr import run_sdr
from .serialization import (
    fpp_result_to_json,
    json_to_vector,
    read_instance,
    sdr_result_to_json,
    write_instance,
)

# feasible -> 0 so scripts can branch on "found a point" directly
_STATUS_EXIT = {
    "feasible_kkt": 0,
    "feasible_converged": 0,
    "infeasible_converged": 3,
    "max_iter": 4,
}

# bench config files: one "key = value" per line, # starts a comment
_CONFIG_KEYS = {
    "generator": str,
    "runs": int,
    "scenario": str,
    "sdr_draws": int,
    "base_seed": int,
    "jobs": int,
    "lambda": float,
    "max_iter": int,
    "conv_tol": float,
}
_REQUIRED_KEYS = ("generator", "runs")


def _parse_config(text: str) -> dict:
    doc = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        if key in doc:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        try:
            doc[key] = _CONFIG_KEYS[key](value)
        except ValueError:
            raise ValueError(f"config line {lineno}: bad value {value!r} for {key!r}") from None
    for key in _REQUIRED_KEYS:
        if key not in doc:
            raise ValueError(f"config is missing required key {key!r}")
    return doc


def _config_to_bench(doc: dict, jobs_override: int | None) -> BenchConfig:
    params = FppParams(
        slack_penalty=doc.get("lambda", 10.0),
        max_iter=doc.get("max_iter", 30),
        conv_tol=doc.get("conv_tol", 1e-4),
    )
    return BenchConfig(
        generator=doc["generator"],
        runs=doc["runs"],
        scenario=doc.get("scenario", "both"),
        sdr_draws=doc.get("sdr_draws", 1000),
        base_seed=doc.get("base_seed", 0),
        fpp_params=params,
        jobs=jobs_override if jobs_override is not None else doc.get("jobs", 1),
    )


def _params_from(args: argparse.Namespace) -> FppParams:
    return FppParams(
        slack_penalty=args.slack_penalty, max_iter=args.max_iter, conv_tol=args.conv_tol
    )


def _write_json(path, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _print_fpp_summary(result) -> None:
    print(f"status: {result.status}")
    print(f"objective: {result.objective:.10g}")
    print(f"iterations to feasibility: {result.iterations_to_feasibility}")
    print(f"iterations to convergence: {result.iterations_to_convergence}")
    print(f"max slack: {max(result.s_final):.3e}")
    verdict = "pass" if result.kkt_passed else "fail"
    print(f"kkt residual: {result.kkt_residual:.3e} ({verdict})")


def _cmd_gen(args: argparse.Namespace) -> int:
    cfg = parse_generator_spec(args.spec)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    inst = generate(cfg)
    write_instance(args.out, inst)
    print(f"wrote {args.out}: dim {inst.dim}, {inst.num_constraints} constraints")
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    inst = read_instance(args.problem)
    params = _params_from(args)
    if args.start is not None:
        z0 = json_to_vector(json.loads(Path(args.start).read_text()))
        result = run_fpp_sca(inst, z0, params)
    elif args.starts > 1:
        starts = [default_start(args.seed + i, inst.dim) for i in range(args.starts)]
        result = multi_start(inst, starts, params)
    else:
        result = run_fpp_sca(inst, default_start(args.seed, inst.dim), params)
    if args.out is not None:
        _write_json(args.out, fpp_result_to_json(result, include_trace=args.trace))
    _print_fpp_summary(result)
    return _STATUS_EXIT[result.status]


def _cmd_sdr(args: argparse.Namespace) -> int:
    inst = read_instance(args.problem)
    result = run_sdr(inst, num_draws=args.draws, rng_seed=args.seed)
    if args.out is not None:
        _write_json(args.out, sdr_result_to_json(result))
    print(f"status: {result.status}")
    print(f"lower bound: {result.lower_bound:.10g}")
    print(f"rank one: {result.rank1}")
    if result.best_point is not None:
        print(f"feasible objective: {result.best_objective:.10g}")
        print(f"randomizations tried: {result.randomizations_tried}")
    else:
        print(f"no feasible point after {result.randomizations_tried} randomizations")
    if result.status == "optimal":
        return 0 if result.best_point is not None else 3
    return 3 if result.status == "infeasible" else 4


def _print_report_summary(report, paths: dict) -> None:
    print(f"scenario: {report.scenario}")
    print(f"generator: {report.generator}")
    print(f"runs: {report.runs} (completed {report.completed}, failed {report.failed}, excluded {report.excluded})")
    pairs = (
        ("fpp feasible %", report.fpp_feasible_pct),
        ("fpp avg iters to feasibility", report.fpp_avg_iters_feasibility),
        ("fpp avg loss dB", report.fpp_avg_loss_db),
        ("sdr rank-1 %", report.rank1_pct),
        ("sdr feasible after randomization %", report.feasible_after_randomization_pct),
        ("sdr no feasible after randomization %", report.no_feasible_after_randomization_pct),
        ("sdr avg loss dB", report.sdr_avg_loss_db),
    )
    for label, value in pairs:
        if value is not None:
            print(f"{label}: {value:.4g}")
    for kind in ("json", "csv", "jsonl"):
        print(f"{kind}: {paths[kind]}")


def _cmd_bench(args: argparse.Namespace) -> int:
    doc = _parse_config(Path(args.config).read_text())
    cfg = _config_to_bench(doc, args.jobs)
    report = run_bench(cfg)
    prefix = args.out if args.out is not None else Path(args.config).stem
    paths = write_report_files(report, prefix)
    _print_report_summary(report, paths)
    return 0


def _cmd_multicast(args: argparse.Namespace) -> int:
    doc = _parse_config(Path(args.config).read_text())
    if doc.get("scenario", "multicast") != "multicast":
        raise ValueError("multicast command needs a config with scenario = multicast")
    doc["scenario"] = "multicast"
    cfg = _config_to_bench(doc, args.jobs)
    report = run_multicast_study(cfg)
    prefix = args.out if args.out is not None else Path(args.config).stem
    paths = write_report_files(report, prefix)
    _print_report_summary(report, paths)
    return 0


def _cmd_fig1(args: argparse.Namespace) -> int:
    params = _params_from(args)
    if args.case is None:
        written = export_fig1_traces(START_SUCCESS, START_STUCK, args.out, params)
        for case in ("case_a", "case_b"):
            print(f"{case}: {len(written[case])} files under {args.out}")
        return 0
    start = START_SUCCESS if args.case == "a" else START_STUCK
    result = run_demo(start, params)
    _print_fpp_summary(result)
    return _STATUS_EXIT[result.status]


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda", dest="slack_penalty", type=float, default=10.0,
                        help="slack penalty weight (default 10)")
    parser.add_argument("--max-iter", type=int, default=30)
    parser.add_argument("--conv-tol", type=float, default=1e-4)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fppsca")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a problem instance file")
    gen.add_argument("spec", help='e.g. "random:n=8,M=16,seed=1"')
    gen.add_argument("--out", required=True, help="output problem JSON path")
    gen.add_argument("--seed", type=int, default=None, help="override the spec seed")
    gen.set_defaults(handler=_cmd_gen)

    solve = sub.add_parser("solve", help="run the feasible point pursuit solver")
    solve.add_argument("problem", help="problem JSON path")
    solve.add_argument("--out", default=None, help="result JSON path")
    solve.add_argument("--trace", action="store_true", help="include per-iteration trace in the result")
    solve.add_argument("--seed", type=int, default=0, help="start vector stream seed")
    solve.add_argument("--starts", type=int, default=1, help="number of random starts, best kept")
    solve.add_argument("--start", default=None, help="JSON file with an explicit start vector")
    _add_solver_flags(solve)
    solve.set_defaults(handler=_cmd_solve)

    sdr = sub.add_parser("sdr", help="relaxation bound plus randomized rounding")
    sdr.add_argument("problem", help="problem JSON path")
    sdr.add_argument("--out", default=None, help="result JSON path")
    sdr.add_argument("--draws", type=int, default=10000)
    sdr.add_argument("--seed", type=int, default=0)
    sdr.set_defaults(handler=_cmd_sdr)

    bench = sub.add_parser("bench", help="run a Monte-Carlo batch from a config file")
    bench.add_argument("config", help="key = value config path")
    bench.add_argument("--out", default=None, help="report file prefix (default: config stem)")
    bench.add_argument("--jobs", type=int, default=None, help="worker processes (overrides config)")
    bench.set_defaults(handler=_cmd_bench)

    multicast = sub.add_parser("multicast", help="run the multicast study from a config file")
    multicast.add_argument("config", help="key = value config path")
    multicast.add_argument("--out", default=None, help="report file prefix (default: config stem)")
    multicast.add_argument("--jobs", type=int, default=None)
    multicast.set_defaults(handler=_cmd_multicast)

    fig1 = sub.add_parser("fig1", help="2-d demo: run one case or export both trace sets")
    fig1.add_argument("--case", choices=("a", "b"), default=None,
                      help="run a single case instead of exporting traces")
    fig1.add_argument("--out", default="fig1_traces", help="trace export directory")
    _add_solver_flags(fig1)
    fig1.set_defaults(handler=_cmd_fig1)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except EngineFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    raise SystemExit(main(sys.argv[1:]))
