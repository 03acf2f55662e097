"""Command-line entry point: ``fstsp <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from fstsp.bench import GAP_KINDS, BenchConfig, compute_gap, run_bench
from fstsp.exact import DEFAULT_CAP, OracleCapError, brute_force_optimum
from fstsp.instance import (
    InstanceError,
    adapt_tsplib,
    ingest_matrix_dir,
    load_instance,
    random_instance,
    read_tsplib_coords,
    save_instance,
)
from fstsp.milp import (
    ModelConfig,
    add_order_constraints,
    assignment_from_solution,
    build_model,
    export_lp,
)
from fstsp.rrls import RrlsConfig, format_log, rrls
from fstsp.separation import SeparationError, cut_to_row, separate_csec
from fstsp.solution import SolutionError, evaluate, format_solution, load_solution

EXIT_OK = 0
EXIT_INVALID = 2
FORMULATION_FLAGS = {"3if": "3IF", "2if": "2IF", "2ifbc": "2IF-BC-base"}


class CliError(Exception):
    pass


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_budget(text: str) -> tuple[float | None, int | None]:
    kind, _, value = text.partition(":")
    try:
        if kind == "iterations":
            return None, int(value)
        if kind == "seconds":
            return float(value), None
    except ValueError:
        pass
    raise CliError(f"--budget expects iterations:N or seconds:S, got {text!r}")


def _parse_order(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(f"--order expects comma-separated customer indices, got {text!r}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_adapt(args) -> None:
    common = dict(sigma_launch=args.sigma_launch, sigma_rendezvous=args.sigma_rendezvous, endurance=args.endurance)
    if args.matrix_dir:
        inst = ingest_matrix_dir(args.matrix_dir, **common)
    else:
        coords = read_tsplib_coords(args.tsplib)
        inst = adapt_tsplib(
            coords, args.eligible_fraction, args.speed_ratio, args.depot, **common,
            eligible_seed=args.eligible_seed, name=Path(args.tsplib).stem,
        )
    save_instance(inst, args.output)
    print(f"wrote {args.output}: {inst.num_customers} customers, {len(inst.drone_eligible)} drone-eligible")


def cmd_generate(args) -> None:
    inst = random_instance(
        args.customers, args.seed, eligible_fraction=args.eligible_fraction, speed_ratio=args.speed_ratio,
        sigma_launch=args.sigma_launch, sigma_rendezvous=args.sigma_rendezvous, endurance=args.endurance,
        integer=args.integer,
    )
    save_instance(inst, args.output)
    print(f"wrote {args.output}: {inst.num_customers} customers, {len(inst.drone_eligible)} drone-eligible")


def cmd_evaluate(args) -> None:
    inst = load_instance(args.instance)
    sched = evaluate(inst, load_solution(args.solution))
    print(f"objective: {sched.objective:.2f}")
    print(f"feasible: {'yes' if sched.feasible else 'no'}")
    for v in sched.violations:
        print(f"violation [{v.kind}]: {v.message}")
    if args.times:
        for node in sorted(sched.t):
            print(f"t[{node}] = {sched.t[node]:.2f}  w[{node}] = {sched.w.get(node, 0.0):.2f}")


def cmd_export_lp(args) -> None:
    inst = load_instance(args.instance)
    config = ModelConfig(
        FORMULATION_FLAGS[args.formulation], big_m_policy=args.big_m_policy,
        include_endurance_inequality=not args.no_endurance_inequality,
    )
    model = build_model(inst, config)
    if args.order:
        model = add_order_constraints(model, _parse_order(args.order))
    if args.emit_cuts:
        if config.formulation != "2IF-BC-base":
            raise CliError("--emit-cuts needs --formulation 2ifbc")
        assignment = assignment_from_solution(model, inst, load_solution(args.emit_cuts), strict=False)
        cuts = separate_csec(inst, assignment)
        model = model.with_rows(cut_to_row(cut, model) for cut in cuts)
        print(f"separated {len(cuts)} cut(s)", file=sys.stderr)
    _write(export_lp(model), args.output)


def cmd_rrls(args) -> None:
    inst = load_instance(args.instance)
    time_limit, iterations = args.time_limit, None
    if args.budget:
        time_limit, iterations = _parse_budget(args.budget)
    config = RrlsConfig(
        time_limit=time_limit, rng_seed=args.seed, inner_solver=args.inner, noise_max=args.noise_max,
        max_iterations=iterations, export_dir=args.export_dir,
    )
    result = rrls(inst, config)
    print(f"objective: {result.objective:.2f}")
    print(f"iterations: {len(result.log)}  restarts: {result.restarts}")
    if args.output:
        Path(args.output).write_text(format_solution(result.solution), encoding="utf-8")
    else:
        sys.stdout.write(format_solution(result.solution))
    if args.log:
        Path(args.log).write_text(format_log(result.log, include_wall=iterations is None), encoding="utf-8")


def cmd_oracle(args) -> None:
    inst = load_instance(args.instance)
    solution, objective = brute_force_optimum(inst, args.max_customers)
    print(f"objective: {objective:.2f}")
    if args.output:
        Path(args.output).write_text(format_solution(solution), encoding="utf-8")
    else:
        sys.stdout.write(format_solution(solution))


def cmd_bench(args) -> None:
    time_limit, iterations = args.time_limit, None
    if args.budget:
        time_limit, iterations = _parse_budget(args.budget)
    config = BenchConfig(
        seeds=tuple(range(args.seeds)), time_limit=time_limit, max_iterations=iterations,
        oracle_cap=args.oracle_cap, reference_file=args.reference, record_wall_time=iterations is None,
    )
    table = run_bench(args.directory, config)
    _write(table.to_csv(), args.output)
    for method, n, avg, matches in table.summary():
        avg_text = "-" if avg is None else f"{avg:.2f}"
        print(f"{method}: {n} record(s), avg gap {avg_text}%, matches {matches}", file=sys.stderr)


def cmd_gap(args) -> None:
    print(f"{compute_gap(args.value, args.reference, args.kind):.2f}")


# ---------------------------------------------------------------------------


def _instance_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma-launch", type=float, default=1.0)
    p.add_argument("--sigma-rendezvous", type=float, default=1.0)
    p.add_argument("--endurance", type=float, default=20.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fstsp", description="Truck-and-drone routing toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("adapt", help="build an instance from a TSPLIB file or a matrix directory")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--tsplib", help="TSPLIB file with NODE_COORD_SECTION")
    src.add_argument("--matrix-dir", help="directory with tau.csv, tauprime.csv and nodes.csv")
    p.add_argument("--eligible-fraction", type=float, default=80.0)
    p.add_argument("--speed-ratio", type=float, default=2.0)
    p.add_argument("--depot", choices=("center", "corner"), default="center")
    p.add_argument("--eligible-seed", type=int, default=None, help="random eligible subset instead of lowest indices")
    _instance_params(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("generate", help="seeded random instance")
    p.add_argument("--customers", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eligible-fraction", type=float, default=80.0)
    p.add_argument("--speed-ratio", type=float, default=1.5)
    p.add_argument("--integer", action="store_true", help="round times up to integers")
    _instance_params(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="schedule, objective and violations of a solution")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--times", action="store_true", help="print node times and waits")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-lp", help="write a formulation as an LP file")
    p.add_argument("instance")
    p.add_argument("--formulation", choices=sorted(FORMULATION_FLAGS), default="2if")
    p.add_argument("--emit-cuts", metavar="SOLUTION", help="append the cuts separated at this solution")
    p.add_argument("--order", metavar="S1,S2,...", help="append fixed-order rows for this customer sequence")
    p.add_argument("--big-m-policy", choices=("tight", "global"), default="tight")
    p.add_argument("--no-endurance-inequality", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("rrls", help="run the random restart local search")
    p.add_argument("instance")
    p.add_argument("--time-limit", type=float, default=20.0)
    p.add_argument("--budget", help="iterations:N or seconds:S (overrides --time-limit)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inner", choices=("dp", "milp-export"), default="dp")
    p.add_argument("--export-dir", help="where milp-export writes the fixed-order models")
    p.add_argument("--noise-max", type=float, default=0.5)
    p.add_argument("--log", help="write the iteration log CSV here")
    p.add_argument("-o", "--output", help="write the best solution here")
    p.set_defaults(func=cmd_rrls)

    p = sub.add_parser("oracle", help="exact optimum by enumeration (small instances)")
    p.add_argument("instance")
    p.add_argument("--max-customers", type=int, default=DEFAULT_CAP)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="run RRLS over a directory of instances")
    p.add_argument("directory")
    p.add_argument("--reference", help="CSV with instance,endurance,opt columns")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds, 0..N-1")
    p.add_argument("--time-limit", type=float, default=20.0)
    p.add_argument("--budget", help="iterations:N or seconds:S (overrides --time-limit)")
    p.add_argument("--oracle-cap", type=int, default=0, help="also run the oracle when c <= cap")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gap", help="percentage gap of a value against a reference")
    p.add_argument("value", type=float)
    p.add_argument("reference", type=float)
    p.add_argument("--kind", choices=GAP_KINDS, default="vs-opt")
    p.set_defaults(func=cmd_gap)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CliError, InstanceError, SolutionError, SeparationError, OracleCapError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
