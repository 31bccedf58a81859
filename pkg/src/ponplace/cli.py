"""Command-line entry point.

Subcommands: generate, solve, baseline, sweep, summarize, export-lp, audit.
Exit codes: 0 ok, 2 infeasible, 3 limit or attempt budget exceeded,
4 invalid input, 1 audit mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .baseline import METHOD_RANDOM, METHOD_ROUND_ROBIN, random_feasible_embed, round_robin_embed
from .errors import (
    GaveUp,
    Infeasible,
    InvalidConfig,
    LimitExceeded,
    MixedSweep,
    ParseError,
    TooLarge,
    UnknownNode,
    Unsatisfiable,
    ValidationError,
)
from .power import OnuMode, PowerParams
from .solver import SolveLimits, brute_force_optimal, export_lp, solve_optimal
from .sweep import (
    SweepSpec,
    audit_rows,
    rows_from_csv,
    rows_to_csv,
    run_sweep,
    summarize,
    summary_to_csv,
    summary_to_text,
    sweep_from_json,
    sweep_to_json,
)
from .topology import TopologyConfig, build_topology
from .workload import GenerationParams, generate_workload, parse_workload, serialize_workload

EXIT_OK = 0
EXIT_AUDIT_MISMATCH = 1
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3
EXIT_INVALID = 4


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags, which collides with the
    # "infeasible" code; route usage errors to the invalid-input code.
    def error(self, message):
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read(path: str) -> str:
    return Path(path).read_text()


def _add_topology_args(parser) -> None:
    parser.add_argument("--topology", help="topology config JSON file")
    parser.add_argument("--groups", type=int, default=2)
    parser.add_argument("--subgroups", type=int, default=2)
    parser.add_argument("--servers-per-subgroup", type=int, default=3)


def _topology_from_args(args):
    if args.topology:
        config = TopologyConfig.from_json(_read(args.topology))
    else:
        config = TopologyConfig(
            num_groups=args.groups,
            subgroups_per_group=args.subgroups,
            servers_per_subgroup=args.servers_per_subgroup,
        )
    return build_topology(config)


def _add_power_args(parser) -> None:
    parser.add_argument("--power-config", help="JSON file with PowerParams fields")
    parser.add_argument("--p-idle", type=float)
    parser.add_argument("--p-max", type=float)
    parser.add_argument("--onu-power", type=float)
    parser.add_argument(
        "--onu-mode", choices=[m.value for m in OnuMode], default=None
    )


def _params_from_args(args) -> PowerParams:
    doc = {}
    if args.power_config:
        try:
            doc = json.loads(_read(args.power_config))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid power config JSON: {exc}") from exc
    if args.p_idle is not None:
        doc["p_idle"] = args.p_idle
    if args.p_max is not None:
        doc["p_max"] = args.p_max
    if args.onu_power is not None:
        doc["onu_power"] = args.onu_power
    if args.onu_mode is not None:
        doc["onu_mode"] = args.onu_mode
    return PowerParams.from_dict(doc)


def _add_limit_args(parser) -> None:
    parser.add_argument("--time-limit", type=float, help="seconds")
    parser.add_argument("--node-limit", type=int)


def _limits_from_args(args) -> SolveLimits:
    limits = SolveLimits(time_limit=args.time_limit, node_limit=args.node_limit)
    limits.validate()
    return limits


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(piece) for piece in text.split(",") if piece != "")


def cmd_generate(args) -> int:
    params = GenerationParams(
        cpu_min=args.cpu_min,
        cpu_max=args.cpu_max,
        mem_min=args.mem_min,
        mem_max=args.mem_max,
        rate_min=args.rate_min,
        rate_max=args.rate_max,
        degree_min=args.degree_min,
        degree_max=args.degree_max,
    )
    workload = generate_workload(args.vms, args.seed, params)
    _write(serialize_workload(workload) + "\n", args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    topology = _topology_from_args(args)
    workload = parse_workload(_read(args.workload))
    params = _params_from_args(args)
    if args.method == "brute-force":
        report = brute_force_optimal(topology, workload, params)
    else:
        report = solve_optimal(topology, workload, params, _limits_from_args(args))
    _write(json.dumps(report.to_dict(), indent=2) + "\n", args.output)
    return EXIT_OK if report.optimal else EXIT_LIMIT


def cmd_baseline(args) -> int:
    topology = _topology_from_args(args)
    workload = parse_workload(_read(args.workload))
    params = _params_from_args(args)
    if args.baseline == METHOD_ROUND_ROBIN:
        report = round_robin_embed(topology, workload, params)
    else:
        report = random_feasible_embed(topology, workload, params, seed=args.seed)
    _write(json.dumps(report.to_dict(), indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config:
        spec = SweepSpec.from_json(_read(args.config))
    else:
        seeds = _int_list(args.seeds) if args.seeds else tuple(range(args.num_seeds))
        spec = SweepSpec(
            vm_counts=_int_list(args.vm_counts),
            servers_per_subgroup=_int_list(args.servers_per_subgroup),
            seeds=seeds,
            params=_params_from_args(args),
            limits=_limits_from_args(args),
            baseline=args.baseline,
        )
    spec.validate()
    rows = run_sweep(spec)
    if args.format == "json":
        _write(sweep_to_json(spec, rows) + "\n", args.output)
    else:
        _write(rows_to_csv(rows, include_timing=not args.no_timing), args.output)
    return EXIT_OK


def _load_rows(path: str):
    text = _read(path)
    if text.lstrip().startswith("{"):
        spec, rows = sweep_from_json(text)
        return spec, rows
    return None, rows_from_csv(text)


def cmd_summarize(args) -> int:
    _, rows = _load_rows(args.rows)
    cells = summarize(rows)
    if args.format == "csv":
        _write(summary_to_csv(cells), args.output)
    else:
        _write(summary_to_text(cells), args.output)
    return EXIT_OK


def cmd_export_lp(args) -> int:
    topology = _topology_from_args(args)
    workload = parse_workload(_read(args.workload))
    params = _params_from_args(args)
    _write(export_lp(topology, workload, params), args.output)
    return EXIT_OK


def cmd_audit(args) -> int:
    spec, rows = _load_rows(args.rows)
    if args.config:
        spec = SweepSpec.from_json(_read(args.config))
    params = spec.params if spec is not None else _params_from_args(args)
    problems = audit_rows(rows, params)
    if problems:
        for problem in problems:
            print(problem, file=sys.stderr)
        return EXIT_AUDIT_MISMATCH
    print(f"audit ok: {len(rows)} rows verified")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="ponplace", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random workload file")
    p.add_argument("--vms", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cpu-min", type=int, default=500)
    p.add_argument("--cpu-max", type=int, default=2000)
    p.add_argument("--mem-min", type=int, default=500)
    p.add_argument("--mem-max", type=int, default=2000)
    p.add_argument("--rate-min", type=int, default=40)
    p.add_argument("--rate-max", type=int, default=200)
    p.add_argument("--degree-min", type=int, default=1)
    p.add_argument("--degree-max", type=int, default=3)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="optimal embedding for a workload")
    p.add_argument("--workload", required=True)
    _add_topology_args(p)
    _add_power_args(p)
    _add_limit_args(p)
    p.add_argument("--method", choices=["optimal", "brute-force"], default="optimal")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("baseline", help="non-optimized comparator embedding")
    p.add_argument("--workload", required=True)
    _add_topology_args(p)
    _add_power_args(p)
    p.add_argument(
        "--baseline", choices=[METHOD_ROUND_ROBIN, METHOD_RANDOM], default=METHOD_ROUND_ROBIN
    )
    p.add_argument("--seed", type=int, default=0, help="seed for the random baseline")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("sweep", help="run the seeded experiment grid")
    p.add_argument("--config", help="SweepSpec JSON file; overrides other flags")
    p.add_argument("--vm-counts", default="5,10,15")
    p.add_argument("--servers-per-subgroup", default="2,3,4")
    p.add_argument("--seeds", help="comma-separated seed list")
    p.add_argument("--num-seeds", type=int, default=20, help="use seeds 0..N-1")
    p.add_argument(
        "--baseline", choices=[METHOD_ROUND_ROBIN, METHOD_RANDOM], default=METHOD_ROUND_ROBIN
    )
    _add_power_args(p)
    _add_limit_args(p)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--no-timing", action="store_true", help="zero the elapsed column")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("summarize", help="per-cell means and savings")
    p.add_argument("--rows", required=True, help="sweep output, CSV or JSON")
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("export-lp", help="emit the integer program in LP format")
    p.add_argument("--workload", required=True)
    _add_topology_args(p)
    _add_power_args(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("audit", help="re-verify stored powers in sweep rows")
    p.add_argument("--rows", required=True, help="sweep output, CSV or JSON")
    p.add_argument("--config", help="SweepSpec JSON used for the sweep")
    _add_power_args(p)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ParseError,
        ValidationError,
        InvalidConfig,
        Unsatisfiable,
        UnknownNode,
        TooLarge,
        MixedSweep,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (LimitExceeded, GaveUp) as exc:
        print(f"limit exceeded: {exc}", file=sys.stderr)
        return EXIT_LIMIT


if __name__ == "__main__":
    sys.exit(main())
