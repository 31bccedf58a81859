"""Seeded experiment sweeps over VM counts and subgroup sizes.

A sweep solves every (vm_count, servers_per_subgroup, seed) cell with the
exact solver and one baseline on a two-group, two-subgroup fabric, then
emits one row per cell and method.  Rows carry their embedding so stored
powers can be re-verified later.  Output is deterministic for a fixed spec
up to the wall-clock column.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace

from .baseline import (
    BASELINE_METHODS,
    METHOD_RANDOM,
    METHOD_ROUND_ROBIN,
    random_feasible_embed,
    round_robin_embed,
)
from .errors import GaveUp, Infeasible, LimitExceeded, MixedSweep, ParseError, ValidationError
from .power import Embedding, PowerParams, total_power
from .solver import (
    METHOD_BRANCH_AND_BOUND,
    METHOD_BRUTE_FORCE,
    SolveLimits,
    solve_optimal,
)
from .topology import TopologyConfig, Topology, build_topology, parse_server_label
from .workload import GenerationParams, Workload, generate_workload

# Savings percentages printed as a comparison line next to sweep summaries,
# keyed by VM count.
REFERENCE_SAVINGS_PCT = {5: 24.0, 10: 22.0, 15: 26.0}

_OPTIMAL_METHODS = (METHOD_BRANCH_AND_BOUND, METHOD_BRUTE_FORCE)

CSV_HEADER = [
    "vm_count",
    "servers_per_subgroup",
    "seed",
    "method",
    "total_w",
    "servers_activated",
    "special_servers_activated",
    "optimal",
    "embedding",
    "error",
    "elapsed_s",
]


@dataclass(frozen=True)
class SweepSpec:
    vm_counts: tuple[int, ...] = (5, 10, 15)
    servers_per_subgroup: tuple[int, ...] = (2, 3, 4)
    seeds: tuple[int, ...] = tuple(range(20))
    params: PowerParams = PowerParams()
    limits: SolveLimits = SolveLimits()
    baseline: str = METHOD_ROUND_ROBIN

    def validate(self) -> None:
        for name in ("vm_counts", "servers_per_subgroup", "seeds"):
            values = getattr(self, name)
            if not values:
                raise ValidationError(f"{name} must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValidationError("seeds must be distinct")
        if self.baseline not in BASELINE_METHODS:
            raise ValidationError(
                f"baseline must be one of {BASELINE_METHODS}, got {self.baseline!r}"
            )
        self.params.validate()
        self.limits.validate()

    def to_dict(self) -> dict:
        return {
            "vm_counts": list(self.vm_counts),
            "servers_per_subgroup": list(self.servers_per_subgroup),
            "seeds": list(self.seeds),
            "params": self.params.to_dict(),
            "limits": {
                "time_limit": self.limits.time_limit,
                "node_limit": self.limits.node_limit,
            },
            "baseline": self.baseline,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepSpec":
        known = {"vm_counts", "servers_per_subgroup", "seeds", "params", "limits", "baseline"}
        unknown = set(doc) - known
        if unknown:
            raise ParseError(f"unknown sweep fields: {sorted(unknown)}")
        limits_doc = doc.get("limits", {})
        spec = cls(
            vm_counts=tuple(doc.get("vm_counts", (5, 10, 15))),
            servers_per_subgroup=tuple(doc.get("servers_per_subgroup", (2, 3, 4))),
            seeds=tuple(doc.get("seeds", tuple(range(20)))),
            params=PowerParams.from_dict(doc.get("params", {})),
            limits=SolveLimits(
                time_limit=limits_doc.get("time_limit"),
                node_limit=limits_doc.get("node_limit"),
            ),
            baseline=doc.get("baseline", METHOD_ROUND_ROBIN),
        )
        spec.validate()
        return spec

    @classmethod
    def from_json(cls, text: str) -> "SweepSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid sweep config JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ParseError("sweep config must be a JSON object")
        return cls.from_dict(doc)


@dataclass
class SweepRow:
    vm_count: int
    servers_per_subgroup: int
    seed: int
    method: str
    total_w: float | None
    servers_activated: int | None
    special_servers_activated: int | None
    optimal: bool
    embedding: dict[int, str] | None
    error: str | None
    elapsed: float

    def sort_key(self):
        return (self.vm_count, self.servers_per_subgroup, self.seed, self.method)


def sweep_topology(servers_per_subgroup: int) -> Topology:
    """The studied fabric: two groups of two subgroups each."""
    return build_topology(
        TopologyConfig(
            num_groups=2,
            subgroups_per_group=2,
            servers_per_subgroup=servers_per_subgroup,
        )
    )


def _row_from_report(vm_count, sps, seed, report) -> SweepRow:
    return SweepRow(
        vm_count=vm_count,
        servers_per_subgroup=sps,
        seed=seed,
        method=report.method,
        total_w=report.power.total_w,
        servers_activated=report.power.activated_servers,
        special_servers_activated=report.power.activated_special_servers,
        optimal=report.optimal,
        embedding=report.embedding.to_labels(),
        error=None,
        elapsed=report.elapsed,
    )


def _error_row(vm_count, sps, seed, method, error) -> SweepRow:
    return SweepRow(
        vm_count=vm_count,
        servers_per_subgroup=sps,
        seed=seed,
        method=method,
        total_w=None,
        servers_activated=None,
        special_servers_activated=None,
        optimal=False,
        embedding=None,
        error=error,
        elapsed=0.0,
    )


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """One row per (vm_count, servers_per_subgroup, seed, method).

    Infeasible and limit-hit cells are flagged in the ``error`` column,
    never dropped.  The same workload (vm_count, seed) is reused across all
    topology sizes, so per-seed comparisons across sizes are meaningful.
    """
    spec.validate()
    workloads: dict[tuple[int, int], Workload] = {}
    rows: list[SweepRow] = []
    for vm_count in spec.vm_counts:
        for seed in spec.seeds:
            workloads[(vm_count, seed)] = generate_workload(vm_count, seed)
    for vm_count in sorted(spec.vm_counts):
        for sps in sorted(spec.servers_per_subgroup):
            topology = sweep_topology(sps)
            for seed in sorted(spec.seeds):
                workload = workloads[(vm_count, seed)]
                try:
                    report = solve_optimal(topology, workload, spec.params, spec.limits)
                    rows.append(_row_from_report(vm_count, sps, seed, report))
                except Infeasible:
                    rows.append(
                        _error_row(vm_count, sps, seed, METHOD_BRANCH_AND_BOUND, "infeasible")
                    )
                except LimitExceeded:
                    rows.append(
                        _error_row(
                            vm_count, sps, seed, METHOD_BRANCH_AND_BOUND, "limit-exceeded"
                        )
                    )
                try:
                    if spec.baseline == METHOD_ROUND_ROBIN:
                        report = round_robin_embed(topology, workload, spec.params)
                    else:
                        report = random_feasible_embed(
                            topology, workload, spec.params, seed=seed
                        )
                    rows.append(_row_from_report(vm_count, sps, seed, report))
                except Infeasible:
                    rows.append(_error_row(vm_count, sps, seed, spec.baseline, "infeasible"))
                except GaveUp:
                    rows.append(_error_row(vm_count, sps, seed, spec.baseline, "gave-up"))
    rows.sort(key=SweepRow.sort_key)
    return rows


def _embedding_to_text(embedding: dict[int, str] | None) -> str:
    if not embedding:
        return ""
    return ";".join(f"{vm}:{label}" for vm, label in sorted(embedding.items()))


def _embedding_from_text(text: str) -> dict[int, str] | None:
    if not text:
        return None
    out = {}
    for piece in text.split(";"):
        vm, _, label = piece.partition(":")
        out[int(vm)] = label
    return out


def rows_to_csv(rows: list[SweepRow], include_timing: bool = True) -> str:
    """CSV with the documented header row.

    All columns except elapsed_s are deterministic for a fixed spec;
    pass ``include_timing=False`` to zero the timing column and get
    byte-identical output across runs.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(
            [
                row.vm_count,
                row.servers_per_subgroup,
                row.seed,
                row.method,
                "" if row.total_w is None else repr(row.total_w),
                "" if row.servers_activated is None else row.servers_activated,
                "" if row.special_servers_activated is None else row.special_servers_activated,
                int(row.optimal),
                _embedding_to_text(row.embedding),
                row.error or "",
                f"{row.elapsed:.6f}" if include_timing else "0.000000",
            ]
        )
    return buffer.getvalue()


def rows_from_csv(text: str) -> list[SweepRow]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty rows CSV") from None
    if header != CSV_HEADER:
        raise ParseError(f"unexpected CSV header: {header}")
    rows = []
    for record in reader:
        if len(record) != len(CSV_HEADER):
            raise ParseError(f"bad CSV record: {record}")
        rows.append(
            SweepRow(
                vm_count=int(record[0]),
                servers_per_subgroup=int(record[1]),
                seed=int(record[2]),
                method=record[3],
                total_w=float(record[4]) if record[4] else None,
                servers_activated=int(record[5]) if record[5] else None,
                special_servers_activated=int(record[6]) if record[6] else None,
                optimal=bool(int(record[7])),
                embedding=_embedding_from_text(record[8]),
                error=record[9] or None,
                elapsed=float(record[10]),
            )
        )
    return rows


def sweep_to_json(spec: SweepSpec, rows: list[SweepRow]) -> str:
    return json.dumps(
        {
            "spec": spec.to_dict(),
            "rows": [
                {
                    "vm_count": r.vm_count,
                    "servers_per_subgroup": r.servers_per_subgroup,
                    "seed": r.seed,
                    "method": r.method,
                    "total_w": r.total_w,
                    "servers_activated": r.servers_activated,
                    "special_servers_activated": r.special_servers_activated,
                    "optimal": r.optimal,
                    "embedding": r.embedding,
                    "error": r.error,
                    "elapsed_s": r.elapsed,
                }
                for r in rows
            ],
        },
        indent=2,
    )


def sweep_from_json(text: str) -> tuple[SweepSpec, list[SweepRow]]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid sweep JSON: {exc}") from exc
    spec = SweepSpec.from_dict(doc.get("spec", {}))
    rows = []
    for r in doc.get("rows", []):
        embedding = r.get("embedding")
        if embedding is not None:
            embedding = {int(k): v for k, v in embedding.items()}
        rows.append(
            SweepRow(
                vm_count=r["vm_count"],
                servers_per_subgroup=r["servers_per_subgroup"],
                seed=r["seed"],
                method=r["method"],
                total_w=r["total_w"],
                servers_activated=r["servers_activated"],
                special_servers_activated=r["special_servers_activated"],
                optimal=r["optimal"],
                embedding=embedding,
                error=r.get("error"),
                elapsed=r.get("elapsed_s", 0.0),
            )
        )
    return spec, rows


@dataclass
class SummaryCell:
    vm_count: int
    servers_per_subgroup: int
    seeds: int
    feasible_pairs: int
    mean_optimal_w: float | None
    mean_baseline_w: float | None
    mean_savings_pct: float | None
    mean_servers_optimal: float | None
    mean_specials_optimal: float | None
    mean_servers_baseline: float | None
    mean_specials_baseline: float | None


def _mean(values):
    values = list(values)
    return sum(values) / len(values) if values else None


def summarize(rows: list[SweepRow]) -> list[SummaryCell]:
    """Per-cell means; savings are averaged over per-seed ratios.

    Savings on one seed is (baseline - optimal) / baseline; the mean is
    taken over seeds where both methods produced a feasible embedding.
    Raises :class:`MixedSweep` when rows mix baselines or repeat a cell.
    """
    optimal_methods = {r.method for r in rows if r.method in _OPTIMAL_METHODS}
    baseline_methods = {r.method for r in rows if r.method in BASELINE_METHODS}
    other = {r.method for r in rows} - set(_OPTIMAL_METHODS) - set(BASELINE_METHODS)
    if other:
        raise MixedSweep(f"unknown methods in rows: {sorted(other)}")
    if len(optimal_methods) > 1 or len(baseline_methods) > 1:
        raise MixedSweep(
            f"rows mix methods: optimal={sorted(optimal_methods)}, "
            f"baseline={sorted(baseline_methods)}"
        )
    seen = set()
    for r in rows:
        key = r.sort_key()
        if key in seen:
            raise MixedSweep(f"duplicate row for cell {key}")
        seen.add(key)

    cells: dict[tuple[int, int], dict[int, dict[str, SweepRow]]] = {}
    for r in rows:
        lane = "optimal" if r.method in _OPTIMAL_METHODS else "baseline"
        cells.setdefault((r.vm_count, r.servers_per_subgroup), {}).setdefault(
            r.seed, {}
        )[lane] = r

    out = []
    for (vm_count, sps), by_seed in sorted(cells.items()):
        opt_rows = [
            s["optimal"]
            for s in by_seed.values()
            if "optimal" in s and s["optimal"].total_w is not None
        ]
        base_rows = [
            s["baseline"]
            for s in by_seed.values()
            if "baseline" in s and s["baseline"].total_w is not None
        ]
        savings = []
        pairs = 0
        for s in by_seed.values():
            opt = s.get("optimal")
            base = s.get("baseline")
            if opt and base and opt.total_w is not None and base.total_w is not None:
                pairs += 1
                if base.total_w > 0:
                    savings.append((base.total_w - opt.total_w) / base.total_w)
                else:
                    savings.append(0.0)
        mean_savings = _mean(savings)
        out.append(
            SummaryCell(
                vm_count=vm_count,
                servers_per_subgroup=sps,
                seeds=len(by_seed),
                feasible_pairs=pairs,
                mean_optimal_w=_mean(r.total_w for r in opt_rows),
                mean_baseline_w=_mean(r.total_w for r in base_rows),
                mean_savings_pct=None if mean_savings is None else 100.0 * mean_savings,
                mean_servers_optimal=_mean(r.servers_activated for r in opt_rows),
                mean_specials_optimal=_mean(r.special_servers_activated for r in opt_rows),
                mean_servers_baseline=_mean(r.servers_activated for r in base_rows),
                mean_specials_baseline=_mean(r.special_servers_activated for r in base_rows),
            )
        )
    return out


def _num(value, digits=6) -> str:
    return "" if value is None else f"{value:.{digits}f}"


SUMMARY_HEADER = [
    "vm_count",
    "servers_per_subgroup",
    "seeds",
    "feasible_pairs",
    "mean_optimal_w",
    "mean_baseline_w",
    "mean_savings_pct",
    "mean_servers_optimal",
    "mean_specials_optimal",
    "mean_servers_baseline",
    "mean_specials_baseline",
]


def summary_to_csv(cells: list[SummaryCell]) -> str:
    """Means carry six decimals, savings four; blanks mean no feasible data."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for cell in cells:
        writer.writerow(
            [
                cell.vm_count,
                cell.servers_per_subgroup,
                cell.seeds,
                cell.feasible_pairs,
                _num(cell.mean_optimal_w),
                _num(cell.mean_baseline_w),
                _num(cell.mean_savings_pct, 4),
                _num(cell.mean_servers_optimal),
                _num(cell.mean_specials_optimal),
                _num(cell.mean_servers_baseline),
                _num(cell.mean_specials_baseline),
            ]
        )
    return buffer.getvalue()


def summary_to_text(cells: list[SummaryCell]) -> str:
    lines = [summary_to_csv(cells).rstrip("\n")]
    reference = "/".join(
        f"{int(vm)} VMs: {pct:.0f}%" for vm, pct in sorted(REFERENCE_SAVINGS_PCT.items())
    )
    lines.append(f"# reference savings line: {reference}")
    return "\n".join(lines) + "\n"


def audit_rows(
    rows: list[SweepRow],
    params: PowerParams | None = None,
    generation: GenerationParams | None = None,
) -> list[str]:
    """Re-verify that every stored power is recomputable from its embedding.

    Returns a list of human-readable problems; an empty list means every
    row checks out.  Rows flagged with an error (no embedding) are skipped.
    """
    params = params or PowerParams()
    generation = generation or GenerationParams()
    problems = []
    workloads: dict[tuple[int, int], Workload] = {}
    for row in rows:
        if row.embedding is None or row.total_w is None:
            continue
        key = (row.vm_count, row.seed)
        if key not in workloads:
            workloads[key] = generate_workload(row.vm_count, row.seed, generation)
        topology = sweep_topology(row.servers_per_subgroup)
        try:
            assignment = {
                vm: parse_server_label(label) for vm, label in row.embedding.items()
            }
            breakdown = total_power(topology, workloads[key], Embedding(assignment), params)
        except Exception as exc:  # noqa: BLE001 - report, do not mask, audit failures
            problems.append(f"row {row.sort_key()}: recompute failed: {exc}")
            continue
        if breakdown.total_w != row.total_w:
            problems.append(
                f"row {row.sort_key()}: stored {row.total_w!r} != recomputed {breakdown.total_w!r}"
            )
        if breakdown.activated_servers != row.servers_activated:
            problems.append(
                f"row {row.sort_key()}: stored activations {row.servers_activated} "
                f"!= recomputed {breakdown.activated_servers}"
            )
        if breakdown.activated_special_servers != row.special_servers_activated:
            problems.append(
                f"row {row.sort_key()}: stored special activations "
                f"{row.special_servers_activated} != recomputed "
                f"{breakdown.activated_special_servers}"
            )
    return problems
