"""Traffic-unaware placement comparators.

Round-robin spreads VMs cyclically across servers the way load-balancing
schedulers do, ignoring flows entirely; random placement rejection-samples
uniform assignments until one fits.  Both report through the same
:class:`SolveReport` shape as the exact solver, with ``optimal=False``.
"""

from __future__ import annotations

import random
import time

from .errors import GaveUp, Infeasible
from .power import Embedding, PowerParams, compute_usage, check_feasibility, total_power
from .solver import SolveReport
from .topology import Topology
from .workload import Workload, validate_workload

METHOD_ROUND_ROBIN = "round-robin"
METHOD_RANDOM = "random"

BASELINE_METHODS = (METHOD_ROUND_ROBIN, METHOD_RANDOM)


def round_robin_embed(
    topology: Topology,
    workload: Workload,
    params: PowerParams | None = None,
) -> SolveReport:
    """Cyclic placement over servers in canonical order.

    Each VM (in id order) goes to the next server, skipping servers whose
    cpu or memory capacity it would overflow.  Raises :class:`Infeasible`
    when a VM fits nowhere or when the finished placement violates the
    link or forwarding constraints (C3-C5), identifying the constraint.
    """
    params = params or PowerParams()
    params.validate()
    validate_workload(workload, check_bounds=False)
    start = time.perf_counter()
    c = topology.config
    servers = topology.servers
    n_servers = len(servers)
    load_cpu = [0] * n_servers
    load_mem = [0] * n_servers
    assignment = {}
    cursor = 0
    for vm in sorted(workload.vms, key=lambda v: v.id):
        placed = False
        for step in range(n_servers):
            s = (cursor + step) % n_servers
            if (
                load_cpu[s] + vm.cpu_demand <= c.server_cpu_capacity
                and load_mem[s] + vm.mem_demand <= c.server_mem_capacity
            ):
                load_cpu[s] += vm.cpu_demand
                load_mem[s] += vm.mem_demand
                assignment[vm.id] = servers[s]
                cursor = (s + 1) % n_servers
                placed = True
                break
        if not placed:
            raise Infeasible(
                f"round-robin: VM {vm.id} fits on no server (C1/C2 everywhere)"
            )
    embedding = Embedding(assignment)
    usage = compute_usage(topology, workload, embedding)
    violations = check_feasibility(topology, workload, embedding, usage)
    if violations:
        raise Infeasible(
            "round-robin placement violates "
            + ", ".join(sorted({v.constraint for v in violations})),
            violations=violations,
        )
    breakdown = total_power(topology, workload, embedding, params)
    return SolveReport(
        embedding=embedding,
        power=breakdown,
        optimal=False,
        nodes_explored=len(workload.vms),
        elapsed=time.perf_counter() - start,
        method=METHOD_ROUND_ROBIN,
    )


def random_feasible_embed(
    topology: Topology,
    workload: Workload,
    params: PowerParams | None = None,
    seed: int = 0,
    max_attempts: int = 10_000,
) -> SolveReport:
    """Uniform assignments resampled until all of C1-C5 hold.

    Deterministic for a fixed seed.  Raises :class:`GaveUp` carrying the
    attempt count when the budget runs out.
    """
    params = params or PowerParams()
    params.validate()
    validate_workload(workload, check_bounds=False)
    start = time.perf_counter()
    servers = topology.servers
    rng = random.Random(seed)
    vms = sorted(workload.vms, key=lambda v: v.id)
    for attempt in range(1, max_attempts + 1):
        assignment = {vm.id: rng.choice(servers) for vm in vms}
        embedding = Embedding(assignment)
        usage = compute_usage(topology, workload, embedding)
        if check_feasibility(topology, workload, embedding, usage):
            continue
        breakdown = total_power(topology, workload, embedding, params)
        return SolveReport(
            embedding=embedding,
            power=breakdown,
            optimal=False,
            nodes_explored=attempt,
            elapsed=time.perf_counter() - start,
            method=METHOD_RANDOM,
        )
    raise GaveUp(
        f"no feasible uniform assignment in {max_attempts} attempts",
        attempts=max_attempts,
    )
