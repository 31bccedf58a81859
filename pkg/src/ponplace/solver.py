"""Exact power-minimal embedding search, brute-force oracle and LP export.

The branch-and-bound assigns VMs in descending cpu order, trying servers in
canonical address order.  Within a subgroup servers are interchangeable, so
a fresh server may only be opened at the lowest unused index; this visits
exactly one representative per relabeling class without excluding any power
value.  Subtrees are cut when an admissible completion bound exceeds the
incumbent, and among co-optimal embeddings the lexicographically smallest
assignment vector wins (the lexicographic minimum always lies inside the
canonical class, so symmetry breaking never hides it).

The brute-force oracle enumerates every assignment in chunks with numpy,
filters by the same five constraints, and re-evaluates the near-minimal
candidates through :func:`ponplace.power.total_power` so both solvers
report bit-identical optima.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import Infeasible, LimitExceeded, TooLarge, ValidationError
from .power import (
    Embedding,
    OnuMode,
    PowerBreakdown,
    PowerParams,
    UTILIZATION_TOL,
    breakdown_from_loads,
    total_power,
)
from .topology import ServerAddress, Topology
from .workload import Workload, validate_workload

METHOD_BRANCH_AND_BOUND = "branch-and-bound"
METHOD_BRUTE_FORCE = "brute-force"

BRUTE_FORCE_GUARD = 10_000_000
_CHUNK = 1 << 16

# Bound comparisons carry a small slack so float drift in the incremental
# accounting can never prune an exact tie; everything within the window is
# re-evaluated exactly.
PRUNE_EPS = 1e-6

_AUDIT_MAX_REMAINING = 5
_AUDIT_LOG_CAP = 4096


@dataclass(frozen=True)
class SolveLimits:
    time_limit: float | None = None  # seconds
    node_limit: int | None = None

    def validate(self) -> None:
        if self.time_limit is not None and not self.time_limit > 0:
            raise ValidationError(f"time_limit must be positive, got {self.time_limit}")
        if self.node_limit is not None and not self.node_limit > 0:
            raise ValidationError(f"node_limit must be positive, got {self.node_limit}")


@dataclass
class SolveReport:
    embedding: Embedding
    power: PowerBreakdown
    optimal: bool
    nodes_explored: int
    elapsed: float
    method: str

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "optimal": self.optimal,
            "nodes_explored": self.nodes_explored,
            "elapsed_s": self.elapsed,
            "power": self.power.to_dict(),
            "embedding": {str(k): v for k, v in self.embedding.to_labels().items()},
        }


@dataclass(frozen=True)
class PrunedNode:
    """Snapshot of a cut subtree: partial hosts by VM position, and the bound."""

    host: tuple
    depth: int
    bound: float


class _LimitHit(Exception):
    pass


class _Instance:
    """Index-based view of one problem: positions instead of addresses."""

    def __init__(self, topology: Topology, workload: Workload):
        c = topology.config
        self.topology = topology
        self.n_servers = S = topology.num_servers
        self.n_groups = c.num_groups
        self.n_subs = c.num_groups * c.subgroups_per_group
        self.per_sub = c.servers_per_subgroup
        self.sub_of = [i // self.per_sub for i in range(S)]
        self.group_of = [self.sub_of[i] // c.subgroups_per_group for i in range(S)]

        vms = sorted(workload.vms, key=lambda v: v.id)
        self.vm_ids = [v.id for v in vms]
        pos = {v.id: i for i, v in enumerate(vms)}
        self.cpu = [v.cpu_demand for v in vms]
        self.mem = [v.mem_demand for v in vms]
        self.flows = [(pos[f.a], pos[f.b], f.rate) for f in workload.flows]
        self.adj: list[list[tuple[int, int]]] = [[] for _ in vms]
        for a, b, r in self.flows:
            self.adj[a].append((b, r))
            self.adj[b].append((a, r))

        # Connected components of the flow graph, for activation floors.
        parent = list(range(len(vms)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for a, b, _ in self.flows:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        comp_cpu: dict[int, int] = {}
        comp_mem: dict[int, int] = {}
        for i in range(len(vms)):
            root = find(i)
            comp_cpu[root] = comp_cpu.get(root, 0) + self.cpu[i]
            comp_mem[root] = comp_mem.get(root, 0) + self.mem[i]
        self.max_component_cpu = max(comp_cpu.values(), default=0)
        self.max_component_mem = max(comp_mem.values(), default=0)

        # Per server pair: (subgroup medium, multiplicity) crossings and the
        # groups whose special server the flow transits.
        link_mult = [[() for _ in range(S)] for _ in range(S)]
        transits = [[() for _ in range(S)] for _ in range(S)]
        for s in range(S):
            for t in range(S):
                if s == t:
                    continue
                ls, lt = self.sub_of[s], self.sub_of[t]
                gs, gt = self.group_of[s], self.group_of[t]
                if ls == lt:
                    link_mult[s][t] = ((ls, 2),)
                elif gs == gt:
                    link_mult[s][t] = ((ls, 1), (lt, 1))
                    transits[s][t] = (gs,)
                else:
                    link_mult[s][t] = ((ls, 1), (lt, 1))
                    transits[s][t] = (gs, gt)
        self.link_mult = link_mult
        self.transits = transits


def _empty_report(topology, workload, params, method, nodes, start):
    embedding = Embedding({})
    breakdown = total_power(topology, workload, embedding, params)
    return SolveReport(
        embedding=embedding,
        power=breakdown,
        optimal=True,
        nodes_explored=nodes,
        elapsed=time.perf_counter() - start,
        method=method,
    )


def _branch_and_bound(
    topology: Topology,
    workload: Workload,
    params: PowerParams,
    limits: SolveLimits,
    collect_pruned: bool = False,
    initial_incumbent: float = math.inf,
) -> tuple[SolveReport, list[PrunedNode]]:
    start = time.perf_counter()
    n = len(workload.vms)
    if n == 0:
        return _empty_report(topology, workload, params, METHOD_BRANCH_AND_BOUND, 0, start), []

    inst = _Instance(topology, workload)
    c = topology.config
    S = inst.n_servers
    L = inst.n_subs
    G = inst.n_groups
    cpu, mem, adj = inst.cpu, inst.mem, inst.adj
    sub_of = inst.sub_of
    group_of = inst.group_of
    link_mult = inst.link_mult
    transits = inst.transits

    cpu_cap = c.server_cpu_capacity
    mem_cap = c.server_mem_capacity
    link_cap = c.link_capacity
    onu_rate = c.onu_rate
    ff = c.forwarding_fraction
    p_idle = params.p_idle
    span = params.p_max - params.p_idle
    onu_w = params.onu_power
    slope = span / cpu_cap
    fixed_onu = params.onu_mode is OnuMode.FIXED_WHEN_ACTIVE
    onu_per_traffic = onu_w / onu_rate

    order = sorted(range(n), key=lambda i: (-cpu[i], i))
    marg = [0.0] * (n + 1)
    cpu_suf = [0] * (n + 1)
    mem_suf = [0] * (n + 1)
    for d in range(n - 1, -1, -1):
        v = order[d]
        marg[d] = marg[d + 1] + slope * cpu[v]
        cpu_suf[d] = cpu_suf[d + 1] + cpu[v]
        mem_suf[d] = mem_suf[d + 1] + mem[v]
    order_cpu = [cpu[v] for v in order]  # non-increasing by construction
    # Every extra activated server costs at least idle power (plus its ONU
    # when ONUs bill a fixed amount per active node).
    act_unit = p_idle + (onu_w if fixed_onu else 0.0)
    # A flow-graph component too big for one subgroup (or one group) must
    # split, and a split component has a crossing flow, so one (or both
    # groups') special servers are active in every completion.  An active
    # special forwards at least one flow.
    special_unit = p_idle + span * ff + (onu_w if fixed_onu else 0.0)
    subgroup_cap_cpu = inst.per_sub * cpu_cap
    subgroup_cap_mem = inst.per_sub * mem_cap
    group_cap_cpu = c.subgroups_per_group * subgroup_cap_cpu
    group_cap_mem = c.subgroups_per_group * subgroup_cap_mem
    special_floor = 0
    if G >= 2 and (
        inst.max_component_cpu > group_cap_cpu or inst.max_component_mem > group_cap_mem
    ):
        special_floor = 2
    elif L >= 2 and (
        inst.max_component_cpu > subgroup_cap_cpu
        or inst.max_component_mem > subgroup_cap_mem
    ):
        special_floor = 1

    load_c = [0] * S
    load_m = [0] * S
    cnt = [0] * S
    link = [0] * L
    sc = [0] * G
    st = [0] * G
    net = [0] * S
    sub_base = [li * inst.per_sub for li in range(L)]
    sub_active = [0] * L
    sg_per_group = c.subgroups_per_group
    grp_subactive = [0] * G  # subgroups with at least one active server
    host = [-1] * n
    free_c = 0
    free_m = 0
    n_active = 0
    n_active_spec = 0
    n_active_groups = 0

    best_power = initial_incumbent
    best_vec = None
    nodes = 0
    deadline = start + limits.time_limit if limits.time_limit else None
    node_limit = limits.node_limit
    prune_log: list[PrunedNode] = []

    def canonical_vec() -> tuple:
        # Relabel groups, subgroups within groups, and servers within
        # subgroups by first use in VM id order; the result is the
        # lexicographically smallest member of the assignment's relabeling
        # class, and relabeling leaves power untouched.
        group_map: dict[int, int] = {}
        sub_map: dict[int, int] = {}
        server_map: dict[int, int] = {}
        groups_used = 0
        subs_used = [0] * G
        servers_used = [0] * L
        out = []
        for i in range(n):
            s = host[i]
            m = server_map.get(s)
            if m is None:
                g = group_of[s]
                mg = group_map.get(g)
                if mg is None:
                    mg = groups_used
                    groups_used += 1
                    group_map[g] = mg
                li = sub_of[s]
                ml = sub_map.get(li)
                if ml is None:
                    ml = mg * sg_per_group + subs_used[mg]
                    subs_used[mg] += 1
                    sub_map[li] = ml
                m = ml * inst.per_sub + servers_used[ml]
                servers_used[ml] += 1
                server_map[s] = m
            out.append(m)
        return tuple(out)

    def dfs(d: int, accrued: float) -> None:
        nonlocal nodes, best_power, best_vec, free_c, free_m
        nonlocal n_active, n_active_spec, n_active_groups
        if d == n:
            breakdown = breakdown_from_loads(
                topology, params, load_c, [x > 0 for x in cnt], sc, st, net
            )
            pw = breakdown.total_w
            if pw < best_power:
                best_power = pw
                best_vec = canonical_vec()
            elif pw == best_power:
                vec = canonical_vec()
                if best_vec is None or vec < best_vec:
                    best_vec = vec
            return
        v = order[d]
        cv = cpu[v]
        mv = mem[v]
        adjv = adj[v]
        for s in range(S):
            if cnt[s] == 0:
                # Fresh nodes open in index order at every level: first
                # unused server of its subgroup, first idle subgroup of its
                # group, first idle group of the fabric.
                li = sub_of[s]
                if s != sub_base[li] + sub_active[li]:
                    continue
                if sub_active[li] == 0:
                    g = group_of[s]
                    if li != g * sg_per_group + grp_subactive[g]:
                        continue
                    if grp_subactive[g] == 0 and g != n_active_groups:
                        continue
            nlc = load_c[s] + cv
            if nlc > cpu_cap:
                continue
            nlm = load_m[s] + mv
            if nlm > mem_cap:
                continue
            dlink: dict[int, int] = {}
            dcnt: dict[int, int] = {}
            dtr: dict[int, int] = {}
            remote = []
            dnet = 0
            lm_s = link_mult[s]
            tr_s = transits[s]
            for peer, rate in adjv:
                h = host[peer]
                if h < 0 or h == s:
                    continue
                remote.append((h, rate))
                dnet += rate
                for li, m in lm_s[h]:
                    dlink[li] = dlink.get(li, 0) + m * rate
                for g in tr_s[h]:
                    dcnt[g] = dcnt.get(g, 0) + 1
                    dtr[g] = dtr.get(g, 0) + rate
            ok = True
            for li, add in dlink.items():
                if link[li] + add > link_cap:
                    ok = False
                    break
            if ok:
                for g, addc in dcnt.items():
                    if ff * (sc[g] + addc) > 1.0 + UTILIZATION_TOL or st[g] + dtr[g] > onu_rate:
                        ok = False
                        break
            if not ok:
                continue

            nodes += 1
            if node_limit is not None and nodes > node_limit:
                raise _LimitHit
            if deadline is not None and (nodes & 255) == 0 and time.perf_counter() > deadline:
                raise _LimitHit

            newly = cnt[s] == 0
            delta = slope * cv
            if newly:
                delta += p_idle + (onu_w if fixed_onu else 0.0)
            new_specials = 0
            for g, addc in dcnt.items():
                delta += span * ff * addc
                if sc[g] == 0:
                    delta += p_idle + (onu_w if fixed_onu else 0.0)
                    new_specials += 1
            if not fixed_onu:
                delta += onu_per_traffic * (2 * dnet + sum(dtr.values()))

            fc = free_c + (cpu_cap if newly else 0) - cv
            fm = free_m + (mem_cap if newly else 0) - mv
            k_extra = 0
            need_c = cpu_suf[d + 1] - fc
            if need_c > 0:
                k_extra = -(-need_c // cpu_cap)
            need_m = mem_suf[d + 1] - fm
            if need_m > 0:
                k_extra = max(k_extra, -(-need_m // mem_cap))
            # Remaining VMs larger than every active server's slack can only
            # land on fresh servers; active slack never grows, so this is a
            # valid activation floor even before deciding where they go.
            if d + 1 < n:
                max_slack = cpu_cap - nlc
                for t in range(S):
                    if cnt[t] > 0 and t != s:
                        slack = cpu_cap - load_c[t]
                        if slack > max_slack:
                            max_slack = slack
                lo, hi = d + 1, n
                while lo < hi:  # first position with cpu <= max_slack
                    mid = (lo + hi) // 2
                    if order_cpu[mid] > max_slack:
                        lo = mid + 1
                    else:
                        hi = mid
                big_cpu = cpu_suf[d + 1] - cpu_suf[lo]
                if big_cpu > 0:
                    k_extra = max(k_extra, -(-big_cpu // cpu_cap))
            if k_extra > S - n_active - (1 if newly else 0):
                continue  # remaining demand cannot fit, no completion exists
            child = accrued + delta
            bound = child + marg[d + 1] + k_extra * act_unit
            missing_specials = special_floor - n_active_spec - new_specials
            if missing_specials > 0:
                bound += missing_specials * special_unit
            if bound > best_power + PRUNE_EPS:
                if (
                    collect_pruned
                    and n - d - 1 <= _AUDIT_MAX_REMAINING
                    and len(prune_log) < _AUDIT_LOG_CAP
                ):
                    snap = list(host)
                    snap[v] = s
                    prune_log.append(PrunedNode(tuple(snap), d + 1, bound))
                continue

            load_c[s] = nlc
            load_m[s] = nlm
            cnt[s] += 1
            host[v] = s
            free_c = fc
            free_m = fm
            n_active_spec += new_specials
            if newly:
                li = sub_of[s]
                sub_active[li] += 1
                if sub_active[li] == 1:
                    grp_subactive[group_of[s]] += 1
                    if grp_subactive[group_of[s]] == 1:
                        n_active_groups += 1
                n_active += 1
            for li, add in dlink.items():
                link[li] += add
            for g, addc in dcnt.items():
                sc[g] += addc
                st[g] += dtr[g]
            net[s] += dnet
            for h, rate in remote:
                net[h] += rate

            dfs(d + 1, child)

            load_c[s] -= cv
            load_m[s] -= mv
            cnt[s] -= 1
            host[v] = -1
            free_c += cv
            free_m += mv
            n_active_spec -= new_specials
            if newly:
                li = sub_of[s]
                sub_active[li] -= 1
                if sub_active[li] == 0:
                    grp_subactive[group_of[s]] -= 1
                    if grp_subactive[group_of[s]] == 0:
                        n_active_groups -= 1
                n_active -= 1
                free_c -= cpu_cap
                free_m -= mem_cap
            for li, add in dlink.items():
                link[li] -= add
            for g, addc in dcnt.items():
                sc[g] -= addc
                st[g] -= dtr[g]
            net[s] -= dnet
            for h, rate in remote:
                net[h] -= rate

    limit_hit = False
    try:
        dfs(0, 0.0)
    except _LimitHit:
        limit_hit = True
    elapsed = time.perf_counter() - start

    if best_vec is None:
        if limit_hit:
            raise LimitExceeded(
                f"limit hit after {nodes} nodes with no feasible embedding found"
            )
        raise Infeasible("no feasible embedding satisfies constraints C1-C5")

    embedding = Embedding(
        {inst.vm_ids[i]: topology.servers[best_vec[i]] for i in range(n)}
    )
    breakdown = total_power(topology, workload, embedding, params)
    report = SolveReport(
        embedding=embedding,
        power=breakdown,
        optimal=not limit_hit,
        nodes_explored=nodes,
        elapsed=elapsed,
        method=METHOD_BRANCH_AND_BOUND,
    )
    return report, prune_log


def solve_optimal(
    topology: Topology,
    workload: Workload,
    params: PowerParams | None = None,
    limits: SolveLimits | None = None,
) -> SolveReport:
    """Power-minimal feasible embedding by branch and bound.

    Returns a proven optimum (``optimal=True``) unless a limit interrupts
    the search, in which case the best incumbent is returned with
    ``optimal=False``.  Raises :class:`Infeasible` when the exhausted search
    proves no embedding fits, and :class:`LimitExceeded` when a limit hits
    before any feasible embedding was found.
    """
    params = params or PowerParams()
    params.validate()
    limits = limits or SolveLimits()
    limits.validate()
    validate_workload(workload, check_bounds=False)
    report, _ = _branch_and_bound(topology, workload, params, limits)
    return report


def _min_completion(
    topology: Topology,
    workload: Workload,
    params: PowerParams,
    host_prefix: tuple,
) -> float | None:
    """Exhaustive minimum over all completions of a partial assignment.

    Mirrors the solver's canonical candidate rule but never prunes by
    bound; used to audit that recorded bounds were admissible.  Returns
    None when the subtree holds no feasible completion.
    """
    inst = _Instance(topology, workload)
    c = topology.config
    S = inst.n_servers
    n = len(inst.cpu)
    order = sorted(range(n), key=lambda i: (-inst.cpu[i], i))

    load_c = [0] * S
    load_m = [0] * S
    cnt = [0] * S
    link = [0] * inst.n_subs
    sc = [0] * inst.n_groups
    st = [0] * inst.n_groups
    net = [0] * S
    sub_active = [0] * inst.n_subs
    sub_base = [li * inst.per_sub for li in range(inst.n_subs)]
    sg_per_group = c.subgroups_per_group
    grp_subactive = [0] * inst.n_groups
    active_groups = [0]
    host = [-1] * n

    def allowed(s: int) -> bool:
        if cnt[s] > 0:
            return True
        li = inst.sub_of[s]
        if s != sub_base[li] + sub_active[li]:
            return False
        if sub_active[li] == 0:
            g = inst.group_of[s]
            if li != g * sg_per_group + grp_subactive[g]:
                return False
            if grp_subactive[g] == 0 and g != active_groups[0]:
                return False
        return True

    def place(v: int, s: int) -> bool:
        if load_c[s] + inst.cpu[v] > c.server_cpu_capacity:
            return False
        if load_m[s] + inst.mem[v] > c.server_mem_capacity:
            return False
        for peer, rate in inst.adj[v]:
            h = host[peer]
            if h < 0 or h == s:
                continue
            for li, m in inst.link_mult[s][h]:
                link[li] += m * rate
            for g in inst.transits[s][h]:
                sc[g] += 1
                st[g] += rate
            net[s] += rate
            net[h] += rate
        if cnt[s] == 0:
            li = inst.sub_of[s]
            sub_active[li] += 1
            if sub_active[li] == 1:
                grp_subactive[inst.group_of[s]] += 1
                if grp_subactive[inst.group_of[s]] == 1:
                    active_groups[0] += 1
        load_c[s] += inst.cpu[v]
        load_m[s] += inst.mem[v]
        cnt[s] += 1
        return True

    def unplace(v: int, s: int) -> None:
        load_c[s] -= inst.cpu[v]
        load_m[s] -= inst.mem[v]
        cnt[s] -= 1
        if cnt[s] == 0:
            li = inst.sub_of[s]
            sub_active[li] -= 1
            if sub_active[li] == 0:
                grp_subactive[inst.group_of[s]] -= 1
                if grp_subactive[inst.group_of[s]] == 0:
                    active_groups[0] -= 1
        for peer, rate in inst.adj[v]:
            h = host[peer]
            if h < 0 or h == s:
                continue
            for li, m in inst.link_mult[s][h]:
                link[li] -= m * rate
            for g in inst.transits[s][h]:
                sc[g] -= 1
                st[g] -= rate
            net[s] -= rate
            net[h] -= rate

    def feasible_now() -> bool:
        if any(link[li] > c.link_capacity for li in range(inst.n_subs)):
            return False
        for g in range(inst.n_groups):
            if c.forwarding_fraction * sc[g] > 1.0 + UTILIZATION_TOL:
                return False
            if st[g] > c.onu_rate:
                return False
        return True

    # Replay the assigned prefix one VM at a time so each flow is counted
    # exactly once, when its second endpoint lands.
    depth = n
    for d in range(n):
        v = order[d]
        if host_prefix[v] < 0:
            depth = d
            break
        s = host_prefix[v]
        if not place(v, s):
            return None
        host[v] = s
        if not feasible_now():
            return None

    best = [math.inf]

    def walk(d: int) -> None:
        if d == n:
            breakdown = breakdown_from_loads(
                topology, params, load_c, [x > 0 for x in cnt], sc, st, net
            )
            best[0] = min(best[0], breakdown.total_w)
            return
        v = order[d]
        for s in range(S):
            if not allowed(s):
                continue
            if not place(v, s):
                continue
            host[v] = s
            if feasible_now():
                walk(d + 1)
            host[v] = -1
            unplace(v, s)

    walk(depth)
    return None if math.isinf(best[0]) else best[0]


def audit_bound_soundness(
    topology: Topology,
    workload: Workload,
    params: PowerParams | None = None,
    max_samples: int = 32,
) -> list[tuple[float, float | None]]:
    """Re-expand a sample of pruned subtrees and pair each recorded bound
    with the subtree's true minimum (None when it has no feasible
    completion).  A sound bound never exceeds the true minimum."""
    params = params or PowerParams()
    params.validate()
    _, log = _branch_and_bound(topology, workload, params, SolveLimits(), collect_pruned=True)
    if not log:
        return []
    step = max(1, len(log) // max_samples)
    samples = log[::step][:max_samples]
    results = []
    for node in samples:
        true_min = _min_completion(topology, workload, params, node.host)
        results.append((node.bound, true_min))
    return results


def brute_force_optimal(
    topology: Topology,
    workload: Workload,
    params: PowerParams | None = None,
    guard: int = BRUTE_FORCE_GUARD,
) -> SolveReport:
    """Exhaustive enumeration of every assignment, the independent oracle.

    Enumerates in lexicographic order (VMs by id, servers by canonical
    address order), filters by C1-C5, and returns the exact minimum with
    the same tie-break as the search solver.  Raises :class:`TooLarge`
    above the guard and :class:`Infeasible` when nothing passes.
    """
    params = params or PowerParams()
    params.validate()
    validate_workload(workload, check_bounds=False)
    start = time.perf_counter()
    n = len(workload.vms)
    S = topology.num_servers
    total = S**n
    if total > guard:
        raise TooLarge(f"{S}^{n} = {total} assignments exceed the guard of {guard}")

    inst = _Instance(topology, workload)
    c = topology.config
    L = inst.n_subs
    G = inst.n_groups
    fixed_onu = params.onu_mode is OnuMode.FIXED_WHEN_ACTIVE

    link_table = np.zeros((S, S, L), dtype=np.int16)
    transit_table = np.zeros((S, S, G), dtype=bool)
    for s in range(S):
        for t in range(S):
            for li, m in inst.link_mult[s][t]:
                link_table[s, t, li] = m
            for g in inst.transits[s][t]:
                transit_table[s, t, g] = True

    cpu = np.array(inst.cpu, dtype=np.int64)
    mem = np.array(inst.mem, dtype=np.int64)
    divisors = np.array([S ** (n - 1 - i) for i in range(n)], dtype=np.int64)
    server_range = np.arange(S, dtype=np.int64)

    window = PRUNE_EPS
    running_min = np.inf
    exact_best: tuple[float, int, Embedding, PowerBreakdown] | None = None
    stash: list[tuple[int, np.ndarray, float]] = []

    def evaluate(entries):
        nonlocal exact_best
        for index, vec, _val in sorted(entries, key=lambda e: e[0]):
            if exact_best is not None and _val > exact_best[0] + window:
                continue
            embedding = Embedding(
                {inst.vm_ids[i]: topology.servers[int(vec[i])] for i in range(n)}
            )
            breakdown = total_power(topology, workload, embedding, params)
            if exact_best is None or breakdown.total_w < exact_best[0]:
                exact_best = (breakdown.total_w, index, embedding, breakdown)

    for chunk_start in range(0, total, _CHUNK):
        chunk_stop = min(chunk_start + _CHUNK, total)
        idx = np.arange(chunk_start, chunk_stop, dtype=np.int64)
        assign = (idx[:, None] // divisors[None, :]) % S if n else np.zeros((len(idx), 0), dtype=np.int64)
        onehot = assign[:, :, None] == server_range[None, None, :]
        cpu_load = (onehot * cpu[None, :, None]).sum(axis=1)
        mem_load = (onehot * mem[None, :, None]).sum(axis=1)
        vm_count = onehot.sum(axis=1)

        feasible = (cpu_load <= c.server_cpu_capacity).all(axis=1)
        feasible &= (mem_load <= c.server_mem_capacity).all(axis=1)

        rows = len(idx)
        link_load = np.zeros((rows, L), dtype=np.int64)
        spec_count = np.zeros((rows, G), dtype=np.int64)
        spec_traffic = np.zeros((rows, G), dtype=np.int64)
        net = np.zeros((rows, S), dtype=np.int64) if not fixed_onu else None
        for a, b, rate in inst.flows:
            sa = assign[:, a]
            sb = assign[:, b]
            link_load += rate * link_table[sa, sb, :]
            transit = transit_table[sa, sb, :]
            spec_count += transit
            spec_traffic += rate * transit
            if net is not None:
                distinct = np.nonzero(sa != sb)[0]
                np.add.at(net, (distinct, sa[distinct]), rate)
                np.add.at(net, (distinct, sb[distinct]), rate)
        feasible &= (link_load <= c.link_capacity).all(axis=1)
        feasible &= (c.forwarding_fraction * spec_count <= 1.0 + UTILIZATION_TOL).all(axis=1)
        feasible &= (spec_traffic <= c.onu_rate).all(axis=1)
        if not feasible.any():
            continue

        active = vm_count > 0
        span = params.p_max - params.p_idle
        servers_w = np.where(
            active,
            params.p_idle + span * (cpu_load / c.server_cpu_capacity),
            0.0,
        ).sum(axis=1)
        specials_w = np.where(
            spec_count > 0,
            params.p_idle + span * (c.forwarding_fraction * spec_count),
            0.0,
        ).sum(axis=1)
        if fixed_onu:
            onus_w = params.onu_power * (active.sum(axis=1) + (spec_count > 0).sum(axis=1))
        else:
            onus_w = (params.onu_power / c.onu_rate) * (
                np.where(active, net, 0).sum(axis=1) + spec_traffic.sum(axis=1)
            )
        values = np.where(feasible, servers_w + specials_w + onus_w, np.inf)

        chunk_min = float(values.min())
        running_min = min(running_min, chunk_min)
        threshold = running_min + window
        if exact_best is not None:
            threshold = min(threshold, exact_best[0] + window)
        candidates = np.nonzero(values <= threshold)[0]
        for row in candidates:
            stash.append((int(idx[row]), assign[row].copy(), float(values[row])))
        if len(stash) > 20_000:
            evaluate(stash)
            stash = []

    evaluate(stash)
    elapsed = time.perf_counter() - start
    if exact_best is None:
        raise Infeasible("no assignment satisfies constraints C1-C5")
    return SolveReport(
        embedding=exact_best[2],
        power=exact_best[3],
        optimal=True,
        nodes_explored=total,
        elapsed=elapsed,
        method=METHOD_BRUTE_FORCE,
    )


# --- integer program export -------------------------------------------------

def _fmt(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _render_terms(terms: list[tuple[float, str]]) -> list[str]:
    """Pieces like '203.5 y_s0_0_0', '+ 5 f_p0a_1b_g0', '- 2 w_...'."""
    parts = []
    for pos, (coef, name) in enumerate(terms):
        if pos == 0:
            sign = "-" if coef < 0 else ""
            parts.append(f"{sign}{_fmt(abs(coef))} {name}")
        else:
            sign = "-" if coef < 0 else "+"
            parts.append(f"{sign} {_fmt(abs(coef))} {name}")
    return parts


def _wrap(pieces: list[str], prefix: str, per_line: int = 8) -> list[str]:
    lines = []
    for i in range(0, len(pieces), per_line):
        chunk = " ".join(pieces[i : i + per_line])
        lines.append(f"{prefix}{chunk}" if i == 0 else f"   {chunk}")
    return lines or [prefix.rstrip()]


def _x_name(vm_id: int, server: ServerAddress) -> str:
    return f"x_v{vm_id}_{server.label}"


def _f_name(a: int, b: int, group: int) -> str:
    return f"f_p{a}a_{b}b_g{group}"


def _w_name(a: int, b: int, server: ServerAddress) -> str:
    return f"w_p{a}a_{b}b_{server.label}"


def export_lp(
    topology: Topology,
    workload: Workload,
    params: PowerParams | None = None,
) -> str:
    """Standard LP-format text of the embedding integer program.

    Binaries: x_v<id>_s<g>_<sg>_<i> (VM on server), y_s<g>_<sg>_<i> (server
    activated), z_g<g> (special server activated), f_p<a>a_<b>b_g<g> (flow
    transits a group's special server) and w_p<a>a_<b>b_s<g>_<sg>_<i> (flow
    colocated on a server; used to account shared-medium load and, in
    traffic-proportional mode, ONU traffic, exactly).  Transit indicators
    are linked to x through per-server-pair constraints, so no big-M terms
    appear anywhere.
    """
    params = params or PowerParams()
    params.validate()
    validate_workload(workload, check_bounds=False)
    c = topology.config
    fixed_onu = params.onu_mode is OnuMode.FIXED_WHEN_ACTIVE
    span = params.p_max - params.p_idle
    slope = span / c.server_cpu_capacity
    onu_per_traffic = params.onu_power / c.onu_rate
    vms = sorted(workload.vms, key=lambda v: v.id)
    flows = list(workload.flows)
    servers = topology.servers
    groups = range(c.num_groups)
    inst = _Instance(topology, workload)

    node_unit = params.onu_power if fixed_onu else 0.0
    objective: dict[str, float] = {}
    var_order: list[str] = []

    def add_obj(name: str, coef: float) -> None:
        if name not in objective:
            objective[name] = 0.0
            var_order.append(name)
        objective[name] += coef

    for srv in servers:
        add_obj(f"y_{srv.label}", params.p_idle + node_unit)
    for g in groups:
        add_obj(f"z_g{g}", params.p_idle + node_unit)
    for vm in vms:
        for srv in servers:
            add_obj(_x_name(vm.id, srv), slope * vm.cpu_demand)
    for flow in flows:
        for g in groups:
            coef = span * c.forwarding_fraction
            if not fixed_onu:
                coef += onu_per_traffic * flow.rate
            add_obj(_f_name(flow.a, flow.b, g), coef)
    if not fixed_onu:
        for flow in flows:
            for srv in servers:
                add_obj(_x_name(flow.a, srv), onu_per_traffic * flow.rate)
                add_obj(_x_name(flow.b, srv), onu_per_traffic * flow.rate)
                add_obj(_w_name(flow.a, flow.b, srv), -2.0 * onu_per_traffic * flow.rate)

    constraints: list[tuple[str, list[tuple[float, str]], str, float]] = []

    for vm in vms:
        constraints.append(
            (f"assign_v{vm.id}", [(1.0, _x_name(vm.id, s)) for s in servers], "=", 1.0)
        )
    for srv in servers:
        constraints.append(
            (
                f"cpu_{srv.label}",
                [(float(vm.cpu_demand), _x_name(vm.id, srv)) for vm in vms],
                "<=",
                float(c.server_cpu_capacity),
            )
        )
        constraints.append(
            (
                f"mem_{srv.label}",
                [(float(vm.mem_demand), _x_name(vm.id, srv)) for vm in vms],
                "<=",
                float(c.server_mem_capacity),
            )
        )
    for vm in vms:
        for srv in servers:
            constraints.append(
                (
                    f"act_v{vm.id}_{srv.label}",
                    [(1.0, _x_name(vm.id, srv)), (-1.0, f"y_{srv.label}")],
                    "<=",
                    0.0,
                )
            )

    pos_to_server = list(servers)
    for flow in flows:
        fname_base = f"p{flow.a}a_{flow.b}b"
        for g in groups:
            fname = _f_name(flow.a, flow.b, g)
            seq = 0
            for s_i in range(len(servers)):
                for t_i in range(len(servers)):
                    if s_i == t_i or g not in inst.transits[s_i][t_i]:
                        continue
                    constraints.append(
                        (
                            f"trans_{fname_base}_g{g}_{seq}",
                            [
                                (1.0, _x_name(flow.a, pos_to_server[s_i])),
                                (1.0, _x_name(flow.b, pos_to_server[t_i])),
                                (-1.0, fname),
                            ],
                            "<=",
                            1.0,
                        )
                    )
                    seq += 1
            constraints.append(
                (f"zlink_{fname_base}_g{g}", [(1.0, fname), (-1.0, f"z_g{g}")], "<=", 0.0)
            )
        for srv in servers:
            wname = _w_name(flow.a, flow.b, srv)
            constraints.append(
                (
                    f"wloA_{fname_base}_{srv.label}",
                    [(1.0, wname), (-1.0, _x_name(flow.a, srv))],
                    "<=",
                    0.0,
                )
            )
            constraints.append(
                (
                    f"wloB_{fname_base}_{srv.label}",
                    [(1.0, wname), (-1.0, _x_name(flow.b, srv))],
                    "<=",
                    0.0,
                )
            )
            constraints.append(
                (
                    f"wup_{fname_base}_{srv.label}",
                    [
                        (1.0, _x_name(flow.a, srv)),
                        (1.0, _x_name(flow.b, srv)),
                        (-1.0, wname),
                    ],
                    "<=",
                    1.0,
                )
            )

    for sub in topology.subgroups:
        coefs: dict[str, float] = {}
        names: list[str] = []

        def link_add(name: str, coef: float) -> None:
            if name not in coefs:
                coefs[name] = 0.0
                names.append(name)
            coefs[name] += coef

        members = [s for s in servers if s.group == sub.group and s.subgroup == sub.subgroup]
        for flow in flows:
            for srv in members:
                link_add(_x_name(flow.a, srv), float(flow.rate))
                link_add(_x_name(flow.b, srv), float(flow.rate))
                link_add(_w_name(flow.a, flow.b, srv), -2.0 * flow.rate)
        if names:
            constraints.append(
                (
                    f"link_{sub.label}",
                    [(coefs[name], name) for name in names],
                    "<=",
                    float(c.link_capacity),
                )
            )

    for g in groups:
        fwd_terms = [
            (c.forwarding_fraction, _f_name(flow.a, flow.b, g)) for flow in flows
        ]
        if fwd_terms:
            constraints.append((f"fwd_g{g}", fwd_terms, "<=", 1.0))
        rate_terms = [(float(flow.rate), _f_name(flow.a, flow.b, g)) for flow in flows]
        if rate_terms:
            constraints.append((f"onurate_g{g}", rate_terms, "<=", float(c.onu_rate)))

    lines = ["\\ embedding integer program", "Minimize"]
    obj_terms = [(objective[name], name) for name in var_order if objective[name] != 0.0]
    lines.extend(_wrap(_render_terms(obj_terms), " obj: "))
    lines.append("Subject To")
    for name, terms, sense, rhs in constraints:
        pieces = _render_terms(terms)
        pieces.append(f"{sense} {_fmt(rhs)}")
        lines.extend(_wrap(pieces, f" {name}: "))
    lines.append("Binaries")
    binaries: list[str] = []
    for vm in vms:
        binaries.extend(_x_name(vm.id, s) for s in servers)
    binaries.extend(f"y_{s.label}" for s in servers)
    binaries.extend(f"z_g{g}" for g in groups)
    for flow in flows:
        binaries.extend(_f_name(flow.a, flow.b, g) for g in groups)
    for flow in flows:
        binaries.extend(_w_name(flow.a, flow.b, s) for s in servers)
    for i in range(0, len(binaries), 6):
        lines.append(" " + " ".join(binaries[i : i + 6]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def lp_variable_values(
    topology: Topology,
    workload: Workload,
    embedding: Embedding,
) -> dict[str, int]:
    """Complete 0/1 valuation of the exported program for an embedding."""
    from .topology import classify_path

    values: dict[str, int] = {}
    vms = sorted(workload.vms, key=lambda v: v.id)
    hosts = {}
    for vm in vms:
        addr = embedding[vm.id]
        hosts[vm.id] = addr
        for srv in topology.servers:
            values[_x_name(vm.id, srv)] = int(srv == addr)
    used = set(hosts.values())
    for srv in topology.servers:
        values[f"y_{srv.label}"] = int(srv in used)
    transiting: dict[int, int] = {g: 0 for g in range(topology.config.num_groups)}
    for flow in workload.flows:
        route = classify_path(topology, hosts[flow.a], hosts[flow.b])
        groups_hit = {ss.group for ss in route.special_servers}
        for g in range(topology.config.num_groups):
            hit = int(g in groups_hit)
            values[_f_name(flow.a, flow.b, g)] = hit
            transiting[g] += hit
        for srv in topology.servers:
            values[_w_name(flow.a, flow.b, srv)] = int(
                hosts[flow.a] == srv and hosts[flow.b] == srv
            )
    for g in range(topology.config.num_groups):
        values[f"z_g{g}"] = int(transiting[g] > 0)
    return values


def embedding_from_lp_values(
    topology: Topology,
    workload: Workload,
    values: Mapping[str, float],
) -> Embedding:
    """Map an external solver's x-variable solution back to an embedding."""
    assignment: dict[int, ServerAddress] = {}
    for vm in workload.vms:
        chosen = [s for s in topology.servers if values.get(_x_name(vm.id, s), 0.0) > 0.5]
        if len(chosen) != 1:
            raise ValidationError(
                f"VM {vm.id} has {len(chosen)} selected servers in the LP solution"
            )
        assignment[vm.id] = chosen[0]
    return Embedding(assignment)
