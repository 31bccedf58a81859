"""Power-minimal VM embedding for PON-fabric data centres."""

from .errors import (
    GaveUp,
    Infeasible,
    InvalidConfig,
    LimitExceeded,
    MixedSweep,
    OverCapacity,
    ParseError,
    PonPlaceError,
    TooLarge,
    UnknownNode,
    Unsatisfiable,
    ValidationError,
)
from .topology import (
    NodeAddress,
    PathClass,
    RouteDescriptor,
    ServerAddress,
    SpecialServerAddress,
    SubgroupAddress,
    Topology,
    TopologyConfig,
    build_topology,
    classify_path,
    parse_server_label,
)
from .workload import (
    Flow,
    GenerationParams,
    VmRequest,
    Workload,
    generate_workload,
    parse_workload,
    serialize_workload,
    validate_workload,
)
from .power import (
    Embedding,
    OnuMode,
    PowerBreakdown,
    PowerParams,
    UsageReport,
    Violation,
    check_feasibility,
    compute_usage,
    onu_power,
    server_power,
    special_server_power,
    total_power,
)
from .solver import (
    METHOD_BRANCH_AND_BOUND,
    METHOD_BRUTE_FORCE,
    SolveLimits,
    SolveReport,
    audit_bound_soundness,
    brute_force_optimal,
    embedding_from_lp_values,
    export_lp,
    lp_variable_values,
    solve_optimal,
)
from .baseline import (
    METHOD_RANDOM,
    METHOD_ROUND_ROBIN,
    random_feasible_embed,
    round_robin_embed,
)
from .sweep import (
    REFERENCE_SAVINGS_PCT,
    SummaryCell,
    SweepRow,
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
    sweep_topology,
)

__version__ = "0.1.0"
