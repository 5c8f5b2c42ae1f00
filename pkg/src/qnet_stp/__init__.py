"""Conference-key rates and spanning-tree packings for QKD networks.

A network of pairwise QKD links (a weighted graph of key rates) supports
a group key at exactly the spanning-tree packing rate: the minimum over
vertex partitions of cross-partition rate divided by block count minus
one.  This package computes that rate exactly, constructs packings that
achieve it, simulates the one-time-pad conferencing protocol on top, and
plans which links to add when a bottleneck caps the rate.
"""

from .errors import (
    InternalError,
    LimitError,
    QNetError,
    ValidationError,
)
from .netgraph import (
    Edge,
    Multigraph,
    SpanningTree,
    VertexPartition,
    WeightedGraph,
    contract,
    count_spanning_trees,
    enumerate_partitions,
    enumerate_spanning_trees,
    induced_subgraph,
    is_connected,
    is_spanning_tree,
    parse_graph,
)
from .rate_core import (
    BottleneckCertificate,
    RateReport,
    check_no_bottleneck,
    finest_bound,
    nwt_length,
    nwt_rate,
    partition_bound,
    triangle_rate,
)
from .lp_core import (
    CommunicationRates,
    LPInstance,
    LPSolution,
    build_lp,
    explicit_rates_no_bottleneck,
    rates_from_packing,
    solve_lp,
    solve_z,
    verify_constraints,
    verify_optimality,
)
from .packing import (
    PackingOutcome,
    TreePacking,
    basic_algorithm,
    brute_force_packing,
    general_algorithm,
    packing_rate,
    reweight_by_lp,
    validate_packing,
)
from .protocol import (
    AuditReport,
    KeyMaterial,
    ProtocolTranscript,
    SecurityBudget,
    announce,
    generate_keys,
    orient_tree,
    recover,
    run_packing_protocol,
    secrecy_audit,
    security_budget,
)
from .planner import (
    AugmentationResult,
    BottleneckReport,
    Plan,
    best_additions,
    bottleneck_report,
    evaluate_addition,
)

__version__ = "0.1.0"

__all__ = [
    "QNetError",
    "ValidationError",
    "LimitError",
    "InternalError",
    "Edge",
    "WeightedGraph",
    "VertexPartition",
    "SpanningTree",
    "Multigraph",
    "parse_graph",
    "is_connected",
    "contract",
    "induced_subgraph",
    "enumerate_partitions",
    "enumerate_spanning_trees",
    "count_spanning_trees",
    "is_spanning_tree",
    "RateReport",
    "BottleneckCertificate",
    "nwt_rate",
    "nwt_length",
    "partition_bound",
    "finest_bound",
    "check_no_bottleneck",
    "triangle_rate",
    "LPInstance",
    "LPSolution",
    "CommunicationRates",
    "build_lp",
    "solve_lp",
    "solve_z",
    "verify_optimality",
    "verify_constraints",
    "rates_from_packing",
    "explicit_rates_no_bottleneck",
    "TreePacking",
    "PackingOutcome",
    "validate_packing",
    "packing_rate",
    "brute_force_packing",
    "basic_algorithm",
    "general_algorithm",
    "reweight_by_lp",
    "KeyMaterial",
    "generate_keys",
    "orient_tree",
    "announce",
    "recover",
    "run_packing_protocol",
    "security_budget",
    "SecurityBudget",
    "secrecy_audit",
    "AuditReport",
    "ProtocolTranscript",
    "BottleneckReport",
    "AugmentationResult",
    "Plan",
    "bottleneck_report",
    "evaluate_addition",
    "best_additions",
    "__version__",
]
