"""summachine: analyze systems of communicating FSMs without the product state space.

The package unfolds each machine of a rendezvous-synchronized system into a
finite tree carrying environment vectors, then answers global reachability,
deadlock, and branching-time queries on the linear-size "sum" of those trees.
A brute-force interleaving product is included as a cross-validation oracle.
"""

from .cdtl import GlobalForm, eval_global, eval_local, parse_global, product_formula, sat_nodes
from .formulas import FormulaError, parse_formula
from .generator import generate_system, independent_family, relay_family
from .kernels import KERNEL_BACKEND
from .product_oracle import (
    OracleTruncated,
    ProductMachine,
    build_product,
    check_bisimulation,
    deadlock_states,
    eval_ctl,
    product_reachable,
)
from .reachability import (
    Configuration,
    ReachQuery,
    Trace,
    Verdict,
    global_reachable,
    list_deadlocks,
    materialize_configuration,
)
from .relations import RelationIndex, RelationKind
from .serialize import sum_from_json, sum_to_json, system_from_dict, system_to_dict
from .spec_model import (
    ActionLabel,
    CfsmSpec,
    CfsmTransition,
    SpecError,
    SystemSpec,
    parse_system,
    pretty_print,
    validate_system,
)
from .unfolding import LimitExceeded, Limits, Node, SumMachine, Unfolding, unfold

__version__ = "0.1.0"

__all__ = [
    "ActionLabel",
    "CfsmSpec",
    "CfsmTransition",
    "Configuration",
    "FormulaError",
    "GlobalForm",
    "KERNEL_BACKEND",
    "LimitExceeded",
    "Limits",
    "Node",
    "OracleTruncated",
    "ProductMachine",
    "ReachQuery",
    "RelationIndex",
    "RelationKind",
    "SpecError",
    "SumMachine",
    "SystemSpec",
    "Trace",
    "Unfolding",
    "Verdict",
    "build_product",
    "check_bisimulation",
    "deadlock_states",
    "eval_ctl",
    "eval_global",
    "eval_local",
    "generate_system",
    "global_reachable",
    "independent_family",
    "list_deadlocks",
    "materialize_configuration",
    "parse_formula",
    "parse_global",
    "parse_system",
    "pretty_print",
    "product_formula",
    "product_reachable",
    "relay_family",
    "sat_nodes",
    "sum_from_json",
    "sum_to_json",
    "system_from_dict",
    "system_to_dict",
    "unfold",
    "validate_system",
    "__version__",
]
