"""protolab: exact simulation and information measures for multi-party
message-passing protocols."""

from .errors import (
    BudgetExceededError,
    ConfigError,
    DeadlockError,
    ModelViolationError,
    NonTerminationError,
    NotObliviousError,
    ProtoLabError,
    SelfDelimitingError,
)
from .info import (
    JointDistribution,
    apply_function,
    cond_entropy,
    entropy,
    mutual_info,
)
from .model import (
    Execution,
    ObliviousStructure,
    ProtocolDef,
    Round,
    View,
    WAIT_ANY,
    assign_lots,
    bitstrings,
    is_oblivious,
    run,
    run_all,
    run_relaxed,
)
from .measures import (
    InputDistribution,
    MeasureReport,
    acc,
    build_joint,
    cc,
    derandomize_zero_error,
    ic,
    measure_protocol,
    pic,
    pic_decomposition,
    privacy_leakage,
    privacy_terms,
    product_protocol,
    publicize,
    spy_info,
    sup_pic_grid,
    transcript_entropy,
)
from .compression import (
    LcpBox,
    TranscriptTree,
    build_tree,
    candidate_leaf,
    compress_run,
    compression_theorem_check,
    is_coherent,
    lcp_exact,
    lcp_randomized,
    obliviousize,
    truncation_mass,
)
from .treefile import load_protocol, protocol_from_dict
from .zoo import FunctionFamily, ZooEntry, get_entry, lift_entry

__version__ = "0.1.0"
