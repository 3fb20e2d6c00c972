"""Best-arm identification through noisy command channels.

The learner's commands pass through a discrete memoryless channel before an
agent executes them. Zero-error codes built from independent sets of the
channel's confusability graph let the learner keep the noiseless sample
path exactly, paying only a predictable number of extra rounds.
"""

from .bandit import BanditInstance, PhasedSE, RewardPools, beta, clean_phased_se, derive_seed, elimination_time
from .channel import TransitionMatrix, channel_from_config, identity_channel, make_typewriter
from .codes import (
    PacketCodec,
    Schedule,
    ZeroErrorCode,
    c6_product_code,
    code_from_independent_set,
    overlap_schedule_c5,
    parity_schedule_c6,
    slope_code_c5,
)
from .graphs import (
    ConfusabilityGraph,
    confusability_graph,
    cycle_graph,
    independence_number,
    minimal_blocklength,
    strong_power,
)
from .harness import ExperimentSpec, run_sweep
from .protocols import (
    audit_trace,
    plan_family,
    run_case1_baseline,
    run_case2_scheme1,
    run_case2_scheme2,
    run_case3_pse,
    run_clean,
)

__version__ = "0.1.0"

__all__ = [
    "BanditInstance", "PhasedSE", "RewardPools", "beta", "clean_phased_se", "derive_seed", "elimination_time",
    "TransitionMatrix", "channel_from_config", "identity_channel", "make_typewriter",
    "PacketCodec", "Schedule", "ZeroErrorCode", "c6_product_code", "code_from_independent_set",
    "overlap_schedule_c5", "parity_schedule_c6", "slope_code_c5",
    "ConfusabilityGraph", "confusability_graph", "cycle_graph", "independence_number",
    "minimal_blocklength", "strong_power",
    "ExperimentSpec", "run_sweep",
    "audit_trace", "plan_family", "run_case1_baseline", "run_case2_scheme1", "run_case2_scheme2",
    "run_case3_pse", "run_clean",
]
