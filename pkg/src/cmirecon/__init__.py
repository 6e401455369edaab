"""Conditional mutual information, entropic distances, and recovery channels
for small multipartite quantum states."""

from .channels import (
    Channel,
    apply,
    compose,
    depolarizing,
    identity_channel,
    mix,
    random_channel,
    stinespring_to_channel,
    transpose_channel,
)
from .entropy import (
    EntropyReport,
    MeasuredReConfig,
    MeasuredReSolution,
    cmi,
    entropy_report,
    fidelity,
    measured_relative_entropy,
    relative_entropy,
    relative_entropy_continuity_bound,
    renyi_half,
    von_neumann,
)
from .markov import MarkovBlock, MarkovSpec, markov_gap, markov_state, random_markov_spec
from .recovery import (
    OptimizerResult,
    RecoveryConfig,
    measured_re_of_recovery,
    optimize_recovery,
    reconstruct,
)
from .states import (
    MultipartiteState,
    classical_example_state,
    classical_state,
    partial_trace,
    permute,
    purify,
    random_mixed,
    random_pure,
    rng_from_seed,
    sample_rng,
    tensor,
)

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "EntropyReport",
    "MarkovBlock",
    "MarkovSpec",
    "MeasuredReConfig",
    "MeasuredReSolution",
    "MultipartiteState",
    "OptimizerResult",
    "RecoveryConfig",
    "apply",
    "classical_example_state",
    "classical_state",
    "cmi",
    "compose",
    "depolarizing",
    "entropy_report",
    "fidelity",
    "identity_channel",
    "markov_gap",
    "markov_state",
    "measured_re_of_recovery",
    "measured_relative_entropy",
    "mix",
    "optimize_recovery",
    "partial_trace",
    "permute",
    "purify",
    "random_channel",
    "random_markov_spec",
    "random_mixed",
    "random_pure",
    "reconstruct",
    "relative_entropy",
    "relative_entropy_continuity_bound",
    "renyi_half",
    "rng_from_seed",
    "sample_rng",
    "stinespring_to_channel",
    "tensor",
    "transpose_channel",
    "von_neumann",
]
