"""Discrete belief-network inference: forward Monte Carlo samplers,
Markov-chain baselines, an exact oracle, and a benchmark harness."""

from ._jit import BACKEND, NUMBA_ENABLED
from .engine import SamplingRun, run_concatenated, run_sampler
from .exact import (
    MarginalTable,
    StateSpaceError,
    exact_posteriors,
    joint_probability,
)
from .fileformat import (
    FormatError,
    dump_evidence,
    dump_network,
    load_evidence,
    load_network,
)
from .harness import (
    Experiment,
    TrialReport,
    anytime_snapshot,
    instantiation_budget,
    prune_for_targets,
    run_experiment,
    trial_seed,
)
from .mcmc import ChainInitError, ChainState, chavez_run, init_chain_state, pearl_step
from .network import (
    BeliefNetwork,
    Cpt,
    CptError,
    CycleError,
    Evidence,
    EvidenceError,
    NetworkError,
    Variable,
    flatten,
    markov_blanket,
    relevant_nodes,
    subnetwork,
    topological_order,
)
from .samplers import (
    ALGORITHMS,
    DegenerateBlanketError,
    ImportanceDistribution,
    SampleScore,
    SamplerConfig,
    SupportConditionError,
    basic_step,
    heuristic_importance_build,
    heuristic_lambdas,
    importance_step,
    logic_sampling_step,
    markov_blanket_score,
    self_importance_update,
)
from .scoring import (
    PosteriorEstimate,
    ScoreTable,
    SignatureMismatchError,
    fertig_mann_error,
    merge,
    normalize,
    standard_error,
)

__version__ = "0.1.0"
