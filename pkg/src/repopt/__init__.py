"""Heuristic optimisation of near-deterministic entanglement distribution
schemes over quantum repeater chains, with exact fidelity, success
probability and generation-time evaluation for information-processing,
multiplexed and combined hardware platforms."""

from .chain import ChainConfig, ProtocolSet, uniform_chain
from .errors import (
    CapabilityError,
    ConfigError,
    DegenerateDistillationError,
    InfeasibleError,
    RepoptError,
    SizeGuardError,
    StructuralError,
    ValidationError,
)
from .keyrate import QberTriple, key_rate, qber, six_state_fraction
from .optimizer import (
    OptimizeResult,
    OptimizerConfig,
    SchemeStore,
    attempt_grid,
    brute_force,
    candidate_bound,
    distill_band_ok,
    optimize,
    swap_band_ok,
)
from .platform_ip import IP_PARAMETER_SETS, IpParams, double_click_epg, single_click_epg, transmissivity
from .platform_mp import (
    MP_PARAMETER_SETS,
    MpParams,
    boosted_bsm_prob,
    closed_form_p_succ,
    lossy_kraus,
    mp_epg,
    multiplexed_success,
    ns_for_fidelity,
    pdc_probs,
    required_modes,
)
from .scheme import ChainEvaluator, Protocol, Scheme, parse, serialize, to_dot
from .states import GateNoiseParams, bell_swap, dejmps, dephase, depolarize, fidelity, measure_noisy, werner
from .timing import (
    DecayRates,
    LinkTiming,
    attempt_duration,
    attempts_for,
    avg_decay_factor,
    mp_retrieval_prob,
    optimal_attempts_mp,
    success_after,
)

__version__ = "0.1.0"
