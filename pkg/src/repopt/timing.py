"""Closed-form repetition, storage-decay and timing formulas.

A protocol block with per-attempt success probability p is repeated for a
fixed number of attempts r.  The block delivers at the pre-specified time
r * t_attempt; the delivered state has waited r - j attempts, with j the
(truncated-geometric) round of first success.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleError, ValidationError

SPEED_OF_LIGHT_KM_S = 299792.458


@dataclass(frozen=True)
class DecayRates:
    """Exponential time constants of memory decay (seconds; inf = no decay)."""

    t_depol: float = math.inf
    t_deph: float = math.inf
    t_coh: float = math.inf

    def __post_init__(self):
        for name in ("t_depol", "t_deph", "t_coh"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive or infinite")


def success_after(p: float, r: int) -> float:
    """Probability of at least one success in r attempts: 1 - (1-p)^r."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p={p} outside [0, 1]")
    if r < 1:
        raise ValidationError(f"r={r} must be >= 1")
    if p == 1.0:
        return 1.0
    if r == 1:
        return p
    return -math.expm1(r * math.log1p(-p))


def attempts_for(p: float, p_min: float) -> int:
    """Minimal attempt count r with success_after(p, r) >= p_min."""
    if not 0.0 < p_min < 1.0:
        raise ValidationError(f"p_min={p_min} outside (0, 1)")
    if p <= 0.0:
        raise InfeasibleError("per-attempt probability is zero")
    if p >= p_min:
        return 1
    r = math.ceil(math.log1p(-p_min) / math.log1p(-p))
    # Guard the ceiling against floating-point boundary cases.
    while success_after(p, r) < p_min:
        r += 1
    while r > 1 and success_after(p, r - 1) >= p_min:
        r -= 1
    return r


def _block_decay_sum(p: float, r: int, c: float) -> float:
    """sum_{j=1}^{r} p (1-p)^(j-1) e^(-c (r-j)), for 0 < p < 1 and c > 0.

    Evaluated as p e^c ((1-p)^r - e^(-c r)) / (e^c (1-p) - 1) with an
    expm1-ratio branch for the removable singularity e^c (1-p) -> 1.
    """
    delta = c + math.log1p(-p)
    if delta == 0.0:
        return float(r) * p * math.exp(c - c * r)
    if abs(r * delta) < 30.0 and c < 700.0:
        return p * math.exp(c - c * r) * math.expm1(r * delta) / math.expm1(delta)
    num = math.exp(r * math.log1p(-p)) - math.exp(-c * r)
    return p * num / (-(1.0 - p) * math.expm1(-delta))


def avg_decay_factor(p: float, r: int, c: float) -> float:
    """Expected e^(-c (r - j)) over the success round j, given success.

    j follows the geometric distribution truncated to 1..r.  This is the
    average keep-factor multiplying exponential storage decay over the
    repetition block; c is t_attempt over the memory time constant.
    """
    if not 0.0 < p <= 1.0:
        raise ValidationError(f"p={p} outside (0, 1]")
    if r < 1:
        raise ValidationError(f"r={r} must be >= 1")
    if c < 0.0:
        raise ValidationError(f"c={c} must be nonnegative")
    if c == 0.0 or r == 1:
        return 1.0
    if p == 1.0:
        return math.exp(-c * (r - 1))
    norm = -math.expm1(r * math.log1p(-p))
    return min(1.0, _block_decay_sum(p, r, c) / norm)


def mp_retrieval_prob(p: float, r: int, c: float) -> float:
    """Probability the block succeeds and the stored modes are still
    retrievable: (1 - (1-p)^r) * E[e^(-c (r-j))].

    For multiplexed memories c is t_attempt times the summed reciprocal
    efficiency coherence times of the two storing memories.
    """
    if not 0.0 < p <= 1.0:
        raise ValidationError(f"p={p} outside (0, 1]")
    if r < 1:
        raise ValidationError(f"r={r} must be >= 1")
    if c < 0.0:
        raise ValidationError(f"c={c} must be nonnegative")
    if c == 0.0:
        return success_after(p, r)
    if r == 1:
        return p
    if p == 1.0:
        return math.exp(-c * (r - 1))
    return min(1.0, _block_decay_sum(p, r, c))


def success_after_array(p: float, rs) -> "np.ndarray":
    """success_after over an array of attempt counts."""
    import numpy as np

    rs = np.asarray(rs, dtype=float)
    if p >= 1.0:
        return np.ones_like(rs)
    return np.where(rs == 1.0, p, -np.expm1(rs * math.log1p(-p)))


def _block_decay_sum_array(p: float, rs, c: float) -> "np.ndarray":
    import numpy as np

    rs = np.asarray(rs, dtype=float)
    delta = c + math.log1p(-p)
    if delta == 0.0:
        return rs * p * np.exp(c - c * rs)
    arg = rs * delta
    small = np.logical_and(np.abs(arg) < 30.0, c < 700.0)
    safe = np.where(small, arg, 0.0)
    ratio = np.expm1(safe) / math.expm1(min(delta, 700.0))
    near = p * np.exp(np.where(small, c - c * rs, 0.0)) * ratio
    far = (
        p
        * (np.exp(rs * math.log1p(-p)) - np.exp(-c * rs))
        / (-(1.0 - p) * math.expm1(-delta))
    )
    return np.where(small, near, far)


def avg_decay_factor_array(p: float, rs, c: float) -> "np.ndarray":
    """avg_decay_factor over an array of attempt counts."""
    import numpy as np

    rs = np.asarray(rs, dtype=float)
    if c == 0.0:
        return np.ones_like(rs)
    if p >= 1.0:
        return np.exp(-c * (rs - 1.0))
    norm = -np.expm1(rs * math.log1p(-p))
    out = _block_decay_sum_array(p, rs, c) / norm
    return np.where(rs <= 1.0, 1.0, np.minimum(out, 1.0))


def mp_retrieval_prob_array(p: float, rs, c: float) -> "np.ndarray":
    """mp_retrieval_prob over an array of attempt counts."""
    import numpy as np

    rs = np.asarray(rs, dtype=float)
    if c == 0.0:
        return success_after_array(p, rs)
    if p >= 1.0:
        return np.exp(-c * (rs - 1.0))
    out = np.minimum(_block_decay_sum_array(p, rs, c), 1.0)
    return np.where(rs == 1.0, p, out)


def optimal_attempts_mp(p: float, c: float) -> int:
    """Attempt count maximizing mp_retrieval_prob at fixed p and c > 0.

    Uses the stationary point of the continuous relaxation, rounded to the
    better of floor/ceiling and clamped to >= 1.
    """
    if not 0.0 < p < 1.0:
        raise ValidationError(f"p={p} outside (0, 1)")
    if c <= 0.0:
        raise ValidationError(f"c={c} must be positive")
    if c >= 700.0:
        # Storage over even one extra round decays beyond double precision.
        return 1
    log_q = math.log1p(-p)
    denom = c + log_q
    candidates = {1}
    if denom != 0.0:
        r_cont = (c - math.log(-math.exp(c) * log_q / c)) / denom
        if math.isfinite(r_cont):
            base = math.floor(r_cont)
            candidates.update(
                max(1, base + k) for k in (-1, 0, 1, 2)
            )
    else:
        # Degenerate stationary condition; climb from r = 1.
        r = 1
        while mp_retrieval_prob(p, r + 1, c) > mp_retrieval_prob(p, r, c):
            r += 1
        candidates.add(r)
    return max(candidates, key=lambda r: (mp_retrieval_prob(p, r, c), -r))


@dataclass(frozen=True)
class LinkTiming:
    """Durations entering one attempt of each protocol stage.

    `herald_roundtrip` selects whether elementary-pair heralding waits for
    the photon to reach the midpoint and the herald to return (full L of
    classical+optical path) or only the midpoint-to-node signal (L/2).
    """

    t_prep: float = 6e-6
    t_swap: float = 0.0
    t_distill: float = 0.0
    n_ri: float = 1.44
    herald_roundtrip: bool = True

    def __post_init__(self):
        if self.t_prep <= 0:
            raise ValidationError("t_prep must be positive")
        if self.n_ri <= 1.0:
            raise ValidationError("n_ri must exceed 1")


def attempt_duration(length_km: float, stage: str, timing: LinkTiming) -> float:
    """Duration of a single attempt of one protocol stage over a link.

    EPG sends a photon to the midpoint and waits for the herald; SWAP and
    DISTILL wait for classical communication across the merged link.
    """
    if length_km < 0:
        raise ValidationError("length must be nonnegative")
    signal = length_km * timing.n_ri / SPEED_OF_LIGHT_KM_S
    if stage == "epg":
        path = signal if timing.herald_roundtrip else signal / 2.0
        return timing.t_prep + path
    if stage == "swap":
        return timing.t_swap + signal
    if stage == "distill":
        return timing.t_distill + signal
    raise ValidationError(f"unknown stage {stage!r}")
