"""Secret-key rates of delivered pairs under the six-state protocol.

Alice and Bob measure their halves in the X, Y and Z bases; the three
error rates fix the Bell-diagonal weights of the (twirled) pair, from
which the one-way secret fraction follows.  An iterated two-block
advantage-distillation preprocessing is available as an opt-in mode; it
extracts key from states below the one-way threshold at a reduced rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .states import GateNoiseParams, NOISELESS, measure_noisy


@dataclass(frozen=True)
class QberTriple:
    """Error rates observed in the X, Y and Z bases."""

    q_x: float
    q_y: float
    q_z: float

    def __post_init__(self):
        for name in ("q_x", "q_y", "q_z"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} outside [0, 1]")


def qber(rho: np.ndarray, noise: GateNoiseParams = NOISELESS) -> QberTriple:
    """Basis-wise error rates of a pair in the |Phi+> frame.

    An error is an outcome pattern deviating from the Phi+ correlations:
    anticorrelated in X and Z, correlated in Y.
    """
    px = measure_noisy(rho, "X", noise)
    py = measure_noisy(rho, "Y", noise)
    pz = measure_noisy(rho, "Z", noise)
    return QberTriple(
        q_x=float(px[0, 1] + px[1, 0]),
        q_y=float(py[0, 0] + py[1, 1]),
        q_z=float(pz[0, 1] + pz[1, 0]),
    )


def _bell_weights(q: QberTriple) -> np.ndarray:
    """Bell-diagonal weights (Phi+, Phi-, Psi+, Psi-) consistent with the
    three observed error rates, clipped to the probability simplex."""
    a = 1.0 - (q.q_x + q.q_y + q.q_z) / 2.0
    b = (q.q_x + q.q_y - q.q_z) / 2.0
    c = (q.q_y + q.q_z - q.q_x) / 2.0
    d = (q.q_z + q.q_x - q.q_y) / 2.0
    w = np.clip([a, b, c, d], 0.0, 1.0)
    total = w.sum()
    if total <= 0.0:
        raise ValidationError("error rates are inconsistent with a quantum state")
    return w / total


def _entropy(w: np.ndarray) -> float:
    w = w[w > 0.0]
    return float(-(w * np.log2(w)).sum())


def _one_way_fraction(w: np.ndarray) -> float:
    return max(0.0, 1.0 - _entropy(w))


def _ad_step(w: np.ndarray) -> tuple[np.ndarray, float]:
    """One two-block advantage-distillation step on Bell-diagonal weights.

    Blocks of two pairs are kept when the announced XOR agrees; the kept
    weights follow the recurrence map of the block comparison.
    """
    a, b, c, d = w
    keep = (a + b) ** 2 + (c + d) ** 2
    new = np.array([a * a + b * b, 2 * a * b, c * c + d * d, 2 * c * d]) / keep
    return new, keep


def six_state_fraction(q: QberTriple, advantage_distillation: bool = False) -> float:
    """Secret bits per delivered pair.

    Default: one-way six-state fraction.  With advantage distillation the
    best yield over 0..10 preprocessing steps is returned; each step halves
    the pair budget and succeeds with the block-comparison probability.
    """
    w = _bell_weights(q)
    best = _one_way_fraction(w)
    if advantage_distillation:
        pairs_per_bit = 1.0
        success = 1.0
        for _ in range(10):
            w, keep = _ad_step(w)
            pairs_per_bit *= 2.0
            success *= keep
            best = max(best, success * _one_way_fraction(w) / pairs_per_bit)
    return best


def key_rate(
    fidelity_state: np.ndarray,
    p: float,
    t: float,
    noise: GateNoiseParams = NOISELESS,
    advantage_distillation: bool = False,
) -> float:
    """Secret-key bits per second of a scheme delivering the given state
    with probability p every t seconds."""
    if t <= 0.0:
        raise ValidationError("generation time must be positive")
    fraction = six_state_fraction(qber(fidelity_state, noise), advantage_distillation)
    return fraction * p / t


def scheme_key_rate(scheme, noise: GateNoiseParams = NOISELESS, advantage_distillation=False) -> float:
    return key_rate(scheme.state, scheme.p, scheme.t, noise, advantage_distillation)


def werner_one_way_threshold() -> float:
    """Werner-state fidelity above which the one-way fraction is positive,
    located by bisection on the implemented rate."""
    lo, hi = 0.5, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2.0
        e = 2.0 * (1.0 - mid) / 3.0
        frac = six_state_fraction(QberTriple(e, e, e))
        if frac > 0.0:
            hi = mid
        else:
            lo = mid
    return hi
