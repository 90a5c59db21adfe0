"""Multiplexed-platform elementary pair generation.

Each node of an elementary link hosts a down-conversion source of two-mode
(early/late time-bin) entanglement.  One half of each pair is stored in a
multimode memory, the other travels to a midpoint station where a
spectrally-resolved photonic Bell measurement heralds one mode.  The
heralded dual-rail state and its success probability are computed from the
explicit truncated-Fock construction: source states up to two photon pairs,
truncated pure-loss channels, the midpoint Bell-outcome operators and the
nonzero-photon post-selection on the memory sides.

The four midpoint outcomes are local-unitary equivalent; one is computed
and the probability carries a factor of four.  Population left outside the
dual-rail subspace by surviving multiphoton components is folded into the
non-target Bell sector of the returned 4x4 state, which preserves both the
success probability and the fidelity of the full construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InfeasibleError, ValidationError
from .platform_ip import transmissivity
from .states import PHI_PLUS, X, _apply_on_qubit, _symmetrize
from .timing import LinkTiming


@dataclass(frozen=True)
class MpParams:
    """Hardware parameters of one multiplexed node."""

    t_prep: float = 6e-6
    dark_count_rate: float = 10.0
    l0: float = 22.0
    n_ri: float = 1.44
    t_coh: float = 0.1
    n_modes: int = 100_000
    p_app: float = 0.95
    bsm_ancilla_n: int = 1
    detection_window: float = 30e-9

    def __post_init__(self):
        if not 0.0 <= self.p_app <= 1.0:
            raise ValidationError("p_app outside [0, 1]")
        if self.n_modes < 1 or self.bsm_ancilla_n < 0:
            raise ValidationError("need n_modes >= 1 and bsm_ancilla_n >= 0")
        for name in ("t_prep", "l0", "t_coh", "detection_window"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")

    def link_timing(self) -> LinkTiming:
        return LinkTiming(t_prep=self.t_prep, n_ri=self.n_ri)

    def bsm_success(self) -> float:
        return boosted_bsm_prob(self.bsm_ancilla_n)

    def dark_click_prob(self) -> float:
        return -math.expm1(-self.dark_count_rate * self.detection_window)


MP_PARAMETER_SETS = {
    1: MpParams(t_coh=1e-2, n_modes=10**4, p_app=0.9, bsm_ancilla_n=0),
    2: MpParams(t_coh=1e-1, n_modes=10**5, p_app=0.95, bsm_ancilla_n=1),
    3: MpParams(t_coh=1e0, n_modes=10**6, p_app=0.99, bsm_ancilla_n=2),
    4: MpParams(t_coh=1e1, n_modes=10**7, p_app=0.999, bsm_ancilla_n=3),
}


@dataclass(frozen=True)
class PdcAmplitudes:
    """Zero-, one- and two-pair weights of the truncated source state."""

    p0: float
    p1: float
    p2: float


def pdc_probs(n_s: float) -> PdcAmplitudes:
    """Photon-pair number distribution of a source with mean photon
    number n_s."""
    if n_s < 0:
        raise ValidationError("n_s must be nonnegative")
    p0 = 1.0 / (n_s + 1.0) ** 2
    p1 = 2.0 * n_s / (n_s + 1.0) ** 3
    return PdcAmplitudes(p0=p0, p1=p1, p2=1.0 - p0 - p1)


def lossy_kraus(gamma: float) -> list[np.ndarray]:
    """Kraus operators of the pure-loss channel truncated to 0..2 photons."""
    if not 0.0 <= gamma <= 1.0:
        raise ValidationError("gamma outside [0, 1]")
    a0 = np.diag([1.0, math.sqrt(1.0 - gamma), 1.0 - gamma]).astype(complex)
    a1 = np.zeros((3, 3), dtype=complex)
    a1[0, 1] = math.sqrt(gamma)
    a1[1, 2] = math.sqrt(2.0 * (1.0 - gamma) * gamma)
    a2 = np.zeros((3, 3), dtype=complex)
    a2[0, 2] = gamma
    return [a0, a1, a2]


def multiplexed_success(p_el: float, n_modes: int) -> float:
    """At least one of n_modes parallel modes heralds: 1 - (1-p_el)^N."""
    if not 0.0 <= p_el <= 1.0:
        raise ValidationError("p_el outside [0, 1]")
    if n_modes < 1:
        raise ValidationError("n_modes must be >= 1")
    if p_el == 1.0:
        return 1.0
    return -math.expm1(n_modes * math.log1p(-p_el))


def boosted_bsm_prob(n: int) -> float:
    """Success probability of a linear-optics BSM boosted with
    2^(N+1) - 2 ancillary photons."""
    if n < 0:
        raise ValidationError("ancilla level must be >= 0")
    return 1.0 - 0.5 ** (n + 1)


def mp_fidelity(n_s: float, eta: float) -> float:
    """Heralded-pair fidelity with ideal apparatus and no local losses."""
    return 3.0 / (
        4.0 * (eta - 1.0) ** 2 * n_s**4
        + 24.0 * (eta - 1.0) ** 2 * n_s**3
        + 4.0 * (9.0 * eta**2 - 20.0 * eta + 11.0) * n_s**2
        - 24.0 * (eta - 1.0) * n_s
        + 3.0
    )


def ns_for_fidelity(f: float, eta: float) -> float:
    """Mean photon number achieving heralded fidelity f at midpoint-arm
    transmissivity eta (ideal apparatus)."""
    if not 0.5 < f < 1.0:
        raise ValidationError("fidelity outside (1/2, 1)")
    if not 0.0 <= eta < 1.0:
        raise ValidationError("eta outside [0, 1)")
    return 0.5 * (
        math.sqrt((-9.0 * eta * f + 5.0 * f + 2.0 * math.sqrt(f * (f + 3.0))) / (f - eta * f))
        - 3.0
    )


def _fidelity_mode_factor(f: float) -> float:
    """Loss-free part of the minimum mode count needed for fidelity f."""
    s = math.sqrt(5.0 + 2.0 * math.sqrt(f * (f + 3.0)) / f)
    return f * (s - 1.0) ** 6 / (32.0 * (s - 3.0) ** 2)


def required_modes(f: float, eta: float) -> float:
    """Modes needed for one expected herald at fidelity f: the heralding
    probability inverts to (1/eta^2) times a fidelity-only factor that
    grows as 32/(1-f)^2 near f = 1."""
    if not 0.5 < f < 1.0:
        raise ValidationError("fidelity outside (1/2, 1)")
    if not 0.0 < eta <= 1.0:
        raise ValidationError("eta outside (0, 1]")
    return _fidelity_mode_factor(f) / eta**2


def closed_form_p_succ(n_s: float, eta: float, p_app: float = 1.0) -> float:
    """Per-mode heralding probability of the elementary-pair construction.

    Product of the midpoint Bell-outcome probability (all four outcomes)
    and the nonzero-photon post-selection probability on the memory sides.
    """
    p = pdc_probs(n_s)
    p1, p2 = p.p1, p.p2
    p_bsm = (
        eta**2
        * (
            3.0 * p1**2
            - 4.0 * (4.0 * eta - 3.0) * p1 * p2
            + 4.0 * p2 * (1.0 + (3.0 - 8.0 * eta + 4.0 * eta**2) * p2)
        )
        / 24.0
    )
    num = (
        p_app**2
        * (p1 + 4.0 * (eta - 1.0) * p2 * (p_app - 2.0))
        * (3.0 * p1 + 4.0 * (eta - 1.0) * p2 * (p_app - 2.0))
    )
    den = 4.0 * p2 + (p1 + (2.0 - 4.0 * eta) * p2) * (3.0 * p1 + (6.0 - 4.0 * eta) * p2)
    return 4.0 * p_bsm * num / den


def _pdc_tensor(n_s: float) -> np.ndarray:
    """Source ket over (mem_early, mem_late, out_early, out_late), each
    mode truncated to occupation 0..2."""
    p = pdc_probs(n_s)
    psi = np.zeros((3, 3, 3, 3))
    psi[0, 0, 0, 0] = math.sqrt(p.p0)
    psi[1, 0, 0, 1] = math.sqrt(p.p1 / 2.0)
    psi[0, 1, 1, 0] = math.sqrt(p.p1 / 2.0)
    psi[2, 0, 0, 2] = math.sqrt(p.p2 / 3.0)
    psi[1, 1, 1, 1] = -math.sqrt(p.p2 / 3.0)
    psi[0, 2, 2, 0] = math.sqrt(p.p2 / 3.0)
    return psi


def _apply_loss(rho: np.ndarray, gamma: float, mode: int, n_modes: int) -> np.ndarray:
    out = np.zeros_like(rho)
    for k in lossy_kraus(gamma):
        k = np.real(k)
        t = np.tensordot(k, rho, axes=([1], [mode]))
        t = np.moveaxis(t, 0, mode)
        t = np.tensordot(k, t, axes=([1], [mode + n_modes]))
        t = np.moveaxis(t, 0, mode + n_modes)
        out += t
    return out


_PSI_PLUS_PHOTONIC = np.zeros((3, 3))
_PSI_PLUS_PHOTONIC[0, 1] = 1.0 / math.sqrt(2.0)
_PSI_PLUS_PHOTONIC[1, 0] = 1.0 / math.sqrt(2.0)


@lru_cache(maxsize=4096)
def _heralded_memory_state(n_s: float, eta: float, p_app: float):
    """Unnormalized post-herald state on the two memory mode pairs.

    Returns (sigma', p_one_outcome, p_all) where sigma' is the state after
    the midpoint Psi+ (x) Psi+ outcome and the nonzero-photon POVM, with
    trace p_one_outcome; p_all carries the factor 4 over outcomes.
    """
    psi = _pdc_tensor(n_s)
    rho = np.einsum("abcd,efgh->abcdefgh", psi, psi)
    for mode, gamma in ((0, 1.0 - p_app), (1, 1.0 - p_app), (2, 1.0 - eta), (3, 1.0 - eta)):
        rho = _apply_loss(rho, gamma, mode, 4)
    sigma = np.einsum(
        "uvbBUVcC,xydDXYeE,bd,BD,ce,CE->uvxyUVXY",
        rho,
        rho,
        _PSI_PLUS_PHOTONIC,
        _PSI_PLUS_PHOTONIC,
        _PSI_PLUS_PHOTONIC,
        _PSI_PLUS_PHOTONIC,
        optimize=True,
    )
    nonzero = np.ones((3, 3, 3, 3))
    nonzero[0, 0, :, :] = 0.0
    nonzero[:, :, 0, 0] = 0.0
    sigma = (
        sigma
        * nonzero[:, :, :, :, None, None, None, None]
        * nonzero[None, None, None, None, :, :, :, :]
    )
    p_one = float(np.einsum("uvxyuvxy->", sigma).real)
    return sigma, p_one, 4.0 * p_one


# Dual-rail logical levels: |0> = early photon (1,0), |1> = late photon (0,1).
_LOGICAL_LEVELS = ((1, 0), (0, 1))


def _compress_to_two_qubits(sigma: np.ndarray, p_one: float) -> np.ndarray:
    """Project the heralded memory state onto the dual-rail subspace and
    fold the surviving multiphoton population into the non-target Bell
    sector, preserving trace and fidelity."""
    logical = np.zeros((4, 4), dtype=complex)
    for i, (u, v) in enumerate(_LOGICAL_LEVELS):
        for j, (x, y) in enumerate(_LOGICAL_LEVELS):
            for k, (u2, v2) in enumerate(_LOGICAL_LEVELS):
                for l, (x2, y2) in enumerate(_LOGICAL_LEVELS):
                    logical[2 * i + j, 2 * k + l] = sigma[u, v, x, y, u2, v2, x2, y2]
    logical /= p_one
    # Into the |Phi+> frame: bit flip on the far side.
    logical = _apply_on_qubit(logical, X, 1)
    junk = 1.0 - float(np.real(np.trace(logical)))
    phi = np.outer(PHI_PLUS, PHI_PLUS.conj())
    logical += junk * (np.eye(4, dtype=complex) - phi) / 3.0
    return _symmetrize(logical)


def mp_epg_raw(
    n_s: float, eta: float, p_app: float = 1.0, p_dark: float = 0.0
) -> tuple[np.ndarray, float]:
    """Heralded two-qubit state and per-mode success probability for given
    midpoint-arm transmissivity eta and apparatus efficiency p_app."""
    if n_s <= 0:
        raise ValidationError("n_s must be positive")
    if not 0.0 <= eta <= 1.0:
        raise ValidationError("eta outside [0, 1]")
    sigma, p_one, p_el = _heralded_memory_state(float(n_s), float(eta), float(p_app))
    if p_el <= 0.0:
        raise InfeasibleError("multiplexed heralding probability is zero")
    rho = _compress_to_two_qubits(sigma, p_one)
    if p_dark > 0.0:
        # False heralds: the accepted two-click pattern fired from dark
        # counts alone; the retained mode carries no usable correlation.
        p_false = 4.0 * p_dark**2 * (1.0 - p_el)
        rho = (p_el * rho + p_false * np.eye(4, dtype=complex) / 4.0) / (p_el + p_false)
        p_el = p_el + p_false
    return _symmetrize(rho), p_el


def mp_epg(
    n_s: float, length_km: float, params: MpParams, params_b: MpParams | None = None
) -> tuple[np.ndarray, float]:
    """Elementary pair generation over a fibre link of the given length.

    The apparatus efficiency attenuates both photonic arms: the memory arm
    directly, the midpoint arm on top of the fibre transmissivity over half
    the link.
    """
    if params_b is not None and params_b.p_app != params.p_app:
        raise ValidationError("asymmetric apparatus efficiencies are not modelled")
    if length_km < 0:
        raise ValidationError("length must be nonnegative")
    eta = params.p_app * transmissivity(length_km / 2.0, params.l0)
    return mp_epg_raw(n_s, eta, params.p_app, params.dark_click_prob())


def ns_grid(f_threshold: float, step: float = 1e-4, ns_min: float = 2e-4) -> np.ndarray:
    """Mean-photon-number scan range: from ns_min up to the value whose
    eta -> 0 heralded fidelity equals the storage threshold."""
    upper = ns_for_fidelity(max(f_threshold, 0.5 + 1e-12), 0.0)
    if upper <= ns_min:
        return np.array([ns_min])
    count = int(math.floor((upper - ns_min) / step)) + 1
    return ns_min + step * np.arange(count)
