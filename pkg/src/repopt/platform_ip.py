"""Elementary pair generation for information-processing platforms.

Both protocols send photonic halves of memory-photon entangled states to a
midpoint beamsplitter station with two threshold detectors.  The heralded
state of the two memory qubits is computed exactly from a small joint
construction: each side is a 3-level system (qubit value plus photon
presence at the station) for the single-click protocol, a 4-level system
(qubit value plus time-bin photon presence) for the double-click protocol.
Detector outcomes, dark counts, photon loss and phase uncertainty all enter
through explicit operators on this space; no pasted closed forms.

States are returned in the |Phi+> frame (spin-up mapped to |1>, a bit flip
applied on the B side), with preparation dephasing already included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InfeasibleError, ValidationError
from .states import GateNoiseParams, X, _apply_on_qubit, _symmetrize, dephase
from .timing import DecayRates, LinkTiming


@dataclass(frozen=True)
class IpParams:
    """Hardware parameters of one information-processing node."""

    t_prep: float = 6e-6
    f_prep: float = 0.99
    dark_count_rate: float = 10.0
    l0: float = 22.0
    n_ri: float = 1.44
    delta_phi: float = math.radians(14.3)
    t_depol: float = 10.0
    t_deph: float = 10.0
    p_em: float = 0.9
    p_pps: float = 0.9
    p_det: float = 1.0
    f_gates: float = 0.99
    f_gates_deph: float = 1.0
    t_swap: float = 0.0
    t_distill: float = 0.0
    detection_window: float = 30e-9

    def __post_init__(self):
        for name in ("f_prep", "p_em", "p_pps", "p_det", "f_gates", "f_gates_deph"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} outside [0, 1]")
        for name in ("t_prep", "l0", "t_depol", "t_deph", "detection_window"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.dark_count_rate < 0 or self.delta_phi < 0:
            raise ValidationError("dark_count_rate and delta_phi must be >= 0")

    def gate_noise(self) -> GateNoiseParams:
        return GateNoiseParams(
            bsm_depol=self.f_gates,
            bsm_deph=self.f_gates_deph,
            cnot_depol=self.f_gates,
            cnot_deph=self.f_gates_deph,
            meas_depol=self.f_gates,
        )

    def decay_rates(self) -> DecayRates:
        return DecayRates(t_depol=self.t_depol, t_deph=self.t_deph)

    def link_timing(self) -> LinkTiming:
        return LinkTiming(
            t_prep=self.t_prep,
            t_swap=self.t_swap,
            t_distill=self.t_distill,
            n_ri=self.n_ri,
        )

    def dark_click_prob(self) -> float:
        return -math.expm1(-self.dark_count_rate * self.detection_window)

    def arm_efficiency(self, arm_km: float) -> float:
        """Photon survival over one arm: emission, post-selection, fibre
        to the midpoint, and detection."""
        return self.p_em * self.p_pps * self.p_det * transmissivity(arm_km, self.l0)


# Table-style example parameter sets; set index grows with hardware quality.
IP_PARAMETER_SETS = {
    1: IpParams(t_depol=3.0, t_deph=3.0, p_em=0.8, p_pps=0.8, f_gates=0.98),
    2: IpParams(t_depol=10.0, t_deph=10.0, p_em=0.9, p_pps=0.9, f_gates=0.99),
    3: IpParams(t_depol=50.0, t_deph=50.0, p_em=0.95, p_pps=0.95, f_gates=0.995),
    4: IpParams(t_depol=100.0, t_deph=100.0, p_em=0.99, p_pps=0.99, f_gates=0.999),
}


def transmissivity(length_km: float, l0: float) -> float:
    """Fibre transmissivity exp(-L/L0)."""
    if length_km < 0 or l0 <= 0:
        raise ValidationError("need length >= 0 and l0 > 0")
    return math.exp(-length_km / l0)


def theta_grid(steps: int = 300, lo: float = 0.5, hi: float = math.pi) -> np.ndarray:
    """Bright-state angles scanned for the single-click protocol."""
    return np.linspace(lo, min(hi, math.pi), steps)


@lru_cache(maxsize=None)
def _bs_amplitudes(n_a: int, n_b: int) -> tuple[tuple[int, int, float], ...]:
    """Output amplitudes of |n_a, n_b> through a 50:50 beamsplitter.

    Convention c_+/- = (a +/- b)/sqrt(2); returns (n_plus, n_minus, amp)
    triples from expanding the creation-operator polynomial.
    """
    n = n_a + n_b
    amps: dict[tuple[int, int], float] = {}
    for k1 in range(n_a + 1):
        for k2 in range(n_b + 1):
            n_plus = k1 + k2
            n_minus = n - n_plus
            coeff = (
                math.comb(n_a, k1)
                * math.comb(n_b, k2)
                * (-1) ** (n_b - k2)
                * math.sqrt(math.factorial(n_plus) * math.factorial(n_minus))
                / math.sqrt(2**n * math.factorial(n_a) * math.factorial(n_b))
            )
            amps[(n_plus, n_minus)] = amps.get((n_plus, n_minus), 0.0) + coeff
    return tuple((np_, nm, a) for (np_, nm), a in amps.items() if a != 0.0)


def _herald_matrix(outcome: int, p_dark: float) -> dict:
    """E[(na, nb), (na', nb')] for 'exactly this detector clicked'.

    Threshold detectors: a detector with n >= 1 incident photons clicks with
    certainty, an empty one clicks with the dark-count probability.
    outcome=+1 heralds on the + detector, -1 on the - detector.
    """

    def click(n):
        return 1.0 if n >= 1 else p_dark

    def silent(n):
        return 1.0 - p_dark if n == 0 else 0.0

    entries: dict = {}
    occupations = [(na, nb) for na in range(2) for nb in range(2)]
    for ket in occupations:
        for bra in occupations:
            if sum(ket) != sum(bra):
                continue  # detectors are photon-number diagonal
            value = 0.0
            for np1, nm1, a1 in _bs_amplitudes(*ket):
                for np2, nm2, a2 in _bs_amplitudes(*bra):
                    if (np1, nm1) != (np2, nm2):
                        continue
                    if outcome > 0:
                        w = click(np1) * silent(nm1)
                    else:
                        w = silent(np1) * click(nm1)
                    value += w * a1 * a2
            entries[(ket, bra)] = value
    return entries


def _phase_mask(dn_ket: int, dn_bra: int, sigma: float) -> float:
    """Gaussian relative-phase average for a coherence changing the photon
    number on side A by dn_ket and on side B by dn_bra."""
    half_diff = (dn_ket - dn_bra) / 2.0
    return math.exp(-0.5 * (sigma * half_diff) ** 2)


def _finish_pair(rho: np.ndarray, keep_a: float, keep_b: float) -> np.ndarray:
    """Map the spin-basis pair into the |Phi+> frame and apply
    preparation dephasing."""
    rho = _apply_on_qubit(rho, X, 1)
    rho = dephase(rho, keep_a, 0)
    rho = dephase(rho, keep_b, 1)
    return _symmetrize(rho)


def single_click_epg(
    theta: float, length_km: float, params: IpParams, params_b: IpParams | None = None
) -> tuple[np.ndarray, float]:
    """Heralded state and per-attempt success probability of the
    single-click protocol across one elementary link.

    Each node prepares sin(theta)|down> + cos(theta)|up>, the up component
    emits a photon, and a single detector click at the midpoint heralds.
    Side basis: 0 = (down, no photon), 1 = (up, photon lost),
    2 = (up, photon at the station).
    """
    if params_b is None:
        params_b = params
    if not 0.0 < theta <= math.pi:
        raise ValidationError(f"theta={theta} outside (0, pi]")
    if length_km < 0:
        raise ValidationError("length must be nonnegative")
    sin_t, cos_t = math.sin(theta), math.cos(theta)
    eta_a = params.arm_efficiency(length_km / 2.0)
    eta_b = params_b.arm_efficiency(length_km / 2.0)
    p_dark = params.dark_click_prob()
    sigma = max(params.delta_phi, params_b.delta_phi)

    def side(eta):
        vec = np.array([sin_t, 0.0, cos_t * math.sqrt(eta)])
        rho = np.outer(vec, vec)
        rho[1, 1] += cos_t**2 * (1.0 - eta)
        return rho

    joint = np.kron(side(eta_a), side(eta_b)).reshape(3, 3, 3, 3)
    photons = (0, 0, 1)  # photon number at the station per side level
    qubit = (0, 1, 1)  # spin value per side level (1 = up)

    heralds = {+1: _herald_matrix(+1, p_dark), -1: _herald_matrix(-1, p_dark)}
    total = np.zeros((4, 4), dtype=complex)
    p_attempt = 0.0
    for outcome, herald in heralds.items():
        cond = np.zeros((4, 4), dtype=complex)
        for sa in range(3):
            for sb in range(3):
                for sa2 in range(3):
                    for sb2 in range(3):
                        weight = joint[sa, sb, sa2, sb2]
                        if weight == 0.0:
                            continue
                        key = ((photons[sa], photons[sb]), (photons[sa2], photons[sb2]))
                        if key not in herald:
                            continue
                        e = herald[key]
                        if e == 0.0:
                            continue
                        phase = _phase_mask(
                            photons[sa] - photons[sa2], photons[sb] - photons[sb2], sigma
                        )
                        row = 2 * qubit[sa] + qubit[sb]
                        col = 2 * qubit[sa2] + qubit[sb2]
                        cond[row, col] += weight * e * phase
        p_attempt += float(np.real(np.trace(cond)))
        if outcome < 0:
            # The minus outcome heralds the Psi- branch; a Z on side B
            # rotates it into the Psi+ frame before averaging.
            zb = np.diag([1.0, -1.0, 1.0, -1.0])
            cond = zb @ cond @ zb
        total += cond
    if p_attempt <= 0.0:
        raise InfeasibleError("single-click heralding probability is zero")
    rho = _finish_pair(total / p_attempt, 2 * params.f_prep - 1, 2 * params_b.f_prep - 1)
    return rho, p_attempt


def double_click_epg(
    length_km: float, params: IpParams, params_b: IpParams | None = None
) -> tuple[np.ndarray, float]:
    """Heralded state and per-attempt success probability of the
    double-click (time-bin) protocol across one elementary link.

    Each node emits exactly one photon, in the early bin for spin up and the
    late bin for spin down; one click in each bin's window heralds.  Side
    basis: 0 = (up, early photon), 1 = (up, photon lost),
    2 = (down, late photon), 3 = (down, photon lost).
    """
    if params_b is None:
        params_b = params
    if length_km < 0:
        raise ValidationError("length must be nonnegative")
    eta_a = params.arm_efficiency(length_km / 2.0)
    eta_b = params_b.arm_efficiency(length_km / 2.0)
    p_dark = params.dark_click_prob()
    sigma = max(params.delta_phi, params_b.delta_phi)

    def side(eta):
        vec = np.array([math.sqrt(eta / 2.0), 0.0, math.sqrt(eta / 2.0), 0.0])
        rho = np.outer(vec, vec)
        rho[1, 1] += (1.0 - eta) / 2.0
        rho[3, 3] += (1.0 - eta) / 2.0
        return rho

    joint = np.kron(side(eta_a), side(eta_b)).reshape(4, 4, 4, 4)
    early = (1, 0, 0, 0)
    late = (0, 0, 1, 0)
    qubit = (1, 1, 0, 0)

    herald = {+1: _herald_matrix(+1, p_dark), -1: _herald_matrix(-1, p_dark)}
    total = np.zeros((4, 4), dtype=complex)
    p_attempt = 0.0
    patterns = [(de, dl) for de in (+1, -1) for dl in (+1, -1)]
    for de, dl in patterns:
        cond = np.zeros((4, 4), dtype=complex)
        for sa in range(4):
            for sb in range(4):
                for sa2 in range(4):
                    for sb2 in range(4):
                        weight = joint[sa, sb, sa2, sb2]
                        if weight == 0.0:
                            continue
                        key_e = ((early[sa], early[sb]), (early[sa2], early[sb2]))
                        key_l = ((late[sa], late[sb]), (late[sa2], late[sb2]))
                        if key_e not in herald[de] or key_l not in herald[dl]:
                            continue
                        e = herald[de][key_e] * herald[dl][key_l]
                        if e == 0.0:
                            continue
                        dn_a = (early[sa] + late[sa]) - (early[sa2] + late[sa2])
                        dn_b = (early[sb] + late[sb]) - (early[sb2] + late[sb2])
                        row = 2 * qubit[sa] + qubit[sb]
                        col = 2 * qubit[sa2] + qubit[sb2]
                        cond[row, col] += weight * e * _phase_mask(dn_a, dn_b, sigma)
        p_attempt += float(np.real(np.trace(cond)))
        if de != dl:
            zb = np.diag([1.0, -1.0, 1.0, -1.0])
            cond = zb @ cond @ zb
        total += cond
    if p_attempt <= 0.0:
        raise InfeasibleError("double-click heralding probability is zero")
    rho = _finish_pair(total / p_attempt, 2 * params.f_prep - 1, 2 * params_b.f_prep - 1)
    return rho, p_attempt
