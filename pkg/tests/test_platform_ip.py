"""Heralded elementary pair generation against a full Fock-space oracle.

The oracle builds the complete joint Hilbert space (memory qubits tensor
truncated photon modes), applies general pure-loss Kraus operators, a
matrix-exponential beamsplitter unitary, threshold-detector POVMs with
dark counts, and numeric Gauss-Hermite averaging over the optical phase.
"""

import math

import numpy as np
import pytest

from repopt.errors import InfeasibleError, ValidationError
from repopt.platform_ip import (
    IP_PARAMETER_SETS,
    IpParams,
    double_click_epg,
    single_click_epg,
    theta_grid,
    transmissivity,
)
from repopt.states import fidelity, validate_state

from conftest import I2, Z, beamsplitter_unitary, kron, loss_kraus_general

KET_DOWN = np.array([1, 0], dtype=complex)
KET_UP = np.array([0, 1], dtype=complex)
FOCK = [np.zeros(3, dtype=complex) for _ in range(3)]
for _n in range(3):
    FOCK[_n][_n] = 1.0


def _threshold_povm(p_dark):
    vac = np.zeros((3, 3), dtype=complex)
    vac[0, 0] = 1.0
    silent = (1 - p_dark) * vac
    click = np.eye(3, dtype=complex) - silent
    return click, silent


def _apply_mode_kraus(rho, ops, mode_axis, dims):
    """Apply a single-mode channel on one factor of a kron-ordered state."""
    total = int(np.prod(dims))
    out = np.zeros((total, total), dtype=complex)
    left = int(np.prod(dims[:mode_axis])) or 1
    right = int(np.prod(dims[mode_axis + 1 :])) or 1
    for op in ops:
        full = kron(np.eye(left), op, np.eye(right))
        out += full @ rho @ full.conj().T
    return out


def _prep_dephase(rho, f_prep, qubit, dims):
    keep = 2 * f_prep - 1
    left = int(np.prod(dims[:qubit])) or 1
    right = int(np.prod(dims[qubit + 1 :])) or 1
    zfull = kron(np.eye(left), Z, np.eye(right))
    return (1 + keep) / 2 * rho + (1 - keep) / 2 * zfull @ rho @ zfull.conj().T


def single_click_oracle(theta, length_km, params: IpParams):
    """Independent single-click model on qubit_A x qubit_B x mode_a x mode_b."""
    dims = [2, 2, 3, 3]
    eta = params.arm_efficiency(length_km / 2)
    p_dark = params.dark_click_prob()
    psi_side = math.sin(theta) * np.kron(KET_DOWN, FOCK[0]) + math.cos(theta) * np.kron(
        KET_UP, FOCK[1]
    )
    # Order (qubit_A, mode_a, qubit_B, mode_b) then permute to dims order.
    psi = np.kron(psi_side, psi_side).reshape(2, 3, 2, 3).transpose(0, 2, 1, 3).reshape(-1)
    rho0 = np.outer(psi, psi.conj())
    for axis in (2, 3):
        rho0 = _apply_mode_kraus(rho0, loss_kraus_general(eta, 3), axis, dims)

    number_a = kron(I2, I2, np.diag([0.0, 1.0, 2.0]), np.eye(3))
    bs = kron(I2, I2, beamsplitter_unitary(3))
    click, silent = _threshold_povm(p_dark)
    heralds = {
        +1: kron(I2, I2, click, silent),
        -1: kron(I2, I2, silent, click),
    }
    z_b = kron(I2, Z, np.eye(3), np.eye(3))

    # Gauss-Hermite average over the relative optical phase.
    nodes, weights = np.polynomial.hermite.hermgauss(40)
    total = np.zeros((4, 4), dtype=complex)
    p_attempt = 0.0
    for node, weight in zip(nodes, weights):
        phi = math.sqrt(2) * params.delta_phi * node
        phase = np.diag(np.exp(1j * phi * np.diag(number_a)))
        rho = phase @ rho0 @ phase.conj().T
        rho = bs @ rho @ bs.conj().T
        for outcome, povm in heralds.items():
            cond = povm @ rho
            if outcome < 0:
                cond = z_b @ cond @ z_b.conj().T
            reduced = np.einsum("aibi->ab", cond.reshape(4, 9, 4, 9))
            total += weight / math.sqrt(math.pi) * reduced
    p_attempt = float(np.real(np.trace(total)))
    rho_q = total / p_attempt
    rho_q = _prep_dephase(rho_q, params.f_prep, 0, [2, 2])
    rho_q = _prep_dephase(rho_q, params.f_prep, 1, [2, 2])
    x_b = kron(I2, np.array([[0, 1], [1, 0]], dtype=complex))
    return x_b @ rho_q @ x_b.conj().T, p_attempt


def double_click_oracle(length_km, params: IpParams):
    """Independent time-bin model on qubits x four truncated modes."""
    from scipy.linalg import expm

    from conftest import ladder

    dims = [2, 2, 3, 3, 3, 3]  # qubit_A, qubit_B, a_e, a_l, b_e, b_l
    eta = params.arm_efficiency(length_km / 2)
    p_dark = params.dark_click_prob()
    side = (
        np.kron(KET_UP, np.kron(FOCK[1], FOCK[0]))
        + np.kron(KET_DOWN, np.kron(FOCK[0], FOCK[1]))
    ) / math.sqrt(2)
    psi = (
        np.kron(side, side)
        .reshape(2, 3, 3, 2, 3, 3)
        .transpose(0, 3, 1, 2, 4, 5)
        .reshape(-1)
    )
    rho = np.outer(psi, psi.conj())
    for axis in (2, 3, 4, 5):
        rho = _apply_mode_kraus(rho, loss_kraus_general(eta, 3), axis, dims)

    def mode_op(op, axis):
        mats = [np.eye(d, dtype=complex) for d in dims]
        mats[axis] = op
        return kron(*mats)

    lad = ladder(3)
    for pair in ((2, 4), (3, 5)):  # early-bin and late-bin beamsplitters
        a_op, b_op = mode_op(lad, pair[0]), mode_op(lad, pair[1])
        bs = expm(math.pi / 4 * (a_op.conj().T @ b_op - a_op @ b_op.conj().T))
        rho = bs @ rho @ bs.conj().T

    click, silent = _threshold_povm(p_dark)
    z_b = mode_op(Z, 1)
    total = np.zeros((4, 4), dtype=complex)
    for d_early in (+1, -1):
        for d_late in (+1, -1):
            ops = [np.eye(2, dtype=complex)] * 2 + [None] * 4
            ops[2] = click if d_early > 0 else silent
            ops[4] = silent if d_early > 0 else click
            ops[3] = click if d_late > 0 else silent
            ops[5] = silent if d_late > 0 else click
            povm = kron(*ops)
            cond = povm @ rho
            if d_early != d_late:
                cond = z_b @ cond @ z_b.conj().T
            reduced = np.einsum("aibi->ab", cond.reshape(4, 81, 4, 81))
            total += reduced
    p_attempt = float(np.real(np.trace(total)))
    rho_q = total / p_attempt
    rho_q = _prep_dephase(rho_q, params.f_prep, 0, [2, 2])
    rho_q = _prep_dephase(rho_q, params.f_prep, 1, [2, 2])
    x_b = kron(I2, np.array([[0, 1], [1, 0]], dtype=complex))
    return x_b @ rho_q @ x_b.conj().T, p_attempt


class TestTransmissivity:
    def test_zero_length(self):
        assert transmissivity(0.0, 22.0) == 1.0

    def test_one_attenuation_length(self):
        assert transmissivity(22.0, 22.0) == pytest.approx(math.exp(-1), rel=1e-12)

    def test_table_value(self):
        assert transmissivity(50.0, 22.0) == pytest.approx(0.1030, abs=2e-4)


class TestSingleClick:
    def test_oracle_equality(self):
        for set_id in (1, 2):
            params = IP_PARAMETER_SETS[set_id]
            for s in (0.02, 0.05, 0.3):
                theta = math.acos(math.sqrt(s))
                for length in (0.0, 25.0, 50.0):
                    state, p = single_click_epg(theta, length, params)
                    ostate, op = single_click_oracle(theta, length, params)
                    assert abs(p - op) < 1e-10
                    assert np.max(np.abs(state - ostate)) < 1e-10

    def test_oracle_equality_no_noise_corner(self):
        params = IpParams(f_prep=1.0, dark_count_rate=0.0, delta_phi=0.0, p_em=1.0, p_pps=1.0)
        theta = math.acos(math.sqrt(0.1))
        state, p = single_click_epg(theta, 30.0, params)
        ostate, op = single_click_oracle(theta, 30.0, params)
        assert abs(p - op) < 1e-12
        assert np.max(np.abs(state - ostate)) < 1e-12

    def test_click_probability_closed_form(self):
        params = IpParams(dark_count_rate=0.0)
        s = 0.07
        x = s * params.arm_efficiency(25.0)
        _, p = single_click_epg(math.acos(math.sqrt(s)), 50.0, params)
        assert p == pytest.approx(2 * x * (1 - x) + x * x, rel=1e-12)

    def test_fidelity_probability_tradeoff(self):
        params = IP_PARAMETER_SETS[1]
        fs, ps = [], []
        for s in np.linspace(0.01, 0.3, 15):
            state, p = single_click_epg(math.acos(math.sqrt(s)), 50.0, params)
            fs.append(fidelity(state))
            ps.append(p)
        assert all(a > b for a, b in zip(fs, fs[1:]))
        assert all(a < b for a, b in zip(ps, ps[1:]))

    def test_state_invariants_at_corners(self):
        for set_id, params in IP_PARAMETER_SETS.items():
            for theta in (0.6, 1.2, 2.0, 3.0):
                for length in (0.0, 10.0, 100.0):
                    state, p = single_click_epg(theta, length, params)
                    validate_state(state)
                    assert 0.0 < p <= 1.0

    def test_dark_count_continuity(self):
        base = dict(p_em=0.8, p_pps=0.8)
        theta = math.acos(math.sqrt(0.05))
        s0, p0 = single_click_epg(theta, 50.0, IpParams(dark_count_rate=0.0, **base))
        s1, p1 = single_click_epg(theta, 50.0, IpParams(dark_count_rate=1e-8, **base))
        assert np.max(np.abs(s1 - s0)) < 1e-8
        assert abs(p1 - p0) < 1e-8

    def test_infeasible_when_no_photons_reach_the_station(self):
        params = IpParams(dark_count_rate=0.0, p_em=0.0)
        with pytest.raises(InfeasibleError):
            single_click_epg(1.2, 10.0, params)

    def test_asymmetric_arms(self):
        weak = IP_PARAMETER_SETS[1]
        strong = IP_PARAMETER_SETS[4]
        theta = math.acos(math.sqrt(0.05))
        state, p_mixed = single_click_epg(theta, 50.0, weak, strong)
        validate_state(state)
        _, p_weak = single_click_epg(theta, 50.0, weak, weak)
        _, p_strong = single_click_epg(theta, 50.0, strong, strong)
        assert p_weak < p_mixed < p_strong
        # Symmetric under exchanging the two nodes.
        swapped, p_swapped = single_click_epg(theta, 50.0, strong, weak)
        assert p_swapped == pytest.approx(p_mixed, rel=1e-12)

    def test_theta_grid(self):
        grid = theta_grid(300)
        assert len(grid) == 300
        assert grid[0] == pytest.approx(0.5)
        assert grid[-1] == pytest.approx(math.pi)

    def test_theta_validation(self):
        with pytest.raises(ValidationError):
            single_click_epg(0.0, 10.0, IpParams())


class TestDoubleClick:
    def test_lossless_limit(self):
        params = IpParams(
            f_prep=1.0, dark_count_rate=0.0, delta_phi=0.0, p_em=1.0, p_pps=1.0
        )
        state, p = double_click_epg(0.0, params)
        assert p == pytest.approx(0.5, abs=1e-12)
        assert fidelity(state) == pytest.approx(1.0, abs=1e-12)

    def test_oracle_equality(self):
        for set_id in (1, 2):
            params = IP_PARAMETER_SETS[set_id]
            for length in (0.0, 25.0, 50.0):
                state, p = double_click_epg(length, params)
                ostate, op = double_click_oracle(length, params)
                assert abs(p - op) < 1e-10
                assert np.max(np.abs(state - ostate)) < 1e-10

    def test_probability_closed_form(self):
        params = IpParams(dark_count_rate=0.0)
        eta = params.arm_efficiency(25.0)
        _, p = double_click_epg(50.0, params)
        assert p == pytest.approx(0.5 * eta * eta, rel=1e-12)

    def test_phase_insensitive(self):
        loose = IpParams(delta_phi=1.0)
        tight = IpParams(delta_phi=0.0)
        s1, p1 = double_click_epg(50.0, loose)
        s2, p2 = double_click_epg(50.0, tight)
        assert np.max(np.abs(s1 - s2)) < 1e-12
        assert p1 == pytest.approx(p2, rel=1e-12)

    def test_less_noisy_than_single_click_without_loss(self):
        params = IpParams(dark_count_rate=0.0, p_em=1.0, p_pps=1.0)
        dc_state, dc_p = double_click_epg(0.0, params)
        for s in np.linspace(0.05, 0.95, 10):
            sc_state, sc_p = single_click_epg(math.acos(math.sqrt(s)), 0.0, params)
            if sc_p >= dc_p:
                assert fidelity(dc_state) >= fidelity(sc_state) - 1e-12

    def test_state_invariants_at_corners(self):
        for params in IP_PARAMETER_SETS.values():
            for length in (0.0, 10.0, 100.0):
                state, p = double_click_epg(length, params)
                validate_state(state)
                assert 0.0 < p <= 0.5 + 1e-9


class TestParameterSets:
    def test_table_base_values(self):
        params = IP_PARAMETER_SETS[2]
        assert params.t_prep == 6e-6
        assert params.f_prep == 0.99
        assert params.dark_count_rate == 10.0
        assert params.l0 == 22.0
        assert params.n_ri == 1.44
        assert params.delta_phi == pytest.approx(math.radians(14.3))
        assert params.f_gates_deph == 1.0

    def test_table_set_columns(self):
        assert IP_PARAMETER_SETS[2].t_deph == 10.0
        assert IP_PARAMETER_SETS[2].t_depol == 10.0
        assert IP_PARAMETER_SETS[2].p_em == 0.9
        assert IP_PARAMETER_SETS[2].f_gates == 0.99
        assert IP_PARAMETER_SETS[4].f_gates == 0.999
        assert IP_PARAMETER_SETS[1].p_pps == 0.8

    def test_gate_noise_mapping(self):
        noise = IP_PARAMETER_SETS[3].gate_noise()
        assert noise.bsm_depol == 0.995
        assert noise.bsm_deph == 1.0
        assert noise.meas_depol == 0.995
