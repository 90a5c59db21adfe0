"""Shared test fixtures and independent reference constructions.

The oracles here recompute protocol outputs through explicit joint-space
matrix algebra (full Kronecker products, explicit projectors, matrix
exponentials for beamsplitters), deliberately avoiding the compact
bookkeeping used by the package itself.
"""

import math

import numpy as np
import pytest

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)

PHI_P = (np.kron(KET0, KET0) + np.kron(KET1, KET1)) / math.sqrt(2)
PHI_M = (np.kron(KET0, KET0) - np.kron(KET1, KET1)) / math.sqrt(2)
PSI_P = (np.kron(KET0, KET1) + np.kron(KET1, KET0)) / math.sqrt(2)
PSI_M = (np.kron(KET0, KET1) - np.kron(KET1, KET0)) / math.sqrt(2)


def kron(*ops):
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def random_two_qubit_state(rng):
    """Random full-rank valid density matrix."""
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def random_bell_diagonal(rng):
    w = rng.dirichlet(np.ones(4))
    out = np.zeros((4, 4), dtype=complex)
    for weight, vec in zip(w, (PHI_P, PHI_M, PSI_P, PSI_M)):
        out += weight * np.outer(vec, vec.conj())
    return out


def embed(op, position, n_qubits):
    ops = [I2] * n_qubits
    ops[position] = op
    return kron(*ops)


def depolarize_oracle(rho, keep, position, n_qubits):
    acc = np.zeros_like(rho)
    for pauli in (I2, X, Y, Z):
        full = embed(pauli, position, n_qubits)
        acc += full @ rho @ full.conj().T
    return keep * rho + (1 - keep) / 4 * acc


def dephase_oracle(rho, keep, position, n_qubits):
    full = embed(Z, position, n_qubits)
    return (1 + keep) / 2 * rho + (1 - keep) / 2 * full @ rho @ full.conj().T


def bell_swap_oracle(a, b, noise=None):
    """Reference entanglement swap on the explicit 16x16 joint state.

    Qubit order (i, j1, j2, k); Bell projectors written out; outcomes
    corrected to the |Phi+> frame by the matching Pauli on qubit k.
    """
    joint = np.kron(a, b)
    if noise is not None:
        for q in (1, 2):
            joint = depolarize_oracle(joint, noise.bsm_depol, q, 4)
            joint = dephase_oracle(joint, noise.bsm_deph, q, 4)
    corrections = {0: I2, 1: Z, 2: X, 3: X @ Z}
    out = np.zeros((4, 4), dtype=complex)
    for idx, bell in enumerate((PHI_P, PHI_M, PSI_P, PSI_M)):
        proj = kron(I2, np.outer(bell, bell.conj()), I2)
        measured = proj @ joint @ proj
        # Trace out the measured middle pair.
        t = measured.reshape(2, 4, 2, 2, 4, 2)
        cond = np.einsum("imjkml->ijkl", t).reshape(4, 4)
        corr = kron(I2, corrections[idx])
        out += corr @ cond @ corr.conj().T
    return out


def dejmps_oracle(a, b, noise_a=None, noise_b=None):
    """Reference DEJMPS round on the explicit 16x16 joint state.

    Qubit order (A1, B1, A2, B2); sqrt(-iX) on A-side qubits, sqrt(+iX) on
    B-side, CNOTs A1->A2 and B1->B2, gate noise on all four qubits,
    measurement depolarisation on the targets, kept on equal outcomes.
    """
    if noise_b is None:
        noise_b = noise_a
    rx_p = (I2 - 1j * X) / math.sqrt(2)
    rx_m = (I2 + 1j * X) / math.sqrt(2)
    joint = np.kron(a, b)
    rot = kron(rx_p, rx_m, rx_p, rx_m)
    joint = rot @ joint @ rot.conj().T

    def cnot(control, target):
        p0 = embed(np.outer(KET0, KET0.conj()), control, 4)
        p1 = embed(np.outer(KET1, KET1.conj()), control, 4)
        return p0 + p1 @ embed(X, target, 4)

    for gate in (cnot(0, 2), cnot(1, 3)):
        joint = gate @ joint @ gate.conj().T
    if noise_a is not None:
        for q in (0, 2):
            joint = depolarize_oracle(joint, noise_a.cnot_depol, q, 4)
            joint = dephase_oracle(joint, noise_a.cnot_deph, q, 4)
        for q in (1, 3):
            joint = depolarize_oracle(joint, noise_b.cnot_depol, q, 4)
            joint = dephase_oracle(joint, noise_b.cnot_deph, q, 4)
        joint = depolarize_oracle(joint, noise_a.meas_depol, 2, 4)
        joint = depolarize_oracle(joint, noise_b.meas_depol, 3, 4)
    kept = np.zeros((4, 4), dtype=complex)
    for outcome in (KET0, KET1):
        proj = kron(I2, I2, np.outer(outcome, outcome.conj()), np.outer(outcome, outcome.conj()))
        measured = proj @ joint @ proj
        t = measured.reshape(4, 4, 4, 4)
        kept += np.einsum("imjm->ij", t)
    p = float(np.real(np.trace(kept)))
    state = kept / p if p > 0 else kept
    return state, p


# -- truncated Fock-space machinery for the photonic oracles -----------------


def ladder(dim):
    """Annihilation operator on a dim-level Fock space."""
    a = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        a[n - 1, n] = math.sqrt(n)
    return a


def loss_kraus_general(eta, dim):
    """Pure-loss Kraus operators K_k on a dim-level Fock space."""
    ops = []
    for k in range(dim):
        op = np.zeros((dim, dim), dtype=complex)
        for n in range(k, dim):
            op[n - k, n] = math.sqrt(math.comb(n, k) * eta ** (n - k) * (1 - eta) ** k)
        ops.append(op)
    return ops


def beamsplitter_unitary(dim):
    """50:50 beamsplitter on two dim-level modes via the matrix exponential
    of (a^dag b - a b^dag) pi/4; output mode 1 annihilates (a+b)/sqrt(2)."""
    from scipy.linalg import expm

    a = np.kron(ladder(dim), np.eye(dim))
    b = np.kron(np.eye(dim), ladder(dim))
    return expm(math.pi / 4 * (a.conj().T @ b - a @ b.conj().T))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
