"""Exact two-qubit density-matrix algebra.

All states are 4x4 density matrices in the computational basis
|00>, |01>, |10>, |11>, tracked in the frame where the target maximally
entangled state is |Phi+> = (|00> + |11>)/sqrt(2).  Noise channels take a
"keep" parameter: the weight of the identity branch, so keep=1 is the
identity channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateDistillationError, ValidationError

HERMITICITY_ATOL = 1e-12
TRACE_ATOL = 1e-12
PSD_ATOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
PSI_MINUS = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)

BELL_BASIS = (PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS)

# Pauli (on the right-hand qubit) mapping |Phi+> onto each Bell vector,
# i.e. BELL_BASIS[k] = (I (x) BELL_CORRECTIONS[k]) |Phi+> up to phase.
BELL_CORRECTIONS = (I2, Z, X, X @ Z)

# DEJMPS pre-rotations: sqrt(-iX) on one side, sqrt(+iX) on the other.
_RX_PLUS = (I2 - 1j * X) / np.sqrt(2)
_RX_MINUS = (I2 + 1j * X) / np.sqrt(2)

_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


@dataclass(frozen=True)
class GateNoiseParams:
    """Keep-parameters of the local gate and measurement noise channels."""

    bsm_depol: float = 1.0
    bsm_deph: float = 1.0
    cnot_depol: float = 1.0
    cnot_deph: float = 1.0
    meas_depol: float = 1.0

    def __post_init__(self):
        for name in ("bsm_depol", "bsm_deph", "cnot_depol", "cnot_deph", "meas_depol"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name}={value} outside [0, 1]")


NOISELESS = GateNoiseParams()


def validate_state(rho: np.ndarray) -> np.ndarray:
    """Check the two-qubit state invariants and return the state unchanged."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValidationError(f"expected a 4x4 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_ATOL:
        raise ValidationError("state is not Hermitian")
    if abs(rho.trace() - 1.0) > TRACE_ATOL:
        raise ValidationError(f"trace {rho.trace()} != 1")
    if np.linalg.eigvalsh(rho).min() < -PSD_ATOL:
        raise ValidationError("state is not positive semidefinite")
    return rho


def _symmetrize(rho: np.ndarray) -> np.ndarray:
    return (rho + rho.conj().T) / 2.0


def _check_keep(keep: float):
    if not 0.0 <= keep <= 1.0:
        raise ValidationError(f"keep={keep} outside [0, 1]")


def fidelity(rho: np.ndarray) -> float:
    """Overlap <Phi+|rho|Phi+> with the target Bell state."""
    return float(np.real(PHI_PLUS.conj() @ rho @ PHI_PLUS))


def werner(f: float) -> np.ndarray:
    """Werner state: fidelity-f mixture of |Phi+> with white noise."""
    phi = np.outer(PHI_PLUS, PHI_PLUS.conj())
    return f * phi + (1.0 - f) / 3.0 * (np.eye(4, dtype=complex) - phi)


def bell_diagonal(a: float, b: float, c: float, d: float) -> np.ndarray:
    """State diagonal in the Bell basis with weights (Phi+, Phi-, Psi+, Psi-)."""
    out = np.zeros((4, 4), dtype=complex)
    for w, vec in zip((a, b, c, d), BELL_BASIS):
        out += w * np.outer(vec, vec.conj())
    return out


def bell_diagonal_weights(rho: np.ndarray) -> np.ndarray:
    """Diagonal of rho in the Bell basis, ordered (Phi+, Phi-, Psi+, Psi-)."""
    return np.array([np.real(v.conj() @ rho @ v) for v in BELL_BASIS])


def _qubit_indices(side) -> tuple[int, ...]:
    if side in (0, 1):
        return (side,)
    if side == "both":
        return (0, 1)
    raise ValidationError(f"side must be 0, 1 or 'both', got {side!r}")


def _partial_trace(rho: np.ndarray, qubit: int) -> np.ndarray:
    """Trace out one qubit of a two-qubit state."""
    t = rho.reshape(2, 2, 2, 2)
    if qubit == 0:
        return t[0, :, 0, :] + t[1, :, 1, :]
    return t[:, 0, :, 0] + t[:, 1, :, 1]


def _kron44(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """4x4 (x) 4x4 tensor product without np.kron's generic overhead."""
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(16, 16)


def _depolarize_raw(rho: np.ndarray, keep: float, qubit: int) -> np.ndarray:
    reduced = _partial_trace(rho, qubit)
    mixed = np.zeros((4, 4), dtype=complex)
    if qubit == 0:
        mixed[:2, :2] = reduced / 2.0
        mixed[2:, 2:] = reduced / 2.0
    else:
        mixed[0::2, 0::2] = reduced / 2.0
        mixed[1::2, 1::2] = reduced / 2.0
    return keep * rho + (1.0 - keep) * mixed


def depolarize(rho: np.ndarray, keep: float, side=0) -> np.ndarray:
    """Replace the chosen qubit(s) by I/2 with probability 1-keep."""
    _check_keep(keep)
    out = np.asarray(rho, dtype=complex)
    for qubit in _qubit_indices(side):
        out = _depolarize_raw(out, keep, qubit)
    return _symmetrize(out)


def _apply_on_qubit(rho: np.ndarray, op: np.ndarray, qubit: int) -> np.ndarray:
    full = np.kron(op, I2) if qubit == 0 else np.kron(I2, op)
    return full @ rho @ full.conj().T


# Sign patterns of Z rho Z per qubit, as elementwise masks.
_Z_SIGNS = (
    np.outer([1, 1, -1, -1], [1, 1, -1, -1]).astype(float),
    np.outer([1, -1, 1, -1], [1, -1, 1, -1]).astype(float),
)


def _dephase_raw(rho: np.ndarray, keep: float, qubit: int) -> np.ndarray:
    return rho * (((1.0 + keep) + (1.0 - keep) * _Z_SIGNS[qubit]) / 2.0)


def dephase(rho: np.ndarray, keep: float, side=0) -> np.ndarray:
    """Z-dephasing with Kraus {sqrt((1+keep)/2) I, sqrt((1-keep)/2) Z}."""
    _check_keep(keep)
    out = np.asarray(rho, dtype=complex)
    for qubit in _qubit_indices(side):
        out = _dephase_raw(out, keep, qubit)
    return _symmetrize(out)


def storage_channel(
    rho: np.ndarray,
    depol_left: float,
    depol_right: float,
    deph_left: float,
    deph_right: float,
) -> np.ndarray:
    """Per-qubit depolarizing and dephasing storage decay, applied as one
    composite (the four factors commute)."""
    out = rho
    if depol_left != 1.0:
        out = _depolarize_raw(out, depol_left, 0)
    if depol_right != 1.0:
        out = _depolarize_raw(out, depol_right, 1)
    if deph_left != 1.0:
        out = _dephase_raw(out, deph_left, 0)
    if deph_right != 1.0:
        out = _dephase_raw(out, deph_right, 1)
    return _symmetrize(out)


def _embed_single(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    mats = [op if k == qubit else I2 for k in range(n)]
    full = mats[0]
    for m in mats[1:]:
        full = np.kron(full, m)
    return full


def _conj_superop(full_op: np.ndarray) -> np.ndarray:
    """Row-major-vec superoperator of X -> E X E^dag."""
    return np.kron(full_op, full_op.conj())


def _depol_superop(qubit: int, n: int, keep: float) -> np.ndarray:
    dim = (2**n) ** 2
    acc = np.zeros((dim, dim), dtype=complex)
    for pauli in (I2, X, Y, Z):
        acc += _conj_superop(_embed_single(pauli, qubit, n))
    return keep * np.eye(dim) + (1.0 - keep) / 4.0 * acc


def _deph_superop(qubit: int, n: int, keep: float) -> np.ndarray:
    dim = (2**n) ** 2
    zsup = _conj_superop(_embed_single(Z, qubit, n))
    return (1.0 + keep) / 2.0 * np.eye(dim) + (1.0 - keep) / 2.0 * zsup


def _embed_two_qubit(op: np.ndarray, q0: int, q1: int, n: int = 4) -> np.ndarray:
    """Embed a two-qubit operator acting on qubits (q0, q1) of an n-qubit space."""
    t = op.reshape(2, 2, 2, 2)
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits_c = [(col >> (n - 1 - k)) & 1 for k in range(n)]
        for a in range(2):
            for b in range(2):
                amp = t[a, b, bits_c[q0], bits_c[q1]]
                if amp == 0:
                    continue
                bits_r = list(bits_c)
                bits_r[q0] = a
                bits_r[q1] = b
                row = sum(bit << (n - 1 - k) for k, bit in enumerate(bits_r))
                full[row, col] += amp
    return full


@lru_cache(maxsize=256)
def _swap_superop(noise: GateNoiseParams) -> np.ndarray:
    """16x256 map taking vec(a (x) b) to the corrected post-swap pair.

    Joint qubit order (i, j1, j2, k); gate noise on the measured qubits
    j1, j2, then the Bell projection with outcome-dependent Pauli
    correction of the k qubit, summed over outcomes.
    """
    proj_sum = np.zeros((16, 256), dtype=complex)
    for bell, corr in zip(BELL_BASIS, BELL_CORRECTIONS):
        # <bell| on (j1, j2) with I on i and k, then the correction on k.
        k_op = np.kron(np.kron(I2, bell.conj().reshape(1, 4)), I2)
        q_op = np.kron(I2, corr) @ k_op
        proj_sum += _conj_superop(q_op)
    sup = proj_sum
    for qubit in (1, 2):
        if noise.bsm_deph != 1.0:
            sup = sup @ _deph_superop(qubit, 4, noise.bsm_deph)
        if noise.bsm_depol != 1.0:
            sup = sup @ _depol_superop(qubit, 4, noise.bsm_depol)
    return sup


def bell_swap(
    a: np.ndarray, b: np.ndarray, noise: GateNoiseParams = NOISELESS
) -> np.ndarray:
    """Entanglement swap: Bell-measure the two middle qubits and average
    over the Pauli-corrected outcomes.

    `a` holds the pair (Q_i, Q_j), `b` the pair (Q_j, Q_k); the returned
    state is the pair (Q_i, Q_k) in the |Phi+> frame.  Gate noise acts on
    the two measured qubits before the projection; the matter-qubit BSM
    itself is deterministic.
    """
    joint = _kron44(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
    out = (_swap_superop(noise) @ joint.ravel()).reshape(4, 4)
    return _symmetrize(out)


@lru_cache(maxsize=256)
def _dejmps_superop(noise_a: GateNoiseParams, noise_b: GateNoiseParams) -> np.ndarray:
    """16x256 map taking vec(a (x) b) to the unnormalized kept pair
    post-selected on equal target-measurement outcomes.

    Joint qubit order (A1, B1, A2, B2): pre-rotations, CNOTs A1->A2 and
    B1->B2, gate noise on all four qubits, measurement depolarisation on
    the targets, projection onto equal outcomes.
    """
    rot = np.kron(np.kron(_RX_PLUS, _RX_MINUS), np.kron(_RX_PLUS, _RX_MINUS))
    unitary = _embed_two_qubit(_CNOT, 1, 3) @ _embed_two_qubit(_CNOT, 0, 2) @ rot
    meas = np.zeros((16, 256), dtype=complex)
    for outcome in (0, 1):
        vec = np.zeros(2)
        vec[outcome] = 1.0
        k_op = np.kron(np.eye(4), np.kron(vec.reshape(1, 2), vec.reshape(1, 2)))
        meas += _conj_superop(k_op)
    sup = meas
    sup = sup @ _depol_superop(2, 4, noise_a.meas_depol)
    sup = sup @ _depol_superop(3, 4, noise_b.meas_depol)
    for qubit, noise in ((0, noise_a), (2, noise_a), (1, noise_b), (3, noise_b)):
        if noise.cnot_deph != 1.0:
            sup = sup @ _deph_superop(qubit, 4, noise.cnot_deph)
        if noise.cnot_depol != 1.0:
            sup = sup @ _depol_superop(qubit, 4, noise.cnot_depol)
    return sup @ _conj_superop(unitary)


def dejmps(
    a: np.ndarray,
    b: np.ndarray,
    noise_a: GateNoiseParams = NOISELESS,
    noise_b: GateNoiseParams | None = None,
) -> tuple[np.ndarray, float]:
    """DEJMPS distillation of pair `b` into pair `a`.

    Pair `a` is (A1, B1), pair `b` is (A2, B2).  Pre-rotations, CNOTs
    (A1->A2 and B1->B2) with local gate noise on all four qubits,
    measurement depolarisation on the targets, post-selection on equal
    computational-basis outcomes.  Returns (kept state, success probability).

    `noise_a` describes node A's gates, `noise_b` node B's; a single
    argument covers both sides.
    """
    if noise_b is None:
        noise_b = noise_a
    joint = _kron44(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
    kept = (_dejmps_superop(noise_a, noise_b) @ joint.ravel()).reshape(4, 4)
    p = float(np.real(np.trace(kept)))
    if p <= 1e-15:
        raise DegenerateDistillationError("distillation success probability is zero")
    return _symmetrize(kept / p), p


_BASIS_VECTORS = {
    "Z": (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
    "X": (
        np.array([1, 1], dtype=complex) / np.sqrt(2),
        np.array([1, -1], dtype=complex) / np.sqrt(2),
    ),
    "Y": (
        np.array([1, 1j], dtype=complex) / np.sqrt(2),
        np.array([1, -1j], dtype=complex) / np.sqrt(2),
    ),
}


def measure_noisy(
    rho: np.ndarray, basis: str, noise: GateNoiseParams = NOISELESS
) -> np.ndarray:
    """Joint outcome distribution of measuring both qubits in one basis.

    Measurement depolarisation is applied to each qubit first.  Returns a
    2x2 array p[o1, o2] over the +/- outcomes of the two sides.
    """
    if basis not in _BASIS_VECTORS:
        raise ValidationError(f"basis must be one of X, Y, Z, got {basis!r}")
    rho = depolarize(np.asarray(rho, dtype=complex), noise.meas_depol, side="both")
    v0, v1 = _BASIS_VECTORS[basis]
    probs = np.empty((2, 2))
    for o1, u in enumerate((v0, v1)):
        for o2, w in enumerate((v0, v1)):
            vec = np.kron(u, w)
            probs[o1, o2] = max(float(np.real(vec.conj() @ rho @ vec)), 0.0)
    return probs / probs.sum()
