"""Dense statevector engine.

The public functions take and return :class:`StateVector` values. The
underscore-free array kernels (``rotate``, ``apply_1q``, ``apply_monomial``)
operate on raw amplitude arrays whose last axis has length ``2**n`` and whose
leading axes, if any, index independent states. The estimator uses them to
evolve many sampled circuit instances at once.

Amplitude index bit ``n - 1 - q`` belongs to qubit ``q`` (qubit 0 is the most
significant bit). Norms are never renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from chanmix.errors import CapacityError
from chanmix.pauli import PauliString

# 2**24 complex128 amplitudes is 256 MiB.
MAX_QUBITS = 24

_ONE_QUBIT = ("H", "S", "Sdg", "T", "Tdg", "X", "Y", "Z")
_TWO_QUBIT = ("CNOT",)
GATE_KINDS = _ONE_QUBIT + _TWO_QUBIT

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_PHASES = {
    "S": 1j,
    "Sdg": -1j,
    "T": complex(math.cos(math.pi / 4), math.sin(math.pi / 4)),
    "Tdg": complex(math.cos(math.pi / 4), -math.sin(math.pi / 4)),
    "Z": -1.0 + 0j,
}


@dataclass(frozen=True)
class FixedGate:
    """An unparameterized gate: H, S, Sdg, T, Tdg, X, Y, Z on one qubit or CNOT(control, target)."""

    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind in _ONE_QUBIT:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} acts on exactly one qubit, got {self.qubits}")
        elif self.kind in _TWO_QUBIT:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"CNOT needs two distinct qubits, got {self.qubits}")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if min(self.qubits) < 0:
            raise ValueError(f"negative qubit index in {self.qubits}")


@dataclass(frozen=True)
class PauliRotation:
    """exp(-i theta/2 P) with a concrete angle."""

    generator: PauliString
    theta: float


@dataclass(eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())


def check_capacity(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n}")


def init_zero(n: int) -> StateVector:
    check_capacity(n)
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    return StateVector(n, amps)


def from_amplitudes(amplitudes) -> StateVector:
    amps = np.asarray(amplitudes, dtype=complex)
    n = int(round(math.log2(amps.size)))
    if amps.ndim != 1 or amps.size != 1 << n:
        raise ValueError("amplitude count must be a power of two")
    check_capacity(n)
    return StateVector(n, amps.copy())


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    check_capacity(n)
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, amps / np.linalg.norm(amps))


# ---------------------------------------------------------------- tables


@lru_cache(maxsize=4096)
def _bit_signs(n: int, index_mask: int) -> np.ndarray:
    """(-1)^popcount(c & mask) for every basis index c."""
    idx = np.arange(1 << n, dtype=np.int64)
    parity = np.bitwise_count(idx & index_mask) & 1
    out = 1.0 - 2.0 * parity
    out.setflags(write=False)
    return out


@lru_cache(maxsize=4096)
def pauli_tables(p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """(perm, phase) with (P psi)[c] = phase[c] * psi[perm[c]]."""
    n = p.n_qubits
    x, z = p.index_masks
    idx = np.arange(1 << n, dtype=np.int64)
    perm = idx ^ x
    phase = (1j ** (p.n_y % 4)) * _bit_signs(n, z)[perm]
    perm.setflags(write=False)
    phase.setflags(write=False)
    return perm, phase


def _gate_bit(n: int, q: int) -> int:
    if not 0 <= q < n:
        raise ValueError(f"qubit {q} out of range for {n} qubits")
    return 1 << (n - 1 - q)


@lru_cache(maxsize=4096)
def gate_table(kind: str, qubits: tuple[int, ...], n: int):
    """Either ("1q", qubit, 2x2 matrix) or ("mono", perm, phase) for a fixed gate."""
    for q in qubits:
        _gate_bit(n, q)
    if kind == "H":
        return ("1q", qubits[0], _H)
    if kind in ("X", "Y"):
        perm, phase = pauli_tables(PauliString.single(kind, qubits[0], n))
        return ("mono", perm, phase)
    idx = np.arange(1 << n, dtype=np.int64)
    if kind in _PHASES:
        bit = _gate_bit(n, qubits[0])
        phase = np.where(idx & bit, _PHASES[kind], 1.0 + 0j)
        return ("mono", None, phase)
    if kind == "CNOT":
        cbit, tbit = _gate_bit(n, qubits[0]), _gate_bit(n, qubits[1])
        perm = np.where(idx & cbit, idx ^ tbit, idx)
        return ("mono", perm, None)
    raise ValueError(f"unknown gate kind {kind!r}")


def one_qubit_matrix(kind: str) -> np.ndarray:
    """2x2 unitary of a single-qubit fixed gate."""
    if kind == "H":
        return _H.copy()
    if kind in ("X", "Y"):
        return PauliString.from_label(kind).matrix()
    if kind in _PHASES:
        return np.diag([1.0, _PHASES[kind]]).astype(complex)
    raise ValueError(f"{kind!r} is not a single-qubit gate")


# ---------------------------------------------------------------- kernels


def _angle_terms(theta, lead_shape):
    half = np.asarray(theta, dtype=float) * 0.5
    c, s = np.cos(half), np.sin(half)
    if c.ndim:
        if c.shape != lead_shape:
            raise ValueError(f"angle shape {c.shape} does not match batch shape {lead_shape}")
        c, s = c[..., None], s[..., None]
    return c, s


def rotate(amps: np.ndarray, p: PauliString, theta) -> np.ndarray:
    """exp(-i theta/2 P) applied as cos(theta/2) psi - i sin(theta/2) P psi."""
    c, s = _angle_terms(theta, amps.shape[:-1])
    if p.is_identity:
        return amps * (c - 1j * s)
    if p.is_diagonal:
        signs = _bit_signs(p.n_qubits, p.index_masks[1])
        return amps * (c - 1j * s * signs)
    perm, phase = pauli_tables(p)
    return c * amps - (1j * s) * (phase * amps[..., perm])


def apply_pauli_array(amps: np.ndarray, p: PauliString) -> np.ndarray:
    perm, phase = pauli_tables(p)
    return phase * amps[..., perm]


def apply_monomial(amps: np.ndarray, perm, phase) -> np.ndarray:
    out = amps if perm is None else amps[..., perm]
    return out if phase is None else out * phase


def apply_1q(amps: np.ndarray, n: int, q: int, m: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix to qubit ``q``; ``m`` may carry the same leading axes as ``amps``."""
    lead = amps.shape[:-1]
    rest = 1 << (n - 1 - q)
    m = np.asarray(m)
    # Batched matmul is fastest unless the trailing block is tiny.
    if m.ndim > 2 and rest == 1:
        v = amps.reshape(lead + (1 << q, 2))
        return np.matmul(v, np.swapaxes(m, -1, -2)).reshape(amps.shape)
    v = amps.reshape(lead + (1 << q, 2, rest))
    if m.ndim > 2 and rest >= 8:
        return np.matmul(m[..., None, :, :], v).reshape(amps.shape)
    a0, a1 = v[..., 0, :], v[..., 1, :]
    if m.ndim > 2:
        m = m[..., None, None, :, :]
    out = np.empty_like(v)
    out[..., 0, :] = m[..., 0, 0] * a0 + m[..., 0, 1] * a1
    out[..., 1, :] = m[..., 1, 0] * a0 + m[..., 1, 1] * a1
    return out.reshape(amps.shape)


def apply_fixed_array(amps: np.ndarray, n: int, g: FixedGate) -> np.ndarray:
    table = gate_table(g.kind, g.qubits, n)
    if table[0] == "1q":
        return apply_1q(amps, n, table[1], table[2])
    return apply_monomial(amps, table[1], table[2])


# ---------------------------------------------------------------- state API


def _check_size(state: StateVector, p: PauliString) -> None:
    if p.n_qubits != state.n_qubits:
        raise ValueError(f"size mismatch: state has {state.n_qubits} qubits, Pauli has {p.n_qubits}")


def apply_pauli_rotation(state: StateVector, p: PauliString, theta: float) -> StateVector:
    _check_size(state, p)
    return StateVector(state.n_qubits, rotate(state.amplitudes, p, float(theta)))


def apply_pauli(state: StateVector, p: PauliString) -> StateVector:
    """P|psi> including the i factors carried by Y."""
    _check_size(state, p)
    return StateVector(state.n_qubits, apply_pauli_array(state.amplitudes, p))


def apply_fixed_gate(state: StateVector, g: FixedGate) -> StateVector:
    return StateVector(state.n_qubits, apply_fixed_array(state.amplitudes, state.n_qubits, g))


def apply_gate(state: StateVector, op) -> StateVector:
    if isinstance(op, FixedGate):
        return apply_fixed_gate(state, op)
    if isinstance(op, PauliRotation):
        return apply_pauli_rotation(state, op.generator, op.theta)
    raise TypeError(f"not a concrete gate: {op!r}")


def run_ops(state: StateVector, ops) -> StateVector:
    for op in ops:
        state = apply_gate(state, op)
    return state


def expectation_pauli(state: StateVector, o: PauliString) -> float:
    """<psi|O|psi>; raises if the imaginary residue exceeds 1e-10."""
    _check_size(state, o)
    val = np.vdot(state.amplitudes, apply_pauli_array(state.amplitudes, o))
    if abs(val.imag) > 1e-10:
        raise ArithmeticError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


def diagonal_signs(o: PauliString) -> np.ndarray:
    """Eigenvalue of a Z-type observable on each basis state."""
    if not o.is_diagonal:
        raise ValueError(f"{o.label()} is not diagonal in the computational basis")
    return _bit_signs(o.n_qubits, o.index_masks[1])


def sample_indices(probs: np.ndarray, rng: np.random.Generator, shots: int) -> np.ndarray:
    """Draw basis indices from an (unnormalized) probability vector by inverse CDF."""
    cdf = np.cumsum(probs)
    u = rng.random(shots) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), probs.size - 1)


def sample_z_parity(state: StateVector, rng: np.random.Generator) -> int:
    """One measurement of Z on every qubit, reported as +1 or -1."""
    return int(sample_parities(state, PauliString.z_parity(state.n_qubits), rng, 1)[0])


def sample_parities(
    state: StateVector, o: PauliString, rng: np.random.Generator, shots: int
) -> np.ndarray:
    _check_size(state, o)
    signs = diagonal_signs(o)
    idx = sample_indices(np.abs(state.amplitudes) ** 2, rng, shots)
    return signs[idx].astype(np.int8)
