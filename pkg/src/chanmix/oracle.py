"""Exact references: superoperators, density matrices and exhaustive enumeration.

Nothing here shares code with the statevector kernels. Rotations are built by
matrix exponentials and gates act through dense local matrices contracted into
tensors, so agreement with the fast path is a genuine cross-check.

Superoperators use column stacking: ``vec(rho)`` stacks columns, and the
channel ``rho -> U rho U^dagger`` is the matrix ``conj(U) kron U``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np
from scipy.linalg import expm

from chanmix.circuits import CircuitSpec, ParamRotation
from chanmix.errors import CapacityError, UnsupportedError
from chanmix.mixture import (
    four_term_weights,
    gamma_default,
    gamma_general,
    two_term_unitary_weights,
)
from chanmix.pauli import PauliString
from chanmix.statevec import FixedGate

ENUMERATION_MAX_ROTATIONS = 8
DENSITY_MAX_QUBITS = 6
_ENUMERATION_MAX_AMPLITUDES = 1 << 24

_P = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_FIXED = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "S": np.diag([1, 1j]),
    "Sdg": np.diag([1, -1j]),
    "T": np.diag([1, np.exp(1j * math.pi / 4)]),
    "Tdg": np.diag([1, np.exp(-1j * math.pi / 4)]),
    "X": _P["X"],
    "Y": _P["Y"],
    "Z": _P["Z"],
    # control is the first (more significant) qubit
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}


def pauli_dense(label: str) -> np.ndarray:
    return reduce(np.kron, (_P[c] for c in label))


def rotation_dense(label: str, theta: float) -> np.ndarray:
    """exp(-i theta/2 P) by matrix exponential."""
    return expm(-0.5j * theta * pauli_dense(label))


# ---------------------------------------------------------------- superoperators


@dataclass(frozen=True)
class Superoperator:
    dim: int
    matrix: np.ndarray

    def __matmul__(self, other: Superoperator) -> Superoperator:
        """Composition: ``(a @ b)`` applies ``b`` first."""
        return Superoperator(self.dim, self.matrix @ other.matrix)

    def __add__(self, other: Superoperator) -> Superoperator:
        return Superoperator(self.dim, self.matrix + other.matrix)

    def scaled(self, w: float) -> Superoperator:
        return Superoperator(self.dim, w * self.matrix)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = rho.shape[0]
        return unvec(self.matrix @ vec(rho), d)

    def distance(self, other: Superoperator) -> float:
        """Largest absolute entry of the difference."""
        return float(np.max(np.abs(self.matrix - other.matrix)))


def vec(rho: np.ndarray) -> np.ndarray:
    return rho.reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape(d, d, order="F")


def _check_unitary(u: np.ndarray, tol: float = 1e-10) -> None:
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    if np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) > tol:
        raise ValueError("matrix is not unitary within 1e-10")


def channel_of_unitary(u) -> Superoperator:
    u = np.asarray(u, dtype=complex)
    _check_unitary(u)
    return Superoperator(u.shape[0] ** 2, np.kron(u.conj(), u))


def combine(terms) -> Superoperator:
    """sum_i w_i * channel(U_i) for (w, U) pairs."""
    terms = list(terms)
    out = channel_of_unitary(terms[0][1]).scaled(terms[0][0])
    for w, u in terms[1:]:
        out = out + channel_of_unitary(u).scaled(w)
    return out


def rotation_channel(theta: float, label: str = "Z") -> Superoperator:
    return channel_of_unitary(rotation_dense(label, theta))


def conjugation_channel(label: str) -> Superoperator:
    return channel_of_unitary(pauli_dense(label))


def pauli_transfer_matrix(ch: Superoperator) -> np.ndarray:
    """R_ij = Tr(P_i E(P_j)) / d over Pauli strings in lexicographic IXYZ order."""
    d = int(round(math.sqrt(ch.dim)))
    n = int(round(math.log2(d)))
    labels = ["".join(t) for t in product("IXYZ", repeat=n)]
    ps = [pauli_dense(lab) for lab in labels]
    return np.array([[np.trace(pi @ ch.apply(pj)).real / d for pj in ps] for pi in ps])


def twirl(u, label: str = "Z") -> Superoperator:
    """Uniform average of channel(sigma U sigma) over sigma in {I, P}."""
    sig = pauli_dense(label)
    u = np.asarray(u, dtype=complex)
    return combine([(0.5, u), (0.5, sig @ u @ sig)])


# ---------------------------------------------------------------- identities


def two_term_residual(theta: float, epsilon: float, label: str = "Z") -> float:
    """cos(e/2) R(t+e) - sin(e/2) R(t+e+pi) versus R(t), as operators."""
    recon = sum(w * rotation_dense(label, a) for a, w in two_term_unitary_weights(theta, epsilon))
    return float(np.max(np.abs(recon - rotation_dense(label, theta))))


def four_term_residual(theta: float, epsilon: float, label: str = "Z") -> float:
    recon = combine([(w, rotation_dense(label, a)) for a, w in four_term_weights(theta, epsilon)])
    return recon.distance(rotation_channel(theta, label))


def shift_rule_residual(theta: float, label: str = "Z") -> float:
    """R(t) = (1+cos t)/2 R(0) + sin t/2 [R(pi/2) - R(-pi/2)] + (1-cos t)/2 R(pi)."""
    c, s = math.cos(theta), math.sin(theta)
    terms = [(0.0, (1 + c) / 2), (math.pi / 2, s / 2), (-math.pi / 2, -s / 2), (math.pi, (1 - c) / 2)]
    recon = combine([(w, rotation_dense(label, a)) for a, w in terms])
    return recon.distance(rotation_channel(theta, label))


def cross_term_residual(theta: float, epsilon: float, label: str = "Z", as_printed: bool = False) -> float:
    """Check the cross terms left when the two-term operator identity is squared.

    With a = theta + epsilon, R(a)(.)R(a+pi)^dagger + R(a+pi)(.)R(a)^dagger equals
    channel(R(a+pi/2)) - channel(R(a-pi/2)). ``as_printed=True`` tests the
    sum instead of the difference, which does not hold.
    """
    a = theta + epsilon
    r0, r1 = rotation_dense(label, a), rotation_dense(label, a + math.pi)
    lhs = np.kron(r1.conj(), r0) + np.kron(r0.conj(), r1)
    sign = 1.0 if as_printed else -1.0
    rhs = rotation_channel(a + math.pi / 2, label).matrix + sign * rotation_channel(a - math.pi / 2, label).matrix
    return float(np.max(np.abs(lhs - rhs)))


def verify_mixture_identity(
    theta: float, epsilon: float, A: float | None = None, B: float | None = None, label: str = "Z"
) -> float:
    """Max-entry residual of sum_i g_i channel(R(theta + eps + a_i)) against channel(R(theta)).

    Uses the default offsets when A and B are omitted.
    """
    g = gamma_default(epsilon) if A is None else gamma_general(epsilon, A, B)
    recon = combine([(gi, rotation_dense(label, theta + epsilon + a)) for gi, a in zip(g.gammas, g.offsets)])
    return recon.distance(rotation_channel(theta, label))


# ---------------------------------------------------------------- circuits


@dataclass
class DensityMatrix:
    n_qubits: int
    matrix: np.ndarray

    @classmethod
    def zero(cls, n: int) -> DensityMatrix:
        m = np.zeros((1 << n, 1 << n), dtype=complex)
        m[0, 0] = 1.0
        return cls(n, m)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def expectation(self, o: PauliString) -> float:
        return float(np.trace(pauli_dense(o.label()) @ self.matrix).real)


def _local_axes(p: PauliString) -> tuple[tuple[int, ...], str]:
    qs = p.support
    return qs, "".join(p.axis_on(q) for q in qs)


def rotation_terms(op: ParamRotation) -> tuple[tuple[int, ...], list[tuple[float, np.ndarray]]]:
    """Signed terms (weight, local unitary) of one mitigated noisy rotation.

    Each term is a full noisy-gate realization: ideal rotation, error, mixture
    correction and twirl conjugation. Weights sum to one.
    """
    qs, axes = _local_axes(op.generator)
    e = op.error
    if e.kind == "uniform":
        raise UnsupportedError("the uniform model averages over a continuum and has no finite enumeration")
    gate = rotation_dense(axes, op.theta)
    if e.kind == "constant":
        gate = rotation_dense(axes, e.epsilon) @ gate
    elif e.kind == "unstructured":
        if len(qs) != 1:
            raise UnsupportedError("unstructured errors are only defined for single-qubit gates")
        u_err = rotation_dense("Z", e.eps_z) @ rotation_dense("Y", e.eps_y) @ rotation_dense("X", e.eps_x)
        gate = u_err @ gate
    if op.uses_mixture:
        g = gamma_default(e.mitigation_epsilon)
        branches = [(gi, rotation_dense(axes, a) @ gate) for gi, a in zip(g.gammas, g.offsets) if gi != 0]
    else:
        branches = [(1.0, gate)]
    if op.uses_twirl:
        sig = pauli_dense(axes)
        branches = [(0.5 * w, s @ u @ s) for w, u in branches for s in (np.eye(2), sig)]
    return qs, branches


def _fixed_local(op: FixedGate):
    return op.qubits, _FIXED[op.kind]


def _apply_local(t: np.ndarray, u: np.ndarray, qs, offset: int) -> np.ndarray:
    """Contract local matrix ``u`` into tensor axes ``offset + q`` for q in qs."""
    k = len(qs)
    ut = u.reshape((2,) * (2 * k))
    axes = [offset + q for q in qs]
    out = np.tensordot(ut, t, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def _density_apply(rho: np.ndarray, n: int, qs, u: np.ndarray) -> np.ndarray:
    rho = _apply_local(rho, u, qs, 0)
    return _apply_local(rho, u.conj(), qs, n)


def density_expectation(
    circuit: CircuitSpec, observable: PauliString | None = None, max_qubits: int = DENSITY_MAX_QUBITS
) -> float:
    """Tr[O Phi(|0><0|)] where each rotation acts as its signed mixture map."""
    n = circuit.n_qubits
    if n > max_qubits:
        raise CapacityError(f"density-matrix path is limited to {max_qubits} qubits, got {n}")
    observable = observable or PauliString.z_parity(n)
    rho = np.zeros((2,) * (2 * n), dtype=complex)
    rho[(0,) * (2 * n)] = 1.0
    for op in circuit.ops:
        if isinstance(op, FixedGate):
            rho = _density_apply(rho, n, *_fixed_local(op))
            continue
        qs, terms = rotation_terms(op)
        rho = sum(w * _density_apply(rho, n, qs, u) for w, u in terms)
    dm = DensityMatrix(n, rho.reshape(1 << n, 1 << n))
    return dm.expectation(observable)


def enumerate_expectation(circuit: CircuitSpec, observable: PauliString | None = None) -> float:
    """sum over every branch and twirl assignment of (product of weights) * <O>.

    All assignments are carried at once as a stack of statevectors, so the
    cost is (terms per rotation)^nu states of size 2^n.
    """
    n = circuit.n_qubits
    nu = circuit.nu
    if nu > ENUMERATION_MAX_ROTATIONS:
        raise CapacityError(f"enumeration is limited to {ENUMERATION_MAX_ROTATIONS} rotations, got {nu}")
    observable = observable or PauliString.z_parity(n)
    psi = np.zeros((1,) + (2,) * n, dtype=complex)
    psi[(0,) * (n + 1)] = 1.0
    weights = np.ones(1)
    for op in circuit.ops:
        if isinstance(op, FixedGate):
            qs, u = _fixed_local(op)
            psi = _apply_local(psi, u, qs, 1)
            continue
        qs, terms = rotation_terms(op)
        if psi.shape[0] * len(terms) << n > _ENUMERATION_MAX_AMPLITUDES:
            raise CapacityError("enumeration would exceed the amplitude budget")
        psi = np.concatenate([_apply_local(psi, u, qs, 1) for _, u in terms])
        weights = np.concatenate([w * weights for w, _ in terms])
    flat = psi.reshape(len(weights), -1)
    vals = np.einsum("ki,ij,kj->k", flat.conj(), pauli_dense(observable.label()), flat).real
    return math.fsum((weights * vals).tolist())


def exact_mixture_expectation(
    circuit: CircuitSpec, observable: PauliString | None = None, method: str = "density"
) -> float:
    """Expected value of the weighted estimator, with no sampling.

    Args:
        method: ``"enumerate"`` (nu <= 8), ``"density"`` (n <= 6) or
            ``"both"``, which runs the two and raises ``ArithmeticError`` if
            they differ by more than 1e-10.
    """
    if method == "enumerate":
        return enumerate_expectation(circuit, observable)
    if method == "density":
        return density_expectation(circuit, observable)
    if method == "both":
        a = enumerate_expectation(circuit, observable)
        b = density_expectation(circuit, observable)
        if abs(a - b) > 1e-10:
            raise ArithmeticError(f"enumeration {a!r} and density path {b!r} disagree")
        return a
    raise ValueError(f"unknown method {method!r}")


def ideal_expectation(circuit: CircuitSpec, observable: PauliString | None = None) -> float:
    """Dense unitary evolution of the error-free circuit."""
    n = circuit.n_qubits
    observable = observable or PauliString.z_parity(n)
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for op in circuit.ops:
        if isinstance(op, FixedGate):
            qs, u = _fixed_local(op)
        else:
            qs, axes = _local_axes(op.generator)
            u = rotation_dense(axes, op.theta)
        psi = _apply_local(psi, u, qs, 0)
    v = psi.reshape(-1)
    return float(np.vdot(v, pauli_dense(observable.label()) @ v).real)


# ---------------------------------------------------------------- battery


def run_checks(n_random: int = 50, seed: int = 0) -> dict[str, float]:
    """Worst residual of every identity over random angles, for the CLI."""
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(-math.pi, math.pi, n_random)
    epss = rng.uniform(-0.3, 0.3, n_random)
    out = {
        "two_term_operator": max(two_term_residual(t, e) for t, e in zip(thetas, epss)),
        "four_term_channel": max(four_term_residual(t, e) for t, e in zip(thetas, epss)),
        "three_term_mixture": max(verify_mixture_identity(t, e) for t, e in zip(thetas, epss)),
        "shift_rule": max(shift_rule_residual(t) for t in thetas),
        "cross_terms": max(cross_term_residual(t, e) for t, e in zip(thetas, epss)),
    }
    return out
