"""Phase-free Pauli strings in the binary symplectic (x, z) representation.

Qubit ``q`` carries X when bit ``q`` of ``x_mask`` is set, Z when bit ``q`` of
``z_mask`` is set, and Y when both are. Text labels list qubit 0 first, so
``"XZ"`` is X on qubit 0 and Z on qubit 1.

Amplitude indices use the opposite (big-endian) convention: qubit 0 is the most
significant bit of a basis index. This makes ``kron(P_0, P_1, ...)`` the dense
matrix of a string, which the oracle relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np

from chanmix.errors import UnsupportedError

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        full = (1 << self.n_qubits) - 1
        if self.x_mask < 0 or self.z_mask < 0 or (self.x_mask | self.z_mask) & ~full:
            raise ValueError(f"masks do not fit in {self.n_qubits} qubits")

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        label = label.strip().upper()
        if not label or set(label) - set("IXYZ"):
            raise ValueError(f"invalid Pauli label {label!r}")
        x = z = 0
        for q, ch in enumerate(label):
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
        return cls(len(label), x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits)

    @classmethod
    def single(cls, axis: str, qubit: int, n_qubits: int) -> PauliString:
        """``axis`` in {"X", "Y", "Z"} acting on ``qubit`` of an ``n_qubits`` register."""
        if not 0 <= qubit < n_qubits:
            raise ValueError(f"qubit {qubit} out of range for {n_qubits} qubits")
        label = ["I"] * n_qubits
        label[qubit] = axis
        return cls.from_label("".join(label))

    @classmethod
    def z_parity(cls, n_qubits: int) -> PauliString:
        """Z on every qubit."""
        return cls(n_qubits, 0, (1 << n_qubits) - 1)

    def label(self) -> str:
        out = []
        for q in range(self.n_qubits):
            x = (self.x_mask >> q) & 1
            z = (self.z_mask >> q) & 1
            out.append("IXZY"[x + 2 * z])
        return "".join(out)

    def __str__(self) -> str:
        return self.label()

    @property
    def support(self) -> tuple[int, ...]:
        both = self.x_mask | self.z_mask
        return tuple(q for q in range(self.n_qubits) if (both >> q) & 1)

    @property
    def weight(self) -> int:
        return len(self.support)

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def is_diagonal(self) -> bool:
        return self.x_mask == 0

    @property
    def n_y(self) -> int:
        return (self.x_mask & self.z_mask).bit_count()

    def axis_on(self, qubit: int) -> str:
        return self.label()[qubit]

    @cached_property
    def index_masks(self) -> tuple[int, int]:
        """(x, z) masks re-expressed in big-endian amplitude-index bit positions."""
        n = self.n_qubits
        x = z = 0
        for q in range(n):
            bit = 1 << (n - 1 - q)
            if (self.x_mask >> q) & 1:
                x |= bit
            if (self.z_mask >> q) & 1:
                z |= bit
        return x, z

    def matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix. Only sensible for small n."""
        return reduce(np.kron, (_SINGLE[ch] for ch in self.label()))

    def commutes_with(self, other: PauliString) -> bool:
        return commutes(self, other)


def commutes(p: PauliString, q: PauliString) -> bool:
    """True iff the strings commute, i.e. they anticommute on an even number of qubits."""
    if p.n_qubits != q.n_qubits:
        raise ValueError(f"size mismatch: {p.n_qubits} vs {q.n_qubits} qubits")
    symplectic = (p.x_mask & q.z_mask) ^ (p.z_mask & q.x_mask)
    return symplectic.bit_count() % 2 == 0


def commuting_subgroup(p: PauliString) -> tuple[PauliString, PauliString]:
    """The twirl group {I, P} for a single-qubit generator P."""
    if p.weight != 1:
        raise UnsupportedError(
            f"twirl groups are only built for single-qubit generators, got {p.label()}"
        )
    return PauliString.identity(p.n_qubits), p
