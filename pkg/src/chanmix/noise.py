"""Coherent error models, error-angle extraction and Pauli-twirl sampling.

Rotations use the convention R_P(a) = exp(-i a P / 2). An error is applied
after the ideal gate. Over-rotation errors rotate about the gate's own
generator; the unstructured error is U' = R_z(eps_z) R_y(eps_y) R_x(eps_x) on
the gate's qubit, so R_x acts first.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from chanmix import statevec
from chanmix.errors import ConfigError, OutOfRegimeError, UnsupportedError
from chanmix.pauli import PauliString, commuting_subgroup
from chanmix.statevec import PauliRotation, StateVector

KINDS = ("none", "constant", "uniform", "unstructured")

_PAULI_2x2 = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def rotation_2x2(axis: str, angle: float) -> np.ndarray:
    """exp(-i angle/2 sigma_axis)."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return c * np.eye(2, dtype=complex) - 1j * s * _PAULI_2x2[axis]


@dataclass(frozen=True)
class ErrorModel:
    """A coherent error attached to every parameterized rotation.

    Use the classmethod constructors rather than the raw fields. Only the
    fields relevant to ``kind`` are meaningful.
    """

    kind: str = "none"
    epsilon: float = 0.0
    epsilon0: float = 0.0
    lo_factor: float = -1.0
    hi_factor: float = 3.0
    eps_x: float = 0.0
    eps_y: float = 0.0
    eps_z: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown error model kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "uniform" and not self.lo_factor <= self.hi_factor:
            raise ConfigError("uniform model needs lo_factor <= hi_factor")

    @classmethod
    def none(cls) -> ErrorModel:
        return cls()

    @classmethod
    def constant(cls, epsilon: float) -> ErrorModel:
        return cls("constant", epsilon=float(epsilon))

    @classmethod
    def uniform(cls, epsilon0: float, lo_factor: float = -1.0, hi_factor: float = 3.0) -> ErrorModel:
        return cls("uniform", epsilon0=float(epsilon0), lo_factor=float(lo_factor), hi_factor=float(hi_factor))

    @classmethod
    def unstructured(cls, eps_x: float, eps_y: float, eps_z: float) -> ErrorModel:
        return cls("unstructured", eps_x=float(eps_x), eps_y=float(eps_y), eps_z=float(eps_z))

    @property
    def is_overrotation(self) -> bool:
        return self.kind in ("constant", "uniform")

    @property
    def is_stochastic(self) -> bool:
        return self.kind == "uniform"

    @property
    def nominal_epsilon(self) -> float:
        if self.kind == "constant":
            return self.epsilon
        if self.kind == "uniform":
            return self.epsilon0
        if self.kind == "unstructured":
            return math.sqrt(self.eps_x**2 + self.eps_y**2 + self.eps_z**2)
        return 0.0

    @property
    def mitigation_epsilon(self) -> float:
        """The error the mixture coefficients are built from.

        The uniform model uses its mean, not the per-gate draw, and the
        unstructured model uses only its Z component.
        """
        if self.kind == "constant":
            return self.epsilon
        if self.kind == "uniform":
            return 0.5 * (self.lo_factor + self.hi_factor) * self.epsilon0
        if self.kind == "unstructured":
            return self.eps_z
        return 0.0

    @property
    def bounds(self) -> tuple[float, float]:
        """Support of the per-gate over-rotation draw (uniform model only)."""
        return self.lo_factor * self.epsilon0, self.hi_factor * self.epsilon0

    def draw_overrotation(self, rng: np.random.Generator) -> float:
        if self.kind == "constant":
            return self.epsilon
        if self.kind == "uniform":
            lo, hi = self.bounds
            return float(rng.uniform(lo, hi))
        return 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        keep = {
            "none": (),
            "constant": ("epsilon",),
            "uniform": ("epsilon0", "lo_factor", "hi_factor"),
            "unstructured": ("eps_x", "eps_y", "eps_z"),
        }[self.kind]
        return {"kind": self.kind, **{k: d[k] for k in keep}}

    @classmethod
    def from_dict(cls, d: dict) -> ErrorModel:
        d = dict(d)
        kind = d.pop("kind", "none")
        allowed = {
            "none": set(),
            "constant": {"epsilon"},
            "uniform": {"epsilon0", "lo_factor", "hi_factor"},
            "unstructured": {"eps_x", "eps_y", "eps_z"},
        }
        if kind not in allowed:
            raise ConfigError(f"error.kind: unknown kind {kind!r}")
        extra = set(d) - allowed[kind]
        if extra:
            raise ConfigError(f"error: unexpected fields {sorted(extra)} for kind {kind!r}")
        try:
            return cls(kind, **{k: float(v) for k, v in d.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"error: {exc}") from exc


@dataclass(frozen=True)
class TwirlDraw:
    sigma: PauliString

    @property
    def is_identity(self) -> bool:
        return self.sigma.is_identity


def build_unstructured(epsilon: float, direction) -> ErrorModel:
    """(eps_x, eps_y, eps_z) = epsilon * direction for a unit 3-vector."""
    eta = np.asarray(direction, dtype=float)
    if eta.shape != (3,):
        raise ValueError(f"direction must be a 3-vector, got shape {eta.shape}")
    if abs(np.linalg.norm(eta) - 1.0) > 1e-10:
        raise ValueError(f"direction must have unit norm, got {np.linalg.norm(eta):.12g}")
    ex, ey, ez = (epsilon * eta).tolist()
    return ErrorModel.unstructured(ex, ey, ez)


def random_direction(rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the unit sphere."""
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def unstructured_unitary(eps_x: float, eps_y: float, eps_z: float) -> np.ndarray:
    """R_z(eps_z) R_y(eps_y) R_x(eps_x) as a 2x2 matrix."""
    return rotation_2x2("Z", eps_z) @ rotation_2x2("Y", eps_y) @ rotation_2x2("X", eps_x)


def _check_unitary(u: np.ndarray, tol: float = 1e-10) -> None:
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {u.shape}")
    if np.max(np.abs(u @ u.conj().T - np.eye(2))) > tol:
        raise ValueError("matrix is not unitary within 1e-10")


def extract_error_angles(ideal_theta: float, approx_unitary) -> tuple[float, float, float]:
    """Angles of U' = V R_z(theta)^dagger in Z-Y-X Euler form, global phase dropped.

    Raises:
        ValueError: if ``approx_unitary`` is not unitary.
        OutOfRegimeError: if U' is further than 0.5 in operator norm from the
            identity for every choice of global phase.
    """
    v = np.asarray(approx_unitary, dtype=complex)
    _check_unitary(v)
    u = v @ rotation_2x2("Z", ideal_theta).conj().T
    u = u / np.sqrt(np.linalg.det(u))
    if np.trace(u).real < 0:
        u = -u
    dist = np.linalg.norm(u - np.eye(2), ord=2)
    if dist > 0.5:
        raise OutOfRegimeError(f"U' is {dist:.3g} from the identity in operator norm (limit 0.5)")
    # Adjoint action: U sigma_j U^dagger = sum_i O_ij sigma_i.
    sig = [_PAULI_2x2[a] for a in "XYZ"]
    o = np.array([[0.5 * np.trace(si @ u @ sj @ u.conj().T).real for sj in sig] for si in sig])
    eps_y = -math.asin(max(-1.0, min(1.0, o[2, 0])))
    eps_z = math.atan2(o[1, 0], o[0, 0])
    eps_x = math.atan2(o[2, 1], o[2, 2])
    return eps_x, eps_y, eps_z


def synthesis_error_norm(epsilon: float) -> float:
    """Operator-norm distance ||I - R(eps)|| = 2 sin(|eps|/4) of a rotation from the identity."""
    return 2.0 * math.sin(abs(epsilon) / 4)


def max_epsilon_for_accuracy(zeta: float) -> float:
    """Largest |eps| whose rotation stays within ``zeta`` of the identity."""
    if not 0 < zeta <= 2:
        raise ValueError("zeta must lie in (0, 2]")
    return 4.0 * math.asin(zeta / 2)


def error_rotations(model: ErrorModel, generator: PauliString, rng=None) -> list[PauliRotation]:
    """Concrete rotations that realize ``model`` after a gate with ``generator``.

    Raises:
        UnsupportedError: unstructured error on a multi-qubit generator.
        ConfigError: uniform model without an rng to draw from.
    """
    if model.kind == "none":
        return []
    if model.is_overrotation:
        if model.is_stochastic and rng is None:
            raise ConfigError("the uniform model needs an rng to draw the per-gate error")
        return [PauliRotation(generator, model.draw_overrotation(rng))]
    if generator.weight != 1:
        raise UnsupportedError(
            f"unstructured errors are only defined for single-qubit gates, got {generator.label()}"
        )
    (q,) = generator.support
    n = generator.n_qubits
    return [
        PauliRotation(PauliString.single(axis, q, n), angle)
        for axis, angle in (("X", model.eps_x), ("Y", model.eps_y), ("Z", model.eps_z))
    ]


def apply_error(
    state: StateVector, model: ErrorModel, target_pauli: PauliString, rng=None
) -> StateVector:
    for rot in error_rotations(model, target_pauli, rng):
        state = statevec.apply_pauli_rotation(state, rot.generator, rot.theta)
    return state


def sample_twirl(generator: PauliString, rng: np.random.Generator) -> TwirlDraw:
    """Uniform draw from {I, P}."""
    group = commuting_subgroup(generator)
    return TwirlDraw(group[int(rng.integers(2))])
