"""Trotterized Ising circuits, Clifford+R_z compilation and mitigated instance sampling.

A :class:`CircuitSpec` is an ordered list of fixed gates and parameterized
rotations. Each :class:`ParamRotation` carries an :class:`ErrorModel` and a
mitigation policy:

* ``off``: the noisy gate is used as is.
* ``twirl``: the noisy gate is conjugated by a uniform draw from {I, P}.
* ``mixture``: a mixture branch is drawn and its correction rotation
  (0, -+pi/4 or pi about P) is inserted after the noisy gate.
* ``mixture_plus_twirl``: both of the above.

Per-instance randomness comes from ``instance_rng(seed, k)``, so instance ``k``
of a run is the same no matter how instances are batched or threaded.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from chanmix.errors import CompileError, ConfigError
from chanmix.mixture import GammaTriple, gamma_default
from chanmix.noise import ErrorModel
from chanmix.pauli import PauliString
from chanmix.statevec import FixedGate, PauliRotation

POLICIES = ("off", "twirl", "mixture", "mixture_plus_twirl")
_POLICY_TAGS = {"off": "off", "twirl": "twirl", "mixture": "mix", "mixture_plus_twirl": "mix+twirl"}
_TAG_POLICIES = {v: k for k, v in _POLICY_TAGS.items()}


@dataclass(frozen=True)
class ParamRotation:
    generator: PauliString
    theta: float
    error: ErrorModel = field(default_factory=ErrorModel.none)
    mitigation: str = "off"

    def __post_init__(self):
        if self.mitigation not in POLICIES:
            raise ValueError(f"unknown mitigation policy {self.mitigation!r}; expected one of {POLICIES}")
        if self.uses_twirl and self.generator.weight != 1:
            raise ValueError(f"twirling needs a single-qubit generator, got {self.generator.label()}")

    @property
    def uses_mixture(self) -> bool:
        return self.mitigation in ("mixture", "mixture_plus_twirl")

    @property
    def uses_twirl(self) -> bool:
        return self.mitigation in ("twirl", "mixture_plus_twirl")

    def gamma(self) -> GammaTriple:
        return gamma_default(self.error.mitigation_epsilon)


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    ops: tuple

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            if isinstance(op, ParamRotation):
                if op.generator.n_qubits != self.n_qubits:
                    raise ValueError("rotation generator size does not match the circuit")
            elif isinstance(op, FixedGate):
                if max(op.qubits) >= self.n_qubits:
                    raise ValueError(f"{op.kind} on qubit {max(op.qubits)} outside a {self.n_qubits}-qubit circuit")
            else:
                raise TypeError(f"unsupported op {op!r}")

    @property
    def rotations(self) -> list[ParamRotation]:
        return [op for op in self.ops if isinstance(op, ParamRotation)]

    @property
    def nu(self) -> int:
        return sum(isinstance(op, ParamRotation) for op in self.ops)

    def weight(self) -> float:
        """Gamma_c: the product of one-norms over mixture-mitigated rotations."""
        return math.prod(r.gamma().one_norm for r in self.rotations if r.uses_mixture)


@dataclass(frozen=True)
class SampledInstance:
    ops: tuple
    sign: int
    weight: float
    t_insertions: int
    n_corrections: int


# ---------------------------------------------------------------- builders


def build_trotter_ising(N: int, L: int, T: float, h: float = 1.0, J: float = 1.0) -> CircuitSpec:
    """First-order Trotter circuit for H = J sum X_i X_{i+1} + h sum Y_i on a ring.

    Each of the ``L`` steps applies R_y(2hT/L) on every qubit, then
    R_XX(2JT/L) on bonds (0,1), (1,2), ..., (N-1,0).
    """
    if N < 2:
        raise ValueError("the periodic chain needs N >= 2")
    if L < 1:
        raise ValueError("L must be at least 1")
    a_y, a_xx = 2 * h * T / L, 2 * J * T / L
    ys = [PauliString.single("Y", q, N) for q in range(N)]
    xxs = [PauliString(N, (1 << q) | (1 << ((q + 1) % N)), 0) for q in range(N)]
    ops = []
    for _ in range(L):
        ops.extend(ParamRotation(p, a_y) for p in ys)
        ops.extend(ParamRotation(p, a_xx) for p in xxs)
    return CircuitSpec(N, ops)


def _xx_pair(p: PauliString) -> tuple[int, int] | None:
    """(i, j) with j = i + 1 mod n when ``p`` is an XX bond, in ring order."""
    if p.z_mask or p.weight != 2:
        return None
    i, j = p.support
    if i == 0 and j == p.n_qubits - 1 and j > 1:
        return j, i  # the wrap-around bond
    return i, j


def compile_to_rz(circuit: CircuitSpec) -> CircuitSpec:
    """Rewrite R_y and R_XX into Clifford frames around single-qubit R_z.

    R_y(t) on q becomes Sdg, H, R_z(t), H, S (application order).
    R_XX(t) on (i, j) becomes H_i, H_j, CNOT(i, j), R_z(t) on j, CNOT(i, j), H_i, H_j.
    Existing single-qubit R_z rotations pass through. The compiled rotation
    keeps the original error model and policy.
    """
    n = circuit.n_qubits
    out = []
    for op in circuit.ops:
        if isinstance(op, FixedGate):
            out.append(op)
            continue
        p = op.generator
        label = p.label()
        if p.weight == 1 and "Z" in label:
            out.append(op)
        elif p.weight == 1 and "Y" in label:
            (q,) = p.support
            out += [FixedGate("Sdg", (q,)), FixedGate("H", (q,))]
            out.append(replace(op, generator=PauliString.single("Z", q, n)))
            out += [FixedGate("H", (q,)), FixedGate("S", (q,))]
        elif (pair := _xx_pair(p)) is not None:
            i, j = pair
            frame = [FixedGate("H", (i,)), FixedGate("H", (j,))]
            out += frame + [FixedGate("CNOT", (i, j))]
            out.append(replace(op, generator=PauliString.single("Z", j, n)))
            out += [FixedGate("CNOT", (i, j))] + frame
        else:
            raise CompileError(f"no Clifford+R_z rule for generator {label}")
    return CircuitSpec(n, out)


def attach_errors(circuit: CircuitSpec, model: ErrorModel, mitigation: str = "off") -> CircuitSpec:
    """Give every rotation the same error model and mitigation policy.

    Raises:
        ValueError: unstructured errors on a circuit that is not compiled to
            single-qubit R_z, or a twirl policy on a multi-qubit generator.
    """
    if mitigation not in POLICIES:
        raise ValueError(f"unknown mitigation policy {mitigation!r}")
    ops = []
    for op in circuit.ops:
        if isinstance(op, ParamRotation):
            p = op.generator
            if model.kind == "unstructured" and not (p.weight == 1 and p.is_diagonal):
                raise ValueError(
                    f"unstructured errors need a circuit compiled to R_z; found generator {p.label()}"
                )
            op = ParamRotation(p, op.theta, model, mitigation)
        ops.append(op)
    return CircuitSpec(circuit.n_qubits, ops)


def with_policy(circuit: CircuitSpec, mitigation: str) -> CircuitSpec:
    """Same errors, different mitigation policy."""
    ops = [replace(op, mitigation=mitigation) if isinstance(op, ParamRotation) else op for op in circuit.ops]
    return CircuitSpec(circuit.n_qubits, ops)


def ideal(circuit: CircuitSpec) -> CircuitSpec:
    """Strip every error model and policy."""
    ops = [
        ParamRotation(op.generator, op.theta) if isinstance(op, ParamRotation) else op
        for op in circuit.ops
    ]
    return CircuitSpec(circuit.n_qubits, ops)


# ---------------------------------------------------------------- sampling


def instance_rng(seed: int, index: int) -> np.random.Generator:
    """The rng substream owned by instance ``index`` of a run with master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


@dataclass(frozen=True)
class RotationTable:
    """Per-rotation arrays precomputed once per circuit."""

    rotations: tuple
    theta: np.ndarray
    mixture: np.ndarray  # bool
    twirl: np.ndarray  # bool
    stochastic: np.ndarray  # bool, uniform over-rotation
    overrotation: np.ndarray  # fixed over-rotation angle (constant model), else 0
    lo: np.ndarray
    hi: np.ndarray
    cdf: np.ndarray  # (nu, 3)
    signs: np.ndarray  # (nu, 3) int8
    offsets: np.ndarray  # (nu, 3)
    log_weight: float

    @classmethod
    def build(cls, circuit: CircuitSpec) -> RotationTable:
        rots = tuple(circuit.rotations)
        nu = len(rots)
        cdf = np.ones((nu, 3))
        signs = np.ones((nu, 3), dtype=np.int8)
        offsets = np.zeros((nu, 3))
        log_w = []
        for j, r in enumerate(rots):
            if r.uses_mixture:
                try:
                    g = r.gamma()
                except ValueError as exc:
                    raise ConfigError(f"rotation {j}: cannot build mixture coefficients: {exc}") from exc
                cdf[j], signs[j], offsets[j] = g.cdf, g.signs, g.offsets
                log_w.append(math.log(g.one_norm))
        return cls(
            rotations=rots,
            theta=np.array([r.theta for r in rots], dtype=float),
            mixture=np.array([r.uses_mixture for r in rots], dtype=bool),
            twirl=np.array([r.uses_twirl for r in rots], dtype=bool),
            stochastic=np.array([r.error.is_stochastic for r in rots], dtype=bool),
            overrotation=np.array([r.error.epsilon if r.error.kind == "constant" else 0.0 for r in rots]),
            lo=np.array([r.error.bounds[0] if r.error.is_stochastic else 0.0 for r in rots]),
            hi=np.array([r.error.bounds[1] if r.error.is_stochastic else 0.0 for r in rots]),
            cdf=cdf,
            signs=signs,
            offsets=offsets,
            log_weight=math.fsum(log_w),
        )

    @property
    def nu(self) -> int:
        return len(self.rotations)

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)


@dataclass(frozen=True)
class InstanceDraw:
    """Everything random about one circuit instance, one entry per rotation."""

    overrotation: np.ndarray  # applied over-rotation angle along the generator
    branch: np.ndarray  # 0, 1, 2 (branch index minus one); 0 when mixture is off
    twirl: np.ndarray  # bool: sigma = P
    sign: int
    t_insertions: int


def draw_instance(table: RotationTable, rng: np.random.Generator) -> InstanceDraw:
    """Draw errors, then branches, then twirls. Streams absent from the circuit are skipped."""
    nu = table.nu
    over = table.overrotation
    if table.stochastic.any():
        u = rng.random(nu)
        over = np.where(table.stochastic, table.lo + (table.hi - table.lo) * u, over)
    branch = np.zeros(nu, dtype=np.int8)
    if table.mixture.any():
        u = rng.random(nu)
        branch = ((u >= table.cdf[:, 0]).astype(np.int8) + (u >= table.cdf[:, 1])).astype(np.int8)
        branch[~table.mixture] = 0
    twirl = np.zeros(nu, dtype=bool)
    if table.twirl.any():
        twirl = rng.integers(0, 2, nu).astype(bool) & table.twirl
    chosen = table.signs[np.arange(nu), branch]
    sign = -1 if np.count_nonzero(chosen < 0) % 2 else 1
    t_ins = int(np.count_nonzero((branch == 1) & table.mixture))
    return InstanceDraw(over, branch, twirl, sign, t_ins)


_CORRECTION_GATES = {round(math.pi / 4, 12): "T", round(-math.pi / 4, 12): "Tdg", round(math.pi, 12): "Z"}


def _correction_ops(p: PauliString, offset: float) -> list:
    """The inserted rotation by ``offset`` about ``p``; T, Tdg or Z for a single-qubit Z generator."""
    if p.weight == 1 and p.is_diagonal:
        kind = _CORRECTION_GATES.get(round(offset, 12))
        if kind is not None:
            return [FixedGate(kind, p.support)]
    return [PauliRotation(p, offset)]


def materialize(circuit: CircuitSpec, table: RotationTable, draw: InstanceDraw) -> SampledInstance:
    """Turn a draw into a list of concrete gates.

    Per rotation the order is: twirl sigma, noisy gate (ideal rotation plus
    over-rotation, or ideal rotation followed by R_x, R_y, R_z error), mixture
    correction, twirl sigma again.
    """
    ops = []
    n_corr = 0
    j = 0
    for op in circuit.ops:
        if isinstance(op, FixedGate):
            ops.append(op)
            continue
        p = op.generator
        sigma = [FixedGate(p.label().strip("I"), p.support)] if draw.twirl[j] else []
        ops += sigma
        if op.error.kind == "unstructured":
            ops.append(PauliRotation(p, op.theta))
            (q,) = p.support
            for axis, angle in (("X", op.error.eps_x), ("Y", op.error.eps_y), ("Z", op.error.eps_z)):
                ops.append(PauliRotation(PauliString.single(axis, q, p.n_qubits), angle))
        else:
            ops.append(PauliRotation(p, op.theta + float(draw.overrotation[j])))
        b = int(draw.branch[j])
        if table.mixture[j] and b > 0:
            ops += _correction_ops(p, float(table.offsets[j, b]))
            n_corr += 1
        ops += sigma
        j += 1
    return SampledInstance(tuple(ops), draw.sign, table.weight, draw.t_insertions, n_corr)


def sample_instance(circuit: CircuitSpec, rng: np.random.Generator, table: RotationTable | None = None) -> SampledInstance:
    """Draw and materialize one mitigated circuit instance."""
    table = table or RotationTable.build(circuit)
    return materialize(circuit, table, draw_instance(table, rng))


def noisy_ops(circuit: CircuitSpec, rng: np.random.Generator | None = None) -> list:
    """Concrete gates of the unmitigated noisy circuit (uniform errors drawn from ``rng``)."""
    plain = with_policy(circuit, "off")
    table = RotationTable.build(plain)
    if table.stochastic.any() and rng is None:
        raise ConfigError("the uniform error model needs an rng to draw the per-gate errors")
    draw = draw_instance(table, rng if rng is not None else np.random.default_rng(0))
    return list(materialize(plain, table, draw).ops)


# ---------------------------------------------------------------- text dump


def _error_fields(e: ErrorModel) -> str:
    if e.kind == "constant":
        return f" eps={e.epsilon:g}"
    if e.kind == "uniform":
        return f" eps0={e.epsilon0:g} lo={e.lo_factor:g} hi={e.hi_factor:g}"
    if e.kind == "unstructured":
        return f" ex={e.eps_x:g} ey={e.eps_y:g} ez={e.eps_z:g}"
    return ""


def _rot_line(p: PauliString, theta: float) -> str:
    axes = "".join(p.axis_on(q) for q in p.support)
    qubits = " ".join(str(q) for q in p.support)
    return f"R{axes} {qubits} {theta:.6f}"


def dump_ops(ops) -> str:
    """One gate per line, e.g. ``H 0``, ``CNOT 0 1``, ``RZ 0 0.066667 eps=0.003 policy=mix+twirl``."""
    lines = []
    for op in ops:
        if isinstance(op, FixedGate):
            lines.append(" ".join([op.kind, *map(str, op.qubits)]))
        elif isinstance(op, ParamRotation):
            line = _rot_line(op.generator, op.theta) + _error_fields(op.error)
            if op.mitigation != "off":
                line += f" policy={_POLICY_TAGS[op.mitigation]}"
            lines.append(line)
        elif isinstance(op, PauliRotation):
            lines.append(_rot_line(op.generator, op.theta))
        else:
            raise TypeError(f"cannot dump {op!r}")
    return "\n".join(lines) + "\n"


def dump_circuit(circuit: CircuitSpec) -> str:
    return dump_ops(circuit.ops)


_ROT_RE = re.compile(r"^R([XYZ]+)$")


def parse_dump(text: str, n_qubits: int) -> CircuitSpec:
    """Inverse of :func:`dump_circuit` up to the printed angle precision."""
    ops = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts:
            continue
        head, rest = parts[0], parts[1:]
        m = _ROT_RE.match(head)
        if not m:
            try:
                ops.append(FixedGate(head, tuple(int(x) for x in rest)))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from exc
            continue
        axes = m.group(1)
        qubits = [int(x) for x in rest[: len(axes)]]
        theta = float(rest[len(axes)])
        kv = dict(item.split("=", 1) for item in rest[len(axes) + 1 :])
        label = ["I"] * n_qubits
        for a, q in zip(axes, qubits):
            label[q] = a
        policy = _TAG_POLICIES[kv.pop("policy", "off")]
        if "eps" in kv:
            err = ErrorModel.constant(float(kv["eps"]))
        elif "eps0" in kv:
            err = ErrorModel.uniform(float(kv["eps0"]), float(kv["lo"]), float(kv["hi"]))
        elif "ez" in kv:
            err = ErrorModel.unstructured(float(kv["ex"]), float(kv["ey"]), float(kv["ez"]))
        else:
            err = ErrorModel.none()
        ops.append(ParamRotation(PauliString.from_label("".join(label)), theta, err, policy))
    return CircuitSpec(n_qubits, ops)
