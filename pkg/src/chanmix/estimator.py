"""Monte-Carlo estimation of a parity observable from sampled circuit instances.

Every shot of instance ``k`` contributes ``Gamma_c * sign_k * parity``. The
mean of these weighted values is an unbiased estimate of the ideal
expectation whenever every rotation uses a mixture policy.

Instances are simulated in batches. Single-qubit gates between two-qubit
operations are fused into one 2x2 matrix per instance before they touch the
state, which keeps the number of full passes over the amplitudes small.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from chanmix import statevec
from chanmix.circuits import (
    CircuitSpec,
    ParamRotation,
    RotationTable,
    draw_instance,
    ideal,
    instance_rng,
    with_policy,
)
from chanmix.errors import UnsupportedError
from chanmix.mixture import gamma_default, one_norm_closed_form
from chanmix.noise import rotation_2x2, unstructured_unitary
from chanmix.pauli import PauliString
from chanmix.statevec import FixedGate

DEFAULT_SHOTS_PER_INSTANCE = 100
# Amplitudes held per batch; 2**15 complex128 values (512 KiB) stay cache resident.
_BATCH_AMPLITUDES = 1 << 15
# Exponent slope of the sampling overhead, e^{0.83 |eps| nu}.
OVERHEAD_RATE = 0.83


@dataclass
class EstimatorResult:
    mean: float
    weighted_samples: np.ndarray
    S: int
    s: int
    n_instances: int
    empirical_std: float
    variance_bound: float
    seed: int
    signs: np.ndarray = field(repr=False)  # per instance
    weights: np.ndarray = field(repr=False)  # per instance, Gamma_c
    parities: np.ndarray = field(repr=False)  # per shot, int8
    t_insertions: np.ndarray = field(repr=False)  # per instance
    instance_expectations: np.ndarray = field(repr=False)  # infinite-shot value per instance

    @property
    def stderr(self) -> float:
        """empirical_std / sqrt(S), treating shots as independent."""
        return self.empirical_std / math.sqrt(self.S)

    @property
    def instance_means(self) -> np.ndarray:
        return self.weighted_samples.reshape(self.n_instances, self.s).mean(axis=1)

    @property
    def cluster_stderr(self) -> float:
        """Standard error from the spread of per-instance means.

        Shots of one instance share its circuit, so this is the honest error
        bar when instances differ. Needs at least two instances.
        """
        if self.n_instances < 2:
            return float("nan")
        return float(np.std(self.instance_means, ddof=1) / math.sqrt(self.n_instances))

    def to_dict(self, weighted_samples_path: str | None = None) -> dict:
        d = {
            "mean": self.mean,
            "empirical_std": self.empirical_std,
            "stderr": self.stderr,
            "cluster_stderr": self.cluster_stderr,
            "variance_bound": self.variance_bound,
            "S": self.S,
            "s": self.s,
            "n_instances": self.n_instances,
            "seed": self.seed,
            "mean_t_insertions": float(np.mean(self.t_insertions)),
        }
        if weighted_samples_path is not None:
            d["weighted_samples_path"] = weighted_samples_path
        return d

    def write_samples_csv(self, path) -> None:
        """Columns: instance_index, shot_index, sign, weight, parity, weighted_value."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        inst = np.repeat(np.arange(self.n_instances), self.s)
        shot = np.tile(np.arange(self.s), self.n_instances)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["instance_index", "shot_index", "sign", "weight", "parity", "weighted_value"])
            for k, j, p, v in zip(inst.tolist(), shot.tolist(), self.parities.tolist(), self.weighted_samples.tolist()):
                w.writerow([k, j, int(self.signs[k]), repr(float(self.weights[k])), p, repr(v)])


# ---------------------------------------------------------------- batched engine


class _Fixed:
    __slots__ = ("m",)

    def __init__(self, m):
        self.m = m


class _Rot:
    __slots__ = ("j",)

    def __init__(self, j):
        self.j = j


class BatchSimulator:
    """Evolves many instances of one circuit at once.

    Args:
        circuit: the circuit whose instances are simulated.
        observable: a diagonal Pauli string (Z-type parity).
    """

    def __init__(self, circuit: CircuitSpec, observable: PauliString):
        statevec.check_capacity(circuit.n_qubits)
        if observable.n_qubits != circuit.n_qubits:
            raise ValueError("observable size does not match the circuit")
        if not observable.is_diagonal:
            raise UnsupportedError(f"only diagonal parity observables are sampled, got {observable.label()}")
        self.circuit = circuit
        self.n = circuit.n_qubits
        self.table = RotationTable.build(circuit)
        self.obs_signs = statevec.diagonal_signs(observable)
        self._rot_data = [self._rotation_data(j, r) for j, r in enumerate(self.table.rotations)]
        self.steps = self._plan()

    def _rotation_data(self, j: int, r: ParamRotation):
        p = r.generator
        if r.error.kind == "unstructured":
            if p.weight != 1:
                raise UnsupportedError("unstructured errors are only defined for single-qubit gates")
            axis = p.label().strip("I")
            base = unstructured_unitary(r.error.eps_x, r.error.eps_y, r.error.eps_z) @ rotation_2x2(axis, r.theta)
            sig = statevec.one_qubit_matrix(axis)
            variants = np.empty((3, 2, 2, 2), dtype=complex)
            for b in range(3):
                m = rotation_2x2(axis, float(self.table.offsets[j, b])) @ base
                variants[b, 0] = m
                variants[b, 1] = sig @ m @ sig
            return ("variants", variants)
        if p.weight == 1:
            return ("axis", p.label().strip("I"))
        return ("pauli", p)

    def _plan(self):
        steps = []
        pending: dict[int, list] = {}

        def push(q, factor):
            pending.setdefault(q, []).append(factor)

        def flush(qs):
            for q in qs:
                factors = pending.pop(q, None)
                if factors:
                    steps.append(("u1", q, self._fold(factors)))

        j = 0
        for op in self.circuit.ops:
            if isinstance(op, FixedGate):
                if op.kind == "CNOT":
                    flush(op.qubits)
                    table = statevec.gate_table(op.kind, op.qubits, self.n)
                    steps.append(("mono", table[1], table[2]))
                else:
                    push(op.qubits[0], _Fixed(statevec.one_qubit_matrix(op.kind)))
                continue
            kind, _ = self._rot_data[j]
            if kind == "pauli":
                flush(op.generator.support)
                steps.append(("rot", op.generator, j))
            else:
                push(op.generator.support[0], _Rot(j))
            j += 1
        flush(sorted(pending))
        return steps

    @staticmethod
    def _fold(factors):
        folded = []
        for f in factors:
            if isinstance(f, _Fixed) and folded and isinstance(folded[-1], _Fixed):
                folded[-1] = _Fixed(f.m @ folded[-1].m)
            else:
                folded.append(f)
        return folded

    def _angles(self, j, over, branch):
        t = self.table
        phi = t.theta[j] + over[:, j]
        if t.mixture[j]:
            phi = phi + t.offsets[j][branch[:, j]]
        return phi

    def _rot_matrix(self, j, over, branch, twirl):
        kind, data = self._rot_data[j]
        if kind == "variants":
            return data[branch[:, j], twirl[:, j].astype(np.intp)]
        half = 0.5 * self._angles(j, over, branch)
        c, s = np.cos(half), np.sin(half)
        m = np.zeros((len(half), 2, 2), dtype=complex)
        if data == "Z":
            m[:, 0, 0] = c - 1j * s
            m[:, 1, 1] = c + 1j * s
        elif data == "X":
            m[:, 0, 0] = m[:, 1, 1] = c
            m[:, 0, 1] = m[:, 1, 0] = -1j * s
        else:
            m[:, 0, 0] = m[:, 1, 1] = c
            m[:, 0, 1] = -s
            m[:, 1, 0] = s
        return m

    def evolve(self, draws) -> np.ndarray:
        """Final amplitudes, shape (len(draws), 2**n)."""
        B = len(draws)
        over = np.stack([d.overrotation for d in draws]) if self.table.nu else np.zeros((B, 0))
        branch = np.stack([d.branch for d in draws]).astype(np.intp) if self.table.nu else np.zeros((B, 0), np.intp)
        twirl = np.stack([d.twirl for d in draws]) if self.table.nu else np.zeros((B, 0), bool)
        amps = np.zeros((B, 1 << self.n), dtype=complex)
        amps[:, 0] = 1.0
        for step in self.steps:
            if step[0] == "u1":
                _, q, factors = step
                m = None
                for f in factors:
                    fm = f.m if isinstance(f, _Fixed) else self._rot_matrix(f.j, over, branch, twirl)
                    m = fm if m is None else fm @ m
                amps = statevec.apply_1q(amps, self.n, q, m)
            elif step[0] == "mono":
                amps = statevec.apply_monomial(amps, step[1], step[2])
            else:
                _, p, j = step
                amps = statevec.rotate(amps, p, self._angles(j, over, branch))
        return amps

    def run_instances(self, seed: int, start: int, stop: int, shots: int):
        """Simulate instances [start, stop); returns per-instance arrays and (B, shots) parities."""
        rngs = [instance_rng(seed, k) for k in range(start, stop)]
        draws = [draw_instance(self.table, r) for r in rngs]
        amps = self.evolve(draws)
        probs = amps.real**2 + amps.imag**2
        exact = probs @ self.obs_signs
        parities = np.empty((len(rngs), shots), dtype=np.int8)
        for b, r in enumerate(rngs):
            idx = statevec.sample_indices(probs[b], r, shots)
            parities[b] = self.obs_signs[idx]
        signs = np.array([d.sign for d in draws], dtype=np.int8)
        t_ins = np.array([d.t_insertions for d in draws], dtype=np.int64)
        return signs, t_ins, exact, parities


def _default_chunk(n: int) -> int:
    return max(1, _BATCH_AMPLITUDES >> n)


def _run(circuit, observable, n_instances, s, seed, threads, chunk_size):
    sim = BatchSimulator(circuit, observable)
    chunk = chunk_size or _default_chunk(circuit.n_qubits)
    bounds = [(a, min(a + chunk, n_instances)) for a in range(0, n_instances, chunk)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ab: sim.run_instances(seed, ab[0], ab[1], s), bounds))
    else:
        parts = [sim.run_instances(seed, a, b, s) for a, b in bounds]
    signs = np.concatenate([p[0] for p in parts])
    t_ins = np.concatenate([p[1] for p in parts])
    exact = np.concatenate([p[2] for p in parts])
    parities = np.concatenate([p[3] for p in parts]).reshape(-1)
    return sim.table.weight, signs, t_ins, exact, parities


def _result(weight, signs, t_ins, exact, parities, S, s, seed) -> EstimatorResult:
    n_inst = len(signs)
    weights = np.full(n_inst, weight)
    samples = np.repeat(weight * signs.astype(float), s) * parities
    mean = math.fsum(samples) / S
    std = float(np.std(samples, ddof=1)) if S > 1 else 0.0
    return EstimatorResult(
        mean=mean,
        weighted_samples=samples,
        S=S,
        s=s,
        n_instances=n_inst,
        empirical_std=std,
        variance_bound=weight**2,
        seed=seed,
        signs=signs,
        weights=weights,
        parities=parities,
        t_insertions=t_ins,
        instance_expectations=exact,
    )


def _check_shots(S: int, s: int) -> None:
    if S < 1 or s < 1:
        raise ValueError("shot counts must be positive")
    if S % s:
        raise ValueError(f"shots per instance s={s} must divide S={S}")


def estimate(
    circuit: CircuitSpec,
    observable: PauliString | None = None,
    S: int = 10**5,
    s: int = DEFAULT_SHOTS_PER_INSTANCE,
    seed: int = 0,
    threads: int = 1,
    chunk_size: int | None = None,
) -> EstimatorResult:
    """Sample S/s fresh instances, s shots each, and average the weighted parities.

    Args:
        circuit: circuit with error models and mitigation policies attached.
        observable: diagonal Pauli string; defaults to Z on every qubit.
        S: total shots.
        s: shots per instance, must divide S.
        seed: master seed; instance k uses substream (seed, k).
        threads: worker threads over instance batches. Output does not depend on it.
        chunk_size: instances per batch; output does not depend on it either.
    """
    _check_shots(S, s)
    observable = observable or PauliString.z_parity(circuit.n_qubits)
    parts = _run(circuit, observable, S // s, s, seed, threads, chunk_size)
    return _result(*parts, S, s, seed)


def estimate_unmitigated(
    circuit: CircuitSpec, observable: PauliString | None = None, S: int = 10**5, seed: int = 0
) -> EstimatorResult:
    """Plain sampling of one noisy circuit; uniform errors are drawn once from substream (seed, 0)."""
    _check_shots(S, 1)
    observable = observable or PauliString.z_parity(circuit.n_qubits)
    parts = _run(with_policy(circuit, "off"), observable, 1, S, seed, 1, None)
    return _result(*parts, S, S, seed)


def exact_expectation(circuit: CircuitSpec, observable: PauliString | None = None) -> float:
    """Infinite-shot value of the error-free circuit."""
    observable = observable or PauliString.z_parity(circuit.n_qubits)
    return noisy_expectation(ideal(circuit), observable)


def noisy_expectation(circuit: CircuitSpec, observable: PauliString | None = None, seed: int = 0) -> float:
    """Infinite-shot value of the unmitigated noisy circuit used by :func:`estimate_unmitigated`."""
    observable = observable or PauliString.z_parity(circuit.n_qubits)
    sim = BatchSimulator(with_policy(circuit, "off"), observable)
    draw = draw_instance(sim.table, instance_rng(seed, 0))
    amps = sim.evolve([draw])[0]
    return float(np.abs(amps) ** 2 @ sim.obs_signs)


# ---------------------------------------------------------------- analytics


def variance_bound(epsilon: float, nu: int, op_norm: float = 1.0, form: str = "exact") -> float:
    """Upper bound on the variance of one weighted sample.

    ``form="exact"`` gives ||gamma(eps)||_1^(2 nu) ||O||^2; ``form="exponential"``
    gives e^{0.83 |eps| nu} ||O||^2.
    """
    if form == "exact":
        return one_norm_closed_form(epsilon) ** (2 * nu) * op_norm**2
    if form == "exponential":
        return math.exp(OVERHEAD_RATE * abs(epsilon) * nu) * op_norm**2
    raise ValueError(f"unknown form {form!r}")


def shot_bound(epsilon: float, nu: int, delta: float, op_norm: float = 1.0) -> float:
    """Shots needed for accuracy delta: e^{0.83 |eps| nu} ||O||^2 / delta^2."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return math.exp(OVERHEAD_RATE * abs(epsilon) * nu) * op_norm**2 / delta**2


def accuracy_at(epsilon: float, nu: int, S: int, op_norm: float = 1.0) -> float:
    """The delta at which ``shot_bound`` equals S."""
    return math.sqrt(math.exp(OVERHEAD_RATE * abs(epsilon) * nu) / S) * op_norm


def t_overhead(epsilon: float) -> float:
    """Expected T-type insertions per mitigated rotation, |gamma2| / ||gamma||_1."""
    e = abs(epsilon)
    return math.sqrt(2) * math.cos(math.pi / 8) * math.sin(e) / math.cos(e - math.pi / 8)


def t_overhead_from_gamma(epsilon: float) -> float:
    g = gamma_default(epsilon)
    return abs(g.gamma2) / g.one_norm

