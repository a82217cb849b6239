"""Signed mixtures of over-rotated channels that reproduce an ideal rotation.

A rotation channel R(theta) about a Pauli generator is written as

    R(theta) = g1 * R(theta + eps) + g2 * R(theta + eps + A) + g3 * R(theta + eps + B)

where R(theta + eps + offset) is what the hardware delivers when asked for
R(theta + offset) under a known over-rotation ``eps``. The coefficients do not
depend on theta: they solve ``sum g = 1``, ``sum g cos(eps + a_i) = 1`` and
``sum g sin(eps + a_i) = 0`` with offsets ``a = (0, A, B)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from chanmix.errors import DegenerateDecompositionError, OutOfRegimeError

SINGULAR_TOL = 1e-8
MAX_DEFAULT_EPSILON = math.pi / 8
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GammaTriple:
    gamma1: float
    gamma2: float
    gamma3: float
    epsilon: float
    offset_a: float
    offset_b: float
    one_norm: float = field(init=False)

    def __post_init__(self):
        norm = math.fsum(abs(g) for g in (self.gamma1, self.gamma2, self.gamma3))
        object.__setattr__(self, "one_norm", norm)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([self.gamma1, self.gamma2, self.gamma3])

    @property
    def offsets(self) -> tuple[float, float, float]:
        return (0.0, self.offset_a, self.offset_b)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.gammas) / self.one_norm

    @property
    def signs(self) -> np.ndarray:
        return np.where(self.gammas < 0, -1, 1).astype(np.int8)

    @property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probabilities)
        c[-1] = 1.0
        return c


@dataclass(frozen=True)
class BranchDraw:
    index: int  # 1, 2 or 3
    sign: int
    angle_offset: float


def _distance_to_2pi_multiple(x: float) -> float:
    r = math.remainder(x, _TWO_PI)
    return abs(r)


def gamma_general(epsilon: float, A: float, B: float, tol: float = SINGULAR_TOL) -> GammaTriple:
    """Closed-form coefficients for arbitrary offsets (A, B).

    Raises:
        DegenerateDecompositionError: if A, B or A - B is within ``tol`` of a
            multiple of 2*pi, where one of the cosecant factors diverges.
    """
    for name, value in (("A", A), ("B", B), ("A - B", A - B)):
        if _distance_to_2pi_multiple(value) < tol:
            raise DegenerateDecompositionError(
                f"csc(({name})/2) diverges: {name} = {value!r} is within {tol} of a multiple of 2*pi"
            )
    csc = lambda x: 1.0 / math.sin(x)  # noqa: E731
    s_eps = math.sin(epsilon / 2)
    s_a = math.sin((A + epsilon) / 2)
    s_b = math.sin((B + epsilon) / 2)
    g1 = csc(A / 2) * csc(B / 2) * s_a * s_b
    g2 = csc(A / 2) * csc((A - B) / 2) * s_eps * s_b
    g3 = -csc((A - B) / 2) * csc(B / 2) * s_eps * s_a
    return GammaTriple(g1, g2, g3, epsilon, A, B)


def default_offsets(epsilon: float) -> tuple[float, float]:
    """A = -sign(eps) * pi/4, B = pi. Zero error uses the positive-eps branch."""
    return (math.pi / 4 if epsilon < 0 else -math.pi / 4), math.pi


def gamma_default(epsilon: float, max_abs_epsilon: float = MAX_DEFAULT_EPSILON) -> GammaTriple:
    """Coefficients for the T-friendly offsets: branch 2 is a single T or T-dagger away."""
    if abs(epsilon) >= max_abs_epsilon:
        raise OutOfRegimeError(
            f"|epsilon| = {abs(epsilon):.6g} is not below {max_abs_epsilon:.6g}"
        )
    if epsilon == 0.0:
        A, B = default_offsets(0.0)
        return GammaTriple(1.0, 0.0, 0.0, 0.0, A, B)
    return gamma_general(epsilon, *default_offsets(epsilon))


def one_norm_closed_form(epsilon: float) -> float:
    """sec(pi/8) cos(|eps| - pi/8), valid for |eps| < pi/8."""
    if abs(epsilon) >= MAX_DEFAULT_EPSILON:
        raise OutOfRegimeError(f"|epsilon| = {abs(epsilon):.6g} is not below pi/8")
    return math.cos(abs(epsilon) - math.pi / 8) / math.cos(math.pi / 8)


def linear_system(theta: float, epsilon: float, A: float, B: float) -> tuple[np.ndarray, np.ndarray]:
    """Matrix and right-hand side whose solution is (g1, g2, g3).

    Rows match the coefficients of the identity channel, of the difference
    R(pi/2) - R(-pi/2), and of R(pi) when each channel is expanded in that basis.
    """
    angles = theta + epsilon + np.array([0.0, A, B])
    m = np.vstack([1 + np.cos(angles), np.sin(angles), 1 - np.cos(angles)])
    rhs = np.array([1 + math.cos(theta), math.sin(theta), 1 - math.cos(theta)])
    return m, rhs


def system_residual(g: GammaTriple, theta: float = 0.0) -> float:
    m, rhs = linear_system(theta, g.epsilon, g.offset_a, g.offset_b)
    return float(np.max(np.abs(m @ g.gammas - rhs)))


def sample_branch(g: GammaTriple, rng: np.random.Generator) -> BranchDraw:
    """Pick branch i with probability |g_i| / ||g||_1."""
    i = int(np.searchsorted(g.cdf, rng.random(), side="right"))
    return BranchDraw(i + 1, int(g.signs[i]), g.offsets[i])


def two_term_unitary_weights(theta: float, epsilon: float) -> list[tuple[float, float]]:
    """R(theta) = cos(eps/2) R(theta+eps) - sin(eps/2) R(theta+eps+pi) as operators."""
    return [
        (theta + epsilon, math.cos(epsilon / 2)),
        (theta + epsilon + math.pi, -math.sin(epsilon / 2)),
    ]


def four_term_weights(theta: float, epsilon: float) -> list[tuple[float, float]]:
    """(angle, weight) pairs whose weighted rotation channels sum to R(theta)."""
    c, s = math.cos(epsilon / 2), math.sin(epsilon / 2)
    base = theta + epsilon
    return [
        (base, c * c),
        (base + math.pi, s * s),
        (base + math.pi / 2, -c * s),
        (base - math.pi / 2, c * s),
    ]


@dataclass
class ABScan:
    epsilon: float
    a_values: np.ndarray
    b_values: np.ndarray
    one_norm: np.ndarray  # shape (len(a), len(b)); nan where singular
    feasible: np.ndarray  # bool mask used for the minimization (A > B, non-singular)

    @property
    def cell(self) -> float:
        return float(self.a_values[1] - self.a_values[0])

    def argmin(self) -> tuple[float, float, float]:
        masked = np.where(self.feasible, self.one_norm, np.inf)
        i, j = np.unravel_index(np.argmin(masked), masked.shape)
        return float(self.a_values[i]), float(self.b_values[j]), float(masked[i, j])

    def per_a_argmin(self) -> np.ndarray:
        """Rows (A, best B, min norm) for every A column with a feasible cell."""
        rows = []
        for i, a in enumerate(self.a_values):
            col = np.where(self.feasible[i], self.one_norm[i], np.inf)
            if np.isfinite(col).any():
                j = int(np.argmin(col))
                rows.append((a, self.b_values[j], col[j]))
        return np.array(rows)

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["A", "B", "one_norm"])
            for i, a in enumerate(self.a_values):
                for j, b in enumerate(self.b_values):
                    v = self.one_norm[i, j]
                    w.writerow([repr(float(a)), repr(float(b)), "" if np.isnan(v) else repr(float(v))])


def scan_ab(
    epsilon: float, grid_steps: int, tol: float = SINGULAR_TOL, require_a_gt_b: bool = True
) -> ABScan:
    """||g||_1 over a cell-centred grid A, B in (0, 2*pi).

    The full grid is kept for heatmap export; minimization only considers
    cells with A > B unless ``require_a_gt_b`` is False.
    """
    if grid_steps < 2:
        raise ValueError("grid_steps must be at least 2")
    h = _TWO_PI / grid_steps
    vals = (np.arange(grid_steps) + 0.5) * h
    norms = np.full((grid_steps, grid_steps), np.nan)
    for i, a in enumerate(vals):
        for j, b in enumerate(vals):
            try:
                norms[i, j] = gamma_general(epsilon, a, b, tol).one_norm
            except DegenerateDecompositionError:
                pass
    feasible = np.isfinite(norms)
    if require_a_gt_b:
        feasible &= vals[:, None] > vals[None, :]
    return ABScan(epsilon, vals, vals.copy(), norms, feasible)
