"""Unitary realization of the work weight with one ancilla qubit per step.

Amplitudes live in an ``(n_states, 2**m)`` array; column ``c`` encodes the
ancilla bitstring with ancilla ``j`` as bit ``j`` of ``c``. Ancilla ``j`` is
consumed by step ``j``, so unused ancillas are exactly the high bits and the
populated columns always form the prefix ``[0, 2**next_fresh)``.

The weight y(s) = e^{-dbeta E(s)} needs E >= 0; shift the cost first with
:func:`qjasim.model.shift_nonnegative`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .anneal import WaveVector
from .errors import (
    PErrorCapError,
    ParameterError,
    PreconditionError,
    ResourceError,
    ZeroProbabilityError,
)
from .model import CostFunction, Schedule, ground_state_set, log_partition
from .qmap import build_hq

MAX_DILATED_AMPLITUDES = 2**22
MAX_DENSE_DIMENSION = 2**11


def _require_shifted(cost: CostFunction):
    if cost.min_energy < 0:
        raise PreconditionError(
            f"dilation needs E >= 0 (min E = {cost.min_energy:g}); apply shift_nonnegative first"
        )


def w_unit_blocks(cost: CostFunction, dbeta: float, sign: float = -1.0) -> np.ndarray:
    """Per-state 2x2 rotations [[sqrt(y), sqrt(1-y)], [sign*sqrt(1-y), sqrt(y)]].

    Shape ``(n_states, 2, 2)``, indexed ``[s, out, in]``.
    """
    _require_shifted(cost)
    if dbeta < 0:
        raise ParameterError("dbeta must be >= 0")
    if dbeta * cost.max_energy >= 1.0:
        raise PErrorCapError(
            f"dbeta * max E = {dbeta * cost.max_energy:g} must stay below 1"
        )
    x = dbeta * cost.energies
    keep = np.exp(-0.5 * x)
    # sqrt(1 - e^{-x}) without cancellation for small x
    flip = np.sqrt(-np.expm1(-x))
    blocks = np.empty((cost.n, 2, 2))
    blocks[:, 0, 0] = keep
    blocks[:, 0, 1] = flip
    blocks[:, 1, 0] = sign * flip
    blocks[:, 1, 1] = keep
    return blocks


def build_w_unit(
    cost: CostFunction, dbeta: float, ancilla_index: int, m: int, sign: float = -1.0
) -> np.ndarray:
    """Dense unitary acting with the weight rotation on one ancilla.

    Basis ordering matches :class:`DilatedState`: row ``s * 2**m + c``.
    """
    if not 0 <= ancilla_index < m:
        raise ParameterError(f"ancilla_index must lie in [0, {m})")
    dim = cost.n * 2**m
    if dim > MAX_DENSE_DIMENSION:
        raise ResourceError(f"dense operator of dimension {dim} exceeds {MAX_DENSE_DIMENSION}")
    blocks = w_unit_blocks(cost, dbeta, sign)
    hi = np.eye(2 ** (m - 1 - ancilla_index))
    lo = np.eye(2**ancilla_index)
    op = np.zeros((dim, dim))
    size = 2**m
    for s in range(cost.n):
        op[s * size:(s + 1) * size, s * size:(s + 1) * size] = np.kron(np.kron(hi, blocks[s]), lo)
    return op


@dataclass(frozen=True, eq=False)
class DilatedState:
    amplitudes: np.ndarray
    n_ancilla: int
    next_fresh: int

    @property
    def n_states(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def pattern_probabilities(self) -> np.ndarray:
        """Probability of each ancilla column, length 2**n_ancilla."""
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)

    def weight_class_probabilities(self) -> np.ndarray:
        """Total probability of patterns with exactly j flipped ancillas, j = 0..m."""
        probs = self.pattern_probabilities()
        ones = np.array([bin(c).count("1") for c in range(probs.size)])
        return np.bincount(ones, weights=probs, minlength=self.n_ancilla + 1)


def _apply_rotation(amps, blocks, j):
    n, size = amps.shape
    t = amps.reshape(n, size // (2 * 2**j), 2, 2**j)
    return np.einsum("sxy,sayc->saxc", blocks, t).reshape(n, size)


def run_qja_dilated(
    cost: CostFunction,
    schedule: Schedule,
    *,
    sign: float = -1.0,
    max_amplitudes: int = MAX_DILATED_AMPLITUDES,
) -> DilatedState:
    """Fully unitary QJA: weight rotation on a fresh ancilla, then system evolution.

    Weighting is exact only on the all-zero ancilla branch; every other
    branch is an error state.
    """
    _require_shifted(cost)
    m = schedule.n_steps
    if cost.n * 2**m > max_amplitudes:
        raise ResourceError(
            f"{cost.n} states x 2^{m} ancilla patterns exceeds {max_amplitudes} amplitudes; "
            "use run_qja (weight method) instead"
        )
    amps = np.zeros((cost.n, 2**m), dtype=complex)
    amps[:, 0] = 1.0 / math.sqrt(cost.n)
    betas, dt = schedule.betas, schedule.dt
    for k in range(m):
        blocks = w_unit_blocks(cost, float(betas[k + 1] - betas[k]), sign)
        active = 2 ** (k + 1)
        amps[:, :active] = _apply_rotation(amps[:, :active], blocks, k)
        if dt:
            w, v = build_hq(cost, float(betas[k + 1])).eigensystem
            amps[:, :active] = v @ (np.exp(-1j * dt * w)[:, None] * (v.T @ amps[:, :active]))
    amps.setflags(write=False)
    return DilatedState(amps, m, m)


Pattern = Union[str, Sequence[int]]


def pattern_index(pattern: Pattern, m: int) -> int:
    bits = [int(b) for b in pattern]
    if len(bits) != m or any(b not in (0, 1) for b in bits):
        raise ParameterError(f"pattern must be {m} bits of 0/1, got {pattern!r}")
    return sum(b << j for j, b in enumerate(bits))


def postselect(state: DilatedState, pattern: Pattern) -> tuple[WaveVector, float]:
    """Condition on an ancilla outcome; ``pattern[j]`` is the bit of ancilla j."""
    col = state.amplitudes[:, pattern_index(pattern, state.n_ancilla)]
    scale = float(np.max(np.abs(col))) if col.size else 0.0
    if scale == 0.0:
        raise ZeroProbabilityError(f"pattern {pattern!r} has exactly zero amplitude")
    prob = float(np.vdot(col, col).real)
    if prob == 0.0:
        raise ZeroProbabilityError(
            f"pattern {pattern!r} probability underflows (largest amplitude {scale:.3e})",
            underflow=True,
        )
    return WaveVector(col / math.sqrt(prob)), prob


@dataclass(frozen=True)
class CostEstimate:
    p_error_cap: float
    n_steps: int
    expected_repetitions: float
    max_energy: float
    epsilon: float
    beta_final: float
    dbeta: float

    def to_dict(self, exact_expected_repetitions: Optional[float] = None) -> dict:
        d = {
            "p_error_cap": self.p_error_cap,
            "n_steps": self.n_steps,
            "expected_repetitions": self.expected_repetitions,
            "max_energy": self.max_energy,
            "epsilon": self.epsilon,
            "beta_final": self.beta_final,
            "dbeta": self.dbeta,
        }
        if exact_expected_repetitions is not None:
            d["exact_expected_repetitions"] = exact_expected_repetitions
        return d


def _ceil(x: float) -> int:
    # 10 / 0.01 evaluates to 1000.0000000000001 in binary
    r = round(x)
    return int(r) if abs(x - r) <= 1e-9 * max(1.0, abs(x)) else math.ceil(x)


def steps_estimate(
    cost: CostFunction, beta_final: Optional[float] = None, p_error_cap: float = 0.01
) -> CostEstimate:
    """Number of weight steps needed to reach ``beta_final`` under an error cap.

    The step size is dbeta = p_error_cap / max E and ``beta_final`` defaults
    to 1 / epsilon, the temperature at which the ground state is resolved.
    """
    _require_shifted(cost)
    if not 0 < p_error_cap <= 1:
        raise ParameterError("p_error_cap must lie in (0, 1]")
    eps = ground_state_set(cost).epsilon
    if eps is None:
        raise PreconditionError("all states are degenerate; the classical gap is undefined")
    if beta_final is None:
        beta_final = 1.0 / eps
    max_e = cost.max_energy
    dbeta = p_error_cap / max_e
    n = max(1, _ceil(beta_final / dbeta))
    return CostEstimate(
        p_error_cap=p_error_cap,
        n_steps=n,
        expected_repetitions=repetition_estimate(cost, beta_final, n),
        max_energy=max_e,
        epsilon=eps,
        beta_final=float(beta_final),
        dbeta=dbeta,
    )


def per_step_error(cost: CostFunction, dbeta: float) -> float:
    """Worst-state flip probability 1 - y = 1 - e^{-dbeta max E}."""
    return float(-np.expm1(-dbeta * cost.max_energy))


def repetition_estimate(cost: CostFunction, beta_final: float, n_steps: int) -> float:
    """1 / (1 - p_error)^n with p_error the worst-state flip probability per step."""
    _require_shifted(cost)
    if n_steps < 1:
        raise ParameterError("n_steps must be >= 1")
    p = per_step_error(cost, beta_final / n_steps)
    return float((1.0 - p) ** (-n_steps))


def linearized_repetitions(cost: CostFunction) -> float:
    """1 + max E / epsilon, valid while beta_final * max E stays small."""
    eps = ground_state_set(cost).epsilon
    if eps is None:
        return 1.0
    return 1.0 + cost.max_energy / eps


def exact_expected_repetitions(cost: CostFunction, beta_final: float) -> float:
    """N / Z(beta_final): inverse probability of the all-zero ancilla outcome."""
    _require_shifted(cost)
    return math.exp(math.log(cost.n) - log_partition(cost.energies, beta_final))
