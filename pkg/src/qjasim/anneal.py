"""State-vector propagation for ordinary QA and Jarzynski-weighted QA.

Each QJA step multiplies the state by the diagonal work weight
e^{-dbeta_k E / 2} and then evolves it for dt under the mapped Hamiltonian at
the new inverse temperature. Starting from the uniform state (the beta = 0
Gibbs amplitudes) the state stays proportional to the instantaneous Gibbs
amplitudes however fast beta is ramped, since the unitary leaves its own
zero-energy ground state untouched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericRangeError, ParameterError
from .model import CostFunction, Schedule, gibbs_state, ground_state_set
from .qmap import QuantumHamiltonian, build_hq

W_THEN_U = "wu"
U_THEN_W = "uw"


@dataclass(frozen=True, eq=False)
class WaveVector:
    amplitudes: np.ndarray
    norm_sq: float = field(init=False)

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if a.ndim != 1:
            raise ParameterError("amplitudes must be a vector")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "norm_sq", float(np.vdot(a, a).real))

    @property
    def n(self) -> int:
        return self.amplitudes.size

    def normalized(self) -> np.ndarray:
        if self.norm_sq == 0.0:
            raise ParameterError("zero vector has no direction")
        return self.amplitudes / math.sqrt(self.norm_sq)


def uniform_initial_state(n: int) -> WaveVector:
    if n < 1:
        raise ParameterError("n must be >= 1")
    return WaveVector(np.full(n, 1.0 / math.sqrt(n)))


def evolution_operator(H: QuantumHamiltonian, dt: float) -> np.ndarray:
    """exp(-i dt H) from the eigendecomposition of H."""
    w, v = H.eigensystem
    return (v * np.exp(-1j * dt * w)) @ v.T


def propagate_step(psi: WaveVector, H: QuantumHamiltonian, dt: float) -> WaveVector:
    if psi.n != H.n:
        raise ParameterError("dimensions differ")
    if dt == 0:
        return psi
    w, v = H.eigensystem
    return WaveVector(v @ (np.exp(-1j * dt * w) * (v.T @ psi.amplitudes)))


def work_weights(cost: CostFunction, dbeta: float) -> np.ndarray:
    return np.exp(-0.5 * dbeta * cost.energies)


def apply_work_weight(psi: WaveVector, cost: CostFunction, dbeta: float) -> WaveVector:
    """Multiply by e^{-dbeta E / 2}; the result is not renormalized."""
    if dbeta < 0:
        raise ParameterError("dbeta must be >= 0")
    if psi.n != cost.n:
        raise ParameterError("dimensions differ")
    if dbeta == 0:
        return psi
    return WaveVector(psi.amplitudes * work_weights(cost, dbeta))


def gibbs_fidelity(psi: WaveVector, cost: CostFunction, beta: float) -> float:
    a = gibbs_state(cost, beta).amplitudes
    return float(abs(np.vdot(a, psi.normalized())) ** 2)


def ground_state_probability(psi: WaveVector, cost: CostFunction, tol: float = 1e-12) -> float:
    if psi.norm_sq == 0.0:
        raise ParameterError("zero vector")
    idx = sorted(ground_state_set(cost, tol).states)
    a = psi.amplitudes[idx]
    return float(np.vdot(a, a).real / psi.norm_sq)


def gibbs_ground_probability(cost: CostFunction, beta: float, tol: float = 1e-12) -> float:
    idx = sorted(ground_state_set(cost, tol).states)
    return float(gibbs_state(cost, beta).probabilities[idx].sum())


@dataclass
class RunResult:
    """Observables recorded along one annealing run, one row per record."""

    method: str
    tau: float
    step: np.ndarray
    t: np.ndarray
    beta: np.ndarray
    p_ground: np.ndarray
    p_ground_gibbs: np.ndarray
    fidelity: np.ndarray
    norm_sq: np.ndarray
    final: WaveVector

    COLUMNS = ("step", "t", "beta", "p_ground", "p_ground_gibbs", "fidelity", "norm_sq")

    def rows(self):
        return zip(*(getattr(self, c) for c in self.COLUMNS))

    @property
    def final_p_ground(self) -> float:
        return float(self.p_ground[-1])


def record_every(n_steps: int, max_records: int = 500) -> int:
    return max(1, math.ceil(n_steps / max_records))


class _Recorder:
    def __init__(self, cost, schedule, every, tol):
        self.cost, self.schedule, self.every, self.tol = cost, schedule, every, tol
        self.rows = []

    def maybe(self, k, psi):
        if k % self.every and k != self.schedule.n_steps:
            return
        beta = float(self.schedule.betas[k])
        self.rows.append((
            k,
            float(self.schedule.times[k]),
            beta,
            ground_state_probability(psi, self.cost, self.tol),
            gibbs_ground_probability(self.cost, beta, self.tol),
            gibbs_fidelity(psi, self.cost, beta),
            psi.norm_sq,
        ))

    def result(self, method, psi):
        cols = list(zip(*self.rows))
        arrays = [np.array(cols[0], dtype=np.int64)] + [np.array(c, dtype=float) for c in cols[1:]]
        return RunResult(method, self.schedule.tau, *arrays, final=psi)


def _hq(cost, beta, k, rule):
    try:
        return build_hq(cost, beta, rule=rule)
    except NumericRangeError as exc:
        raise NumericRangeError(str(exc), step=k) from exc


def _run(cost, schedule, step_fn, method, every, tol):
    every = record_every(schedule.n_steps) if every is None else every
    rec = _Recorder(cost, schedule, every, tol)
    psi = uniform_initial_state(cost.n)
    rec.maybe(0, psi)
    for k in range(schedule.n_steps):
        psi = step_fn(k, psi)
        rec.maybe(k + 1, psi)
    return rec.result(method, psi)


def run_qja(
    cost: CostFunction,
    schedule: Schedule,
    *,
    ordering: str = W_THEN_U,
    every: Optional[int] = None,
    tol: float = 1e-12,
    rule: str = "metropolis",
) -> RunResult:
    """Jarzynski-weighted annealing from the uniform state.

    ``ordering="wu"`` weights first and then evolves under H_q(beta_{k+1});
    ``"uw"`` evolves under H_q(beta_k) first, the literal right-to-left
    reading of the product formula. Both keep the state on the Gibbs curve.
    """
    if ordering not in (W_THEN_U, U_THEN_W):
        raise ParameterError(f"ordering must be 'wu' or 'uw', got {ordering!r}")
    betas, dt = schedule.betas, schedule.dt

    def step(k, psi):
        db = float(betas[k + 1] - betas[k])
        if ordering == W_THEN_U:
            psi = apply_work_weight(psi, cost, db)
            return propagate_step(psi, _hq(cost, float(betas[k + 1]), k + 1, rule), dt)
        psi = propagate_step(psi, _hq(cost, float(betas[k]), k, rule), dt)
        return apply_work_weight(psi, cost, db)

    return _run(cost, schedule, step, "qja", every, tol)


def run_qa(
    cost: CostFunction,
    schedule: Schedule,
    *,
    every: Optional[int] = None,
    tol: float = 1e-12,
    rule: str = "metropolis",
) -> RunResult:
    """Unitary evolution under H_q(beta(t)) with no work weighting."""
    betas, dt = schedule.betas, schedule.dt

    def step(k, psi):
        return propagate_step(psi, _hq(cost, float(betas[k + 1]), k + 1, rule), dt)

    return _run(cost, schedule, step, "qa", every, tol)


def transverse_hamiltonian(n: int, strength: float = 1.0) -> np.ndarray:
    """strength * (I - |u><u|) with |u> the uniform superposition."""
    return strength * (np.eye(n) - np.full((n, n), 1.0 / n))


def interpolated_hamiltonian(cost: CostFunction, f: float, strength: float = 1.0) -> QuantumHamiltonian:
    h = (1.0 - f) * transverse_hamiltonian(cost.n, strength)
    h[np.diag_indices(cost.n)] += f * cost.energies
    return QuantumHamiltonian(h)


def run_qa_interpolated(
    cost: CostFunction,
    schedule: Schedule,
    transverse_strength: float = 1.0,
    *,
    every: Optional[int] = None,
    tol: float = 1e-12,
) -> RunResult:
    """Two-Hamiltonian QA under f(t) E + (1 - f(t)) H_1 with f(t) = t / tau."""
    if transverse_strength <= 0:
        raise ParameterError("transverse_strength must be > 0")
    times, dt = schedule.times, schedule.dt

    def step(k, psi):
        H = interpolated_hamiltonian(cost, schedule.f(float(times[k + 1])), transverse_strength)
        return propagate_step(psi, H, dt)

    return _run(cost, schedule, step, "qa-interp", every, tol)


def interpolated_min_gap(cost: CostFunction, transverse_strength: float = 1.0, grid: int = 201) -> float:
    gaps = []
    for f in np.linspace(0.0, 1.0, grid):
        w = np.linalg.eigvalsh(interpolated_hamiltonian(cost, float(f), transverse_strength).matrix)
        gaps.append(w[1] - w[0])
    return float(min(gaps))

