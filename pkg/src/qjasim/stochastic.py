"""Detailed-balance Markov kernels and the classical Jarzynski equality.

Kernels are column-stochastic: ``entries[s2, s1]`` is the probability of a
single move s1 -> s2. Work along a temperature ramp is accumulated as
-dbeta_k * E(s_k) before the k-th transition, and the transition at step k
uses the kernel at the post-ramp inverse temperature beta_{k+1}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import expit

from .errors import ParameterError
from .model import CostFunction, Schedule, _check_beta, gibbs_state, log_partition

METROPOLIS = "metropolis"
HEAT_BATH = "heat-bath"


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    entries: np.ndarray
    beta: float
    rule: str = METROPOLIS

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def escape_rates(self) -> np.ndarray:
        """Total off-diagonal mass per column, 1 - M(s|s), without cancellation."""
        off = self.entries.copy()
        np.fill_diagonal(off, 0.0)
        return off.sum(axis=0)


def _acceptance(cost: CostFunction, beta: float, rule: str):
    src, dst = cost.edges()
    de = cost.energies[dst] - cost.energies[src]
    if rule == METROPOLIS:
        acc = np.exp(-beta * np.maximum(de, 0.0))
    elif rule == HEAT_BATH:
        acc = expit(-beta * de)
    else:
        raise ParameterError(f"unknown kernel rule {rule!r}")
    return src, dst, acc


def build_metropolis_matrix(cost: CostFunction, beta: float, rule: str = METROPOLIS) -> TransitionMatrix:
    """One-step kernel with nearest-neighbour proposals.

    Each neighbour is proposed with probability 1/max_degree and accepted
    with min(1, e^{-beta dE}) (or the heat-bath rule). Unproposed and
    rejected mass stays on the diagonal. A state-independent proposal keeps
    the kernel reversible on graphs with uneven degree, such as the ends of
    an open chain.
    """
    _check_beta(beta)
    n = cost.n
    m = np.zeros((n, n))
    if n > 1:
        src, dst, acc = _acceptance(cost, beta, rule)
        m[dst, src] = acc / cost.max_degree
        m[np.arange(n), np.arange(n)] = 1.0 - m.sum(axis=0)
    else:
        m[0, 0] = 1.0
    m.setflags(write=False)
    return TransitionMatrix(m, float(beta), rule)


def stationary_weights(cost: CostFunction, beta: float) -> np.ndarray:
    """Gibbs weights e^{-beta (E - min E)}, each in (0, 1]."""
    return np.exp(-beta * (cost.energies - cost.min_energy))


def verify_detailed_balance(M: TransitionMatrix, cost: CostFunction) -> float:
    if M.n != cost.n:
        raise ParameterError(f"kernel is {M.n}x{M.n} but cost has {cost.n} states")
    pi = stationary_weights(cost, M.beta)
    flow = M.entries * pi[None, :]
    return float(np.max(np.abs(flow - flow.T))) if cost.n > 1 else 0.0


class WorkSample(NamedTuple):
    trajectory: tuple[int, ...]
    work_exponent: float
    weight: float


Kernel = Callable[[CostFunction, float], TransitionMatrix]


def _sample_column(rng, column):
    c = np.cumsum(column)
    return int(min(np.searchsorted(c, rng.random() * c[-1], side="right"), column.size - 1))


def sample_trajectory(
    cost: CostFunction,
    schedule: Schedule,
    rng_seed: int,
    kernel: Kernel = build_metropolis_matrix,
) -> WorkSample:
    """Draw one nonequilibrium trajectory and its exponentiated work."""
    rng = np.random.default_rng(rng_seed)
    betas = schedule.betas
    s = _sample_column(rng, gibbs_state(cost, float(betas[0])).probabilities)
    traj = [s]
    w = 0.0
    for k in range(schedule.n_steps):
        w -= (betas[k + 1] - betas[k]) * cost.energies[s]
        m = kernel(cost, float(betas[k + 1]))
        s = _sample_column(rng, m.entries[:, s])
        traj.append(s)
    return WorkSample(tuple(traj), float(w), math.exp(w))


def work_exponents(
    cost: CostFunction,
    schedule: Schedule,
    n_samples: int,
    rng_seed: int,
    kernel: Kernel = build_metropolis_matrix,
) -> np.ndarray:
    """Work exponents of ``n_samples`` independent trajectories, vectorized."""
    rng = np.random.default_rng(rng_seed)
    betas = schedule.betas
    e = cost.energies
    p0 = gibbs_state(cost, float(betas[0])).probabilities
    s = np.minimum(np.searchsorted(np.cumsum(p0), rng.random(n_samples), side="right"), cost.n - 1)
    w = np.zeros(n_samples)
    for k in range(schedule.n_steps):
        w -= (betas[k + 1] - betas[k]) * e[s]
        cum = np.cumsum(kernel(cost, float(betas[k + 1])).entries, axis=0)
        u = rng.random(n_samples) * cum[-1, s]
        # first row whose cumulative column mass exceeds u
        s = np.minimum((u[:, None] >= cum[:, s].T).sum(axis=1), cost.n - 1)
    return w


def jarzynski_estimate(
    cost: CostFunction,
    schedule: Schedule,
    n_samples: int,
    rng_seed: int,
    kernel: Kernel = build_metropolis_matrix,
) -> tuple[float, float]:
    """Sample mean of e^{-beta W} and its standard error."""
    if n_samples < 2:
        raise ParameterError("n_samples must be >= 2")
    weights = np.exp(work_exponents(cost, schedule, n_samples, rng_seed, kernel))
    return float(weights.mean()), float(weights.std(ddof=1) / math.sqrt(n_samples))


def exact_partition_ratio(cost: CostFunction, beta_0: float, beta_n: float) -> float:
    """Z(beta_n) / Z(beta_0)."""
    if not (math.isfinite(beta_0) and math.isfinite(beta_n)):
        raise ParameterError("betas must be finite")
    if beta_0 == beta_n:
        return 1.0
    return math.exp(log_partition(cost.energies, beta_n) - log_partition(cost.energies, beta_0))
