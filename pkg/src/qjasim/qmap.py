"""Classical-quantum mapping of a reversible kernel to a stoquastic Hamiltonian.

H(s', s) = delta(s', s) - e^{beta E(s')/2} M(s'|s) e^{-beta E(s)/2}.

Its ground state is the square-root Gibbs vector with eigenvalue zero. When
the move graph is the open chain in index order the Hamiltonian factors as
H = G^T G with G upper bidiagonal,

    G[e, e]   =  sqrt(M(e+1 | e))
    G[e, e+1] = -sqrt(M(e | e+1)),

and every entry of G carries full relative precision. The spectrum is then
taken from a bidiagonal SVD, which resolves gaps many orders of magnitude
below machine epsilon (the low-temperature regime where a dense
eigensolver loses the ground vector entirely).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from .errors import NumericRangeError, ParameterError, UndefinedGapError
from .model import CostFunction, Schedule, _check_beta, gibbs_state
from .stochastic import METROPOLIS, TransitionMatrix, build_metropolis_matrix

# e^{700} is close to the float64 ceiling
_MAX_EXPONENT = 700.0


@dataclass(frozen=True, eq=False)
class QuantumHamiltonian:
    matrix: np.ndarray
    beta: float = 0.0
    factor: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and orthonormal eigenvectors (columns)."""
        if self.factor is not None:
            _, s, vt = scipy.linalg.svd(self.factor, lapack_driver="gesvd")
            order = np.argsort(s, kind="stable")
            w, v = s[order] ** 2, vt[order].T
        else:
            w, v = np.linalg.eigh(self.matrix)
        # Perron vector is positive; fix the sign so it reads that way
        if v[:, 0].sum() < 0:
            v = v.copy()
            v[:, 0] *= -1
        return w, v

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigensystem[0]

    @property
    def gap(self) -> float:
        return spectral_gap(self)

    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.T)))


def _bidiagonal_factor(M: TransitionMatrix) -> np.ndarray:
    n = M.n
    g = np.zeros((n, n))
    i = np.arange(n - 1)
    g[i, i] = np.sqrt(M.entries[i + 1, i])
    g[i, i + 1] = -np.sqrt(M.entries[i, i + 1])
    return g


def build_hq(
    cost: CostFunction,
    beta: float,
    kernel: Optional[TransitionMatrix] = None,
    rule: str = METROPOLIS,
) -> QuantumHamiltonian:
    """Mapped Hamiltonian at inverse temperature ``beta``.

    Off-diagonal entries are formed pairwise as M(s'|s) e^{beta (E(s') - E(s))/2}
    so only energy differences are exponentiated. The diagonal is the escape
    probability of each state, summed from the off-diagonal column rather
    than computed as 1 - M(s|s).
    """
    _check_beta(beta)
    own_kernel = kernel is None
    if own_kernel:
        src, dst = cost.edges()
        if src.size and beta * float(np.max(np.abs(cost.energies[dst] - cost.energies[src]))) > _MAX_EXPONENT:
            raise NumericRangeError(
                f"beta * max|dE| exceeds {_MAX_EXPONENT:g}; kernel entries underflow at beta={beta}"
            )
        kernel = build_metropolis_matrix(cost, beta, rule)
    elif kernel.n != cost.n:
        raise ParameterError("kernel and cost dimensions differ")
    e = cost.energies
    de = e[:, None] - e[None, :]
    off = kernel.entries.copy()
    np.fill_diagonal(off, 0.0)
    nz = off != 0.0
    if nz.any() and kernel.beta * float(np.max(np.abs(de[nz]))) / 2 > _MAX_EXPONENT:
        raise NumericRangeError(f"similarity transform overflows at beta={kernel.beta}")
    s = np.zeros_like(off)
    s[nz] = off[nz] * np.exp(kernel.beta * de[nz] / 2)
    h = -s
    h[np.diag_indices_from(h)] = off.sum(axis=0)
    h = 0.5 * (h + h.T)
    h.setflags(write=False)
    # the factorization needs reversibility, which only our own kernels guarantee
    factor = _bidiagonal_factor(kernel) if own_kernel and cost.is_index_path and cost.n > 1 else None
    return QuantumHamiltonian(h, float(kernel.beta), factor)


class GroundCheck(NamedTuple):
    energy_residual: float
    overlap_deficit: float


def ground_state_check(H: QuantumHamiltonian, cost: CostFunction) -> GroundCheck:
    if H.n != cost.n:
        raise ParameterError("dimensions differ")
    a = gibbs_state(cost, H.beta).amplitudes
    residual = float(np.linalg.norm(H.matrix @ a))
    v0 = H.eigensystem[1][:, 0]
    return GroundCheck(residual, float(1.0 - abs(a @ v0) ** 2))


def spectral_gap(H: QuantumHamiltonian, zero_tol: float = 1e-10) -> float:
    if H.n < 2:
        raise UndefinedGapError("a single-level system has no gap")
    w = H.eigenvalues
    if abs(w[0]) > zero_tol:
        raise NumericRangeError(f"lowest eigenvalue {w[0]:.3e} is not zero")
    return float(w[1] - w[0])


class GapScan(NamedTuple):
    delta_min: float
    beta_at_min: float


def gap_profile(cost: CostFunction, schedule: Schedule, grid: int, rule: str = METROPOLIS):
    """Rows (beta, lambda_0, lambda_1, gap) on ``grid`` evenly spaced betas."""
    if grid < 2:
        raise ParameterError("grid must be >= 2")
    rows = []
    for beta in np.linspace(schedule.betas[0], schedule.beta_final, grid):
        H = build_hq(cost, float(beta), rule=rule)
        w = H.eigenvalues
        rows.append((float(beta), float(w[0]), float(w[1]), spectral_gap(H)))
    return rows


def min_gap_along_schedule(cost: CostFunction, schedule: Schedule, grid: int) -> GapScan:
    rows = gap_profile(cost, schedule, grid)
    beta, _, _, gap = min(rows, key=lambda r: r[3])
    return GapScan(gap, beta)
