"""Cost functions, Gibbs states and annealing schedules.

Everything here is immutable after construction. Energies are stored as
read-only float64 arrays so instances can be shared between concurrent runs.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from .errors import ParameterError

OPEN_CHAIN = "open-chain"
PERIODIC_CHAIN = "periodic-chain"
EXPLICIT = "explicit"


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def chain_neighbors(n: int, periodic: bool = False) -> tuple[tuple[int, ...], ...]:
    nbrs = []
    for i in range(n):
        s = set()
        if i > 0:
            s.add(i - 1)
        if i < n - 1:
            s.add(i + 1)
        if periodic and n > 2:
            s.add((i - 1) % n)
            s.add((i + 1) % n)
        nbrs.append(tuple(sorted(s)))
    return tuple(nbrs)


@dataclass(frozen=True, eq=False)
class CostFunction:
    """Classical Hamiltonian on an explicitly enumerated state space.

    ``energies[s]`` is E(s); ``neighbors[s]`` lists the states reachable from
    ``s`` by a single move. ``boundary`` records how the neighbour list was
    produced so it can be serialized compactly.
    """

    energies: np.ndarray
    neighbors: tuple[tuple[int, ...], ...]
    label: str = ""
    boundary: str = EXPLICIT
    seed: Optional[int] = None

    def __post_init__(self):
        e = _frozen(self.energies)
        if e.ndim != 1 or e.size < 1:
            raise ParameterError("energies must be a non-empty vector")
        if not np.all(np.isfinite(e)):
            raise ParameterError("energies must be finite")
        object.__setattr__(self, "energies", e)
        nbrs = tuple(tuple(int(j) for j in row) for row in self.neighbors)
        n = e.size
        if len(nbrs) != n:
            raise ParameterError(f"neighbors has {len(nbrs)} rows for {n} states")
        for i, row in enumerate(nbrs):
            for j in row:
                if not 0 <= j < n or j == i:
                    raise ParameterError(f"invalid neighbor {j} of state {i}")
                if i not in nbrs[j]:
                    raise ParameterError(f"neighbor relation not symmetric: {i}->{j}")
        object.__setattr__(self, "neighbors", nbrs)
        if not _connected(nbrs):
            raise ParameterError("move graph is not connected")

    @classmethod
    def chain(cls, energies, periodic=False, label="", seed=None):
        energies = np.asarray(energies, dtype=float)
        return cls(
            energies,
            chain_neighbors(energies.size, periodic),
            label=label,
            boundary=PERIODIC_CHAIN if periodic else OPEN_CHAIN,
            seed=seed,
        )

    @property
    def n(self) -> int:
        return self.energies.size

    @property
    def min_energy(self) -> float:
        return float(self.energies.min())

    @property
    def max_energy(self) -> float:
        return float(self.energies.max())

    @property
    def energy_range(self) -> float:
        return self.max_energy - self.min_energy

    @property
    def max_degree(self) -> int:
        return max(len(row) for row in self.neighbors)

    @property
    def epsilon(self) -> Optional[float]:
        """Smallest positive E(s) - min E, or None when all energies coincide."""
        return ground_state_set(self).epsilon

    @cached_property
    def is_index_path(self) -> bool:
        """True when the move graph is exactly the open chain 0-1-...-(n-1)."""
        return self.neighbors == chain_neighbors(self.n, periodic=False)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Directed edge list ``(src, dst)`` covering both directions."""
        return self._edges

    @cached_property
    def _edges(self):
        src = np.array([i for i, row in enumerate(self.neighbors) for _ in row], dtype=np.intp)
        dst = np.array([j for row in self.neighbors for j in row], dtype=np.intp)
        src.setflags(write=False)
        dst.setflags(write=False)
        return src, dst

    def with_energies(self, energies, label=None) -> "CostFunction":
        return CostFunction(
            energies,
            self.neighbors,
            label=self.label if label is None else label,
            boundary=self.boundary,
            seed=self.seed,
        )

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        # repr() of a Python float is the shortest round-trip form, so the
        # JSON text reproduces every energy bit for bit.
        if self.boundary in (OPEN_CHAIN, PERIODIC_CHAIN):
            nbrs = self.boundary
        else:
            nbrs = [list(row) for row in self.neighbors]
        d = {"n": self.n, "energies": [float(x) for x in self.energies], "neighbors": nbrs}
        if self.seed is not None:
            d["seed"] = self.seed
        if self.label:
            d["label"] = self.label
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "CostFunction":
        energies = np.array(d["energies"], dtype=float)
        if "n" in d and d["n"] != energies.size:
            raise ParameterError(f"n={d['n']} does not match {energies.size} energies")
        nbrs = d.get("neighbors", OPEN_CHAIN)
        label = d.get("label", "")
        seed = d.get("seed")
        if nbrs == OPEN_CHAIN:
            return cls.chain(energies, periodic=False, label=label, seed=seed)
        if nbrs == PERIODIC_CHAIN:
            return cls.chain(energies, periodic=True, label=label, seed=seed)
        if isinstance(nbrs, str):
            raise ParameterError(f"unknown neighbor structure {nbrs!r}")
        return cls(energies, tuple(tuple(r) for r in nbrs), label=label, seed=seed)

    @classmethod
    def from_json(cls, text: str) -> "CostFunction":
        return cls.from_dict(json.loads(text))


def _connected(nbrs) -> bool:
    n = len(nbrs)
    seen = {0}
    todo = deque([0])
    while todo:
        i = todo.popleft()
        for j in nbrs[i]:
            if j not in seen:
                seen.add(j)
                todo.append(j)
    return len(seen) == n


def build_random_potential(
    n_sites: int,
    seed: int,
    v_low: float = 0.0,
    v_high: float = 1.0,
    periodic: bool = False,
) -> CostFunction:
    """One-dimensional random potential E(i) = -V_i.

    V_i are i.i.d. uniform on ``[v_low, v_high)`` drawn from numpy's PCG64
    generator seeded with ``seed``; the stream is stable across platforms
    and numpy versions.
    """
    if int(n_sites) != n_sites or n_sites < 2:
        raise ParameterError(f"n_sites must be an integer >= 2, got {n_sites}")
    if not (math.isfinite(v_low) and math.isfinite(v_high)) or not v_low < v_high:
        raise ParameterError(f"need finite v_low < v_high, got [{v_low}, {v_high})")
    rng = np.random.Generator(np.random.PCG64(seed))
    v = v_low + (v_high - v_low) * rng.random(int(n_sites))
    return CostFunction.chain(
        -v, periodic=periodic, label=f"random-potential(n={n_sites}, seed={seed})", seed=seed
    )


@dataclass(frozen=True, eq=False)
class GibbsState:
    beta: float
    probabilities: np.ndarray
    amplitudes: np.ndarray
    log_Z: float


def _check_beta(beta):
    if not math.isfinite(beta) or beta < 0:
        raise ParameterError(f"beta must be finite and >= 0, got {beta}")


def log_partition(energies, beta: float) -> float:
    """log sum exp(-beta E), evaluated with the minimum energy factored out."""
    e = np.asarray(energies, dtype=float)
    e0 = e.min()
    return float(-beta * e0 + np.log(np.sum(np.exp(-beta * (e - e0)))))


def gibbs_state(cost: CostFunction, beta: float) -> GibbsState:
    _check_beta(beta)
    e = cost.energies
    w = np.exp(-beta * (e - e.min()))
    z = w.sum()
    p = w / z
    a = np.sqrt(w) / math.sqrt(z)
    return GibbsState(
        beta=float(beta),
        probabilities=_frozen(p),
        amplitudes=_frozen(a),
        log_Z=float(-beta * e.min() + math.log(z)),
    )


class GroundStates(NamedTuple):
    states: frozenset
    epsilon: Optional[float]


def ground_state_set(cost: CostFunction, tol: float = 1e-12) -> GroundStates:
    """States within ``tol`` of the minimum, plus the classical gap.

    The gap is the smallest E(s) - min E exceeding ``tol``; it is ``None``
    when every state is a ground state.
    """
    if tol < 0:
        raise ParameterError("tol must be >= 0")
    de = cost.energies - cost.energies.min()
    ground = frozenset(int(i) for i in np.flatnonzero(de <= tol))
    excited = de[de > tol]
    eps = float(excited.min()) if excited.size else None
    return GroundStates(ground, eps)


def shift_nonnegative(cost: CostFunction, margin: float = 0.0) -> tuple[CostFunction, float]:
    """Shift energies so that the minimum equals ``margin`` (>= 0)."""
    if margin < 0:
        raise ParameterError("margin must be >= 0")
    offset = -cost.min_energy + margin
    if offset == 0.0:
        return cost, 0.0
    return cost.with_energies(cost.energies + offset), float(offset)


@dataclass(frozen=True)
class Schedule:
    """Linear inverse-temperature ramp over ``n_steps`` equal time steps.

    beta(t_k) = beta_start + (beta_max - beta_start) * k / n_steps with
    t_k = tau * k / n_steps. ``n_steps == 0`` describes an empty protocol.
    """

    beta_max: float
    tau: float
    n_steps: int
    beta_start: float = 0.0
    times: np.ndarray = field(init=False, repr=False, compare=False)
    betas: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.beta_max) or self.beta_max < 0:
            raise ParameterError(f"beta_max must be finite and >= 0, got {self.beta_max}")
        if not math.isfinite(self.beta_start) or not 0 <= self.beta_start <= self.beta_max:
            raise ParameterError("need 0 <= beta_start <= beta_max")
        if not math.isfinite(self.tau) or self.tau <= 0:
            raise ParameterError(f"tau must be > 0, got {self.tau}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ParameterError(f"n_steps must be a nonnegative integer, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        if self.n_steps == 0:
            betas = np.array([self.beta_start])
            times = np.array([0.0])
        else:
            # linspace pins both endpoints exactly
            betas = np.linspace(self.beta_start, self.beta_max, self.n_steps + 1)
            times = np.linspace(0.0, self.tau, self.n_steps + 1)
        object.__setattr__(self, "betas", _frozen(betas))
        object.__setattr__(self, "times", _frozen(times))

    @property
    def dt(self) -> float:
        return self.tau / self.n_steps if self.n_steps else 0.0

    @property
    def dbetas(self) -> np.ndarray:
        return np.diff(self.betas)

    @property
    def beta_final(self) -> float:
        return float(self.betas[-1])

    def beta(self, t: float) -> float:
        return self.beta_start + (self.beta_max - self.beta_start) * self.f(t)

    def f(self, t: float) -> float:
        """Interpolation profile with f(0) = 0 and f(tau) = 1."""
        return min(max(t / self.tau, 0.0), 1.0)


def default_n_steps(cost: CostFunction, beta_max: float) -> int:
    """Step count keeping dbeta * range(E) <= 0.01, never below 1000."""
    return max(1000, math.ceil(beta_max * cost.energy_range / 0.01))


def linear_schedule(cost: CostFunction, beta_max: float, tau: float, n_steps=None) -> Schedule:
    if n_steps is None:
        n_steps = default_n_steps(cost, beta_max)
    return Schedule(beta_max=beta_max, tau=tau, n_steps=n_steps)
