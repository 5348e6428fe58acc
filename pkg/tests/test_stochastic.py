import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qjasim.model import CostFunction, Schedule, build_random_potential
from qjasim.stochastic import (
    HEAT_BATH,
    TransitionMatrix,
    build_metropolis_matrix,
    exact_partition_ratio,
    jarzynski_estimate,
    sample_trajectory,
    verify_detailed_balance,
    work_exponents,
)



def frozen_kernel(cost, beta):
    return TransitionMatrix(np.eye(cost.n), beta)


class TestMetropolis:
    def test_two_level_hand_computed(self, two_level):
        m = build_metropolis_matrix(two_level, math.log(2)).entries
        np.testing.assert_allclose(m, [[0.5, 1.0], [0.5, 0.0]], rtol=0, atol=1e-15)
        pi = np.array([2 / 3, 1 / 3])
        np.testing.assert_allclose(m @ pi, pi, atol=1e-15)

    def test_infinite_temperature(self):
        c = build_random_potential(9, 2)
        m = build_metropolis_matrix(c, 0.0).entries
        np.testing.assert_allclose(m, m.T, atol=0)
        np.testing.assert_allclose(m @ np.full(9, 1 / 9), np.full(9, 1 / 9), atol=1e-15)

    @pytest.mark.parametrize("rule", ["metropolis", HEAT_BATH])
    @pytest.mark.parametrize("periodic", [False, True])
    def test_stochastic_and_reversible(self, rule, periodic):
        rng = np.random.default_rng(0)
        for _ in range(20):
            c = build_random_potential(int(rng.integers(2, 30)), int(rng.integers(1000)), periodic=periodic)
            for beta in (0.0, 1.0, 10.0, 100.0):
                m = build_metropolis_matrix(c, beta, rule)
                assert np.all(m.entries >= 0)
                np.testing.assert_allclose(m.entries.sum(axis=0), 1.0, rtol=0, atol=1e-12)
                assert verify_detailed_balance(m, c) < 1e-12

    def test_star_graph_reversible(self):
        # hub with uneven degrees: state-dependent proposals would break balance here
        c = CostFunction(np.array([0.3, -0.2, 0.5, 0.1]), ((1, 2, 3), (0,), (0,), (0,)))
        assert verify_detailed_balance(build_metropolis_matrix(c, 3.0), c) < 1e-15


class TestDetailedBalanceCheck:
    def test_injected_fault(self):
        c = build_random_potential(5, 7)
        m = build_metropolis_matrix(c, 1.0).entries.copy()
        i, j = 2, 1
        m[i, j] += 1e-3
        pi = np.exp(-1.0 * (c.energies - c.min_energy))
        r = verify_detailed_balance(TransitionMatrix(m, 1.0), c)
        assert r == pytest.approx(1e-3 * pi[j], rel=1e-6)

    def test_single_state(self):
        c = CostFunction.chain([1.0])
        assert verify_detailed_balance(build_metropolis_matrix(c, 5.0), c) == 0.0


class TestTrajectories:
    def test_no_steps(self, two_level):
        s = sample_trajectory(two_level, Schedule(beta_max=1.0, tau=1.0, n_steps=0), 3)
        assert s.weight == 1.0 and len(s.trajectory) == 1

    def test_constant_beta_zero_work(self):
        c = build_random_potential(6, 1)
        sched = Schedule(beta_max=2.0, tau=1.0, n_steps=25, beta_start=2.0)
        s = sample_trajectory(c, sched, 4)
        assert s.weight == 1.0 and len(s.trajectory) == 26

    def test_frozen_kernel_telescopes(self):
        c = build_random_potential(6, 1)
        sched = Schedule(beta_max=3.0, tau=1.0, n_steps=17)
        for seed in range(5):
            s = sample_trajectory(c, sched, seed, kernel=frozen_kernel)
            assert len(set(s.trajectory)) == 1
            assert s.work_exponent == pytest.approx(-3.0 * c.energies[s.trajectory[0]], rel=1e-14)

    def test_vectorized_matches_frozen_kernel(self):
        c = build_random_potential(5, 9)
        sched = Schedule(beta_max=2.0, tau=1.0, n_steps=8)
        w = work_exponents(c, sched, 1000, 1, kernel=frozen_kernel)
        allowed = -2.0 * c.energies
        assert np.all(np.min(np.abs(w[:, None] - allowed[None, :]), axis=1) < 1e-13)


class TestJarzynski:
    def test_constant_beta(self):
        c = build_random_potential(4, 0)
        mean, se = jarzynski_estimate(c, Schedule(beta_max=1.5, tau=1.0, n_steps=10, beta_start=1.5), 500, 0)
        assert mean == 1.0 and se == 0.0

    def test_single_state(self):
        c = CostFunction.chain([-0.7])
        mean, se = jarzynski_estimate(c, Schedule(beta_max=2.0, tau=1.0, n_steps=10), 100, 0)
        assert mean == pytest.approx(math.exp(1.4), rel=1e-13)
        assert mean == pytest.approx(exact_partition_ratio(c, 0.0, 2.0), rel=1e-13)

    def test_four_sites_against_exact_ratio(self):
        c = build_random_potential(4, 21)
        sched = Schedule(beta_max=2.0, tau=1.0, n_steps=10)
        mean, se = jarzynski_estimate(c, sched, 100_000, 5)
        assert abs(mean - exact_partition_ratio(c, 0.0, 2.0)) <= 3 * se

    def test_needs_two_samples(self, two_level):
        with pytest.raises(ValueError):
            jarzynski_estimate(two_level, Schedule(1.0, 1.0, 1), 1, 0)


class TestPartitionRatio:
    def test_identity(self, chain50):
        assert exact_partition_ratio(chain50, 3.0, 3.0) == 1.0

    def test_two_level(self, two_level):
        assert exact_partition_ratio(two_level, 0.0, 1.0) == pytest.approx(0.6839397205857211608, rel=1e-15)

    @given(st.floats(-10, 10), st.floats(0, 20), st.floats(0, 20))
    @settings(max_examples=50)
    def test_shift_bookkeeping(self, shift, b0, b1):
        c = build_random_potential(8, 3)
        moved = c.with_energies(c.energies + shift)
        lhs = math.log(exact_partition_ratio(moved, b0, b1))
        rhs = math.log(exact_partition_ratio(c, b0, b1)) - (b1 - b0) * shift
        assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_large_beta_stable(self, chain50):
        assert math.isfinite(exact_partition_ratio(chain50.with_energies(chain50.energies + 20), 0.0, 100.0))
