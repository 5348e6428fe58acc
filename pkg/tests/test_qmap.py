import math

import numpy as np
import pytest

from qjasim.errors import NumericRangeError, UndefinedGapError
from qjasim.model import CostFunction, Schedule, build_random_potential, gibbs_state
from qjasim.qmap import (
    QuantumHamiltonian,
    build_hq,
    gap_profile,
    ground_state_check,
    min_gap_along_schedule,
    spectral_gap,
)
from qjasim.stochastic import build_metropolis_matrix

from .conftest import random_instances


class TestBuildHq:
    def test_infinite_temperature(self):
        c = build_random_potential(8, 4)
        H = build_hq(c, 0.0)
        m = build_metropolis_matrix(c, 0.0).entries
        np.testing.assert_allclose(H.matrix, np.eye(8) - m, atol=1e-15)
        np.testing.assert_allclose(np.abs(H.eigensystem[1][:, 0]), 1 / math.sqrt(8), atol=1e-12)

    def test_two_level(self, two_level):
        H = build_hq(two_level, math.log(2))
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(H.matrix, [[0.5, -r], [-r, 1.0]], atol=1e-15)
        w, v = H.eigensystem
        np.testing.assert_allclose(w, [0.0, 1.5], atol=1e-15)
        np.testing.assert_allclose(v[:, 0], [0.81649658092772603273, 0.57735026918962576451], atol=1e-15)

    @pytest.mark.parametrize("beta", [0.0, 0.5, 3.0, 30.0, 100.0])
    def test_gibbs_has_zero_energy(self, beta):
        for c in random_instances(10, 20, seed=int(beta)):
            a = gibbs_state(c, beta).amplitudes
            assert a @ build_hq(c, beta).matrix @ a < 1e-10

    def test_stoquastic(self, chain50):
        h = build_hq(chain50, 5.0).matrix
        off = h - np.diag(np.diag(h))
        assert np.all(off <= 0)

    def test_periodic_uses_dense_path(self):
        c = build_random_potential(10, 3, periodic=True)
        H = build_hq(c, 2.0)
        assert H.factor is None
        check = ground_state_check(H, c)
        assert check.energy_residual < 1e-12 and check.overlap_deficit < 1e-12

    def test_factor_reproduces_matrix(self, chain50):
        for beta in (0.0, 1.0, 10.0, 100.0):
            H = build_hq(chain50, beta)
            np.testing.assert_allclose(H.factor.T @ H.factor, H.matrix, rtol=0, atol=1e-15)

    def test_factored_spectrum_matches_dense(self):
        for c in random_instances(10, 30, seed=3):
            for beta in (0.0, 1.0, 5.0):
                H = build_hq(c, beta)
                np.testing.assert_allclose(H.eigenvalues, np.linalg.eigvalsh(H.matrix), rtol=0, atol=1e-12)

    def test_overflow_guard(self):
        c = CostFunction.chain([0.0, 10.0])
        with pytest.raises(NumericRangeError):
            build_hq(c, 100.0)

    @pytest.mark.parametrize("beta", [0.0, 1.0, 5.0])
    def test_similarity_spectrum(self, beta):
        for c in random_instances(8, 16, seed=11):
            kernel_eigs = np.sort(np.linalg.eigvals(build_metropolis_matrix(c, beta).entries).real)[::-1]
            np.testing.assert_allclose(build_hq(c, beta).eigenvalues, 1 - kernel_eigs, atol=1e-9)

    @pytest.mark.parametrize("beta", [0.0, 2.0, 40.0])
    def test_quantum_thermal_expectation(self, chain50, beta):
        obs = np.cos(np.arange(50))
        a = gibbs_state(chain50, beta)
        assert a.amplitudes @ (obs * a.amplitudes) == pytest.approx(obs @ a.probabilities, abs=1e-10)


class TestGroundCheck:
    def test_mapped_instances(self):
        for c in random_instances(10, 40, seed=7):
            for beta in (0.0, 1.0, 10.0, 100.0):
                r = ground_state_check(build_hq(c, beta), c)
                assert r.energy_residual < 1e-9 and r.overlap_deficit < 1e-9

    def test_injected_noise_detected(self):
        c = build_random_potential(12, 2)
        h = build_hq(c, 1.0).matrix.copy()
        noise = np.random.default_rng(0).normal(scale=1e-3, size=h.shape)
        noise = np.triu(noise, 1)
        bad = QuantumHamiltonian(h + noise + noise.T, 1.0)
        assert ground_state_check(bad, c).overlap_deficit > 1e-9


class TestGap:
    def test_symmetric_flip_kernel(self):
        for p in (0.1, 0.25, 0.5):
            m = np.array([[1 - p, p], [p, 1 - p]])
            assert spectral_gap(QuantumHamiltonian(np.eye(2) - m)) == pytest.approx(2 * p, abs=1e-14)

    def test_infinite_temperature_matches_kernel(self):
        c = build_random_potential(15, 8)
        lam = np.sort(np.linalg.eigvalsh(build_metropolis_matrix(c, 0.0).entries))[::-1]
        assert spectral_gap(build_hq(c, 0.0)) == pytest.approx(1 - lam[1], abs=1e-12)

    def test_single_level(self):
        with pytest.raises(UndefinedGapError):
            spectral_gap(build_hq(CostFunction.chain([0.0]), 1.0))

    def test_ground_unique(self):
        for c in random_instances(10, 50, seed=9):
            for beta in (0.0, 10.0, 100.0):
                assert spectral_gap(build_hq(c, beta)) > 0


class TestGapScan:
    def test_constant_energy(self):
        c = CostFunction.chain([0.3] * 6)
        sched = Schedule(beta_max=50.0, tau=1.0, n_steps=10)
        scan = min_gap_along_schedule(c, sched, 11)
        gaps = [r[3] for r in gap_profile(c, sched, 11)]
        assert max(gaps) - min(gaps) < 1e-14
        assert scan.delta_min == pytest.approx(spectral_gap(build_hq(c, 0.0)), abs=1e-14)

    def test_fifty_sites(self, chain50):
        scan = min_gap_along_schedule(chain50, Schedule(beta_max=100.0, tau=1.0, n_steps=100), 101)
        assert scan.delta_min > 0
        assert scan.beta_at_min == 100.0

    def test_two_point_grid(self, chain50):
        sched = Schedule(beta_max=10.0, tau=1.0, n_steps=10)
        ends = [spectral_gap(build_hq(chain50, b)) for b in (0.0, 10.0)]
        assert min_gap_along_schedule(chain50, sched, 2).delta_min == min(ends)
