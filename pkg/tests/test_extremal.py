import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lowdim_maxcut.anticonc import SignConfiguration, exact_second_moment
from lowdim_maxcut.extremal import (
    ExtremalSearchConfig,
    cap_tail_bound,
    cap_tail_empirical,
    find_flat_configuration,
    mean_second_moment_identity,
    sample_sphere,
)


class TestSampling:
    def test_unit_and_deterministic(self):
        V = sample_sphere(50, 4, seed=3)
        assert np.allclose(np.linalg.norm(V.vectors, axis=1), 1)
        assert np.array_equal(V.vectors, sample_sphere(50, 4, seed=3).vectors)
        assert not np.array_equal(V.vectors, sample_sphere(50, 4, seed=4).vectors)

    def test_prefix_stable(self):
        a = sample_sphere(10, 3, seed=1).vectors
        b = sample_sphere(30, 3, seed=1).vectors
        assert np.array_equal(a, b[:10])

    def test_isotropic(self):
        V = sample_sphere(20000, 3, seed=8).vectors
        assert np.allclose(V.mean(axis=0), 0, atol=0.03)
        assert np.allclose(V.T @ V / len(V), np.eye(3) / 3, atol=0.02)

    def test_rejects(self):
        with pytest.raises(ValueError):
            sample_sphere(3, 0)


class TestCapTail:
    def test_bound_values(self):
        assert cap_tail_bound(1.0, 5) == 0.0
        assert cap_tail_bound(0.5, 3) == pytest.approx(0.75)
        assert cap_tail_bound(0.6, 1) == 1.0

    @pytest.mark.parametrize("a", [0.0, -0.2, 1.5])
    def test_rejects_a(self, a):
        with pytest.raises(ValueError):
            cap_tail_bound(a, 3)

    @given(st.floats(0.01, 1.0), st.integers(2, 50))
    def test_bound_decreasing_in_d(self, a, d):
        assert cap_tail_bound(a, d + 1) <= cap_tail_bound(a, d)

    def test_d2_exact_frequency(self):
        # on the circle P(cos theta >= a) = arccos(a)/pi
        r = cap_tail_empirical(0.5, 2, 200_000, seed=2)
        exact = math.acos(0.5) / math.pi
        assert abs(r.frequency - exact) <= 4 * math.sqrt(exact * (1 - exact) / r.pairs)
        assert r.holds

    @pytest.mark.parametrize("d", [2, 3, 5, 10])
    @pytest.mark.parametrize("a", [0.3, 0.6, 0.9])
    def test_grid(self, d, a):
        r = cap_tail_empirical(a, d, 50_000, seed=d)
        assert r.holds
        assert set(r.to_dict()) >= {"frequency", "bound", "stderr", "holds"}


class TestIdentity:
    @pytest.mark.parametrize("d,n", [(3, 10), (8, 20)])
    def test_mean_is_n(self, d, n):
        r = mean_second_moment_identity(d, n, 200, 2000, seed=11)
        assert r.holds
        # exact moments carry no Gaussian noise
        ex = r.exact
        assert abs(ex.mean() - n) <= 4 * ex.std(ddof=1) / math.sqrt(len(ex))

    def test_single_vector(self):
        r = mean_second_moment_identity(3, 1, 3, 100, seed=0)
        assert np.allclose(r.exact, 1.0)


class TestFlatSearch:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            ExtremalSearchConfig(d=1, n=5)
        with pytest.raises(ValueError):
            ExtremalSearchConfig(d=3, n=0)

    def test_finds_flat(self):
        V, rep = find_flat_configuration(ExtremalSearchConfig(d=8, n=20, seed=4))
        assert rep.success
        cfg = SignConfiguration(V)
        assert cfg.min_rho >= -0.9
        assert exact_second_moment(cfg) <= 2 * 20
        assert rep.ratio == pytest.approx(rep.exact_moment / 400)

    def test_exhausted_retries_reported(self):
        # n = 60 at d = 2 forces near-antipodal pairs
        _, rep = find_flat_configuration(ExtremalSearchConfig(d=2, n=60, max_retries=5))
        assert not rep.success and rep.attempts == 5
