import math

import numpy as np
import pytest

from streamkpca.datagen import (
    SpikedSpec,
    make_spiked_stream,
    monte_carlo_offset_norm,
    random_orthonormal_basis,
)
from streamkpca.featuremaps import FeatureMapSpec
from streamkpca.spectral import alignment_error, summarize


def spec(**kw):
    base = dict(
        input_dim=6,
        n=200,
        lambda1=1.0,
        lambda2=0.1,
        tail_decay=1.0,
        basis_seed=1,
        sample_seed=2,
    )
    base.update(kw)
    return SpikedSpec(**base)


class TestSpecValidation:
    def test_zero_lambda2_rejected(self):
        with pytest.raises(ValueError):
            spec(lambda2=0.0)

    def test_lambda2_above_lambda1_rejected(self):
        with pytest.raises(ValueError):
            spec(lambda2=2.0)

    def test_bad_tail_decay(self):
        with pytest.raises(ValueError):
            spec(tail_decay=0.0)
        with pytest.raises(ValueError):
            spec(tail_decay=1.5)

    def test_zero_n_rejected(self):
        with pytest.raises(ValueError):
            spec(n=0)

    def test_isotropic_ratio(self):
        s = spec(lambda2=1.0)
        assert s.target_ratio == 1.0

    def test_dict_round_trip(self):
        s = spec(lambda2=0.05, tail_decay=0.7)
        assert SpikedSpec.from_dict(s.to_dict()) == s


class TestStreamGeneration:
    def test_determinism(self):
        xs1, t1 = make_spiked_stream(spec())
        xs2, t2 = make_spiked_stream(spec())
        assert np.array_equal(xs1, xs2)
        assert np.array_equal(t1.basis, t2.basis)

    def test_shape_and_guard(self):
        s = spec(n=5000, input_dim=8, lambda1=2.0)
        xs, truth = make_spiked_stream(s)
        assert xs.shape == (5000, 8)
        norms = np.sum(xs**2, axis=1)
        assert norms.max() <= truth.norm_bound
        assert truth.norm_bound == 2.0 * (8 + 10 * math.sqrt(8) + 50)

    def test_basis_orthonormal(self):
        b = random_orthonormal_basis(7, 3)
        assert np.abs(b.T @ b - np.eye(7)).max() <= 1e-12

    def test_spectrum_tail(self):
        s = spec(input_dim=4, lambda2=0.4, tail_decay=0.5)
        assert np.allclose(s.spectrum(), [1.0, 0.4, 0.2, 0.1], atol=0)

    def test_population_direction_from_basis(self):
        xs, truth = make_spiked_stream(spec())
        assert np.array_equal(truth.top_direction, truth.basis[:, 0])
        assert truth.ratio == 10.0

    def test_empirical_top_direction_converges(self):
        # Median alignment error between the population spike and the
        # empirical top eigenvector must not increase with n.
        phi = FeatureMapSpec.identity(6)
        medians = []
        for n in (100, 1000, 10000):
            errs = []
            for seed in range(5):
                s = spec(n=n, lambda2=0.125, sample_seed=50 + seed)
                xs, truth = make_spiked_stream(s)
                summary = summarize(xs, phi)
                errs.append(
                    alignment_error(truth.top_direction, summary.top_vector)
                )
            medians.append(float(np.median(errs)))
        assert medians[0] >= medians[1] >= medians[2]


class TestOffsetNormMonteCarlo:
    def test_pure_gaussian_tail(self):
        # With v = 0 the event is |a| >= delta; compare with the exact
        # normal tail via erfc.
        frac = monte_carlo_offset_norm(
            np.array([1.0, 0.0]), np.zeros(2), 0.5, 10**4, seed=0
        )
        exact = math.erfc(0.5 / math.sqrt(2.0))
        assert abs(frac - exact) <= 0.02
        assert frac >= 1.0 - 0.5 - 0.02

    def test_tiny_delta(self):
        frac = monte_carlo_offset_norm(
            np.array([1.0, 0.0]), np.zeros(2), 1e-6, 10**4, seed=1
        )
        assert frac >= 0.999

    def test_orthogonal_offset_always_wins(self):
        u = np.array([1.0, 0.0])
        v = np.array([0.0, 1.0])
        frac = monte_carlo_offset_norm(u, v, 0.9, 10**4, seed=2)
        assert frac == 1.0

    def test_zero_u_rejected(self):
        with pytest.raises(ValueError):
            monte_carlo_offset_norm(np.zeros(2), np.ones(2), 0.5, 10**4, 0)

    def test_delta_domain(self):
        with pytest.raises(ValueError):
            monte_carlo_offset_norm(np.ones(2), np.zeros(2), 1.5, 10**4, 0)

    def test_minimum_trials(self):
        with pytest.raises(ValueError):
            monte_carlo_offset_norm(np.ones(2), np.zeros(2), 0.5, 10, 0)

    def test_probability_floor_across_configurations(self):
        # The guarantee Pr >= 1 - delta holds (with sampling slack) for
        # arbitrary offsets: parallel, orthogonal, and generic.
        rng = np.random.default_rng(77)
        for trial in range(20):
            k = int(rng.integers(2, 7))
            u = rng.standard_normal(k)
            style = trial % 3
            if style == 0:
                v = float(rng.uniform(-2, 2)) * u
            elif style == 1:
                w = rng.standard_normal(k)
                v = w - (float(w @ u) / float(u @ u)) * u
            else:
                v = rng.standard_normal(k)
            delta = float(rng.uniform(0.05, 0.9))
            frac = monte_carlo_offset_norm(u, v, delta, 10**4, seed=trial)
            assert frac >= 1.0 - delta - 0.02
