import numpy as np
import pytest

from privelet import mechanisms as mech
from privelet import multidim, oracle
from privelet.data import FrequencyMatrix, three_level_hierarchy
from privelet.schema import Schema, ValidationError, nominal_attribute, ordinal_attribute

from conftest import rel_err


def ordinal_schema(m: int) -> Schema:
    return Schema((ordinal_attribute("a", range(m)),))


def census_like_schema() -> Schema:
    gender = {"label": "root", "children": [{"label": "female"}, {"label": "male"}]}
    return Schema(
        (
            ordinal_attribute("age", range(101)),
            nominal_attribute("gender", gender),
            nominal_attribute("occupation", three_level_hierarchy("o", 512)),
            ordinal_attribute("income", range(1001)),
        )
    )


class TestLaplace:
    def test_median_maps_to_zero(self):
        assert mech.laplace_from_uniform(np.array([0.5]), 1.0)[0] == 0.0

    def test_monte_carlo_variance(self):
        rng = np.random.default_rng(7)
        x = mech.laplace_sample(1.0, rng, size=10**6)
        assert 1.96 <= x.var() <= 2.04

    def test_scale_equivariance(self):
        u = np.random.default_rng(3).random(4096)
        small = mech.laplace_from_uniform(u, 1.0)
        big = mech.laplace_from_uniform(u, 2.0)
        assert np.array_equal(big, 2.0 * small)

    def test_rejects_nonpositive_magnitude(self):
        with pytest.raises(ValueError):
            mech.laplace_sample(0.0, np.random.default_rng(0))

    def test_zero_uniform_guarded(self):
        out = mech.laplace_from_uniform(np.array([0.0]), 1.0)
        assert np.isfinite(out[0])


class TestFactors:
    def test_sensitivity_factor(self):
        assert mech.sensitivity_factor(ordinal_attribute("a", range(16))) == 5.0
        assert mech.sensitivity_factor(ordinal_attribute("a", range(101))) == 8.0
        nom = nominal_attribute("b", three_level_hierarchy("v", 9, 3))
        assert mech.sensitivity_factor(nom) == 3.0

    def test_variance_factor(self):
        assert mech.variance_factor(ordinal_attribute("a", range(16))) == 3.0
        assert mech.variance_factor(ordinal_attribute("a", range(512))) == 5.5
        assert mech.variance_factor(nominal_attribute("b", three_level_hierarchy("v", 9, 3))) == 4.0

    def test_epsilon_for(self):
        schema = ordinal_schema(16)
        assert mech.epsilon_for(2.0, schema, split=("a",)) == 1.0  # empty product
        assert mech.epsilon_for(10.0, schema) == 1.0  # rho = 5

    def test_budget_consistency(self):
        with pytest.raises(ValueError):
            mech.PrivacyBudget(epsilon=1.0, lam=3.0, rho=1.0)
        b = mech.budget_for(ordinal_schema(16), (), 0.5)
        assert b.rho == 5.0 and b.lam == 20.0

    def test_epsilon_accounting_matches_measured_sensitivity(self):
        schema = Schema(
            (
                ordinal_attribute("x", range(4)),
                nominal_attribute("y", three_level_hierarchy("v", 4, 2)),
            )
        )
        for split in [(), ("x",), ("y",), ("x", "y")]:
            measured = oracle.measure_sensitivity(schema, split=split).measured_rho
            lam = 2.0
            implied_rho = mech.epsilon_for(lam, schema, split) * lam / 2.0
            assert measured == pytest.approx(implied_rho, abs=1e-9)


class TestVarianceBound:
    def test_paper_values_exact(self):
        nom512 = Schema((nominal_attribute("a", three_level_hierarchy("v", 512)),))
        assert mech.variance_bound(nom512, (), 1.0) == 288.0
        ord512 = ordinal_schema(512)
        assert mech.variance_bound(ord512, (), 1.0) == 4400.0
        assert mech.variance_bound(ord512, (), 1.0) / mech.variance_bound(nom512, (), 1.0) >= 15
        ord16 = ordinal_schema(16)
        assert mech.variance_bound(ord16, (), 1.0) == 600.0
        assert mech.variance_bound(ord16, ("a",), 1.0) == 128.0

    def test_epsilon_scaling(self):
        s = ordinal_schema(16)
        assert mech.variance_bound(s, (), 2.0) == 150.0


class TestSplitAdvice:
    def test_small_domain_rule_on_census_like_attributes(self):
        schema = census_like_schema()
        assert mech.prefers_identity(schema.attribute("age"))  # 101 <= 8^2 * 4.5
        assert mech.prefers_identity(schema.attribute("gender"))  # 2 <= 2^2 * 4
        assert not mech.prefers_identity(schema.attribute("occupation"))  # 512 > 36
        assert not mech.prefers_identity(schema.attribute("income"))  # 1001 > 726
        assert mech.suggest_split(schema) == ("age", "gender")


def small_mixed_matrix(seed=0):
    schema = Schema(
        (
            ordinal_attribute("x", range(8)),
            nominal_attribute("y", three_level_hierarchy("v", 4, 2)),
        )
    )
    rng = np.random.default_rng(seed)
    entries = rng.integers(0, 30, size=schema.dims).astype(float)
    return FrequencyMatrix(schema, entries, int(entries.sum()))


class TestPublish:
    def test_basic_deterministic_under_seed(self):
        m = small_mixed_matrix()
        a = mech.basic_publish(m, 2.0, seed=9)
        b = mech.basic_publish(m, 2.0, seed=9)
        assert np.array_equal(a.entries, b.entries)
        c = mech.basic_publish(m, 2.0, seed=10)
        assert not np.array_equal(a.entries, c.entries)

    def test_basic_noise_variance_on_one_entry_matrix(self):
        schema = Schema((ordinal_attribute("only", range(1)),))
        matrix = FrequencyMatrix(schema, np.array([5.0]), 5)
        lam = 2.0
        trials = 10**5
        draws = np.empty(trials)
        for t in range(trials):
            out = mech.basic_publish(matrix, lam, seed=oracle.trial_seed(0, t))
            draws[t] = out.entries[0] - 5.0
        assert abs(draws.var() - 2 * lam * lam) <= 0.03 * 2 * lam * lam

    def test_degenerate_split_equals_basic(self):
        m = small_mixed_matrix()
        basic = mech.basic_publish(m, 3.0, seed=4)
        plus = mech.privelet_plus_publish(m, 3.0, split=m.schema.names, seed=4)
        assert np.array_equal(basic.entries, plus.entries)

    def test_noise_magnitudes_follow_weights_haar(self):
        schema = ordinal_schema(8)
        entries = np.arange(8, dtype=float)
        matrix = FrequencyMatrix(schema, entries, 28)
        lam = 4.0
        noisy = mech.privelet_publish(matrix, lam, seed=11)
        # the 1-d transform is invertible, so the coefficient noise is
        # recoverable exactly and must equal lam/weight times the draws
        from privelet import haar

        got = haar.forward(noisy.entries).values - haar.forward(entries).values
        u = np.random.default_rng(11).random(8)
        expected = mech.laplace_from_uniform(u, lam / haar.weight_vector(8))
        assert rel_err(got, expected) < 1e-9
        # weight table for m=8: base and level 1 get lam/8, then lam/4, lam/2
        mags = lam / haar.weight_vector(8)
        assert mags.tolist() == [0.5, 0.5, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]

    def test_noise_magnitudes_follow_weights_nominal(self):
        schema = Schema((nominal_attribute("a", three_level_hierarchy("v", 4, 2)),))
        h = schema.attributes[0].hierarchy
        entries = np.arange(4, dtype=float)
        matrix = FrequencyMatrix(schema, entries, 6)
        result = mech.publish(matrix, "privelet", epsilon=1.0, seed=3, keep_coefficients=True)
        from privelet import nominal

        base = nominal.forward_batch(entries, h)
        got = result.coefficients.values - base
        u = np.random.default_rng(3).random(h.num_nodes)
        expected = mech.laplace_from_uniform(u, result.budget.lam / nominal.weight_vector(h))
        assert rel_err(got, expected) < 1e-9

    def test_mixed_magnitudes_match_stored_weights(self):
        m = small_mixed_matrix(3)
        result = mech.publish(m, "privelet+", epsilon=1.0, split=("x",), seed=8, keep_coefficients=True)
        coeffs = multidim.forward(m, split=("x",))
        got = result.coefficients.values - coeffs.values
        u = np.random.default_rng(8).random(coeffs.values.shape)
        expected = mech.laplace_from_uniform(u, result.budget.lam / coeffs.weights)
        assert rel_err(got, expected) < 1e-12

    def test_noiseless_hook_round_trips(self):
        m = small_mixed_matrix(1)
        out = mech.privelet_plus_publish(m, 5.0, split=(), seed=0, noise=False)
        assert rel_err(out.entries, m.entries) < 1e-9

    def test_publish_epsilon_to_lambda(self):
        m = small_mixed_matrix(2)
        result = mech.publish(m, "privelet", epsilon=0.5, seed=1)
        # rho = P(8-ordinal) * P(h=3 nominal) = 4 * 3
        assert result.budget.rho == 12.0
        assert result.budget.lam == 48.0
        basic = mech.publish(m, "basic", epsilon=0.5, seed=1)
        assert basic.budget.lam == 4.0
        assert basic.split == m.schema.names

    def test_publish_metadata(self):
        m = small_mixed_matrix(2)
        result = mech.publish(m, "privelet+", epsilon=1.0, split=("y",), seed=5)
        meta = result.metadata
        assert meta["method"] == "privelet+"
        assert meta["split"] == ["y"]
        assert meta["schema_hash"] == m.schema.content_hash()

    def test_unknown_method_rejected(self):
        with pytest.raises(ValidationError):
            mech.publish(small_mixed_matrix(), "fourier", epsilon=1.0)

    def test_bad_epsilon_rejected(self):
        with pytest.raises(ValidationError):
            mech.publish(small_mixed_matrix(), "basic", epsilon=0.0)

    def test_tuple_count_carried_through(self):
        m = small_mixed_matrix(4)
        out = mech.privelet_publish(m, 2.0, seed=0)
        assert out.tuple_count == m.tuple_count
