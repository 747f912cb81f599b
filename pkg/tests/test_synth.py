"""Synthetic data generator: schemas, rates, correlation and determinism."""
from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from sparseboost import (
    BINOMIAL_LOGIT,
    BoostConfig,
    SchemaError,
    SynthSpec,
    bernoulli_schema,
    boost,
    build_mb,
    encode,
    generate,
    importance,
    null_interaction_study,
)

from oracles import logistic


class TestBernoulliSchema:
    def test_names_groups_and_moderators(self):
        schema = bernoulli_schema(8, n_groups=2, n_moderators=3)
        assert [v.name for v in schema.variables] == [f"x{i}" for i in range(1, 9)]
        assert [v.group for v in schema.variables] == ["g1"] * 4 + ["g2"] * 4
        assert [v.moderator for v in schema.variables] == [True] * 3 + [False] * 5
        assert all(v.kind == "binary" and v.categories == ("no", "yes")
                   for v in schema.variables)
        assert schema.outcome.name == "y"
        assert schema.outcome.categories == ("no", "yes")

    def test_uneven_groups_stay_contiguous_and_balanced(self):
        schema = bernoulli_schema(7, n_groups=3)
        groups = [v.group for v in schema.variables]
        assert groups == ["g1", "g1", "g1", "g2", "g2", "g3", "g3"]

    def test_validation(self):
        with pytest.raises(ValueError):
            bernoulli_schema(4, n_groups=5)
        with pytest.raises(ValueError):
            bernoulli_schema(4, n_groups=0)
        with pytest.raises(ValueError):
            bernoulli_schema(4, n_moderators=5)


class TestSynthSpecValidation:
    def test_bounds(self):
        schema = bernoulli_schema(3)
        with pytest.raises(ValueError):
            SynthSpec(n=0, schema=schema)
        with pytest.raises(ValueError):
            SynthSpec(n=10, schema=schema, marginal=0.0)
        with pytest.raises(ValueError):
            SynthSpec(n=10, schema=schema, group_correlation=1.5)

    def test_unknown_names_rejected(self):
        schema = bernoulli_schema(3)
        with pytest.raises(SchemaError):
            SynthSpec(n=10, schema=schema, beta_main={"x9": 1.0})
        with pytest.raises(SchemaError):
            SynthSpec(n=10, schema=schema, beta_interaction={("x1", "x9"): 1.0})
        with pytest.raises(SchemaError):
            SynthSpec(n=10, schema=schema, beta_interaction={("x1", "x1"): 1.0})
        with pytest.raises(SchemaError):
            SynthSpec(n=10, schema=schema, beta_group_latent={"g9": 1.0})

    def test_non_binary_schema_rejected_by_generate(self, mixed_schema):
        with pytest.raises(SchemaError):
            generate(SynthSpec(n=10, schema=mixed_schema))


class TestGenerate:
    def test_frame_layout(self):
        schema = bernoulli_schema(4)
        frame, truth = generate(SynthSpec(n=25, schema=schema, seed=1))
        assert list(frame.columns) == ["x1", "x2", "x3", "x4", "y"]
        assert len(frame) == 25
        for col in frame.columns:
            assert set(frame[col]) <= {"no", "yes"}
        assert truth.beta_main == {}

    def test_determinism(self):
        schema = bernoulli_schema(5, n_groups=2)
        spec = SynthSpec(n=60, schema=schema, beta_main={"x1": 1.0},
                         beta_group_latent={"g2": 0.5},
                         group_correlation=0.4, seed=33)
        a, _ = generate(spec)
        b, _ = generate(spec)
        pd.testing.assert_frame_equal(a, b)
        c, _ = generate(SynthSpec(n=60, schema=schema, beta_main={"x1": 1.0},
                                  beta_group_latent={"g2": 0.5},
                                  group_correlation=0.4, seed=34))
        assert not a.equals(c)

    def test_null_rate_is_exactly_half(self):
        schema = bernoulli_schema(3)
        _, truth = generate(SynthSpec(n=10, schema=schema, seed=0))
        assert truth.expected_positive_rate == 0.5

    def test_main_effect_rate_enumeration(self):
        schema = bernoulli_schema(3)
        _, truth = generate(SynthSpec(n=10, schema=schema,
                                      beta_main={"x1": 2.0}, seed=0))
        assert truth.expected_positive_rate == pytest.approx(
            0.25 + logistic(2.0) / 2.0, abs=1e-12)

    def test_interaction_rate_enumeration(self):
        schema = bernoulli_schema(3)
        _, truth = generate(SynthSpec(n=10, schema=schema,
                                      beta_interaction={("x1", "x2"): 2.0},
                                      seed=0))
        assert truth.expected_positive_rate == pytest.approx(
            0.75 * 0.5 + 0.25 * logistic(2.0), abs=1e-12)

    def test_latent_only_rate_enumerates_despite_correlation(self):
        schema = bernoulli_schema(4, n_groups=2)
        _, truth = generate(SynthSpec(n=10, schema=schema,
                                      beta_group_latent={"g1": 1.0},
                                      group_correlation=0.9, seed=0))
        assert truth.expected_positive_rate == pytest.approx(
            0.5 * 0.5 + 0.5 * logistic(1.0), abs=1e-12)

    def test_latent_coupled_main_effect_rate_is_unavailable(self):
        schema = bernoulli_schema(4, n_groups=2)
        _, truth = generate(SynthSpec(n=10, schema=schema,
                                      beta_main={"x1": 1.0},
                                      group_correlation=0.5, seed=0))
        assert truth.expected_positive_rate is None

    def test_empirical_rate_matches_enumeration(self):
        schema = bernoulli_schema(3)
        n = 20000
        frame, truth = generate(SynthSpec(
            n=n, schema=schema, beta_main={"x1": 1.5, "x2": -1.0},
            beta_interaction={("x1", "x3"): 1.0}, seed=77))
        rate = truth.expected_positive_rate
        sd = np.sqrt(rate * (1.0 - rate) / n)
        empirical = float((frame["y"] == "yes").mean())
        assert abs(empirical - rate) < 4.0 * sd

    def test_full_correlation_makes_group_members_identical(self):
        schema = bernoulli_schema(6, n_groups=2)
        frame, _ = generate(SynthSpec(n=500, schema=schema,
                                      group_correlation=1.0, seed=9))
        for members in (["x1", "x2", "x3"], ["x4", "x5", "x6"]):
            first = frame[members[0]]
            for other in members[1:]:
                assert (frame[other] == first).all()

    def test_partial_correlation_levels(self):
        # within-group agreement is rho^2 + (1 - rho^2)/2, cross-group 1/2
        schema = bernoulli_schema(4, n_groups=2)
        frame, _ = generate(SynthSpec(n=20000, schema=schema,
                                      group_correlation=0.9, seed=10))
        within = float((frame["x1"] == frame["x2"]).mean())
        across = float((frame["x1"] == frame["x3"]).mean())
        assert within == pytest.approx(0.905, abs=0.02)
        assert across == pytest.approx(0.5, abs=0.02)

    def test_boosting_recovers_planted_main_effect(self):
        schema = bernoulli_schema(6)
        frame, _ = generate(SynthSpec(n=5000, schema=schema,
                                      beta_main={"x1": 3.0}, seed=42))
        design, outcome = encode(schema, frame)
        fit = boost(design, outcome.labels, build_mb(design, schema),
                    BINOMIAL_LOGIT, BoostConfig(eta=0.1, m_stop=150))
        table = importance(fit)
        assert table.rows[0].learner_id == "x1"
        assert table.rows[0].relative > 0.9


class TestNullInteractionStudy:
    def test_tiny_run_is_deterministic(self):
        kwargs = dict(n_moderators=2, n_signal=2, beta=1.0, m_max=25, folds=3)
        a = null_interaction_study(5, 120, (0, 1), **kwargs)
        b = null_interaction_study(5, 120, (0, 1), **kwargs)
        assert [(r.seed, r.mb_int_count, r.two_boost_count) for r in a.rows] \
            == [(r.seed, r.mb_int_count, r.two_boost_count) for r in b.rows]
        assert a.mb_int_median == b.mb_int_median
        assert a.two_boost_median == b.two_boost_median
        assert len(a.rows) == 2
