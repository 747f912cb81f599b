"""Learner-set factories: ids, column blocks, df targets, degeneracy."""
from __future__ import annotations

import logging

import numpy as np
import pytest

from sparseboost import (
    BINOMIAL_LOGIT,
    BoostConfig,
    DatasetSchema,
    DesignMatrix,
    OutcomeSpec,
    SgbSpec,
    VariableSpec,
    augment_with_interactions,
    boost,
    build_group,
    build_interaction_learners,
    build_mb,
    build_sgb,
    effective_df,
    encode,
    expand_interactions,
)
from sparseboost.factory import GROUP_ID_PREFIX

from oracles import bernoulli_frame


def grouped_schema():
    """Two groups of unequal size: habits has 3 variables, body has 2."""
    variables = [
        VariableSpec("smoker", "binary", ("no", "yes"), group="habits"),
        VariableSpec("drinks", "binary", ("no", "yes"), group="habits"),
        VariableSpec("color", "categorical", ("red", "green", "blue"), group="habits"),
        VariableSpec("age", "continuous", group="body"),
        VariableSpec("treated", "binary", ("ctrl", "trt"), group="body"),
    ]
    return DatasetSchema(variables, OutcomeSpec("sick", ("healthy", "ill")))


@pytest.fixture()
def grouped_design():
    schema = grouped_schema()
    frame = bernoulli_frame(schema, n=120, seed=7)
    design, outcome = encode(schema, frame)
    return schema, design, outcome


def achieved_df(design, learner):
    return effective_df(design.values, learner.columns, learner.lambda_)


class TestBuildMb:
    def test_one_learner_per_variable_in_schema_order(self, grouped_design):
        schema, design, _ = grouped_design
        learners = build_mb(design, schema)
        assert [ln.learner_id for ln in learners] == [
            "smoker", "drinks", "color", "age", "treated"]
        assert all(ln.kind == "individual" for ln in learners)

    def test_each_learner_owns_its_variable_columns(self, grouped_design):
        schema, design, _ = grouped_design
        learners = build_mb(design, schema)
        for ln in learners:
            sources = {design.column_meta[c].source for c in ln.columns}
            assert sources == {(ln.learner_id,)}

    def test_df_one_achieved(self, grouped_design):
        schema, design, _ = grouped_design
        for ln in build_mb(design, schema):
            assert ln.df_target == 1.0
            assert achieved_df(design, ln) == pytest.approx(1.0, abs=1e-8)

    def test_single_column_learners_are_unpenalised(self, grouped_design):
        schema, design, _ = grouped_design
        for ln in build_mb(design, schema):
            if len(ln.columns) == 1:
                assert ln.lambda_ == 0.0
            else:
                assert ln.lambda_ > 0.0


class TestBuildGroup:
    def test_one_learner_per_group(self, grouped_design):
        schema, design, _ = grouped_design
        learners = build_group(design, schema)
        assert [ln.learner_id for ln in learners] == [
            GROUP_ID_PREFIX + "habits", GROUP_ID_PREFIX + "body"]
        assert all(ln.kind == "group" for ln in learners)

    def test_group_blocks_cover_member_columns(self, grouped_design):
        schema, design, _ = grouped_design
        learners = {ln.learner_id: ln for ln in build_group(design, schema)}
        habits = learners[GROUP_ID_PREFIX + "habits"]
        # smoker(1) + drinks(1) + color(2 dummies)
        assert len(habits.columns) == 4
        body = learners[GROUP_ID_PREFIX + "body"]
        assert len(body.columns) == 2
        covered = sorted(np.concatenate([habits.columns, body.columns]).tolist())
        assert covered == list(range(design.p))

    def test_df_achieved(self, grouped_design):
        schema, design, _ = grouped_design
        for ln in build_group(design, schema):
            assert achieved_df(design, ln) == pytest.approx(ln.df_target, abs=1e-8)


class TestBuildSgb:
    def test_df_targets_scale_with_group_size(self, grouped_design):
        schema, design, _ = grouped_design
        learners = build_sgb(design, schema, SgbSpec(alpha=0.5))
        by_id = {ln.learner_id: ln for ln in learners}
        # habits has 3 member variables, body has 2
        assert by_id["smoker"].df_target == 0.5 / 3
        assert by_id["color"].df_target == 0.5 / 3
        assert by_id[GROUP_ID_PREFIX + "habits"].df_target == 0.5 / 3
        assert by_id["age"].df_target == 0.25
        assert by_id[GROUP_ID_PREFIX + "body"].df_target == 0.25

    def test_group_of_four_at_alpha_half_gives_exactly_0125(self):
        variables = [VariableSpec(f"x{i}", "binary", ("no", "yes"), group="g")
                     for i in range(1, 5)]
        schema = DatasetSchema(variables, OutcomeSpec("y", ("neg", "pos")))
        frame = bernoulli_frame(schema, n=90, seed=3)
        design, _ = encode(schema, frame)
        learners = build_sgb(design, schema, SgbSpec(alpha=0.5))
        assert [ln.df_target for ln in learners] == [0.125] * 5
        for ln in learners:
            assert achieved_df(design, ln) == pytest.approx(0.125, abs=1e-8)

    def test_alpha_one_keeps_only_individual_learners(self, grouped_design):
        schema, design, _ = grouped_design
        learners = build_sgb(design, schema, SgbSpec(alpha=1.0))
        assert all(ln.kind == "individual" for ln in learners)
        assert {ln.learner_id for ln in learners} == {
            "smoker", "drinks", "color", "age", "treated"}

    def test_alpha_zero_keeps_only_group_learners(self, grouped_design):
        schema, design, _ = grouped_design
        learners = build_sgb(design, schema, SgbSpec(alpha=0.0))
        assert all(ln.kind == "group" for ln in learners)
        assert {ln.learner_id for ln in learners} == {
            GROUP_ID_PREFIX + "habits", GROUP_ID_PREFIX + "body"}

    def test_alpha_one_matches_manually_scaled_individual_set(self):
        """sgb at alpha=1 is the component-wise set with df = 1/p_g.

        With equal group sizes the whole set matches build_mb at that df,
        so boosting must walk the identical selection path.
        """
        variables = [VariableSpec(f"x{i}", "binary", ("no", "yes"),
                                  group=("g1" if i <= 3 else "g2"))
                     for i in range(1, 7)]
        schema = DatasetSchema(variables, OutcomeSpec("y", ("neg", "pos")))
        frame = bernoulli_frame(schema, n=150, seed=11, signal={"x2": 1.4})
        design, outcome = encode(schema, frame)

        sgb = build_sgb(design, schema, SgbSpec(alpha=1.0))
        manual = build_mb(design, schema, df_base=1.0 / 3)
        assert [ln.learner_id for ln in sgb] == [ln.learner_id for ln in manual]
        assert [ln.lambda_ for ln in sgb] == [ln.lambda_ for ln in manual]

        config = BoostConfig(eta=0.1, m_stop=60)
        fit_a = boost(design, outcome.labels, sgb, BINOMIAL_LOGIT, config)
        fit_b = boost(design, outcome.labels, manual, BINOMIAL_LOGIT, config)
        assert [s.learner_id for s in fit_a.selection_path] == [
            s.learner_id for s in fit_b.selection_path]
        assert [s.risk_after for s in fit_a.selection_path] == [
            s.risk_after for s in fit_b.selection_path]

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SgbSpec(alpha=-0.1)
        with pytest.raises(ValueError):
            SgbSpec(alpha=1.5)
        assert SgbSpec().alpha == 0.5


class TestInteractionLearners:
    def test_one_learner_per_term_with_df_one(self, mixed_schema, mixed_frame):
        design, _ = encode(mixed_schema, mixed_frame)
        terms = expand_interactions(mixed_schema, design)
        assert len(terms) == 3  # smoker crossed with the other three
        augmented = augment_with_interactions(design, terms)
        learners = build_interaction_learners(augmented, terms)
        assert [ln.learner_id for ln in learners] == [t.term_id for t in terms]
        assert all(ln.kind == "interaction" for ln in learners)
        for ln in learners:
            assert achieved_df(augmented, ln) == pytest.approx(1.0, abs=1e-8)

    def test_degenerate_product_block_dropped_with_warning(self, caplog):
        """Two binaries that are never jointly positive yield an all-zero
        product column, which admits no df and is skipped."""
        variables = [
            VariableSpec("a", "binary", ("no", "yes"), moderator=True),
            VariableSpec("b", "binary", ("no", "yes")),
            VariableSpec("c", "binary", ("no", "yes")),
        ]
        schema = DatasetSchema(variables, OutcomeSpec("y", ("neg", "pos")))
        rng = np.random.default_rng(5)
        a = rng.integers(0, 2, 80)
        b = 1 - a  # a*b == 0 everywhere
        c = rng.integers(0, 2, 80)
        import pandas as pd
        frame = pd.DataFrame({
            "a": np.where(a == 1, "yes", "no"),
            "b": np.where(b == 1, "yes", "no"),
            "c": np.where(c == 1, "yes", "no"),
            "y": np.where(rng.integers(0, 2, 80) == 1, "pos", "neg"),
        })
        design, _ = encode(schema, frame)
        terms = expand_interactions(schema, design)
        augmented = augment_with_interactions(design, terms)
        with caplog.at_level(logging.WARNING, logger="sparseboost.factory"):
            learners = build_interaction_learners(augmented, terms)
        ids = [ln.learner_id for ln in learners]
        assert "a*b" not in ids
        assert "a*c" in ids
        assert any("a*b" in rec.message for rec in caplog.records)

    def test_missing_product_columns_rejected(self, mixed_schema, mixed_frame):
        design, _ = encode(mixed_schema, mixed_frame)
        terms = expand_interactions(mixed_schema, design)
        with pytest.raises(ValueError, match="product columns"):
            build_interaction_learners(design, terms)
