"""Schema declaration, raw-table encoding and interaction expansion."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from sparseboost import (
    DatasetSchema,
    DegenerateColumnError,
    MissingColumnError,
    MissingValueError,
    NonBinaryOutcomeError,
    OutcomeSpec,
    SchemaError,
    UnknownCategoryError,
    VariableSpec,
    augment_with_interactions,
    column_group_index,
    columns_by_source,
    encode,
    expand_interactions,
    load_schema,
    save_schema,
    schema_fingerprint,
    schema_from_dict,
    schema_to_dict,
)
from oracles import moderator_pairs


# ---------------------------------------------------------------------------
# declarations
# ---------------------------------------------------------------------------

def test_variable_spec_column_counts():
    assert VariableSpec("a", "binary", ("n", "y")).n_columns == 1
    assert VariableSpec("b", "categorical", ("r", "g", "b")).n_columns == 2
    assert VariableSpec("c", "continuous").n_columns == 1


@pytest.mark.parametrize("kwargs", [
    dict(name="a", kind="ordinal", categories=("x", "y")),
    dict(name="a", kind="binary", categories=("x",)),
    dict(name="a", kind="binary", categories=("x", "y", "z")),
    dict(name="a", kind="categorical", categories=("x",)),
    dict(name="a", kind="continuous", categories=("x", "y")),
    dict(name="a", kind="binary", categories=("x", "x")),
])
def test_variable_spec_rejects_bad_declarations(kwargs):
    with pytest.raises(SchemaError):
        VariableSpec(**kwargs)


def test_schema_rejects_duplicate_and_outcome_clash():
    v = VariableSpec("a", "binary", ("n", "y"))
    out = OutcomeSpec("y", ("n", "y"))
    with pytest.raises(SchemaError):
        DatasetSchema((v, v), out)
    with pytest.raises(SchemaError):
        DatasetSchema((VariableSpec("y", "binary", ("n", "y")),), out)
    with pytest.raises(SchemaError):
        DatasetSchema((), out)


def test_schema_groups_in_first_appearance_order():
    schema = DatasetSchema(
        (VariableSpec("a", "binary", ("n", "y"), group="g2"),
         VariableSpec("b", "binary", ("n", "y"), group="g1"),
         VariableSpec("c", "binary", ("n", "y"), group="g2")),
        OutcomeSpec("y", ("n", "y")))
    assert schema.groups == ("g2", "g1")
    assert [v.name for v in schema.moderators] == []


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------

def test_encode_shapes_labels_and_centering(mixed_schema, mixed_frame):
    design, outcome = encode(mixed_schema, mixed_frame)
    assert (design.n, design.p) == (len(mixed_frame), 5)
    assert design.labels == ["smoker=yes", "color=green", "color=blue", "age",
                             "treated=trt"]
    # centered columns have zero mean up to accumulation error
    assert np.all(np.abs(design.values.mean(axis=0)) < 1e-10)
    assert outcome.positive_meaning == "sick=ill"
    np.testing.assert_array_equal(
        outcome.labels, (mixed_frame["sick"] == "ill").to_numpy().astype(float))


def test_encode_indicator_roundtrip_is_exact(mixed_schema, mixed_frame):
    design, _ = encode(mixed_schema, mixed_frame)
    raw = design.uncentered()
    # (v - m) + m is exact for v in {0, 1} and m in (0, 1)
    smoker = (mixed_frame["smoker"] == "yes").to_numpy().astype(float)
    np.testing.assert_array_equal(raw[:, 0], smoker)
    for j, cat in ((1, "green"), (2, "blue")):
        np.testing.assert_array_equal(
            raw[:, j], (mixed_frame["color"] == cat).to_numpy().astype(float))
    np.testing.assert_allclose(raw[:, 3], mixed_frame["age"].to_numpy(),
                               rtol=0, atol=1e-12)


def test_encode_matches_declared_category_order(mixed_schema, mixed_frame):
    design, _ = encode(mixed_schema, mixed_frame)
    meta = design.column_meta[1]
    assert meta.source == ("color",)
    assert meta.categories == ("green",)  # first non-reference category


def test_encode_accepts_integer_coded_categories():
    schema = DatasetSchema(
        (VariableSpec("flag", "binary", ("0", "1")),),
        OutcomeSpec("y", ("0", "1")))
    frame = pd.DataFrame({"flag": [0, 1, 1, 0], "y": [1, 0, 1, 0]})
    design, outcome = encode(schema, frame)
    np.testing.assert_array_equal(design.uncentered()[:, 0], [0, 1, 1, 0])
    np.testing.assert_array_equal(outcome.labels, [1, 0, 1, 0])


def test_encode_ignores_extra_columns(mixed_schema, mixed_frame):
    frame = mixed_frame.assign(note=["irrelevant"] * len(mixed_frame))
    design, _ = encode(mixed_schema, frame)
    assert design.p == 5


def test_encode_error_paths(mixed_schema, mixed_frame):
    with pytest.raises(MissingColumnError):
        encode(mixed_schema, mixed_frame.drop(columns=["color"]))

    holes = mixed_frame.copy()
    holes.loc[3, "age"] = np.nan
    with pytest.raises(MissingValueError):
        encode(mixed_schema, holes)

    odd = mixed_frame.copy()
    odd.loc[5, "color"] = "purple"
    with pytest.raises(UnknownCategoryError):
        encode(mixed_schema, odd)

    flat = mixed_frame.copy()
    flat["treated"] = "ctrl"
    with pytest.raises(DegenerateColumnError):
        encode(mixed_schema, flat)

    third = mixed_frame.copy()
    third.loc[0, "sick"] = "unsure"
    with pytest.raises(NonBinaryOutcomeError):
        encode(mixed_schema, third)

    onesided = mixed_frame.copy()
    onesided["sick"] = "ill"
    with pytest.raises(NonBinaryOutcomeError):
        encode(mixed_schema, onesided)

    with pytest.raises(SchemaError):
        encode(mixed_schema, mixed_frame.iloc[0:0])


def test_encode_rejects_non_numeric_continuous(mixed_schema, mixed_frame):
    bad = mixed_frame.copy()
    bad["age"] = "old"
    with pytest.raises(SchemaError):
        encode(mixed_schema, bad)


# ---------------------------------------------------------------------------
# interactions
# ---------------------------------------------------------------------------

def test_expand_interactions_pairs_match_brute_force(mixed_schema, mixed_frame):
    design, _ = encode(mixed_schema, mixed_frame)
    terms = expand_interactions(mixed_schema, design)
    got = [(t.moderator, t.partner) for t in terms]
    names = [v.name for v in mixed_schema.variables]
    assert got == moderator_pairs(names, ["smoker"])


def test_expand_interactions_products_recompute_from_raw(mixed_schema, mixed_frame):
    design, _ = encode(mixed_schema, mixed_frame)
    terms = expand_interactions(mixed_schema, design)
    by_id = {t.term_id: t for t in terms}

    smoker = (mixed_frame["smoker"] == "yes").to_numpy().astype(float)
    green = (mixed_frame["color"] == "green").to_numpy().astype(float)
    age = mixed_frame["age"].to_numpy().astype(float)

    t = by_id["smoker*color"]
    assert t.columns.shape == (len(mixed_frame), 2)
    prod = smoker * green
    np.testing.assert_allclose(t.columns[:, 0], prod - prod.mean(),
                               rtol=0, atol=1e-12)
    assert t.column_meta[0].label == "smoker=yes*color=green"

    t = by_id["smoker*age"]
    prod = smoker * age
    np.testing.assert_allclose(t.columns[:, 0], prod - prod.mean(),
                               rtol=0, atol=1e-9)
    assert t.column_meta[0].label == "smoker=yes*age"


def test_expand_interactions_two_moderators_anchor_first():
    schema = DatasetSchema(
        (VariableSpec("a", "binary", ("n", "y"), moderator=True),
         VariableSpec("b", "binary", ("n", "y"), moderator=True),
         VariableSpec("c", "binary", ("n", "y"))),
        OutcomeSpec("y", ("n", "y")))
    rng = np.random.default_rng(5)
    frame = pd.DataFrame({k: rng.choice(["n", "y"], size=30)
                          for k in ("a", "b", "c", "y")})
    design, _ = encode(schema, frame)
    got = [(t.moderator, t.partner) for t in expand_interactions(schema, design)]
    assert got == [("a", "b"), ("a", "c"), ("b", "c")]
    assert got == moderator_pairs(["a", "b", "c"], ["a", "b"])


def test_pair_count_formula_73_predictors_22_moderators():
    # choose(p, 2) - choose(p - k, 2) pairs touch at least one of k moderators
    p, k = 73, 22
    names = [f"v{i}" for i in range(p)]
    mods = names[:k]
    expected = p * (p - 1) // 2 - (p - k) * (p - k - 1) // 2
    assert expected == 1353
    assert len(moderator_pairs(names, mods)) == expected

    schema = DatasetSchema(
        tuple(VariableSpec(n, "binary", ("n", "y"), moderator=n in set(mods))
              for n in names),
        OutcomeSpec("y", ("n", "y")))
    rng = np.random.default_rng(99)
    frame = pd.DataFrame({n: rng.choice(["n", "y"], size=40) for n in names})
    frame["y"] = rng.choice(["n", "y"], size=40)
    design, _ = encode(schema, frame)
    terms = expand_interactions(schema, design)
    assert len(terms) == expected
    assert len({t.term_id for t in terms}) == expected


def test_augment_and_provenance_maps(mixed_schema, mixed_frame):
    design, _ = encode(mixed_schema, mixed_frame)
    terms = expand_interactions(mixed_schema, design)
    combined = augment_with_interactions(design, terms)
    assert combined.p == design.p + sum(t.columns.shape[1] for t in terms)
    np.testing.assert_array_equal(combined.values[:, :design.p], design.values)

    by_source = columns_by_source(combined)
    np.testing.assert_array_equal(by_source[("color",)], [1, 2])
    np.testing.assert_array_equal(by_source[("smoker", "color")], [5, 6])

    groups = column_group_index(mixed_schema, combined)
    assert set(groups) == {"habits", "body"}
    np.testing.assert_array_equal(groups["habits"], [0, 1, 2])
    np.testing.assert_array_equal(groups["body"], [3, 4])


def test_augment_with_no_terms_copies(mixed_schema, mixed_frame):
    design, _ = encode(mixed_schema, mixed_frame)
    combined = augment_with_interactions(design, [])
    assert combined.p == design.p
    combined.values[0, 0] += 1.0
    assert combined.values[0, 0] != design.values[0, 0]


# ---------------------------------------------------------------------------
# schema files and fingerprints
# ---------------------------------------------------------------------------

def test_schema_yaml_roundtrip(mixed_schema, tmp_path):
    path = tmp_path / "schema.yaml"
    save_schema(mixed_schema, str(path))
    loaded = load_schema(str(path))
    assert loaded == mixed_schema
    assert schema_fingerprint(loaded) == schema_fingerprint(mixed_schema)


def test_schema_dict_roundtrip(mixed_schema):
    assert schema_from_dict(schema_to_dict(mixed_schema)) == mixed_schema


def test_fingerprint_sensitive_to_content(mixed_schema):
    changed = DatasetSchema(
        mixed_schema.variables[:-1]
        + (VariableSpec("treated", "binary", ("ctrl", "trt"), group="habits"),),
        mixed_schema.outcome)
    assert schema_fingerprint(changed) != schema_fingerprint(mixed_schema)


def test_load_schema_rejects_non_mapping(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("- just\n- a list\n")
    with pytest.raises(SchemaError):
        load_schema(str(path))
