"""Shared fixtures: small deterministic schemas, tables and designs."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from sparseboost import (
    DatasetSchema,
    OutcomeSpec,
    SynthSpec,
    VariableSpec,
    bernoulli_schema,
    encode,
    generate,
)


@pytest.fixture
def mixed_schema() -> DatasetSchema:
    """Binary + 3-level categorical + continuous, two groups, one moderator."""
    return DatasetSchema(
        variables=(
            VariableSpec("smoker", "binary", ("no", "yes"), group="habits",
                         moderator=True),
            VariableSpec("color", "categorical", ("red", "green", "blue"),
                         group="habits"),
            VariableSpec("age", "continuous", group="body"),
            VariableSpec("treated", "binary", ("ctrl", "trt"), group="body"),
        ),
        outcome=OutcomeSpec("sick", ("healthy", "ill")),
    )


@pytest.fixture
def mixed_frame(mixed_schema) -> pd.DataFrame:
    rng = np.random.default_rng(20240915)
    n = 80
    frame = pd.DataFrame({
        "smoker": rng.choice(["no", "yes"], size=n),
        "color": rng.choice(["red", "green", "blue"], size=n),
        "age": np.round(rng.uniform(18, 80, size=n), 1),
        "treated": rng.choice(["ctrl", "trt"], size=n),
        "sick": rng.choice(["healthy", "ill"], size=n, p=[0.6, 0.4]),
    })
    return frame


@pytest.fixture
def bern_design():
    """Encoded 8-variable Bernoulli design with planted main effects."""
    schema = bernoulli_schema(8, n_groups=2, n_moderators=3)
    frame, _ = generate(SynthSpec(
        n=500, schema=schema, beta_main={"x1": 1.5, "x5": -1.0}, seed=404))
    design, outcome = encode(schema, frame)
    return schema, design, outcome
