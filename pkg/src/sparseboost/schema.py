"""Schema-driven encoding of raw tables into centered design matrices.

A :class:`DatasetSchema` lists predictor variables (binary, categorical or
continuous), the group each belongs to, and which variables act as
moderators for interaction screening.  :func:`encode` turns a raw table into
a reference-cell coded, mean-centered :class:`DesignMatrix` plus a 0/1
:class:`BinaryOutcome`.  :func:`expand_interactions` builds the moderator
pair terms whose product columns feed interaction base-learners.

Conventions baked in here and relied on everywhere else:

* the first listed category of a variable is the reference and gets no
  column; a k-category variable contributes k-1 indicator columns;
* every encoded column is mean-centered, and the per-column center offset
  is retained so the raw 0/1 values can be reconstructed;
* interaction product columns are computed on the un-centered indicators
  and centered afterwards;
* missing values are rejected, never imputed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import pandas as pd
import yaml

from .errors import (
    DegenerateColumnError,
    MissingColumnError,
    MissingValueError,
    NonBinaryOutcomeError,
    SchemaError,
    UnknownCategoryError,
)

VARIABLE_KINDS = ("binary", "categorical", "continuous")


# ---------------------------------------------------------------------------
# schema types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VariableSpec:
    """One predictor variable.

    Parameters
    ----------
    name : str
        Column name in the raw table.
    kind : str
        One of ``"binary"``, ``"categorical"``, ``"continuous"``.
    categories : tuple of str
        Declared category labels; the first is the reference.  Empty for
        continuous variables.  Raw cell values are compared to these labels
        as text.
    group : str
        Variable group label (used by group and sparse-group learners).
    moderator : bool
        Whether interaction terms anchored at this variable are screened.
    """

    name: str
    kind: str
    categories: tuple[str, ...] = ()
    group: str = "default"
    moderator: bool = False

    def __post_init__(self) -> None:
        if self.kind not in VARIABLE_KINDS:
            raise SchemaError(f"variable {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "binary" and len(self.categories) != 2:
            raise SchemaError(f"binary variable {self.name!r} needs exactly 2 categories")
        if self.kind == "categorical" and len(self.categories) < 2:
            raise SchemaError(f"categorical variable {self.name!r} needs >= 2 categories")
        if self.kind == "continuous" and self.categories:
            raise SchemaError(f"continuous variable {self.name!r} must not list categories")
        if len(set(self.categories)) != len(self.categories):
            raise SchemaError(f"variable {self.name!r}: duplicate categories")

    @property
    def n_columns(self) -> int:
        """Encoded column count: k-1 indicators, or one numeric column."""
        if self.kind == "continuous":
            return 1
        return len(self.categories) - 1


@dataclass(frozen=True)
class OutcomeSpec:
    """Binary outcome declaration: first category is the reference (0)."""

    name: str
    categories: tuple[str, str]
    description: str = ""

    def __post_init__(self) -> None:
        if len(self.categories) != 2 or len(set(self.categories)) != 2:
            raise SchemaError(f"outcome {self.name!r} needs exactly 2 distinct categories")

    @property
    def positive_meaning(self) -> str:
        return self.description or f"{self.name}={self.categories[1]}"


@dataclass(frozen=True)
class DatasetSchema:
    """Ordered predictor variables plus the outcome declaration."""

    variables: tuple[VariableSpec, ...]
    outcome: OutcomeSpec

    def __post_init__(self) -> None:
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise SchemaError("variable names must be unique")
        if self.outcome.name in names:
            raise SchemaError("outcome must not be listed among predictors")
        if not self.variables:
            raise SchemaError("schema lists no predictor variables")

    def variable(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise SchemaError(f"no variable named {name!r} in schema")

    @property
    def moderators(self) -> tuple[VariableSpec, ...]:
        return tuple(v for v in self.variables if v.moderator)

    @property
    def groups(self) -> tuple[str, ...]:
        """Group labels in first-appearance order."""
        seen: list[str] = []
        for v in self.variables:
            if v.group not in seen:
                seen.append(v.group)
        return tuple(seen)


# ---------------------------------------------------------------------------
# encoded types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColumnMeta:
    """Provenance of one design column.

    ``source`` holds one variable name for a main-effect column or two
    (moderator, partner) for an interaction product column.  ``categories``
    carries the matching indicator labels, empty for continuous.  ``center``
    is the mean that was subtracted; adding it back reproduces the raw
    values.
    """

    source: tuple[str, ...]
    categories: tuple[str, ...]
    center: float

    @property
    def label(self) -> str:
        parts = []
        for i, name in enumerate(self.source):
            if i < len(self.categories) and self.categories[i]:
                parts.append(f"{name}={self.categories[i]}")
            else:
                parts.append(name)
        return "*".join(parts)


@dataclass
class DesignMatrix:
    """Mean-centered design with per-column provenance."""

    values: np.ndarray
    column_meta: list[ColumnMeta]

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise SchemaError("design values must be a 2-d array")
        if self.values.shape[1] != len(self.column_meta):
            raise SchemaError("column_meta length does not match design width")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def labels(self) -> list[str]:
        return [m.label for m in self.column_meta]

    def uncentered(self) -> np.ndarray:
        """Raw values with the center offsets added back."""
        centers = np.array([m.center for m in self.column_meta])
        return self.values + centers


@dataclass(frozen=True)
class BinaryOutcome:
    """0/1 outcome labels with a human-readable meaning for the 1 class."""

    labels: np.ndarray
    positive_meaning: str

    def __post_init__(self) -> None:
        vals = np.unique(self.labels)
        if not np.isin(vals, (0.0, 1.0)).all():
            raise NonBinaryOutcomeError("outcome labels must be coded 0/1")


@dataclass(frozen=True)
class InteractionTerm:
    """Centered product columns for one (moderator, partner) pair."""

    moderator: str
    partner: str
    columns: np.ndarray
    column_meta: tuple[ColumnMeta, ...]

    @property
    def term_id(self) -> str:
        return f"{self.moderator}*{self.partner}"


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------

def _text_column(raw_table: pd.DataFrame, name: str) -> np.ndarray:
    """Cell text of one raw column; rejects missing values."""
    if name not in raw_table.columns:
        raise MissingColumnError(f"raw table has no column {name!r}")
    col = raw_table[name]
    if col.isna().any():
        raise MissingValueError(f"column {name!r} contains missing values")
    return col.astype(str).to_numpy()


def _indicator_block(var: VariableSpec, text: np.ndarray) -> tuple[np.ndarray, list[ColumnMeta]]:
    """Un-centered 0/1 indicators for the non-reference categories."""
    known = np.isin(text, var.categories)
    if not known.all():
        bad = sorted(set(text[~known]))
        raise UnknownCategoryError(f"variable {var.name!r}: unknown value(s) {bad}")
    cols = np.column_stack([(text == c).astype(float) for c in var.categories[1:]])
    meta = [ColumnMeta(source=(var.name,), categories=(c,), center=0.0)
            for c in var.categories[1:]]
    return cols, meta


def _numeric_column(var: VariableSpec, raw_table: pd.DataFrame) -> np.ndarray:
    if var.name not in raw_table.columns:
        raise MissingColumnError(f"raw table has no column {var.name!r}")
    col = raw_table[var.name]
    if col.isna().any():
        raise MissingValueError(f"column {var.name!r} contains missing values")
    try:
        values = pd.to_numeric(col, errors="raise").astype(float).to_numpy()
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"continuous variable {var.name!r} is not numeric: {exc}") from None
    if np.isnan(values).any():
        raise MissingValueError(f"column {var.name!r} contains missing values")
    return values


def _center(block: np.ndarray, meta: list[ColumnMeta]) -> tuple[np.ndarray, list[ColumnMeta]]:
    centers = block.mean(axis=0)
    centered = block - centers
    new_meta = [ColumnMeta(m.source, m.categories, float(c)) for m, c in zip(meta, centers)]
    return centered, new_meta


def encode(schema: DatasetSchema, raw_table: pd.DataFrame) -> tuple[DesignMatrix, BinaryOutcome]:
    """Encode a raw table against a schema.

    Parameters
    ----------
    schema : DatasetSchema
    raw_table : pandas.DataFrame
        Must contain every schema variable and the outcome column.  Extra
        columns are ignored.  Categorical cells are matched to the declared
        labels as text.

    Returns
    -------
    (DesignMatrix, BinaryOutcome)
        Columns follow schema order; within a variable, the declared
        category order (reference dropped).  Every column is mean-centered.

    Raises
    ------
    MissingColumnError, MissingValueError, UnknownCategoryError
    NonBinaryOutcomeError
        If the outcome column does not show exactly the two declared
        categories (both must be present).
    DegenerateColumnError
        If any encoded column is constant: a single observed category (or a
        constant continuous variable) centers to an identically zero column.
    """
    if len(raw_table) == 0:
        raise SchemaError("raw table has no rows")

    blocks: list[np.ndarray] = []
    meta: list[ColumnMeta] = []
    for var in schema.variables:
        if var.kind == "continuous":
            col = _numeric_column(var, raw_table)
            block, m = col[:, None], [ColumnMeta((var.name,), (), 0.0)]
        else:
            block, m = _indicator_block(var, _text_column(raw_table, var.name))
        for j in range(block.shape[1]):
            if np.all(block[:, j] == block[0, j]):
                raise DegenerateColumnError(
                    f"column {m[j].label!r} is constant; a constant column centers "
                    "to zero and can never be selected")
        blocks.append(block)
        meta.extend(m)

    values, meta = _center(np.column_stack(blocks), meta)
    design = DesignMatrix(values=values, column_meta=meta)

    out = schema.outcome
    text = _text_column(raw_table, out.name)
    observed = set(np.unique(text))
    if not observed <= set(out.categories):
        raise NonBinaryOutcomeError(
            f"outcome {out.name!r}: unexpected value(s) {sorted(observed - set(out.categories))}")
    if observed != set(out.categories):
        raise NonBinaryOutcomeError(
            f"outcome {out.name!r} must show both categories, got {sorted(observed)}")
    labels = (text == out.categories[1]).astype(float)
    return design, BinaryOutcome(labels=labels, positive_meaning=out.positive_meaning)


# ---------------------------------------------------------------------------
# interactions
# ---------------------------------------------------------------------------

def _uncentered_block(design: DesignMatrix, name: str) -> tuple[np.ndarray, list[ColumnMeta]]:
    idx = [j for j, m in enumerate(design.column_meta) if m.source == (name,)]
    if not idx:
        raise SchemaError(f"design has no columns for variable {name!r}")
    centers = np.array([design.column_meta[j].center for j in idx])
    return design.values[:, idx] + centers, [design.column_meta[j] for j in idx]


def expand_interactions(schema: DatasetSchema, design: DesignMatrix) -> list[InteractionTerm]:
    """Product terms for every unordered pair touching a moderator.

    Each moderator is paired with every other predictor; a pair of two
    moderators is emitted once, anchored at the one listed first.  Product
    columns are elementwise products of the two variables' un-centered
    indicator (or numeric) columns, centered afterwards.  Pair order follows
    the schema's variable order, so the expansion is deterministic.
    """
    terms: list[InteractionTerm] = []
    variables = schema.variables
    for i, vi in enumerate(variables):
        for j in range(i + 1, len(variables)):
            vj = variables[j]
            if not (vi.moderator or vj.moderator):
                continue
            mod, part = (vi, vj) if vi.moderator else (vj, vi)
            mod_block, mod_meta = _uncentered_block(design, mod.name)
            part_block, part_meta = _uncentered_block(design, part.name)
            cols = []
            meta: list[ColumnMeta] = []
            for a in range(mod_block.shape[1]):
                for b in range(part_block.shape[1]):
                    cols.append(mod_block[:, a] * part_block[:, b])
                    cat_a = mod_meta[a].categories[0] if mod_meta[a].categories else ""
                    cat_b = part_meta[b].categories[0] if part_meta[b].categories else ""
                    meta.append(ColumnMeta(source=(mod.name, part.name),
                                           categories=(cat_a, cat_b), center=0.0))
            block, meta = _center(np.column_stack(cols), meta)
            terms.append(InteractionTerm(moderator=mod.name, partner=part.name,
                                         columns=block, column_meta=tuple(meta)))
    return terms


def augment_with_interactions(design: DesignMatrix,
                              terms: list[InteractionTerm]) -> DesignMatrix:
    """Stack interaction product columns after the main-effect columns."""
    if not terms:
        return DesignMatrix(values=design.values.copy(),
                            column_meta=list(design.column_meta))
    values = np.hstack([design.values] + [t.columns for t in terms])
    meta = list(design.column_meta)
    for t in terms:
        meta.extend(t.column_meta)
    return DesignMatrix(values=values, column_meta=meta)


def columns_by_source(design: DesignMatrix) -> dict[tuple[str, ...], np.ndarray]:
    """Map (variable,) or (moderator, partner) tuples to column indices."""
    out: dict[tuple[str, ...], list[int]] = {}
    for j, m in enumerate(design.column_meta):
        out.setdefault(m.source, []).append(j)
    return {k: np.array(v, dtype=int) for k, v in out.items()}


def column_group_index(schema: DatasetSchema, design: DesignMatrix) -> dict[str, np.ndarray]:
    """Group label -> indices of that group's main-effect columns.

    Interaction columns (two-variable source) are outside any group and are
    skipped.  The main-effect columns of the design are partitioned: every
    one belongs to exactly one group.
    """
    groups: dict[str, list[int]] = {g: [] for g in schema.groups}
    for j, m in enumerate(design.column_meta):
        if len(m.source) != 1:
            continue
        groups[schema.variable(m.source[0]).group].append(j)
    return {g: np.array(idx, dtype=int) for g, idx in groups.items() if idx}


# ---------------------------------------------------------------------------
# schema files
# ---------------------------------------------------------------------------

def schema_to_dict(schema: DatasetSchema) -> dict:
    return {
        "outcome": {
            "name": schema.outcome.name,
            "categories": list(schema.outcome.categories),
            **({"description": schema.outcome.description}
               if schema.outcome.description else {}),
        },
        "variables": [
            {
                "name": v.name,
                "kind": v.kind,
                **({"categories": list(v.categories)} if v.categories else {}),
                "group": v.group,
                **({"moderator": True} if v.moderator else {}),
            }
            for v in schema.variables
        ],
    }


def schema_from_dict(payload: dict) -> DatasetSchema:
    try:
        out = payload["outcome"]
        outcome = OutcomeSpec(name=str(out["name"]),
                              categories=tuple(str(c) for c in out["categories"]),
                              description=str(out.get("description", "")))
        variables = tuple(
            VariableSpec(name=str(v["name"]),
                         kind=str(v["kind"]),
                         categories=tuple(str(c) for c in v.get("categories", ())),
                         group=str(v.get("group", "default")),
                         moderator=bool(v.get("moderator", False)))
            for v in payload["variables"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed schema document: {exc}") from None
    return DatasetSchema(variables=variables, outcome=outcome)


def load_schema(path: str) -> DatasetSchema:
    """Read a schema from a YAML document."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = yaml.safe_load(fh)
    if not isinstance(payload, dict):
        raise SchemaError(f"schema file {path!r} does not hold a mapping")
    return schema_from_dict(payload)


def save_schema(schema: DatasetSchema, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(schema_to_dict(schema), fh, sort_keys=False)


def schema_fingerprint(schema: DatasetSchema) -> str:
    """Stable digest of the schema content, recorded in artifacts."""
    canonical = yaml.safe_dump(schema_to_dict(schema), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
