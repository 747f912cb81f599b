"""Learner-set construction for the four model variants.

All factories hand out :class:`~sparseboost.learners.BaseLearner` objects
whose penalties are calibrated on the design they receive:

* ``build_mb``: one learner per variable (its whole column block) at one
  effective degree of freedom each; the classic component-wise set.
* ``build_group``: one learner per variable group, equal df across groups.
* ``build_sgb``: the sparse-group set.  Within a group g holding p_g
  variables, every variable gets an individual learner with df = alpha/p_g
  and the group gets one block learner with df = (1 - alpha)/p_g, so the
  mixing parameter alpha trades within-group sparsity against group
  selection.  Learners whose df target is exactly 0 correspond to an
  infinite penalty and are omitted.
* ``build_interaction_learners``: one learner per moderator-pair term over
  its product columns, at one df each.

Group sizes are counted in variables, not encoded columns, so a
multi-category variable weighs the same as a binary one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import UnattainableDfError
from .learners import BaseLearner, make_learner
from .schema import DatasetSchema, DesignMatrix, InteractionTerm, columns_by_source

logger = logging.getLogger(__name__)

GROUP_ID_PREFIX = "group:"


@dataclass(frozen=True)
class SgbSpec:
    """Mixing parameter of the sparse-group learner set.

    ``alpha = 1`` keeps only individual learners (component-wise boosting
    up to the df scaling), ``alpha = 0`` keeps only group learners.
    """

    alpha: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must lie in [0, 1]")


def _variable_columns(schema: DatasetSchema, design: DesignMatrix):
    by_source = columns_by_source(design)
    out = []
    for var in schema.variables:
        cols = by_source.get((var.name,))
        if cols is None:
            raise ValueError(f"design has no columns for variable {var.name!r}")
        out.append((var, cols))
    return out


def build_mb(design: DesignMatrix, schema: DatasetSchema, df_base: float = 1.0
             ) -> list[BaseLearner]:
    """Component-wise set: one learner per variable at ``df_base`` each.

    Single-column variables get an unpenalised learner (df equals the
    column count, hence lambda = 0); multi-category blocks are ridge-
    penalised down to the same df so no variable is favoured for carrying
    more columns.
    """
    return [make_learner(design, var.name, cols, df_base, kind="individual")
            for var, cols in _variable_columns(schema, design)]


def build_group(design: DesignMatrix, schema: DatasetSchema, df_base: float = 1.0
                ) -> list[BaseLearner]:
    """Group set: one learner per variable group at ``df_base`` each."""
    grouped: dict[str, list] = {}
    for var, cols in _variable_columns(schema, design):
        grouped.setdefault(var.group, []).append(cols)
    learners = []
    for group in schema.groups:
        cols = np.concatenate(grouped[group])
        learners.append(make_learner(design, GROUP_ID_PREFIX + group, cols,
                                     df_base, kind="group"))
    return learners


def build_sgb(design: DesignMatrix, schema: DatasetSchema, spec: SgbSpec
              ) -> list[BaseLearner]:
    """Sparse-group set under mixing parameter ``spec.alpha``.

    Per group g with p_g member variables: individual learners at
    df = alpha/p_g and one group learner at df = (1 - alpha)/p_g.
    Zero-df learners are omitted, so alpha = 1 yields a purely individual
    set and alpha = 0 a purely group-wise one.
    """
    alpha = spec.alpha
    per_group: dict[str, list] = {}
    for var, cols in _variable_columns(schema, design):
        per_group.setdefault(var.group, []).append((var, cols))

    learners: list[BaseLearner] = []
    for group in schema.groups:
        members = per_group[group]
        p_g = len(members)
        df_ind = alpha / p_g
        df_grp = (1.0 - alpha) / p_g
        if df_ind > 0.0:
            for var, cols in members:
                learners.append(make_learner(design, var.name, cols, df_ind,
                                             kind="individual"))
        if df_grp > 0.0:
            cols = np.concatenate([c for _, c in members])
            learners.append(make_learner(design, GROUP_ID_PREFIX + group, cols,
                                         df_grp, kind="group"))
    return learners


def build_interaction_learners(design: DesignMatrix, terms: list[InteractionTerm],
                               df_base: float = 1.0) -> list[BaseLearner]:
    """One learner per interaction term over its product columns.

    ``design`` must be the augmented design holding the terms' product
    columns (see :func:`~sparseboost.schema.augment_with_interactions`);
    each term's columns are located through the design's column
    provenance.  Terms whose product block is all zeros (rare joint
    categories wiped out by centering) admit no df at all and are dropped
    with a logged warning instead of aborting the run.
    """
    by_source = columns_by_source(design)
    learners = []
    for term in terms:
        cols = by_source.get((term.moderator, term.partner))
        if cols is None:
            raise ValueError(
                f"design does not carry product columns for {term.term_id!r}; "
                "augment the design with the terms first")
        try:
            learners.append(make_learner(design, term.term_id, cols, df_base,
                                         kind="interaction"))
        except UnattainableDfError:
            logger.warning("dropping interaction term %s: product columns are "
                           "degenerate on this data", term.term_id)
    return learners
