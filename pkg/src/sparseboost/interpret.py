"""Interpretation of boosted fits and the raw-data interaction probe.

Variable importance credits every boosting step's risk reduction to the
learner selected in that step, so the absolute importances telescope to
the fit's total risk drop.  Odds ratios exponentiate the accumulated
coefficients; because the design columns are only shifted by centering,
one unit of a 0/1 indicator still means "category versus reference".
Partial effects evaluate one learner's contribution across its category
grid while all other learners sit at their average contribution.

The probe is deliberately independent of boosting: an unpenalised
logistic regression (IRLS) of the outcome on one moderator-partner pair,
with main effects and the interaction, fitted within strata and pooled.
It answers "is this selected interaction visible in the raw frequencies"
without any shrinkage in the way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .boosting import BoostFit, linear_predictor, sigmoid
from .errors import ColumnMismatchError, SchemaError, UnknownLearnerError
from .schema import (
    BinaryOutcome,
    DatasetSchema,
    DesignMatrix,
    InteractionTerm,
    _text_column,
)

IRLS_MAX_ITER = 50
IRLS_TOL = 1e-10
_SEPARATION_PROB = 1e-6


# ---------------------------------------------------------------------------
# variable importance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImportanceRow:
    learner_id: str
    absolute: float
    relative: float


@dataclass
class ImportanceTable:
    """Per-learner risk reduction, absolute and as a share of the total."""

    rows: list[ImportanceRow]

    def relative_of(self, learner_id: str) -> float:
        for row in self.rows:
            if row.learner_id == learner_id:
                return row.relative
        return 0.0

    def absolute_of(self, learner_id: str) -> float:
        for row in self.rows:
            if row.learner_id == learner_id:
                return row.absolute
        return 0.0


def importance(fit: BoostFit) -> ImportanceTable:
    """Risk reduction credited to each selected learner.

    Walks the selection path, attributing every step's drop in risk to the
    learner picked in that step.  The absolute values telescope: their sum
    is the offset risk minus the final risk.  Relative values divide by
    that sum.  A fit with no iterations yields an empty table; learners
    never selected do not appear (their importance is zero).
    """
    reductions: dict[str, float] = {}
    first_seen: dict[str, int] = {}
    before = fit.offset_risk
    for step in fit.selection_path:
        reductions[step.learner_id] = reductions.get(step.learner_id, 0.0) \
            + (before - step.risk_after)
        first_seen.setdefault(step.learner_id, step.iteration)
        before = step.risk_after
    total = sum(reductions.values())
    rows = [
        ImportanceRow(learner_id=lid, absolute=red,
                      relative=red / total if total != 0.0 else 0.0)
        for lid, red in reductions.items()
    ]
    rows.sort(key=lambda r: (-r.absolute, first_seen[r.learner_id]))
    return ImportanceTable(rows=rows)


# ---------------------------------------------------------------------------
# odds ratios
# ---------------------------------------------------------------------------

def odds_ratios(fit: BoostFit, design: DesignMatrix) -> dict[tuple[str, str], float]:
    """Odds ratio per (learner id, column label).

    The accumulated coefficient of an indicator column is the change in
    the linear predictor for the raw 0 -> 1 contrast (centering only
    shifts the column), so exp(coefficient) is the odds ratio against the
    reference category.  Continuous columns give per-unit odds ratios.
    Unselected learners carry zero coefficients, hence odds ratios of 1.
    """
    if design.p != fit.n_columns:
        raise ColumnMismatchError(
            f"design has {design.p} columns, fit was trained on {fit.n_columns}")
    out: dict[tuple[str, str], float] = {}
    for learner_id, cols in fit.learner_columns.items():
        beta = fit.coef[learner_id]
        for j, col in enumerate(cols):
            label = design.column_meta[col].label
            out[(learner_id, label)] = float(np.exp(beta[j]))
    return out


# ---------------------------------------------------------------------------
# partial effects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartialEffectRow:
    """One grid point: level labels, linear predictor and probability."""

    levels: tuple[str, ...]
    linear: float
    probability: float


@dataclass
class PartialEffectGrid:
    learner_id: str
    variables: tuple[str, ...]
    rows: list[PartialEffectRow]


def _level_values(metas, grid_levels: tuple) -> np.ndarray:
    """Un-centered column values of the learner's block at one grid point.

    Indicator columns contribute 1 when the grid level names their
    category; continuous columns take the grid value itself.
    """
    values = np.empty(len(metas))
    for j, meta in enumerate(metas):
        v = 1.0
        for part in range(len(meta.source)):
            cat = meta.categories[part] if part < len(meta.categories) else ""
            level = grid_levels[part]
            if cat == "":
                v *= float(level)
            else:
                v *= 1.0 if str(level) == cat else 0.0
        values[j] = v
    return values


def _category_grid(schema: DatasetSchema | None, metas, variables: tuple[str, ...]
                   ) -> list[tuple[str, ...]]:
    levels_per_var: list[list[str]] = []
    for i, name in enumerate(variables):
        non_ref: list[str] = []
        for meta in metas:
            cat = meta.categories[i] if i < len(meta.categories) else ""
            if cat and cat not in non_ref:
                non_ref.append(cat)
        if not non_ref:
            raise SchemaError(
                f"variable {name!r} has no category labels; pass an explicit grid "
                "for continuous learners")
        if schema is not None:
            levels_per_var.append(list(schema.variable(name).categories))
        else:
            levels_per_var.append(["(reference)"] + non_ref)
    grid: list[tuple[str, ...]] = []
    if len(levels_per_var) == 1:
        grid = [(lv,) for lv in levels_per_var[0]]
    else:
        for la in levels_per_var[0]:
            for lb in levels_per_var[1]:
                grid.append((la, lb))
    return grid


def partial_effects(fit: BoostFit, design: DesignMatrix, learner_id: str,
                    grid: list[tuple[str, ...]] | None = None,
                    schema: DatasetSchema | None = None) -> PartialEffectGrid:
    """Predicted probabilities across one learner's category grid.

    All other learners contribute their average over the design rows, so
    the grid isolates this learner's effect on the probability scale.  The
    default grid enumerates the category combinations of the learner's
    source variables (reference included); pass ``grid`` explicitly for
    continuous learners.  With ``schema`` given, reference categories are
    labelled by name instead of "(reference)".
    """
    cols = fit.learner_columns.get(learner_id)
    if cols is None:
        raise UnknownLearnerError(f"fit has no learner {learner_id!r}")
    if design.p != fit.n_columns:
        raise ColumnMismatchError(
            f"design has {design.p} columns, fit was trained on {fit.n_columns}")
    beta = fit.coef[learner_id]
    metas = [design.column_meta[c] for c in cols]
    variables = metas[0].source
    for meta in metas:
        if meta.source != variables:
            raise SchemaError(f"learner {learner_id!r} spans several variables; "
                              "partial effects need a single source block")

    # everything else at its average contribution
    lin_full = linear_predictor(fit, design)
    contrib = design.values[:, cols] @ beta
    base = float(np.mean(lin_full - contrib))

    if grid is None:
        grid = _category_grid(schema, metas, variables)

    centers = np.array([m.center for m in metas])
    rows = []
    for levels in grid:
        levels = tuple(levels) if isinstance(levels, (tuple, list)) else (str(levels),)
        raw = _level_values(metas, levels)
        lin = base + float((raw - centers) @ beta)
        rows.append(PartialEffectRow(levels=levels, linear=lin,
                                     probability=float(sigmoid(np.array([lin]))[0])))
    return PartialEffectGrid(learner_id=learner_id, variables=variables, rows=rows)


# ---------------------------------------------------------------------------
# interaction probe
# ---------------------------------------------------------------------------

@dataclass
class StratumProbe:
    """Probe outcome within one stratum (or pooled)."""

    stratum: str
    n: int
    converged: bool
    flag_reason: str = ""
    cell_probs: dict[tuple[str, str], float] = field(default_factory=dict)
    cell_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    coefficients: np.ndarray | None = None


@dataclass
class ProbeResult:
    term_id: str
    moderator: str
    partner: str
    strata: list[StratumProbe]

    def stratum(self, name: str) -> StratumProbe:
        for s in self.strata:
            if s.stratum == name:
                return s
        raise KeyError(name)


def _irls_logistic(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, bool]:
    """Unpenalised logistic regression by iteratively reweighted least squares.

    Newton steps on the log-likelihood until the deviance moves by no more
    than 1e-10, capped at 50 iterations.  Returns (beta, converged);
    a singular weighted Gram (complete separation drives the weights to
    zero) reports non-convergence instead of raising.
    """
    beta = np.zeros(x.shape[1])
    dev_prev = np.inf
    for _ in range(IRLS_MAX_ITER):
        p = sigmoid(x @ beta)
        w = p * (1.0 - p)
        gram = (x * w[:, None]).T @ x
        try:
            step = np.linalg.solve(gram, x.T @ (y - p))
        except np.linalg.LinAlgError:
            return beta, False
        beta = beta + step
        p = np.clip(sigmoid(x @ beta), 1e-300, 1.0 - 1e-16)
        dev = -2.0 * float(y @ np.log(p) + (1.0 - y) @ np.log(1.0 - p))
        if abs(dev_prev - dev) <= IRLS_TOL:
            return beta, True
        dev_prev = dev
    return beta, False


def _probe_design(a_text: np.ndarray, b_text: np.ndarray,
                  cats_a: tuple[str, ...], cats_b: tuple[str, ...],
                  include_main_effects: bool) -> np.ndarray:
    cols = [np.ones(a_text.shape[0])]
    a_dummies = [(a_text == c).astype(float) for c in cats_a[1:]]
    b_dummies = [(b_text == c).astype(float) for c in cats_b[1:]]
    if include_main_effects:
        cols.extend(a_dummies)
        cols.extend(b_dummies)
    for da in a_dummies:
        for db in b_dummies:
            cols.append(da * db)
    return np.column_stack(cols)


def interaction_probe(raw_table: pd.DataFrame, schema: DatasetSchema,
                      term: InteractionTerm | tuple[str, str],
                      outcome: BinaryOutcome | None = None,
                      strata_column: str | None = None,
                      include_main_effects: bool = True) -> ProbeResult:
    """Raw-data check of one interaction: saturated logistic fit per stratum.

    For the (moderator, partner) pair an unpenalised logistic regression
    with intercept, both main effects (optional) and the interaction is
    fitted pooled and, if ``strata_column`` is given, within each stratum.
    The report carries the fitted probability of a positive outcome for
    every joint category cell.  Strata where the fit does not converge, or
    where a fitted cell probability collapses to 0 or 1 (separation, e.g.
    a cell without positives), are flagged and report no probabilities.
    Cells with no observations at all make the saturated fit undefined and
    flag the stratum as well.
    """
    if isinstance(term, InteractionTerm):
        mod_name, part_name = term.moderator, term.partner
    else:
        mod_name, part_name = term
    mod = schema.variable(mod_name)
    part = schema.variable(part_name)
    if mod.kind == "continuous" or part.kind == "continuous":
        raise SchemaError("the probe tabulates categories; continuous variables "
                          "have no joint category cells")

    a_text = _text_column(raw_table, mod.name)
    b_text = _text_column(raw_table, part.name)
    if outcome is None:
        out_text = _text_column(raw_table, schema.outcome.name)
        y_all = (out_text == schema.outcome.categories[1]).astype(float)
    else:
        y_all = np.asarray(outcome.labels, dtype=float)
        if y_all.shape[0] != len(raw_table):
            raise ValueError("outcome length does not match the raw table")

    groups: list[tuple[str, np.ndarray]] = [("pooled", np.arange(len(raw_table)))]
    if strata_column is not None:
        strata_text = _text_column(raw_table, strata_column)
        for value in sorted(set(strata_text)):
            groups.append((str(value), np.nonzero(strata_text == value)[0]))

    cells = [(ca, cb) for ca in mod.categories for cb in part.categories]
    strata_out: list[StratumProbe] = []
    for name, idx in groups:
        a, b, y = a_text[idx], b_text[idx], y_all[idx]
        counts = {(ca, cb): int(np.sum((a == ca) & (b == cb))) for ca, cb in cells}
        probe = StratumProbe(stratum=name, n=idx.size, converged=False,
                             cell_counts=counts)
        if min(counts.values()) == 0:
            probe.flag_reason = "empty joint category cell"
            strata_out.append(probe)
            continue
        if np.unique(y).size < 2:
            probe.flag_reason = "single outcome class"
            strata_out.append(probe)
            continue
        x = _probe_design(a, b, mod.categories, part.categories, include_main_effects)
        beta, converged = _irls_logistic(x, y)
        if not converged:
            probe.flag_reason = "IRLS did not converge (possible separation)"
            strata_out.append(probe)
            continue
        cell_rows = _probe_design(
            np.array([ca for ca, _ in cells]), np.array([cb for _, cb in cells]),
            mod.categories, part.categories, include_main_effects)
        probs = sigmoid(cell_rows @ beta)
        if np.any(probs <= _SEPARATION_PROB) or np.any(probs >= 1.0 - _SEPARATION_PROB):
            probe.flag_reason = "fitted cell probability at the boundary (separation)"
            strata_out.append(probe)
            continue
        probe.converged = True
        probe.coefficients = beta
        probe.cell_probs = {cell: float(p) for cell, p in zip(cells, probs)}
        strata_out.append(probe)

    term_id = f"{mod_name}*{part_name}"
    return ProbeResult(term_id=term_id, moderator=mod_name, partner=part_name,
                       strata=strata_out)
