"""Data splitting, cross-validated early stopping and ROC evaluation.

The split and the fold assignment are stratified by outcome class and
driven entirely by an explicit seed, so a run is reproducible from its
configuration alone.  Early stopping minimises the mean out-of-fold
negative log-likelihood over a 0..m_max risk grid; ties go to the smaller
iteration count.  For staged (K-step) runs every stage is tuned
independently, with the later stage's cross-validation starting from the
frozen fit of the stages before it.

AUC is computed twice on purpose: as the trapezoidal area under the
threshold-swept ROC curve and by pair counting (the Mann-Whitney form with
ties counted half).  The two agree to floating-point accuracy, and the
test-suite holds them to 1e-12 of each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .boosting import (
    BoostConfig,
    BoostFit,
    LossFamily,
    BINOMIAL_LOGIT,
    StagePlan,
    _init_state,
    _package,
    _register,
    _run_rounds,
    _labels,
    _values,
)
from .errors import (
    DegenerateFoldError,
    SingleClassError,
    TooFewObservationsError,
)
from .learners import BaseLearner


# ---------------------------------------------------------------------------
# train/test split
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    """Train fraction, seed and stratification switch of one split."""

    train_fraction: float = 0.7
    seed: int = 0
    stratified: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must lie strictly between 0 and 1")


def split(y, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint, exhaustive train/test row indices.

    Stratified mode samples within each outcome class: per-class train
    counts start at floor(fraction * n_class) and the leftover seats up to
    round(fraction * n) go to the classes with the largest fractional
    remainders, so class ratios are preserved within one observation.
    Returned index arrays are sorted.
    """
    labels = _labels(y)
    n = labels.shape[0]
    rng = np.random.default_rng(spec.seed)
    total_target = int(np.floor(spec.train_fraction * n + 0.5))

    if not spec.stratified:
        if total_target < 1 or total_target >= n:
            raise TooFewObservationsError("split would leave train or test empty")
        perm = rng.permutation(n)
        train = np.sort(perm[:total_target])
        test = np.sort(perm[total_target:])
        return train, test

    class_indices = [np.nonzero(labels == c)[0] for c in (0.0, 1.0)]
    if any(idx.size < 2 for idx in class_indices):
        raise TooFewObservationsError(
            "stratified split needs at least 2 observations per class")

    exact = [spec.train_fraction * idx.size for idx in class_indices]
    takes = [int(np.floor(e)) for e in exact]
    remainders = [e - t for e, t in zip(exact, takes)]
    leftover = total_target - sum(takes)
    for c in sorted(range(len(takes)), key=lambda c: -remainders[c]):
        if leftover <= 0:
            break
        takes[c] += 1
        leftover -= 1
    # keep both classes represented on both sides
    takes = [min(max(t, 1), idx.size - 1) for t, idx in zip(takes, class_indices)]

    train_parts, test_parts = [], []
    for idx, take in zip(class_indices, takes):
        perm = rng.permutation(idx.size)
        train_parts.append(idx[perm[:take]])
        test_parts.append(idx[perm[take:]])
    return np.sort(np.concatenate(train_parts)), np.sort(np.concatenate(test_parts))


def fold_assignments(y, folds: int, seed: int) -> np.ndarray:
    """Stratified fold label per row, round-robin within each class."""
    labels = _labels(y)
    n = labels.shape[0]
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if folds > n:
        raise TooFewObservationsError(f"{folds} folds but only {n} rows")
    rng = np.random.default_rng(seed)
    assign = np.empty(n, dtype=int)
    offset = 0
    for c in (0.0, 1.0):
        idx = np.nonzero(labels == c)[0]
        perm = idx[rng.permutation(idx.size)]
        # continue the round-robin across classes so fold sizes stay level
        assign[perm] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return assign


# ---------------------------------------------------------------------------
# cross-validated early stopping
# ---------------------------------------------------------------------------

@dataclass
class CvResult:
    """Out-of-fold risk grid of one learner set.

    ``risk_matrix[k, m]`` is fold k's held-out risk after m boosting
    rounds; column means give ``mean_risk`` and ``m_star`` is the smallest
    minimiser of that curve.
    """

    m_star: int
    risk_matrix: np.ndarray
    mean_risk: np.ndarray


def _cv_risk_matrix(x: np.ndarray, labels: np.ndarray, learners: list[BaseLearner],
                    family: LossFamily, config: BoostConfig, m_max: int,
                    assign: np.ndarray, base_f: np.ndarray | None) -> np.ndarray:
    folds = int(assign.max()) + 1
    matrix = np.empty((folds, m_max + 1))
    for k in range(folds):
        te = np.nonzero(assign == k)[0]
        tr = np.nonzero(assign != k)[0]
        y_tr, y_te = labels[tr], labels[te]
        if np.unique(y_tr).size < 2:
            raise DegenerateFoldError(f"fold {k}: training part has a single class")
        x_tr = np.ascontiguousarray(x[tr])
        x_te = np.ascontiguousarray(x[te])
        if base_f is None:
            state = _init_state(y_tr, family, config, tr.size)
            f_te = np.full(te.size, state.offset)
        else:
            # stage continuation: start both parts from the frozen fit
            state = _init_state(y_tr, family, config, tr.size)
            state.f = base_f[tr].copy()
            f_te = base_f[te].copy()
        risks = [family.risk(y_te, f_te)]
        _register(state, learners)
        _run_rounds(x_tr, y_tr, family, config.eta, m_max, learners, state,
                    eval_pack=(x_te, y_te, f_te, risks))
        matrix[k] = risks
    return matrix


def cv_mstop(design, y, learners: list[BaseLearner], family: LossFamily = BINOMIAL_LOGIT,
             config: BoostConfig = BoostConfig(), folds: int = 10, m_max: int = 1000,
             seed: int = 0, base_f: np.ndarray | None = None) -> CvResult:
    """Early-stopping iteration by stratified k-fold cross-validation.

    Every fold's training part is boosted for ``m_max`` rounds while the
    held-out risk is tracked after every round (entry 0 is the offset-only
    risk).  ``m_star`` minimises the fold-mean risk; ties break to the
    smallest iteration count.  ``base_f`` (one linear-predictor value per
    design row) lets a later stage tune on top of a frozen earlier fit.
    """
    x, labels = _values(design), _labels(y)
    assign = fold_assignments(labels, folds, seed)
    matrix = _cv_risk_matrix(x, labels, learners, family, config, m_max, assign, base_f)
    mean_risk = matrix.mean(axis=0)
    return CvResult(m_star=int(np.argmin(mean_risk)), risk_matrix=matrix,
                    mean_risk=mean_risk)


def fit_stage_plan_cv(design, y, plan: StagePlan, family: LossFamily = BINOMIAL_LOGIT,
                      config: BoostConfig = BoostConfig(), folds: int = 10,
                      m_max: int = 1000, seed: int = 0,
                      ) -> tuple[BoostFit, list[CvResult | None], list[int]]:
    """Fit a stage plan, resolving every ``"cv"`` budget as it is reached.

    Stages run in order on the full data.  A stage with a ``"cv"`` budget
    is first cross-validated (folds fixed once from ``seed``, the risk
    grid starting from the frozen fit of all earlier stages), then run for
    its ``m_star`` rounds.  Integer budgets are used as given.

    Returns the fit, the per-stage CV results (None for fixed budgets) and
    the resolved budgets.
    """
    x, labels = _values(design), _labels(y)
    assign = fold_assignments(labels, folds, seed)
    state = _init_state(labels, family, config, x.shape[0])
    cv_results: list[CvResult | None] = []
    budgets: list[int] = []
    for k, stage in enumerate(plan.stages):
        if stage.budget == "cv":
            matrix = _cv_risk_matrix(x, labels, stage.learners, family, config,
                                     m_max, assign,
                                     base_f=state.f.copy() if state.path or k > 0 else None)
            mean_risk = matrix.mean(axis=0)
            result = CvResult(m_star=int(np.argmin(mean_risk)), risk_matrix=matrix,
                              mean_risk=mean_risk)
            cv_results.append(result)
            m_k = result.m_star
        else:
            cv_results.append(None)
            m_k = int(stage.budget)
        _register(state, stage.learners)
        _run_rounds(x, labels, family, config.eta, m_k, stage.learners, state, stage=k)
        budgets.append(m_k)
    return _package(state, x.shape[1]), cv_results, budgets


# ---------------------------------------------------------------------------
# ROC / AUC
# ---------------------------------------------------------------------------

@dataclass
class RocCurve:
    """ROC points swept over descending score thresholds.

    ``points`` is a (k, 2) array of (fpr, tpr) starting at (0, 0) and
    ending at (1, 1); both coordinates are non-decreasing.  ``auc`` is the
    trapezoidal area under the points, which equals the pair-counting
    statistic.
    """

    points: np.ndarray
    thresholds: np.ndarray
    auc: float


def _check_two_classes(labels: np.ndarray) -> tuple[int, int]:
    pos = int(np.sum(labels == 1.0))
    neg = int(np.sum(labels == 0.0))
    if pos == 0 or neg == 0:
        raise SingleClassError("ROC needs at least one positive and one negative label")
    return pos, neg


def roc_auc(scores: np.ndarray, labels) -> RocCurve:
    """ROC curve and trapezoidal AUC of scores against 0/1 labels.

    Tied scores are swept as one threshold step, which draws the tie as a
    diagonal segment; the trapezoid over that segment equals counting the
    tied pairs half, so the area agrees exactly with pair counting.
    Constant scores produce the single segment (0,0)-(1,1) and an AUC of
    exactly 0.5.
    """
    scores = np.asarray(scores, dtype=float)
    y = _labels(labels)
    if scores.shape[0] != y.shape[0]:
        raise ValueError("scores and labels differ in length")
    pos, neg = _check_two_classes(y)

    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    y_sorted = y[order]
    # last row of every tied block of descending scores
    last = np.nonzero(np.diff(s_sorted))[0]
    block_ends = np.concatenate([last, [s_sorted.size - 1]])
    tp = np.cumsum(y_sorted)[block_ends]
    fp = (block_ends + 1) - tp
    points = np.column_stack([
        np.concatenate([[0.0], fp / neg]),
        np.concatenate([[0.0], tp / pos]),
    ])
    thresholds = np.concatenate([[np.inf], s_sorted[block_ends]])
    width = np.diff(points[:, 0])
    height = 0.5 * (points[1:, 1] + points[:-1, 1])
    return RocCurve(points=points, thresholds=thresholds, auc=float(width @ height))


def auc_pair_count(scores: np.ndarray, labels) -> float:
    """AUC as the fraction of concordant (positive, negative) pairs.

    Ties in score count one half.  Computed through midranks, so it runs
    in O(n log n) yet equals the literal pair count.
    """
    scores = np.asarray(scores, dtype=float)
    y = _labels(labels)
    pos, neg = _check_two_classes(y)
    ranks = rankdata(scores)
    rank_sum = float(np.sum(ranks[y == 1.0]))
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg)
