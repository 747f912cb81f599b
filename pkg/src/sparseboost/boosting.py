"""Functional gradient boosting for binary outcomes.

The engine is loss-family driven: at every iteration the pseudo-residuals
(negative gradient of the empirical risk at the current fit) are computed,
every base-learner is ridge-fitted to them by least squares, the learner
with the smallest residual sum of squares wins, and a small step ``eta``
times its fitted function is added to the ensemble.  Only the
binomial-logit family ships: probabilities come from the logistic link and
the risk is the negative Bernoulli log-likelihood with probabilities
clamped away from 0 and 1.

``boost`` runs a single learner set for a fixed number of iterations;
``k_step_boost`` runs an ordered list of stages, each with its own learner
set and budget, continuing from the previous stage's fit without any
reinitialisation.  Running one stage of budget M is therefore exactly the
same computation as ``boost`` with ``m_stop = M``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    ColumnMismatchError,
    DegenerateOutcomeError,
    NumericalFailureError,
)
from .learners import BaseLearner, LearnerFit, fit_learner

PROB_CLAMP = 1e-12


# ---------------------------------------------------------------------------
# loss family
# ---------------------------------------------------------------------------

def sigmoid(f: np.ndarray) -> np.ndarray:
    """Logistic link, evaluated in the numerically stable branch-wise form."""
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    pos = f >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-f[pos]))
    expf = np.exp(f[~pos])
    out[~pos] = expf / (1.0 + expf)
    return out


@dataclass(frozen=True)
class LossFamily:
    """Link, negative gradient and empirical risk of one outcome family."""

    name: str

    def link(self, f: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def negative_gradient(self, y: np.ndarray, f: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def risk(self, y: np.ndarray, f: np.ndarray) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class BinomialLogit(LossFamily):
    """Bernoulli negative log-likelihood under the logistic link.

    The risk clamps probabilities to ``[1e-12, 1 - 1e-12]`` so it stays
    finite for arbitrarily extreme linear predictors; the gradient is the
    plain residual ``y - h(f)`` on the unclamped probabilities.
    """

    name: str = "binomial-logit"

    def link(self, f: np.ndarray) -> np.ndarray:
        return sigmoid(f)

    def negative_gradient(self, y: np.ndarray, f: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=float) - sigmoid(f)

    def risk(self, y: np.ndarray, f: np.ndarray) -> float:
        y = np.asarray(y, dtype=float)
        p = np.clip(sigmoid(f), PROB_CLAMP, 1.0 - PROB_CLAMP)
        return float(-(y @ np.log(p) + (1.0 - y) @ np.log(1.0 - p)))


BINOMIAL_LOGIT = BinomialLogit()


def pseudo_residuals(family: LossFamily, y: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Negative gradient of the risk at the current fit."""
    return family.negative_gradient(y, f)


def init_offset(family: LossFamily, y: np.ndarray, mode: str = "mean-link") -> float:
    """Scalar starting value of the ensemble.

    ``"mean-link"`` puts the offset at the link-scale mean, i.e.
    ``logit(mean(y))`` for the binomial family, so the ensemble starts at
    the best constant model.  ``"zero"`` starts at 0.
    """
    if mode == "zero":
        return 0.0
    if mode != "mean-link":
        raise ValueError(f"unknown offset mode {mode!r}")
    ybar = float(np.mean(np.asarray(y, dtype=float)))
    if ybar <= 0.0 or ybar >= 1.0:
        raise DegenerateOutcomeError("all outcome labels identical; mean-link offset is infinite")
    return float(np.log(ybar / (1.0 - ybar)))


# ---------------------------------------------------------------------------
# configuration and fit containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoostConfig:
    """Step length, iteration budget and offset mode of one boosting run."""

    eta: float = 0.1
    m_stop: int = 100
    offset_mode: str = "mean-link"

    def __post_init__(self) -> None:
        if not (0.0 < self.eta < 1.0):
            raise ValueError("eta must lie strictly between 0 and 1")
        if self.m_stop < 0:
            raise ValueError("m_stop must be >= 0")
        if self.offset_mode not in ("mean-link", "zero"):
            raise ValueError(f"unknown offset mode {self.offset_mode!r}")


@dataclass(frozen=True)
class SelectionStep:
    """One boosting iteration: who won and the risk after the update."""

    iteration: int
    learner_id: str
    risk_after: float
    stage: int = 0


@dataclass
class Stage:
    """One stage of a staged run: a learner set plus an iteration budget.

    ``budget`` is either a concrete iteration count or the string ``"cv"``,
    which the tuning layer resolves before the engine runs.
    """

    learners: list[BaseLearner]
    budget: int | str


@dataclass
class StagePlan:
    stages: list[Stage]


@dataclass
class BoostFit:
    """Result of a boosting run.

    ``coef`` maps every learner id (selected or not) to its accumulated
    coefficient vector; ``learner_columns`` maps ids to the design columns
    they read.  ``selection_path`` records one entry per iteration in
    order, tagged with the stage that produced it.
    """

    offset: float
    coef: dict[str, np.ndarray]
    learner_columns: dict[str, np.ndarray]
    selection_path: list[SelectionStep]
    offset_risk: float
    final_risk: float
    n_columns: int

    @property
    def total_risk_reduction(self) -> float:
        return self.offset_risk - self.final_risk

    @property
    def m_stop(self) -> int:
        return len(self.selection_path)

    def selected_ids(self) -> list[str]:
        """Distinct selected learner ids, in first-selection order."""
        seen: list[str] = []
        for step in self.selection_path:
            if step.learner_id not in seen:
                seen.append(step.learner_id)
        return seen


# ---------------------------------------------------------------------------
# learner selection engine
# ---------------------------------------------------------------------------

class _Engine:
    """Precomputed solves for scoring every learner against a residual.

    The only O(n*p) work per iteration is one matrix-vector product
    ``X^T u`` over the full design; every learner then reads its slice of
    that vector.  Single-column learners are scored in one vectorised
    sweep, multi-column learners through cached Cholesky factors of their
    penalised Gram blocks.
    """

    def __init__(self, x: np.ndarray, learners: list[BaseLearner]):
        self.x = x
        self.learners = learners
        n_col = x.shape[1]
        for lr in learners:
            if lr.columns.min() < 0 or lr.columns.max() >= n_col:
                raise ColumnMismatchError(
                    f"learner {lr.learner_id!r} references columns outside the design")

        single = [(k, lr) for k, lr in enumerate(learners) if lr.columns.size == 1]
        self._s_pos = np.array([k for k, _ in single], dtype=int)
        self._s_col = np.array([lr.columns[0] for _, lr in single], dtype=int)
        if single:
            cols = x[:, self._s_col]
            self._s_a = np.einsum("ij,ij->j", cols, cols)
            self._s_denom = self._s_a + np.array([lr.lambda_ for _, lr in single])
            if np.any(self._s_denom <= 0.0):
                raise NumericalFailureError("single-column learner with zero Gram and no penalty")

        self._multi = []
        for k, lr in enumerate(learners):
            if lr.columns.size == 1:
                continue
            block = x[:, lr.columns]
            gram = block.T @ block
            pen = gram.copy()
            pen[np.diag_indices_from(pen)] += lr.lambda_
            try:
                chol = cho_factor(pen, lower=True)
            except np.linalg.LinAlgError as exc:
                raise NumericalFailureError(
                    f"learner {lr.learner_id!r}: penalised Gram not positive definite ({exc})"
                ) from None
            self._multi.append((k, lr.columns, gram, chol))

    def scores(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, list]:
        """SSE of every learner's ridge fit to ``u``, plus the fitted betas."""
        c_full = self.x.T @ u
        uu = float(u @ u)
        sse = np.empty(len(self.learners))
        s_beta = np.empty(0)
        if self._s_pos.size:
            c = c_full[self._s_col]
            s_beta = c / self._s_denom
            sse[self._s_pos] = uu - s_beta * (2.0 * c - self._s_a * s_beta)
        m_beta = []
        for k, cols, gram, chol in self._multi:
            c = c_full[cols]
            beta = cho_solve(chol, c)
            sse[k] = uu - beta @ (2.0 * c - gram @ beta)
            m_beta.append(beta)
        return sse, s_beta, m_beta

    def best(self, u: np.ndarray) -> tuple[int, np.ndarray]:
        """Winning learner position (ties to the lowest index) and its beta."""
        sse, s_beta, m_beta = self.scores(u)
        k = int(np.argmin(sse))
        where = np.nonzero(self._s_pos == k)[0]
        if where.size:
            return k, np.array([s_beta[where[0]]])
        for j, (pos, _, _, _) in enumerate(self._multi):
            if pos == k:
                return k, m_beta[j]
        raise NumericalFailureError("selection bookkeeping lost the winning learner")


def select_learner(learners: list[BaseLearner], design, u: np.ndarray
                   ) -> tuple[int, LearnerFit]:
    """Index of the learner whose ridge fit to ``u`` has the smallest SSE.

    Ties break towards the lowest learner index.  One-shot counterpart of
    the engine the boosting loop uses.
    """
    if not learners:
        raise ValueError("no learners to select from")
    x = _values(design)
    engine = _Engine(x, learners)
    sse, _, _ = engine.scores(np.asarray(u, dtype=float))
    k = int(np.argmin(sse))
    return k, fit_learner(x, learners[k], u)


# ---------------------------------------------------------------------------
# boosting loops
# ---------------------------------------------------------------------------

def _values(design) -> np.ndarray:
    values = design.values if hasattr(design, "values") else design
    return np.asarray(values, dtype=float)


def _labels(y) -> np.ndarray:
    labels = y.labels if hasattr(y, "labels") else y
    return np.asarray(labels, dtype=float)


@dataclass
class _State:
    """Mutable ensemble state carried through (possibly staged) rounds."""

    f: np.ndarray
    offset: float
    offset_risk: float
    coef: dict[str, np.ndarray] = field(default_factory=dict)
    learner_columns: dict[str, np.ndarray] = field(default_factory=dict)
    path: list[SelectionStep] = field(default_factory=list)


def _init_state(y: np.ndarray, family: LossFamily, config: BoostConfig,
                n_rows: int) -> _State:
    offset = init_offset(family, y, config.offset_mode)
    f = np.full(n_rows, offset, dtype=float)
    return _State(f=f, offset=offset, offset_risk=family.risk(y, f))


def _register(state: _State, learners: list[BaseLearner]) -> None:
    ids = [lr.learner_id for lr in learners]
    if len(set(ids)) != len(ids):
        raise ValueError("learner ids must be unique within a stage")
    for lr in learners:
        known = state.learner_columns.get(lr.learner_id)
        if known is None:
            state.learner_columns[lr.learner_id] = lr.columns
            state.coef[lr.learner_id] = np.zeros(lr.columns.size)
        elif not np.array_equal(known, lr.columns):
            raise ValueError(
                f"learner {lr.learner_id!r} reappears with different columns")


def _run_rounds(x: np.ndarray, y: np.ndarray, family: LossFamily, eta: float,
                m: int, learners: list[BaseLearner], state: _State, stage: int = 0,
                eval_pack: tuple[np.ndarray, np.ndarray, np.ndarray, list[float]] | None = None,
                ) -> None:
    """Advance the ensemble by ``m`` rounds over one learner set.

    ``eval_pack = (x_eval, y_eval, f_eval, risks)`` tracks a held-out risk
    path alongside: ``f_eval`` is updated with every accepted step and the
    held-out risk is appended to ``risks`` once per round.
    """
    if m == 0 or not learners:
        return
    engine = _Engine(x, learners)
    _register(state, learners)
    for _ in range(m):
        u = family.negative_gradient(y, state.f)
        k, beta = engine.best(u)
        lr = learners[k]
        state.coef[lr.learner_id] += eta * beta
        state.f += eta * (x[:, lr.columns] @ beta)
        risk = family.risk(y, state.f)
        state.path.append(SelectionStep(iteration=len(state.path) + 1,
                                        learner_id=lr.learner_id,
                                        risk_after=risk, stage=stage))
        if eval_pack is not None:
            x_ev, y_ev, f_ev, risks = eval_pack
            f_ev += eta * (x_ev[:, lr.columns] @ beta)
            risks.append(family.risk(y_ev, f_ev))


def _package(state: _State, n_columns: int) -> BoostFit:
    final = state.path[-1].risk_after if state.path else state.offset_risk
    return BoostFit(offset=state.offset, coef=state.coef,
                    learner_columns=state.learner_columns,
                    selection_path=state.path, offset_risk=state.offset_risk,
                    final_risk=final, n_columns=n_columns)


def boost(design, y, learners: list[BaseLearner], family: LossFamily = BINOMIAL_LOGIT,
          config: BoostConfig = BoostConfig()) -> BoostFit:
    """Run component-wise boosting with one learner set.

    Parameters
    ----------
    design : DesignMatrix or ndarray
    y : BinaryOutcome or ndarray of 0/1 labels
    learners : list of BaseLearner
        Penalties already calibrated; ids unique.
    family : LossFamily
    config : BoostConfig

    Returns
    -------
    BoostFit
        With ``m_stop`` path entries; the risk sequence is non-increasing
        whenever any learner can still reduce the risk (the argmin step is
        recorded either way).
    """
    x, labels = _values(design), _labels(y)
    if x.shape[0] != labels.shape[0]:
        raise ValueError("design and outcome row counts differ")
    state = _init_state(labels, family, config, x.shape[0])
    _register(state, learners)
    _run_rounds(x, labels, family, config.eta, config.m_stop, learners, state)
    return _package(state, x.shape[1])


def k_step_boost(design, y, plan: StagePlan, family: LossFamily = BINOMIAL_LOGIT,
                 config: BoostConfig = BoostConfig()) -> BoostFit:
    """Run boosting in stages, each stage continuing the previous fit.

    Every stage brings its own learner set and integer budget; the
    ensemble, its risk path and the iteration counter carry over without
    reinitialisation, so stage boundaries leave no seam: equal learner
    sets with budgets summing to M reproduce a single budget-M run
    exactly.  ``config.m_stop`` is ignored; budgets come from the plan.

    String budgets (``"cv"``) must be resolved by the tuning layer first.
    """
    x, labels = _values(design), _labels(y)
    if x.shape[0] != labels.shape[0]:
        raise ValueError("design and outcome row counts differ")
    for k, stage in enumerate(plan.stages):
        if not isinstance(stage.budget, (int, np.integer)) or isinstance(stage.budget, bool):
            raise ValueError(
                f"stage {k}: budget {stage.budget!r} is unresolved; run the tuning layer first")
        if stage.budget < 0:
            raise ValueError(f"stage {k}: negative budget")
    state = _init_state(labels, family, config, x.shape[0])
    for k, stage in enumerate(plan.stages):
        # register even zero-budget stages so coef covers their learners
        _register(state, stage.learners)
        _run_rounds(x, labels, family, config.eta, int(stage.budget),
                    stage.learners, state, stage=k)
    return _package(state, x.shape[1])


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------

def linear_predictor(fit: BoostFit, design) -> np.ndarray:
    """Offset plus every learner's accumulated contribution."""
    x = _values(design)
    if x.shape[1] != fit.n_columns:
        raise ColumnMismatchError(
            f"design has {x.shape[1]} columns, fit was trained on {fit.n_columns}")
    f = np.full(x.shape[0], fit.offset, dtype=float)
    for learner_id, cols in fit.learner_columns.items():
        f += x[:, cols] @ fit.coef[learner_id]
    return f


def predict_proba(fit: BoostFit, design, family: LossFamily = BINOMIAL_LOGIT) -> np.ndarray:
    """Predicted positive-class probabilities on a compatible design."""
    return family.link(linear_predictor(fit, design))
