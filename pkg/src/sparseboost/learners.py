"""Ridge base-learners calibrated to a target effective degrees of freedom.

A base-learner is a ridge regression on a block of design columns.  Its
flexibility is pinned down not by the penalty weight directly but by the
effective degrees of freedom of the ridge smoother

    df(lambda) = trace(2*S - S^T S),    S = X (X^T X + lambda I)^{-1} X^T,

which for the eigenvalues d_i of X^T X collapses to

    df(lambda) = sum_i  2*d_i/(d_i + lambda) - (d_i/(d_i + lambda))^2.

The eigenvalue form is what is implemented: the n x n smoother matrix is
never materialised.  df is continuous and strictly decreasing in lambda on
blocks with at least one positive eigenvalue, df(0) equals the block rank,
and df -> 0 as lambda -> inf, so a monotone bisection can invert it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailureError, UnattainableDfError

# relative eigenvalue cutoff below which a direction counts as null space
_EIG_RTOL = np.finfo(float).eps

# bisection bracket in log10(lambda) relative to the largest eigenvalue
_LOG_BRACKET = 12.0
_MAX_BISECT = 200
_DF_TOL = 1e-10


@dataclass
class BaseLearner:
    """One ridge base-learner over a block of design columns.

    ``columns`` index into the design matrix the learner was built for.
    ``lambda_`` is the calibrated penalty and ``df_target`` the effective
    degrees of freedom it realises.  ``kind`` tags the learner's role:
    ``"individual"``, ``"group"`` or ``"interaction"``.
    """

    learner_id: str
    columns: np.ndarray
    lambda_: float
    df_target: float
    kind: str = "individual"

    def __post_init__(self) -> None:
        self.columns = np.asarray(self.columns, dtype=int)
        if self.columns.ndim != 1 or self.columns.size == 0:
            raise ValueError(f"learner {self.learner_id!r}: needs a 1-d, non-empty column index")
        if self.lambda_ < 0:
            raise ValueError(f"learner {self.learner_id!r}: negative penalty")


@dataclass
class LearnerFit:
    """Ridge solution for one learner against one target vector."""

    beta: np.ndarray
    sse: float


def _design_values(design) -> np.ndarray:
    values = design.values if hasattr(design, "values") else design
    return np.asarray(values, dtype=float)


def _gram_eigenvalues(design, columns) -> np.ndarray:
    x = _design_values(design)[:, np.asarray(columns, dtype=int)]
    gram = x.T @ x
    return np.linalg.eigvalsh(gram)


def _positive(d: np.ndarray) -> np.ndarray:
    # eigenvalues at or below noise level are null-space directions
    if d.size == 0:
        return d
    cutoff = d.max() * d.size * _EIG_RTOL
    return d[d > max(cutoff, 0.0)]


def _df_from_eigenvalues(d_pos: np.ndarray, lam: float) -> float:
    if d_pos.size == 0:
        return 0.0
    s = d_pos / (d_pos + lam)
    return float(np.sum(2.0 * s - s * s))


def effective_df(design, columns, lam: float) -> float:
    """Effective degrees of freedom of the ridge smoother on a column block.

    At ``lam=0`` this is exactly the rank of the block (each positive
    eigenvalue contributes 2*1 - 1 = 1); it decreases strictly towards 0 as
    ``lam`` grows.
    """
    if lam < 0:
        raise ValueError("penalty must be non-negative")
    d_pos = _positive(_gram_eigenvalues(design, columns))
    return _df_from_eigenvalues(d_pos, lam)


def block_rank(design, columns) -> int:
    """Rank of a design column block, via Gram eigenvalues."""
    return int(_positive(_gram_eigenvalues(design, columns)).size)


def calibrate_lambda(design, columns, df_target: float) -> float:
    """Penalty weight whose effective df matches ``df_target``.

    Monotone bisection on log10(lambda) over ``[-12, 12]`` relative to the
    largest Gram eigenvalue, to an absolute df tolerance well inside 1e-8.

    Raises
    ------
    UnattainableDfError
        If ``df_target`` exceeds the rank of the block (df(0) is the rank,
        and df only shrinks from there).
    NumericalFailureError
        If bisection cannot reach the tolerance (does not occur for
        well-posed blocks; kept as a hard stop rather than a silent miss).
    """
    if df_target <= 0:
        raise ValueError("df_target must be positive; zero-df learners are omitted upstream")
    d = _gram_eigenvalues(design, columns)
    d_pos = _positive(d)
    rank = d_pos.size
    if rank == 0:
        raise UnattainableDfError("column block is all zeros; no df is attainable")
    if df_target > rank:
        raise UnattainableDfError(
            f"df_target {df_target} exceeds block rank {rank}")
    if df_target == rank and rank == len(np.atleast_1d(np.asarray(columns))):
        return 0.0

    d_max = float(d_pos.max())
    lo, hi = -_LOG_BRACKET, _LOG_BRACKET

    df_lo = _df_from_eigenvalues(d_pos, d_max * 10.0 ** lo)
    if abs(df_lo - df_target) <= _DF_TOL:
        return d_max * 10.0 ** lo
    df_hi = _df_from_eigenvalues(d_pos, d_max * 10.0 ** hi)
    if df_target <= df_hi:
        # target below anything in the bracket; the boundary is still within
        # the advertised tolerance because df_hi < 1e-10 * rank
        return d_max * 10.0 ** hi

    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        lam = d_max * 10.0 ** mid
        df_mid = _df_from_eigenvalues(d_pos, lam)
        if abs(df_mid - df_target) <= _DF_TOL:
            return lam
        if df_mid > df_target:
            lo = mid  # need more penalty
        else:
            hi = mid
    lam = d_max * 10.0 ** (0.5 * (lo + hi))
    if abs(_df_from_eigenvalues(d_pos, lam) - df_target) <= 1e-8:
        return lam
    raise NumericalFailureError(
        f"df calibration did not converge for target {df_target}")


def make_learner(design, learner_id: str, columns, df_target: float,
                 kind: str = "individual") -> BaseLearner:
    """Construct a learner with its penalty calibrated on this design."""
    lam = calibrate_lambda(design, columns, df_target)
    return BaseLearner(learner_id=learner_id, columns=np.asarray(columns, dtype=int),
                       lambda_=lam, df_target=df_target, kind=kind)


def fit_learner(design, learner: BaseLearner, target: np.ndarray) -> LearnerFit:
    """Ridge fit of one learner to a target vector.

    Solves ``(X^T X + lambda I) beta = X^T u`` for the learner's column
    block and reports the residual sum of squares.  A singular solve can
    only happen at ``lambda = 0`` on a rank-deficient block and is flagged
    rather than silently regularised.
    """
    x = _design_values(design)[:, learner.columns]
    target = np.asarray(target, dtype=float)
    gram = x.T @ x
    gram[np.diag_indices_from(gram)] += learner.lambda_
    try:
        beta = np.linalg.solve(gram, x.T @ target)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(
            f"learner {learner.learner_id!r}: normal equations are singular ({exc})") from None
    resid = target - x @ beta
    return LearnerFit(beta=beta, sse=float(resid @ resid))
