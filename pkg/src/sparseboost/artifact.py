"""Versioned, human-readable model artifacts.

An artifact is a YAML document carrying everything needed to reproduce
predictions and reports from a fit: the run configuration, a fingerprint
of the schema it was trained under, the learner definitions (columns,
penalty, df target) with their accumulated coefficients, the full
selection path and the headline evaluation numbers.  Floats are written
in shortest round-trip form, so save -> load -> predict is bit-identical
to the in-memory fit, and two runs from the same seed write byte-identical
files.

All file writes in the package go through :func:`atomic_write_text`:
content lands in a temporary file in the target directory and is renamed
into place, so a crash never leaves a half-written artifact behind.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np
import yaml

from ._version import __version__
from .boosting import BoostFit, SelectionStep
from .errors import SparseboostError
from .learners import BaseLearner

ARTIFACT_FORMAT = "sparseboost-artifact"
ARTIFACT_VERSION = 1


def atomic_write_text(path: str, text: str) -> None:
    """Write text via a temp file and rename, so readers never see a torn file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class ModelArtifact:
    """A fit plus the context needed to audit and reuse it."""

    fit: BoostFit
    learners: list[BaseLearner]
    config: dict
    schema_fingerprint: str
    stage_budgets: list[int]
    test_auc: float | None = None
    software_version: str = __version__


def _artifact_payload(art: ModelArtifact) -> dict:
    fit = art.fit
    learners_payload = []
    for lr in art.learners:
        learners_payload.append({
            "id": lr.learner_id,
            "kind": lr.kind,
            "columns": [int(c) for c in lr.columns],
            "lambda": float(lr.lambda_),
            "df_target": float(lr.df_target),
            "coef": [float(b) for b in fit.coef[lr.learner_id]],
        })
    path_payload = [
        {"iteration": int(s.iteration), "learner": s.learner_id,
         "risk_after": float(s.risk_after), "stage": int(s.stage)}
        for s in fit.selection_path
    ]
    return {
        "format": ARTIFACT_FORMAT,
        "version": ARTIFACT_VERSION,
        "software_version": art.software_version,
        "schema_fingerprint": art.schema_fingerprint,
        "config": art.config,
        "stage_budgets": [int(b) for b in art.stage_budgets],
        "test_auc": None if art.test_auc is None else float(art.test_auc),
        "fit": {
            "offset": float(fit.offset),
            "offset_risk": float(fit.offset_risk),
            "final_risk": float(fit.final_risk),
            "n_columns": int(fit.n_columns),
            "learners": learners_payload,
            "selection_path": path_payload,
        },
    }


def save_artifact(path: str, art: ModelArtifact) -> None:
    """Serialise an artifact to YAML, atomically."""
    missing = [lr.learner_id for lr in art.learners if lr.learner_id not in art.fit.coef]
    if missing:
        raise SparseboostError(f"artifact learners not present in fit: {missing}")
    text = yaml.safe_dump(_artifact_payload(art), sort_keys=False,
                          default_flow_style=False, width=100000)
    atomic_write_text(path, text)


def load_artifact(path: str) -> ModelArtifact:
    """Read an artifact back into a usable fit.

    The reconstructed fit predicts bit-identically to the one that was
    saved; coefficient and path order are preserved.
    """
    with open(path, "r", encoding="utf-8") as fh:
        payload = yaml.safe_load(fh)
    if not isinstance(payload, dict) or payload.get("format") != ARTIFACT_FORMAT:
        raise SparseboostError(f"{path!r} is not a model artifact")
    if payload.get("version") != ARTIFACT_VERSION:
        raise SparseboostError(
            f"artifact version {payload.get('version')!r} not supported "
            f"(expected {ARTIFACT_VERSION})")

    fit_p = payload["fit"]
    learners: list[BaseLearner] = []
    coef: dict[str, np.ndarray] = {}
    learner_columns: dict[str, np.ndarray] = {}
    for entry in fit_p["learners"]:
        cols = np.array(entry["columns"], dtype=int)
        learners.append(BaseLearner(learner_id=entry["id"], columns=cols,
                                    lambda_=float(entry["lambda"]),
                                    df_target=float(entry["df_target"]),
                                    kind=entry["kind"]))
        coef[entry["id"]] = np.array(entry["coef"], dtype=float)
        learner_columns[entry["id"]] = cols
    path_steps = [
        SelectionStep(iteration=int(s["iteration"]), learner_id=s["learner"],
                      risk_after=float(s["risk_after"]), stage=int(s["stage"]))
        for s in fit_p["selection_path"]
    ]
    fit = BoostFit(offset=float(fit_p["offset"]), coef=coef,
                   learner_columns=learner_columns, selection_path=path_steps,
                   offset_risk=float(fit_p["offset_risk"]),
                   final_risk=float(fit_p["final_risk"]),
                   n_columns=int(fit_p["n_columns"]))
    return ModelArtifact(fit=fit, learners=learners, config=payload["config"],
                         schema_fingerprint=payload["schema_fingerprint"],
                         stage_budgets=[int(b) for b in payload["stage_budgets"]],
                         test_auc=payload.get("test_auc"),
                         software_version=payload.get("software_version", ""))
