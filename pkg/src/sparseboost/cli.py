"""Command-line interface: fit, report, probe, synth and cv-curve.

Every run is reproducible from its manifest: one integer seed drives the
train/test split and the cross-validation folds (through independent
spawned streams), all outputs are written atomically, and floats are
serialised in shortest round-trip form, so re-running a command with the
same inputs yields byte-identical files.

Exit codes: 0 on success, 1 for user, configuration or data errors, 2 for
numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass

import numpy as np
import pandas as pd
import yaml

from .artifact import (
    ARTIFACT_FORMAT,
    ARTIFACT_VERSION,
    ModelArtifact,
    atomic_write_text,
    load_artifact,
    save_artifact,
)
from .boosting import BINOMIAL_LOGIT, BoostConfig, BoostFit, Stage, StagePlan, predict_proba
from .errors import FingerprintMismatchError, NumericalFailureError, SparseboostError
from .evaluation import CvResult, SplitSpec, fit_stage_plan_cv, roc_auc, split
from .factory import SgbSpec, build_group, build_interaction_learners, build_mb, build_sgb
from .interpret import importance, interaction_probe, partial_effects
from .interpret import odds_ratios as compute_odds_ratios
from .schema import (
    DatasetSchema,
    DesignMatrix,
    augment_with_interactions,
    encode,
    expand_interactions,
    load_schema,
    save_schema,
    schema_fingerprint,
)
from .synth import SynthSpec, bernoulli_schema, generate

MODELS = ("mb", "group", "sgb", "mb-int", "2-boost")


class UsageError(SparseboostError):
    """Bad command line or configuration; exits with code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures through our exit codes
        raise UsageError(message)


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Everything a fit run depends on; stored verbatim in the artifact."""

    model: str
    data: str
    schema: str
    alpha: float = 0.5
    eta: float = 0.1
    m_max: int = 1000
    cv_folds: int = 10
    train_fraction: float = 0.7
    seed: int = 0
    offset_mode: str = "mean-link"

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise UsageError(f"unknown model {self.model!r}; pick one of {MODELS}")
        if not (0.0 <= self.alpha <= 1.0):
            raise UsageError("alpha must lie in [0, 1]")
        if not (0.0 < self.eta < 1.0):
            raise UsageError("eta must lie strictly between 0 and 1")
        if self.m_max < 0:
            raise UsageError("m-max must be >= 0")
        if self.cv_folds < 2:
            raise UsageError("cv-folds must be >= 2")
        if not (0.0 < self.train_fraction < 1.0):
            raise UsageError("train-fraction must lie strictly between 0 and 1")

    def to_dict(self) -> dict:
        return {
            "model": self.model, "data": self.data, "schema": self.schema,
            "alpha": float(self.alpha), "eta": float(self.eta),
            "m_max": int(self.m_max), "cv_folds": int(self.cv_folds),
            "train_fraction": float(self.train_fraction), "seed": int(self.seed),
            "offset_mode": self.offset_mode,
        }

    @staticmethod
    def from_dict(payload: dict) -> "RunConfig":
        return RunConfig(model=payload["model"], data=payload["data"],
                         schema=payload["schema"], alpha=float(payload["alpha"]),
                         eta=float(payload["eta"]), m_max=int(payload["m_max"]),
                         cv_folds=int(payload["cv_folds"]),
                         train_fraction=float(payload["train_fraction"]),
                         seed=int(payload["seed"]),
                         offset_mode=payload["offset_mode"])


def derive_seeds(seed: int, n: int = 2) -> list[int]:
    """Independent child seeds spawned from one master seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1)[0]) for c in children]


def _resolve_alpha(args) -> float:
    # alpha is an sgb dial; rejecting it elsewhere beats silently ignoring it
    if args.alpha is not None and args.model != "sgb":
        raise UsageError("--alpha applies only to model=sgb")
    return 0.5 if args.alpha is None else args.alpha


# ---------------------------------------------------------------------------
# shared fit pipeline
# ---------------------------------------------------------------------------

@dataclass
class _Prepared:
    schema: DatasetSchema
    raw: pd.DataFrame
    model_design: DesignMatrix
    outcome_labels: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    train_design: DesignMatrix
    stages: list[Stage]


def _rows(design: DesignMatrix, idx: np.ndarray) -> DesignMatrix:
    return DesignMatrix(values=design.values[idx], column_meta=design.column_meta)


def _prepare(config: RunConfig) -> _Prepared:
    schema = load_schema(config.schema)
    raw = pd.read_csv(config.data)
    design, outcome = encode(schema, raw)

    if config.model in ("mb-int", "2-boost"):
        terms = expand_interactions(schema, design)
        model_design = augment_with_interactions(design, terms)
    else:
        terms = []
        model_design = design

    split_seed, _ = derive_seeds(config.seed)
    train_idx, test_idx = split(outcome, SplitSpec(config.train_fraction,
                                                   seed=split_seed))
    train_design = _rows(model_design, train_idx)

    # learner penalties are calibrated on the training rows
    if config.model == "mb":
        stages = [Stage(build_mb(train_design, schema), "cv")]
    elif config.model == "group":
        stages = [Stage(build_group(train_design, schema), "cv")]
    elif config.model == "sgb":
        stages = [Stage(build_sgb(train_design, schema, SgbSpec(config.alpha)), "cv")]
    elif config.model == "mb-int":
        mains = build_mb(train_design, schema)
        inters = build_interaction_learners(train_design, terms)
        stages = [Stage(mains + inters, "cv")]
    else:  # 2-boost
        mains = build_mb(train_design, schema)
        inters = build_interaction_learners(train_design, terms)
        stages = [Stage(mains, "cv"), Stage(inters, "cv")]

    return _Prepared(schema=schema, raw=raw, model_design=model_design,
                     outcome_labels=outcome.labels, train_idx=train_idx,
                     test_idx=test_idx, train_design=train_design, stages=stages)


def _stage_learners(stages: list[Stage]):
    out = []
    for stage in stages:
        out.extend(stage.learners)
    return out


# ---------------------------------------------------------------------------
# report writers
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def _write_reports(outdir: str, fit: BoostFit, design: DesignMatrix,
                   train_design: DesignMatrix, schema: DatasetSchema,
                   roc_curve, test_labels: np.ndarray) -> list[str]:
    """The CSV reports shared by ``fit`` and ``report``."""
    written = []

    table = importance(fit)
    _write_csv(os.path.join(outdir, "importance.csv"),
               ["learner", "absolute_risk_reduction", "relative_importance"],
               [[r.learner_id, _fmt(r.absolute), _fmt(r.relative)] for r in table.rows])
    written.append("importance.csv")

    _write_csv(os.path.join(outdir, "selection_path.csv"),
               ["iteration", "stage", "learner", "risk_after"],
               [[str(s.iteration), str(s.stage), s.learner_id, _fmt(s.risk_after)]
                for s in fit.selection_path])
    written.append("selection_path.csv")

    ors = compute_odds_ratios(fit, design)
    _write_csv(os.path.join(outdir, "odds_ratios.csv"),
               ["learner", "column", "odds_ratio"],
               [[lid, col, _fmt(v)] for (lid, col), v in ors.items()])
    written.append("odds_ratios.csv")

    pe_rows = []
    selected = set(r.learner_id for r in table.rows)
    for learner_id, cols in fit.learner_columns.items():
        if learner_id not in selected:
            continue
        metas = [design.column_meta[c] for c in cols]
        sources = {m.source for m in metas}
        if len(sources) != 1:
            continue  # group learners span variables; no category grid to tabulate
        grid = None
        if any(not m.categories for m in metas):
            # continuous block: five-number summary of the raw values
            raw_col = train_design.values[:, cols[0]] + metas[0].center
            qs = np.quantile(raw_col, [0.0, 0.25, 0.5, 0.75, 1.0])
            grid = [(_fmt(q),) for q in dict.fromkeys(qs)]
        effects = partial_effects(fit, train_design, learner_id, grid=grid,
                                  schema=schema)
        for row in effects.rows:
            pe_rows.append([learner_id, "|".join(str(lv) for lv in row.levels),
                            _fmt(row.linear), _fmt(row.probability)])
    _write_csv(os.path.join(outdir, "partial_effects.csv"),
               ["learner", "levels", "linear_predictor", "probability"], pe_rows)
    written.append("partial_effects.csv")

    buf = io.StringIO()
    buf.write(f"# auc = {_fmt(roc_curve.auc)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fpr", "tpr"])
    writer.writerows([[_fmt(p[0]), _fmt(p[1])] for p in roc_curve.points])
    atomic_write_text(os.path.join(outdir, "roc.csv"), buf.getvalue())
    written.append("roc.csv")
    return written


def _write_cv_curve(outdir: str, cv_results: list[CvResult | None]) -> str:
    rows = []
    folds = 0
    for stage_idx, res in enumerate(cv_results):
        if res is None:
            continue
        folds = res.risk_matrix.shape[0]
        for m in range(res.mean_risk.shape[0]):
            rows.append([str(stage_idx), str(m), _fmt(res.mean_risk[m])]
                        + [_fmt(res.risk_matrix[k, m]) for k in range(folds)])
    header = ["stage", "m", "mean_risk"] + [f"fold_{k}" for k in range(folds)]
    _write_csv(os.path.join(outdir, "cv_curve.csv"), header, rows)
    return "cv_curve.csv"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_fit(args) -> int:
    config = RunConfig(model=args.model, data=args.data, schema=args.schema,
                       alpha=_resolve_alpha(args), eta=args.eta, m_max=args.m_max,
                       cv_folds=args.cv_folds, train_fraction=args.train_fraction,
                       seed=args.seed, offset_mode=args.offset_mode)
    prep = _prepare(config)
    _, cv_seed = derive_seeds(config.seed)

    fit, cv_results, budgets = fit_stage_plan_cv(
        prep.train_design, prep.outcome_labels[prep.train_idx],
        StagePlan(prep.stages), BINOMIAL_LOGIT,
        BoostConfig(eta=config.eta, m_stop=config.m_max,
                    offset_mode=config.offset_mode),
        folds=config.cv_folds, m_max=config.m_max, seed=cv_seed)

    test_design = _rows(prep.model_design, prep.test_idx)
    test_labels = prep.outcome_labels[prep.test_idx]
    probs = predict_proba(fit, test_design)
    curve = roc_auc(probs, test_labels)

    os.makedirs(args.out, exist_ok=True)
    art = ModelArtifact(fit=fit, learners=_stage_learners(prep.stages),
                        config=config.to_dict(),
                        schema_fingerprint=schema_fingerprint(prep.schema),
                        stage_budgets=budgets, test_auc=curve.auc)
    save_artifact(os.path.join(args.out, "artifact.yaml"), art)
    outputs = ["artifact.yaml"]
    outputs.extend(_write_reports(args.out, fit, prep.model_design,
                                  prep.train_design, prep.schema, curve, test_labels))
    outputs.append(_write_cv_curve(args.out, cv_results))

    manifest = {
        "format": ARTIFACT_FORMAT, "version": ARTIFACT_VERSION,
        "config": config.to_dict(),
        "schema_fingerprint": art.schema_fingerprint,
        "stage_budgets": [int(b) for b in budgets],
        "n_train": int(prep.train_idx.size), "n_test": int(prep.test_idx.size),
        "test_auc": float(curve.auc),
        "outputs": sorted(outputs + ["manifest.yaml"]),
    }
    atomic_write_text(os.path.join(args.out, "manifest.yaml"),
                      yaml.safe_dump(manifest, sort_keys=False))

    budget_txt = ",".join(str(b) for b in budgets)
    print(f"fit: model={config.model} m_stop=[{budget_txt}] "
          f"test_auc={curve.auc:.4f} -> {args.out}")
    return 0


def cmd_report(args) -> int:
    art = load_artifact(args.artifact)
    config = RunConfig.from_dict(art.config)
    schema = load_schema(args.schema)
    if schema_fingerprint(schema) != art.schema_fingerprint:
        raise FingerprintMismatchError(
            "the schema does not match the one the artifact was trained under")

    # rebuild the designs and the split exactly as the fit run saw them
    config = RunConfig(**{**config.to_dict(), "data": args.data,
                          "schema": args.schema})
    prep = _prepare(config)
    test_design = _rows(prep.model_design, prep.test_idx)
    test_labels = prep.outcome_labels[prep.test_idx]
    probs = predict_proba(art.fit, test_design)
    curve = roc_auc(probs, test_labels)

    os.makedirs(args.out, exist_ok=True)
    _write_reports(args.out, art.fit, prep.model_design, prep.train_design,
                   prep.schema, curve, test_labels)
    print(f"report: model={config.model} test_auc={curve.auc:.4f} -> {args.out}")
    return 0


def cmd_probe(args) -> int:
    schema = load_schema(args.schema)
    raw = pd.read_csv(args.data)

    if args.terms:
        pairs = []
        for token in args.terms.split(","):
            if "*" not in token:
                raise UsageError(f"term {token!r} is not of the form moderator*partner")
            a, b = token.split("*", 1)
            pairs.append((a.strip(), b.strip()))
    else:
        design, _ = encode(schema, raw)
        pairs = [(t.moderator, t.partner) for t in expand_interactions(schema, design)]

    rows = []
    for mod, part in pairs:
        result = interaction_probe(raw, schema, (mod, part),
                                   strata_column=args.strata,
                                   include_main_effects=not args.no_main_effects)
        for stratum in result.strata:
            for cell, count in stratum.cell_counts.items():
                prob = stratum.cell_probs.get(cell)
                rows.append([result.term_id, stratum.stratum, str(stratum.n),
                             "yes" if stratum.converged else "no",
                             stratum.flag_reason, cell[0], cell[1], str(count),
                             "" if prob is None else _fmt(prob)])
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    _write_csv(args.out,
               ["term", "stratum", "n", "converged", "flag",
                "moderator_category", "partner_category", "count", "probability"],
               rows)
    print(f"probe: {len(pairs)} term(s) -> {args.out}")
    return 0


def _parse_coef_list(text: str, what: str) -> dict[str, float]:
    out: dict[str, float] = {}
    if not text:
        return out
    for token in text.split(","):
        if "=" not in token:
            raise UsageError(f"{what} entry {token!r} is not name=value")
        name, value = token.split("=", 1)
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"{what} entry {token!r}: bad number") from None
    return out


def cmd_synth(args) -> int:
    schema = bernoulli_schema(args.p_vars, n_groups=args.n_groups,
                              n_moderators=args.moderators)
    beta_int: dict[tuple[str, str], float] = {}
    for name, value in _parse_coef_list(args.beta_int, "beta-int").items():
        if ":" not in name:
            raise UsageError(f"beta-int name {name!r} is not a:b")
        a, b = name.split(":", 1)
        beta_int[(a, b)] = value
    spec = SynthSpec(n=args.n, schema=schema,
                     beta_main=_parse_coef_list(args.beta_main, "beta-main"),
                     beta_interaction=beta_int,
                     beta_group_latent=_parse_coef_list(args.beta_latent, "beta-latent"),
                     intercept=args.intercept, marginal=args.marginal,
                     group_correlation=args.corr, seed=args.seed)
    frame, truth = generate(spec)
    os.makedirs(os.path.dirname(os.path.abspath(args.out_data)), exist_ok=True)
    buf = io.StringIO()
    frame.to_csv(buf, index=False, lineterminator="\n")
    atomic_write_text(args.out_data, buf.getvalue())
    save_schema(schema, args.out_schema)
    rate = ("n/a" if truth.expected_positive_rate is None
            else f"{truth.expected_positive_rate:.4f}")
    print(f"synth: n={args.n} p={args.p_vars} expected_rate={rate} "
          f"-> {args.out_data}, {args.out_schema}")
    return 0


def cmd_cv_curve(args) -> int:
    config = RunConfig(model=args.model, data=args.data, schema=args.schema,
                       alpha=_resolve_alpha(args), eta=args.eta, m_max=args.m_max,
                       cv_folds=args.cv_folds, train_fraction=args.train_fraction,
                       seed=args.seed, offset_mode=args.offset_mode)
    prep = _prepare(config)
    _, cv_seed = derive_seeds(config.seed)
    _, cv_results, budgets = fit_stage_plan_cv(
        prep.train_design, prep.outcome_labels[prep.train_idx],
        StagePlan(prep.stages), BINOMIAL_LOGIT,
        BoostConfig(eta=config.eta, m_stop=config.m_max,
                    offset_mode=config.offset_mode),
        folds=config.cv_folds, m_max=config.m_max, seed=cv_seed)
    os.makedirs(args.out, exist_ok=True)
    _write_cv_curve(args.out, cv_results)
    budget_txt = ",".join(str(b) for b in budgets)
    print(f"cv-curve: model={config.model} m_star=[{budget_txt}] -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_fit_options(p: _Parser) -> None:
    p.add_argument("--data", required=True, help="CSV with a header row")
    p.add_argument("--schema", required=True, help="schema YAML")
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--alpha", type=float, default=None,
                   help="sgb mixing parameter in [0, 1] (default 0.5; sgb only)")
    p.add_argument("--eta", type=float, default=0.1, help="step length (default 0.1)")
    p.add_argument("--m-max", type=int, default=1000, dest="m_max",
                   help="largest iteration count scanned by CV (default 1000)")
    p.add_argument("--cv-folds", type=int, default=10, dest="cv_folds")
    p.add_argument("--train-fraction", type=float, default=0.7, dest="train_fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--offset-mode", choices=("mean-link", "zero"),
                   default="mean-link", dest="offset_mode")


def build_parser() -> _Parser:
    parser = _Parser(prog="sparseboost",
                     description="Interpretable boosting for binary outcomes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[], help="split, tune, fit and evaluate")
    _add_fit_options(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="regenerate reports from an artifact")
    p.add_argument("--artifact", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("probe", help="raw-data logistic probe of interactions")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--terms", default="",
                   help="comma-separated moderator*partner pairs (default: all)")
    p.add_argument("--strata", default=None, help="stratify by this raw column")
    p.add_argument("--no-main-effects", action="store_true", dest="no_main_effects")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("synth", help="generate a synthetic dataset + schema")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p-vars", type=int, required=True, dest="p_vars")
    p.add_argument("--n-groups", type=int, default=1, dest="n_groups")
    p.add_argument("--moderators", type=int, default=0)
    p.add_argument("--beta-main", default="", dest="beta_main",
                   help="e.g. x1=2.0,x2=-1.0")
    p.add_argument("--beta-int", default="", dest="beta_int",
                   help="e.g. x1:x2=2.5")
    p.add_argument("--beta-latent", default="", dest="beta_latent",
                   help="group-latent coefficients, e.g. g1=1.5")
    p.add_argument("--intercept", type=float, default=0.0)
    p.add_argument("--marginal", type=float, default=0.5)
    p.add_argument("--corr", type=float, default=0.0,
                   help="within-group shared-latent-flip probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-data", required=True, dest="out_data")
    p.add_argument("--out-schema", required=True, dest="out_schema")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cv-curve", help="write the CV risk grid without fitting reports")
    _add_fit_options(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_cv_curve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SparseboostError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
