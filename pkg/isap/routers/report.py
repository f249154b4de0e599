import argparse
import logging
from pathlib import Path
from typing import Optional, Sequence

from isap.core.errors import ArtifactError
from isap.crud import ReportCRUD
from isap.db import get_store
from isap.dependencies import RunContext
from isap.metrics.figures import alpha0_vs_speed, entropy_histogram
from isap.routers.evaluation import report_names
from isap.schemas.experiment import ModelKind
from isap.schemas.report import EvalReport

logger = logging.getLogger(__name__)

MISSING = "--"
CONCEPTS = ("agent", "map", "social")


def fmt(value: Optional[float], digits: int = 3) -> str:
    return MISSING if value is None else f"{value:.{digits}f}"


def paired(report: EvalReport, metric: str) -> str:
    """ID value with the OOD value in parentheses."""
    id_value, ood_value = report.value(metric, "id_value"), report.value(metric, "ood_value")
    if ood_value is None:
        return fmt(id_value)
    return f"{fmt(id_value)} ({fmt(ood_value)})"


def render_table(title: str, header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    lines = [title, "  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(str(c).ljust(w) for c, w in zip(row, widths)) for row in rows]
    return "\n".join(lines) + "\n"


def trajectory_table(reports: list[EvalReport], top_k: list[int]):
    header = ["model", *[f"minADE_{k}" for k in top_k], "FDE"]
    csv_rows = [[r.name, *[r.value(m) for m in header[1:]]] for r in reports]
    text_rows = [[r.name, *[fmt(r.value(m)) for m in header[1:]]] for r in reports]
    return header, csv_rows, text_rows


UNCERTAINTY_METRICS = (
    "conf_auroc_aleatoric", "conf_apr_aleatoric", "conf_auroc_epistemic", "conf_apr_epistemic",
    "ood_auroc_aleatoric", "ood_apr_aleatoric", "ood_auroc_epistemic", "ood_apr_epistemic",
    "alpha0_ratio", "ece", "brier",
)


def uncertainty_table(reports: list[EvalReport]):
    csv_header = ["model"]
    for metric in UNCERTAINTY_METRICS:
        if metric.startswith("ood_") or metric == "alpha0_ratio":
            csv_header.append(metric)
        else:
            csv_header += [f"{metric}_id", f"{metric}_ood"]
    csv_rows = []
    for r in reports:
        row = [r.name]
        for metric in UNCERTAINTY_METRICS:
            row.append(r.value(metric, "id_value"))
            if not (metric.startswith("ood_") or metric == "alpha0_ratio"):
                row.append(r.value(metric, "ood_value"))
        csv_rows.append(row)
    text_header = ["model", *UNCERTAINTY_METRICS]
    text_rows = [[r.name, *[paired(r, m) for m in UNCERTAINTY_METRICS]] for r in reports]
    return csv_header, csv_rows, text_header, text_rows


def split_verification_table(baseline: EvalReport):
    header = ["metric", "id", "ood"]
    metrics = ("minADE_1", "FDE")
    csv_rows = [[m, baseline.value(m, "id_value"), baseline.value(m, "ood_value")] for m in metrics]
    text_rows = [[m, fmt(a), fmt(b)] for m, a, b in csv_rows]
    return header, csv_rows, text_rows


def evidence_table(reports: list[EvalReport]):
    metrics = ["alpha0_mean", *[f"alpha0_{c}" for c in CONCEPTS], "entropy_categorical", "entropy_dirichlet"]
    csv_header = ["model"] + [f"{m}_{col}" for m in metrics for col in ("id", "ood")]
    csv_rows = [
        [r.name] + [r.value(m, f"{col}_value") for m in metrics for col in ("id", "ood")]
        for r in reports
    ]
    text_rows = [[r.name, *[paired(r, m) for m in metrics]] for r in reports]
    return csv_header, csv_rows, ["model", *metrics], text_rows


def load_reports(ctx: RunContext) -> list[EvalReport]:
    available = set(ReportCRUD.list_reports(ctx.store))
    reports = []
    for kind in ctx.config.experiment.models:
        for name in report_names(kind, ctx.config.ensemble.eval_sizes):
            if name not in available:
                raise ArtifactError(detail=f"no evaluation report for {name}; run eval first")
            report = ReportCRUD.load(ctx.store, name)
            if report.provenance.config_hash != ctx.config.config_hash():
                raise ArtifactError(detail=f"report {name} was produced under a different config")
            reports.append(report)
    return reports


def cmd_report(ctx: RunContext, args: argparse.Namespace) -> int:
    """Comparison tables (CSV and aligned text) and SVG figures across all configured models."""
    reports = load_reports(ctx)
    store = ctx.store
    sections = []

    header, csv_rows, text_rows = trajectory_table(reports, ctx.config.evaluation.top_k)
    ReportCRUD.write_table(store, "tables/trajectory.csv", header, csv_rows)
    sections.append(render_table("Trajectory metrics (ID test)", header, text_rows))

    csv_header, csv_rows, text_header, text_rows = uncertainty_table(reports)
    ReportCRUD.write_table(store, "tables/uncertainty.csv", csv_header, csv_rows)
    sections.append(render_table("Uncertainty metrics, ID (OOD)", text_header, text_rows))

    baseline = next((r for r in reports if r.name == ModelKind.COVERNET.value), None)
    if baseline is not None:
        header, csv_rows, text_rows = split_verification_table(baseline)
        ReportCRUD.write_table(store, "tables/split_verification.csv", header, csv_rows)
        sections.append(render_table("Split verification (baseline classifier)", header, text_rows))

    evidential = [r for r in reports if r.value("alpha0_mean") is not None]
    if evidential:
        csv_header, csv_rows, text_header, text_rows = evidence_table(evidential)
        ReportCRUD.write_table(store, "tables/evidence.csv", csv_header, csv_rows)
        sections.append(render_table("Evidence by concept, ID (OOD)", text_header, text_rows))

    summary = store.root / "tables" / "summary.txt"
    summary.write_text("\n".join(sections))
    print(summary.read_text())

    figures = store.root / "figures"
    for report in reports:
        for entropy in sorted({h.entropy for h in report.histograms}):
            entropy_histogram(report.histograms, entropy, figures / f"entropy_{entropy}_{report.name}.svg",
                              f"{report.name}: {entropy} entropy")
        if report.value("alpha0_mean") is not None:
            samples = ReportCRUD.load_samples(store, report.name)
            alpha0_vs_speed(samples, figures / f"alpha0_speed_{report.name}.svg", f"{report.name}: evidence vs speed")
    logger.info(f"Wrote tables and figures under {store.root}")
    return 0


SEED_METRICS = ("ood_auroc_epistemic", "alpha0_ratio")


def seed_table(runs: list[tuple[int, dict[str, EvalReport]]], names: list[str]):
    header = ["seed", *[f"{n}_{m}" for n in names for m in SEED_METRICS]]
    rows = [[seed, *[reports[n].value(m) for n in names for m in SEED_METRICS]] for seed, reports in runs]
    return header, rows


def summarize_seeds(contexts: list[RunContext]) -> int:
    """Epistemic OOD metrics of the evidential models, one row per seed, next to the seed directories."""
    configured = contexts[0].config.experiment.models
    names = [k.value for k in (ModelKind.POSTCOVERNET, ModelKind.ISAP) if k in configured]
    runs = [(ctx.config.experiment.seed, {n: ReportCRUD.load(ctx.store, n) for n in names}) for ctx in contexts]
    root = get_store(Path(contexts[0].config.experiment.output_dir).parent)
    header, rows = seed_table(runs, names)
    path = ReportCRUD.write_table(root, "tables/seeds.csv", header, rows)
    if len(names) == 2:
        wins = sum(
            r[ModelKind.ISAP.value].value("ood_auroc_epistemic") >= r[ModelKind.POSTCOVERNET.value].value("ood_auroc_epistemic")
            for _, r in runs
        )
        logger.info(f"isap epistemic OOD AUROC >= postcovernet in {wins} of {len(runs)} seeds")
    logger.info(f"Wrote seed summary {path}")
    return 0


def register(subparsers, parents):
    parser = subparsers.add_parser("report", parents=parents, help="render comparison tables and figures")
    parser.set_defaults(handler=cmd_report, summarize=summarize_seeds)
