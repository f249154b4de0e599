import csv
import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from pydantic import BaseModel, ValidationError

from isap.core.errors import ArtifactError
from isap.db.container import ArtifactStore
from isap.schemas.report import EvalReport, HistogramRow, MetricRow, SampleRow

logger = logging.getLogger(__name__)

REPORT_DIR = "reports"


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


def write_models(path: Path, rows: Sequence[BaseModel], model: type[BaseModel]):
    header = list(model.model_fields)
    write_csv(path, header, ([getattr(r, name) for name in header] for r in rows))


def read_models(path: Path, model: type[BaseModel]) -> list:
    if not path.exists():
        raise ArtifactError(detail=f"missing report table {path}")
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        try:
            return [model.model_validate({k: (v if v != "" else None) for k, v in row.items()}) for row in reader]
        except ValidationError as e:
            raise ArtifactError(detail=f"corrupt report table {path}: {e}")


class ReportCRUD:
    @staticmethod
    def directory(store: ArtifactStore) -> Path:
        return store.root / REPORT_DIR

    @staticmethod
    def persist(store: ArtifactStore, report: EvalReport, samples: Optional[list[SampleRow]] = None) -> Path:
        """Metric table, histogram table, per-sample table and the JSON report with its provenance."""
        root = ReportCRUD.directory(store)
        write_models(root / f"{report.name}.csv", report.rows, MetricRow)
        write_models(root / f"{report.name}_histograms.csv", report.histograms, HistogramRow)
        if samples is not None:
            write_models(root / f"{report.name}_samples.csv", samples, SampleRow)
        path = root / f"{report.name}.json"
        path.write_text(report.model_dump_json(indent=2))
        logger.info(f"Wrote evaluation report {path}")
        return path

    @staticmethod
    def exists(store: ArtifactStore, name: str) -> bool:
        return (ReportCRUD.directory(store) / f"{name}.json").exists()

    @staticmethod
    def load(store: ArtifactStore, name: str) -> EvalReport:
        path = ReportCRUD.directory(store) / f"{name}.json"
        if not path.exists():
            raise ArtifactError(detail=f"missing evaluation report {path}")
        try:
            return EvalReport.model_validate(json.loads(path.read_text()))
        except (json.JSONDecodeError, ValidationError) as e:
            raise ArtifactError(detail=f"corrupt evaluation report {path}: {e}")

    @staticmethod
    def load_samples(store: ArtifactStore, name: str) -> list[SampleRow]:
        return read_models(ReportCRUD.directory(store) / f"{name}_samples.csv", SampleRow)

    @staticmethod
    def list_reports(store: ArtifactStore) -> list[str]:
        root = ReportCRUD.directory(store)
        return sorted(p.stem for p in root.glob("*.json")) if root.exists() else []

    @staticmethod
    def write_table(store: ArtifactStore, relative: Union[str, Path], header: Sequence[str],
                    rows: Iterable[Sequence]) -> Path:
        path = store.root / relative
        write_csv(path, header, rows)
        return path
