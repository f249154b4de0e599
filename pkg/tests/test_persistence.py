import json

import numpy as np
import pytest
from pydantic import ValidationError

from isap.anchors import AnchorSet
from isap.core.errors import ArtifactError
from isap.crud import AnchorCRUD, DatasetCRUD, ReportCRUD
from isap.db import ArtifactStore
from isap.scenegen import Split, generate_scene
from isap.schemas.artifacts import ArtifactKind, LayoutField, Manifest, PayloadDtype
from isap.schemas.report import EvalReport, HistogramRow, MetricRow, Provenance, SampleRow


def _manifest(count: int, width: int, dtype=PayloadDtype.FLOAT64) -> Manifest:
    return Manifest(
        kind=ArtifactKind.CHECKPOINT,
        dtype=dtype,
        layout=[LayoutField(name="values", offset=0, length=width)],
        record_width=width,
        count=count,
        config_hash="0" * 64,
    )


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(tmp_path)


def test_store_round_trip(store, rng):
    payload = rng.normal(0.0, 1.0, (3, 5))
    written = store.write("blob", _manifest(3, 5), payload)
    assert written.payload_bytes == 3 * 5 * 8
    manifest, rows = store.read("blob")
    assert manifest == written
    assert np.array_equal(rows, payload)


def test_float32_payload_is_rounded(store):
    store.write("blob", _manifest(1, 1, PayloadDtype.FLOAT32), np.array([[0.1]]))
    _, rows = store.read("blob")
    assert rows[0, 0] == float(np.float32(0.1))


def test_tampered_payload_rejected(store, rng):
    store.write("blob", _manifest(2, 4), rng.normal(0.0, 1.0, (2, 4)))
    _, payload_path = store.paths("blob")
    data = bytearray(payload_path.read_bytes())
    data[3] ^= 0xFF
    payload_path.write_bytes(bytes(data))
    with pytest.raises(ArtifactError):
        store.read("blob")


def test_truncated_payload_rejected(store, rng):
    store.write("blob", _manifest(2, 4), rng.normal(0.0, 1.0, (2, 4)))
    _, payload_path = store.paths("blob")
    payload_path.write_bytes(payload_path.read_bytes()[:-8])
    with pytest.raises(ArtifactError):
        store.read("blob")


def test_missing_and_corrupt_manifests(store, rng):
    with pytest.raises(ArtifactError):
        store.read("absent")
    store.write("blob", _manifest(1, 2), np.zeros((1, 2)))
    manifest_path, payload_path = store.paths("blob")
    payload_path.unlink()
    with pytest.raises(ArtifactError):
        store.read("blob")
    manifest_path.write_text("{not json")
    with pytest.raises(ArtifactError):
        store.read_manifest("blob")
    manifest_path.write_text(json.dumps({"kind": "dataset"}))
    with pytest.raises(ArtifactError):
        store.read_manifest("blob")


def test_layout_must_be_contiguous():
    with pytest.raises(ValidationError):
        Manifest(
            kind=ArtifactKind.DATASET,
            dtype=PayloadDtype.FLOAT32,
            layout=[LayoutField(name="a", offset=0, length=2), LayoutField(name="b", offset=3, length=1)],
            record_width=4,
            count=0,
            config_hash="",
        )


def test_empty_dataset_round_trip(store, tiny_config):
    manifest = DatasetCRUD.persist(store, [], tiny_config)
    assert manifest.count == 0 and manifest.payload_bytes == 0
    loaded, scenes = DatasetCRUD.load(store)
    assert scenes == []
    assert loaded.config_hash == tiny_config.config_hash()


def test_dataset_round_trip(store, tiny_config):
    scenes = []
    for i, split in enumerate(Split):
        scene = generate_scene(100 + i, tiny_config.generator)
        scene.split = split
        scenes.append(scene)
    manifest = DatasetCRUD.persist(store, scenes, tiny_config)
    assert manifest.counts == {split.value: 1 for split in sorted(Split, key=lambda s: s.value)}
    assert manifest.dtype == PayloadDtype.FLOAT32
    _, loaded = DatasetCRUD.load(store)
    assert loaded == scenes


def test_dataset_load_checks_kind(store, tiny_config):
    anchors = AnchorSet(anchors=np.zeros((2, 12, 2)), seed=0)
    dataset = DatasetCRUD.persist(store, [], tiny_config)
    AnchorCRUD.persist(store, anchors, np.array([1, 1]), tiny_config, dataset)
    for target, source in zip(store.paths(DatasetCRUD.NAME), store.paths(AnchorCRUD.NAME)):
        target.write_bytes(source.read_bytes())
    with pytest.raises(ArtifactError):
        DatasetCRUD.load(store)


def test_anchor_round_trip(store, tiny_config, rng):
    dataset = DatasetCRUD.persist(store, [], tiny_config)
    anchors = AnchorSet(
        anchors=rng.normal(0.0, 5.0, (4, 12, 2)).astype(np.float32).astype(np.float64),
        seed=42,
        provenance={"iterations": 7, "refits": 0},
    )
    manifest = AnchorCRUD.persist(store, anchors, np.array([5, 0, 2, 1]), tiny_config, dataset)
    assert manifest.inputs == {"dataset": dataset.payload_sha256}
    _, loaded, counts = AnchorCRUD.load(store)
    assert np.array_equal(loaded.anchors, anchors.anchors)
    assert loaded.seed == 42 and loaded.provenance == {"iterations": 7, "refits": 0}
    assert counts.tolist() == [5, 0, 2, 1]


def _report() -> EvalReport:
    return EvalReport(
        name="isap",
        experiment="speed",
        rows=[
            MetricRow(name="minADE_1", id_value=1.25, ood_value=3.5),
            MetricRow(name="ood_auroc_epistemic", id_value=0.8125),
            MetricRow(name="conf_auroc_epistemic"),
        ],
        histograms=[HistogramRow(entropy="categorical", bin_low=0.0, bin_high=0.5, id_count=3, ood_count=1)],
        provenance=Provenance(config_hash="c", dataset_hash="d", anchor_hash="a", checkpoint_hash="k"),
    )


def test_report_round_trip(store):
    samples = [
        SampleRow(split="test_id", seed=2**63 + 1, speed=4.5, true_anchor=2, predicted_anchor=2, max_prob=0.75,
                  alpha0=120.0, entropy_categorical=0.5, entropy_dirichlet=-3.25),
        SampleRow(split="test_ood", seed=9, speed=14.0, true_anchor=1, predicted_anchor=0, max_prob=0.5,
                  entropy_categorical=0.75),
    ]
    ReportCRUD.persist(store, _report(), samples)
    assert ReportCRUD.exists(store, "isap")
    assert ReportCRUD.list_reports(store) == ["isap"]
    assert ReportCRUD.load(store, "isap") == _report()
    assert ReportCRUD.load_samples(store, "isap") == samples


def test_report_csv_format(store):
    ReportCRUD.persist(store, _report())
    lines = (ReportCRUD.directory(store) / "isap.csv").read_text().splitlines()
    assert lines == [
        "name,id_value,ood_value",
        "minADE_1,1.25,3.5",
        "ood_auroc_epistemic,0.8125,",
        "conf_auroc_epistemic,,",
    ]
    histogram = (ReportCRUD.directory(store) / "isap_histograms.csv").read_text().splitlines()
    assert histogram[1] == "categorical,0.0,0.5,3,1"


def test_missing_report(store):
    assert not ReportCRUD.exists(store, "covernet")
    assert ReportCRUD.list_reports(store) == []
    with pytest.raises(ArtifactError):
        ReportCRUD.load(store, "covernet")
    with pytest.raises(ArtifactError):
        ReportCRUD.load_samples(store, "covernet")
