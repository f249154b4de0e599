import pytest
from pydantic import ValidationError

from isap.core.config import Settings
from isap.core.errors import ConfigError
from isap.schemas.experiment import ExperimentKind, MapKind, ModelKind, build_config, load_config


def test_defaults():
    config = build_config()
    assert config.experiment.kind == ExperimentKind.SPEED
    assert config.experiment.models == list(ModelKind)
    assert config.anchors.count == 64
    assert config.model.budget == pytest.approx(403.4287934927351)
    assert config.loss.lambda_sc == 10.0
    assert config.training.epochs == 25
    assert not config.training.isap_select_best


def test_map_experiment_defaults():
    config = build_config({"experiment": {"kind": "map"}})
    assert config.loss.lambda_sc == 1.0
    assert config.training.epochs_for(ModelKind.ISAP) == 50
    assert config.training.isap_select_best
    for kind in (ModelKind.COVERNET, ModelKind.POSTCOVERNET, ModelKind.ENSEMBLE):
        assert config.training.epochs_for(kind) == 25


def test_file_values_override_experiment_defaults():
    config = build_config({"experiment": {"kind": "map"}, "training": {"epochs": 3, "isap_epochs": 4}})
    assert config.training.epochs_for(ModelKind.COVERNET) == 3
    assert config.training.epochs_for(ModelKind.ISAP) == 4
    assert config.training.isap_select_best


def test_command_line_overrides_win():
    config = build_config({"experiment": {"seed": 1, "scale": 0.5}}, overrides={"seed": 9, "kind": "map"})
    assert config.experiment.seed == 9
    assert config.experiment.scale == 0.5
    assert config.training.epochs_for(ModelKind.ISAP) == 50


def test_process_defaults_lose_to_file():
    defaults = {"experiment": {"seed": 4, "output_dir": "elsewhere"}}
    config = build_config({"experiment": {"seed": 2}}, defaults=defaults)
    assert config.experiment.seed == 2
    assert config.experiment.output_dir == "elsewhere"


@pytest.mark.parametrize(
    "raw",
    [
        {"model": {"hidden": 8}},
        {"surprise": {}},
        {"raster": {"size": 48}},
        {"generator": {"speed_window": 6}},
        {"generator": {"map_mixture": {"roundabout": 1.0}}},
        {"ensemble": {"members": 3, "eval_sizes": [5]}},
        {"anchors": {"count": 4}, "evaluation": {"top_k": [5]}},
        {"experiment": {"models": []}},
        {"experiment": {"models": ["isap", "isap"]}},
        {"experiment": {"seeds": [1, 1]}},
        {"experiment": {"seeds": [-1]}},
        {"training": {"isap_epochs": 0}},
    ],
)
def test_invalid_values_rejected(raw):
    with pytest.raises(ValidationError):
        build_config(raw)


def test_unknown_experiment_kind():
    with pytest.raises(ConfigError):
        build_config({"experiment": {"kind": "weather"}})


def test_hash_ignores_output_location():
    a = build_config({"experiment": {"output_dir": "a"}})
    b = build_config({"experiment": {"output_dir": "b"}})
    assert a.config_hash() == b.config_hash()
    assert a.echo()["experiment"]["output_dir"] == "a"
    assert build_config({"experiment": {"seed": 1}}).config_hash() != a.config_hash()


def test_canonical_json_is_sorted_and_compact():
    text = build_config().canonical_json()
    assert " " not in text
    assert text.index('"anchors"') < text.index('"experiment"') < text.index('"training"')


def test_load_config_from_toml(tmp_path):
    path = tmp_path / "experiment.toml"
    path.write_text(
        '[experiment]\nkind = "map"\nseed = 3\n\n'
        '[generator.map_mixture]\nstraight = 1.0\n\n'
        '[evaluation]\ntop_k = [1, 5]\n'
    )
    config = load_config(path, overrides={"seed": None, "scale": 0.25})
    assert config.experiment.kind == ExperimentKind.MAP
    assert config.experiment.seed == 3
    assert config.experiment.scale == 0.25
    assert config.generator.map_mixture == {MapKind.STRAIGHT: 1.0}
    assert config.evaluation.top_k == [1, 5]


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("[experiment\nseed = ")
    with pytest.raises(ConfigError):
        load_config(broken)


def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("ISAP_OUTPUT_DIR", "/tmp/isap-runs")
    monkeypatch.setenv("ISAP_TRAIN_WORKERS", "4")
    settings = Settings()
    assert settings.OUTPUT_DIR == "/tmp/isap-runs"
    assert settings.TRAIN_WORKERS == 4


def test_single_seed_sweep_keeps_output_location():
    config = build_config({"experiment": {"seed": 3, "output_dir": "runs/x"}})
    (only,) = config.sweep()
    assert only.experiment.seed == 3
    assert only.experiment.output_dir == "runs/x"
    assert only.config_hash() == config.config_hash()
    (listed,) = build_config({"experiment": {"seeds": [5], "output_dir": "runs/x"}}).sweep()
    assert listed.experiment.seed == 5 and listed.experiment.output_dir == "runs/x"


def test_multi_seed_sweep_gets_one_directory_per_seed():
    config = build_config({"experiment": {"seeds": [0, 1, 2], "output_dir": "runs/speed"}})
    runs = config.sweep()
    assert [c.experiment.seed for c in runs] == [0, 1, 2]
    assert [c.experiment.output_dir for c in runs] == ["runs/speed/seed_0", "runs/speed/seed_1", "runs/speed/seed_2"]
    assert all(c.experiment.seeds == [] for c in runs)
    assert runs[1].config_hash() == build_config({"experiment": {"seed": 1}}).config_hash()
