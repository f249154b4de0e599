import numpy as np
import pytest

from isap.core.errors import ArtifactError, DomainError
from isap.scenegen import (
    DriveSide,
    MapGeometry,
    RecordLayout,
    Regime,
    Scene,
    Split,
    generate_dataset,
    generate_scene,
    speed_heuristic,
    split_counts,
    split_map,
    split_speed,
)
from isap.scenegen.scene import FUTURE_LEN, decode_scene, encode_scene
from isap.schemas.experiment import ExperimentKind, GeneratorSection, MapKind, build_config


def _scene(speed: float, side=DriveSide.LEFT, kind=MapKind.STRAIGHT, tagged=False, past_len=5) -> Scene:
    """Constant-speed straight drive with the newest past point at the origin."""
    times = (np.arange(past_len) - (past_len - 1)) * 0.5
    past = np.stack([np.zeros(past_len), speed * times], axis=-1)
    future = np.stack([np.zeros(FUTURE_LEN), speed * 0.5 * np.arange(1, FUTURE_LEN + 1)], axis=-1)
    return Scene(
        seed=1,
        map_kind=kind,
        drive_side=side,
        state=np.array([speed, 0.0, 0.0]),
        past=past,
        future=future,
        geometry=MapGeometry(kind=kind),
        roundabout_tagged=tagged,
    )


def test_scene_is_pure_function_of_seed():
    gen = GeneratorSection()
    assert generate_scene(42, gen) == generate_scene(42, gen)
    assert generate_scene(42, gen) != generate_scene(43, gen)


def test_scene_frame_and_shapes():
    gen = GeneratorSection()
    for seed in range(10):
        scene = generate_scene(seed, gen)
        assert scene.past.shape == (gen.past_len, 2)
        assert scene.future.shape == (FUTURE_LEN, 2)
        assert np.array_equal(scene.past[-1], [0.0, 0.0])
        assert len(scene.neighbors) <= gen.max_neighbors
        assert np.isfinite(scene.future).all()


def test_waypoints_are_float32_exact():
    scene = generate_scene(5, GeneratorSection())
    for values in (scene.past, scene.future, scene.state):
        assert np.array_equal(values, values.astype(np.float32).astype(np.float64))


def test_id_and_ood_regimes_respect_speed_threshold():
    gen = GeneratorSection()
    threshold = gen.speed_threshold()
    for seed in range(10):
        assert speed_heuristic(generate_scene(seed, gen, regime=Regime.ID), gen.speed_window) < threshold
        assert speed_heuristic(generate_scene(seed, gen, regime=Regime.OOD), gen.speed_window) >= threshold


def test_speed_threshold_scales_with_window():
    assert GeneratorSection().speed_threshold() == pytest.approx(10.0)
    assert GeneratorSection(speed_window=5).speed_threshold() == pytest.approx(20.0)


def test_zero_speed_scene_is_stationary():
    gen = GeneratorSection(position_noise=0.0)
    scene = generate_scene(3, gen, speed=0.0)
    assert np.allclose(scene.future, 0.0)
    assert np.allclose(scene.past, 0.0)


def test_negative_speed_rejected():
    with pytest.raises(DomainError):
        generate_scene(1, GeneratorSection(), speed=-1.0)


def test_left_side_scene_mirrors_right_side():
    gen = GeneratorSection(position_noise=0.0)
    right = generate_scene(11, gen, map_kind=MapKind.MULTILANE, drive_side=DriveSide.RIGHT, speed=6.0)
    left = generate_scene(11, gen, map_kind=MapKind.MULTILANE, drive_side=DriveSide.LEFT, speed=6.0)
    assert np.array_equal(left.future[:, 0], -right.future[:, 0])
    assert np.array_equal(left.future[:, 1], right.future[:, 1])
    assert left.geometry.road_offset == -right.geometry.road_offset
    assert left.geometry.mirror and not right.geometry.mirror


def test_speed_split_rule():
    assert split_speed(_scene(4.0)) == Regime.ID
    assert split_speed(_scene(15.0)) == Regime.OOD
    assert split_speed(_scene(10.0)) == Regime.OOD
    with pytest.raises(DomainError):
        split_speed(_scene(4.0), threshold=0.0)


def test_speed_heuristic_uses_trailing_window():
    scene = _scene(4.0)
    assert speed_heuristic(scene, window=3) == pytest.approx(4.0)
    assert speed_heuristic(scene, window=None) == pytest.approx(8.0)
    with pytest.raises(DomainError):
        speed_heuristic(np.zeros((1, 2)))


@pytest.mark.parametrize(
    "side, kind, tagged, expected",
    [
        (DriveSide.LEFT, MapKind.STRAIGHT, False, Regime.ID),
        (DriveSide.LEFT, MapKind.INTERSECTION, False, Regime.ID),
        (DriveSide.LEFT, MapKind.MULTILANE, False, Regime.ID),
        (DriveSide.RIGHT, MapKind.ROUNDABOUT, True, Regime.OOD),
        (DriveSide.RIGHT, MapKind.STRAIGHT, True, Regime.OOD),
        (DriveSide.RIGHT, MapKind.STRAIGHT, False, Regime.EXCLUDED),
        (DriveSide.LEFT, MapKind.ROUNDABOUT, False, Regime.EXCLUDED),
        (DriveSide.LEFT, MapKind.STRAIGHT, True, Regime.ID),
        (DriveSide.LEFT, MapKind.MULTILANE, True, Regime.ID),
    ],
)
def test_map_split_rule(side, kind, tagged, expected):
    assert split_map(_scene(4.0, side=side, kind=kind, tagged=tagged)) == expected


def test_split_counts_scale():
    counts = split_counts(ExperimentKind.SPEED, 0.01)
    assert counts[Split.TRAIN] == 257
    assert split_counts(ExperimentKind.SPEED, 1.0)[Split.TEST_OOD] == 3267
    assert split_counts(ExperimentKind.MAP, 1.0)[Split.TRAIN] == 8110
    assert all(c == 1 for c in split_counts(ExperimentKind.MAP, 1e-5).values())


def test_speed_dataset_is_deterministic_and_classified(tiny_config):
    scenes = generate_dataset(tiny_config)
    counts = split_counts(ExperimentKind.SPEED, tiny_config.experiment.scale)
    assert len(scenes) == sum(counts.values())
    threshold = tiny_config.generator.speed_threshold()
    for scene in scenes:
        expected = Regime.OOD if scene.split.is_ood else Regime.ID
        assert split_speed(scene, threshold, tiny_config.generator.speed_window) == expected
    assert scenes == generate_dataset(tiny_config)


def test_map_dataset_classified():
    config = build_config({"experiment": {"kind": "map", "scale": 0.01, "seed": 3}})
    scenes = generate_dataset(config)
    for scene in scenes:
        expected = Regime.OOD if scene.split.is_ood else Regime.ID
        assert split_map(scene) == expected
        if scene.split.is_ood:
            assert scene.drive_side == DriveSide.RIGHT
        else:
            assert scene.drive_side == DriveSide.LEFT and scene.map_kind != MapKind.ROUNDABOUT


def test_record_layout_round_trip():
    gen = GeneratorSection()
    layout = RecordLayout(past_len=gen.past_len, max_neighbors=gen.max_neighbors)
    scene = generate_scene(2**40 + 17, gen)
    scene.split = Split.VAL_OOD
    row = encode_scene(scene, layout)
    assert row.shape == (layout.width,)
    assert decode_scene(row, layout) == scene


def test_record_layout_rejects_overflow():
    scene = _scene(4.0)
    scene.neighbors = [scene.past.copy()]
    with pytest.raises(ArtifactError):
        encode_scene(scene, RecordLayout(past_len=5, max_neighbors=0))
    with pytest.raises(ArtifactError):
        encode_scene(scene, RecordLayout(past_len=6, max_neighbors=1))


def test_constant_speed_spacing_without_noise():
    gen = GeneratorSection(position_noise=0.0, speed_noise=0.0, curvature_noise=0.0)
    scene = generate_scene(0, gen, map_kind=MapKind.STRAIGHT, speed=5.0, accel=0.0)
    points = np.vstack([scene.past[-1:], scene.future])
    steps = np.linalg.norm(np.diff(points, axis=0), axis=-1)
    assert np.allclose(steps, 2.5, atol=1e-5)
    assert np.allclose(scene.future[:, 0], 0.0)


def test_speed_heuristic_on_raw_points():
    assert speed_heuristic(np.array([[0.0, 0.0], [0.0, 3.0]])) == 3.0
    assert speed_heuristic(np.array([[0.0, 0.0], [3.0, 4.0]])) == 5.0
    assert split_speed(_scene(0.0)) == Regime.ID


def test_no_leak_keeps_straight_roads_out_of_ood():
    config = build_config({"experiment": {"kind": "map", "scale": 0.02, "seed": 5}, "generator": {"leak_fraction": 0.0}})
    ood = [s for s in generate_dataset(config) if s.split.is_ood]
    assert ood and all(s.map_kind == MapKind.ROUNDABOUT for s in ood)
