import numpy as np

from isap.scenegen import MapGeometry, RasterRenderer, Scene, DriveSide, generate_scene, rasterize, rasterize_many
from isap.scenegen.geometry import mirrored
from isap.scenegen.raster import EGO_CHANNEL, MAP_CHANNEL, SOCIAL_CHANNEL
from isap.scenegen.scene import FUTURE_LEN
from isap.schemas.experiment import GeneratorSection, MapKind, RasterSection


def _scene(geometry: MapGeometry, neighbors=None) -> Scene:
    times = (np.arange(5) - 4) * 0.5
    past = np.stack([np.zeros(5), 2.0 * times], axis=-1)
    return Scene(
        seed=0,
        map_kind=geometry.kind,
        drive_side=DriveSide.LEFT,
        state=np.array([2.0, 0.0, 0.0]),
        past=past,
        future=np.zeros((FUTURE_LEN, 2)),
        geometry=geometry,
        neighbors=neighbors or [],
    )


def test_raster_shape_and_range():
    scene = generate_scene(4, GeneratorSection())
    raster = rasterize(scene)
    assert raster.shape == (64, 64, 3)
    assert raster.min() >= 0.0 and raster.max() <= 1.0
    assert set(np.unique(raster[..., MAP_CHANNEL])) <= {0.0, 1.0}


def test_ego_trail_is_brightest_at_newest_point():
    renderer = RasterRenderer(size=64, extent=40.0)
    ego = renderer.render(_scene(MapGeometry(kind=MapKind.STRAIGHT)))[..., EGO_CHANNEL]
    assert ego.max() == 1.0
    # the agent sits at column 31.5, row 47.5 in pixel-centre coordinates
    assert ego[46:50, 30:34].max() == 1.0
    # older segments, 2 to 4 m behind, are drawn dimmer
    older = ego[52:, :]
    assert 0.0 < older.max() < 1.0


def test_social_channel_empty_without_neighbors():
    raster = RasterRenderer(size=32).render(_scene(MapGeometry(kind=MapKind.STRAIGHT)))
    assert not raster[..., SOCIAL_CHANNEL].any()

    track = np.stack([np.full(5, 3.0), np.linspace(0.0, 8.0, 5)], axis=-1)
    raster = RasterRenderer(size=32).render(_scene(MapGeometry(kind=MapKind.STRAIGHT), neighbors=[track]))
    assert raster[..., SOCIAL_CHANNEL].max() == 1.0


def test_straight_road_is_left_right_symmetric():
    raster = RasterRenderer().render(_scene(MapGeometry(kind=MapKind.STRAIGHT, road_half_width=3.5)))
    road = raster[..., MAP_CHANNEL]
    assert np.array_equal(road, road[:, ::-1])
    assert road[:, 31].all()
    assert not road[:, 0].any()


def test_mirrored_geometry_flips_map_channel():
    geometry = MapGeometry(kind=MapKind.MULTILANE, road_offset=-5.25, road_half_width=7.0)
    renderer = RasterRenderer()
    road = renderer.render(_scene(geometry))[..., MAP_CHANNEL]
    mirror = renderer.render(_scene(mirrored(geometry)))[..., MAP_CHANNEL]
    assert np.array_equal(mirror, road[:, ::-1])


def test_rasterize_many_is_channels_first():
    config = RasterSection(size=32)
    scenes = [generate_scene(seed, GeneratorSection()) for seed in range(3)]
    batch = rasterize_many(scenes, config)
    assert batch.shape == (3, 3, 32, 32)
    assert np.array_equal(batch[1], rasterize(scenes[1], config).transpose(2, 0, 1))
    assert rasterize_many([], config).shape == (0, 3, 32, 32)


def test_stopped_agent_is_a_small_blob():
    scene = _scene(MapGeometry(kind=MapKind.STRAIGHT))
    scene.past = np.zeros((5, 2))
    ego = RasterRenderer().render(scene)[..., EGO_CHANNEL]
    rows, cols = np.nonzero(ego)
    assert len(rows) > 0
    assert rows.max() - rows.min() < 3 and cols.max() - cols.min() < 3
