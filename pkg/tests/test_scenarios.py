"""
Unit tests for the synthetic world, LiDAR and datasets.

Tests verify:
- Worlds, scans and datasets are pure functions of their seeds
- Rays stop at the first surface they hit
- Dataset files round-trip and are byte-identical across runs
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from macp.errors import ConfigError, ContractError, FormatError, MissingArtifactError, ScenarioError
from macp.geom import Box2D, PointCloud, Pose2D, VoxelConfig, rotated_iou
from macp.scenarios import (AgentSpec, DatasetKind, Frame, SensorConfig, World, WorldConfig, cast_rays, frame_seed,
                            gen_world, histogram_modes, lidar_scan, load_dataset, make_dataset, mask_fov,
                            ray_ranges, save_dataset, signed_range_histogram, signed_ranges)

SMALL_WORLD = WorldConfig(field_size=(80.0, 50.0), n_objects=(6, 10), n_agents=(2, 4))
SMALL_SENSOR = SensorConfig(beams=240)


def one_box_world(*boxes, sensor=None):
    sensor = sensor or SensorConfig().noiseless()
    return World(0, (-50.0, 50.0, -50.0, 50.0), list(boxes), [AgentSpec(0, Pose2D.identity(), sensor)])


class TestWorld:
    """Test world sampling."""

    def test_deterministic(self):
        """Test worlds depend only on their seed."""
        assert gen_world(5, SMALL_WORLD).to_dict() == gen_world(5, SMALL_WORLD).to_dict()
        assert gen_world(5, SMALL_WORLD).to_dict() != gen_world(6, SMALL_WORLD).to_dict()

    def test_placement_rules(self):
        """Test agent radius, object overlap and agent clearance rules."""
        cfg = WorldConfig()
        for seed in range(5):
            world = gen_world(seed, cfg)
            assert cfg.n_agents[0] <= len(world.agents) <= cfg.n_agents[1]
            ego = world.ego.pose
            for agent in world.agents[1:]:
                assert math.hypot(agent.pose.x - ego.x, agent.pose.y - ego.y) <= cfg.partner_radius
            for i, a in enumerate(world.objects):
                for b in world.objects[i + 1:]:
                    assert rotated_iou(a, b) == 0.0
                for agent in world.agents:
                    assert not a.contains(agent.pose.translation[None, :])[0]

    def test_fixed_agent_count(self):
        """Test an explicit agent count overrides the sampled one."""
        assert len(gen_world(1, SMALL_WORLD, n_agents=1).agents) == 1

    def test_round_trip_dict(self):
        """Test worlds round-trip through a dict."""
        world = gen_world(3, SMALL_WORLD)
        assert World.from_dict(world.to_dict()).to_dict() == world.to_dict()

    def test_crowded_field_fails(self):
        """Test an overfull field raises after the retry limit."""
        cfg = WorldConfig(field_size=(12.0, 12.0), n_objects=(40, 40), n_agents=(1, 1), max_retries=20)
        with pytest.raises(ScenarioError):
            gen_world(0, cfg)

    def test_bad_config(self):
        """Test invalid world and sensor configs raise."""
        with pytest.raises(ConfigError):
            WorldConfig(n_agents=(0, 3))
        with pytest.raises(ConfigError):
            SensorConfig(dropout=1.0)


class TestLidar:
    """Test ray casting."""

    def test_front_face_range(self):
        """Test a ray hits the near face and a ray away from the box misses."""
        world = one_box_world(Box2D(10.0, 0.0, 4.0, 2.0, 0.0))
        ranges, objects = ray_ranges(np.zeros(2), np.array([0.0, math.pi]), world, 50.0)
        assert ranges[0] == pytest.approx(8.0)
        assert objects[0] == 0
        assert math.isinf(ranges[1]) and objects[1] == -1

    def test_points_on_surfaces(self):
        """Test every point lies on a box boundary."""
        box = Box2D(10.0, 3.0, 4.0, 2.0, 0.6)
        world = one_box_world(box)
        points, hit = cast_rays(world, world.ego)
        assert len(points) > 0
        assert np.all(hit == 0)
        grown = Box2D(box.x, box.y, box.length + 1e-6, box.width + 1e-6, box.yaw)
        shrunk = Box2D(box.x, box.y, box.length - 1e-6, box.width - 1e-6, box.yaw)
        assert np.all(grown.contains(points[:, :2]))
        assert not np.any(shrunk.contains(points[:, :2]))

    def test_occlusion(self):
        """Test a box directly behind another is never hit."""
        world = one_box_world(Box2D(10.0, 0.0, 4.0, 2.0, 0.0), Box2D(20.0, 0.0, 4.0, 2.0, 0.0))
        _, hit = cast_rays(world, world.ego)
        assert set(hit.tolist()) == {0}

    def test_max_range(self):
        """Test a box beyond max range is never hit."""
        world = one_box_world(Box2D(60.0, 0.0, 4.0, 2.0, 0.0))
        assert len(lidar_scan(world, world.ego)) == 0

    def test_deterministic_noise(self):
        """Test sensor noise repeats for the same world and agent."""
        world = one_box_world(Box2D(10.0, 0.0, 4.0, 8.0, 0.3), sensor=SensorConfig())
        a, _ = cast_rays(world, world.ego)
        b, _ = cast_rays(world, world.ego)
        np.testing.assert_array_equal(a, b)

    def test_hit_count_matches_angular_subtense(self):
        """Test a lone box is hit by exactly the beams inside the angle its corners subtend."""
        sensor = SensorConfig(beams=720).noiseless()
        step = 2.0 * math.pi / sensor.beams
        beam_angles = np.arctan2(np.sin(step * np.arange(sensor.beams)), np.cos(step * np.arange(sensor.beams)))
        for box in (Box2D(10.0, 0.0, 4.0, 2.0, 0.0), Box2D(12.0, 2.0, 4.0, 2.0, 0.5),
                    Box2D(6.0, -3.0, 3.5, 1.8, -1.1)):
            world = one_box_world(box, sensor=sensor)
            points, _ = cast_rays(world, world.ego)
            corner_angles = np.arctan2(box.corners()[:, 1], box.corners()[:, 0])
            lo, hi = corner_angles.min(), corner_angles.max()
            expected = int(np.sum((beam_angles > lo) & (beam_angles < hi)))
            assert len(points) == expected
            assert abs(len(points) - (hi - lo) / step) <= 1.0


class TestDataset:
    """Test frame generation and persistence."""

    def test_frame_seed(self):
        """Test frame seeds depend on both dataset seed and index."""
        assert frame_seed(0, 1) == frame_seed(0, 1)
        assert frame_seed(0, 1) != frame_seed(0, 2)
        assert frame_seed(0, 1) != frame_seed(1, 1)

    def test_single_kind(self):
        """Test single-agent frames have only the ego."""
        frames = make_dataset("single", 3, 0, SMALL_WORLD, SMALL_SENSOR)
        for frame in frames:
            assert frame.kind is DatasetKind.SINGLE
            assert frame.agent_ids == [0]
            assert frame.partners() == []

    def test_cooperative_ground_truth(self):
        """Test ground truth holds only boxes some agent hit, inside the ego grid."""
        voxel = VoxelConfig()
        frames = make_dataset("cooperative", 3, 1, SMALL_WORLD, SMALL_SENSOR, voxel)
        for frame in frames:
            assert 2 <= len(frame.agent_ids) <= 4
            assert frame.gts == frame.gts_visible_to(frame.agent_ids, voxel)
            for box in frame.gts:
                assert voxel.contains_xy(np.array([[box.x, box.y]]))[0]
            ego_only = frame.gts_visible_to([frame.ego_id], voxel)
            assert len(ego_only) <= len(frame.gts)

    def test_partners_limited(self):
        """Test the agent limit counts the ego."""
        frame = make_dataset("cooperative", 1, 2, WorldConfig(n_agents=(4, 4)), SMALL_SENSOR)[0]
        assert len(frame.partners()) == 3
        assert [pid for pid, _, _ in frame.partners(max_agents=2)] == [1]
        assert frame.partners(max_agents=1) == []

    def test_workers_do_not_change_output(self, tmp_path):
        """Test parallel generation writes the same bytes as serial."""
        serial = make_dataset("cooperative", 4, 3, SMALL_WORLD, SMALL_SENSOR, workers=1)
        parallel = make_dataset("cooperative", 4, 3, SMALL_WORLD, SMALL_SENSOR, workers=2)
        save_dataset(serial, tmp_path / "a", 3, SMALL_WORLD, SMALL_SENSOR)
        save_dataset(parallel, tmp_path / "b", 3, SMALL_WORLD, SMALL_SENSOR)
        files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
        assert files
        for rel in files:
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()

    def test_save_load(self, tmp_path):
        """Test datasets round-trip through their files."""
        frames = make_dataset("cooperative", 2, 4, SMALL_WORLD, SMALL_SENSOR)
        save_dataset(frames, tmp_path, 4, SMALL_WORLD, SMALL_SENSOR)
        loaded = load_dataset(tmp_path)
        assert len(loaded) == 2
        for a, b in zip(frames, loaded):
            assert a.frame_id == b.frame_id
            assert a.kind is b.kind
            assert a.world.to_dict() == b.world.to_dict()
            assert a.visible_by == b.visible_by
            for agent_id, cloud in a.clouds.items():
                np.testing.assert_array_equal(b.clouds[agent_id].points, cloud.points.astype(np.float32))
            np.testing.assert_allclose([(g.x, g.y, g.yaw) for g in a.gts], [(g.x, g.y, g.yaw) for g in b.gts],
                                       atol=1e-12)

    def test_missing_and_corrupt(self, tmp_path):
        """Test missing and corrupt datasets raise."""
        with pytest.raises(MissingArtifactError):
            load_dataset(tmp_path / "absent")
        (tmp_path / "manifest.json").write_text("{not json")
        with pytest.raises(FormatError):
            load_dataset(tmp_path)

    def test_bad_frame_count(self):
        """Test an empty dataset is refused."""
        with pytest.raises(ContractError):
            make_dataset("single", 0, 0)


class TestMaskAndDiagnostics:
    """Test the FOV mask and the signed-range histogram."""

    def test_mask_fov(self):
        """Test the mask drops points inside the square only."""
        cloud = PointCloud(np.array([[0.0, 0.0, 1.0, 0.5], [5.0, 5.0, 1.0, 0.5], [1.0, -1.0, 1.0, 0.5]]))
        kept = mask_fov(cloud, (0.0, 0.0), 1.0)
        np.testing.assert_array_equal(kept.xy, [[5.0, 5.0]])
        with pytest.raises(ContractError):
            mask_fov(cloud, (0.0, 0.0), 0.0)

    def test_signed_ranges(self):
        """Test points behind the ego get negative ranges."""
        cloud = PointCloud(np.array([[3.0, 4.0, 1.0, 0.5], [-3.0, 4.0, 1.0, 0.5]]))
        np.testing.assert_allclose(signed_ranges(cloud, Pose2D.identity(), Pose2D.identity()), [5.0, -5.0])

    def test_histogram_layout(self):
        """Test histogram layout, normalization and ego point count."""
        frames = make_dataset("cooperative", 2, 5, SMALL_WORLD, SensorConfig(beams=240, max_range=40.0))
        df = signed_range_histogram(frames, bins=20, max_range=100.0)
        assert list(df.columns) == ["role", "bin_left", "bin_right", "count", "density"]
        assert set(df["role"]) == {"ego", "surrounding"}
        widths = (df["bin_right"] - df["bin_left"]).to_numpy()
        np.testing.assert_allclose(widths, 10.0)
        for role in ("ego", "surrounding"):
            part = df[df["role"] == role]
            assert len(part) == 20
            assert part["density"].sum() == pytest.approx(1.0)
        assert histogram_modes(df, "ego") >= 1
        ego_points = sum(len(f.ego_cloud) for f in frames)
        assert df[df["role"] == "ego"]["count"].sum() == ego_points

    def test_surrounding_histogram_is_multi_modal(self):
        """Test partners ahead of and behind the ego give separate modes in the surrounding histogram."""
        sensor = SensorConfig(beams=360, max_range=10.0).noiseless()
        agents = [AgentSpec(0, Pose2D.identity(), sensor), AgentSpec(1, Pose2D(27.5, 0.0, 0.0), sensor),
                  AgentSpec(2, Pose2D(-27.5, 0.0, 0.0), sensor)]
        boxes = [Box2D(27.5, 3.0, 4.0, 2.0, 0.0), Box2D(-27.5, -3.0, 4.0, 2.0, 0.0)]
        world = World(0, (-50.0, 50.0, -50.0, 50.0), boxes, agents)
        clouds = {a.agent_id: lidar_scan(world, a) for a in agents}
        assert len(clouds[0]) == 0 and len(clouds[1]) > 0 and len(clouds[2]) > 0
        frame = Frame(0, DatasetKind.COOPERATIVE, world, clouds, [])
        df = signed_range_histogram([frame], bins=20, max_range=50.0)
        surrounding = df[df["role"] == "surrounding"]
        assert histogram_modes(df, "surrounding") == 2
        occupied = surrounding[surrounding["count"] > 0]
        assert sorted(occupied["bin_left"].tolist()) == pytest.approx([-30.0, 25.0])
