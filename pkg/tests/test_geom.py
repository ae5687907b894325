"""
Unit tests for geometry, voxel containers, rotated IoU and point-cloud files.

Tests verify:
- SE(2) transforms invert each other
- Voxelization matches a brute-force binning
- Rotated IoU matches a rasterized estimate
- Malformed inputs raise the documented errors
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from macp.autodiff import Tensor
from macp.errors import ContractError, FormatError, MissingArtifactError, OutOfBoundsError, ShapeMismatchError
from macp.geom import (Box2D, PointCloud, Pose2D, SparseTensor, VoxelConfig, rotated_iou, to_dense,
                       transform_box, transform_points, voxelize, wrap_angle)
from macp.geom.io import decode_point_cloud, encode_point_cloud, read_point_cloud, write_point_cloud
from macp.geom.iou import polygon_area


def random_cloud(n=300, seed=0, span=10.0):
    rng = np.random.RandomState(seed)
    pts = np.column_stack([
        rng.uniform(-span, span, n),
        rng.uniform(-span, span, n),
        rng.uniform(0.2, 1.8, n),
        rng.uniform(0.0, 1.0, n),
    ])
    return PointCloud(pts)


def raster_iou(a, b, step=0.02):
    lo = np.minimum(a.corners().min(axis=0), b.corners().min(axis=0))
    hi = np.maximum(a.corners().max(axis=0), b.corners().max(axis=0))
    xs = np.arange(lo[0] + step / 2, hi[0], step)
    ys = np.arange(lo[1] + step / 2, hi[1], step)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    in_a, in_b = a.contains(pts), b.contains(pts)
    union = np.count_nonzero(in_a | in_b)
    return np.count_nonzero(in_a & in_b) / union if union else 0.0


class TestPose2D:
    """Test SE(2) poses."""

    def test_yaw_wrapped(self):
        """Test yaw is normalized to (-pi, pi]."""
        assert wrap_angle(-math.pi) == math.pi
        assert Pose2D(0.0, 0.0, 2.5 * math.pi).yaw == pytest.approx(0.5 * math.pi)

    def test_world_round_trip(self):
        """Test to_world and from_world invert each other."""
        pose = Pose2D(3.0, -2.0, 0.7)
        xy = np.array([[1.0, 2.0], [-4.0, 0.5]])
        np.testing.assert_allclose(pose.from_world(pose.to_world(xy)), xy, atol=1e-12)

    def test_non_finite_rejected(self):
        """Test NaN poses are rejected."""
        with pytest.raises(ContractError):
            Pose2D(float("nan"), 0.0, 0.0)

    def test_transform_points_preserves_world_position(self):
        """Test points keep their world position across frames."""
        cloud = random_cloud(20)
        a, b = Pose2D(1.0, 2.0, 0.3), Pose2D(-4.0, 0.5, -2.0)
        moved = transform_points(cloud, a, b)
        np.testing.assert_allclose(b.to_world(moved.xy), a.to_world(cloud.xy), atol=1e-9)
        np.testing.assert_array_equal(moved.points[:, 2:], cloud.points[:, 2:])

    def test_transform_box(self):
        """Test boxes move with their frame."""
        box = Box2D(2.0, 0.0, 4.0, 2.0, 0.0)
        moved = transform_box(box, Pose2D(0.0, 0.0, math.pi / 2), Pose2D.identity())
        assert (moved.x, moved.y) == pytest.approx((0.0, 2.0), abs=1e-12)
        assert moved.yaw == pytest.approx(math.pi / 2)


class TestPointCloud:
    """Test the point-cloud container and file format."""

    def test_intensity_range_checked(self):
        """Test intensities outside [0, 1] are rejected."""
        with pytest.raises(ContractError):
            PointCloud(np.array([[0.0, 0.0, 0.0, 1.5]]))

    def test_file_round_trip(self, tmp_path):
        """Test a cloud written to disk reads back at float32 precision."""
        cloud = random_cloud(50)
        path = write_point_cloud(tmp_path / "cloud.bin", cloud)
        assert path.stat().st_size == 8 + 16 * 50
        back = read_point_cloud(path)
        np.testing.assert_allclose(back.points, cloud.points.astype(np.float32), atol=0)

    def test_bad_magic(self):
        """Test wrong magic raises FormatError."""
        data = encode_point_cloud(random_cloud(3))
        with pytest.raises(FormatError):
            decode_point_cloud(b"XXXXXXXX" + data[8:])

    def test_partial_record(self):
        """Test a body that is not whole records raises FormatError."""
        data = encode_point_cloud(random_cloud(3))
        with pytest.raises(FormatError):
            decode_point_cloud(data[:-3])

    def test_missing_file(self, tmp_path):
        """Test a missing file raises MissingArtifactError."""
        with pytest.raises(MissingArtifactError):
            read_point_cloud(tmp_path / "nope.bin")


class TestVoxelize:
    """Test pillar binning."""

    def test_matches_binning_oracle(self):
        """Test features equal a brute-force per-cell count and mean intensity."""
        cfg = VoxelConfig(origin=(-8.0, -8.0), cell=(1.0, 1.0), extent=(16, 16))
        cloud = random_cloud(400, seed=3, span=10.0)
        st = voxelize(cloud, cfg)

        bins = {}
        for x, y, _, inten in cloud.points:
            r, c = int(math.floor(x + 8.0)), int(math.floor(y + 8.0))
            if 0 <= r < 16 and 0 <= c < 16:
                bins.setdefault((r, c), []).append(inten)
        assert len(st) == len(bins)
        for (r, c), values in bins.items():
            slot = st.lookup(r, c)
            assert slot is not None
            feat = st.feats.value[slot]
            assert feat[0] == min(len(values) / 16.0, 1.0)
            assert feat[1] == pytest.approx(np.mean(values), abs=1e-12)

    def test_empty_cloud(self):
        """Test an empty cloud gives an empty tensor."""
        st = voxelize(PointCloud.empty(), VoxelConfig())
        assert len(st) == 0
        assert st.channels == 2

    def test_points_outside_dropped(self):
        """Test points beyond the half-open extent are dropped."""
        cfg = VoxelConfig(origin=(0.0, 0.0), cell=(1.0, 1.0), extent=(4, 4))
        cloud = PointCloud(np.array([[4.0, 1.0, 0.5, 0.5], [3.99, 1.0, 0.5, 0.5]]))
        st = voxelize(cloud, cfg)
        assert len(st) == 1
        assert st.lookup(3, 1) == 0

    def test_to_dense_scatters(self):
        """Test dense conversion places features at their cells."""
        cfg = VoxelConfig(origin=(0.0, 0.0), cell=(1.0, 1.0), extent=(4, 5))
        st = SparseTensor(np.array([[1, 2], [3, 4]]), Tensor(np.array([[1.0, 2.0], [3.0, 4.0]])))
        dense = to_dense(st, cfg).numpy()
        assert dense.shape == (4, 5, 2)
        np.testing.assert_array_equal(dense[1, 2], [1.0, 2.0])
        np.testing.assert_array_equal(dense[3, 4], [3.0, 4.0])
        assert np.count_nonzero(dense) == 4

    def test_to_dense_out_of_bounds(self):
        """Test a coordinate outside the extent raises OutOfBoundsError."""
        cfg = VoxelConfig(origin=(0.0, 0.0), cell=(1.0, 1.0), extent=(4, 4))
        st = SparseTensor(np.array([[4, 0]]), Tensor(np.ones((1, 2))))
        with pytest.raises(OutOfBoundsError):
            to_dense(st, cfg)

    def test_duplicate_coordinates(self):
        """Test duplicate sites are rejected."""
        with pytest.raises(ShapeMismatchError):
            SparseTensor(np.array([[1, 1], [1, 1]]), Tensor(np.ones((2, 2))))

    def test_rules_on_isolated_site(self):
        """Test an isolated site only pairs with itself."""
        st = SparseTensor(np.array([[0, 0], [5, 5]]), Tensor(np.ones((2, 1))))
        rules = st.rules(3)
        assert [(r.a, r.b) for r in rules] == [(1, 1)]
        assert st.rules(3) is rules


class TestRotatedIoU:
    """Test oriented-box IoU."""

    def test_identical(self):
        """Test a box overlaps itself fully."""
        box = Box2D(1.0, 2.0, 4.0, 2.0, 0.4)
        assert rotated_iou(box, box) == pytest.approx(1.0)

    def test_disjoint(self):
        """Test far-apart boxes do not overlap."""
        assert rotated_iou(Box2D(0, 0, 2, 2, 0), Box2D(10, 0, 2, 2, 0)) == 0.0

    def test_half_overlap(self):
        """Test two unit-offset 2x2 squares give IoU 1/3."""
        assert rotated_iou(Box2D(0, 0, 2, 2, 0), Box2D(1, 0, 2, 2, 0)) == pytest.approx(1.0 / 3.0)

    def test_square_rotation_invariant(self):
        """Test a square rotated by 90 degrees overlaps itself fully."""
        assert rotated_iou(Box2D(0, 0, 2, 2, 0), Box2D(0, 0, 2, 2, math.pi / 2)) == pytest.approx(1.0)

    def test_symmetric(self):
        """Test IoU does not depend on argument order."""
        a, b = Box2D(0.3, 0.1, 4.5, 1.9, 0.3), Box2D(1.0, -0.4, 4.0, 2.0, -0.8)
        assert rotated_iou(a, b) == pytest.approx(rotated_iou(b, a), abs=1e-12)

    def test_rigid_motion_invariant(self):
        """Test IoU is unchanged when both boxes move by the same rotation and translation."""
        rng = np.random.RandomState(11)
        origin = Pose2D.identity()
        for _ in range(10):
            a = Box2D(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(2, 5), rng.uniform(1, 2.5),
                      rng.uniform(-np.pi, np.pi))
            b = Box2D(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(2, 5),
                      rng.uniform(1, 2.5), rng.uniform(-np.pi, np.pi))
            motion = Pose2D(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-np.pi, np.pi))
            moved_a = transform_box(a, origin, motion)
            moved_b = transform_box(b, origin, motion)
            assert rotated_iou(moved_a, moved_b) == pytest.approx(rotated_iou(a, b), abs=1e-9)

    def test_matches_raster_oracle(self):
        """Test IoU against a rasterized estimate on random overlapping boxes."""
        rng = np.random.RandomState(7)
        for _ in range(10):
            a = Box2D(0.0, 0.0, rng.uniform(2, 5), rng.uniform(1, 2.5), rng.uniform(-np.pi, np.pi))
            b = Box2D(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(2, 5),
                      rng.uniform(1, 2.5), rng.uniform(-np.pi, np.pi))
            assert rotated_iou(a, b) == pytest.approx(raster_iou(a, b), abs=1e-2)

    def test_degenerate_box(self):
        """Test a zero-length box raises."""
        with pytest.raises(ContractError):
            rotated_iou(Box2D(0, 0, 0.0, 2, 0), Box2D(0, 0, 2, 2, 0))

    def test_corners_counter_clockwise(self):
        """Test corners are ordered counter-clockwise."""
        corners = Box2D(0, 0, 4, 2, 1.0).corners()
        x, y = corners[:, 0], corners[:, 1]
        signed = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        assert signed > 0
        assert polygon_area(corners) == pytest.approx(8.0)
