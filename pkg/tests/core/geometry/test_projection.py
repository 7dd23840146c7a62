"""
Test Suite for Projection
Tests back-projection, reprojection, rigid flow, projected depth and their Jacobians
"""

import numpy as np
import pytest

from geowarp.core.exceptions import GeometryError
from geowarp.core.fields.models import ScalarField
from geowarp.core.geometry import (
    Intrinsics,
    PoseSE3,
    backproject,
    project,
    projected_depth,
    reproject,
    reproject_field,
    rigid_flow,
    rotation_derivatives,
    skew,
)
from geowarp.core.geometry.so3 import exp_so3

K100 = Intrinsics(100.0, 100.0, 50.0, 50.0)


def _translation(tx=0.0, ty=0.0, tz=0.0) -> PoseSE3:
    return PoseSE3(np.eye(3), [tx, ty, tz])


class TestBackproject:
    """Test P = d · K⁻¹ (u, v, 1)"""

    def test_identity_intrinsics(self):
        """Unit intrinsics put the origin pixel on the axis"""
        point = backproject((0, 0), 2.0, Intrinsics(1.0, 1.0, 0.0, 0.0))
        np.testing.assert_allclose(point, [0.0, 0.0, 2.0])

    def test_principal_point(self):
        """The principal point maps onto the optical axis"""
        np.testing.assert_allclose(backproject((50, 50), 3.0, K100), [0.0, 0.0, 3.0])

    def test_off_axis(self):
        """100 px right at depth 2 is 2 units right"""
        np.testing.assert_allclose(backproject((150, 50), 2.0, K100), [2.0, 0.0, 2.0])

    @pytest.mark.parametrize("depth", [0.0, -1.0, 1e-4])
    def test_non_positive_depth(self, depth):
        """Depth below min_depth is an error"""
        with pytest.raises(GeometryError, match="depth must be"):
            backproject((0, 0), depth, K100)

    def test_project_inverts_backproject(self, rng):
        """Back-projecting then projecting returns the pixel"""
        for _ in range(20):
            pixel = rng.uniform(0, 100, 2)
            depth = rng.uniform(0.5, 50.0)
            np.testing.assert_allclose(
                project(backproject(pixel, depth, K100), K100), pixel, atol=1e-10
            )


class TestReproject:
    """Test single-pixel reprojection"""

    def test_identity_pose(self):
        """No motion leaves pixel and depth unchanged"""
        result = reproject((12.0, 34.0), 5.0, K100, PoseSE3.identity())
        np.testing.assert_allclose(result.pixel, [12.0, 34.0])
        assert result.depth == pytest.approx(5.0)
        assert not result.behind_camera

    def test_forward_motion_on_axis(self):
        """Moving 1 unit towards the point keeps it centred at depth 2"""
        result = reproject((50.0, 50.0), 3.0, K100, _translation(tz=-1.0))
        np.testing.assert_allclose(result.pixel, [50.0, 50.0])
        assert result.depth == pytest.approx(2.0)

    def test_lateral_motion(self):
        """t_x = 1 at depth 2 shifts by fx / 2 = 50 px"""
        result = reproject((50.0, 50.0), 2.0, K100, _translation(tx=1.0))
        np.testing.assert_allclose(result.pixel, [100.0, 50.0])

    def test_behind_camera_flagged(self):
        """Points pushed behind the camera are flagged, not raised"""
        result = reproject((50.0, 50.0), 3.0, K100, _translation(tz=-5.0))
        assert result.behind_camera
        assert result.depth == pytest.approx(-2.0)


class TestRigidFlow:
    """Test dense static flow"""

    def test_identity_pose(self):
        """No motion gives zero flow, all valid"""
        depth = ScalarField(np.full((6, 8), 3.0), role="depth")
        flow, valid = rigid_flow(depth, Intrinsics(10.0, 10.0, 3.5, 2.5), PoseSE3.identity())
        assert not flow.data.any()
        assert valid.kept == 48

    def test_constant_depth_lateral(self):
        """Fronto-parallel plane, x translation: flow = fx·tx/depth everywhere"""
        k = Intrinsics(64.0, 64.0, 9.5, 5.5)
        depth = ScalarField(np.full((12, 20), 4.0), role="depth")
        flow, valid = rigid_flow(depth, k, _translation(tx=0.25))
        np.testing.assert_allclose(flow.data[..., 0], 4.0)
        np.testing.assert_allclose(flow.data[..., 1], 0.0, atol=1e-12)
        # the rightmost 4 columns leave the image
        assert valid.kept == 12 * 16
        assert not valid.data[:, -4:].any()

    def test_forward_motion_per_pixel_oracle(self):
        """Every pixel agrees with a scalar evaluation of the reprojection"""
        k = Intrinsics(30.0, 30.0, 7.5, 5.5)
        depth = ScalarField(np.full((12, 16), 6.0), role="depth")
        pose = _translation(tz=-1.0)
        flow, _ = rigid_flow(depth, k, pose)
        for v in range(12):
            for u in range(16):
                expected = reproject((u, v), 6.0, k, pose).pixel - [u, v]
                np.testing.assert_allclose(flow.data[v, u], expected, atol=1e-12)
        # expansion away from the principal point
        assert flow.data[0, 0, 0] < 0 and flow.data[-1, -1, 0] > 0

    def test_behind_camera_is_invalid(self):
        """Pixels whose point ends behind the camera get zero flow and valid 0"""
        depth = ScalarField(np.full((4, 4), 1.0), role="depth")
        flow, valid = rigid_flow(depth, Intrinsics(4.0, 4.0, 1.5, 1.5), _translation(tz=-2.0))
        assert valid.kept == 0
        assert not flow.data.any()

    def test_scale_ambiguity(self, rng):
        """Scaling depth and translation together leaves the flow unchanged"""
        k = Intrinsics(40.0, 40.0, 11.5, 7.5)
        depth = rng.uniform(3.0, 9.0, (16, 24))
        pose = PoseSE3.from_params([0.01, -0.02, 0.005, 0.2, 0.05, -0.1])
        scaled = PoseSE3(pose.rotation, 3.7 * pose.translation)
        flow_a, _ = rigid_flow(ScalarField(depth, role="depth"), k, pose)
        flow_b, _ = rigid_flow(ScalarField(3.7 * depth, role="depth"), k, scaled)
        np.testing.assert_allclose(flow_a.data, flow_b.data, atol=1e-10)

    def test_matches_oracle_static_flow(self, standard_scene):
        """Rigid flow from oracle depth and pose equals the rendered flow on static pixels"""
        spec, frames = standard_scene
        centre = frames[1]
        for flow_gt, pose in (
            (centre.flow_forward, centre.pose_forward),
            (centre.flow_backward, centre.pose_backward),
        ):
            flow, _ = rigid_flow(centre.depth, spec.intrinsics, pose)
            static = centre.dynamic.as_bool()
            np.testing.assert_allclose(flow.data[static], flow_gt.data[static], atol=1e-6)


class TestProjectedDepth:
    """Test z after motion on the source grid"""

    def test_identity(self, rng):
        """No motion reproduces the depth"""
        depth = ScalarField(rng.uniform(1.0, 5.0, (5, 6)), role="depth")
        projected, front = projected_depth(depth, K100, PoseSE3.identity())
        np.testing.assert_allclose(projected.data, depth.data)
        assert front.kept == 30

    def test_forward_translation(self):
        """Moving 1 unit forward reduces a constant depth 5 to 4"""
        depth = ScalarField(np.full((4, 4), 5.0), role="depth")
        projected, _ = projected_depth(depth, K100, _translation(tz=-1.0))
        np.testing.assert_allclose(projected.data, 4.0)

    def test_random_pose_matches_point_transform(self, rng):
        """Each value equals the z of R·P + t"""
        k = Intrinsics(20.0, 20.0, 3.5, 2.5)
        depth = ScalarField(rng.uniform(2.0, 6.0, (6, 8)), role="depth")
        pose = PoseSE3.from_params(rng.uniform(-0.05, 0.05, 6))
        projected, _ = projected_depth(depth, k, pose)
        for v in range(6):
            for u in range(8):
                z = pose.apply(backproject((u, v), depth.data[v, u], k))[2]
                assert projected.data[v, u] == pytest.approx(z, abs=1e-12)

    def test_behind_camera_masked(self):
        """Points behind the camera are masked out"""
        depth = ScalarField(np.full((3, 3), 1.0), role="depth")
        _, front = projected_depth(depth, K100, _translation(tz=-2.0))
        assert front.kept == 0


class TestJacobians:
    """Test analytic derivatives used by the loss gradients"""

    def test_rotation_derivatives_at_zero(self):
        """At ω = 0 the derivatives are the generators"""
        derivatives = rotation_derivatives(np.zeros(3))
        for k in range(3):
            np.testing.assert_array_equal(derivatives[k], skew(np.eye(3)[k]))

    def test_rotation_derivatives_match_differences(self):
        """Closed form agrees with central differences away from zero"""
        omega = np.array([0.3, -0.2, 0.5])
        derivatives = rotation_derivatives(omega)
        step = 1e-6
        for k in range(3):
            e = np.zeros(3)
            e[k] = step
            numeric = (exp_so3(omega + e) - exp_so3(omega - e)) / (2 * step)
            np.testing.assert_allclose(derivatives[k], numeric, atol=1e-8)

    def test_field_jacobians(self, rng):
        """Depth and pose Jacobians of the dense reprojection"""
        k = Intrinsics(20.0, 20.0, 4.5, 3.5)
        depth = rng.uniform(3.0, 6.0, (8, 10))
        params = np.array([0.02, -0.03, 0.01, 0.3, -0.1, 0.2])
        rep = reproject_field(depth, k, PoseSE3.from_params(params), with_jacobians=True)
        step = 1e-6

        plus = reproject_field(depth + step, k, PoseSE3.from_params(params))
        minus = reproject_field(depth - step, k, PoseSE3.from_params(params))
        numeric = (plus.coords - minus.coords) / (2 * step)
        np.testing.assert_allclose(rep.d_coords_d_depth, numeric, rtol=1e-6, atol=1e-8)
        numeric_z = (plus.depth - minus.depth) / (2 * step)
        np.testing.assert_allclose(rep.d_z_d_depth, numeric_z, rtol=1e-6, atol=1e-8)

        for j in range(6):
            e = np.zeros(6)
            e[j] = step
            plus = reproject_field(depth, k, PoseSE3.from_params(params + e))
            minus = reproject_field(depth, k, PoseSE3.from_params(params - e))
            numeric = (plus.coords - minus.coords) / (2 * step)
            np.testing.assert_allclose(rep.d_coords_d_pose[..., j], numeric, rtol=1e-5, atol=1e-6)
            numeric_z = (plus.depth - minus.depth) / (2 * step)
            np.testing.assert_allclose(rep.d_z_d_pose[..., j], numeric_z, rtol=1e-5, atol=1e-6)
