import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import intrinsics_strategy
from incidence_calib.camera import (
    CropResizeTransform,
    IncidenceField,
    Intrinsics,
    Normalization,
    SimpleCamera,
    apply_transform,
    backproject,
    incidence_from_intrinsics,
    normalize_field,
    pixel_grid,
    transform_field,
)
from incidence_calib.errors import CoverageError, DegenerateRayError, DimensionError
from incidence_calib.synth import Plane, make_planar_scene

dyadic = st.integers(-64, 64).map(lambda k: k / 8)
dyadic_scale = st.sampled_from([0.25, 0.5, 1.0, 1.5, 2.0, 4.0])


def transforms(scale=dyadic_scale, offset=dyadic):
    return st.builds(CropResizeTransform, scale, scale, offset, offset)


class TestIntrinsics:
    def test_matrix_roundtrip(self, K500):
        assert Intrinsics.from_matrix(K500.matrix()) == K500

    @given(intrinsics_strategy())
    def test_inverse(self, K):
        np.testing.assert_allclose(K.inverse() @ K.matrix(), np.eye(3), atol=1e-12)

    @pytest.mark.parametrize("bad", [(0, 1, 0, 0), (1, -2, 0, 0), (np.nan, 1, 0, 0), (1, 1, np.inf, 0)])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ValueError):
            Intrinsics(*bad)

    def test_simple_camera_center(self):
        assert SimpleCamera(500, 640, 480).to_intrinsics() == Intrinsics(500, 500, 320, 240)


class TestIncidence:
    def test_center_ray(self, K500):
        V = incidence_from_intrinsics(K500, 640, 480)
        np.testing.assert_array_equal(V.rays[240, 320], [0, 0, 1])

    def test_origin_ray(self, K500, oracle):
        V = incidence_from_intrinsics(K500, 640, 480)
        np.testing.assert_allclose(V.rays[0, 0], oracle["ray_at_origin"], rtol=0, atol=1e-15)

    def test_shape_and_state(self, K500):
        V = incidence_from_intrinsics(K500, 7, 5)
        assert V.rays.shape == (5, 7, 3)
        assert V.state is Normalization.Z_ONE
        assert not V.rays.flags.writeable

    @pytest.mark.parametrize("dims", [(1, 5), (5, 1), (0, 0)])
    def test_too_small(self, K500, dims):
        with pytest.raises(DimensionError):
            incidence_from_intrinsics(K500, *dims)

    @given(intrinsics_strategy())
    def test_reprojection(self, K):
        # K v reproduces the pixel coordinates
        V = incidence_from_intrinsics(K, 16, 12)
        x, y = pixel_grid(16, 12)
        proj = V.rays @ K.matrix().T
        np.testing.assert_allclose(proj[..., 0], x, atol=1e-9)
        np.testing.assert_allclose(proj[..., 1], y, atol=1e-9)

    def test_invariants_checked(self):
        rays = np.zeros((2, 2, 3))
        rays[..., 2] = 2.0
        with pytest.raises(ValueError):
            IncidenceField(rays, Normalization.Z_ONE)
        with pytest.raises(ValueError):
            IncidenceField(rays, Normalization.UNIT)

    def test_nan_pixels_are_invalid(self, K500):
        rays = np.array(incidence_from_intrinsics(K500, 4, 3).rays)
        rays[1, 2] = np.nan
        V = IncidenceField(rays)
        assert V.valid_mask.sum() == 11 and not V.valid_mask[1, 2]


class TestNormalize:
    def test_unit_to_z_one(self, oracle):
        V = IncidenceField(np.tile([0.6, 0.0, 0.8], (2, 2, 1)), Normalization.UNIT)
        out = normalize_field(V, "z_one")
        np.testing.assert_allclose(out.rays[0, 0], oracle["unit_to_z_one"], atol=1e-15)

    @given(intrinsics_strategy())
    def test_roundtrip(self, K):
        V = incidence_from_intrinsics(K, 8, 6)
        back = normalize_field(normalize_field(V, Normalization.UNIT), Normalization.Z_ONE)
        np.testing.assert_allclose(back.rays, V.rays, rtol=1e-12, atol=1e-15)

    def test_idempotent(self, K500):
        V = incidence_from_intrinsics(K500, 4, 4)
        assert normalize_field(V, "z_one") is V

    def test_raw_rays(self):
        rays = np.tile([0.0, 0.0, 2.0], (2, 2, 1))
        rays[0, 1] = [3.0, 4.0, 5.0]
        out = normalize_field(rays, Normalization.UNIT)
        np.testing.assert_allclose(out.rays[0, 1], [0.6 / np.sqrt(2), 0.8 / np.sqrt(2), 1 / np.sqrt(2)])
        np.testing.assert_allclose(np.cross(out.rays, rays), 0, atol=1e-12)

    @pytest.mark.parametrize("bad", [[3.0, 4.0, 0.0], [0.0, 0.6, -0.8]])
    def test_degenerate_ray_reports_pixel(self, bad):
        rays = np.tile([0.0, 0.0, 1.0], (2, 3, 1))
        rays[1, 2] = bad
        with pytest.raises(DegenerateRayError) as info:
            normalize_field(rays, Normalization.Z_ONE)
        assert info.value.pixel == (2, 1)


class TestTransform:
    def test_scale(self, K500, oracle):
        K = apply_transform(CropResizeTransform(2, 2, 0, 0), K500)
        assert list(K.as_tuple()) == oracle["apply_scale2"]

    def test_crop(self, K500, oracle):
        K = apply_transform(CropResizeTransform(1, 1, -100, 0), K500)
        assert list(K.as_tuple()) == oracle["apply_crop100"]

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            CropResizeTransform(0, 1, 0, 0)

    @given(transforms(), transforms(), intrinsics_strategy())
    def test_compose_associative_dyadic(self, A, B, K):
        # dyadic entries keep every product exact in binary floating point
        K = Intrinsics(*(round(v * 8) / 8 for v in K.as_tuple()))
        assert apply_transform(A.compose(B), K) == apply_transform(A, apply_transform(B, K))

    @given(
        st.builds(
            CropResizeTransform,
            st.floats(0.1, 10),
            st.floats(0.1, 10),
            st.floats(-500, 500),
            st.floats(-500, 500),
        ),
        st.builds(
            CropResizeTransform,
            st.floats(0.1, 10),
            st.floats(0.1, 10),
            st.floats(-500, 500),
            st.floats(-500, 500),
        ),
        intrinsics_strategy(),
    )
    def test_compose_associative(self, A, B, K):
        lhs = apply_transform(A.compose(B), K).as_tuple()
        rhs = apply_transform(A, apply_transform(B, K)).as_tuple()
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-9)

    @given(transforms())
    def test_inverse(self, T):
        assert T.compose(T.inverse()).is_identity(tol=1e-12)

    def test_identity_is_neutral(self, K500):
        assert apply_transform(CropResizeTransform.identity(), K500) == K500

    def test_matrix_roundtrip(self):
        T = CropResizeTransform(2.0, 0.5, -3.0, 7.0)
        assert CropResizeTransform.from_matrix(T.matrix()) == T


class TestTransformField:
    def test_upscale_center(self):
        V = incidence_from_intrinsics(SimpleCamera(500, 640, 480).to_intrinsics(), 640, 480)
        out = transform_field(CropResizeTransform(2, 2, 0, 0), V, 1280, 960)
        np.testing.assert_array_equal(out.rays[480, 640], V.rays[240, 320])
        np.testing.assert_array_equal(out.rays[480, 640], [0, 0, 1])

    def test_integer_crop(self, K500):
        V = incidence_from_intrinsics(K500, 64, 48)
        out = transform_field(CropResizeTransform(1, 1, -10, -20), V, 30, 20)
        np.testing.assert_array_equal(out.rays[0, 0], V.rays[20, 10])

    def test_identity(self, K500):
        V = incidence_from_intrinsics(K500, 9, 7)
        np.testing.assert_array_equal(transform_field(CropResizeTransform.identity(), V, 9, 7).rays, V.rays)

    def test_coverage_error(self, K500):
        V = incidence_from_intrinsics(K500, 16, 16)
        with pytest.raises(CoverageError):
            transform_field(CropResizeTransform(1, 1, 5, 0), V, 16, 16)

    @given(transforms(scale=st.sampled_from([0.5, 1.0, 2.0]), offset=st.integers(-6, 0).map(float)))
    def test_matches_generated(self, T):
        # on pixels with an integral preimage, resampling equals generating from dK @ K
        K = Intrinsics(40.0, 50.0, 17.0, 11.0)
        w, h = 32, 24
        V = incidence_from_intrinsics(K, w, h)
        ow, oh = int((w - 1) * T.df_x + T.dc_x) + 1, int((h - 1) * T.df_y + T.dc_y) + 1
        out = transform_field(T, V, ow, oh)
        ref = incidence_from_intrinsics(apply_transform(T, K), ow, oh)
        xs = (np.arange(ow) - T.dc_x) / T.df_x
        ys = (np.arange(oh) - T.dc_y) / T.df_y
        jj = np.nonzero(xs == np.round(xs))[0]
        ii = np.nonzero(ys == np.round(ys))[0]
        np.testing.assert_allclose(out.rays[np.ix_(ii, jj)], ref.rays[np.ix_(ii, jj)], atol=1e-9, rtol=0)


class TestBackproject:
    def test_plane_residual(self, K500):
        scene = make_planar_scene(K500, 64, 48, planes=[Plane((0.3, -0.2, -1.0), 4.0)])
        cloud = backproject(scene.depth, scene.field)
        n = np.array(scene.planes[0].normal)
        assert np.max(np.abs(cloud.points @ n + scene.planes[0].offset)) < 1e-9
        assert len(cloud) == 64 * 48

    def test_skips_invalid_depth(self, K500):
        V = incidence_from_intrinsics(K500, 4, 3)
        d = np.ones((3, 4))
        d[0, 0] = np.nan
        d[1, 1] = -1
        cloud = backproject(d, V)
        assert len(cloud) == 10
        assert [0, 0] not in cloud.pixels.tolist()

    def test_shape_mismatch(self, K500):
        with pytest.raises(DimensionError):
            backproject(np.ones((3, 3)), incidence_from_intrinsics(K500, 4, 3))
