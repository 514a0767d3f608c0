"""Point sampling, Hausdorff distance, shape fits, and component counts."""

import math

import numpy as np
import pytest

from conftest import rigid_motion
from wbl import (
    DegenerateSample,
    EmptySample,
    MeshRecipe,
    PointSample,
    connected_components,
    flat_disk,
    gamma_Rh_samples,
    hausdorff_distance,
    icosphere,
    plane_fit,
    rescale_diagnostics,
    sphere_fit,
)


class TestPointSample:
    def test_from_mesh_counts(self, disk24):
        s = PointSample.from_mesh(disk24)
        want = disk24.vertex_count + len(disk24.edges) + disk24.face_count
        assert s.points.shape == (want, 3)
        assert s.density > 0

    def test_from_points_density(self):
        pts = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])
        s = PointSample.from_points(pts)
        assert s.density == 1.0

    def test_empty_raises(self):
        with pytest.raises(EmptySample):
            PointSample.from_points(np.empty((0, 3)))


class TestHausdorff:
    def test_identity_and_symmetry(self, disk24, rng):
        a = PointSample.from_mesh(disk24)
        assert hausdorff_distance(a, a) == 0.0
        pts = rng.standard_normal((40, 3))
        b = PointSample.from_points(pts)
        assert hausdorff_distance(a, b) == hausdorff_distance(b, a)

    def test_triangle_inequality(self, rng):
        samples = [
            PointSample.from_points(rng.standard_normal((30, 3)) + shift)
            for shift in ([0, 0, 0], [1, 0.5, 0], [-0.5, 2, 1])
        ]
        a, b, c = samples
        dab = hausdorff_distance(a, b)
        dbc = hausdorff_distance(b, c)
        dac = hausdorff_distance(a, c)
        assert dac <= dab + dbc + 1e-15

    def test_concentric_spheres(self):
        a = PointSample.from_mesh(icosphere(np.zeros(3), 1.0, 3))
        b = PointSample.from_mesh(icosphere(np.zeros(3), 2.0, 3))
        d = hausdorff_distance(a, b)
        assert abs(d - 1.0) <= max(a.density, b.density)

    def test_accepts_raw_arrays(self):
        a = np.array([[0.0, 0, 0]])
        b = np.array([[3.0, 4, 0]])
        assert hausdorff_distance(a, b) == 5.0


class TestSphereFit:
    def test_exact_recovery_under_rigid_motion(self, rng):
        base = icosphere(np.zeros(3), 1.3, 2).positions
        for _ in range(5):
            q, t = rigid_motion(rng)
            center = rng.standard_normal(3)
            fit = sphere_fit((base * 2.0) @ q.T + t + center)
            assert fit.kind == "sphere"
            assert abs(fit.radius - 2.6) < 1e-9
            assert np.linalg.norm(fit.center - (t + center)) < 1e-9
            assert fit.rms_residual < 1e-9

    def test_noisy_sphere_residuals(self, rng):
        pts = icosphere(np.zeros(3), 1.0, 3).positions.copy()
        pts += 1e-3 * rng.standard_normal(pts.shape)
        fit = sphere_fit(pts)
        assert abs(fit.radius - 1.0) < 5e-3
        assert fit.rms_residual < 5e-3
        assert fit.max_residual >= fit.rms_residual

    def test_too_few_points(self):
        with pytest.raises(DegenerateSample):
            sphere_fit(np.eye(3))

    def test_coplanar_rejected(self, rng):
        pts = np.column_stack(
            [rng.standard_normal(50), rng.standard_normal(50), np.zeros(50)]
        )
        with pytest.raises(DegenerateSample):
            sphere_fit(pts)


class TestPlaneFit:
    def test_exact_plane(self, rng):
        normal = np.array([1.0, 2.0, -2.0]) / 3.0
        u = np.array([2.0, -1.0, 0.0]) / math.sqrt(5)
        v = np.cross(normal, u)
        coef = rng.standard_normal((60, 2))
        pts = 0.7 * normal + coef[:, :1] * u + coef[:, 1:] * v
        fit = plane_fit(pts)
        assert fit.kind == "plane"
        assert abs(abs(fit.normal @ normal) - 1.0) < 1e-12
        assert fit.rms_residual < 1e-12
        assert abs(abs(fit.offset) - 0.7) < 1e-12

    def test_collinear_rejected(self):
        pts = np.outer(np.linspace(0, 1, 20), [1.0, 1.0, 0.0])
        with pytest.raises(DegenerateSample):
            plane_fit(pts)


class TestConnectedComponents:
    def test_single_disk(self, disk24):
        count, labels = connected_components(disk24)
        assert count == 1
        assert len(labels) == disk24.vertex_count

    def test_far_curve_separate(self, disk24):
        top, _ = gamma_Rh_samples(1.0, 9.0, 32)
        count, labels = connected_components(disk24, extra_curves=(top,))
        assert count == 2
        assert len(labels) == disk24.vertex_count + 32
        # all curve samples share one label distinct from the mesh label
        assert len(set(labels[disk24.vertex_count :].tolist())) == 1
        assert labels[0] != labels[-1]

    def test_touching_curve_glued(self, disk24):
        # rim circle of the disk itself: every sample is near a rim vertex
        theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        rim = np.column_stack([np.cos(theta), np.sin(theta), np.zeros(64)])
        count, _ = connected_components(disk24, extra_curves=(rim,))
        assert count == 1

    def test_monotone_in_glue_tol(self, disk24):
        top, _ = gamma_Rh_samples(1.0, 2.0, 32)
        counts = [
            connected_components(disk24, extra_curves=(top,), glue_tol=g)[0]
            for g in (0.1, 0.5, 1.0, 2.5, 6.0)
        ]
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        assert counts[0] == 2
        assert counts[-1] == 1


class TestRescaleDiagnostics:
    def test_by_diameter_sphere(self):
        mesh = icosphere(np.array([1.0, -2.0, 0.5]), 3.0, 3)
        rep = rescale_diagnostics(mesh, mode="by_diameter")
        assert abs(rep.rescaled.diameter - 1.0) < 1e-12
        assert abs(rep.fitted_diameter - 1.0) < 5e-3
        assert rep.fit.kind == "sphere"
        assert abs(rep.willmore_gap) < 0.02 * 4 * math.pi
        assert rep.boundary_ratio == 0.0

    def test_by_h_flat_disk(self):
        mesh = flat_disk(1.0, MeshRecipe(n_radial=24, n_axial=5))
        rep = rescale_diagnostics(mesh, mode="by_h", h=4.0)
        assert rep.fit.kind == "plane"
        assert abs(abs(rep.fit.normal[2]) - 1.0) < 1e-10
        assert rep.boundary_ratio > 0.0

    def test_by_h_requires_h(self, disk24):
        with pytest.raises(ValueError):
            rescale_diagnostics(disk24, mode="by_h")

    def test_unknown_mode(self, disk24):
        with pytest.raises(ValueError):
            rescale_diagnostics(disk24, mode="by_volume")
