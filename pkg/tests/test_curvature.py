"""Mean curvature, Willmore energy, conormals, and integral identities."""

import numpy as np
import pytest

from conftest import bumpy_disk, hemisphere, rigid_motion
from wbl import (
    FieldLengthMismatch,
    MeshRecipe,
    NoBoundary,
    ZeroMixedArea,
    boundary_loops,
    catenoid_mesh,
    conormal_field,
    cylinder_mesh,
    first_variation_residual,
    flat_disk,
    gauss_bonnet_residual,
    icosphere,
    mean_curvature_vectors,
    second_form_norm_sq,
    willmore_energy,
)


class TestMeanCurvature:
    def test_unit_sphere_magnitude_and_direction(self, ico4):
        h = mean_curvature_vectors(ico4).values
        mag = np.linalg.norm(h, axis=1)
        assert np.max(np.abs(mag - 1.0)) < 5e-3
        # inward: against the position vector on a centered sphere
        inner = np.einsum("ij,ij->i", h, ico4.positions)
        assert np.all(inner < 0)

    def test_scaling_law(self, ico3):
        h1 = mean_curvature_vectors(ico3).values
        for lam in (0.1, 7.0):
            scaled = ico3.with_positions(lam * ico3.positions)
            h2 = mean_curvature_vectors(scaled).values
            assert np.max(np.abs(h2 - h1 / lam)) < 1e-10

    def test_flat_disk_interior_zero(self, disk24):
        h = mean_curvature_vectors(disk24).values
        interior = ~disk24.is_boundary_vertex
        assert np.max(np.linalg.norm(h[interior], axis=1)) < 1e-12

    def test_boundary_rows_are_zero(self):
        mesh = bumpy_disk()
        h = mean_curvature_vectors(mesh).values
        assert np.all(h[mesh.is_boundary_vertex] == 0.0)

    def test_zero_mixed_area_guard(self, disk24):
        mesh = disk24.with_positions(disk24.positions)
        areas = mesh.vertex_areas.copy()
        areas[np.flatnonzero(~mesh.is_boundary_vertex)[0]] = 0.0
        areas.setflags(write=False)
        mesh._cache["vertex_areas"] = areas
        with pytest.raises(ZeroMixedArea):
            mean_curvature_vectors(mesh)


class TestWillmoreEnergy:
    def test_sphere_value(self, ico4):
        w = willmore_energy(ico4)
        assert abs(w - 4 * np.pi) < 0.02 * 4 * np.pi

    def test_sphere_refinement_monotone(self):
        errs = []
        for s in range(2, 6):
            w = willmore_energy(icosphere(np.zeros(3), 1.0, s))
            errs.append(abs(w - 4 * np.pi))
        assert all(a > b for a, b in zip(errs, errs[1:]))

    def test_rigid_and_scale_invariance(self, rng):
        mesh = bumpy_disk()
        w = willmore_energy(mesh)
        for lam in (0.25, 1.0, 40.0):
            q, t = rigid_motion(rng)
            moved = mesh.with_positions(lam * (mesh.positions @ q.T) + t)
            assert abs(willmore_energy(moved) - w) < 1e-10 * max(w, 1.0)

    def test_flat_disk_zero(self, disk96):
        assert willmore_energy(disk96) < 1e-20

    def test_catenoid_near_zero_cylinder_larger(self, cat1):
        w_cat = willmore_energy(cat1)
        cyl = cylinder_mesh(1.0, 0.4, MeshRecipe(n_radial=64, n_axial=16))
        w_cyl = willmore_energy(cyl)
        assert w_cat < 0.01
        assert w_cyl > w_cat + 0.1


class TestConormals:
    def test_disk_conormals_radial(self, disk96):
        bd = conormal_field(disk96)
        p = disk96.positions[bd.vertex_indices]
        radial = p / np.linalg.norm(p, axis=1, keepdims=True)
        assert np.max(np.linalg.norm(bd.conormals - radial, axis=1)) < 1e-10

    def test_orthogonality_and_unit_length(self):
        mesh = bumpy_disk()
        bd = conormal_field(mesh)
        assert np.max(np.abs(np.einsum("ij,ij->i", bd.conormals, bd.tangents))) < 1e-8
        assert np.max(np.abs(np.linalg.norm(bd.conormals, axis=1) - 1)) < 1e-12
        assert np.max(np.abs(np.linalg.norm(bd.edge_conormals, axis=1) - 1)) < 1e-12

    def test_dual_lengths_partition_boundary(self):
        mesh = bumpy_disk()
        bd = conormal_field(mesh)
        assert abs(bd.total_length - mesh.boundary_length) < 1e-13 * mesh.boundary_length

    def test_cylinder_conormals_axial(self):
        cyl = cylinder_mesh(1.0, 0.5, MeshRecipe(n_radial=32, n_axial=6))
        bd = conormal_field(cyl)
        z = cyl.positions[bd.vertex_indices, 2]
        want = np.where(z > 0, 1.0, -1.0)
        assert np.max(np.abs(bd.conormals[:, 2] - want)) < 1e-10
        assert np.max(np.abs(bd.conormals[:, :2])) < 1e-10

    def test_hemisphere_conormals_downward(self):
        prev = None
        for s in (3, 4):
            mesh = hemisphere(s)
            bd = conormal_field(mesh)
            err = np.max(np.linalg.norm(bd.conormals - [0, 0, -1.0], axis=1))
            edge_err = np.max(np.linalg.norm(bd.edge_conormals - [0, 0, -1.0], axis=1))
            if prev is not None:
                assert err < 0.7 * prev  # first order in edge length
                assert edge_err < 0.7 * prev
            prev = err
        assert err < 0.06

    def test_hemisphere_conormal_mean_second_order(self):
        # the dual-length-weighted mean error is what line integrals see;
        # it should drop by ~4x per subdivision for both variants
        for field in ("conormals", "edge_conormals"):
            means = []
            for s in (3, 4):
                bd = conormal_field(hemisphere(s))
                w = bd.dual_lengths[:, None]
                err = getattr(bd, field) - [0, 0, -1.0]
                means.append(np.linalg.norm((w * err).sum(axis=0)) / bd.total_length)
            assert means[1] < 0.35 * means[0]

    def test_edge_conormal_rows_align_with_loops(self, disk24):
        bd = conormal_field(disk24)
        # per-edge conormal of edge (i -> succ) is orthogonal to that edge
        for start, stop in bd.loop_slices:
            idx = bd.vertex_indices[start:stop]
            nxt = np.roll(idx, -1)
            ev = disk24.positions[nxt] - disk24.positions[idx]
            ev /= np.linalg.norm(ev, axis=1, keepdims=True)
            dots = np.einsum("ij,ij->i", bd.edge_conormals[start:stop], ev)
            assert np.max(np.abs(dots)) < 1e-12

    def test_closed_mesh_raises(self, ico3):
        with pytest.raises(NoBoundary):
            conormal_field(ico3)


class TestIntegralIdentities:
    def test_gauss_bonnet(self, disk96, ico3):
        assert gauss_bonnet_residual(disk96) < 1e-10
        assert gauss_bonnet_residual(ico3) < 1e-10
        cyl = cylinder_mesh(1.0, 0.5, MeshRecipe(n_radial=32, n_axial=6))
        assert gauss_bonnet_residual(cyl) < 1e-10

    def test_second_form_on_sphere(self):
        errs = []
        for s in (3, 4):
            val = second_form_norm_sq(icosphere(np.zeros(3), 1.0, s))
            errs.append(abs(val - 8 * np.pi))
        assert errs[1] < errs[0]
        assert errs[1] < 0.02 * 8 * np.pi

    def test_second_form_flat_disk(self, disk96):
        assert abs(second_form_norm_sq(disk96)) < 1e-10

    def test_second_form_catenoid_positive(self, cat1):
        # |A|^2 = -2K on a minimal surface, so the integral is positive
        assert second_form_norm_sq(cat1) > 1.0

    def test_first_variation_zero_field(self, disk24):
        assert first_variation_residual(disk24, np.zeros((disk24.vertex_count, 3))) == 0.0

    def test_first_variation_constant_field_closed(self, ico4):
        x = np.tile([0.3, -1.1, 0.7], (ico4.vertex_count, 1))
        assert first_variation_residual(ico4, x) < 1e-10

    def test_first_variation_position_field_refines(self):
        res = []
        for n in (24, 48):
            mesh = flat_disk(1.0, MeshRecipe(n_radial=n, n_axial=max(4, n // 4)))
            res.append(first_variation_residual(mesh, mesh.positions))
        assert res[1] < res[0]
        assert res[1] < 0.05

    def test_first_variation_field_length(self, disk24):
        with pytest.raises(FieldLengthMismatch):
            first_variation_residual(disk24, np.zeros((3, 3)))
