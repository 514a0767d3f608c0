"""Objective, autodiff gradient, and constrained Willmore descent."""

import math

import numpy as np
import pytest

from conftest import bumpy_disk, rigid_motion
from wbl import (
    BoundaryCondition,
    BoundaryMismatch,
    FlowConfig,
    InvalidConfig,
    LineSearchFailed,
    MeshRecipe,
    NoBoundary,
    catenoid_mesh,
    conormal_deviation,
    conormal_field,
    cylinder_mesh,
    flat_disk,
    icosphere,
    minimize,
    objective,
    objective_gradient,
    truncated_sphere_mesh,
    willmore_energy,
)


def fd_gradient(mesh, bc, eps=1e-6):
    """Central differences on interior coordinates (boundary is pinned)."""
    base = mesh.positions
    g = np.zeros_like(base)
    interior = np.flatnonzero(~mesh.is_boundary_vertex)
    for i in interior:
        for k in range(3):
            plus = base.copy()
            plus[i, k] += eps
            minus = base.copy()
            minus[i, k] -= eps
            g[i, k] = (
                objective(mesh.with_positions(plus), bc)
                - objective(mesh.with_positions(minus), bc)
            ) / (2 * eps)
    return g


class TestBoundaryCondition:
    def test_bad_mode(self):
        with pytest.raises(InvalidConfig):
            BoundaryCondition(mode="dirichlet")

    def test_bad_weight(self, disk24):
        with pytest.raises(InvalidConfig):
            BoundaryCondition.clamped_from_mesh(disk24, weight=0.0)

    def test_non_unit_targets(self, disk24):
        bc = BoundaryCondition.clamped_from_mesh(disk24)
        with pytest.raises(InvalidConfig):
            BoundaryCondition(
                mode="clamped",
                vertex_indices=bc.vertex_indices,
                target_conormals=2.0 * bc.target_conormals,
                weight=1.0,
            )

    def test_mismatched_mesh(self, disk24):
        bc = BoundaryCondition.clamped_from_mesh(disk24)
        other = cylinder_mesh(1.0, 0.5, MeshRecipe(n_radial=16, n_axial=4))
        with pytest.raises(BoundaryMismatch):
            objective(other, bc)


class TestObjective:
    def test_navier_is_willmore(self):
        mesh = bumpy_disk()
        assert objective(mesh, BoundaryCondition.navier()) == willmore_energy(mesh)

    def test_clamped_matching_targets_adds_nothing(self):
        mesh = bumpy_disk()
        bc = BoundaryCondition.clamped_from_mesh(mesh, weight=10.0)
        assert abs(objective(mesh, bc) - willmore_energy(mesh)) < 1e-14
        assert conormal_deviation(mesh, bc) < 1e-28

    def test_clamped_flipped_targets_penalty(self, disk96):
        # |co - (-co)|^2 = 4 on every boundary vertex, so the deviation
        # integral is 4 * boundary length and the penalty is weight/2 of it
        bc0 = BoundaryCondition.clamped_from_mesh(disk96, weight=3.0)
        bc = BoundaryCondition(
            mode="clamped",
            vertex_indices=bc0.vertex_indices,
            target_conormals=-bc0.target_conormals,
            weight=3.0,
        )
        dev = conormal_deviation(disk96, bc)
        want_dev = 4.0 * disk96.boundary_length
        assert abs(dev - want_dev) < 1e-10 * want_dev
        pen = objective(disk96, bc) - willmore_energy(disk96)
        assert abs(pen - 0.5 * 3.0 * want_dev) < 1e-10 * want_dev


class TestGradient:
    def test_matches_finite_differences(self, rng):
        mesh = bumpy_disk(n_radial=12, n_axial=3, seed=None)
        for mode in ("navier", "clamped"):
            for trial in range(4):
                pos = mesh.positions.copy()
                interior = ~mesh.is_boundary_vertex
                pos[interior] += 0.03 * rng.standard_normal((interior.sum(), 3))
                m = mesh.with_positions(pos)
                if mode == "navier":
                    bc = BoundaryCondition.navier()
                else:
                    bc = BoundaryCondition.clamped_from_mesh(
                        bumpy_disk(amplitude=0.3, n_radial=12, n_axial=3, seed=None),
                        weight=2.0,
                    )
                g = objective_gradient(m, bc).values
                fd = fd_gradient(m, bc)
                rel = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-30)
                assert rel < 1e-5, (mode, trial, rel)

    def test_boundary_rows_zero(self):
        mesh = bumpy_disk()
        g = objective_gradient(mesh, BoundaryCondition.navier()).values
        assert np.all(g[mesh.is_boundary_vertex] == 0.0)

    def test_flat_disk_is_critical(self, disk24):
        g = objective_gradient(disk24, BoundaryCondition.navier()).values
        assert np.max(np.abs(g)) < 1e-12

    def test_translation_equivariance(self):
        mesh = bumpy_disk()
        g1 = objective_gradient(mesh, BoundaryCondition.navier()).values
        moved = mesh.with_positions(mesh.positions + [2.0, -1.0, 0.5])
        g2 = objective_gradient(moved, BoundaryCondition.navier()).values
        assert np.max(np.abs(g1 - g2)) < 1e-10

    def test_rotation_equivariance(self, rng):
        mesh = bumpy_disk()
        q, _ = rigid_motion(rng)
        g1 = objective_gradient(mesh, BoundaryCondition.navier()).values
        rot = mesh.with_positions(mesh.positions @ q.T)
        g2 = objective_gradient(rot, BoundaryCondition.navier()).values
        assert np.max(np.abs(g2 - g1 @ q.T)) < 1e-10


class TestMinimize:
    def test_strict_descent_and_invariants(self):
        mesh = bumpy_disk(amplitude=0.25)
        cfg = FlowConfig(max_iters=25, grad_tol=1e-12)
        out, trace = minimize(mesh, BoundaryCondition.navier(), cfg)
        f = trace.objective
        assert all(a > b for a, b in zip(f, f[1:]))
        assert np.array_equal(
            out.positions[out.is_boundary_vertex],
            mesh.positions[mesh.is_boundary_vertex],
        )
        assert np.array_equal(out.faces, mesh.faces)
        assert trace.termination_reason in ("max_iters", "grad_tol")
        assert len(trace) == len(trace.grad_norm)

    def test_flat_disk_terminates_immediately(self, disk24):
        out, trace = minimize(disk24, BoundaryCondition.navier(), FlowConfig())
        assert trace.termination_reason == "grad_tol"
        assert len(trace) == 1
        assert np.array_equal(out.positions, disk24.positions)

    def test_willmore_drops_toward_catenoid_level(self):
        # truncated-sphere initialization below the critical height should
        # shed most of its energy (the minimizer is near the catenoid)
        R, h = 1.0, 0.4
        start = truncated_sphere_mesh(R, h, MeshRecipe(n_radial=24, n_axial=10))
        cfg = FlowConfig(max_iters=60, grad_tol=1e-10)
        out, trace = minimize(start, BoundaryCondition.navier(), cfg)
        assert trace.willmore[-1] < 0.2 * trace.willmore[0]

    def test_clamped_deviation_shrinks_with_weight(self):
        # stronger clamping pulls the boundary conormals toward targets
        R, h = 1.0, 0.4
        start = truncated_sphere_mesh(R, h, MeshRecipe(n_radial=20, n_axial=8))
        cat = catenoid_mesh(R, h, MeshRecipe(n_radial=20, n_axial=8))
        devs = []
        for w in (1.0, 10.0, 100.0):
            bc = BoundaryCondition.clamped_from_mesh(cat, weight=w)
            out, _ = minimize(start, bc, FlowConfig(max_iters=80, grad_tol=1e-12))
            devs.append(conormal_deviation(out, bc))
        assert devs[0] > devs[1] > devs[2]

    def test_line_search_failure_carries_state(self):
        mesh = bumpy_disk(amplitude=0.3)
        cfg = FlowConfig(max_iters=10, eps_flow=1e9)  # every step collapses a face
        with pytest.raises(LineSearchFailed) as info:
            minimize(mesh, BoundaryCondition.navier(), cfg)
        err = info.value
        assert np.array_equal(err.mesh.positions, mesh.positions)
        assert len(err.trace) == 1
        assert err.trace.termination_reason == "line_search_failed"

    def test_closed_mesh_rejected(self, ico3):
        with pytest.raises(NoBoundary):
            minimize(ico3, BoundaryCondition.navier(), FlowConfig(max_iters=1))

    def test_preconditioner_options(self):
        mesh = bumpy_disk(amplitude=0.2, n_radial=12, n_axial=3)
        drops = {}
        for pre in ("sobolev", "mass", "none"):
            cfg = FlowConfig(max_iters=12, preconditioner=pre, grad_tol=1e-14)
            _, trace = minimize(mesh, BoundaryCondition.navier(), cfg)
            drops[pre] = trace.objective[0] - trace.objective[-1]
            assert drops[pre] >= 0.0
        # the H2-type metric makes far more progress per iteration
        assert drops["sobolev"] > drops["mass"]

    def test_config_validation(self):
        with pytest.raises(InvalidConfig):
            FlowConfig(backtrack=1.5)
        with pytest.raises(InvalidConfig):
            FlowConfig(armijo=0.0)
        with pytest.raises(InvalidConfig):
            FlowConfig(preconditioner="newton")
        with pytest.raises(InvalidConfig):
            FlowConfig(max_iters=0)


class TestJaxNumpyConsistency:
    def test_energy_terms_match(self):
        from wbl.optimizer import _energy_terms

        mesh = bumpy_disk(amplitude=0.22)
        w_jax = float(
            _energy_terms(mesh.positions, mesh.faces, ~mesh.is_boundary_vertex)
        )
        assert abs(w_jax - willmore_energy(mesh)) < 1e-12 * max(w_jax, 1.0)
