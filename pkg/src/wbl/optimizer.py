"""Constrained Willmore minimization with pinned boundary positions.

Two boundary modes: "navier" pins boundary positions and leaves the
conormal free; "clamped" additionally penalizes deviation of the
discrete conormal from prescribed unit targets with a quadratic penalty
(a hard conormal constraint has no discrete mechanism; the penalty
residual is reported instead).

The descent is projected steepest descent with Armijo backtracking over
interior vertex positions.  Connectivity is fixed: no remeshing, no
topology changes, so minimizers are sought within one discrete class.
The gradient is exact (algorithmic differentiation through the cotan
weights, mixed areas, and conormal construction) and is validated
against central finite differences in the test suite.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

import jax

jax.config.update("jax_enable_x64", True)

import jax.numpy as jnp  # noqa: E402

from .curvature import conormal_field, willmore_energy  # noqa: E402
from .errors import BoundaryMismatch, InvalidConfig, LineSearchFailed, NoBoundary  # noqa: E402
from .mesh import TriMesh, VertexField  # noqa: E402

__all__ = [
    "BoundaryCondition",
    "FlowConfig",
    "FlowTrace",
    "objective",
    "conormal_deviation",
    "objective_gradient",
    "minimize",
]


@dataclasses.dataclass(frozen=True)
class BoundaryCondition:
    """Boundary regime for the minimization.

    mode "navier": boundary vertex positions pinned, conormal free.
    mode "clamped": positions pinned and conormal deviation from
    ``target_conormals`` penalized with weight ``weight`` (> 0); targets
    are unit vectors aligned with ``vertex_indices``, which must equal
    the mesh's concatenated boundary-loop vertices.
    """

    mode: str = "navier"
    vertex_indices: np.ndarray | None = None
    target_conormals: np.ndarray | None = None
    weight: float = 1.0

    def __post_init__(self):
        if self.mode not in ("navier", "clamped"):
            raise InvalidConfig(f"unknown boundary mode {self.mode!r}")
        if self.mode == "clamped":
            if self.target_conormals is None or self.vertex_indices is None:
                raise InvalidConfig("clamped mode needs vertex_indices and target_conormals")
            if not self.weight > 0:
                raise InvalidConfig(f"clamped penalty weight must be positive, got {self.weight}")
            t = np.asarray(self.target_conormals, dtype=np.float64)
            lens = np.linalg.norm(t, axis=1)
            if not np.allclose(lens, 1.0, atol=1e-8):
                raise InvalidConfig("target conormals must be unit vectors")
            object.__setattr__(self, "target_conormals", t)
            object.__setattr__(
                self, "vertex_indices", np.asarray(self.vertex_indices, dtype=np.int64)
            )

    @classmethod
    def navier(cls):
        return cls(mode="navier")

    @classmethod
    def clamped_from_mesh(cls, mesh: TriMesh, weight=1.0):
        """Clamp to the mesh's current conormals (zero initial penalty)."""
        bd = conormal_field(mesh)
        return cls(
            mode="clamped",
            vertex_indices=bd.vertex_indices,
            target_conormals=bd.conormals,
            weight=weight,
        )


@dataclasses.dataclass(frozen=True)
class FlowConfig:
    """Descent parameters.

    ``eps_flow`` guards against face collapse: steps producing any face
    area below it are rejected; None means 1e-6 times the initial
    minimum face area.  ``preconditioner`` picks the descent metric:
    "sobolev" solves (S + M) M^-1 (S + M) d = -g with the cotan
    stiffness S and mixed-area mass M (an H^2 metric matching the
    fourth-order stiffness of the energy, with mesh-size-independent
    convergence); "mass" uses d = -g / A_i; "none" the raw gradient.
    All three are symmetric positive definite metrics, so every mode
    yields strict Armijo descent.
    """

    max_iters: int = 500
    initial_step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    grad_tol: float = 1e-8
    eps_flow: float | None = None
    min_step: float = 1e-20
    preconditioner: str = "sobolev"

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidConfig("max_iters must be >= 1")
        if not self.initial_step > 0:
            raise InvalidConfig("initial_step must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise InvalidConfig("backtrack factor must lie in (0, 1)")
        if not 0.0 < self.armijo < 1.0:
            raise InvalidConfig("armijo constant must lie in (0, 1)")
        if not self.grad_tol >= 0:
            raise InvalidConfig("grad_tol must be nonnegative")
        if self.eps_flow is not None and not self.eps_flow > 0:
            raise InvalidConfig("eps_flow must be positive")
        if self.preconditioner not in ("sobolev", "mass", "none"):
            raise InvalidConfig(f"unknown preconditioner {self.preconditioner!r}")


@dataclasses.dataclass(frozen=True)
class FlowTrace:
    """Per-iteration record of the descent.

    Row 0 is the initial state (step 0); each later row is one accepted
    step.  The objective column strictly decreases.  ``rejected_steps``
    counts all backtraking rejections, including the area guard.
    """

    objective: np.ndarray
    willmore: np.ndarray
    penalty: np.ndarray
    grad_norm: np.ndarray
    step: np.ndarray
    termination_reason: str
    rejected_steps: int

    def __len__(self):
        return len(self.objective)


def _check_boundary(mesh: TriMesh, bc: BoundaryCondition):
    if bc.mode == "clamped":
        bd = conormal_field(mesh)
        if not np.array_equal(bd.vertex_indices, bc.vertex_indices):
            raise BoundaryMismatch(
                "boundary condition indexes a different boundary vertex set"
            )
        return bd
    return None


def objective(mesh: TriMesh, bc: BoundaryCondition) -> float:
    """Willmore energy plus (clamped mode) the conormal penalty."""
    w = willmore_energy(mesh)
    if bc.mode == "navier":
        return w
    bd = _check_boundary(mesh, bc)
    diff = bd.conormals - bc.target_conormals
    dev = float(np.einsum("ij,ij->i", diff, diff) @ bd.dual_lengths)
    return w + 0.5 * bc.weight * dev


def conormal_deviation(mesh: TriMesh, bc: BoundaryCondition) -> float:
    """Sum of |co - co0|^2 times dual length over the boundary."""
    bd = _check_boundary(mesh, bc)
    diff = bd.conormals - bc.target_conormals
    return float(np.einsum("ij,ij->i", diff, diff) @ bd.dual_lengths)


# ---------------------------------------------------------------- jax mirror

def _energy_terms(pos, faces, interior):
    """Willmore energy of the positions; mirrors the numpy pipeline."""
    p = pos[faces]
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    areas = 0.5 * jnp.linalg.norm(jnp.cross(e2, -e1), axis=1)

    def cot(u, v):
        return jnp.einsum("ij,ij->i", u, v) / jnp.linalg.norm(jnp.cross(u, v), axis=1)

    cots = jnp.stack([cot(e2, -e1), cot(e0, -e2), cot(e1, -e0)], axis=1)
    l2 = jnp.stack(
        [jnp.sum(e0 * e0, axis=1), jnp.sum(e1 * e1, axis=1), jnp.sum(e2 * e2, axis=1)],
        axis=1,
    )
    contrib = (
        jnp.stack(
            [
                l2[:, 2] * cots[:, 2] + l2[:, 1] * cots[:, 1],
                l2[:, 0] * cots[:, 0] + l2[:, 2] * cots[:, 2],
                l2[:, 1] * cots[:, 1] + l2[:, 0] * cots[:, 0],
            ],
            axis=1,
        )
        / 8.0
    )
    obtuse = (cots < 0).any(axis=1)
    contrib = jnp.where(obtuse[:, None], areas[:, None] / 3.0, contrib)
    va = jnp.zeros(len(pos)).at[faces.ravel()].add(contrib.ravel())

    lp = jnp.zeros_like(pos)
    for k, (i, j) in enumerate(((1, 2), (2, 0), (0, 1))):
        w = 0.5 * cots[:, k, None]
        lp = lp.at[faces[:, i]].add(w * (pos[faces[:, j]] - pos[faces[:, i]]))
        lp = lp.at[faces[:, j]].add(w * (pos[faces[:, i]] - pos[faces[:, j]]))
    h = lp / (2.0 * va[:, None])
    h2 = jnp.sum(h * h, axis=1)
    return jnp.sum(jnp.where(interior, h2 * va, 0.0))


def _vertex_normals_jax(pos, faces):
    p = pos[faces]
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    cross = jnp.cross(e2, -e1)
    fn = cross / jnp.linalg.norm(cross, axis=1)[:, None]

    def ang(u, v):
        c = jnp.einsum("ij,ij->i", u, v)
        s = jnp.linalg.norm(jnp.cross(u, v), axis=1)
        return jnp.arctan2(s, c)

    angles = jnp.stack([ang(e2, -e1), ang(e0, -e2), ang(e1, -e0)], axis=1)
    w = angles[..., None] * fn[:, None, :]
    vn = jnp.zeros_like(pos).at[faces.ravel()].add(w.reshape(-1, 3))
    norm = jnp.linalg.norm(vn, axis=1)
    return vn / jnp.where(norm == 0, 1.0, norm)[:, None]


def _penalty_jax(pos, faces, bidx, bprev, bnext, targets, weight):
    vn = _vertex_normals_jax(pos, faces)
    here = pos[bidx]
    prev_p = pos[bprev]
    next_p = pos[bnext]
    ell = 0.5 * (
        jnp.linalg.norm(here - prev_p, axis=1) + jnp.linalg.norm(next_p - here, axis=1)
    )
    tangent = next_p - prev_p
    tangent = tangent / jnp.linalg.norm(tangent, axis=1)[:, None]
    co = jnp.cross(tangent, vn[bidx])
    co = co / jnp.linalg.norm(co, axis=1)[:, None]
    diff = co - targets
    return 0.5 * weight * jnp.sum(jnp.sum(diff * diff, axis=1) * ell)


_GRAD_CACHE: dict = {}


def _topology_arrays(mesh: TriMesh):
    """Static index arrays for the jax objective; boundary loops flattened."""
    loops = mesh.boundary_loops
    if loops:
        bidx = np.concatenate([lp.vertices for lp in loops])
        bprev = np.concatenate([np.roll(lp.vertices, 1) for lp in loops])
        bnext = np.concatenate([np.roll(lp.vertices, -1) for lp in loops])
    else:
        bidx = bprev = bnext = np.zeros(0, dtype=np.int64)
    return bidx, bprev, bnext


def _gradient_fn(mesh: TriMesh, mode: str):
    key = (mesh.vertex_count, mesh.faces.tobytes(), mode)
    fn = _GRAD_CACHE.get(key)
    if fn is not None:
        return fn
    faces = jnp.asarray(mesh.faces)
    interior = jnp.asarray(~mesh.is_boundary_vertex)
    bidx_np, bprev_np, bnext_np = _topology_arrays(mesh)
    bidx = jnp.asarray(bidx_np)
    bprev = jnp.asarray(bprev_np)
    bnext = jnp.asarray(bnext_np)

    if mode == "navier":

        def total(pos, targets, weight):
            return _energy_terms(pos, faces, interior)

    else:

        def total(pos, targets, weight):
            return _energy_terms(pos, faces, interior) + _penalty_jax(
                pos, faces, bidx, bprev, bnext, targets, weight
            )

    fn = jax.jit(jax.grad(total))
    _GRAD_CACHE[key] = fn
    return fn


def objective_gradient(mesh: TriMesh, bc: BoundaryCondition) -> VertexField:
    """Exact objective gradient, projected to interior vertices.

    Boundary rows are zero: positions there are constrained in both
    modes, so the descent direction lives in the interior subspace.
    """
    _check_boundary(mesh, bc)
    fn = _gradient_fn(mesh, bc.mode)
    if bc.mode == "clamped":
        g = fn(jnp.asarray(mesh.positions), jnp.asarray(bc.target_conormals), bc.weight)
    else:
        g = fn(jnp.asarray(mesh.positions), None, 0.0)
    g = np.array(g)
    g[mesh.is_boundary_vertex] = 0.0
    return VertexField(values=g, is_boundary=mesh.is_boundary_vertex)


def _face_area_min(pos, faces):
    p = pos[faces]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return 0.5 * float(np.linalg.norm(cross, axis=1).min())


def _cotan_stiffness(mesh: TriMesh):
    """PSD stiffness matrix S with (S p)_i = -(L p)_i."""
    f = mesh.faces
    cot = mesh.corner_cotans
    rows, cols, vals = [], [], []
    for k, (i, j) in enumerate(((1, 2), (2, 0), (0, 1))):
        w = 0.5 * cot[:, k]
        rows += [f[:, i], f[:, j], f[:, i], f[:, j]]
        cols += [f[:, j], f[:, i], f[:, i], f[:, j]]
        vals += [-w, -w, w, w]
    v = mesh.vertex_count
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(v, v),
    )


def _sobolev_solve(mesh: TriMesh, interior: np.ndarray):
    """Factorized interior H^2 metric (S + M) M^-1 (S + M)."""
    s = _cotan_stiffness(mesh)
    areas = mesh.vertex_areas
    m = sparse.diags(areas)
    sm = s + m
    p = (sm @ sparse.diags(1.0 / areas) @ sm).tocsc()[interior][:, interior]
    return splu(p)


def _descent_direction(mesh, g, pinned, preconditioner):
    d = np.zeros_like(g)
    free = ~pinned
    if preconditioner == "sobolev":
        d[free] = -_sobolev_solve(mesh, free).solve(g[free])
    elif preconditioner == "mass":
        d[free] = -g[free] / mesh.vertex_areas[free, None]
    else:
        d[free] = -g[free]
    return d


def minimize(mesh: TriMesh, bc: BoundaryCondition, config: FlowConfig | None = None):
    """Armijo-backtracking descent of the objective.

    Boundary vertices never move (bit-identical positions); face
    connectivity is untouched; any trial step that would push a face
    area below the collapse guard is rejected.  Terminates on gradient
    tolerance, iteration budget, or step underflow.

    Returns
    -------
    (mesh', FlowTrace)

    Raises
    ------
    LineSearchFailed
        No admissible step was ever accepted.  The exception carries the
        starting mesh and the one-row trace as ``mesh`` and ``trace``.
    """
    cfg = config or FlowConfig()
    if mesh.is_closed:
        raise NoBoundary("minimize needs a mesh with pinned boundary vertices")
    _check_boundary(mesh, bc)
    eps_flow = cfg.eps_flow
    if eps_flow is None:
        eps_flow = 1e-6 * float(mesh.face_areas.min())

    cur = mesh
    f_cur = objective(cur, bc)
    pinned = mesh.is_boundary_vertex

    rows_f, rows_w, rows_p, rows_g, rows_t = [], [], [], [], []
    rejected = 0
    accepted = 0
    reason = "max_iters"
    t_next = cfg.initial_step

    for _ in range(cfg.max_iters + 1):
        g = objective_gradient(cur, bc).values
        gnorm = float(np.sqrt(np.einsum("ij,ij->i", g, g)).max())
        w_cur = willmore_energy(cur)
        rows_f.append(f_cur)
        rows_w.append(w_cur)
        rows_p.append(f_cur - w_cur)
        rows_g.append(gnorm)
        rows_t.append(0.0 if accepted == 0 else t_last)

        if gnorm <= cfg.grad_tol:
            reason = "grad_tol"
            break
        if accepted + 1 > cfg.max_iters:
            reason = "max_iters"
            break

        d = _descent_direction(cur, g, pinned, cfg.preconditioner)
        slope = float(np.einsum("ij,ij->", g, d))  # < 0 off critical points

        t = t_next
        pos = cur.positions
        new = None
        while t >= cfg.min_step:
            cand = pos + t * d
            if _face_area_min(cand, mesh.faces) < eps_flow:
                rejected += 1
                t *= cfg.backtrack
                continue
            trial = cur.with_positions(cand)
            f_trial = objective(trial, bc)
            if f_trial <= f_cur + cfg.armijo * t * slope:
                new = trial
                break
            rejected += 1
            t *= cfg.backtrack

        if new is None:
            if accepted == 0:
                trace = _make_trace(
                    rows_f, rows_w, rows_p, rows_g, rows_t, "line_search_failed", rejected
                )
                err = LineSearchFailed(
                    "no admissible step above the underflow floor at the start point"
                )
                err.mesh = cur
                err.trace = trace
                raise err
            reason = "step_underflow"
            break

        cur, f_cur, t_last = new, f_trial, t
        accepted += 1
        t_next = min(cfg.initial_step, t / cfg.backtrack)

    return cur, _make_trace(rows_f, rows_w, rows_p, rows_g, rows_t, reason, rejected)


def _make_trace(f, w, p, g, t, reason, rejected):
    return FlowTrace(
        objective=np.asarray(f),
        willmore=np.asarray(w),
        penalty=np.asarray(p),
        grad_norm=np.asarray(g),
        step=np.asarray(t),
        termination_reason=reason,
        rejected_steps=rejected,
    )
