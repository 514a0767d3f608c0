"""Monotone area-ratio diagnostics with boundary remainder.

The central object is the quantity

    A(rho) = mu(B_rho(p0)) / rho^2  +  1/4 int_{B_rho} |H|^2
           + int_{B_rho} <H, p - p0> / rho^2  +  T(p0, rho)

whose boundary remainder T is a line integral over the boundary clipped
to the ball.  For smooth surfaces rho -> A(rho) is non-decreasing; the
discrete evaluators below realize each component so that the identity
and its limits can be checked numerically on meshes.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .curvature import conormal_field, mean_curvature_vectors, willmore_energy
from .errors import (
    BasePointOffSurface,
    BasePointOnBoundary,
    Disconnected,
    NoBoundary,
    NonpositiveRadius,
)
from .mesh import TriMesh

__all__ = [
    "MonotoneProfile",
    "MonotoneQuantity",
    "ball_area",
    "monotone_quantity",
    "monotone_profile",
    "density_at",
    "annulus_defect_integral",
    "boundary_inverse_square_integral",
    "lemma21_residual",
    "lower_bound_gap",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)


@dataclasses.dataclass(frozen=True)
class MonotoneQuantity:
    """A(rho) at a single radius, with its four components."""

    rho: float
    area_ratio: float
    energy_term: float
    curvature_remainder: float
    boundary_remainder: float

    @property
    def total(self):
        return (
            self.area_ratio
            + self.energy_term
            + self.curvature_remainder
            + self.boundary_remainder
        )


@dataclasses.dataclass(frozen=True)
class MonotoneProfile:
    """Sampled (rho, A(rho)) curve and its monotonicity violations.

    ``violations`` lists (index, rho_k, rho_{k+1}, drop) for consecutive
    pairs where the total decreases by more than ``tau``.
    """

    base_point: np.ndarray
    radii: np.ndarray
    area_ratio: np.ndarray
    energy_term: np.ndarray
    curvature_remainder: np.ndarray
    boundary_remainder: np.ndarray
    totals: np.ndarray
    tau: float
    violations: tuple


def _fragment_areas(frags):
    """Areas of triangle fragments (N, 3, 3), same formula as face areas."""
    cross = np.cross(frags[:, 1] - frags[:, 0], frags[:, 2] - frags[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def _fragment_diameters(frags):
    e = np.stack(
        [
            frags[:, 1] - frags[:, 0],
            frags[:, 2] - frags[:, 1],
            frags[:, 0] - frags[:, 2],
        ],
        axis=1,
    )
    return np.sqrt(np.einsum("nkj,nkj->nk", e, e).max(axis=1))


def ball_area(mesh: TriMesh, p0, rho, delta_clip=None) -> float:
    """Area of the mesh inside the ball B_rho(p0).

    Faces straddling the sphere are subdivided recursively until each
    fragment has diameter below ``delta_clip`` (default rho/200), then
    classified by centroid.  Fully inside/outside fragments are resolved
    without subdivision, so a ball containing the whole mesh returns the
    exact total area.

    Raises
    ------
    NonpositiveRadius
    """
    if not rho > 0:
        raise NonpositiveRadius(f"ball radius must be positive, got {rho}")
    if delta_clip is None:
        delta_clip = rho / 200.0
    p0 = np.asarray(p0, dtype=np.float64).reshape(3)

    work = mesh.positions[mesh.faces]
    total = 0.0
    while len(work):
        d = np.linalg.norm(work - p0, axis=2)
        diam = _fragment_diameters(work)
        # distance to p0 is convex, so the max over a triangle sits at a
        # vertex; the min is bounded below by min vertex distance - diam
        inside = d.max(axis=1) <= rho
        outside = d.min(axis=1) - diam >= rho
        if inside.any():
            total += float(_fragment_areas(work[inside]).sum())
        straddle = ~inside & ~outside
        work = work[straddle]
        diam = diam[straddle]
        if not len(work):
            break
        small = diam < delta_clip
        if small.any():
            frag = work[small]
            cent_in = np.linalg.norm(frag.mean(axis=1) - p0, axis=1) < rho
            if cent_in.any():
                total += float(_fragment_areas(frag[cent_in]).sum())
        big = work[~small]
        if not len(big):
            break
        a, b, c = big[:, 0], big[:, 1], big[:, 2]
        ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
        work = np.concatenate(
            [
                np.stack([a, ab, ca], axis=1),
                np.stack([ab, b, bc], axis=1),
                np.stack([ca, bc, c], axis=1),
                np.stack([ab, bc, ca], axis=1),
            ]
        )
    return total


def _boundary_ball_line_integral(mesh, p0, rho, bd=None):
    """T(p0, rho): half-integral of (1/|q-p0|^2 - 1/rho^2) <q-p0, co>
    over boundary edges clipped to the ball.  Exactly zero when no edge
    reaches the ball."""
    if mesh.is_closed:
        return 0.0
    if bd is None:
        bd = conormal_field(mesh)
    total = 0.0
    pos = mesh.positions
    for start, stop in bd.loop_slices:
        idx = bd.vertex_indices[start:stop]
        eco = bd.edge_conormals[start:stop]
        a = pos[idx]
        b = pos[np.roll(idx, -1)]
        d = b - a
        rel = a - p0
        qa = np.einsum("ij,ij->i", d, d)
        qb = 2.0 * np.einsum("ij,ij->i", rel, d)
        qc = np.einsum("ij,ij->i", rel, rel) - rho * rho
        disc = qb * qb - 4.0 * qa * qc
        hit = disc > 0
        if not hit.any():
            continue
        sq = np.sqrt(disc[hit])
        t0 = np.clip((-qb[hit] - sq) / (2.0 * qa[hit]), 0.0, 1.0)
        t1 = np.clip((-qb[hit] + sq) / (2.0 * qa[hit]), 0.0, 1.0)
        seg = t1 > t0
        if not seg.any():
            continue
        ai, di = a[hit][seg], d[hit][seg]
        co_e = eco[hit][seg]
        t0, t1 = t0[seg], t1[seg]
        length = np.linalg.norm(di, axis=1)
        for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
            t = 0.5 * (t1 + t0) + 0.5 * (t1 - t0) * node
            q = ai + t[:, None] * di
            co_t = co_e
            r2 = np.einsum("ij,ij->i", q - p0, q - p0)
            integrand = (1.0 / r2 - 1.0 / rho**2) * np.einsum(
                "ij,ij->i", q - p0, co_t
            )
            total += 0.5 * float(
                (weight * 0.5 * (t1 - t0) * length * integrand).sum()
            )
    return total


def monotone_quantity(mesh: TriMesh, p0, rho, delta_clip=None) -> MonotoneQuantity:
    """A(rho) at one radius with all four components.

    The area term clips faces to the ball; the energy and curvature
    terms sum over interior vertices inside the ball; the boundary
    remainder is a quadrature over boundary edges clipped to the ball
    (exactly zero when the ball misses the boundary).

    Raises
    ------
    NonpositiveRadius
    BasePointOnBoundary
        p0 is within 1e-6 * diameter of a boundary vertex.
    """
    if not rho > 0:
        raise NonpositiveRadius(f"ball radius must be positive, got {rho}")
    p0 = np.asarray(p0, dtype=np.float64).reshape(3)
    if not mesh.is_closed:
        bidx = mesh.boundary_vertex_indices
        dist = np.linalg.norm(mesh.positions[bidx] - p0, axis=1).min()
        if dist <= 1e-6 * mesh.bbox_diagonal:
            raise BasePointOnBoundary(
                f"base point {p0.tolist()} lies on the boundary curve"
            )
    area = ball_area(mesh, p0, rho, delta_clip=delta_clip)
    h = mean_curvature_vectors(mesh).values
    interior = ~mesh.is_boundary_vertex
    rel = mesh.positions - p0
    in_ball = np.einsum("ij,ij->i", rel, rel) < rho * rho
    sel = interior & in_ball
    areas = mesh.vertex_areas
    h2 = np.einsum("ij,ij->i", h[sel], h[sel])
    energy = 0.25 * float(h2 @ areas[sel])
    curv = float(np.einsum("ij,ij->i", h[sel], rel[sel]) @ areas[sel]) / rho**2
    boundary = _boundary_ball_line_integral(mesh, p0, rho)
    return MonotoneQuantity(
        rho=float(rho),
        area_ratio=area / rho**2,
        energy_term=energy,
        curvature_remainder=curv,
        boundary_remainder=boundary,
    )


def monotone_profile(mesh: TriMesh, p0, rho_list, tau=None) -> MonotoneProfile:
    """Sample A(rho) over an increasing radius schedule.

    ``tau`` defaults to 1% of the largest |A| in the profile; violations
    are consecutive pairs where the total drops by more than tau.
    """
    radii = np.asarray(rho_list, dtype=np.float64)
    if len(radii) == 0:
        raise NonpositiveRadius("radius schedule is empty")
    if (radii <= 0).any():
        raise NonpositiveRadius("radius schedule must be positive")
    if (np.diff(radii) <= 0).any():
        raise ValueError("radius schedule must be strictly increasing")
    rows = [monotone_quantity(mesh, p0, r) for r in radii]
    totals = np.array([q.total for q in rows])
    if tau is None:
        tau = 1e-2 * float(np.abs(totals).max())
    violations = []
    for k in range(len(radii) - 1):
        drop = totals[k] - totals[k + 1]
        if drop > tau:
            violations.append((k, float(radii[k]), float(radii[k + 1]), float(drop)))
    return MonotoneProfile(
        base_point=np.asarray(p0, dtype=np.float64).reshape(3),
        radii=radii,
        area_ratio=np.array([q.area_ratio for q in rows]),
        energy_term=np.array([q.energy_term for q in rows]),
        curvature_remainder=np.array([q.curvature_remainder for q in rows]),
        boundary_remainder=np.array([q.boundary_remainder for q in rows]),
        totals=totals,
        tau=float(tau),
        violations=tuple(violations),
    )


def _point_triangle_distance(p, tri):
    """Min distance from a point to each triangle in (F, 3, 3)."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    closest = np.empty_like(a)
    done = np.zeros(len(tri), dtype=bool)

    def assign(mask, pts):
        m = mask & ~done
        closest[m] = pts[m]
        done[m] = True

    assign((d1 <= 0) & (d2 <= 0), a)  # vertex a
    assign((d3 >= 0) & (d4 <= d3), b)  # vertex b
    assign((d6 >= 0) & (d5 <= d6), c)  # vertex c
    vc = d1 * d4 - d3 * d2
    t = np.divide(d1, d1 - d3, out=np.zeros_like(d1), where=(d1 - d3) != 0)
    assign((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + t[:, None] * ab)  # edge ab
    vb = d5 * d2 - d1 * d6
    t = np.divide(d2, d2 - d6, out=np.zeros_like(d2), where=(d2 - d6) != 0)
    assign((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + t[:, None] * ac)  # edge ac
    va = d3 * d6 - d5 * d4
    t = np.divide(
        d4 - d3, (d4 - d3) + (d5 - d6), out=np.zeros_like(d4),
        where=((d4 - d3) + (d5 - d6)) != 0,
    )
    assign((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), b + t[:, None] * (c - b))
    denom = va + vb + vc
    v = np.divide(vb, denom, out=np.zeros_like(vb), where=denom != 0)
    w = np.divide(vc, denom, out=np.zeros_like(vc), where=denom != 0)
    assign(~done, a + v[:, None] * ab + w[:, None] * ac)  # interior
    return np.linalg.norm(p - closest, axis=1)


def _snap_to_interior_vertex(mesh: TriMesh, p0):
    """Nearest interior vertex index; rejects off-surface and boundary p0."""
    p0 = np.asarray(p0, dtype=np.float64).reshape(3)
    dist_surface = _point_triangle_distance(p0, mesh.positions[mesh.faces]).min()
    if dist_surface > 1e-6 * mesh.bbox_diagonal:
        raise BasePointOffSurface(
            f"base point is {dist_surface:g} away from the surface"
        )
    i0 = int(np.argmin(np.linalg.norm(mesh.positions - p0, axis=1)))
    if mesh.is_boundary_vertex[i0]:
        raise BasePointOnBoundary("base point snaps to a boundary vertex")
    return i0


def _local_delta(mesh: TriMesh, i0):
    incident = (mesh.edges == i0).any(axis=1)
    e = mesh.edges[incident]
    lengths = np.linalg.norm(mesh.positions[e[:, 0]] - mesh.positions[e[:, 1]], axis=1)
    return 2.0 * float(lengths.mean())


def density_at(mesh: TriMesh, p0) -> float:
    """Area density mu(B_sigma)/(pi sigma^2) extrapolated to sigma -> 0.

    The base point snaps to the nearest interior vertex; the ratio is
    sampled at sigma = delta, 2 delta, 4 delta with delta twice the mean
    incident edge length there, then Richardson-extrapolated twice
    (second order).  Exactly 1 in the smooth limit at embedded interior
    points; a mesh cannot represent higher multiplicity.

    Raises
    ------
    BasePointOffSurface, BasePointOnBoundary
    """
    i0 = _snap_to_interior_vertex(mesh, p0)
    p0 = mesh.positions[i0]
    delta = _local_delta(mesh, i0)
    f = [
        ball_area(mesh, p0, s) / (np.pi * s * s)
        for s in (delta, 2.0 * delta, 4.0 * delta)
    ]
    g1 = (4.0 * f[0] - f[1]) / 3.0
    g2 = (4.0 * f[1] - f[2]) / 3.0
    return (16.0 * g1 - g2) / 15.0


def annulus_defect_integral(mesh: TriMesh, p0, sigma, rho=None) -> float:
    """Integral of |H/2 + (p-p0)^perp / |p-p0|^2|^2 over an annulus.

    Vertex sum over sigma <= |p_i - p0| < rho (rho None means no outer
    cut); (p-p0)^perp projects onto the vertex normal.  Boundary
    vertices are skipped: the cotan curvature is undefined there and the
    strip they carry has vanishing measure under refinement.  This is
    the integrand whose nonnegativity drives the monotonicity of
    A(rho): A(rho) - A(sigma) equals this integral in the smooth limit.
    """
    p0 = np.asarray(p0, dtype=np.float64).reshape(3)
    if not sigma > 0:
        raise NonpositiveRadius(f"annulus needs sigma > 0, got {sigma}")
    h = mean_curvature_vectors(mesh).values
    normals = mesh.vertex_normals
    rel = mesh.positions - p0
    r2 = np.einsum("ij,ij->i", rel, rel)
    keep = (r2 >= sigma * sigma) & ~mesh.is_boundary_vertex
    if rho is not None:
        keep &= r2 < rho * rho
    perp = np.einsum("ij,ij->i", rel, normals)[:, None] * normals
    integrand = h[keep] / 2.0 + perp[keep] / r2[keep, None]
    return float(np.einsum("ij,ij->i", integrand, integrand) @ mesh.vertex_areas[keep])


def lemma21_residual(mesh: TriMesh, p0) -> float:
    """Defect of the density identity at an on-surface base point.

    LHS: 4 pi times the extrapolated density limit of area/(pi sigma^2)
    plus four times the surface integral of |H/2 + (p-p0)^perp /
    |p-p0|^2|^2 outside a small exclusion ball.  RHS: Willmore energy
    plus twice the boundary integral of <(p-p0)/|p-p0|^2, co>.  The two
    sides agree in the smooth limit; the return value |LHS - RHS|
    converges to zero under refinement.

    The base point snaps to the nearest mesh vertex; the exclusion and
    extrapolation radius is delta = 2 x mean incident edge length there.

    Raises
    ------
    BasePointOffSurface
        p0 is farther than 1e-6 * diameter from the surface.
    BasePointOnBoundary
        The snapped vertex lies on the boundary.
    """
    i0 = _snap_to_interior_vertex(mesh, p0)
    p0 = mesh.positions[i0]
    delta = _local_delta(mesh, i0)
    density = density_at(mesh, p0)
    lhs = 4.0 * np.pi * density + 4.0 * annulus_defect_integral(mesh, p0, delta)
    rhs = willmore_energy(mesh)
    if not mesh.is_closed:
        rhs += 2.0 * boundary_inverse_square_integral(mesh, p0)
    return abs(lhs - rhs)


def boundary_inverse_square_integral(mesh, p0, bd=None):
    """Line integral over the boundary of <(q - p0)/|q - p0|^2, co> dl.

    Gauss-Legendre quadrature per boundary edge with linearly
    interpolated conormals; this is the boundary term on the right side
    of the density identity, and the rho -> infinity limit of twice the
    boundary remainder T(p0, rho).
    """
    if bd is None:
        bd = conormal_field(mesh)
    pos = mesh.positions
    total = 0.0
    for start, stop in bd.loop_slices:
        idx = bd.vertex_indices[start:stop]
        co_e = bd.edge_conormals[start:stop]
        a = pos[idx]
        b = pos[np.roll(idx, -1)]
        d = b - a
        length = np.linalg.norm(d, axis=1)
        for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
            t = 0.5 + 0.5 * node
            q = a + t * d
            r2 = np.einsum("ij,ij->i", q - p0, q - p0)
            total += float(
                (0.5 * weight * length * np.einsum("ij,ij->i", q - p0, co_e) / r2).sum()
            )
    return total


def lower_bound_gap(mesh: TriMesh) -> float:
    """W + 2 length(boundary) / d(surface, boundary) - 4 pi.

    Nonnegative in the smooth limit; small negative values on coarse
    meshes are discretization artifacts and are returned as-is.

    Raises
    ------
    NoBoundary, Disconnected
    """
    if mesh.is_closed:
        raise NoBoundary("lower bound gap needs a boundary")
    if mesh.vertex_component_count() != 1:
        raise Disconnected("lower bound gap needs a connected mesh")
    w = willmore_energy(mesh)
    length = mesh.boundary_length

    pos = mesh.positions
    mids = 0.5 * (pos[mesh.edges[:, 0]] + pos[mesh.edges[:, 1]])
    bary = pos[mesh.faces].mean(axis=1)
    samples = np.vstack([pos, mids, bary])

    segs = []
    for lp in mesh.boundary_loops:
        e = lp.edges
        segs.append(np.stack([pos[e[:, 0]], pos[e[:, 1]]], axis=1))
    segs = np.concatenate(segs)
    a, b = segs[:, 0], segs[:, 1]
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    far = 0.0
    for i in range(0, len(samples), 2048):
        x = samples[i : i + 2048]
        rel = x[:, None, :] - a[None, :, :]
        t = np.einsum("sej,ej->se", rel, d) / dd[None, :]
        np.clip(t, 0.0, 1.0, out=t)
        diff = rel - t[:, :, None] * d[None, :, :]
        dist = np.sqrt(np.einsum("sej,sej->se", diff, diff)).min(axis=1)
        far = max(far, float(dist.max()))
    return w + 2.0 * length / far - 4.0 * np.pi
