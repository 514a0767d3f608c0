"""Analytic surfaces spanning a coaxial circle pair, plus reference meshes.

The boundary datum is two horizontal circles: radius 1 at height +h and
radius R >= 1 at height -h.  This module evaluates the closed-form
truncated-sphere energy bound, solves the catenoid boundary-value
problem, locates the critical height above which no catenoid spans the
circles, and generates watertight triangle meshes for all of these
surfaces along with icosphere and flat-disk fixtures.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy import optimize

from .errors import InvalidConfig, NoCatenoid
from .mesh import TriMesh, build_mesh

__all__ = [
    "BoundaryConfig",
    "CatenoidSolution",
    "MeshRecipe",
    "truncated_sphere_energy",
    "truncated_sphere_band_energy",
    "truncated_sphere_mesh",
    "catenoid_critical_height",
    "solve_catenoid",
    "catenoid_mesh",
    "cylinder_mesh",
    "icosphere",
    "flat_disk",
    "gamma_Rh_samples",
]

FOUR_PI = 4.0 * math.pi


@dataclasses.dataclass(frozen=True)
class BoundaryConfig:
    """Two coaxial circles: radius 1 at z = +h, radius R at z = -h."""

    R: float
    h: float

    def __post_init__(self):
        if not (np.isfinite(self.R) and np.isfinite(self.h)):
            raise InvalidConfig("R and h must be finite")
        if self.R < 1.0:
            raise InvalidConfig(f"outer radius R must be >= 1, got {self.R}")
        if self.h <= 0.0:
            raise InvalidConfig(f"half-separation h must be > 0, got {self.h}")


@dataclasses.dataclass(frozen=True)
class CatenoidSolution:
    """Catenoid profile r(z) = c cosh((z - z0)/c) spanning the circle pair.

    ``branches`` records every solution found, largest waist first; the
    primary (c, z0) is the stable larger-c branch.
    """

    c: float
    z0: float
    valid: bool
    branches: tuple = ()

    def radius_at(self, z):
        return self.c * np.cosh((np.asarray(z) - self.z0) / self.c)


@dataclasses.dataclass(frozen=True)
class MeshRecipe:
    """Resolution request for a generator.

    Either explicit counts (n_radial around the axis, n_axial along it)
    or a target edge length from which counts are derived.  ``kind`` is a
    free-form tag propagated to reports.
    """

    n_radial: int | None = None
    n_axial: int | None = None
    target_edge_length: float | None = None
    kind: str = ""

    def __post_init__(self):
        if self.n_radial is not None and self.n_radial < 3:
            raise InvalidConfig(f"n_radial must be >= 3, got {self.n_radial}")
        if self.n_axial is not None and self.n_axial < 3:
            raise InvalidConfig(f"n_axial must be >= 3, got {self.n_axial}")
        if self.target_edge_length is not None and self.target_edge_length <= 0:
            raise InvalidConfig("target_edge_length must be positive")
        if (
            self.n_radial is None
            and self.n_axial is None
            and self.target_edge_length is None
        ):
            raise InvalidConfig("recipe needs counts or a target edge length")

    def resolve(self, around_length, along_length):
        """Concrete (n_radial, n_axial) for given curve extents."""
        n_r, n_a = self.n_radial, self.n_axial
        if self.target_edge_length is not None:
            if n_r is None:
                n_r = max(3, int(math.ceil(around_length / self.target_edge_length)))
            if n_a is None:
                n_a = max(3, int(math.ceil(along_length / self.target_edge_length)))
        if n_r is None or n_a is None:
            raise InvalidConfig("recipe underdetermined for this generator")
        return n_r, n_a


# -- closed forms ------------------------------------------------------------


def truncated_sphere_energy(R, h) -> float:
    """Closed-form energy of the symmetric truncated-sphere competitor.

    4 pi u / sqrt(u^2 + 16 h^2) with u = 4 h^2 + R^2 - 1; always in
    (0, 4 pi), and equal to 4 pi h / sqrt(1 + h^2) at R = 1.  This is the
    energy of the enclosing sphere band symmetric about the sphere
    center; the band actually spanning the circle pair (see
    ``truncated_sphere_band_energy``) has equal energy exactly when
    R = 1 and strictly less otherwise.
    """
    cfg = BoundaryConfig(R, h)
    u = 4.0 * cfg.h**2 + cfg.R**2 - 1.0
    return FOUR_PI * u / math.hypot(u, 4.0 * cfg.h)


def truncated_sphere_band_energy(R, h) -> float:
    """Exact smooth energy of the sphere band with the circles as boundary.

    The band is the sphere through both circles, centered on the axis at
    z0 = (1 - R^2)/(4h), cut to |z| <= h: area 4 pi r h over radius
    squared gives W = 4 pi h / r.  Refinement limit of
    ``truncated_sphere_mesh``.
    """
    cfg = BoundaryConfig(R, h)
    z0 = (1.0 - cfg.R**2) / (4.0 * cfg.h)
    r = math.hypot(1.0, cfg.h - z0)
    return FOUR_PI * cfg.h / r


# -- catenoid family -----------------------------------------------------------


def _bottom_radius(a, h):
    """Bottom-circle radius of the catenoid through the top circle.

    Catenoids through {x^2+y^2=1, z=h} form a one-parameter family: with
    a = (h - z0)/c the waist is c = 1/cosh(a), and the profile at z = -h
    evaluates to cosh(a - 2 h cosh a)/cosh(a).
    """
    return np.cosh(a - 2.0 * h * np.cosh(a)) / np.cosh(a)


def _family_window(h):
    """Parameter range keeping cosh arguments below overflow."""
    lim = math.acosh(690.0 / (2.0 * h)) if 2.0 * h < 690.0 else 1.0
    return min(lim, 690.0)


def _family_minimum(h):
    """(a_min, g(a_min)) of the bottom-radius family, scanned then refined."""
    lim = _family_window(h)
    grid = np.linspace(-lim, lim, 4001)
    vals = _bottom_radius(grid, h)
    k = int(np.argmin(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(
        lambda a: _bottom_radius(a, h), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-14},
    )
    a_min = float(res.x)
    return a_min, float(_bottom_radius(a_min, h))


def catenoid_critical_height(R) -> float:
    """Largest h for which some catenoid spans the circle pair.

    For R = 1 the threshold solves t tanh t = 1 (bisection on [1, 2]
    followed by Newton polish, then h0 = t/cosh t).  For R > 1 the
    threshold is bisected over h directly, using solvability of the
    catenoid family as the predicate.
    """
    if not np.isfinite(R) or R < 1.0:
        raise InvalidConfig(f"R must be >= 1, got {R}")
    if R == 1.0:
        lo, hi = 1.0, 2.0
        f = lambda t: t * math.tanh(t) - 1.0
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            if f(mid) > 0:
                hi = mid
            else:
                lo = mid
        t = 0.5 * (lo + hi)
        for _ in range(8):  # Newton, converges to full precision
            step = f(t) / (math.tanh(t) + t / math.cosh(t) ** 2)
            t -= step
            if abs(step) < 1e-12 * t:
                break
        return t / math.cosh(t)

    solvable = lambda h: _family_minimum(h)[1] <= R
    lo = catenoid_critical_height(1.0)  # taller outer circle only helps
    if not solvable(lo):  # pragma: no cover - geometric monotonicity
        lo = 1e-3
    hi = lo
    while solvable(hi):
        hi *= 2.0
        if hi > 1e3:  # pragma: no cover
            raise InvalidConfig(f"no finite critical height found for R={R}")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if solvable(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_catenoid(R, h) -> CatenoidSolution:
    """Catenoid(s) spanning the circle pair; stable branch first.

    Reduces the two boundary equations to one unknown a = (h - z0)/c via
    the top circle, then locates every root of bottom_radius(a) = R.
    Residuals of both boundary equations are verified below 1e-10.

    Raises
    ------
    NoCatenoid
        h exceeds the critical height for this R.
    """
    cfg = BoundaryConfig(R, h)
    a_min, g_min = _family_minimum(cfg.h)
    if g_min > cfg.R:
        raise NoCatenoid(
            f"no catenoid spans (R={cfg.R}, h={cfg.h}); "
            f"closest family radius {g_min:.6g} exceeds R"
        )
    f = lambda a: _bottom_radius(a, cfg.h) - cfg.R
    lim = _family_window(cfg.h)
    roots = []
    if g_min >= cfg.R:  # threshold case: double root at the minimum
        roots.append(a_min)
    else:
        # the family radius diverges toward the window edges, so each
        # side of the minimum brackets exactly one root
        roots.append(float(optimize.brentq(f, -lim, a_min, xtol=1e-14)))
        roots.append(float(optimize.brentq(f, a_min, lim, xtol=1e-14)))
    branches = []
    for a in roots:
        c = 1.0 / math.cosh(a)
        z0 = cfg.h - a * c
        res_top = abs(c * math.cosh((cfg.h - z0) / c) - 1.0)
        res_bot = abs(c * math.cosh((-cfg.h - z0) / c) - cfg.R)
        if max(res_top, res_bot) > 1e-10:  # pragma: no cover - solver guard
            continue
        if any(abs(c - b[0]) < 1e-9 for b in branches):
            continue  # merged branches near the critical height
        branches.append((c, z0))
    if not branches:  # pragma: no cover - solver guard
        raise NoCatenoid(f"root polishing failed for (R={R}, h={h})")
    branches.sort(key=lambda cz: -cz[0])
    c, z0 = branches[0]
    return CatenoidSolution(c=c, z0=z0, valid=True, branches=tuple(branches))


# -- mesh generators --------------------------------------------------------


def _revolution_mesh(ring_radii, ring_z, n_radial):
    """Triangulated surface of revolution.

    Rings are listed bottom to top; each ring has n_radial samples
    counterclockwise seen from +z, which makes face normals point away
    from the axis.
    """
    m = n_radial
    theta = 2.0 * np.pi * np.arange(m) / m
    circle = np.column_stack([np.cos(theta), np.sin(theta), np.zeros(m)])
    rows = []
    for r, z in zip(ring_radii, ring_z):
        ring = circle * r
        ring[:, 2] = z
        rows.append(ring)
    positions = np.vstack(rows)
    faces = []
    for j in range(len(rows) - 1):
        base = j * m
        nxt = (j + 1) * m
        for i in range(m):
            i2 = (i + 1) % m
            faces.append((base + i, base + i2, nxt + i2))
            faces.append((base + i, nxt + i2, nxt + i))
    return build_mesh(positions, np.asarray(faces, dtype=np.int64))


def truncated_sphere_mesh(R, h, recipe: MeshRecipe) -> TriMesh:
    """Sphere band through both circles, cut to |z| <= h.

    The unique sphere through the circle pair is centered on the axis at
    z0 = (1 - R^2)/(4h) with radius sqrt(1 + (h - z0)^2); rows follow
    uniform polar angle and the two boundary rings are placed exactly on
    the circles.
    """
    cfg = BoundaryConfig(R, h)
    z0 = (1.0 - cfg.R**2) / (4.0 * cfg.h)
    r = math.hypot(1.0, cfg.h - z0)
    theta_top = math.acos((cfg.h - z0) / r)
    theta_bot = math.acos((-cfg.h - z0) / r)
    arc = r * (theta_bot - theta_top)
    n_r, n_a = recipe.resolve(2.0 * math.pi * r, arc)
    theta = np.linspace(theta_bot, theta_top, n_a + 1)  # bottom to top
    radii = r * np.sin(theta)
    zs = z0 + r * np.cos(theta)
    radii[0], zs[0] = cfg.R, -cfg.h  # exact boundary placement
    radii[-1], zs[-1] = 1.0, cfg.h
    return _revolution_mesh(radii, zs, n_r)


def catenoid_mesh(R, h, recipe: MeshRecipe) -> TriMesh:
    """Stable catenoid spanning the circle pair, rows uniform in z."""
    cfg = BoundaryConfig(R, h)
    sol = solve_catenoid(cfg.R, cfg.h)
    n_r, n_a = recipe.resolve(2.0 * math.pi * max(1.0, cfg.R), 2.0 * cfg.h)
    zs = np.linspace(-cfg.h, cfg.h, n_a + 1)
    radii = sol.radius_at(zs)
    radii[0], radii[-1] = cfg.R, 1.0  # snap rings exactly onto the circles
    return _revolution_mesh(radii, zs, n_r)


def cylinder_mesh(R, h, recipe: MeshRecipe) -> TriMesh:
    """Ruled surface between the circles (true cylinder when R = 1)."""
    cfg = BoundaryConfig(R, h)
    n_r, n_a = recipe.resolve(2.0 * math.pi * max(1.0, cfg.R), 2.0 * cfg.h)
    zs = np.linspace(-cfg.h, cfg.h, n_a + 1)
    t = (zs + cfg.h) / (2.0 * cfg.h)
    radii = cfg.R + (1.0 - cfg.R) * t
    radii[0], radii[-1] = cfg.R, 1.0
    return _revolution_mesh(radii, zs, n_r)


_ICO_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        (-1, _ICO_T, 0), (1, _ICO_T, 0), (-1, -_ICO_T, 0), (1, -_ICO_T, 0),
        (0, -1, _ICO_T), (0, 1, _ICO_T), (0, -1, -_ICO_T), (0, 1, -_ICO_T),
        (_ICO_T, 0, -1), (_ICO_T, 0, 1), (-_ICO_T, 0, -1), (-_ICO_T, 0, 1),
    ],
    dtype=np.float64,
)
_ICO_FACES = np.array(
    [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ],
    dtype=np.int64,
)


def icosphere(center, r, subdiv) -> TriMesh:
    """Subdivided icosahedron projected to the sphere; closed, outward."""
    if r <= 0:
        raise InvalidConfig(f"sphere radius must be positive, got {r}")
    if subdiv < 0 or subdiv > 8:
        raise InvalidConfig("subdiv must be in [0, 8]")
    center = np.broadcast_to(np.asarray(center, dtype=np.float64), (3,))
    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS[0])
    faces = _ICO_FACES
    for _ in range(subdiv):
        midpoint = {}
        verts = list(verts)
        new_faces = []

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        verts = np.asarray(verts)
        faces = np.asarray(new_faces, dtype=np.int64)
    return build_mesh(center + r * verts, faces)


def flat_disk(r, recipe: MeshRecipe) -> TriMesh:
    """Flat disk of radius r in the z = 0 plane, normal +z.

    Center vertex, concentric rings with a constant sample count, fan
    plus quad strips; counterclockwise seen from +z.
    """
    if r <= 0:
        raise InvalidConfig(f"disk radius must be positive, got {r}")
    m, k = recipe.resolve(2.0 * math.pi * r, r)
    theta = 2.0 * np.pi * np.arange(m) / m
    circle = np.column_stack([np.cos(theta), np.sin(theta), np.zeros(m)])
    positions = [np.zeros((1, 3))]
    for ring in range(1, k + 1):
        positions.append(circle * (r * ring / k))
    positions = np.vstack(positions)
    faces = []
    for i in range(m):  # center fan
        faces.append((0, 1 + i, 1 + (i + 1) % m))
    for ring in range(1, k):
        base = 1 + (ring - 1) * m
        nxt = 1 + ring * m
        for i in range(m):
            i2 = (i + 1) % m
            faces.append((base + i, nxt + i, nxt + i2))
            faces.append((base + i, nxt + i2, base + i2))
    return build_mesh(positions, np.asarray(faces, dtype=np.int64))


def gamma_Rh_samples(R, h, n):
    """n points on each circle of the boundary pair, ordered around.

    Returns (top, bottom): top is the radius-1 circle at z = +h, bottom
    the radius-R circle at z = -h.
    """
    cfg = BoundaryConfig(R, h)
    if n < 3:
        raise InvalidConfig(f"need at least 3 samples per circle, got {n}")
    theta = 2.0 * np.pi * np.arange(n) / n
    top = np.column_stack([np.cos(theta), np.sin(theta), np.full(n, cfg.h)])
    bottom = np.column_stack(
        [cfg.R * np.cos(theta), cfg.R * np.sin(theta), np.full(n, -cfg.h)]
    )
    return top, bottom
