"""Oriented triangle meshes with boundary.

The mesh is the discrete stand-in for a compact immersed surface: vertex
positions in R^3, counterclockwise faces, and the derived caches (face
areas and normals, corner angles and cotangents, mixed vertex areas,
boundary loops) that the curvature operators consume.  Meshes are
immutable after construction; every operation downstream is a pure
function of the mesh.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import (
    DegenerateFace,
    FieldLengthMismatch,
    InconsistentOrientation,
    NonManifoldEdge,
)

__all__ = [
    "TriMesh",
    "BoundaryLoop",
    "VertexField",
    "build_mesh",
    "boundary_loops",
    "read_obj",
    "write_obj",
]


@dataclasses.dataclass(frozen=True)
class BoundaryLoop:
    """One closed boundary cycle, vertex indices in induced orientation.

    The induced orientation follows the direction in which the single
    incident face traverses each boundary edge, so loop order is
    consistent with counterclockwise faces.
    """

    vertices: np.ndarray  # (n,) int, no repeats, cycle closes n -> 0

    def __len__(self):
        return len(self.vertices)

    @property
    def edges(self):
        """Directed boundary edges (n, 2): consecutive vertex pairs."""
        v = self.vertices
        return np.column_stack([v, np.roll(v, -1)])


@dataclasses.dataclass(frozen=True)
class VertexField:
    """One vector (or scalar) per vertex.

    ``is_boundary`` marks vertices where the value is a placeholder
    rather than a computed quantity (mean curvature at boundary rows).
    """

    values: np.ndarray
    is_boundary: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))


class TriMesh:
    """Validated oriented triangle mesh with boundary.

    Parameters
    ----------
    positions : array_like (V, 3)
        Vertex coordinates (length units).
    faces : array_like (F, 3)
        Vertex index triples, counterclockwise orientation.
    eps_area : float, optional
        Face-area degeneracy threshold.  Default 1e-12 * diam^2 where
        diam is the bounding-box diagonal.

    Raises
    ------
    NonManifoldEdge
        An edge has three or more incident faces.
    InconsistentOrientation
        Two faces traverse a shared edge in the same direction.
    DegenerateFace
        Repeated indices within a face, or face area below eps_area.
    """

    def __init__(self, positions, faces, eps_area=None):
        positions = np.ascontiguousarray(positions, dtype=np.float64)
        faces = np.ascontiguousarray(faces, dtype=np.int64)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ValueError(f"positions must be (V, 3), got {positions.shape}")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise ValueError(f"faces must be (F, 3), got {faces.shape}")
        if not np.isfinite(positions).all():
            raise ValueError("positions contain non-finite values")
        if faces.size and (faces.min() < 0 or faces.max() >= len(positions)):
            raise ValueError("face indices out of range")
        if len(faces) == 0:
            raise ValueError("mesh needs at least one face")

        self.positions = positions
        self.faces = faces
        self.positions.setflags(write=False)
        self.faces.setflags(write=False)

        bbox = positions.max(axis=0) - positions.min(axis=0)
        self.bbox_diagonal = float(np.linalg.norm(bbox))
        if eps_area is None:
            eps_area = 1e-12 * self.bbox_diagonal**2
        self.eps_area = float(eps_area)

        self._cache = {}
        self._validate()
        self._build_edges()

    # -- validation -------------------------------------------------------

    def _validate(self):
        f = self.faces
        same = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
        if same.any():
            raise DegenerateFace(
                f"faces with repeated vertex indices: {np.flatnonzero(same)[:8].tolist()}"
            )
        areas = self.face_areas
        bad = areas < self.eps_area
        if bad.any():
            raise DegenerateFace(
                f"{int(bad.sum())} faces below area threshold {self.eps_area:g}, "
                f"first at index {int(np.flatnonzero(bad)[0])}"
            )

    def _build_edges(self):
        f = self.faces
        # directed half edges in face winding order
        heads = np.concatenate([f[:, 0], f[:, 1], f[:, 2]])
        tails = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
        v = len(self.positions)
        adj_dir = sparse.csr_matrix(
            (np.ones(len(heads), dtype=np.int64), (heads, tails)), shape=(v, v)
        )
        adj_sym = adj_dir + adj_dir.T
        # more than two faces on an edge is non-manifold regardless of
        # winding, so diagnose that before the orientation check
        if adj_sym.data.max() > 2:
            dup = sparse.triu(adj_sym).tocoo()
            where = dup.data > 2
            pair = (int(dup.row[where][0]), int(dup.col[where][0]))
            raise NonManifoldEdge(f"edge {pair} has more than two incident faces")
        if adj_dir.data.max() > 1:
            dup = adj_dir.tocoo()
            where = dup.data > 1
            pair = (int(dup.row[where][0]), int(dup.col[where][0]))
            raise InconsistentOrientation(
                f"directed edge {pair} appears in more than one face"
            )
        self._adj_dir = adj_dir
        self._adj_sym = adj_sym

        coo = sparse.triu(adj_sym, k=1).tocoo()
        self.edges = np.column_stack([coo.row, coo.col]).astype(np.int64)
        self._edge_face_count = coo.data.astype(np.int64)
        self.edges.setflags(write=False)

        # boundary edges carry exactly one face; orient them by the
        # direction their face traverses them
        bnd = self._edge_face_count == 1
        bnd_edges = self.edges[bnd]
        if len(bnd_edges):
            has_dir = np.asarray(
                adj_dir[bnd_edges[:, 0], bnd_edges[:, 1]]
            ).ravel() > 0
            self._boundary_edges_directed = np.where(
                has_dir[:, None], bnd_edges, bnd_edges[:, ::-1]
            ).astype(np.int64)
        else:
            self._boundary_edges_directed = np.empty((0, 2), np.int64)
        mask = np.zeros(v, dtype=bool)
        if len(self._boundary_edges_directed):
            mask[self._boundary_edges_directed.ravel()] = True
        self.is_boundary_vertex = mask
        self.is_boundary_vertex.setflags(write=False)

    # -- derived caches -----------------------------------------------------

    @property
    def vertex_count(self):
        return len(self.positions)

    @property
    def face_count(self):
        return len(self.faces)

    @property
    def edge_count(self):
        return len(self.edges)

    @property
    def euler_characteristic(self):
        return self.vertex_count - self.edge_count + self.face_count

    @property
    def is_closed(self):
        return len(self._boundary_edges_directed) == 0

    def _corners(self):
        """Edge vectors and per-corner squared lengths, cached."""
        if "corners" not in self._cache:
            p = self.positions[self.faces]  # (F, 3, 3)
            # edge opposite corner k, oriented along the winding
            e0 = p[:, 2] - p[:, 1]
            e1 = p[:, 0] - p[:, 2]
            e2 = p[:, 1] - p[:, 0]
            self._cache["corners"] = (e0, e1, e2)
        return self._cache["corners"]

    @property
    def face_normals(self):
        """Unit face normals (F, 3), right-hand rule on the winding."""
        if "face_normals" not in self._cache:
            e0, e1, e2 = self._corners()
            cross = np.cross(e2, -e1)  # (p1-p0) x (p2-p0)
            norm = np.linalg.norm(cross, axis=1)
            self._cache["face_cross"] = cross
            self._cache["face_areas"] = 0.5 * norm
            self._cache["face_normals"] = cross / norm[:, None]
        return self._cache["face_normals"]

    @property
    def face_areas(self):
        if "face_areas" not in self._cache:
            p = self.positions[self.faces]
            cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
            self._cache["face_areas"] = 0.5 * np.linalg.norm(cross, axis=1)
        return self._cache["face_areas"]

    @property
    def total_area(self):
        return float(self.face_areas.sum())

    @property
    def corner_angles(self):
        """Interior angles (F, 3), one per face corner."""
        if "corner_angles" not in self._cache:
            e0, e1, e2 = self._corners()
            # angle at corner k lies between the two edges meeting there
            def ang(u, v):
                c = np.einsum("ij,ij->i", u, v)
                s = np.linalg.norm(np.cross(u, v), axis=1)
                return np.arctan2(s, c)

            a0 = ang(e2, -e1)
            a1 = ang(e0, -e2)
            a2 = ang(e1, -e0)
            self._cache["corner_angles"] = np.column_stack([a0, a1, a2])
        return self._cache["corner_angles"]

    @property
    def corner_cotans(self):
        """Cotangents of the corner angles (F, 3)."""
        if "corner_cotans" not in self._cache:
            e0, e1, e2 = self._corners()

            def cot(u, v):
                c = np.einsum("ij,ij->i", u, v)
                s = np.linalg.norm(np.cross(u, v), axis=1)
                return c / s

            self._cache["corner_cotans"] = np.column_stack(
                [cot(e2, -e1), cot(e0, -e2), cot(e1, -e0)]
            )
        return self._cache["corner_cotans"]

    @property
    def vertex_areas(self):
        """Mixed vertex areas (V,).

        Voronoi cell areas inside non-obtuse faces; obtuse faces fall
        back to the barycentric third for all three corners, keeping the
        per-face partition exact so the areas sum to the total area.
        """
        if "vertex_areas" not in self._cache:
            e0, e1, e2 = self._corners()
            l2 = np.column_stack(
                [
                    np.einsum("ij,ij->i", e0, e0),
                    np.einsum("ij,ij->i", e1, e1),
                    np.einsum("ij,ij->i", e2, e2),
                ]
            )
            cot = self.corner_cotans
            areas = self.face_areas
            # Voronoi contribution at corner k uses the two edges meeting
            # there, each weighted by the cotangent at the far corner
            contribution = np.empty_like(l2)
            contribution[:, 0] = l2[:, 2] * cot[:, 2] + l2[:, 1] * cot[:, 1]
            contribution[:, 1] = l2[:, 0] * cot[:, 0] + l2[:, 2] * cot[:, 2]
            contribution[:, 2] = l2[:, 1] * cot[:, 1] + l2[:, 0] * cot[:, 0]
            contribution /= 8.0
            obtuse = (cot < 0).any(axis=1)
            contribution[obtuse] = areas[obtuse, None] / 3.0
            va = np.zeros(self.vertex_count)
            np.add.at(va, self.faces.ravel(), contribution.ravel())
            self._cache["vertex_areas"] = va
        return self._cache["vertex_areas"]

    @property
    def vertex_normals(self):
        """Angle-weighted unit vertex normals (V,)x3."""
        if "vertex_normals" not in self._cache:
            w = self.corner_angles[..., None] * self.face_normals[:, None, :]
            vn = np.zeros_like(self.positions)
            np.add.at(vn, self.faces.ravel(), w.reshape(-1, 3))
            norm = np.linalg.norm(vn, axis=1)
            norm[norm == 0] = 1.0
            self._cache["vertex_normals"] = vn / norm[:, None]
        return self._cache["vertex_normals"]

    @property
    def avg_edge_length(self):
        if "avg_edge_length" not in self._cache:
            p = self.positions
            d = np.linalg.norm(p[self.edges[:, 0]] - p[self.edges[:, 1]], axis=1)
            self._cache["avg_edge_length"] = float(d.mean())
        return self._cache["avg_edge_length"]

    @property
    def diameter(self):
        """Exact diameter of the vertex set (max pairwise distance)."""
        if "diameter" not in self._cache:
            self._cache["diameter"] = _point_set_diameter(self.positions)
        return self._cache["diameter"]

    @property
    def boundary_loops(self):
        """Boundary cycles in induced orientation; [] for closed meshes."""
        if "boundary_loops" not in self._cache:
            self._cache["boundary_loops"] = _walk_boundary_loops(
                self._boundary_edges_directed
            )
        return self._cache["boundary_loops"]

    @property
    def boundary_vertex_indices(self):
        """All boundary vertices, flat, in loop-concatenated order."""
        loops = self.boundary_loops
        if not loops:
            return np.empty(0, dtype=np.int64)
        return np.concatenate([lp.vertices for lp in loops])

    @property
    def boundary_length(self):
        total = 0.0
        for lp in self.boundary_loops:
            e = lp.edges
            total += float(
                np.linalg.norm(
                    self.positions[e[:, 1]] - self.positions[e[:, 0]], axis=1
                ).sum()
            )
        return total

    def vertex_component_count(self):
        """Connected components of the vertex-edge graph."""
        v = self.vertex_count
        g = sparse.csr_matrix(
            (np.ones(len(self.edges)), (self.edges[:, 0], self.edges[:, 1])),
            shape=(v, v),
        )
        n, _ = csgraph.connected_components(g, directed=False)
        return int(n)

    def with_positions(self, positions):
        """New mesh, same topology, replaced coordinates."""
        return TriMesh(positions, self.faces, eps_area=self.eps_area)

    def check_field(self, field):
        """Return field values as an array, enforcing the vertex count."""
        values = field.values if isinstance(field, VertexField) else np.asarray(field)
        if len(values) != self.vertex_count:
            raise FieldLengthMismatch(
                f"field has {len(values)} entries for {self.vertex_count} vertices"
            )
        return np.asarray(values, dtype=np.float64)

    def __repr__(self):
        kind = "closed" if self.is_closed else f"{len(self.boundary_loops)} loops"
        return (
            f"TriMesh(V={self.vertex_count}, F={self.face_count}, "
            f"chi={self.euler_characteristic}, {kind})"
        )


def _point_set_diameter(points):
    """Max pairwise distance.  Hull vertices suffice for the extremes."""
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) > 400:
        try:
            from scipy.spatial import ConvexHull

            pts = pts[np.unique(ConvexHull(pts, qhull_options="QJ").vertices)]
        except Exception:
            pass  # degenerate (flat) input: fall through to brute force
    pts = pts - pts.mean(axis=0)  # curb cancellation in the Gram trick
    sq = np.einsum("ij,ij->i", pts, pts)
    best = 0.0
    for i in range(0, len(pts), 2048):
        chunk = slice(i, i + 2048)
        d2 = sq[chunk][:, None] + sq[None, :] - 2.0 * (pts[chunk] @ pts.T)
        best = max(best, float(d2.max()))
    return max(best, 0.0) ** 0.5


def _walk_boundary_loops(directed_edges):
    if len(directed_edges) == 0:
        return []
    succ = {}
    for a, b in directed_edges:
        if a in succ:
            raise NonManifoldEdge(
                f"boundary vertex {a} has more than one outgoing boundary edge"
            )
        succ[int(a)] = int(b)
    loops = []
    seen = set()
    for start in succ:
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        cur = succ[start]
        while cur != start:
            if cur in seen or cur not in succ:
                raise NonManifoldEdge("boundary walk does not close into a cycle")
            cycle.append(cur)
            seen.add(cur)
            cur = succ[cur]
        loops.append(BoundaryLoop(vertices=np.array(cycle, dtype=np.int64)))
    # deterministic order: by smallest vertex index
    loops.sort(key=lambda lp: int(lp.vertices.min()))
    return loops


def build_mesh(positions, faces, eps_area=None) -> TriMesh:
    """Validate and cache a triangle mesh.

    Parameters
    ----------
    positions : array_like (V, 3)
    faces : array_like (F, 3), counterclockwise winding
    eps_area : float, optional
        Face-area floor; defaults to 1e-12 * (bounding-box diagonal)^2.

    Returns
    -------
    TriMesh

    Raises
    ------
    NonManifoldEdge, InconsistentOrientation, DegenerateFace
    """
    return TriMesh(positions, faces, eps_area=eps_area)


def boundary_loops(mesh: TriMesh):
    """Ordered boundary cycles of the mesh ([] when closed)."""
    return mesh.boundary_loops


# -- OBJ serialization ----------------------------------------------------


def read_obj(path):
    """Read an ASCII OBJ file.

    Only ``v`` and ``f`` records are honored; ``f`` entries may carry
    texture/normal slots (``i/t/n``), everything past the first slash is
    ignored.  Faces must be triangles.

    Returns
    -------
    (positions, faces) : ndarray pair
    """
    positions = []
    faces = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ValueError(f"{path}:{lineno}: malformed vertex record")
                positions.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise ValueError(
                        f"{path}:{lineno}: only triangular faces are supported"
                    )
                idx = []
                for token in parts[1:]:
                    i = int(token.split("/")[0])
                    if i < 0:
                        raise ValueError(
                            f"{path}:{lineno}: negative OBJ indices not supported"
                        )
                    idx.append(i - 1)
                faces.append(idx)
            # all other record types are silently skipped
    pos = np.asarray(positions, dtype=np.float64)
    fcs = np.asarray(faces, dtype=np.int64)
    if len(fcs) and (fcs.min() < 0 or fcs.max() >= len(pos)):
        raise ValueError(f"{path}: face index out of range")
    return pos, fcs


def write_obj(mesh_or_positions, path, faces=None):
    """Write mesh geometry as ASCII OBJ (``v``/``f`` records only).

    Coordinates use 17 significant digits so float64 round trips are
    bit-stable.
    """
    if faces is None:
        positions = mesh_or_positions.positions
        faces = mesh_or_positions.faces
    else:
        positions = np.asarray(mesh_or_positions)
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in positions:
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in np.asarray(faces) + 1:
            fh.write(f"f {a} {b} {c}\n")
