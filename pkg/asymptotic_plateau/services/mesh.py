import hashlib
import logging
from collections import deque
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from asymptotic_plateau.exceptions import DegenerateMeshError, DomainError
from tool_kit.artifact_store import read_mesh, write_mesh

log = logging.getLogger(__name__)

DEGENERATE_AREA = 1e-14
HEIGHT_TOL = 1e-12


class TriMesh:
    """
    Triangulated surface in the upper half-space truncated at height ε.

    Vertices flagged as boundary sit exactly on z = ε and never move. ``frozen`` marks
    individual coordinates that the minimizer must keep fixed; boundary vertices are
    frozen in all three, while truncation ends of unbounded surfaces may be frozen in one
    coordinate (sliding ends) or in all of them (Dirichlet ends).

    Example Usage:
    --------------
    ```python
    mesh = TriMesh(vertices, triangles, boundary, eps=0.1)
    mesh.edges()                      # (E, 2) sorted vertex pairs
    moved = mesh.with_vertices(new)   # same connectivity, new positions
    ```
    """

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray, boundary: np.ndarray | None = None,
                 eps: float = 0.1, frozen: np.ndarray | None = None, name: str = "mesh", validate: bool = True):
        vertices = np.array(vertices, dtype=float).reshape(-1, 3)
        triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        if boundary is None:
            boundary = np.zeros(len(vertices), dtype=bool)
        boundary = np.asarray(boundary, dtype=bool).copy()
        if frozen is None:
            frozen = np.repeat(boundary[:, None], 3, axis=1)
        frozen = np.asarray(frozen, dtype=bool).copy()
        frozen[boundary] = True
        if eps <= 0.0:
            raise DomainError("Truncation height must be positive.")
        self.__vertices = vertices
        self.__triangles = triangles
        self.__boundary = boundary
        self.__frozen = frozen
        self.__eps = float(eps)
        self.__name = name
        self.__edge_cache = None
        if validate:
            self.validate()

    # ===========================================
    # REGION: Getters
    # ===========================================
    @property
    def get_vertices(self) -> np.ndarray:
        return self.__vertices

    @property
    def get_triangles(self) -> np.ndarray:
        return self.__triangles

    @property
    def get_boundary(self) -> np.ndarray:
        return self.__boundary

    @property
    def get_frozen(self) -> np.ndarray:
        return self.__frozen

    @property
    def get_eps(self) -> float:
        return self.__eps

    @property
    def get_name(self) -> str:
        return self.__name

    # ===========================================
    # END REGION: Getters
    # ===========================================
    @property
    def n_vertices(self) -> int:
        return len(self.__vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.__triangles)

    @property
    def free(self) -> np.ndarray:
        """Per-vertex flag: at least one coordinate may move."""
        return ~np.all(self.__frozen, axis=1)

    def digest(self) -> str:
        """Short content hash used as a mesh id in reports."""
        h = hashlib.sha1(self.__vertices.tobytes())
        h.update(self.__triangles.tobytes())
        return h.hexdigest()[:12]

    def validate(self) -> None:
        """
        Raises:
        -------
        DegenerateMeshError:
            Out-of-range indices, repeated corners, triangles of Euclidean area ≤ 1e-14 or
            edges shared by more than two triangles.
        DomainError:
            Vertices below the truncation height or boundary vertices off z = ε.
        """
        tris, verts = self.__triangles, self.__vertices
        if len(tris) and (tris.min() < 0 or tris.max() >= len(verts)):
            raise DegenerateMeshError("Triangle index out of range.")
        if np.any((tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2])):
            raise DegenerateMeshError("Triangle with repeated corners.")
        areas = self.euclidean_areas()
        if len(areas) and areas.min() <= DEGENERATE_AREA:
            raise DegenerateMeshError(f"Degenerate triangle {int(np.argmin(areas))} (area {areas.min():.3e}).")
        if len(verts) and verts[:, 2].min() < self.__eps - HEIGHT_TOL:
            raise DomainError(f"Vertex below the truncation height ε = {self.__eps}.")
        if np.any(np.abs(verts[self.__boundary, 2] - self.__eps) > HEIGHT_TOL):
            raise DomainError("Boundary vertices must sit on z = ε.")
        self.edges()

    def with_vertices(self, vertices: np.ndarray, validate: bool = False) -> "TriMesh":
        vertices = np.asarray(vertices, dtype=float)
        mesh = TriMesh(vertices, self.__triangles, self.__boundary, self.__eps, self.__frozen,
                       self.__name, validate=False)
        mesh.__edge_cache = self.__edge_cache
        if validate:
            mesh.validate()
        return mesh

    def with_triangles(self, triangles: np.ndarray) -> "TriMesh":
        return TriMesh(self.__vertices, triangles, self.__boundary, self.__eps, self.__frozen, self.__name)

    def renamed(self, name: str) -> "TriMesh":
        mesh = self.with_vertices(self.__vertices)
        mesh.__name = name
        return mesh

    # ===========================================
    # REGION: Euclidean geometry
    # ===========================================
    def corners(self) -> np.ndarray:
        return self.__vertices[self.__triangles]

    def face_cross(self) -> np.ndarray:
        p = self.corners()
        return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def euclidean_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_cross(), axis=1)

    def face_normals(self) -> np.ndarray:
        n = self.face_cross()
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def vertex_normals(self) -> np.ndarray:
        """Area-weighted unit vertex normals."""
        n = self.face_cross()
        acc = np.zeros_like(self.__vertices)
        for k in range(3):
            np.add.at(acc, self.__triangles[:, k], n)
        norm = np.linalg.norm(acc, axis=1, keepdims=True)
        return acc / np.where(norm > 0.0, norm, 1.0)

    def vertex_areas(self) -> np.ndarray:
        """Barycentric (one third) Euclidean area per vertex."""
        a = self.euclidean_areas() / 3.0
        acc = np.zeros(self.n_vertices)
        for k in range(3):
            np.add.at(acc, self.__triangles[:, k], a)
        return acc

    def edge_lengths(self) -> np.ndarray:
        e = self.edges()
        return np.linalg.norm(self.__vertices[e[:, 1]] - self.__vertices[e[:, 0]], axis=1)

    def mean_edge_length(self) -> float:
        return float(self.edge_lengths().mean())

    # ===========================================
    # REGION: Connectivity
    # ===========================================
    def _edge_table(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.__edge_cache is None:
            t = self.__triangles
            directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
            undirected = np.sort(directed, axis=1)
            edges, inverse, counts = np.unique(undirected, axis=0, return_inverse=True, return_counts=True)
            if len(counts) and counts.max() > 2:
                raise DegenerateMeshError(f"Non-manifold edge {edges[np.argmax(counts)].tolist()}.")
            self.__edge_cache = (edges, inverse.reshape(-1), counts)
        return self.__edge_cache

    def edges(self) -> np.ndarray:
        return self._edge_table()[0]

    def boundary_edges(self) -> np.ndarray:
        edges, _, counts = self._edge_table()
        return edges[counts == 1]

    def edge_faces(self) -> np.ndarray:
        """(E, 2) incident triangle indices per edge, -1 where an edge has one triangle."""
        edges, inverse, _ = self._edge_table()
        faces = np.full((len(edges), 2), -1, dtype=np.int64)
        tri_of = np.tile(np.arange(self.n_triangles), 3)
        order = np.argsort(inverse, kind="stable")
        inv_sorted = inverse[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = inv_sorted[1:] != inv_sorted[:-1]
        faces[inv_sorted[first], 0] = tri_of[order[first]]
        faces[inv_sorted[~first], 1] = tri_of[order[~first]]
        return faces

    def vertex_adjacency(self):
        e = self.edges()
        n = self.n_vertices
        data = np.ones(2 * len(e))
        return coo_matrix((data, (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
                          shape=(n, n)).tocsr()

    def component_labels(self) -> Tuple[int, np.ndarray]:
        count, labels = connected_components(self.vertex_adjacency(), directed=False)
        return int(count), labels

    def near_boundary(self) -> np.ndarray:
        """Vertices that are boundary vertices or share an edge with one."""
        adj = self.vertex_adjacency()
        return self.__boundary | (adj @ self.__boundary.astype(float) > 0.0)

    # ===========================================
    # REGION: Orientation
    # ===========================================
    def orient(self) -> "TriMesh":
        """
        Flips triangles so that neighbours induce opposite directions on shared edges.

        Raises:
        -------
        DegenerateMeshError:
            If the surface is not orientable.
        """
        t = self.__triangles
        edges, inverse, _ = self._edge_table()
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        forward = directed[:, 0] < directed[:, 1]
        tri_of = np.tile(np.arange(self.n_triangles), 3)
        faces = self.edge_faces()
        # sign of each (triangle, edge) incidence
        sign = np.zeros((self.n_triangles, 3), dtype=bool)
        slot = np.repeat(np.arange(3), self.n_triangles)
        sign[tri_of, slot] = forward
        edge_of = inverse.reshape(3, -1).T

        flip = np.zeros(self.n_triangles, dtype=bool)
        seen = np.zeros(self.n_triangles, dtype=bool)
        for seed in range(self.n_triangles):
            if seen[seed]:
                continue
            seen[seed] = True
            queue = deque([seed])
            while queue:
                a = queue.popleft()
                for k in range(3):
                    e = edge_of[a, k]
                    b = faces[e, 1] if faces[e, 0] == a else faces[e, 0]
                    if b < 0:
                        continue
                    kb = int(np.flatnonzero(edge_of[b] == e)[0])
                    need = flip[a] ^ (sign[a, k] == sign[b, kb])
                    if not seen[b]:
                        seen[b] = True
                        flip[b] = need
                        queue.append(b)
                    elif flip[b] != need:
                        raise DegenerateMeshError("Surface is not orientable.")
        tris = t.copy()
        tris[flip] = tris[flip][:, ::-1]
        return self.with_triangles(tris)

    def flipped(self) -> "TriMesh":
        return self.with_triangles(self.__triangles[:, ::-1])

    # ===========================================
    # REGION: Export
    # ===========================================
    def save(self, path: str) -> str:
        return write_mesh(path, self.__vertices, self.__triangles)

    @classmethod
    def load(cls, path: str, eps: float, boundary: np.ndarray | None = None) -> "TriMesh":
        vertices, triangles = read_mesh(path)
        if boundary is None:
            boundary = np.abs(vertices[:, 2] - eps) <= HEIGHT_TOL
        return cls(vertices, triangles, boundary, eps)

    def to_json(self) -> dict:
        return {"name": self.__name, "eps": self.__eps, "vertices": self.n_vertices,
                "triangles": self.n_triangles, "id": self.digest()}


# ===========================================
# REGION: Topology
# ===========================================
class MeshTopology(NamedTuple):
    chi: int
    boundary_components: int
    genus: int


def boundary_loops(mesh: TriMesh) -> List[np.ndarray]:
    """
    Boundary-edge cycles as ordered vertex index arrays.

    Raises:
    -------
    DegenerateMeshError:
        If a vertex carries other than two boundary edges.
    """
    bedges = mesh.boundary_edges()
    if len(bedges) == 0:
        return []
    neighbours = {}
    for a, b in bedges:
        neighbours.setdefault(int(a), []).append(int(b))
        neighbours.setdefault(int(b), []).append(int(a))
    bad = [v for v, nb in neighbours.items() if len(nb) != 2]
    if bad:
        raise DegenerateMeshError(f"Pinched boundary at vertex {bad[0]}.")
    loops, visited = [], set()
    for start in sorted(neighbours):
        if start in visited:
            continue
        loop = [start]
        visited.add(start)
        prev, cur = start, neighbours[start][0]
        while cur != start:
            loop.append(cur)
            visited.add(cur)
            a, b = neighbours[cur]
            prev, cur = cur, (b if a == prev else a)
        loops.append(np.array(loop, dtype=np.int64))
    return loops


def mesh_topology(mesh: TriMesh) -> MeshTopology:
    """
    Euler characteristic χ = V - E + F, boundary component count b and genus.

    The genus is (2c - χ - b)/2 summed over the c connected components, which is the usual
    (2 - χ - b)/2 for a connected mesh.

    Raises:
    -------
    DegenerateMeshError:
        For non-manifold edges or pinched boundaries.
    """
    used = np.unique(mesh.get_triangles)
    v, e, f = len(used), len(mesh.edges()), mesh.n_triangles
    chi = int(v - e + f)
    b = len(boundary_loops(mesh))
    count, labels = mesh.component_labels()
    components = len(np.unique(labels[used])) if len(used) else 0
    twice_genus = 2 * components - chi - b
    if twice_genus % 2:
        raise DegenerateMeshError("Inconsistent Euler characteristic: odd 2 - χ - b.")
    return MeshTopology(chi, b, twice_genus // 2)


# ===========================================
# REGION: Ray casting
# ===========================================
def ray_triangle_hits(origins: np.ndarray, directions: np.ndarray, corners: np.ndarray,
                      t_max: float | np.ndarray = np.inf, edge_tol: float = 1e-9,
                      chunk: int = 256) -> Tuple[np.ndarray, np.ndarray]:
    """
    Counts ray/triangle crossings with the Möller-Trumbore test.

    Parameters:
    -----------
    origins, directions : np.ndarray of shape (R, 3)
    corners : np.ndarray of shape (F, 3, 3)
    t_max : float or (R,) array
        Rays are segments ``origin + t·direction`` with 0 < t < t_max.
    edge_tol : float
        Barycentric margin below which a hit counts as grazing.

    Returns:
    --------
    (counts, grazing)
        Crossing count per ray and a flag for rays that pass within the margin of a
        triangle edge, vertex or plane.
    """
    origins = np.atleast_2d(origins)
    directions = np.atleast_2d(directions)
    t_max = np.broadcast_to(np.asarray(t_max, dtype=float), (len(origins),))
    counts = np.zeros(len(origins), dtype=np.int64)
    grazing = np.zeros(len(origins), dtype=bool)
    if len(corners) == 0:
        return counts, grazing
    p0 = corners[:, 0]
    e1 = corners[:, 1] - p0
    e2 = corners[:, 2] - p0
    scale = np.sqrt(np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1))
    for lo in range(0, len(origins), chunk):
        o = origins[lo:lo + chunk, None, :]
        d = directions[lo:lo + chunk, None, :]
        h = np.cross(d, e2[None])
        a = np.sum(e1[None] * h, axis=2)
        parallel = np.abs(a) < 1e-15 * scale[None] ** 2 * np.linalg.norm(d, axis=2)
        inv = np.where(parallel, 0.0, 1.0 / np.where(parallel, 1.0, a))
        s = o - p0[None]
        u = inv * np.sum(s * h, axis=2)
        q = np.cross(s, e1[None])
        v = inv * np.sum(d * q, axis=2)
        t = inv * np.sum(e2[None] * q, axis=2)
        tm = t_max[lo:lo + chunk, None]
        inside = (~parallel) & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > 0.0) & (t < tm)
        near = (~parallel) & (u > -edge_tol) & (v > -edge_tol) & (u + v < 1.0 + edge_tol) & (t > -edge_tol) \
            & (t < tm + edge_tol)
        close = near & ((u < edge_tol) | (v < edge_tol) | (u + v > 1.0 - edge_tol) | (np.abs(t) < edge_tol))
        counts[lo:lo + chunk] = inside.sum(axis=1)
        grazing[lo:lo + chunk] = close.any(axis=1)
    return counts, grazing


# ===========================================
# REGION: Builders shared by the mesh generators
# ===========================================
def stitch_rows(lower: Sequence[int], upper: Sequence[int], lower_param: np.ndarray, upper_param: np.ndarray,
                closed: bool) -> List[Tuple[int, int, int]]:
    """
    Triangulates the band between two vertex rows by advancing along the row whose next
    parameter is smaller.

    Closed rows carry parameters in [0, 1) and start at matching positions; open rows
    run from parameter 0 to 1 and share their end positions.
    """
    lower, upper = list(lower), list(upper)
    nl, nu = len(lower), len(upper)
    lp = np.append(lower_param, lower_param[0] + 1.0) if closed else np.asarray(lower_param)
    up = np.append(upper_param, upper_param[0] + 1.0) if closed else np.asarray(upper_param)
    last_l = nl if closed else nl - 1
    last_u = nu if closed else nu - 1
    if nl == 1:
        last_l = 0
    if nu == 1:
        last_u = 0
    tris = []
    i = j = 0
    while i < last_l or j < last_u:
        if nu == 1:
            tris.append((lower[i % nl], lower[(i + 1) % nl], upper[0]))
            i += 1
            continue
        if nl == 1:
            tris.append((lower[0], upper[(j + 1) % nu], upper[j % nu]))
            j += 1
            continue
        advance_lower = i < last_l and (j >= last_u or lp[i + 1] <= up[j + 1])
        if advance_lower:
            tris.append((lower[i % nl], lower[(i + 1) % nl], upper[j % nu]))
            i += 1
        else:
            tris.append((lower[i % nl], upper[(j + 1) % nu], upper[j % nu]))
            j += 1
    return tris


def disjoint_union(meshes: Sequence[TriMesh], name: str = "union") -> TriMesh:
    """Concatenates meshes that share the truncation height."""
    if not meshes:
        raise DomainError("Nothing to unite.")
    eps = meshes[0].get_eps
    if any(abs(m.get_eps - eps) > 0.0 for m in meshes):
        raise DomainError("Meshes in a union must share the truncation height.")
    offsets = np.cumsum([0] + [m.n_vertices for m in meshes[:-1]])
    return TriMesh(np.vstack([m.get_vertices for m in meshes]),
                   np.vstack([m.get_triangles + off for m, off in zip(meshes, offsets)]),
                   np.concatenate([m.get_boundary for m in meshes]), eps,
                   np.vstack([m.get_frozen for m in meshes]), name)


def submesh(mesh: TriMesh, keep: np.ndarray) -> Tuple[TriMesh, np.ndarray]:
    """
    Triangles whose three corners are kept, with unused vertices dropped.

    Returns the submesh and the old-to-new vertex index map (-1 for dropped vertices).
    """
    keep = np.asarray(keep, dtype=bool)
    tris = mesh.get_triangles
    tris = tris[np.all(keep[tris], axis=1)]
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[tris.ravel()] = True
    remap = np.full(mesh.n_vertices, -1, dtype=np.int64)
    remap[used] = np.arange(used.sum())
    out = TriMesh(mesh.get_vertices[used], remap[tris], mesh.get_boundary[used], mesh.get_eps,
                  mesh.get_frozen[used], mesh.get_name)
    return out, remap
