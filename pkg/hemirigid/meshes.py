'''
Triangulated surfaces of R^3 (n = 2) for the sliding procedures.
- HypersurfaceMesh: vertices, triangles, boundary cycles, edge lengths and
  per-vertex curvature (from an underlying graph field, or a local quadratic fit)
- graph_mesh: triangulation of the graph of a field over a closed disk
- read_mesh / write_mesh: ASCII format
      n_vertices n_faces
      x y z            (n_vertices lines)
      i j k            (n_faces lines, 0-based)

>>> from hemirigid import fields
>>> mesh = graph_mesh(fields.plane(2), rings=3)
>>> len(mesh.vertices), len(mesh.faces), len(mesh.boundary_loop)
(37, 54, 18)
'''

import numpy as np

from hemirigid.errors import MeshError
from hemirigid.graphs import ShapeData, check_ambient, curvature_profile, graph_forms


def _edges(faces):
    '''Sorted vertex pairs of all face edges, one row per (face, edge).'''
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    return np.sort(e, axis=1)


def boundary_loops(faces):
    '''
    Ordered boundary cycles, from the edges used by exactly one face.
    Raise MeshError when an edge is shared by more than two faces or when the
    boundary edges do not form simple cycles.
    '''
    edges, counts = np.unique(_edges(np.asarray(faces)), axis=0, return_counts=True)
    if np.any(counts > 2):
        raise MeshError(f"Non-manifold mesh: {int(np.sum(counts > 2))} edges have more than 2 faces.")
    neighbors = {}
    for i, j in edges[counts == 1]:
        neighbors.setdefault(int(i), []).append(int(j))
        neighbors.setdefault(int(j), []).append(int(i))
    if any(len(nb) != 2 for nb in neighbors.values()):
        raise MeshError("Boundary edges do not form simple cycles.")

    loops = []
    unvisited = set(neighbors)
    while unvisited:
        start = min(unvisited)
        loop = [start]
        prev, cur = start, neighbors[start][0]
        while cur != start:
            loop.append(cur)
            a, b = neighbors[cur]
            prev, cur = cur, (b if a == prev else a)
        if len(loop) < 3:
            raise MeshError(f"Degenerate boundary cycle {loop}.")
        unvisited -= set(loop)
        loops.append(np.array(loop))
    return loops


class HypersurfaceMesh:
    '''
    Triangulated surface in R^3, x^3 being the vertical coordinate.
    <field>, when given, is the function whose graph the mesh samples; it is then
    used for exact curvature at the vertices.
    '''

    def __init__(self, vertices, faces, ambient="euclidean", field=None):
        vertices = np.array(vertices, dtype=np.float64)
        faces = np.array(faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise MeshError(f"Vertices must be points of R^3, got shape {vertices.shape}.")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshError(f"Faces must be triangles, got shape {faces.shape}.")
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MeshError("Face index out of range.")
        if np.any((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 2] == faces[:, 0])):
            raise MeshError("Degenerate face with a repeated vertex.")
        self.vertices = vertices
        self.faces = faces
        self.ambient = check_ambient(ambient)
        self.field = field
        self.boundary_loops = boundary_loops(faces)
        self._neighbors = None

    @property
    def boundary_loop(self):
        '''The boundary cycle when there is exactly one, else None.'''
        return self.boundary_loops[0] if len(self.boundary_loops) == 1 else None

    @property
    def boundary_vertices(self):
        if not self.boundary_loops:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(self.boundary_loops)

    @property
    def heights(self):
        return self.vertices[:, -1]

    def edges(self):
        return np.unique(_edges(self.faces), axis=0)

    def edge_lengths(self):
        e = self.edges()
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def max_edge_length(self):
        return float(self.edge_lengths().max())

    def boundary_segments(self):
        '''Array (m, 2, 3) of the boundary segments of every loop.'''
        segs = [
            np.stack([self.vertices[loop], self.vertices[np.roll(loop, -1)]], axis=1)
            for loop in self.boundary_loops
        ]
        return np.concatenate(segs) if segs else np.zeros((0, 2, 3))

    def max_boundary_edge_length(self):
        s = self.boundary_segments()
        return float(np.linalg.norm(s[:, 1] - s[:, 0], axis=1).max()) if len(s) else 0.0

    def triangles(self):
        '''Array (F, 3, 3) of the vertex coordinates of each face.'''
        return self.vertices[self.faces]

    def neighbors(self, v):
        if self._neighbors is None:
            self._neighbors = [set() for _ in range(len(self.vertices))]
            for i, j in self.edges():
                self._neighbors[i].add(int(j))
                self._neighbors[j].add(int(i))
        return self._neighbors[v]

    def two_ring(self, v):
        ring = set(self.neighbors(v))
        for w in list(ring):
            ring |= self.neighbors(w)
        ring.discard(v)
        return sorted(ring)

    def transformed(self, R):
        '''Copy of the mesh with the vertices mapped by the 3x3 matrix R (no field).'''
        return HypersurfaceMesh(self.vertices @ np.asarray(R).T, self.faces, self.ambient)

    # --- Curvature
    def vertex_jet(self, v):
        '''
        Height, gradient and Hessian of the surface seen as a graph near vertex v,
        by least squares on z - z_v = g.d + d^T H d / 2 over its two-ring.
        '''
        ring = self.two_ring(v)
        if len(ring) < 5:
            raise MeshError(f"Vertex {v} has too few neighbours ({len(ring)}) for a quadratic fit.")
        p = self.vertices[v]
        d = self.vertices[ring, :2] - p[:2]
        dz = self.vertices[ring, 2] - p[2]
        A = np.column_stack([d[:, 0], d[:, 1], d[:, 0] ** 2 / 2, d[:, 0] * d[:, 1], d[:, 1] ** 2 / 2])
        coef, *_ = np.linalg.lstsq(A, dz, rcond=None)
        grad = coef[:2]
        hess = np.array([[coef[2], coef[3]], [coef[3], coef[4]]])
        return p[2], grad, hess

    def vertex_shape(self, v):
        p = self.vertices[v]
        if self.field is not None:
            value, grad, hess = self.field.jet(p[:2])
        else:
            value, grad, hess = self.vertex_jet(v)
        g, h, _ = graph_forms(np.asarray(value), grad, hess, self.ambient)
        return ShapeData(p[:2], g, h, self.ambient)

    def vertex_profile(self, v):
        return curvature_profile(self.vertex_shape(v))

    def __repr__(self):
        return (
            f"HypersurfaceMesh({len(self.vertices)} vertices, {len(self.faces)} faces, "
            f"{len(self.boundary_loops)} boundary loops, {self.ambient})"
        )


# --- GRAPH MESHES ------------------------------------------------------------------


def _strip(inner, outer):
    '''Triangles between two concentric rings, merging their vertices by angle.'''
    m_a, m_b = len(inner), len(outer)
    if m_a == 1:
        return [(inner[0], outer[j], outer[(j + 1) % m_b]) for j in range(m_b)]
    faces = []
    i = j = 0
    while i < m_a or j < m_b:
        advance_outer = j < m_b and (i >= m_a or (j + 1) / m_b <= (i + 1) / m_a)
        if advance_outer:
            faces.append((inner[i % m_a], outer[j], outer[(j + 1) % m_b]))
            j += 1
        else:
            faces.append((inner[i], outer[j % m_b], inner[(i + 1) % m_a]))
            i += 1
    return faces


def ring_radii(radius, rings, spacing="polar"):
    k = np.arange(rings + 1)
    if spacing == "polar":
        return radius * np.sin(np.pi * k / (2 * rings))
    if spacing == "uniform":
        return radius * k / rings
    raise MeshError(f"Unknown ring spacing {spacing!r}, expected 'polar' or 'uniform'.")


def graph_mesh(u, radius=None, rings=40, spacing="polar", ambient="euclidean"):
    '''
    Triangulate the graph of u over the closed disk of the given radius: a
    centre vertex and <rings> concentric rings, 6k vertices on ring k, the
    outer ring being the boundary loop.
    "polar" spacing (r_k = radius sin(pi k / 2K)) is well shaped on hemispheres.
    '''
    if u.n != 2:
        raise MeshError("Graph meshes are built for n = 2.")
    radius = u.radius if radius is None else radius
    radii = ring_radii(radius, rings, spacing)
    xy = [np.zeros((1, 2))]
    ids = [[0]]
    for k in range(1, rings + 1):
        theta = 2 * np.pi * np.arange(6 * k) / (6 * k)
        xy.append(radii[k] * np.stack([np.cos(theta), np.sin(theta)], axis=1))
        ids.append(list(range(ids[-1][-1] + 1, ids[-1][-1] + 1 + 6 * k)))
    xy = np.concatenate(xy)
    with np.errstate(invalid="ignore"):
        z = u.value(xy)
    if not np.all(np.isfinite(z)):
        raise MeshError(f"{u} is not defined on the whole disk of radius {radius}.")
    faces = []
    for inner, outer in zip(ids[:-1], ids[1:]):
        faces += _strip(inner, outer)
    return HypersurfaceMesh(np.column_stack([xy, z]), faces, ambient, field=u)


# --- I/O ---------------------------------------------------------------------------


def read_mesh(path, ambient="euclidean"):
    try:
        with open(path) as f:
            lines = [line.split() for line in f if line.strip()]
        nv, nf = int(lines[0][0]), int(lines[0][1])
        vertices = np.array(lines[1 : 1 + nv], dtype=np.float64)
        faces = np.array(lines[1 + nv : 1 + nv + nf], dtype=np.int64)
    except (OSError, IndexError, ValueError) as exc:
        raise MeshError(f"Cannot read mesh file {path}: {exc}") from exc
    if len(vertices) != nv or len(faces) != nf:
        raise MeshError(f"Mesh file {path} announces {nv} vertices and {nf} faces.")
    return HypersurfaceMesh(vertices, faces, ambient)


def write_mesh(mesh, path):
    with open(path, "w") as f:
        f.write(f"{len(mesh.vertices)} {len(mesh.faces)}\n")
        for p in mesh.vertices:
            f.write(" ".join(f"{c:.17g}" for c in p) + "\n")
        for t in mesh.faces:
            f.write(" ".join(str(int(i)) for i in t) + "\n")
