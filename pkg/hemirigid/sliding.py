'''
Sliding-sphere comparisons on triangulated surfaces.
- incorporation_check / hyperbolic_incorporation_check: the boundary lies on the
  plane x^3 = 0 (resp. 1) around the unit disk, and the surface stays out of the
  solid hemicylinder {r <= 1, x^3 > 0} (resp. the hemicone {x^3 >= r, x^3 > 1})
- first_contact: lower S(q) from above until it touches the surface, classify
  the contact and decide whether the surface is the sphere itself
- plane_contact_point: raise a horizontal plane from below until it touches
- k_convex_witness: a point where the curvature vector is in Gamma_k
'''

import warnings

import numpy as np
from scipy.spatial import cKDTree

from hemirigid.errors import AmbientViolationError, ContactError, MeshError
from hemirigid.symfuncs import elem_sym, gamma_k_membership

# Boundary heights are compared to the plane up to PLANE_TOL.
PLANE_TOL = 1e-6
# Number of samples of the unit circle tested for enclosure by the boundary.
ENCLOSURE_SAMPLES = 256
# Barycentric lattice order used to test faces against the forbidden region.
FACE_SAMPLING_ORDER = 4
# Boundary band = BOUNDARY_BAND_FACTOR * max boundary edge length.
BOUNDARY_BAND_FACTOR = 3.0
# Containment residual allowed for a rigid verdict, in squared edge lengths.
CONTAINMENT_FACTOR = 5.0


class SlideSettings:
    def __init__(self):
        self.bisection_tol = 1e-9
        self.q_min = -10.0
        self.max_iter = 200
        self.scan_step = None  # Default: half the longest edge.
        self.max_scan = 100_000


# --- GEOMETRIC PRIMITIVES ----------------------------------------------------------


def winding_numbers(polygon, points):
    '''Winding number of a closed planar polygon (m, 2) around each point (k, 2).'''
    d1 = polygon[None, :, :] - points[:, None, :]
    d2 = np.roll(polygon, -1, axis=0)[None, :, :] - points[:, None, :]
    cross = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    dot = np.sum(d1 * d2, axis=-1)
    return np.rint(np.sum(np.arctan2(cross, dot), axis=1) / (2 * np.pi)).astype(int)


def segment_distances(points, a, b):
    '''Distance from each point (k, d) to the nearest segment [a_j, b_j] (m, d).'''
    ab = b - a
    ap = points[:, None, :] - a[None, :, :]
    t = np.clip(np.sum(ap * ab, -1) / np.maximum(np.sum(ab * ab, -1), 1e-300), 0, 1)
    return np.min(np.linalg.norm(ap - t[..., None] * ab, axis=-1), axis=1)


def closest_points_on_triangles(p, A, B, C):
    '''
    Closest point to p on each triangle (A_f, B_f, C_f), by the Voronoi regions
    of vertices, edges and interior.
    '''
    ab, ac = B - A, C - A
    ap, bp, cp = p - A, p - B, p - C
    d1, d2 = np.sum(ab * ap, -1), np.sum(ac * ap, -1)
    d3, d4 = np.sum(ab * bp, -1), np.sum(ac * bp, -1)
    d5, d6 = np.sum(ab * cp, -1), np.sum(ac * cp, -1)
    va, vb, vc = d3 * d6 - d5 * d4, d5 * d2 - d1 * d6, d1 * d4 - d3 * d2

    def ratio(num, den):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den != 0, num / den, 0.0)[:, None]

    denom = va + vb + vc
    res = A + ab * ratio(vb, denom) + ac * ratio(vc, denom)
    done = np.zeros(len(A), bool)
    regions = [
        ((d1 <= 0) & (d2 <= 0), A),
        ((d3 >= 0) & (d4 <= d3), B),
        ((vc <= 0) & (d1 >= 0) & (d3 <= 0), A + ab * ratio(d1, d1 - d3)),
        ((d6 >= 0) & (d5 <= d6), C),
        ((vb <= 0) & (d2 >= 0) & (d6 <= 0), A + ac * ratio(d2, d2 - d6)),
        (
            (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0),
            B + (C - B) * ratio(d4 - d3, (d4 - d3) + (d5 - d6)),
        ),
    ]
    for mask, value in regions:
        sel = mask & ~done
        res[sel] = value[sel]
        done |= sel
    return res


def circumradii(triangles):
    a = np.linalg.norm(triangles[:, 1] - triangles[:, 2], axis=1)
    b = np.linalg.norm(triangles[:, 2] - triangles[:, 0], axis=1)
    c = np.linalg.norm(triangles[:, 0] - triangles[:, 1], axis=1)
    area2 = np.linalg.norm(
        np.cross(triangles[:, 1] - triangles[:, 0], triangles[:, 2] - triangles[:, 0]), axis=1
    )
    return a * b * c / np.maximum(2 * area2, 1e-300)


def barycentric_lattice(order):
    '''Barycentric coordinates (k, 3) of the points i/order, j/order of a triangle.'''
    return np.array(
        [(i, j, order - i - j) for i in range(order + 1) for j in range(order + 1 - i)]
    ) / float(order)


# --- INCORPORATION -----------------------------------------------------------------


class IncorporationReport:
    def __init__(self, ambient, conditions, diagnostics):
        self.ambient = ambient
        self.conditions = conditions
        self.diagnostics = diagnostics

    @property
    def passed(self):
        return all(self.conditions.values())

    def __bool__(self):
        return self.passed

    def to_dict(self):
        return dict(
            ambient=self.ambient,
            passed=self.passed,
            conditions=self.conditions,
            diagnostics=self.diagnostics,
        )


def _incorporation(mesh, height, forbidden, tol, ambient):
    if not mesh.boundary_loops:
        raise MeshError("The mesh has no boundary.")
    V = mesh.vertices
    diagnostics = dict(plane_height=height, tol=tol, boundary_loops=len(mesh.boundary_loops))
    cond_i = len(mesh.boundary_loops) == 1

    # (ii) Boundary on the plane, around the unit disk.
    deviation = float(np.max(np.abs(V[mesh.boundary_vertices, 2] - height)))
    diagnostics["max_boundary_height_deviation"] = deviation
    unenclosed = ENCLOSURE_SAMPLES
    if cond_i:
        theta = 2 * np.pi * np.arange(ENCLOSURE_SAMPLES) / ENCLOSURE_SAMPLES
        circle = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        polygon = V[mesh.boundary_loop, :2]
        near = segment_distances(circle, polygon, np.roll(polygon, -1, axis=0))
        # A chord of length e of the unit circle leaves out a cap of height 1 - sqrt(1 - e^2 / 4).
        e = np.max(np.linalg.norm(np.roll(polygon, -1, axis=0) - polygon, axis=1))
        sag = 1 - np.sqrt(max(0.0, 1 - e**2 / 4))
        diagnostics["enclosure_slack"] = float(sag + tol)
        enclosed = (winding_numbers(polygon, circle) != 0) | (near <= sag + tol)
        unenclosed = int(np.sum(~enclosed))
    diagnostics["unenclosed_circle_samples"] = unenclosed
    cond_ii = deviation <= tol and unenclosed == 0

    # (iii) Vertices, then sample points of the faces rising above the plane.
    bad_vertices = np.flatnonzero(forbidden(V, tol))
    high = np.flatnonzero(np.max(V[mesh.faces, 2], axis=1) > height + tol)
    samples = np.einsum("kj,fjd->fkd", barycentric_lattice(FACE_SAMPLING_ORDER), mesh.triangles()[high])
    bad_faces = high[np.any(forbidden(samples, tol), axis=1)]
    diagnostics["offending_vertices"] = bad_vertices[:50].tolist()
    diagnostics["offending_vertex_count"] = int(len(bad_vertices))
    diagnostics["offending_face_count"] = int(len(bad_faces))
    cond_iii = len(bad_vertices) == 0 and len(bad_faces) == 0

    return IncorporationReport(
        ambient, {"i": bool(cond_i), "ii": bool(cond_ii), "iii": bool(cond_iii)}, diagnostics
    )


def incorporation_check(mesh, tol=PLANE_TOL):
    '''Boundary on {x^3 = 0} around B_1, surface out of {r <= 1, x^3 > 0}.'''

    def forbidden(p, tol):
        return (np.linalg.norm(p[..., :2], axis=-1) <= 1) & (p[..., 2] > tol)

    return _incorporation(mesh, 0.0, forbidden, tol, "euclidean")


def hyperbolic_incorporation_check(mesh, tol=PLANE_TOL):
    '''Boundary on {x^3 = 1} around B_1, surface out of {x^3 >= r, x^3 > 1}.'''
    if np.any(mesh.heights <= 0):
        raise AmbientViolationError(
            f"{int(np.sum(mesh.heights <= 0))} vertices are outside the upper half-space."
        )

    def forbidden(p, tol):
        z = p[..., 2]
        return (z >= np.linalg.norm(p[..., :2], axis=-1)) & (z > 1 + tol)

    return _incorporation(mesh, 1.0, forbidden, tol, "hyperbolic")


def check_incorporation(mesh, ambient):
    if ambient == "euclidean":
        return incorporation_check(mesh)
    return hyperbolic_incorporation_check(mesh)


# --- FIRST CONTACT -----------------------------------------------------------------


class ContactIndicator:
    '''
    d(q) = min over the surface of |p - c(q)| - R(q), with the sphere S(q) of
    <family>. Vertices give an upper estimate; for each face, the closest point
    to the centre is corrected by the sag R - sqrt(R^2 - rho^2) of a sphere of
    radius R over the circumcircle (radius rho) of the face, since the vertices
    lie on the surface and the flat face cuts inside it.
    '''

    def __init__(self, mesh, family):
        self.mesh = mesh
        self.family = family
        self.triangles = mesh.triangles()
        self.circumradii = circumradii(self.triangles)
        self.evaluations = 0

    def sphere(self, q):
        return self.family.with_q(q)

    def gaps(self, q):
        '''Vertex gaps (V,), face gaps (F,) and the face closest points (F, 3).'''
        self.evaluations += 1
        sphere = self.sphere(q)
        c, R = sphere.center(2), sphere.radius
        vertex = sphere.signed_distance(self.mesh.vertices)
        T = self.triangles
        closest = closest_points_on_triangles(c, T[:, 0], T[:, 1], T[:, 2])
        rho = np.minimum(self.circumradii, R)
        sag = R - np.sqrt(R**2 - rho**2)
        face = np.linalg.norm(closest - c, axis=1) - R + sag
        return vertex, face, closest

    def __call__(self, q):
        vertex, face, _ = self.gaps(q)
        return float(min(vertex.min(), face.min()))


class ContactReport:
    def __init__(self, q0, contact_points, classification, containment_residual, verdict, **details):
        self.q0 = q0
        self.contact_points = contact_points
        self.classification = classification
        self.containment_residual = containment_residual
        self.verdict = verdict
        self.details = details

    def to_dict(self, max_points=100):
        return dict(
            q0=self.q0,
            classification=self.classification,
            containment_residual=self.containment_residual,
            verdict=self.verdict,
            contact_count=len(self.contact_points),
            contact_points=self.contact_points[:max_points].tolist(),
            **self.details,
        )


def _default_start(mesh, family):
    zmax = float(mesh.heights.max())
    if family.ambient == "euclidean":
        return zmax + 2.0
    # Lowest point of S(q) is q (1 - 1/sqrt(2)).
    return max(zmax, 0.0) / (1 - 1 / np.sqrt(2)) + 1.0


def first_contact(mesh, family, q_start=None, settings=None):
    '''
    Lower S(q) from q_start until it touches the mesh, locate the first contact
    q0 by bisection on d(q), and classify the contact:
    - interior_tangency: some contact point is farther than the boundary band from the boundary
    - boundary_only: all contact points are within the band
    - transversal_violation: a contact point lies above the boundary plane,
      impossible when incorporation really holds.
    The verdict is "rigid" for an interior tangency where the whole mesh lies on
    S(q0) (up to CONTAINMENT_FACTOR squared edge lengths), "hypothesis_violated"
    for an interior tangency without containment, and "inconclusive" otherwise.
    '''
    settings = settings or SlideSettings()
    incorporation = check_incorporation(mesh, family.ambient)
    if not incorporation.passed:
        raise ContactError(
            f"Incorporation condition fails: {incorporation.conditions}.", kind="incorporation"
        )
    indicator = ContactIndicator(mesh, family)
    edge = mesh.max_edge_length()
    step = settings.scan_step or 0.5 * edge
    q_floor = settings.q_min if family.ambient == "euclidean" else max(settings.q_min, 1e-6)

    hi = _default_start(mesh, family) if q_start is None else float(q_start)
    d_hi = indicator(hi)
    if not d_hi > 0:
        raise ContactError(f"S({hi:g}) already meets the mesh (d = {d_hi:.3e}).", kind="start")

    # Scan downward for a sign change of d.
    for _ in range(settings.max_scan):
        lo = max(hi - step, q_floor)
        d_lo = indicator(lo)
        if d_lo <= 0:
            break
        if lo <= q_floor:
            raise ContactError(f"No contact for q down to {q_floor:g}.", kind="no_contact")
        if d_lo > d_hi + settings.bisection_tol:
            warnings.warn(
                f"Contact indicator increased from {d_hi:.3e} to {d_lo:.3e} between "
                f"q={hi:g} and q={lo:g}.",
                category=UserWarning,
                stacklevel=2,
            )
        hi, d_hi = lo, d_lo
    else:
        raise ContactError("Scan for the first contact did not terminate.", kind="no_contact")

    for _ in range(settings.max_iter):
        if hi - lo <= settings.bisection_tol:
            break
        assert d_hi > 0 >= d_lo
        mid = 0.5 * (hi + lo)
        d_mid = indicator(mid)
        if d_mid > 0:
            hi, d_hi = mid, d_mid
        else:
            lo, d_lo = mid, d_mid
    q0 = hi

    vertex, face, closest = indicator.gaps(q0)
    contact_tol = max(edge**2, 10 * settings.bisection_tol)
    points = np.concatenate([mesh.vertices[vertex <= contact_tol], closest[face <= contact_tol]])
    gaps = np.concatenate([vertex[vertex <= contact_tol], face[face <= contact_tol]])
    points = points[np.argsort(gaps, kind="stable")]

    band = BOUNDARY_BAND_FACTOR * mesh.max_boundary_edge_length()
    seg = mesh.boundary_segments()
    tree = cKDTree(np.concatenate([seg[:, 0], 0.5 * (seg[:, 0] + seg[:, 1])]))
    to_boundary, _ = tree.query(points)
    interior = to_boundary > band
    plane_height = 0.0 if family.ambient == "euclidean" else 1.0
    above = points[:, 2] > plane_height + PLANE_TOL

    sphere = indicator.sphere(q0)
    rim_contact = False
    if family.ambient == "hyperbolic":
        # The contact set must stay inside S(q0), away from its equator.
        r = np.linalg.norm(points[:, :2], axis=1)
        rim_contact = bool(np.any((r >= sphere.radius - band) & (points[:, 2] >= q0 - band)))
        if rim_contact:
            warnings.warn(
                f"Contact close to the equator of S({q0:g}).", category=UserWarning, stacklevel=2
            )

    residual = float(np.max(np.abs(vertex)))
    if np.any(above):
        classification, verdict = "transversal_violation", "hypothesis_violated"
    elif np.any(interior):
        classification = "interior_tangency"
        verdict = "rigid" if residual <= CONTAINMENT_FACTOR * edge**2 else "hypothesis_violated"
    else:
        classification, verdict = "boundary_only", "inconclusive"
        warnings.warn(
            f"S({q0:g}) touches the mesh only near its boundary.", category=UserWarning, stacklevel=2
        )
    if rim_contact:
        verdict = "inconclusive"

    return ContactReport(
        q0,
        points,
        classification,
        residual,
        verdict,
        ambient=family.ambient,
        bracket=[lo, hi],
        evaluations=indicator.evaluations,
        contact_tol=contact_tol,
        boundary_band=band,
        max_edge_length=edge,
        rim_contact=rim_contact,
        incorporation=incorporation.to_dict(),
    )


# --- PLANE CONTACT -----------------------------------------------------------------


class PlaneContact:
    def __init__(self, vertex, point, profile):
        self.vertex = vertex
        self.point = point
        self.profile = profile

    def to_dict(self):
        return dict(vertex=int(self.vertex), point=self.point.tolist(), profile=self.profile.to_dict())


def plane_contact_point(mesh, tol=None, curvature_tol=1e-6):
    '''
    First point touched by the horizontal plane rising from below. It must be an
    interior vertex, where all principal curvatures (upward normal) are >= -curvature_tol.
    '''
    z = mesh.heights
    tol = 1e-9 * max(1.0, float(np.ptp(z))) if tol is None else tol
    candidates = np.flatnonzero(z <= z.min() + tol)
    interior = np.setdiff1d(candidates, mesh.boundary_vertices)
    if len(interior) == 0:
        raise ContactError(
            f"The rising plane first meets the mesh on its boundary (height {z.min():.6g}).",
            kind="degenerate",
        )
    v = int(interior[np.argmin(z[interior])])
    profile = mesh.vertex_profile(v)
    if profile.kappa.entries.min() < -curvature_tol:
        raise ContactError(
            f"Negative principal curvature {profile.kappa.entries.min():.3e} at the lowest point.",
            kind="curvature_sign",
        )
    return PlaneContact(v, mesh.vertices[v], profile)


def k_convex_witness(mesh, k):
    '''
    At the lowest point all kappa_i >= 0, so sigma_k > 0 there already puts the
    curvature vector in Gamma_k.
    '''
    contact = plane_contact_point(mesh)
    kappa = contact.profile.kappa
    return dict(
        k=k,
        vertex=contact.vertex,
        point=contact.point.tolist(),
        kappa=kappa.entries.tolist(),
        sigma_k=elem_sym(k, kappa),
        in_gamma_k=gamma_k_membership(kappa, k),
    )
