'''
Mean curvature operators of graphs and the checks built on them.
- mean_curvature_euclidean: H0(u) = sum_ij a~^ij(Du) u_ij, the divergence of Du/W
- mean_curvature_hyperbolic: H(u) = n/W + u H0(u) in the upper half-space model
- SphereFamily: the spheres S(q) slid along the vertical axis
- total_mean_curvature: |int_{B_a} H0(u)| <= n Vol(B_1), midpoint rule and boundary flux
- counterexample_report: u1 >= v >= u2 while H(u1), H(u2) < H(v) = sqrt(2) n,
  i.e. the comparison principle fails for the hyperbolic operator.

>>> from hemirigid import fields
>>> float(mean_curvature_hyperbolic(fields.u1(3), [0.2, 0.1, 0.0]))
3.0
>>> geodesic_sphere_mean_curvature(4.0, 2.0, 3)
6.0
'''

import numpy as np
from scipy.special import gamma

from hemirigid import fields
from hemirigid.errors import AmbientViolationError, ConfigurationError, DomainError
from hemirigid.graphs import check_ambient
from hemirigid.grids import CartesianGrid, disk_cells

MAX_GRID_SPACING = 0.1
# tol(h) of the quadrature bound is QUADRATURE_TOL_FACTOR * h^2.
QUADRATURE_TOL_FACTOR = 10.0
# Equality of analytic values (constant mean curvature, boundary values).
EQUALITY_TOL = 1e-9
ORDERING_TOL = 1e-12


def unit_ball_volume(n):
    return float(np.pi ** (n / 2) / gamma(n / 2 + 1))


def graph_mean_curvature(grad, hess):
    '''H0 from the first and second derivatives, batched over leading axes.'''
    n = grad.shape[-1]
    W2 = 1 + np.sum(grad**2, axis=-1)
    W = np.sqrt(W2)
    outer = grad[..., :, None] * grad[..., None, :]
    a = (np.eye(n) - outer / W2[..., None, None]) / W[..., None, None]
    return np.einsum("...ij,...ij->...", a, hess)


def mean_curvature_euclidean(u, x):
    _, grad, hess = u.jet(x)
    return graph_mean_curvature(grad, hess)


def mean_curvature_hyperbolic(u, x):
    value, grad, hess = u.jet(x)
    if np.any(value <= 0):
        raise AmbientViolationError("u <= 0: the graph leaves the upper half-space model.")
    W = np.sqrt(1 + np.sum(grad**2, axis=-1))
    return u.n / W + value * graph_mean_curvature(grad, hess)


def mean_curvature(u, x, ambient="euclidean"):
    if check_ambient(ambient) == "euclidean":
        return mean_curvature_euclidean(u, x)
    return mean_curvature_hyperbolic(u, x)


def geodesic_sphere_mean_curvature(q, a, n):
    '''
    Hyperbolic mean curvature (q/a) n of the Euclidean sphere of radius a
    centred at height q, inward normal.
    '''
    if not 0 < a < q:
        raise DomainError(
            f"Sphere of radius {a} centred at height {q} "
            "is not contained in the upper half-space."
        )
    return q / a * n


class SphereFamily:
    '''
    The sphere S(q) of the sliding procedure, centre (0, ..., 0, q).
    Euclidean: unit radius. Hyperbolic: radius q/sqrt(2), i.e. the geodesic
    sphere through the cone x^{n+1} = |x| whose lower cap is the graph of v_q,
    of constant hyperbolic mean curvature sqrt(2) n.
    '''

    def __init__(self, ambient="euclidean", q=0.0):
        self.ambient = check_ambient(ambient)
        if ambient == "hyperbolic" and not q > 0:
            raise DomainError(f"Hyperbolic spheres S(q) need q > 0, got {q}.")
        self.q = float(q)

    def with_q(self, q):
        return SphereFamily(self.ambient, q)

    @property
    def radius(self):
        return 1.0 if self.ambient == "euclidean" else self.q / np.sqrt(2.0)

    def center(self, n):
        '''Centre of the sphere in R^{n+1}.'''
        c = np.zeros(n + 1)
        c[-1] = self.q
        return c

    def signed_distance(self, points):
        '''|p - c| - radius for points of R^{n+1} (negative inside the ball).'''
        points = np.asarray(points, dtype=np.float64)
        return np.linalg.norm(points - self.center(points.shape[-1] - 1), axis=-1) - self.radius

    def lower_cap(self, n):
        '''The lower hemisphere of S(q) as a graph.'''
        if self.ambient == "euclidean":
            return fields.sphere_cap(n, self.q, 1.0, -1, name=f"S({self.q:g})")
        return fields.v_q(n, self.q)

    def mean_curvature(self, n):
        '''Mean curvature of the lower cap for the upward normal.'''
        if self.ambient == "euclidean":
            return float(n)
        return geodesic_sphere_mean_curvature(self.q, self.radius, n)

    def __repr__(self):
        return f"SphereFamily({self.ambient!r}, q={self.q:g})"


# --- TOTAL MEAN CURVATURE ------------------------------------------------------------


def quadrature_tolerance(h):
    return QUADRATURE_TOL_FACTOR * h**2


class QuadratureReport:
    def __init__(self, integral_value, bound, h, radius, flux_value, tol):
        self.integral_value = integral_value
        self.bound = bound
        self.h = h
        self.radius = radius
        self.flux_value = flux_value
        self.tol = tol

    @property
    def slack(self):
        return self.bound - abs(self.integral_value)

    @property
    def passed(self):
        return self.slack >= -self.tol

    def to_dict(self):
        return dict(
            claim="|int_{B_a} H0(u)| <= n Vol(B_1)",
            lhs=abs(self.integral_value),
            rhs=self.bound,
            slack=self.slack,
            integral_value=self.integral_value,
            flux_value=self.flux_value,
            radius=self.radius,
            grid_h=self.h,
            tol=self.tol,
            **{"pass": self.passed},
        )


def total_mean_curvature(u, h):
    '''
    Integrate H0(u) over B_a, a = radius - 2h, by the midpoint rule, and (n=2)
    compare with the boundary flux of Du/W over the circle of radius a.
    '''
    if not 0 < h <= MAX_GRID_SPACING:
        raise ConfigurationError(f"Grid spacing h={h} is outside (0, {MAX_GRID_SPACING}].")
    n = u.n
    a = u.radius - 2 * h
    centres, weights = disk_cells(a, h, n)
    integral = float(np.sum(weights * mean_curvature_euclidean(u, centres)))
    bound = n * unit_ball_volume(n) * u.radius ** (n - 1)

    flux = None
    if n == 2:
        M = max(64, int(np.ceil(2 * np.pi * a / h)))
        theta = 2 * np.pi * np.arange(M) / M
        normal = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        _, grad, _ = u.jet(a * normal)
        W = np.sqrt(1 + np.sum(grad**2, axis=-1))
        flux = float(np.sum(np.sum(grad * normal, axis=-1) / W) * a * 2 * np.pi / M)
    return QuadratureReport(integral, bound, h, a, flux, quadrature_tolerance(h))


def total_mean_curvature_trend(u, spacings=(1 / 64, 1 / 128, 1 / 256)):
    '''
    Reports for a decreasing sequence of spacings, and the linear Richardson
    extrapolation of the integral from the last two (the integration radius
    a = 1 - 2h tends to 1 linearly in h).
    '''
    reports = [total_mean_curvature(u, h) for h in spacings]
    values = np.array([r.integral_value for r in reports])
    bound = reports[0].bound
    gaps = bound - np.abs(values)
    (h1, i1), (h2, i2) = [(r.h, r.integral_value) for r in reports[-2:]]
    extrapolated = (h1 * i2 - h2 * i1) / (h1 - h2)
    return dict(
        reports=[r.to_dict() for r in reports],
        gaps=gaps.tolist(),
        monotone=bool(np.all(np.diff(np.abs(values)) > 0)),
        extrapolated_integral=float(extrapolated),
        extrapolated_gap=float(bound - abs(extrapolated)),
        passed=all(r.passed for r in reports),
    )


# --- COUNTEREXAMPLE TO THE COMPARISON PRINCIPLE ------------------------------------


def _closed_disk_samples(h, n):
    '''
    Grid nodes of the closed unit disk plus points on the unit circle, embedded
    in the plane of the first two coordinates of R^n. The fields compared below
    are radial, so this section meets every radius.
    '''
    grid = CartesianGrid(h, 1.0, 2, pad=0)
    M = int(np.ceil(2 * np.pi / h))
    theta = 2 * np.pi * np.arange(M) / M
    samples = []
    for p in (grid.points[grid.closed_inside()], np.stack([np.cos(theta), np.sin(theta)], -1)):
        samples.append(np.concatenate([p, np.zeros((len(p), n - 2))], axis=1))
    return samples


def _claim(claim, lhs, rhs, slack, h, tol, passed, **details):
    res = dict(claim=claim, lhs=lhs, rhs=rhs, slack=slack, grid_h=h, tol=tol, **details)
    res["pass"] = bool(passed)
    return res


def counterexample_report(epsilon=0.25, h=1 / 128, n=2):
    '''
    Check, on the grid of spacing h, the four facts showing that the comparison
    principle does not hold for the hyperbolic mean curvature operator:
    H(u1) = n < sqrt(2) n, H(u2) = n(1+eps)/sqrt(1+eps^2) < sqrt(2) n,
    u1 >= v >= u2 on the closed disk, u1 = u2 = v = 1 on its boundary.
    '''
    if not 0 < epsilon < 0.5:
        raise DomainError(f"epsilon={epsilon} is outside (0, 1/2).")
    if n < 2:
        raise DomainError("The counterexample needs n >= 2.")
    U1, U2, V = fields.u1(n), fields.u2(n, epsilon), fields.model_sphere(n)
    disk, circle = _closed_disk_samples(h, n)
    Hmax = np.sqrt(2) * n

    claims = []
    expected_u2 = n * (1 + epsilon) / np.sqrt(1 + epsilon**2)
    for u, expected, label in [
        (U1, float(n), "H(u1) = n < sqrt(2) n"),
        (U2, expected_u2, "H(u2) = n(1+eps)/sqrt(1+eps^2) < sqrt(2) n"),
    ]:
        H = mean_curvature_hyperbolic(u, disk)
        deviation = float(np.max(np.abs(H - expected)))
        top = float(H.max())
        claims.append(
            _claim(
                label,
                top,
                Hmax,
                Hmax - top,
                h,
                EQUALITY_TOL,
                deviation <= EQUALITY_TOL and top < Hmax,
                expected=float(expected),
                max_deviation=deviation,
            )
        )

    d1 = U1.value(disk) - V.value(disk)
    d2 = V.value(disk) - U2.value(disk)
    lowest = float(min(d1.min(), d2.min()))
    claims.append(
        _claim(
            "u1 >= v >= u2 on the closed disk",
            lowest,
            0.0,
            lowest,
            h,
            ORDERING_TOL,
            lowest >= -ORDERING_TOL,
            min_u1_minus_v=float(d1.min()),
            max_u1_minus_v=float(d1.max()),
            min_v_minus_u2=float(d2.min()),
            max_v_minus_u2=float(d2.max()),
        )
    )

    rim = max(float(np.max(np.abs(u.value(circle) - 1))) for u in (U1, U2, V))
    claims.append(
        _claim(
            "u1 = u2 = v = 1 on the boundary",
            rim,
            0.0,
            ORDERING_TOL - rim,
            h,
            ORDERING_TOL,
            rim <= ORDERING_TOL,
        )
    )

    passed = all(c["pass"] for c in claims)
    return dict(
        epsilon=epsilon,
        n=n,
        grid_h=h,
        claims=claims,
        passed=passed,
        # v has the largest mean curvature, yet lies between u1 and u2.
        comparison_principle_fails=passed,
    )


# --- SUPPLEMENTARY CHECKS ----------------------------------------------------------


def positivity_check(u, h=1 / 64):
    '''
    At an interior minimum y0 with u(y0) <= 0, Du = 0 and D2u >= 0 so that
    H(u)(y0) = n + u Delta u <= n. Hence H(u) >= sqrt(2) n with u = 1 on the rim
    forces u > 0. Evaluated at the minimum node of a planar grid (n = 2).
    '''
    if u.n != 2:
        raise ConfigurationError("positivity_check samples a planar grid, n = 2 only.")
    grid = CartesianGrid(h, u.radius, 2, pad=0)
    pts = grid.points[grid.closed_inside(u.radius)]
    values = u.value(pts)
    i = int(np.argmin(values))
    y0, m = pts[i], float(values[i])
    interior = bool(np.linalg.norm(y0) < u.radius - 2 * h)
    report = dict(min_value=m, argmin=y0.tolist(), interior=interior, grid_h=h)
    if m <= 0 and interior:
        _, grad, hess = u.jet(y0)
        W = np.sqrt(1 + grad @ grad)
        H = float(u.n / W + m * graph_mean_curvature(grad, hess))
        report.update(mean_curvature_at_min=H, consistent=H <= u.n + EQUALITY_TOL)
    else:
        report.update(mean_curvature_at_min=None, consistent=True)
    return report


def sphere_family_report(q_values, n=2, samples=20):
    '''
    For each q: H(v_q) = sqrt(2) n, v_q(r) >= r for r <= q/sqrt(2), v_q(1)
    against 1 (when the cap reaches r = 1), and the rim of S(q) lying on S(3q).
    '''
    rows = []
    e1 = np.zeros(n)
    e1[0] = 1.0
    for q in q_values:
        family = SphereFamily("hyperbolic", q)
        v = family.lower_cap(n)
        R = family.radius
        radii = np.linspace(0.0, 0.95 * min(1.0, R), samples)
        H = mean_curvature_hyperbolic(v, radii[:, None] * e1)
        # Closed form, so that the rim r = q/sqrt(2) itself is included.
        cone = np.linspace(0.0, R, samples)
        cone_slack = float(np.min(q - np.sqrt(np.maximum(q**2 / 2 - cone**2, 0.0)) - cone))
        rim_on_triple = float(np.hypot(R, 2 * q) - family.with_q(3 * q).radius)
        boundary_excess = None
        if q**2 / 2 >= 1 - 1e-12:
            boundary_excess = float(q - np.sqrt(max(q**2 / 2 - 1, 0.0)) - 1)
        row = dict(
            q=q,
            mean_curvature=float(family.mean_curvature(n)),
            max_deviation=float(np.max(np.abs(H - np.sqrt(2) * n))),
            cone_slack=cone_slack,
            rim_on_triple_sphere=rim_on_triple,
            boundary_excess=boundary_excess,
        )
        row["passed"] = (
            row["max_deviation"] <= EQUALITY_TOL
            and cone_slack >= -ORDERING_TOL
            and abs(rim_on_triple) <= EQUALITY_TOL
            and (boundary_excess is None or boundary_excess >= -EQUALITY_TOL)
        )
        rows.append(row)
    return rows
