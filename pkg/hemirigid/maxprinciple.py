'''
Quasilinear operators Q(u) = sum_ij a~^ij(u, Du) u_ij + b~(Du) with
    a~^ij(t, p) = z(t)/W (delta_ij - p_i p_j / W^2),  b~(p) = b0/W,  W = sqrt(1 + |p|^2),
their linearization between two fields and the barrier of the boundary point lemma.
- QuasilinearOperator: euclidean (b0=0, z=1), hyperbolic (b0=n, z(t)=t) or custom
- apply_Q: Q(u) at some points
- linearize: a^ij, b^i, c such that Q(psi) - Q(phi) = L(psi - phi), with the
  ellipticity constant theta
- hopf_barrier, choose_lambda: w = exp(-lambda |x|^2) - exp(-lambda delta^2)
  and the choice of lambda making (L - |c|) w > 0 on the annulus delta/2 <= |x| <= delta.

>>> choose_lambda(1.0, 0.0, 0.5)
1.0
>>> choose_lambda(0.3536, 10.0, 0.5)
512.0
'''

import numpy as np
from numpy.polynomial.legendre import leggauss

from hemirigid.errors import DomainError, EllipticityError
from hemirigid.grids import CartesianGrid
from hemirigid.meanops import counterexample_report

GAUSS_LEGENDRE_ORDER = 16
MAX_DOUBLINGS = 200


class QuasilinearOperator:
    '''
    The operator family is fixed by the constant b0 and the function z with its
    derivative dz, both vectorized.
    '''

    def __init__(self, n, b0=0.0, z=None, dz=None, tag="custom"):
        self.n = n
        self.b0 = float(b0)
        self.z = z if z is not None else (lambda t: np.ones_like(np.asarray(t, dtype=float)))
        self.dz = dz if dz is not None else (lambda t: np.zeros_like(np.asarray(t, dtype=float)))
        self.tag = tag

    @classmethod
    def euclidean(cls, n):
        return cls(n, 0.0, tag="euclidean")

    @classmethod
    def hyperbolic(cls, n):
        return cls(
            n,
            float(n),
            lambda t: np.asarray(t, dtype=float),
            lambda t: np.ones_like(np.asarray(t, dtype=float)),
            tag="hyperbolic",
        )

    @classmethod
    def for_ambient(cls, ambient, n):
        if ambient == "euclidean":
            return cls.euclidean(n)
        if ambient == "hyperbolic":
            return cls.hyperbolic(n)
        raise DomainError(f"Unknown ambient space {ambient!r}.")

    def F(self, p):
        '''(delta_lm - p_l p_m / W^2) / W, i.e. a~ for z = 1.'''
        W2 = 1 + np.sum(p**2, axis=-1)[..., None, None]
        return (np.eye(self.n) - p[..., :, None] * p[..., None, :] / W2) / np.sqrt(W2)

    def dF_dp(self, p):
        '''Array [..., i, l, m] of dF^lm/dp_i.'''
        W = np.sqrt(1 + np.sum(p**2, axis=-1))[..., None, None, None]
        eye = np.eye(self.n)
        pi = p[..., :, None, None]
        pl = p[..., None, :, None]
        pm = p[..., None, None, :]
        return (
            -pi * eye[None, :, :] / W**3
            - (eye[:, :, None] * pm + eye[:, None, :] * pl) / W**3
            + 3 * pl * pm * pi / W**5
        )

    def a_tilde(self, t, p):
        return np.asarray(self.z(t))[..., None, None] * self.F(p)

    def b_tilde(self, p):
        return self.b0 / np.sqrt(1 + np.sum(p**2, axis=-1))

    def da_dp(self, t, p):
        return np.asarray(self.z(t))[..., None, None, None] * self.dF_dp(p)

    def da_dz(self, t, p):
        return np.asarray(self.dz(t))[..., None, None] * self.F(p)

    def db_dp(self, p):
        W = np.sqrt(1 + np.sum(p**2, axis=-1))[..., None]
        return -self.b0 * p / W**3

    def apply_jet(self, value, grad, hess):
        zt = np.asarray(self.z(value))
        if not np.all(np.isfinite(zt)):
            raise DomainError(f"z is not defined at some value of u (operator {self.tag}).")
        return np.einsum("...ij,...ij->...", self.a_tilde(value, grad), hess) + self.b_tilde(grad)

    def __repr__(self):
        return f"QuasilinearOperator({self.tag}, n={self.n}, b0={self.b0:g})"


def apply_Q(op, u, x):
    return op.apply_jet(*u.jet(x))


# --- LINEARIZATION -----------------------------------------------------------------


class LinearizedCoefficients:
    '''
    Coefficients of L h = sum a^ij h_ij + sum b^i h_i + c h at a batch of points,
    and the ellipticity constant theta = min z(psi) / W(Dpsi)^3.
    '''

    def __init__(self, points, a, b, c, theta):
        self.points = points
        self.a = a
        self.b = b
        self.c = c
        self.theta = theta

    def apply(self, value, grad, hess):
        '''L h from the jet of h.'''
        return np.einsum("...ij,...ij->...", self.a, hess) + np.sum(self.b * grad, -1) + self.c * value

    def min_eigenvalue(self):
        return float(np.min(np.linalg.eigvalsh(self.a)[..., 0]))

    def coefficient_bound(self):
        return coefficient_bound(self)

    def to_dict(self):
        return dict(
            points=np.asarray(self.points).tolist(),
            a=self.a.tolist(),
            b=self.b.tolist(),
            c=self.c.tolist(),
            theta=self.theta,
            C=self.coefficient_bound(),
        )


def gauss_legendre_unit(order=GAUSS_LEGENDRE_ORDER):
    '''Nodes and weights of the Gauss-Legendre rule mapped on [0, 1].'''
    x, w = leggauss(order)
    return (x + 1) / 2, w / 2


def linearize_jets(op, phi_jet, psi_jet, order=GAUSS_LEGENDRE_ORDER, points=None):
    '''
    Coefficients of L from the jets (value, gradient, Hessian) of phi and psi.
    The path integrals along t psi + (1-t) phi are computed by Gauss-Legendre.
    '''
    fv, fg, fh = phi_jet
    sv, sg, sh = psi_jet
    zpsi = np.asarray(op.z(sv))
    if not np.all(zpsi > 0):
        raise EllipticityError(
            f"z(psi) <= 0 at {int(np.sum(~(zpsi > 0)))} points (min {np.min(zpsi):.3e})."
        )
    a = op.a_tilde(sv, sg)
    b = np.zeros_like(sg)
    c = np.zeros_like(np.asarray(sv, dtype=float))
    for t, w in zip(*gauss_legendre_unit(order)):
        P = t * sg + (1 - t) * fg
        Z = t * sv + (1 - t) * fv
        b += w * (np.einsum("...ilm,...lm->...i", op.da_dp(sv, P), fh) + op.db_dp(P))
        c += w * np.einsum("...lm,...lm->...", op.da_dz(Z, fg), fh)
    theta = float(np.min(zpsi / (1 + np.sum(sg**2, axis=-1)) ** 1.5))
    return LinearizedCoefficients(points, a, b, c, theta)


def linearize(op, phi, psi, points, order=GAUSS_LEGENDRE_ORDER):
    '''
    Linearization of Q between the fields phi and psi at <points>, an array
    of points or a CartesianGrid (its nodes in the closed disk are used).
    '''
    if isinstance(points, CartesianGrid):
        points = points.points[points.closed_inside()]
    points = np.asarray(points, dtype=np.float64)
    return linearize_jets(op, phi.jet(points), psi.jet(points), order, points)


def coefficient_bound(coeffs):
    '''
    C = max over the points of sum_i |a^ii|, sum_i |b^i| and |c| - c, so that
    sum a^ii <= C, |b.x| <= C|x| and (c - |c|) >= -C.
    '''
    trace = np.sum(np.abs(np.diagonal(coeffs.a, axis1=-2, axis2=-1)), axis=-1)
    return float(
        max(
            np.max(trace),
            np.max(np.sum(np.abs(coeffs.b), axis=-1)),
            np.max(np.abs(coeffs.c) - coeffs.c),
        )
    )


# --- BARRIER -----------------------------------------------------------------------


class BarrierConfig:
    def __init__(self, delta, lam, theta=None, C=None, center=None):
        if not delta > 0:
            raise DomainError(f"delta must be positive, got {delta}.")
        if not lam > 0:
            raise DomainError(f"lambda must be positive, got {lam}.")
        self.delta = float(delta)
        self.lam = float(lam)
        self.theta = theta
        self.C = C
        self.center = center

    def to_dict(self):
        return dict(delta=self.delta, lam=self.lam, theta=self.theta, C=self.C)


def _relative(cfg, x):
    x = np.asarray(x, dtype=np.float64)
    return x if cfg.center is None else x - cfg.center


def hopf_barrier(cfg, x):
    '''w(x) and Dw(x) = -2 lambda x exp(-lambda |x|^2), for |x| <= delta.'''
    x = _relative(cfg, x)
    r2 = np.sum(x**2, axis=-1)
    if np.any(r2 > cfg.delta**2 * (1 + 1e-12)):
        raise DomainError(f"The barrier is defined on the ball of radius {cfg.delta}.")
    e = np.exp(-cfg.lam * r2)
    return e - np.exp(-cfg.lam * cfg.delta**2), -2 * cfg.lam * x * e[..., None]


def barrier_hessian(cfg, x):
    x = _relative(cfg, x)
    n = x.shape[-1]
    e = np.exp(-cfg.lam * np.sum(x**2, axis=-1))[..., None, None]
    return e * (4 * cfg.lam**2 * x[..., :, None] * x[..., None, :] - 2 * cfg.lam * np.eye(n))


def rim_normal_derivative(cfg):
    '''Derivative of w along the outward normal on |x| = delta.'''
    return -2 * cfg.lam * cfg.delta * np.exp(-cfg.lam * cfg.delta**2)


def lower_bound_expression(theta, C, lam, r):
    '''4 lambda^2 theta r^2 - 2 lambda C (r + 1) - C, times exp(-lambda r^2) a lower bound of (L - |c|) w.'''
    return 4 * lam**2 * theta * r**2 - 2 * lam * C * (r + 1) - C


def choose_lambda(theta, C, delta):
    '''
    First lambda of the sequence 1, 2, 4, ... with the lower bound expression
    positive at r = delta/2. The expression is a convex quadratic in r whose
    minimum then lies left of delta/2, so it stays positive on [delta/2, delta].
    '''
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}.")
    if not C >= 0:
        raise DomainError(f"C must be non-negative, got {C}.")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}.")
    lam = 1.0
    for _ in range(MAX_DOUBLINGS):
        if lower_bound_expression(theta, C, lam, delta / 2) > 0:
            return lam
        lam *= 2
    assert False and "The quadratic term must eventually dominate."


def annulus_samples(delta, n, samples, rng):
    '''Points uniformly distributed in the annulus delta/2 <= |x| <= delta of R^n.'''
    direction = rng.normal(size=(samples, n))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    u = rng.uniform(size=samples)
    r = ((delta / 2) ** n + u * (delta**n - (delta / 2) ** n)) ** (1 / n)
    return r[:, None] * direction


def verify_barrier(theta, C, delta, lam, samples=10_000, rng=None, n=2):
    '''Minimum of the lower bound expression over sampled annulus points.'''
    rng = np.random.default_rng(0) if rng is None else rng
    x = annulus_samples(delta, n, samples, rng)
    return float(np.min(lower_bound_expression(theta, C, lam, np.linalg.norm(x, axis=1))))


def barrier_operator(coeffs, cfg):
    '''
    (L - |c|) w with the actual coefficients, at the coefficient points lying in
    the annulus delta/2 <= |x - center| <= delta. Returns (points, values).
    '''
    x = _relative(cfg, coeffs.points)
    r = np.linalg.norm(x, axis=-1)
    keep = (r >= cfg.delta / 2) & (r <= cfg.delta)
    pts = np.asarray(coeffs.points)[keep]
    w, Dw = hopf_barrier(cfg, pts)
    D2w = barrier_hessian(cfg, pts)
    c = coeffs.c[keep]
    values = (
        np.einsum("...ij,...ij->...", coeffs.a[keep], D2w)
        + np.sum(coeffs.b[keep] * Dw, axis=-1)
        + (c - np.abs(c)) * w
    )
    return pts, values


# --- DEMONSTRATIONS ----------------------------------------------------------------


def comparison_failure_demo(epsilon=0.25, n=2, h=1 / 64, ambient="hyperbolic"):
    '''
    u1 >= v >= u2 with equal boundary values while H(v) = sqrt(2) n exceeds
    both H(u1) and H(u2): the comparison principle fails for the hyperbolic
    operator. The triple says nothing about the Euclidean operator.
    '''
    if ambient == "euclidean":
        return dict(
            ambient=ambient,
            applicable=False,
            comparison_principle_fails=None,
            note="The u1, v, u2 triple is a hyperbolic construction; no Euclidean claim.",
        )
    report = counterexample_report(epsilon, h, n)
    return dict(
        ambient=ambient,
        applicable=True,
        comparison_principle_fails=report["comparison_principle_fails"],
        report=report,
    )


def discrete_strong_max_check(phi, psi, op, h=1 / 32, radius=None, tol=1e-9):
    '''
    On the grid nodes at least 2h inside the disk: do Q(phi) <= Q(psi) and
    phi >= psi hold, do phi and psi touch at a node, and do they coincide?
    '''
    radius = min(phi.radius, psi.radius) if radius is None else radius
    grid = CartesianGrid(h, radius, phi.n, pad=0)
    pts = grid.points[grid.inside(radius, margin=2 * h)]
    gap = apply_Q(op, psi, pts) - apply_Q(op, phi, pts)
    separation = phi.value(pts) - psi.value(pts)
    return dict(
        grid_h=h,
        tol=tol,
        hypotheses_hold=bool(np.min(gap) >= -tol and np.min(separation) >= -tol),
        touches=bool(np.min(separation) <= tol),
        max_separation=float(np.max(separation)),
        coincide=bool(np.max(np.abs(separation)) <= tol),
    )
