'''
Library of analytic scalar fields whose graphs appear in the rigidity
statements, all vectorized over leading axes.
Sphere caps u = q + tau sqrt(R^2 - r^2) (tau=+1 upper cap, tau=-1 lower cap):
- hemisphere: sqrt(1 - r^2), the upper unit hemisphere
- lower_hemisphere(radius): -sqrt(radius^2 - r^2)
- model_sphere: v = 2 - sqrt(2 - r^2), the model sphere of H^{n+1}
- v_q(q): q - sqrt(q^2/2 - r^2), the geodesic spheres through the cone x^{n+1} = r
- u2(epsilon): 1 + epsilon - sqrt(1 + epsilon^2 - r^2)
and some simple others: u1 (constant 1), plane, paraboloid, gaussian_bump, saddle.

>>> u = model_sphere(2)
>>> float(u.value([0.0, 0.0])), float(u.value([1.0, 0.0]))
(0.5857864376269049, 1.0)
>>> named_field("u2:0.25", 2).name
'u2:0.25'
'''

import numpy as np

from hemirigid.errors import ConfigurationError, DomainError
from hemirigid.graphs import AnalyticField


def _outer(x):
    return x[..., :, None] * x[..., None, :]


def sphere_cap(n, q, R_sq, tau, radius=None, name=None):
    '''
    Cap q + tau sqrt(R_sq - |x|^2) of the sphere of squared radius R_sq, centre
    at height q.
    Du = -tau x/w and D2u = -tau (I/w + x x^T/w^3), with w = sqrt(R_sq - |x|^2).
    '''
    radius = np.sqrt(R_sq) if radius is None else radius

    def w(x):
        w2 = R_sq - np.sum(x**2, axis=-1)
        # Points on the rim up to rounding.
        w2 = np.where((w2 < 0) & (w2 > -1e-12 * R_sq), 0.0, w2)
        return np.sqrt(w2)

    def value(x):
        return q + tau * w(x)

    def gradient(x):
        return -tau * x / w(x)[..., None]

    def hessian(x):
        wx = w(x)[..., None, None]
        return -tau * (np.eye(n) / wx + _outer(x) / wx**3)

    return AnalyticField(n, value, gradient, hessian, radius, name)


def hemisphere(n):
    return sphere_cap(n, 0.0, 1.0, +1, name="hemisphere")


def lower_hemisphere(n, radius=1.0):
    return sphere_cap(n, 0.0, radius**2, -1, name=f"lower_hemisphere:{radius:g}")


def model_sphere(n):
    return sphere_cap(n, 2.0, 2.0, -1, radius=1.0, name="model_sphere")


def v_q(n, q):
    if not q > 0:
        raise DomainError(f"v_q needs q > 0, got {q}.")
    radius = min(1.0, q / np.sqrt(2.0))
    return sphere_cap(n, q, q**2 / 2, -1, radius=radius, name=f"v_q:{q:g}")


def u2(n, epsilon):
    if not epsilon > 0:
        raise DomainError(f"u2 needs epsilon > 0, got {epsilon}.")
    return sphere_cap(n, 1 + epsilon, 1 + epsilon**2, -1, radius=1.0, name=f"u2:{epsilon:g}")


def quadratic(n, c, b, M, radius=1.0, name=None):
    '''u = c + b.x + x^T M x / 2, M symmetric.'''
    b = np.asarray(b, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)

    def value(x):
        return c + x @ b + 0.5 * np.einsum("...i,ij,...j->...", x, M, x)

    def gradient(x):
        return b + x @ M

    def hessian(x):
        return np.broadcast_to(M, x.shape[:-1] + (n, n)).copy()

    return AnalyticField(n, value, gradient, hessian, radius, name)


def plane(n, c=0.0, slope=None):
    slope = np.zeros(n) if slope is None else slope
    return quadratic(n, c, slope, np.zeros((n, n)), name=f"plane:{c:g}")


def u1(n):
    return quadratic(n, 1.0, np.zeros(n), np.zeros((n, n)), name="u1")


def paraboloid(n, curvature=1.0):
    '''u = curvature |x|^2 / 2.'''
    return quadratic(n, 0.0, np.zeros(n), curvature * np.eye(n), name="paraboloid")


def saddle(n=2, scale=0.1, offset=-1.0):
    '''u = offset + scale (x^2 - y^2).'''
    if n != 2:
        raise DomainError("The saddle field is defined for n = 2.")
    return quadratic(n, offset, np.zeros(2), np.diag([2 * scale, -2 * scale]), name="saddle")


def gaussian_bump(n, center, width, amplitude):
    '''u = amplitude exp(-|x - center|^2 / width^2).'''
    center = np.asarray(center, dtype=np.float64)

    def value(x):
        return amplitude * np.exp(-np.sum((x - center) ** 2, axis=-1) / width**2)

    def gradient(x):
        return -2 * (x - center) / width**2 * value(x)[..., None]

    def hessian(x):
        d = x - center
        return value(x)[..., None, None] * (4 * _outer(d) / width**4 - 2 * np.eye(n) / width**2)

    return AnalyticField(n, value, gradient, hessian, name="gaussian_bump")


def field_sum(fields, name=None):
    n = fields[0].n
    radius = min(f.radius for f in fields)
    return AnalyticField(
        n,
        lambda x: sum(f.value(x) for f in fields),
        lambda x: sum(f.gradient(x) for f in fields),
        lambda x: sum(f.hessian(x) for f in fields),
        radius,
        name,
    )


def random_bump_field(rng, n):
    '''Sum of 1 to 3 Gaussian bumps, centres in B_1, widths in [.2,.6], amplitudes in [-.5,.5].'''
    bumps = []
    for _ in range(rng.integers(1, 4)):
        direction = rng.normal(size=n)
        center = direction / np.linalg.norm(direction) * rng.uniform() ** (1 / n)
        bumps.append(
            gaussian_bump(n, center, rng.uniform(0.2, 0.6), rng.uniform(-0.5, 0.5))
        )
    return field_sum(bumps, name="random_bumps")


# Named fields reachable from the command line, "name" or "name:param".
NAMED_FIELDS = {
    "hemisphere": lambda n, p: hemisphere(n),
    "lower_hemisphere": lambda n, p: lower_hemisphere(n, 1.0 if p is None else p),
    "model_sphere": lambda n, p: model_sphere(n),
    "v": lambda n, p: model_sphere(n),
    "u1": lambda n, p: u1(n),
    "u2": lambda n, p: u2(n, 0.25 if p is None else p),
    "v_q": lambda n, p: v_q(n, 2.0 if p is None else p),
    "plane": lambda n, p: plane(n, 0.0 if p is None else p),
    "paraboloid": lambda n, p: paraboloid(n, 1.0 if p is None else p),
    "saddle": lambda n, p: saddle(n, 0.1 if p is None else p),
}


def named_field(spec, n):
    name, _, param = spec.partition(":")
    if name not in NAMED_FIELDS:
        raise ConfigurationError(
            f"Unknown field {name!r}; available: {', '.join(sorted(NAMED_FIELDS))}."
        )
    try:
        p = float(param) if param else None
        field = NAMED_FIELDS[name](n, p)
    except (ValueError, DomainError) as exc:
        raise ConfigurationError(f"Bad field specification {spec!r}: {exc}") from exc
    field.name = spec
    return field
