'''
Graph hypersurfaces x^{n+1} = u(x) over a closed disk of R^n, seen either in
the Euclidean space R^{n+1} or in the upper half-space model of H^{n+1}.
- ScalarField and its two providers: AnalyticField (closures) and GridField
  (samples on a Cartesian grid, central differences of order 2).
- shape_operator_euclidean / shape_operator_hyperbolic: metric, second form and
  shape operator A = g^-1 h of the graph at a point, upward normal.
- curvature_profile: principal curvatures and the derived quantities (sigma_k,
  |Ao|^2, scalar curvature R, Gamma_k flags).
- check_identity_euclidean, check_identity_hyperbolic, check_gauss_equation:
  residuals of the algebraic identities relating H, sigma_2, |Ao|^2 and R.
'''

import json

import numpy as np

from hemirigid.errors import (
    AmbientViolationError,
    ConfigurationError,
    DomainError,
    EvaluationError,
    GeometryError,
)
from hemirigid.grids import CartesianGrid
from hemirigid.symfuncs import (
    AMBIENTS,
    CurvatureVector,
    binomial,
    elem_sym,
    elem_sym_all,
    gamma_k_membership,
    mean_curvature_floor,
    rigidity_threshold,
    symmetric_profile,
)

# Spread max(kappa)-min(kappa) below which a point is declared umbilic.
UMBILIC_TOL = 1e-8


def check_ambient(ambient):
    if ambient not in AMBIENTS:
        raise DomainError(f"Unknown ambient space {ambient!r}, expected one of {AMBIENTS}.")
    return ambient


# --- FIELDS ------------------------------------------------------------------------


class ScalarField:
    '''
    Base (abstract) class for a scalar function u on the closed ball of radius
    <radius> in R^n.
    Points are arrays whose last axis has size n; leading axes are kept, so the
    same field can be evaluated at one point or on a whole batch:
    value -> (...), gradient -> (..., n), hessian -> (..., n, n).
    '''

    def __init__(self, n, radius=1.0, name=None):
        self.n = n
        self.radius = float(radius)
        self.name = name

    def points(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1:] != (self.n,):
            raise DomainError(f"Expected points of dimension {self.n}, got shape {x.shape}.")
        return x

    def value(self, x):
        assert False and "This method should be implemented by inheritance."

    def gradient(self, x):
        assert False and "This method should be implemented by inheritance."

    def hessian(self, x):
        assert False and "This method should be implemented by inheritance."

    def jet(self, x):
        '''Value, gradient and Hessian; EvaluationError if any of them is not finite.'''
        with np.errstate(invalid="ignore", divide="ignore"):
            jet = self.value(x), self.gradient(x), self.hessian(x)
        if not all(np.all(np.isfinite(d)) for d in jet):
            raise EvaluationError(
                f"Derivatives of {self} are not available at some of the requested points."
            )
        return jet

    def __repr__(self):
        return f"{type(self).__name__}({self.name or ''}, n={self.n})"


class AnalyticField(ScalarField):
    '''
    A field given by three vectorized closures x -> value, gradient, Hessian.
    The Hessian is symmetrized on return.
    '''

    def __init__(self, n, value, gradient, hessian, radius=1.0, name=None):
        super().__init__(n, radius, name)
        self._value = value
        self._gradient = gradient
        self._hessian = hessian

    def value(self, x):
        return self._value(self.points(x))

    def gradient(self, x):
        return self._gradient(self.points(x))

    def hessian(self, x):
        H = self._hessian(self.points(x))
        return 0.5 * (H + np.swapaxes(H, -1, -2))


class GridField(ScalarField):
    '''
    A field known by its samples at the nodes of a CartesianGrid (n=2), NaN
    where unknown. Derivatives are second-order central differences at the nodes,
    bilinearly interpolated in between.
    Derivatives are only served at points at least 2h inside the rim of the disk,
    unless <closure> is set (the caller then guarantees samples beyond the rim).
    '''

    def __init__(self, values, grid, radius=None, closure=False, name=None):
        if grid.n != 2:
            raise ConfigurationError("Grid fields are implemented for n = 2 only.")
        values = np.asarray(values, dtype=np.float64)
        assert values.shape == grid.shape
        super().__init__(grid.n, grid.radius if radius is None else radius, name)
        self.grid = grid
        self.values = values
        self.closure = closure
        self._derivatives = None

    @classmethod
    def sample(cls, field, h, radius=None, closure=False):
        '''Sample <field> on a grid of spacing h covering its disk.'''
        radius = field.radius if radius is None else radius
        grid = CartesianGrid(h, radius, field.n)
        pts = grid.points
        mask = np.ones(grid.shape, bool) if closure else grid.closed_inside(radius)
        values = np.full(grid.shape, np.nan)
        with np.errstate(invalid="ignore", divide="ignore"):
            values[mask] = field.value(pts[mask])
        return cls(values, grid, radius, closure, name=field.name)

    @property
    def derivatives(self):
        '''Dict ux, uy, uxx, uxy, uyy of node arrays (NaN where the stencil is incomplete).'''
        if self._derivatives is None:
            u, h = self.values, self.grid.h
            c = (slice(1, -1), slice(1, -1))
            d = {k: np.full_like(u, np.nan) for k in ("ux", "uy", "uxx", "uxy", "uyy")}
            d["ux"][c] = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * h)
            d["uy"][c] = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * h)
            d["uxx"][c] = (u[2:, 1:-1] - 2 * u[c] + u[:-2, 1:-1]) / h**2
            d["uyy"][c] = (u[1:-1, 2:] - 2 * u[c] + u[1:-1, :-2]) / h**2
            d["uxy"][c] = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * h**2)
            self._derivatives = d
        return self._derivatives

    def _interpolate(self, array, x):
        f = self.grid.fractional_index(x)
        i0 = np.floor(f).astype(int)
        t = f - i0
        last = self.grid.shape[0] - 1
        if np.any(i0 < 0) or np.any(i0 + 1 > last):
            raise EvaluationError("Point outside the sampling grid.")
        i, j = i0[..., 0], i0[..., 1]
        tx, ty = t[..., 0], t[..., 1]
        corners = [array[i, j], array[i + 1, j], array[i, j + 1], array[i + 1, j + 1]]
        weights = [(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty]
        # A NaN corner only matters when its weight is not zero.
        res = sum(np.where(w == 0, 0.0, c * w) for c, w in zip(corners, weights))
        if not np.all(np.isfinite(res)):
            raise EvaluationError("Grid samples are missing around the requested point.")
        return res

    def _check_rim(self, x):
        if self.closure:
            return
        r = np.linalg.norm(x, axis=-1)
        if np.any(r > self.radius - 2 * self.grid.h + 1e-12):
            raise EvaluationError(
                f"Grid derivatives need |x| <= {self.radius} - 2h; "
                "supply boundary closure to evaluate closer to the rim."
            )

    def value(self, x):
        return self._interpolate(self.values, self.points(x))

    def gradient(self, x):
        x = self.points(x)
        self._check_rim(x)
        d = self.derivatives
        return np.stack([self._interpolate(d["ux"], x), self._interpolate(d["uy"], x)], -1)

    def hessian(self, x):
        x = self.points(x)
        self._check_rim(x)
        d = self.derivatives
        uxx, uxy, uyy = [self._interpolate(d[k], x) for k in ("uxx", "uxy", "uyy")]
        return np.stack([np.stack([uxx, uxy], -1), np.stack([uxy, uyy], -1)], -2)

    # --- I/O
    def save(self, csv_path, json_path):
        '''Write the finite samples as CSV "x,y,value" and the grid metadata as JSON.'''
        mask = np.isfinite(self.values)
        data = np.column_stack([self.grid.points[mask], self.values[mask]])
        np.savetxt(csv_path, data, delimiter=",", header="x,y,value", comments="", fmt="%.17g")
        meta = dict(self.grid.to_dict(), closure=self.closure, name=self.name)
        meta["radius"] = self.radius
        meta["grid_radius"] = self.grid.radius
        with open(json_path, "w") as f:
            json.dump(meta, f, indent=2, sort_keys=True)

    @classmethod
    def load(cls, csv_path, json_path):
        try:
            with open(json_path) as f:
                meta = json.load(f)
            grid = CartesianGrid(meta["h"], meta["grid_radius"], meta["n"], meta["pad"])
            radius = meta["radius"]
            data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigurationError(f"Cannot read grid field {csv_path}: {exc}") from exc
        values = np.full(grid.shape, np.nan)
        idx = np.rint(data[:, :2] / grid.h).astype(int) + grid.m
        values[idx[:, 0], idx[:, 1]] = data[:, 2]
        return cls(values, grid, radius, meta.get("closure", False), meta.get("name"))


# --- SHAPE OPERATORS ---------------------------------------------------------------


class ShapeData:
    '''
    First fundamental form <metric>, second fundamental form <second_form> and
    shape operator A = metric^-1 second_form of a hypersurface at <point>,
    for the upward unit normal.
    For the hyperbolic ambient, metric is the Euclidean induced metric and
    second_form is scaled so that A is the hyperbolic shape operator.
    '''

    orientation = "upward"

    def __init__(self, point, metric, second_form, ambient="euclidean"):
        self.point = None if point is None else np.asarray(point, dtype=np.float64)
        self.metric = np.asarray(metric, dtype=np.float64)
        self.second_form = np.asarray(second_form, dtype=np.float64)
        self.ambient = check_ambient(ambient)
        w = np.linalg.eigvalsh(0.5 * (self.metric + self.metric.T))
        if not np.all(w > 0):
            raise GeometryError(f"Metric is not positive definite (eigenvalues {w}).")
        self.A = np.linalg.solve(self.metric, self.second_form)

    @classmethod
    def from_operator(cls, A, ambient="euclidean"):
        '''Shape data of a symmetric operator A in an orthonormal frame.'''
        A = np.asarray(A, dtype=np.float64)
        return cls(None, np.eye(A.shape[0]), A, ambient)

    @property
    def n(self):
        return self.A.shape[0]

    def symmetrized(self):
        '''The symmetric matrix g^-1/2 h g^-1/2, similar to A.'''
        w, V = np.linalg.eigh(self.metric)
        if not np.all(w > 0):
            raise GeometryError(f"Metric is not positive definite (eigenvalues {w}).")
        G = (V / np.sqrt(w)) @ V.T
        S = G @ self.second_form @ G
        return 0.5 * (S + S.T)


def graph_forms(value, grad, hess, ambient="euclidean"):
    '''
    Metric and second fundamental form of the graph of u from its jet, batched
    over leading axes. Returns (g, h, W) with W = sqrt(1+|Du|^2).
    Hyperbolic: h_hyp = u h + g/W, so that g^-1 h_hyp = u A + I/W.
    '''
    n = grad.shape[-1]
    W = np.sqrt(1 + np.sum(grad**2, axis=-1))
    g = np.eye(n) + grad[..., :, None] * grad[..., None, :]
    h = hess / W[..., None, None]
    if ambient == "hyperbolic":
        if np.any(value <= 0):
            raise AmbientViolationError(
                "u <= 0: the graph leaves the upper half-space model."
            )
        h = value[..., None, None] * h + g / W[..., None, None]
    return g, h, W


def shape_operator_euclidean(u, x):
    '''
    >>> from hemirigid import fields
    >>> shape = shape_operator_euclidean(fields.paraboloid(2), [0.0, 0.0])
    >>> shape.A.tolist()
    [[1.0, 0.0], [0.0, 1.0]]
    '''
    value, grad, hess = u.jet(x)
    g, h, _ = graph_forms(np.asarray(value), grad, hess)
    return ShapeData(x, g, h, "euclidean")


def shape_operator_hyperbolic(u, x):
    value, grad, hess = u.jet(x)
    g, h, _ = graph_forms(np.asarray(value), grad, hess, "hyperbolic")
    return ShapeData(x, g, h, "hyperbolic")


def shape_operator(u, x, ambient="euclidean"):
    if check_ambient(ambient) == "euclidean":
        return shape_operator_euclidean(u, x)
    return shape_operator_hyperbolic(u, x)


# --- CURVATURE PROFILES ------------------------------------------------------------


def scalar_curvature(sigma2, n, ambient):
    '''R = 2 sigma_2 (Euclidean), R = 2 sigma_2 - n(n-1) (hyperbolic).'''
    return 2 * sigma2 - (n * (n - 1) if ambient == "hyperbolic" else 0)


class CurvatureProfile:
    '''
    Principal curvatures (ascending) and the quantities derived from them.
    '''

    def __init__(self, kappa, ambient):
        self.kappa = CurvatureVector(kappa)
        self.ambient = ambient
        n = self.kappa.n
        self.sigma = symmetric_profile(self.kappa)
        self.mean_curvature = self.sigma.sigma[0]
        self.norm_sq = float(np.sum(self.kappa.entries**2))
        dev = self.kappa.entries - self.mean_curvature / n
        self.traceless_norm_sq = float(np.sum(dev**2))
        sigma2 = self.sigma.sigma[1] if n > 1 else 0.0
        self.scalar_curvature = float(scalar_curvature(sigma2, n, ambient))
        self.gamma_flags = [gamma_k_membership(self.kappa, k) for k in range(1, n + 1)]

    @property
    def n(self):
        return self.kappa.n

    def to_dict(self):
        return dict(
            ambient=self.ambient,
            kappa=self.kappa.entries.tolist(),
            mean_curvature=self.mean_curvature,
            traceless_norm_sq=self.traceless_norm_sq,
            scalar_curvature=self.scalar_curvature,
            gamma_flags=self.gamma_flags,
            **self.sigma.to_dict(),
        )


def curvature_profile(shape):
    '''
    >>> profile = curvature_profile(ShapeData.from_operator(np.eye(3)))
    >>> profile.sigma.sigma, profile.scalar_curvature, profile.traceless_norm_sq
    ([3.0, 3.0, 1.0], 6.0, 0.0)
    '''
    kappa = np.linalg.eigvalsh(shape.symmetrized())
    return CurvatureProfile(kappa, shape.ambient)


def profile_field(u, points, ambient="euclidean"):
    '''
    Curvature quantities of the graph of u at a batch of points, as arrays:
    kappa (N, n) ascending, mean_curvature, traceless_norm_sq, scalar_curvature (N,).
    '''
    check_ambient(ambient)
    points = u.points(points).reshape(-1, u.n)
    value, grad, hess = u.jet(points)
    g, h, _ = graph_forms(value, grad, hess, ambient)
    w, V = np.linalg.eigh(g)
    if not np.all(w > 0):
        raise GeometryError("Metric is not positive definite at some point.")
    G = np.einsum("...ik,...k,...jk->...ij", V, 1 / np.sqrt(w), V)
    S = G @ h @ G
    kappa = np.linalg.eigvalsh(0.5 * (S + np.swapaxes(S, -1, -2)))
    n = u.n
    H = kappa.sum(axis=-1)
    sigma2 = 0.5 * (H**2 - np.sum(kappa**2, axis=-1))
    return dict(
        points=points,
        kappa=kappa,
        mean_curvature=H,
        traceless_norm_sq=np.sum((kappa - H[:, None] / n) ** 2, axis=-1),
        scalar_curvature=scalar_curvature(sigma2, n, ambient),
    )


def sectional_curvatures(profile):
    '''
    Sectional curvatures K_ij (i != j) of the principal planes by the Gauss
    equation: kappa_i kappa_j (Euclidean) or kappa_i kappa_j - 1 (hyperbolic).
    The diagonal is left as NaN.
    '''
    kappa = profile.kappa.entries
    K = np.outer(kappa, kappa) - (1.0 if profile.ambient == "hyperbolic" else 0.0)
    np.fill_diagonal(K, np.nan)
    return K


def umbilicity_report(profile, tol=UMBILIC_TOL):
    kappa = profile.kappa.entries
    spread = float(kappa.max() - kappa.min())
    return dict(
        is_umbilic=spread <= tol,
        curvature=float(kappa.mean()),
        spread=spread,
        tol=tol,
    )


def hypothesis_report(profile, k, ambient=None):
    '''
    Does sigma_k meet the threshold of the rigidity theorems at this point?
    Also reports Gamma_k membership and the floor on H it implies.
    '''
    ambient = profile.ambient if ambient is None else ambient
    sigma_k = elem_sym(k, profile.kappa)
    threshold = rigidity_threshold(k, profile.n, ambient)
    in_gamma = gamma_k_membership(profile.kappa, k)
    return dict(
        k=k,
        ambient=ambient,
        sigma_k=sigma_k,
        threshold=threshold,
        meets_threshold=sigma_k >= threshold * (1 - 1e-12),
        in_gamma_k=in_gamma,
        mean_curvature=profile.mean_curvature,
        mean_curvature_floor=mean_curvature_floor(profile.kappa, k) if in_gamma else None,
    )


# --- IDENTITIES --------------------------------------------------------------------


def _invariants(shape):
    '''H, |A|^2, sigma_2 and |Ao|^2 of a shape, from the symmetrized operator.'''
    S = shape.symmetrized()
    n = shape.n
    H = float(np.trace(S))
    norm_sq = float(np.sum(S**2))
    sigma2 = float(elem_sym_all(np.linalg.eigvalsh(S))[2])
    return H, norm_sq, sigma2, norm_sq - H**2 / n


def _require(shape, ambient):
    if shape.ambient != ambient:
        raise DomainError(f"This identity holds for {ambient} shapes, got {shape.ambient}.")
    if shape.n < 2:
        raise DomainError("The curvature identities need n >= 2.")


def check_identity_euclidean(shape):
    '''
    (H/n)^2 - sigma_2/C(n,2) - |Ao|^2/(n(n-1)), zero up to rounding.
    >>> abs(check_identity_euclidean(ShapeData.from_operator(np.diag([2.0, 0.0])))) < 1e-15
    True
    '''
    _require(shape, "euclidean")
    n = shape.n
    H, _, sigma2, traceless = _invariants(shape)
    return (H / n) ** 2 - sigma2 / binomial(n, 2) - traceless / (n * (n - 1))


def check_identity_hyperbolic(shape):
    '''(H/n)^2 - (|Ao|^2/(n(n-1)) + R/(n(n-1)) + 1), zero up to rounding.'''
    _require(shape, "hyperbolic")
    n = shape.n
    H, _, sigma2, traceless = _invariants(shape)
    R = scalar_curvature(sigma2, n, "hyperbolic")
    return (H / n) ** 2 - (traceless / (n * (n - 1)) + R / (n * (n - 1)) + 1)


def check_gauss_equation(shape):
    '''R - H^2 + |A|^2 + n(n-1), zero up to rounding.'''
    _require(shape, "hyperbolic")
    n = shape.n
    H, norm_sq, sigma2, _ = _invariants(shape)
    R = scalar_curvature(sigma2, n, "hyperbolic")
    return R - H**2 + norm_sq + n * (n - 1)
