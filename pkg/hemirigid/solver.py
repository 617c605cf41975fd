'''
Damped Newton solver for the Dirichlet problem Q(u) = f in B_rho, u = g on the
circle |x| = rho (n = 2), with Q a QuasilinearOperator.
- DiskDiscretization: finite differences on the grid nodes inside the disk,
  with Shortley-Weller arms where a stencil crosses the circle
- solve_dirichlet: Newton iterations, the Newton matrix being the linearized
  operator L of maxprinciple.linearize_jets between the iterate and itself
- convergence_study: errors against an exact solution over several spacings
- rigidity_experiment: multi-start solves of the critical problem, checking
  that every start lands on the sphere cap.
'''

import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from hemirigid import fields
from hemirigid.errors import (
    ConfigurationError,
    DomainError,
    EllipticityError,
    EvaluationError,
)
from hemirigid.graphs import GridField, ScalarField
from hemirigid.grids import CartesianGrid
from hemirigid.maxprinciple import QuasilinearOperator, linearize_jets
from hemirigid.meanops import MAX_GRID_SPACING

# Nodes closer than UNKNOWN_MARGIN * h to the circle are not unknowns.
UNKNOWN_MARGIN = 0.1
# Smallest number of grid steps across the radius.
MIN_STEPS_PER_RADIUS = 4
THREADS_ENV = "HEMIRIGID_NUM_THREADS"
RIGIDITY_RADII = (0.7, 0.8, 0.9)


class SolverSettings:
    def __init__(self):
        self.rtol = 1e-9
        self.max_iter = 50
        self.min_step = 1 / 64
        self.armijo = 1e-4
        self.max_bad_steps = 5
        self.verbose = False


class NewtonLogger:
    '''Print one line per Newton iteration: iterate, residual, step, theta.'''

    def __init__(self):
        self.iteration = 0

    def __call__(self, residual, step, theta):
        print(
            "===NEWTON=== {0:4d}   {1: .3e}   {2:.4f}   {3: .3e}".format(
                self.iteration, residual, step, theta
            )
        )
        self.iteration += 1


def _constant(value, name):
    field = fields.plane(2, float(value))
    field.name = f"{name}:{float(value):g}"
    return field


class DirichletProblem:
    '''
    Q(u) = f in B_rho, u = g on the circle of radius rho, on a grid of spacing h.
    <rhs> and <boundary> are constants or ScalarFields.
    '''

    def __init__(self, operator, rhs, boundary, rho=0.9, h=1 / 64):
        if operator.n != 2:
            raise ConfigurationError("The Dirichlet solver handles n = 2 only.")
        if not 0 < rho <= 1:
            raise ConfigurationError(f"The disk radius must lie in (0, 1], got {rho}.")
        if not 0 < h <= MAX_GRID_SPACING:
            raise ConfigurationError(f"Grid spacing must lie in (0, {MAX_GRID_SPACING}], got {h}.")
        if rho / h < MIN_STEPS_PER_RADIUS:
            raise ConfigurationError(f"Grid too coarse: rho/h = {rho / h:g} < {MIN_STEPS_PER_RADIUS}.")
        self.operator = operator
        self.rhs = rhs if isinstance(rhs, ScalarField) else _constant(rhs, "f")
        self.boundary = boundary if isinstance(boundary, ScalarField) else _constant(boundary, "g")
        self.rho = float(rho)
        self.h = float(h)

    def to_dict(self):
        return dict(
            operator=self.operator.tag,
            n=self.operator.n,
            rhs=self.rhs.name,
            boundary=self.boundary.name,
            rho=self.rho,
            h=self.h,
        )


def _crossing(x, e, rho):
    '''Distance s > 0 from x (inside) along the unit direction e to the circle of radius rho.'''
    xe = x @ e
    return -xe + np.sqrt(xe**2 - (x @ x - rho**2))


class DiskDiscretization:
    '''
    Finite-difference operators on the unknown nodes (|x| < rho - UNKNOWN_MARGIN h).
    Every derivative is an affine function D u + d of the unknown vector u:
    <ops> maps "ux", "uy", "uxx", "uyy", "uxy" to (sparse D, boundary vector d).
    The 1-d second-order formulas on unequal arms (h_minus, h_plus) are used
    along the axes; uxy is the standard four-point formula when the four
    diagonal neighbours are unknowns, and else the uxy coefficient of a
    least-squares quadratic through the node, its 8 neighbours, and the
    boundary crossings replacing the neighbours outside.
    '''

    def __init__(self, rho, h, boundary):
        self.rho = rho
        self.h = h
        self.grid = CartesianGrid(h, rho, 2, pad=1)
        self.unknown = self.grid.inside(rho, margin=UNKNOWN_MARGIN * h)
        self.index = np.full(self.grid.shape, -1, dtype=np.int64)
        self.nodes = np.argwhere(self.unknown)
        self.index[tuple(self.nodes.T)] = np.arange(len(self.nodes))
        self.points = self.grid.points[self.unknown]
        self.boundary = boundary
        self.ops = self._assemble()

    @property
    def size(self):
        return len(self.nodes)

    def _neighbor(self, node, offset):
        '''(unknown index or -1, offset vector from the node to the stencil point).'''
        other = node + offset
        if self.index[tuple(other)] >= 0:
            return self.index[tuple(other)], self.h * np.asarray(offset, dtype=np.float64)
        e = np.asarray(offset, dtype=np.float64)
        e /= np.linalg.norm(e)
        x = self.grid.node_coordinates(node)
        return -1, _crossing(x, e, self.rho) * e

    def _assemble(self):
        N, h = self.size, self.h
        rows = {k: [] for k in ("ux", "uy", "uxx", "uyy", "uxy")}
        cols = {k: [] for k in rows}
        vals = {k: [] for k in rows}
        bvec = {k: np.zeros(N) for k in rows}
        # Boundary points and their (derivative, row, weight), evaluated in one batch.
        bpoints, bterms = [], []

        def add(key, row, target, weight, point):
            if target >= 0:
                rows[key].append(row)
                cols[key].append(target)
                vals[key].append(weight)
            else:
                bpoints.append(point)
                bterms.append((key, row, weight))

        diagonals = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
        for row, node in enumerate(self.nodes):
            x = self.grid.node_coordinates(node)
            for axis, (d1, d2) in enumerate((("ux", "uxx"), ("uy", "uyy"))):
                step = np.zeros(2, dtype=np.int64)
                step[axis] = 1
                jm, om = self._neighbor(node, -step)
                jp, op = self._neighbor(node, step)
                hm, hp = np.linalg.norm(om), np.linalg.norm(op)
                s = hm + hp
                add(d1, row, jp, hm / (hp * s), x + op)
                add(d1, row, jm, -hp / (hm * s), x + om)
                add(d1, row, row, (hp - hm) / (hm * hp), x)
                add(d2, row, jp, 2 / (hp * s), x + op)
                add(d2, row, jm, 2 / (hm * s), x + om)
                add(d2, row, row, -2 / (hm * hp), x)

            diag = [self._neighbor(node, np.array(o)) for o in diagonals]
            if all(j >= 0 for j, _ in diag):
                for (j, _), (a, b) in zip(diag, diagonals):
                    add("uxy", row, j, a * b / (4 * h**2), None)
                continue
            stencil = [(row, np.zeros(2))]
            stencil += [self._neighbor(node, np.array(o)) for o in [(1, 0), (-1, 0), (0, 1), (0, -1)]]
            stencil += diag
            d = np.array([o for _, o in stencil])
            A = np.column_stack(
                [np.ones(len(d)), d[:, 0], d[:, 1], d[:, 0] ** 2 / 2, d[:, 0] * d[:, 1], d[:, 1] ** 2 / 2]
            )
            weights = np.linalg.pinv(A)[4]
            for (j, o), w in zip(stencil, weights):
                add("uxy", row, j, w, x + o)

        if bpoints:
            g = self.boundary.value(np.array(bpoints))
            if not np.all(np.isfinite(g)):
                raise EvaluationError(f"Boundary data {self.boundary.name} is not finite on the circle.")
            for (key, row, weight), value in zip(bterms, g):
                bvec[key][row] += weight * value
        return {
            k: (sparse.csr_matrix((vals[k], (rows[k], cols[k])), shape=(N, N)), bvec[k])
            for k in rows
        }

    def jet(self, u):
        '''Value, gradient (N, 2) and Hessian (N, 2, 2) of the unknown vector u.'''
        d = {k: D @ u + b for k, (D, b) in self.ops.items()}
        grad = np.stack([d["ux"], d["uy"]], axis=-1)
        hess = np.stack([np.stack([d["uxx"], d["uxy"]], -1), np.stack([d["uxy"], d["uyy"]], -1)], -2)
        return u, grad, hess

    def newton_matrix(self, coeffs):
        '''Sparse matrix of the linear operator L with the given coefficients.'''
        a, b, c = coeffs.a, coeffs.b, coeffs.c
        D = {k: op for k, (op, _) in self.ops.items()}
        J = (
            sparse.diags(a[:, 0, 0]) @ D["uxx"]
            + sparse.diags(a[:, 0, 1] + a[:, 1, 0]) @ D["uxy"]
            + sparse.diags(a[:, 1, 1]) @ D["uyy"]
            + sparse.diags(b[:, 0]) @ D["ux"]
            + sparse.diags(b[:, 1]) @ D["uy"]
            + sparse.diags(c)
        )
        return J.tocsc()

    def to_grid_field(self, u, name=None):
        '''Grid field holding u at the unknowns and g at the remaining nodes of the closed disk.'''
        values = np.full(self.grid.shape, np.nan)
        rim = self.grid.closed_inside(self.rho) & ~self.unknown
        values[rim] = self.boundary.value(self.grid.points[rim])
        values[self.unknown] = u
        return GridField(values, self.grid, self.rho, name=name)


class SolveResult:
    def __init__(self, u, residual, iterations, converged, **details):
        self.u = u
        self.residual = residual
        self.iterations = iterations
        self.converged = converged
        self.distance_to_reference = details.pop("distance_to_reference", None)
        self.details = details

    @property
    def residual_norm(self):
        return float(np.max(np.abs(self.residual)))

    def to_dict(self):
        return dict(
            residual_norm=self.residual_norm,
            iterations=self.iterations,
            converged=self.converged,
            distance_to_reference=self.distance_to_reference,
            **self.details,
        )

    def save(self, csv_path, json_path):
        '''Dump u as CSV "x,y,value" and the result metadata next to the grid metadata.'''
        self.u.save(csv_path, json_path)
        with open(json_path) as f:
            meta = json.load(f)
        meta["result"] = self.to_dict()
        with open(json_path, "w") as f:
            json.dump(meta, f, indent=2, sort_keys=True)


def _residual(problem, disc, u, f):
    return problem.operator.apply_jet(*disc.jet(u)) - f


def solve_dirichlet(problem, initial, settings=None, reference=None):
    '''
    Damped Newton iterations from the field <initial>: J delta = -F with
    F = Q(u) - f and J the linearization of Q at u, then Armijo backtracking
    (factor 1/2, down to settings.min_step) on max |F|. Iterates where z(u)
    is not positive are rejected by the line search.
    Stops when max |F| <= rtol, after max_iter iterations, or after
    max_bad_steps consecutive increases of the residual.
    '''
    settings = settings or SolverSettings()
    logger = NewtonLogger() if settings.verbose else None
    disc = DiskDiscretization(problem.rho, problem.h, problem.boundary)
    pts = disc.points
    f = problem.rhs.value(pts)
    u = np.asarray(initial.value(pts), dtype=np.float64).copy()
    op = problem.operator

    def admissible(v):
        return np.all(np.isfinite(v)) and np.all(np.asarray(op.z(v)) > 0)

    history, thetas, steps = [], [], []
    diagnostic = None
    if not admissible(u):
        raise DomainError(f"z(initial) must be positive on the disk for operator {op.tag}.")
    F = _residual(problem, disc, u, f)
    norm = float(np.max(np.abs(F)))
    history.append(norm)
    bad = 0
    iterations = 0
    while norm > settings.rtol and iterations < settings.max_iter:
        jet = disc.jet(u)
        try:
            coeffs = linearize_jets(op, jet, jet, points=pts)
        except EllipticityError as exc:
            diagnostic = f"ellipticity lost: {exc}"
            break
        thetas.append(coeffs.theta)
        delta = splu(disc.newton_matrix(coeffs)).solve(-F)
        t = 1.0
        while True:
            trial = u + t * delta
            if admissible(trial):
                F_trial = _residual(problem, disc, trial, f)
                norm_trial = float(np.max(np.abs(F_trial)))
                if norm_trial <= (1 - settings.armijo * t) * norm or t <= settings.min_step:
                    break
            elif t <= settings.min_step:
                norm_trial = None
                break
            t /= 2
        iterations += 1
        if norm_trial is None:
            diagnostic = "no admissible step: z(u) <= 0 along the Newton direction"
            break
        bad = bad + 1 if norm_trial > norm else 0
        u, F, norm = trial, F_trial, norm_trial
        history.append(norm)
        steps.append(t)
        if logger:
            logger(norm, t, coeffs.theta)
        if bad >= settings.max_bad_steps:
            diagnostic = f"diverged: residual increased {bad} consecutive times"
            break

    converged = norm <= settings.rtol
    if not converged and diagnostic is None:
        diagnostic = f"no convergence after {iterations} iterations"
    distance = None
    if reference is not None:
        distance = float(np.max(np.abs(u - reference.value(pts))))
    return SolveResult(
        disc.to_grid_field(u, name=f"solution({op.tag})"),
        F,
        iterations,
        bool(converged),
        distance_to_reference=distance,
        history=history,
        theta_history=thetas,
        step_history=steps,
        diagnostic=diagnostic,
        initial=initial.name,
        problem=problem.to_dict(),
        unknowns=disc.size,
        tol=settings.rtol,
        grid_h=problem.h,
    )


# --- STUDIES -----------------------------------------------------------------------


def convergence_study(factory, spacings, settings=None):
    '''
    factory(h) -> (problem, initial, reference). Return the max errors against
    the reference and the observed orders log(e_i/e_{i+1}) / log(h_i/h_{i+1}).
    '''
    results = []
    for h in spacings:
        problem, initial, reference = factory(h)
        results.append(solve_dirichlet(problem, initial, settings, reference))
    errors = [r.distance_to_reference for r in results]
    orders = [
        float(np.log(e0 / e1) / np.log(h0 / h1))
        for e0, e1, h0, h1 in zip(errors[:-1], errors[1:], spacings[:-1], spacings[1:])
    ]
    return dict(
        spacings=list(spacings),
        errors=errors,
        orders=orders,
        converged=[r.converged for r in results],
        iterations=[r.iterations for r in results],
    )


def critical_problem(ambient, n=2):
    '''(operator, f, boundary data, reference cap) of the critical rigidity problem.'''
    if ambient == "euclidean":
        reference = fields.hemisphere(n)
        return QuasilinearOperator.euclidean(n), -float(n), reference, reference
    if ambient == "hyperbolic":
        reference = fields.model_sphere(n)
        return QuasilinearOperator.hyperbolic(n), np.sqrt(2.0) * n, reference, reference
    raise ConfigurationError(f"Unknown ambient space {ambient!r}.")


def initial_guesses(reference, rho, n=2, perturbation=0.05):
    '''Constant boundary value, paraboloid through the boundary, perturbed reference.'''
    g = float(reference.value(np.array([rho] + [0.0] * (n - 1))))
    slope = (float(reference.value(np.zeros(n))) - g) / rho**2
    constant = fields.plane(n, g)
    constant.name = "constant"
    bowl = fields.quadratic(n, g + slope * rho**2, np.zeros(n), -2 * slope * np.eye(n), name="paraboloid")
    bump = fields.gaussian_bump(n, np.zeros(n), 0.5 * rho, perturbation)
    perturbed = fields.field_sum([reference, bump], name="perturbed_reference")
    return [constant, bowl, perturbed]


def num_threads():
    value = os.environ.get(THREADS_ENV)
    if value is None:
        return 1
    try:
        threads = int(value)
    except ValueError:
        threads = 0
    if threads < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer >= 1, got {value!r}.")
    return threads


def rigidity_experiment(ambient, n=2, h=1 / 64, radii=RIGIDITY_RADII, settings=None):
    '''
    Solve the critical problem (H = n with the upward normal of the
    hemisphere, i.e. f = -n, Euclidean; H = sqrt(2) n, hyperbolic) on
    B_rho for each radius, from three starts, with the reference cap as
    boundary data. Every converged solution is compared with the cap; a
    disagreement beyond 10 h^2 is reported.
    The hyperbolic run adds the subcritical problem f = n, g = 1, whose
    solution u = 1 differs from any v-cap: the non-rigid regime.
    '''
    tol = 10 * h**2
    jobs = []
    for rho in radii:
        op, f, g, reference = critical_problem(ambient, n)
        problem = DirichletProblem(op, f, g, rho, h)
        for guess in initial_guesses(reference, rho, n):
            jobs.append((rho, problem, guess, reference))

    def run(job):
        rho, problem, guess, reference = job
        return rho, solve_dirichlet(problem, guess, settings, reference)

    with ThreadPoolExecutor(max_workers=num_threads()) as pool:
        outcomes = list(pool.map(run, jobs))

    runs = []
    for rho, result in outcomes:
        agrees = result.converged and result.distance_to_reference <= tol
        runs.append(
            dict(
                rho=rho,
                initial=result.details["initial"],
                converged=result.converged,
                iterations=result.iterations,
                residual_norm=result.residual_norm,
                distance_to_reference=result.distance_to_reference,
                agrees=bool(agrees),
            )
        )
    report = dict(
        ambient=ambient,
        n=n,
        grid_h=h,
        tol=tol,
        runs=runs,
        rigid=all(r["agrees"] for r in runs),
    )
    if ambient == "hyperbolic":
        report["subcritical"] = subcritical_branch(n, h, settings=settings)
    return report


def subcritical_branch(n=2, h=1 / 64, rho=0.9, settings=None):
    '''f = n, g = 1: the Newton iteration finds u = 1 (H(u1) = n), not a v-cap.'''
    problem = DirichletProblem(QuasilinearOperator.hyperbolic(n), float(n), 1.0, rho, h)
    start = fields.field_sum([fields.u1(n), fields.gaussian_bump(n, np.zeros(n), 0.3, 0.05)])
    start.name = "perturbed_u1"
    result = solve_dirichlet(problem, start, settings, reference=fields.u1(n))
    v_cap = fields.model_sphere(n)
    distance_to_v = float(np.nanmax(np.abs(result.u.values - v_cap.value(result.u.grid.points))))
    return dict(
        converged=result.converged,
        residual_norm=result.residual_norm,
        distance_to_u1=result.distance_to_reference,
        distance_to_v=distance_to_v,
        non_rigid=bool(result.converged and result.distance_to_reference <= 10 * h**2),
        grid_h=h,
        tol=result.details["tol"],
    )
