'''
Command-line front end. Every subcommand prints one JSON document (schema 1)
on stdout or in --output, and exits with
- 0 when every check of the document passes,
- 1 when some check fails,
- 2 on a usage or configuration error (message on standard error).

Usage: python -m hemirigid <command> [options], with command among
curvature, identities, total-curv, counterexample, barrier, slide, solve,
rigidity and report.
'''

import argparse
import json
import sys

import numpy as np

from hemirigid import fields
from hemirigid.errors import ConfigurationError, ContactError, HemirigidError
from hemirigid.graphs import (
    GridField,
    ShapeData,
    check_gauss_equation,
    check_identity_euclidean,
    check_identity_hyperbolic,
    curvature_profile,
    hypothesis_report,
    profile_field,
    shape_operator,
    umbilicity_report,
)
from hemirigid.grids import CartesianGrid
from hemirigid.maxprinciple import (
    BarrierConfig,
    QuasilinearOperator,
    barrier_operator,
    choose_lambda,
    linearize,
    rim_normal_derivative,
    verify_barrier,
)
from hemirigid.meanops import (
    MAX_GRID_SPACING,
    SphereFamily,
    counterexample_report,
    positivity_check,
    sphere_family_report,
    total_mean_curvature,
    total_mean_curvature_trend,
)
from hemirigid.meshes import graph_mesh, read_mesh
from hemirigid.sliding import first_contact, k_convex_witness
from hemirigid.solver import (
    DirichletProblem,
    SolverSettings,
    convergence_study,
    critical_problem,
    rigidity_experiment,
    solve_dirichlet,
)
from hemirigid.symfuncs import (
    elem_sym,
    elem_sym_enumerate,
    gamma_k_membership,
    maclaurin_chain,
)

SCHEMA = 1
IDENTITY_TOL = 1e-12
ELEM_SYM_TOL = 1e-12
TOTAL_CURVATURE_GAP = 1e-2


class RunConfig:
    '''Validated options of one run.'''

    def __init__(self, args):
        self.command = args.command
        self.ambient = getattr(args, "ambient", "euclidean")
        self.n = args.n
        self.h = args.h
        self.rho = getattr(args, "rho", None)
        self.epsilon = getattr(args, "epsilon", None)
        self.mesh_path = getattr(args, "mesh", None)
        self.output_path = args.output
        self.seed = args.seed
        self.args = args

    def validate(self):
        if self.h is not None and not 0 < self.h <= MAX_GRID_SPACING:
            raise ConfigurationError(f"--h must lie in (0, {MAX_GRID_SPACING}], got {self.h}.")
        if self.n < 2:
            raise ConfigurationError(f"--n must be at least 2, got {self.n}.")
        if self.epsilon is not None and not 0 < self.epsilon < 0.5:
            raise ConfigurationError(f"--epsilon must lie in (0, 1/2), got {self.epsilon}.")
        if self.rho is not None and not 0 < self.rho <= 1:
            raise ConfigurationError(f"--rho must lie in (0, 1], got {self.rho}.")
        return self


def _field_or_constant(spec, n):
    try:
        return float(spec)
    except ValueError:
        return fields.named_field(spec, n)


def _to_json(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


# --- COMMANDS ----------------------------------------------------------------------


def run_curvature(cfg):
    '''Curvature profile of a field at the grid nodes at least 2h inside its disk.'''
    args = cfg.args
    if args.csv:
        if cfg.n != 2:
            raise ConfigurationError("Grid fields are read for n = 2 only.")
        u = GridField.load(args.csv, args.json or args.csv.rsplit(".", 1)[0] + ".json")
    else:
        u = fields.named_field(args.field, cfg.n)
    h = cfg.h or 0.1
    grid = CartesianGrid(h, u.radius, 2, pad=0)
    planar = grid.points[grid.inside(u.radius, margin=2 * h)]
    points = np.concatenate([planar, np.zeros((len(planar), cfg.n - 2))], axis=1)
    data = profile_field(u, points, cfg.ambient)
    center = curvature_profile(shape_operator(u, np.zeros(cfg.n), cfg.ambient))
    result = dict(
        field=u.name,
        ambient=cfg.ambient,
        grid_h=h,
        points=data["points"],
        kappa=data["kappa"],
        mean_curvature=data["mean_curvature"],
        traceless_norm_sq=data["traceless_norm_sq"],
        scalar_curvature=data["scalar_curvature"],
        center=center.to_dict(),
        umbilicity=umbilicity_report(center),
        passed=True,
    )
    if args.k is not None:
        result["hypothesis"] = hypothesis_report(center, args.k, cfg.ambient)
    return result


def _random_shape(rng, n, ambient):
    M = rng.normal(size=(n, n)) * rng.uniform(0.1, 1.0)
    return ShapeData.from_operator(0.5 * (M + M.T), ambient)


def run_identities(cfg):
    '''
    Curvature identities on random symmetric shape operators (n = 2..8), and
    sigma_k / Maclaurin chain checks on random curvature vectors.
    '''
    rng = np.random.default_rng(cfg.seed)
    worst = dict(euclidean=0.0, hyperbolic=0.0, gauss=0.0, elem_sym=0.0)
    chain_failures = 0
    gamma_vectors = 0
    for _ in range(cfg.args.trials):
        n = int(rng.integers(2, 9))
        for key, check, ambient in [
            ("euclidean", check_identity_euclidean, "euclidean"),
            ("hyperbolic", check_identity_hyperbolic, "hyperbolic"),
            ("gauss", check_gauss_equation, "hyperbolic"),
        ]:
            shape = _random_shape(rng, n, ambient)
            H = np.trace(shape.A)
            worst[key] = max(worst[key], abs(check(shape)) / (1 + H**2))

        kappa = rng.normal(size=n) + rng.uniform(0, 2)
        k = int(rng.integers(1, n + 1))
        exact = elem_sym_enumerate(k, kappa)
        worst["elem_sym"] = max(
            worst["elem_sym"], abs(elem_sym(k, kappa) - exact) / max(1.0, abs(exact))
        )
        if gamma_k_membership(kappa, k):
            gamma_vectors += 1
            chain = np.array(maclaurin_chain(kappa, k).maclaurin_chain)
            if np.any(np.diff(chain) > 1e-12 * np.abs(chain[:-1])):
                chain_failures += 1

    tols = dict(euclidean=IDENTITY_TOL, hyperbolic=IDENTITY_TOL, gauss=IDENTITY_TOL, elem_sym=ELEM_SYM_TOL)
    checks = {
        key: dict(max_residual=worst[key], tol=tols[key], **{"pass": bool(worst[key] <= tols[key])})
        for key in worst
    }
    checks["maclaurin"] = dict(
        vectors=gamma_vectors, failures=chain_failures, **{"pass": chain_failures == 0}
    )
    return dict(
        trials=cfg.args.trials,
        seed=cfg.seed,
        checks=checks,
        passed=all(c["pass"] for c in checks.values()),
    )


def run_total_curvature(cfg):
    '''Total mean curvature bound, its trend on the hemisphere and on random fields.'''
    args = cfg.args
    h = cfg.h or 1 / 64
    spacings = [h, h / 2, h / 4]
    u = fields.named_field(args.field, cfg.n)
    trend = total_mean_curvature_trend(u, spacings)
    passed = trend["passed"]
    if args.field == "hemisphere":
        trend["extrapolation_tol"] = TOTAL_CURVATURE_GAP
        passed = passed and trend["monotone"] and abs(trend["extrapolated_gap"]) <= TOTAL_CURVATURE_GAP
    rng = np.random.default_rng(cfg.seed)
    sweep = [
        total_mean_curvature(fields.random_bump_field(rng, cfg.n), h).to_dict()
        for _ in range(args.random)
    ]
    return dict(
        field=u.name,
        trend=trend,
        random_fields=sweep,
        seed=cfg.seed,
        passed=bool(passed and all(r["pass"] for r in sweep)),
    )


def run_counterexample(cfg):
    h = cfg.h or 1 / 128
    report = counterexample_report(cfg.epsilon, h, cfg.n)
    family = sphere_family_report([np.sqrt(2.0), 1.5, 2.0, 3.0], cfg.n)
    positivity = positivity_check(fields.model_sphere(2), min(h, 1 / 64))
    report.update(
        sphere_family=family,
        positivity=positivity,
        passed=bool(report["passed"] and all(r["passed"] for r in family) and positivity["consistent"]),
    )
    return report


def run_barrier(cfg):
    '''
    Linearize the hyperbolic operator between u2 and v on the closed unit disk,
    pick lambda for the boundary point barrier and check (L - |c|) w > 0 on the
    annulus, both on the lower bound and with the actual coefficients.
    '''
    args = cfg.args
    h = cfg.h or 1 / 32
    op = QuasilinearOperator.hyperbolic(2)
    coeffs = linearize(op, fields.u2(2, cfg.epsilon), fields.model_sphere(2), CartesianGrid(h, 1.0, 2, pad=0))
    theta, C = coeffs.theta, coeffs.coefficient_bound()
    lam = choose_lambda(theta, C, args.delta)
    cfg_barrier = BarrierConfig(args.delta, lam, theta, C)
    rng = np.random.default_rng(cfg.seed)
    sampled_min = verify_barrier(theta, C, args.delta, lam, args.samples, rng)
    _, actual = barrier_operator(coeffs, cfg_barrier)
    if args.dump:
        try:
            with open(args.dump, "w") as f:
                json.dump(dict(coeffs.to_dict(), epsilon=cfg.epsilon, grid_h=h), f, default=_to_json)
        except OSError as exc:
            raise ConfigurationError(f"Cannot write --dump {args.dump}: {exc}") from exc
    rim = rim_normal_derivative(cfg_barrier)
    rim_expected = -2 * lam * args.delta * np.exp(-lam * args.delta**2)
    return dict(
        barrier=cfg_barrier.to_dict(),
        grid_h=h,
        epsilon=cfg.epsilon,
        min_eigenvalue=coeffs.min_eigenvalue(),
        sampled_lower_bound_min=sampled_min,
        samples=args.samples,
        actual_operator_min=float(actual.min()) if len(actual) else None,
        rim_normal_derivative=rim,
        rim_normal_derivative_error=abs(rim - rim_expected),
        seed=cfg.seed,
        passed=bool(
            sampled_min > 0
            and (len(actual) == 0 or actual.min() > 0)
            and abs(rim - rim_expected) <= 1e-12
        ),
    )


def _build_mesh(cfg):
    args = cfg.args
    if args.mesh:
        return read_mesh(args.mesh, cfg.ambient)
    u = fields.named_field(args.field, 2)
    return graph_mesh(u, rings=args.rings, spacing=args.spacing, ambient=cfg.ambient)


def run_slide(cfg):
    '''
    First contact of the sphere family with a mesh. The check passes when the
    verdict is decided (rigid or hypothesis_violated).
    '''
    args = cfg.args
    mesh = _build_mesh(cfg)
    family = SphereFamily(cfg.ambient, 1.0)
    try:
        report = first_contact(mesh, family, args.q_start).to_dict()
    except ContactError as exc:
        if exc.kind != "incorporation":
            raise
        return dict(ambient=cfg.ambient, error=str(exc), kind=exc.kind, passed=False)
    if args.k is not None:
        try:
            report["witness"] = k_convex_witness(mesh, args.k)
        except ContactError as exc:
            report["witness"] = dict(error=str(exc), kind=exc.kind)
    report["passed"] = report["verdict"] in ("rigid", "hypothesis_violated")
    return report


def _solver_settings(args):
    settings = SolverSettings()
    settings.rtol = args.rtol
    settings.max_iter = args.max_iter
    settings.verbose = args.verbose
    return settings


CONFIG_KEYS = ("ambient", "n", "rho", "h", "f", "boundary", "initial", "rtol", "max_iter")


def _read_config(path):
    try:
        with open(path) as f:
            options = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"Cannot read config {path}: {exc}") from exc
    if not isinstance(options, dict):
        raise ConfigurationError(f"Config {path} must hold a JSON object.")
    unknown = sorted(set(options) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigurationError(f"Unknown config keys {unknown}, expected among {list(CONFIG_KEYS)}.")
    for key in ("rho", "h", "rtol", "max_iter"):
        value = options.get(key)
        if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise ConfigurationError(f"Config key {key!r} must be a number, got {value!r}.")
    return options


def run_solve(cfg):
    args = cfg.args
    options = dict(
        ambient=cfg.ambient, n=cfg.n, rho=cfg.rho, h=cfg.h, f=args.f, boundary=args.boundary, initial=args.initial
    )
    if args.config:
        options.update(_read_config(args.config))
        args.rtol = options.get("rtol", args.rtol)
        args.max_iter = options.get("max_iter", args.max_iter)
        cfg.ambient, cfg.n, cfg.rho, cfg.h = options["ambient"], options["n"], options["rho"], options["h"]
    n = options["n"]
    if not isinstance(n, int) or n != 2:
        raise ConfigurationError(f"The Dirichlet problem is solved on planar disks (n = 2), got n = {n!r}.")
    cfg.validate()
    op = QuasilinearOperator.for_ambient(options["ambient"], n)
    rhs = options["f"]
    if rhs is None:
        _, rhs, _, _ = critical_problem(options["ambient"], n)
    default_cap = "hemisphere" if options["ambient"] == "euclidean" else "model_sphere"
    boundary = _field_or_constant(options["boundary"] or default_cap, n)
    initial = _field_or_constant(options["initial"] or "1.0", n)
    if isinstance(initial, float):
        value = initial
        initial = fields.plane(n, value)
        initial.name = f"constant:{value:g}"
    reference = fields.named_field(args.reference, n) if args.reference else None
    problem = DirichletProblem(op, rhs, boundary, options["rho"] or 0.9, options["h"] or 1 / 64)
    result = solve_dirichlet(problem, initial, _solver_settings(args), reference)
    if args.dump:
        try:
            result.save(args.dump + ".csv", args.dump + ".json")
        except OSError as exc:
            raise ConfigurationError(f"Cannot write --dump {args.dump}: {exc}") from exc
    return dict(result.to_dict(), passed=result.converged)


def run_rigidity(cfg):
    args = cfg.args
    report = rigidity_experiment(
        cfg.ambient, cfg.n, cfg.h or 1 / 64, tuple(args.radii), _solver_settings(args)
    )
    passed = report["rigid"]
    if "subcritical" in report:
        passed = passed and report["subcritical"]["non_rigid"]
    report["passed"] = bool(passed)
    return report


def run_report(cfg):
    '''All the checks above at desk-scale settings, in one document.'''
    h = cfg.h or 1 / 32
    seed = cfg.seed
    sections = {}
    sections["identities"] = run_identities(_sub(cfg, "identities", trials=200))
    sections["counterexample"] = run_counterexample(_sub(cfg, "counterexample", h=min(h, 1 / 128)))
    sections["total-curv"] = run_total_curvature(
        _sub(cfg, "total-curv", h=1 / 64, field="hemisphere", random=10)
    )
    sections["barrier"] = run_barrier(_sub(cfg, "barrier", h=h, delta=0.5, samples=10_000))
    sections["slide-euclidean"] = run_slide(
        _sub(cfg, "slide", ambient="euclidean", field="lower_hemisphere", rings=30)
    )
    sections["slide-hyperbolic"] = run_slide(_sub(cfg, "slide", ambient="hyperbolic", field="v", rings=30))
    studies = {}
    for ambient in ("euclidean", "hyperbolic"):

        def factory(hh, ambient=ambient):
            op, f, g, reference = critical_problem(ambient, 2)
            problem = DirichletProblem(op, f, g, 0.9 if ambient == "hyperbolic" else 0.5, hh)
            start = fields.plane(2, float(g.value(np.array([problem.rho, 0.0]))))
            start.name = "constant"
            return problem, start, reference

        study = convergence_study(factory, [h, h / 2])
        study["passed"] = all(study["converged"])
        studies[ambient] = study
    sections["convergence"] = dict(studies=studies, passed=all(s["passed"] for s in studies.values()))
    return dict(
        grid_h=h,
        seed=seed,
        sections=sections,
        passed=all(s["passed"] for s in sections.values()),
    )


def _sub(cfg, command, **overrides):
    '''A RunConfig for one section of the report, with the command's defaults.'''
    args = build_parser().parse_args([command])
    for key in ("n", "seed"):
        setattr(args, key, getattr(cfg, key))
    for key, value in overrides.items():
        setattr(args, key, value)
    return RunConfig(args).validate()


COMMANDS = {
    "curvature": run_curvature,
    "identities": run_identities,
    "total-curv": run_total_curvature,
    "counterexample": run_counterexample,
    "barrier": run_barrier,
    "slide": run_slide,
    "solve": run_solve,
    "rigidity": run_rigidity,
    "report": run_report,
}


# --- PARSER ------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, help="dimension n of the hypersurface (default: 2)")
    common.add_argument("--h", type=float, default=None, help="grid spacing, in (0, 0.1]")
    common.add_argument("--seed", type=int, default=0, help="seed of the random sweeps (default: 0)")
    common.add_argument("--output", default=None, help="write the JSON document to this file")

    ambient = argparse.ArgumentParser(add_help=False)
    ambient.add_argument("--ambient", choices=("euclidean", "hyperbolic"), default="euclidean")

    newton = argparse.ArgumentParser(add_help=False)
    newton.add_argument("--rtol", type=float, default=1e-9)
    newton.add_argument("--max-iter", dest="max_iter", type=int, default=50)
    newton.add_argument("--verbose", action="store_true", help="print the Newton iterations")

    parser = argparse.ArgumentParser(prog="hemirigid", description=__doc__.split("\n")[1])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", parents=[common, ambient], help="curvature profile of a field")
    p.add_argument("--field", default="model_sphere", help="named field, name[:param]")
    p.add_argument("--csv", default=None, help="grid field samples x,y,value (n = 2)")
    p.add_argument("--json", default=None, help="grid field metadata (default: next to --csv)")
    p.add_argument("--k", type=int, default=None, help="report the sigma_k hypothesis")

    p = sub.add_parser("identities", parents=[common], help="curvature identities on random operators")
    p.add_argument("--trials", type=int, default=1000)

    p = sub.add_parser("total-curv", parents=[common], help="total mean curvature bound")
    p.add_argument("--field", default="hemisphere")
    p.add_argument("--random", type=int, default=0, help="number of random bump fields")

    p = sub.add_parser("counterexample", parents=[common], help="failure of the comparison principle")
    p.add_argument("--epsilon", type=float, default=0.25)

    p = sub.add_parser("barrier", parents=[common], help="boundary point lemma barrier")
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--dump", default=None, help="write the coefficients a, b, c of L on the grid as JSON")

    p = sub.add_parser("slide", parents=[common, ambient], help="sliding sphere first contact")
    p.add_argument("--mesh", default=None, help="mesh file (default: graph of --field)")
    p.add_argument("--field", default="lower_hemisphere")
    p.add_argument("--rings", type=int, default=40)
    p.add_argument("--spacing", choices=("polar", "uniform"), default="polar")
    p.add_argument("--q-start", dest="q_start", type=float, default=None)
    p.add_argument("--k", type=int, default=None, help="also exhibit a Gamma_k point")

    p = sub.add_parser("solve", parents=[common, ambient, newton], help="Dirichlet problem Q(u) = f")
    p.add_argument(
        "--config", default=None, help="JSON {ambient, n, rho, h, f, boundary, initial, rtol, max_iter}"
    )
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--f", type=float, default=None, help="right-hand side (default: critical constant)")
    p.add_argument("--boundary", default=None, help="named field or constant (default: the cap)")
    p.add_argument("--initial", default=None, help="named field or constant (default: 1)")
    p.add_argument("--reference", default=None, help="named field to measure the error against")
    p.add_argument("--dump", default=None, help="write PREFIX.csv and PREFIX.json")

    p = sub.add_parser("rigidity", parents=[common, ambient, newton], help="multi-start rigidity experiment")
    p.add_argument("--radii", type=float, nargs="+", default=[0.7, 0.8, 0.9])

    sub.add_parser("report", parents=[common], help="all checks in one document")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code is None else int(exc.code)
    try:
        cfg = RunConfig(args).validate()
        result = COMMANDS[cfg.command](cfg)
    except HemirigidError as exc:
        print(f"hemirigid {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    document = dict(schema=SCHEMA, command=cfg.command, result=result)
    text = json.dumps(document, indent=2, sort_keys=True, default=_to_json)
    if cfg.output_path:
        try:
            with open(cfg.output_path, "w") as f:
                f.write(text + "\n")
        except OSError as exc:
            print(f"hemirigid {args.command}: cannot write --output: {exc}", file=sys.stderr)
            return 2
    else:
        print(text)
    return 0 if result["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
