import unittest

import numpy as np

from hemirigid import fields
from hemirigid.errors import DomainError, EllipticityError
from hemirigid.grids import CartesianGrid
from hemirigid.maxprinciple import (
    BarrierConfig,
    QuasilinearOperator,
    apply_Q,
    barrier_operator,
    choose_lambda,
    comparison_failure_demo,
    discrete_strong_max_check,
    hopf_barrier,
    linearize,
    lower_bound_expression,
    rim_normal_derivative,
    verify_barrier,
)
from hemirigid.meanops import mean_curvature_euclidean, mean_curvature_hyperbolic


class TestOperators(unittest.TestCase):
    def test_operators_are_mean_curvatures(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-0.6, 0.6, size=(40, 2))
        u = fields.u2(2, 0.3)
        np.testing.assert_allclose(
            apply_Q(QuasilinearOperator.hyperbolic(2), u, x), mean_curvature_hyperbolic(u, x), atol=1e-13
        )
        np.testing.assert_allclose(
            apply_Q(QuasilinearOperator.euclidean(2), u, x), mean_curvature_euclidean(u, x), atol=1e-13
        )

    def test_linearization_identity(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-0.65, 0.65, size=(100, 2))
        phi, psi = fields.u2(2, 0.25), fields.model_sphere(2)
        for op in (QuasilinearOperator.hyperbolic(2), QuasilinearOperator.euclidean(2)):
            coeffs = linearize(op, phi, psi, x)
            diff = [a - b for a, b in zip(psi.jet(x), phi.jet(x))]
            np.testing.assert_allclose(
                coeffs.apply(*diff), apply_Q(op, psi, x) - apply_Q(op, phi, x), atol=1e-10
            )

    def test_theta_from_model_sphere(self):
        op = QuasilinearOperator.hyperbolic(2)
        grid = CartesianGrid(1 / 32, 1.0, 2, pad=0)
        coeffs = linearize(op, fields.u2(2, 0.25), fields.model_sphere(2), grid)
        self.assertAlmostEqual(coeffs.theta, 2**-1.5, places=12)
        self.assertGreaterEqual(coeffs.min_eigenvalue(), coeffs.theta * (1 - 1e-12))

    def test_ellipticity_lost(self):
        op = QuasilinearOperator.hyperbolic(2)
        with self.assertRaises(EllipticityError):
            linearize(op, fields.u1(2), fields.plane(2, -1.0), np.zeros((1, 2)))


class TestBarrier(unittest.TestCase):
    def test_choose_lambda(self):
        self.assertEqual(choose_lambda(0.3536, 10.0, 0.5), 512.0)
        self.assertEqual(choose_lambda(1.0, 0.0, 0.5), 1.0)
        lam = choose_lambda(0.3536, 10.0, 0.5)
        self.assertLessEqual(lower_bound_expression(0.3536, 10.0, lam / 2, 0.25), 0)
        for bad in [(0.0, 1.0, 0.5), (1.0, -1.0, 0.5), (1.0, 1.0, 1.0)]:
            with self.assertRaises(DomainError):
                choose_lambda(*bad)

    def test_barrier_on_actual_coefficients(self):
        op = QuasilinearOperator.hyperbolic(2)
        coeffs = linearize(op, fields.u2(2, 0.25), fields.model_sphere(2), CartesianGrid(1 / 32, 1.0, 2, pad=0))
        theta, C, delta = coeffs.theta, coeffs.coefficient_bound(), 0.5
        lam = choose_lambda(theta, C, delta)
        self.assertGreater(verify_barrier(theta, C, delta, lam, rng=np.random.default_rng(3)), 0)
        pts, values = barrier_operator(coeffs, BarrierConfig(delta, lam, theta, C))
        self.assertGreater(len(pts), 100)
        self.assertTrue(np.all(values > 0))

    def test_barrier_values(self):
        cfg = BarrierConfig(0.5, 8.0)
        w, Dw = hopf_barrier(cfg, [[0.5, 0.0], [0.0, 0.0]])
        np.testing.assert_allclose(w, [0.0, 1 - np.exp(-2.0)], atol=1e-15)
        self.assertAlmostEqual(Dw[0, 0], rim_normal_derivative(cfg), places=14)
        self.assertAlmostEqual(rim_normal_derivative(cfg), -2 * 8.0 * 0.5 * np.exp(-8.0 * 0.25), places=14)
        with self.assertRaises(DomainError):
            hopf_barrier(cfg, [0.6, 0.0])
        with self.assertRaises(DomainError):
            BarrierConfig(0.0, 1.0)


class TestComparison(unittest.TestCase):
    def test_failure_demo(self):
        demo = comparison_failure_demo(0.25, 2, 1 / 64)
        self.assertTrue(demo["comparison_principle_fails"])
        self.assertFalse(comparison_failure_demo(ambient="euclidean")["applicable"])

    def test_discrete_strong_max(self):
        op = QuasilinearOperator.hyperbolic(2)
        v = fields.model_sphere(2)
        same = discrete_strong_max_check(v, v, op)
        self.assertTrue(same["touches"] and same["coincide"])
        apart = discrete_strong_max_check(fields.u1(2), v, op)
        self.assertTrue(apart["hypotheses_hold"])
        self.assertFalse(apart["touches"])
        self.assertGreater(apart["max_separation"], 0.4)


if __name__ == "__main__":
    unittest.main()
