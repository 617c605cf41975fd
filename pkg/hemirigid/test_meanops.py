import unittest

import numpy as np

from hemirigid import fields
from hemirigid.errors import AmbientViolationError, ConfigurationError, DomainError
from hemirigid.meanops import (
    SphereFamily,
    counterexample_report,
    geodesic_sphere_mean_curvature,
    mean_curvature_euclidean,
    mean_curvature_hyperbolic,
    positivity_check,
    sphere_family_report,
    total_mean_curvature,
    total_mean_curvature_trend,
    unit_ball_volume,
)


def disk_points(count, radius, n=2, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(count, n))
    x /= np.linalg.norm(x, axis=1)[:, None]
    return x * radius * rng.uniform(size=(count, 1)) ** (1 / n)


class TestMeanCurvatureConstants(unittest.TestCase):
    def test_counterexample_fields(self):
        for n in (2, 3, 5):
            x = disk_points(200, 1.0, n)
            np.testing.assert_allclose(mean_curvature_hyperbolic(fields.u1(n), x), n, atol=1e-9)
            np.testing.assert_allclose(
                mean_curvature_hyperbolic(fields.model_sphere(n), x), np.sqrt(2) * n, atol=1e-9
            )
            for eps in (0.1, 0.25, 0.49):
                expected = n * (1 + eps) / np.sqrt(1 + eps**2)
                np.testing.assert_allclose(
                    mean_curvature_hyperbolic(fields.u2(n, eps), x), expected, atol=1e-9
                )

    def test_hemisphere(self):
        x = disk_points(100, 0.9)
        np.testing.assert_allclose(mean_curvature_euclidean(fields.hemisphere(2), x), -2.0, atol=1e-9)

    def test_geodesic_spheres(self):
        self.assertEqual(geodesic_sphere_mean_curvature(3.0, 1.5, 2), 4.0)
        with self.assertRaises(DomainError):
            geodesic_sphere_mean_curvature(1.0, 1.0, 2)
        family = SphereFamily("hyperbolic", 2.0)
        self.assertAlmostEqual(family.mean_curvature(2), 2 * np.sqrt(2))
        x = disk_points(50, 0.95)
        np.testing.assert_allclose(
            mean_curvature_hyperbolic(family.lower_cap(2), x), family.mean_curvature(2), atol=1e-9
        )

    def test_hyperbolic_needs_positive_height(self):
        with self.assertRaises(AmbientViolationError):
            mean_curvature_hyperbolic(fields.plane(2, 0.0), [[0.1, 0.1]])
        with self.assertRaises(DomainError):
            SphereFamily("hyperbolic", 0.0)

    def test_family_contains_its_cap(self):
        for ambient, q in (("euclidean", 0.7), ("hyperbolic", 2.5)):
            family = SphereFamily(ambient, q)
            cap = family.lower_cap(2)
            x = disk_points(50, 0.9 * cap.radius)
            p = np.column_stack([x, cap.value(x)])
            np.testing.assert_allclose(family.signed_distance(p), 0.0, atol=1e-12)


class TestCounterexample(unittest.TestCase):
    def test_report_on_fine_grid(self):
        report = counterexample_report(0.25, 1 / 256, 2)
        self.assertTrue(report["passed"])
        self.assertTrue(report["comparison_principle_fails"])
        self.assertEqual(len(report["claims"]), 4)
        for claim in report["claims"]:
            self.assertEqual(claim["grid_h"], 1 / 256)
            self.assertIn("tol", claim)
        ordering = report["claims"][2]
        self.assertGreaterEqual(ordering["slack"], -1e-12)

    def test_higher_dimension(self):
        self.assertTrue(counterexample_report(0.1, 1 / 64, 4)["passed"])

    def test_epsilon_range(self):
        for eps in (0.0, 0.5, 0.7):
            with self.assertRaises(DomainError):
                counterexample_report(eps)

    def test_sphere_family(self):
        rows = sphere_family_report([np.sqrt(2.0), 1.5, 2.0, 3.0])
        self.assertTrue(all(row["passed"] for row in rows))
        by_q = {row["q"]: row for row in rows}
        self.assertAlmostEqual(by_q[2.0]["boundary_excess"], 0.0)
        self.assertGreater(by_q[3.0]["boundary_excess"], 0.0)

    def test_positivity(self):
        self.assertTrue(positivity_check(fields.model_sphere(2))["consistent"])
        report = positivity_check(fields.paraboloid(2, 1.0))
        self.assertEqual(report["min_value"], 0.0)
        self.assertTrue(report["consistent"])


class TestTotalMeanCurvature(unittest.TestCase):
    def test_hemisphere_trend(self):
        trend = total_mean_curvature_trend(fields.hemisphere(2))
        self.assertTrue(trend["passed"])
        self.assertTrue(trend["monotone"])
        self.assertTrue(np.all(np.diff(trend["gaps"]) < 0))
        self.assertLessEqual(abs(trend["extrapolated_gap"]), 1e-2)

    def test_random_fields(self):
        rng = np.random.default_rng(21)
        h = 1 / 64
        for _ in range(50):
            report = total_mean_curvature(fields.random_bump_field(rng, 2), h)
            self.assertGreaterEqual(report.slack, -report.tol)

    def test_flux_agrees_with_integral(self):
        report = total_mean_curvature(fields.paraboloid(2), 1 / 64)
        self.assertAlmostEqual(report.integral_value, report.flux_value, delta=2e-2)
        self.assertEqual(report.bound, 2 * unit_ball_volume(2))

    def test_coarse_grid_rejected(self):
        with self.assertRaises(ConfigurationError):
            total_mean_curvature(fields.hemisphere(2), 0.2)


if __name__ == "__main__":
    unittest.main()
