import unittest

import numpy as np

from hemirigid import fields
from hemirigid.errors import ConfigurationError, DomainError


class TestFields(unittest.TestCase):
    def test_model_sphere_values(self):
        v = fields.model_sphere(2)
        self.assertEqual(float(v.value([1.0, 0.0])), 1.0)
        self.assertAlmostEqual(float(v.value([0.0, 0.0])), 2 - np.sqrt(2), places=15)

    def test_v_q_boundary_and_cone(self):
        for q in (np.sqrt(2.0), 1.5, 3.0):
            v = fields.v_q(2, q)
            R = q / np.sqrt(2)
            if R >= 1:
                self.assertGreater(float(v.value([1.0, 0.0])), 1.0)
            r = np.linspace(0, min(1.0, R), 200)
            x = np.stack([r, np.zeros_like(r)], axis=1)
            self.assertTrue(np.all(v.value(x) >= r - 1e-12))
        with self.assertRaises(DomainError):
            fields.v_q(2, 0.0)

    def test_hessians_are_symmetric(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-0.5, 0.5, size=(20, 3))
        for u in (fields.u2(3, 0.25), fields.random_bump_field(rng, 3), fields.paraboloid(3)):
            H = u.hessian(x)
            np.testing.assert_array_equal(H, np.swapaxes(H, -1, -2))

    def test_gradient_by_finite_differences(self):
        u = fields.gaussian_bump(2, [0.1, -0.2], 0.4, 0.3)
        x = np.array([0.3, 0.2])
        eps = 1e-6
        fd = [
            (u.value(x + eps * e) - u.value(x - eps * e)) / (2 * eps) for e in np.eye(2)
        ]
        np.testing.assert_allclose(u.gradient(x), fd, atol=1e-8)

    def test_named_fields(self):
        self.assertEqual(fields.named_field("v_q:3", 2).name, "v_q:3")
        self.assertAlmostEqual(float(fields.named_field("plane:0.5", 2).value([0.2, 0.3])), 0.5)
        with self.assertRaises(ConfigurationError):
            fields.named_field("torus", 2)
        with self.assertRaises(ConfigurationError):
            fields.named_field("u2:abc", 2)
        with self.assertRaises(ConfigurationError):
            fields.named_field("u2:-1", 2)


if __name__ == "__main__":
    unittest.main()
