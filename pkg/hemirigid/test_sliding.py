import unittest

import numpy as np

from hemirigid import fields
from hemirigid.errors import AmbientViolationError, ContactError
from hemirigid.meanops import SphereFamily
from hemirigid.meshes import HypersurfaceMesh, graph_mesh
from hemirigid.sliding import (
    CONTAINMENT_FACTOR,
    ENCLOSURE_SAMPLES,
    barycentric_lattice,
    circumradii,
    closest_points_on_triangles,
    first_contact,
    hyperbolic_incorporation_check,
    incorporation_check,
    k_convex_witness,
    plane_contact_point,
    winding_numbers,
)


def rotation_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


class TestPrimitives(unittest.TestCase):
    def test_winding_numbers(self):
        square = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
        points = np.array([[0.0, 0.0], [2.0, 0.0], [0.5, -0.9]])
        np.testing.assert_array_equal(winding_numbers(square, points), [1, 0, 1])
        np.testing.assert_array_equal(winding_numbers(square[::-1], points), [-1, 0, -1])

    def test_closest_points_against_sampling(self):
        rng = np.random.default_rng(11)
        T = rng.normal(size=(50, 3, 3))
        lattice = barycentric_lattice(60)
        for p in rng.normal(scale=2.0, size=(20, 3)):
            closest = closest_points_on_triangles(p, T[:, 0], T[:, 1], T[:, 2])
            exact = np.linalg.norm(closest - p, axis=1)
            samples = np.einsum("kj,fjd->fkd", lattice, T)
            sampled = np.min(np.linalg.norm(samples - p, axis=-1), axis=1)
            self.assertTrue(np.all(exact <= sampled + 1e-12))
            self.assertTrue(np.all(sampled - exact <= 0.2))

    def test_circumradius(self):
        tri = np.array([[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, np.sqrt(3) / 2, 0.0]]])
        self.assertAlmostEqual(float(circumradii(tri)[0]), 1 / np.sqrt(3))
        self.assertEqual(len(barycentric_lattice(4)), 15)


class TestIncorporation(unittest.TestCase):
    def setUp(self):
        self.mesh = graph_mesh(fields.lower_hemisphere(2), rings=12)

    def test_lower_hemisphere(self):
        report = incorporation_check(self.mesh)
        self.assertTrue(report.passed)
        self.assertEqual(report.diagnostics["unenclosed_circle_samples"], 0)

    def test_upper_hemisphere(self):
        report = incorporation_check(graph_mesh(fields.hemisphere(2), rings=12))
        self.assertEqual(report.conditions, {"i": True, "ii": True, "iii": False})
        self.assertFalse(report)

    def test_boundary_must_surround_the_unit_circle(self):
        shrunk = incorporation_check(graph_mesh(fields.plane(2), radius=0.95, rings=3))
        self.assertFalse(shrunk.conditions["ii"])
        self.assertEqual(shrunk.diagnostics["unenclosed_circle_samples"], ENCLOSURE_SAMPLES)
        # The same coarse polygon inscribed in the unit circle encloses it up to its chords.
        inscribed = incorporation_check(graph_mesh(fields.plane(2), rings=3))
        self.assertTrue(inscribed.passed)
        self.assertLess(inscribed.diagnostics["enclosure_slack"], 0.02)

    def test_raised_boundary_vertex(self):
        V = self.mesh.vertices.copy()
        V[self.mesh.boundary_loop[0], 2] = 0.1
        report = incorporation_check(HypersurfaceMesh(V, self.mesh.faces))
        self.assertFalse(report.conditions["ii"])
        self.assertAlmostEqual(report.diagnostics["max_boundary_height_deviation"], 0.1)

    def test_hole_gives_two_boundaries(self):
        # The first six faces are the fan around the centre.
        mesh = HypersurfaceMesh(self.mesh.vertices, self.mesh.faces[6:])
        self.assertEqual(len(mesh.boundary_loops), 2)
        report = incorporation_check(mesh)
        self.assertFalse(report.conditions["i"])
        self.assertFalse(report.passed)

    def test_hyperbolic(self):
        v = graph_mesh(fields.model_sphere(2), rings=12, ambient="hyperbolic")
        self.assertTrue(hyperbolic_incorporation_check(v).passed)
        cap = fields.sphere_cap(2, 0.0, 2.0, +1, radius=1.0)
        report = hyperbolic_incorporation_check(graph_mesh(cap, rings=12, ambient="hyperbolic"))
        self.assertTrue(report.conditions["ii"])
        self.assertFalse(report.conditions["iii"])
        with self.assertRaises(AmbientViolationError):
            hyperbolic_incorporation_check(self.mesh)


class TestFirstContact(unittest.TestCase):
    def test_lower_hemisphere_is_rigid(self):
        mesh = graph_mesh(fields.lower_hemisphere(2), rings=40)
        report = first_contact(mesh, SphereFamily("euclidean", 1.0))
        self.assertAlmostEqual(report.q0, 0.0, delta=1e-4)
        self.assertEqual(report.classification, "interior_tangency")
        self.assertEqual(report.verdict, "rigid")
        summary = report.to_dict(max_points=5)
        self.assertGreater(summary["contact_count"], 5)
        self.assertEqual(len(summary["contact_points"]), 5)

    def test_larger_hemisphere_is_touched_at_the_bottom(self):
        mesh = graph_mesh(fields.lower_hemisphere(2, radius=2.0), rings=40)
        report = first_contact(mesh, SphereFamily("euclidean", 1.0))
        self.assertAlmostEqual(report.q0, -1.0, delta=1e-3)
        self.assertEqual(report.classification, "interior_tangency")
        self.assertEqual(report.verdict, "hypothesis_violated")
        np.testing.assert_allclose(report.contact_points[0], [0.0, 0.0, -2.0], atol=1e-2)
        self.assertGreater(report.containment_residual, 1.0)

    def test_model_sphere_is_rigid(self):
        mesh = graph_mesh(fields.model_sphere(2), rings=30, spacing="uniform", ambient="hyperbolic")
        report = first_contact(mesh, SphereFamily("hyperbolic", 1.0))
        self.assertAlmostEqual(report.q0, 2.0, delta=1e-4)
        self.assertFalse(report.details["rim_contact"])
        self.assertEqual(report.verdict, "rigid")

    def test_refinement(self):
        family = SphereFamily("euclidean", 1.0)
        reports = [first_contact(graph_mesh(fields.lower_hemisphere(2), rings=k), family) for k in (12, 24)]
        edges = [r.details["max_edge_length"] for r in reports]
        self.assertLess(edges[1], 0.6 * edges[0])
        self.assertLessEqual(abs(reports[0].q0 - reports[1].q0), edges[0] ** 2)
        for report, edge in zip(reports, edges):
            self.assertEqual(report.verdict, "rigid")
            self.assertLessEqual(report.containment_residual, CONTAINMENT_FACTOR * edge**2)

    def test_rotation_invariance(self):
        mesh = graph_mesh(fields.lower_hemisphere(2, radius=2.0), rings=20)
        family = SphereFamily("euclidean", 1.0)
        a = first_contact(mesh, family)
        b = first_contact(mesh.transformed(rotation_z(0.3)), family)
        self.assertAlmostEqual(a.q0, b.q0, delta=1e-6)
        self.assertEqual(a.verdict, b.verdict)

    def test_errors(self):
        family = SphereFamily("euclidean", 1.0)
        with self.assertRaises(ContactError) as ctx:
            first_contact(graph_mesh(fields.hemisphere(2), rings=8), family)
        self.assertEqual(ctx.exception.kind, "incorporation")
        with self.assertRaises(ContactError) as ctx:
            first_contact(graph_mesh(fields.lower_hemisphere(2), rings=8), family, q_start=-0.5)
        self.assertEqual(ctx.exception.kind, "start")


class TestPlaneContact(unittest.TestCase):
    def test_paraboloid(self):
        mesh = graph_mesh(fields.paraboloid(2), rings=10)
        contact = plane_contact_point(mesh)
        self.assertEqual(contact.vertex, 0)
        np.testing.assert_allclose(contact.profile.kappa.entries, [1.0, 1.0], atol=1e-12)
        witness = k_convex_witness(mesh, 2)
        self.assertTrue(witness["in_gamma_k"])
        self.assertAlmostEqual(witness["sigma_k"], 1.0, places=12)

    def test_saddle_is_lowest_on_the_boundary(self):
        mesh = graph_mesh(fields.saddle(), rings=10)
        with self.assertRaises(ContactError) as ctx:
            plane_contact_point(mesh)
        self.assertEqual(ctx.exception.kind, "degenerate")

    def test_flat_disk_is_touched_at_its_centre(self):
        mesh = graph_mesh(fields.plane(2), rings=10)
        report = first_contact(mesh, SphereFamily("euclidean", 1.0))
        self.assertAlmostEqual(report.q0, 1.0, delta=1e-6)
        self.assertEqual(report.classification, "interior_tangency")
        self.assertEqual(report.verdict, "hypothesis_violated")


if __name__ == "__main__":
    unittest.main()
