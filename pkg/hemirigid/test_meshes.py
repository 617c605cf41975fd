import os
import tempfile
import unittest

import numpy as np

from hemirigid import fields
from hemirigid.errors import MeshError
from hemirigid.meshes import (
    HypersurfaceMesh,
    boundary_loops,
    graph_mesh,
    read_mesh,
    ring_radii,
    write_mesh,
)


class TestGraphMesh(unittest.TestCase):
    def test_counts(self):
        rings = 40
        mesh = graph_mesh(fields.lower_hemisphere(2), rings=rings)
        self.assertEqual(len(mesh.vertices), 1 + 3 * rings * (rings + 1))
        self.assertEqual(len(mesh.faces), 6 * rings**2)
        self.assertEqual(len(mesh.boundary_loop), 6 * rings)
        np.testing.assert_allclose(mesh.heights[mesh.boundary_loop], 0.0, atol=1e-7)

    def test_every_interior_edge_has_two_faces(self):
        mesh = graph_mesh(fields.paraboloid(2), rings=6, spacing="uniform")
        f = mesh.faces
        e = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        self.assertEqual(int(np.sum(counts == 1)), 36)
        self.assertTrue(np.all(counts <= 2))
        # Euler characteristic of a disk.
        self.assertEqual(len(mesh.vertices) - len(mesh.edges()) + len(mesh.faces), 1)

    def test_ring_radii(self):
        np.testing.assert_allclose(ring_radii(2.0, 4, "uniform"), [0, 0.5, 1, 1.5, 2])
        polar = ring_radii(1.0, 4)
        self.assertEqual(polar[-1], 1.0)
        self.assertTrue(np.all(np.diff(np.diff(polar)) < 0))
        with self.assertRaises(MeshError):
            ring_radii(1.0, 4, "random")

    def test_field_must_cover_the_disk(self):
        with self.assertRaises(MeshError):
            graph_mesh(fields.hemisphere(2), radius=1.5, rings=4)


class TestTopology(unittest.TestCase):
    def test_two_triangles(self):
        loops = boundary_loops([[0, 1, 2], [0, 2, 3]])
        self.assertEqual(len(loops), 1)
        self.assertEqual(sorted(loops[0].tolist()), [0, 1, 2, 3])

    def test_two_components(self):
        self.assertEqual(len(boundary_loops([[0, 1, 2], [3, 4, 5]])), 2)

    def test_non_manifold_edge(self):
        with self.assertRaises(MeshError):
            boundary_loops([[0, 1, 2], [0, 1, 3], [0, 1, 4]])

    def test_pinched_boundary(self):
        # Two triangles sharing only vertex 0.
        with self.assertRaises(MeshError):
            boundary_loops([[0, 1, 2], [0, 3, 4]])

    def test_bad_faces(self):
        v = np.zeros((3, 3))
        with self.assertRaises(MeshError):
            HypersurfaceMesh(v, [[0, 1, 3]])
        with self.assertRaises(MeshError):
            HypersurfaceMesh(v, [[0, 1, 1]])
        with self.assertRaises(MeshError):
            HypersurfaceMesh(np.zeros((3, 2)), [[0, 1, 2]])


class TestCurvature(unittest.TestCase):
    def test_quadratic_fit_is_exact_on_quadrics(self):
        mesh = graph_mesh(fields.paraboloid(2, 2.0), rings=10).transformed(np.eye(3))
        self.assertIsNone(mesh.field)
        profile = mesh.vertex_profile(0)
        np.testing.assert_allclose(profile.kappa.entries, [2.0, 2.0], atol=1e-8)

    def test_fit_close_to_field_curvature(self):
        u = fields.lower_hemisphere(2)
        with_field = graph_mesh(u, rings=30)
        without = with_field.transformed(np.eye(3))
        v = 10  # On ring 2.
        np.testing.assert_allclose(
            without.vertex_profile(v).kappa.entries, with_field.vertex_profile(v).kappa.entries, atol=3e-2
        )

    def test_two_ring(self):
        mesh = graph_mesh(fields.plane(2), rings=3)
        self.assertEqual(len(mesh.neighbors(0)), 6)
        self.assertEqual(len(mesh.two_ring(0)), 18)


class TestIO(unittest.TestCase):
    def test_write_and_read(self):
        mesh = graph_mesh(fields.u2(2, 0.25), rings=5)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "u2.msh")
            write_mesh(mesh, path)
            back = read_mesh(path, "hyperbolic")
        np.testing.assert_array_equal(back.vertices, mesh.vertices)
        np.testing.assert_array_equal(back.faces, mesh.faces)
        self.assertEqual(back.ambient, "hyperbolic")

    def test_truncated_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "bad.msh")
            with open(path, "w") as f:
                f.write("4 2\n0 0 0\n1 0 0\n0 1 0\n")
            with self.assertRaises(MeshError):
                read_mesh(path)
            with self.assertRaises(MeshError):
                read_mesh(os.path.join(tmp, "missing.msh"))


if __name__ == "__main__":
    unittest.main()
