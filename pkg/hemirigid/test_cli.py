import contextlib
import io
import json
import os
import tempfile
import unittest

from hemirigid import fields
from hemirigid.cli import SCHEMA, main
from hemirigid.meshes import graph_mesh, write_mesh


class TestCommandLine(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def run_main(self, *argv, name="out.json"):
        '''Exit code and parsed document of one run, the document going to a file.'''
        code = main(list(argv) + ["--output", self.path(name)])
        with open(self.path(name)) as f:
            return code, json.load(f)

    def test_counterexample(self):
        code, doc = self.run_main("counterexample", "--h", "0.015625")
        self.assertEqual(code, 0)
        self.assertEqual(doc["schema"], SCHEMA)
        self.assertEqual(doc["command"], "counterexample")
        self.assertEqual(len(doc["result"]["claims"]), 4)
        self.assertTrue(doc["result"]["passed"])

    def test_identities_are_reproducible(self):
        code, doc = self.run_main("identities", "--trials", "50", "--seed", "7", name="a.json")
        self.assertEqual(code, 0)
        self.run_main("identities", "--trials", "50", "--seed", "7", name="b.json")
        with open(self.path("a.json"), "rb") as a, open(self.path("b.json"), "rb") as b:
            self.assertEqual(a.read(), b.read())
        self.assertTrue(all(c["pass"] for c in doc["result"]["checks"].values()))

    def test_usage_errors(self):
        err = io.StringIO()
        with contextlib.redirect_stderr(err):
            self.assertEqual(main(["counterexample", "--epsilon", "0.7"]), 2)
            self.assertEqual(main(["bogus"]), 2)
            self.assertEqual(main(["barrier", "--h", "0.5"]), 2)
        self.assertIn("ConfigurationError", err.getvalue())
        self.assertFalse(os.path.exists(self.path("out.json")))

    def assert_usage_error(self, argv, message):
        err = io.StringIO()
        with contextlib.redirect_stderr(err):
            self.assertEqual(main(argv), 2)
        self.assertIn(message, err.getvalue())

    def test_unreadable_inputs(self):
        missing = self.path("missing.json")
        self.assert_usage_error(["solve", "--config", missing], "ConfigurationError")
        broken = self.path("broken.json")
        with open(broken, "w") as f:
            f.write("{not json")
        self.assert_usage_error(["solve", "--config", broken], "ConfigurationError")
        listed = self.path("listed.json")
        with open(listed, "w") as f:
            json.dump([0.9, 0.0625], f)
        self.assert_usage_error(["solve", "--config", listed], "ConfigurationError")
        self.assert_usage_error(["curvature", "--csv", self.path("missing.csv")], "ConfigurationError")
        self.assert_usage_error(["slide", "--mesh", self.path("missing.msh")], "MeshError")

    def test_unwritable_outputs(self):
        nowhere = os.path.join(self.tmp.name, "no", "such", "dir")
        self.assert_usage_error(
            ["counterexample", "--h", "0.015625", "--output", os.path.join(nowhere, "y.json")], "cannot write"
        )
        self.assert_usage_error(
            ["barrier", "--h", "0.0625", "--samples", "10", "--dump", os.path.join(nowhere, "c.json")],
            "ConfigurationError",
        )

    def test_config_dimension(self):
        config = self.path("problem.json")
        for extra in (dict(n=3), dict(n=2.0), dict(radius=0.5)):
            with open(config, "w") as f:
                json.dump(dict(ambient="euclidean", rho=0.5, h=0.0625, **extra), f)
            self.assert_usage_error(["solve", "--config", config], "ConfigurationError")
        self.assert_usage_error(["solve", "--n", "3", "--h", "0.0625"], "ConfigurationError")

    def test_barrier_dump(self):
        dump = self.path("coefficients.json")
        code, doc = self.run_main("barrier", "--h", "0.03125", "--samples", "100", "--dump", dump)
        self.assertEqual(code, 0)
        with open(dump) as f:
            coeffs = json.load(f)
        self.assertEqual(len(coeffs["points"]), len(coeffs["a"]))
        self.assertEqual(len(coeffs["points"]), len(coeffs["c"]))
        self.assertEqual(len(coeffs["b"][0]), 2)
        self.assertAlmostEqual(coeffs["theta"], doc["result"]["barrier"]["theta"], places=12)
        self.assertAlmostEqual(coeffs["C"], doc["result"]["barrier"]["C"], places=12)

    def test_slide_on_mesh_file(self):
        mesh_path = self.path("lower.msh")
        write_mesh(graph_mesh(fields.lower_hemisphere(2), rings=20), mesh_path)
        code, doc = self.run_main("slide", "--mesh", mesh_path)
        self.assertEqual(code, 0)
        self.assertEqual(doc["result"]["verdict"], "rigid")
        self.assertAlmostEqual(doc["result"]["q0"], 0.0, delta=1e-4)

    def test_slide_incorporation_failure(self):
        code, doc = self.run_main("slide", "--field", "hemisphere", "--rings", "10")
        self.assertEqual(code, 1)
        self.assertEqual(doc["result"]["kind"], "incorporation")

    def test_barrier(self):
        code, doc = self.run_main("barrier", "--h", "0.03125", "--samples", "2000")
        self.assertEqual(code, 0)
        self.assertAlmostEqual(doc["result"]["barrier"]["theta"], 2**-1.5, places=12)
        self.assertGreater(doc["result"]["sampled_lower_bound_min"], 0)

    def test_solve(self):
        code, doc = self.run_main(
            "solve", "--ambient", "hyperbolic", "--h", "0.0625", "--rho", "0.9", "--reference", "v"
        )
        self.assertEqual(code, 0)
        result = doc["result"]
        self.assertTrue(result["converged"])
        self.assertLessEqual(result["distance_to_reference"], 10 * 0.0625**2)

    def test_solve_from_config_with_dump(self):
        config = self.path("problem.json")
        with open(config, "w") as f:
            json.dump(dict(ambient="euclidean", rho=0.5, h=0.0625), f)
        prefix = self.path("u")
        code, doc = self.run_main("solve", "--config", config, "--dump", prefix)
        self.assertEqual(code, 0)
        self.assertEqual(doc["result"]["problem"]["rho"], 0.5)
        self.assertTrue(os.path.exists(prefix + ".csv"))
        with open(prefix + ".json") as f:
            self.assertTrue(json.load(f)["result"]["converged"])

    def test_curvature_hypothesis(self):
        code, doc = self.run_main("curvature", "--ambient", "hyperbolic", "--field", "model_sphere", "--k", "2")
        self.assertEqual(code, 0)
        result = doc["result"]
        self.assertTrue(result["hypothesis"]["meets_threshold"])
        self.assertTrue(result["umbilicity"]["is_umbilic"])


if __name__ == "__main__":
    unittest.main()
