import io
import json
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from unittest import mock

from aseplab import cli
from aseplab.config import settings
from aseplab.models import CheckReport, CheckStatus


def invoke(*argv):
    """Run the CLI and return (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.run(list(argv))
    return code, out.getvalue(), err.getvalue()


class PhaseCommandTests(unittest.TestCase):
    def test_phase_json(self):
        code, out, _ = invoke("phase", "--A", "3", "--C", "0", "--q", "0.5")
        self.assertEqual(code, cli.EXIT_OK)
        document = json.loads(out)
        self.assertEqual(document["phase"], "HD")
        self.assertEqual(document["theta"], 0.78125)
        self.assertEqual(document["params"]["A"], 3.0)
        self.assertIn("alpha", document["rates"])

    def test_phase_csv(self):
        code, out, _ = invoke("phase", "--A", "0.5", "--C", "0.5", "--format", "csv")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertTrue(out.startswith("field,value\nphase,MC\n"))

    def test_config_file_and_flag_precedence(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "point.cfg"
            path.write_text("# high density point\nA = 3\nC = 0  # no right boundary atom\nq = 0.5\n")
            _, out, _ = invoke("phase", "--config", str(path))
            self.assertEqual(json.loads(out)["theta"], 0.78125)
            _, out, _ = invoke("phase", "--config", str(path), "--q", "0.01")
            self.assertAlmostEqual(json.loads(out)["theta"], 0.75, places=12)

    def test_unknown_config_key(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.cfg"
            path.write_text("temperature = 3\n")
            code, _, err = invoke("phase", "--config", str(path))
        self.assertEqual(code, cli.EXIT_USAGE)
        self.assertIn("temperature", err)


class StationaryCommandTests(unittest.TestCase):
    def test_one_site(self):
        code, out, _ = invoke("stationary", "--alpha", "1", "--beta", "2", "--gamma", "0.5", "--delta", "0.25", "--n", "1")
        self.assertEqual(code, cli.EXIT_OK)
        document = json.loads(out)
        self.assertAlmostEqual(document["measure"]["weights"]["1"], 1.25 / 3.75, places=12)
        self.assertEqual(document["method"], "dense-lu")

    def test_marginal_csv(self):
        code, out, _ = invoke("stationary", "--alpha", "0.25", "--beta", "0.75", "--n", "4", "--m", "1", "--format", "csv")
        self.assertEqual(code, cli.EXIT_OK)
        lines = out.splitlines()
        self.assertEqual(lines[0], "word,weight")
        self.assertAlmostEqual(float(lines[2].split(",")[1]), 0.25, places=10)


class GfAndMcCommandTests(unittest.TestCase):
    def test_gf_on_the_bernoulli_line(self):
        code, out, _ = invoke("gf", "--alpha", "0.25", "--beta", "0.75", "--n", "3", "--t", "2")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertAlmostEqual(json.loads(out)["value"], 1.25, places=12)

    def test_gf_too_many_points(self):
        code, _, _ = invoke("gf", "--alpha", "0.25", "--beta", "0.75", "--n", "1", "--t", "1.1,1.2")
        self.assertEqual(code, cli.EXIT_USAGE)

    def test_gf_identity_needs_fewer_points_than_sites(self):
        code, out, err = invoke("gf", "--A", "3", "--C", "0.6", "--q", "0.5", "--n", "2", "--t", "1.1,1.2", "--identity")
        self.assertEqual(code, cli.EXIT_USAGE)
        self.assertEqual(out, "")
        self.assertIn("--identity", err)
        code, _, _ = invoke("gf", "--A", "3", "--C", "0.6", "--q", "0.5", "--n", "2", "--t", "1.1,1.2")
        self.assertEqual(code, cli.EXIT_OK)

    def test_mc_with_exact(self):
        code, out, _ = invoke(
            "mc", "--alpha", "1", "--beta", "2", "--gamma", "0.5", "--delta", "0.25", "--n", "1",
            "--total-time", "2000", "--seed", "5", "--exact",
        )
        self.assertEqual(code, cli.EXIT_OK)
        estimate = json.loads(out)["estimates"][0]
        self.assertEqual(estimate["label"], "site:1")
        self.assertAlmostEqual(estimate["exact"], 1.25 / 3.75, places=12)
        self.assertEqual(estimate["seed"], 5)

    def test_mc_bad_statistic(self):
        code, _, _ = invoke("mc", "--alpha", "1", "--beta", "1", "--n", "2", "--stat", "word:12")
        self.assertEqual(code, cli.EXIT_USAGE)


class ExitStatusTests(unittest.TestCase):
    def test_missing_point_is_usage_error(self):
        code, _, err = invoke("phase")
        self.assertEqual(code, cli.EXIT_USAGE)
        self.assertIn("parameter point", err)

    def test_both_parameterizations(self):
        code, _, _ = invoke("phase", "--alpha", "1", "--beta", "1", "--A", "0.5", "--C", "0.5")
        self.assertEqual(code, cli.EXIT_USAGE)

    def test_unknown_flag(self):
        code, _, _ = invoke("phase", "--A", "1", "--C", "1", "--bogus")
        self.assertEqual(code, cli.EXIT_USAGE)

    def test_invalid_value(self):
        code, _, _ = invoke("phase", "--alpha", "-1", "--beta", "1")
        self.assertEqual(code, cli.EXIT_USAGE)

    def test_computation_error(self):
        code, out, err = invoke("limit", "--A", "0.5", "--C", "0.5", "--q", "0.5", "--m", "1")
        self.assertEqual(code, cli.EXIT_ERROR)
        self.assertEqual(out, "")
        self.assertIn("PHASE", err)

    def test_failing_suite(self):
        failed = CheckReport(name="theta", residual=1.0, threshold=1e-10, status=CheckStatus.FAIL)
        with mock.patch("aseplab.commands.verify.checks.run_suite", return_value=[failed]):
            code, out, err = invoke("verify", "--suite", "theta")
        self.assertEqual(code, cli.EXIT_FAILED)
        self.assertEqual(json.loads(out)["status"], "FAIL")
        self.assertIn("1 failed", err)

    def test_help(self):
        code, _, _ = invoke("--help")
        self.assertEqual(code, cli.EXIT_OK)


class VerifyCommandTests(unittest.TestCase):
    def test_list(self):
        code, out, _ = invoke("verify", "--list")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(len(json.loads(out)["checks"]), 24)

    def test_suite_recorded_in_ledger(self):
        with tempfile.TemporaryDirectory() as tmp:
            database = str(Path(tmp) / "runs.db")
            code, out, _ = invoke("verify", "--suite", "theta,budget", "--db", database)
            self.assertEqual(code, cli.EXIT_OK)
            self.assertEqual(len(out.splitlines()), 7)
            self.assertIsNone(settings.database_path)

            code, out, _ = invoke("history", "--db", database)
            self.assertEqual(code, cli.EXIT_OK)
            runs = json.loads(out)["runs"]
            self.assertEqual([run["command"] for run in runs], ["verify"])

            code, out, _ = invoke("history", "--db", database, "--run", runs[0]["id"], "--format", "csv")
            self.assertEqual(code, cli.EXIT_OK)
            self.assertEqual(len(out.splitlines()), 8)

            code, _, _ = invoke("history", "--db", database, "--run", "missing")
            self.assertEqual(code, cli.EXIT_ERROR)


if __name__ == "__main__":
    unittest.main()
