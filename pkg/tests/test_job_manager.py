import unittest

import numpy as np

from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError
from aseplab.models import BoundaryParams, Which
from aseplab.services import asep_exact
from aseplab.services.check_worker import execute_unit
from aseplab.services.job_manager import JobManager

PARAMS = BoundaryParams(A=3.0, C=0.6, q=0.5)


def _marginal_unit(n, m=2, which=Which.FIRST):
    return {"kind": "marginal", "params": PARAMS.model_dump(), "n": n, "m": m, "which": which.value}


class ExecuteUnitTests(unittest.TestCase):
    def test_marginal(self):
        result = execute_unit(_marginal_unit(4))
        expected = asep_exact.marginal(asep_exact.stationary_from_params(4, PARAMS), Which.FIRST, 2)
        self.assertTrue(result["success"])
        np.testing.assert_allclose(result["weights"], expected.weights)

    def test_check(self):
        result = execute_unit({"kind": "check", "name": "theta", "point": {}})
        self.assertEqual(result["report"]["status"], "PASS")

    def test_unknown_kind(self):
        with self.assertRaises(ValueError):
            execute_unit({"kind": "download"})


class JobManagerTests(unittest.TestCase):
    def test_concurrency_defaults_to_settings(self):
        self.assertEqual(JobManager().max_concurrent, settings.max_jobs)
        self.assertEqual(JobManager(0).max_concurrent, settings.max_jobs)
        self.assertEqual(JobManager(3).max_concurrent, 3)

    def test_inline_run_keeps_order(self):
        results = JobManager(1).run([_marginal_unit(3), _marginal_unit(5)])
        self.assertEqual(len(results), 2)
        self.assertNotEqual(results[0]["weights"], results[1]["weights"])

    def test_failure_with_code_becomes_lab_error(self):
        result = {"success": False, "error": "PHASE: no atom above 1", "code": "PHASE"}
        with self.assertRaises(LabError) as ctx:
            JobManager._raise_on_failure({"kind": "check"}, result)
        self.assertEqual(ctx.exception.code, ErrorCode.PHASE)
        self.assertEqual(ctx.exception.message, "no atom above 1")

    def test_failure_without_code(self):
        with self.assertRaises(RuntimeError):
            JobManager._raise_on_failure({"kind": "marginal"}, {"success": False, "error": "boom"})

    def test_spawned_workers_match_inline(self):
        units = [_marginal_unit(n) for n in (3, 4, 5)]
        spawned = JobManager(2, poll_interval=0.01).run(units)
        inline = JobManager(1).run(units)
        for left, right in zip(spawned, inline):
            np.testing.assert_allclose(left["weights"], right["weights"], atol=1e-14)

    def test_spawned_worker_errors_propagate(self):
        units = [_marginal_unit(3), _marginal_unit(2, m=3)]
        with self.assertRaises(LabError) as ctx:
            JobManager(2, poll_interval=0.01).run(units)
        self.assertEqual(ctx.exception.code, ErrorCode.DOMAIN)


if __name__ == "__main__":
    unittest.main()
