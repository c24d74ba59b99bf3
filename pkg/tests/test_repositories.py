import math
import tempfile
import unittest
from pathlib import Path

from aseplab.database import close_db, init_db
from aseplab.models import CheckReport, CheckStatus, ConvergenceRow, RunStatus
from aseplab.repositories import report_repository, run_repository
from aseplab.services import ledger


def _reports():
    return [
        CheckReport(name="theta", point={"A": 3.0}, residual=0.0, threshold=1e-10, status=CheckStatus.PASS),
        CheckReport(name="eta_limit", residual=math.nan, threshold=1e-8, status=CheckStatus.SKIPPED, reason="LD"),
        CheckReport(name="budget", residual=math.inf, threshold=0.0, status=CheckStatus.FAIL, reason="PHASE: x"),
    ]


class RepositoryTests(unittest.IsolatedAsyncioTestCase):
    async def asyncSetUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        await init_db(str(Path(self._tmp.name) / "ledger.db"))

    async def asyncTearDown(self):
        await close_db()
        self._tmp.cleanup()

    async def test_run_lifecycle(self):
        run = await run_repository.create_run("verify", {"suite": ["theta"]})
        self.assertEqual(run.status, RunStatus.RUNNING)
        await run_repository.finish_run(run.id, RunStatus.COMPLETED)
        stored = await run_repository.get_run(run.id)
        self.assertEqual(stored.status, RunStatus.COMPLETED)
        self.assertEqual(stored.config, {"suite": ["theta"]})
        self.assertIsNotNone(stored.completed_at)

    async def test_list_runs_by_command(self):
        await run_repository.create_run("verify", {})
        await run_repository.create_run("scan", {})
        self.assertEqual(len(await run_repository.list_runs()), 2)
        self.assertEqual([run.command for run in await run_repository.list_runs(command="scan")], ["scan"])

    async def test_interrupted_runs(self):
        run = await run_repository.create_run("mc", {})
        self.assertEqual(await run_repository.mark_interrupted_runs_failed(), 1)
        stored = await run_repository.get_run(run.id)
        self.assertEqual((stored.status, stored.error), (RunStatus.FAILED, "Interrupted"))

    async def test_reports_keep_non_finite_residuals(self):
        run = await run_repository.create_run("verify", {})
        self.assertEqual(await report_repository.add_reports(run.id, _reports()), 3)
        reports = await report_repository.get_reports(run.id)
        self.assertEqual([report.name for report in reports], ["budget", "eta_limit", "theta"])
        self.assertEqual(reports[0].residual, math.inf)
        self.assertTrue(math.isnan(reports[1].residual))
        self.assertEqual(reports[2].point, {"A": 3.0})
        failed = await report_repository.get_reports(run.id, CheckStatus.FAIL)
        self.assertEqual([report.name for report in failed], ["budget"])

    async def test_scan_rows_and_delete(self):
        run = await run_repository.create_run("scan", {})
        rows = [ConvergenceRow(n=n, m=1, tv=0.5 ** n, theta_pow=0.75 ** n) for n in (8, 4)]
        await report_repository.add_scan_rows(run.id, rows)
        self.assertEqual([row.n for row in await report_repository.get_scan_rows(run.id)], [4, 8])
        self.assertTrue(await run_repository.delete_run(run.id))
        self.assertIsNone(await run_repository.get_run(run.id))
        self.assertEqual(await report_repository.get_scan_rows(run.id), [])
        self.assertFalse(await run_repository.delete_run(run.id))


class LedgerTests(unittest.TestCase):
    def test_store_and_history(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = str(Path(tmp) / "ledger.db")
            run = ledger.store(path, "verify", {"seed": 1}, reports=_reports())
            self.assertEqual(run.status, RunStatus.COMPLETED)
            failed = ledger.store(path, "scan", {}, error="PHASE: no limit")
            self.assertEqual(failed.status, RunStatus.FAILED)

            recent = ledger.history(path)
            self.assertEqual({item.id for item in recent["runs"]}, {run.id, failed.id})
            detail = ledger.history(path, run.id)
            self.assertEqual(len(detail["reports"]), 3)
            self.assertEqual(detail["rows"], [])
            self.assertIsNone(ledger.history(path, "missing")["run"])


if __name__ == "__main__":
    unittest.main()
