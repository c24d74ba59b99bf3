import json
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from aseplab.models import BinaryMeasure, CheckReport, CheckStatus
from aseplab.services import export


def _report(name="theta", residual=1e-12, status=CheckStatus.PASS, runtime=0.25):
    return CheckReport(
        name=name, point={"A": 3.0, "q": 0.5}, residual=residual, threshold=1e-10, status=status, runtime=runtime
    )


class FormatTests(unittest.TestCase):
    def test_format_float(self):
        self.assertIsNone(export.format_float(math.inf))
        self.assertIsNone(export.format_float(math.nan))
        self.assertEqual(export.format_float(1 / 3, 4), 0.3333)

    def test_clean(self):
        document = export.clean({"a": np.float64(0.1), "b": np.arange(2), "c": (CheckStatus.PASS, np.bool_(True))})
        self.assertEqual(document, {"a": 0.1, "b": [0, 1], "c": ["PASS", True]})

    def test_json_is_deterministic(self):
        document = {"x": 1 / 7, "y": [math.inf, 2.0]}
        self.assertEqual(export.to_json(document), export.to_json(dict(document)))
        self.assertEqual(json.loads(export.to_json(document, digits=3)), {"x": 0.143, "y": [None, 2.0]})


class MeasureExportTests(unittest.TestCase):
    measure = BinaryMeasure(m=2, weights=[0.1, 0.2, 0.3, 0.4])

    def test_document_keys_are_words(self):
        document = export.measure_document(self.measure, n=4)
        self.assertEqual(document["n"], 4)
        self.assertEqual(document["weights"], {"00": 0.1, "10": 0.2, "01": 0.3, "11": 0.4})

    def test_csv(self):
        self.assertEqual(export.measure_csv(self.measure), "word,weight\n00,0.1\n10,0.2\n01,0.3\n11,0.4\n")


class ReportExportTests(unittest.TestCase):
    def test_runtime_only_with_timings(self):
        self.assertNotIn("runtime", export.report_document(_report()))
        self.assertEqual(export.report_document(_report(), timings=True)["runtime"], 0.25)

    def test_jsonl_writes_null_for_skipped(self):
        skipped = _report(name="eta_limit", residual=math.nan, status=CheckStatus.SKIPPED)
        lines = export.reports_jsonl([_report(), skipped]).splitlines()
        self.assertEqual(len(lines), 2)
        self.assertIsNone(json.loads(lines[1])["residual"])

    def test_csv_header(self):
        text = export.reports_csv([_report()], timings=True)
        self.assertTrue(text.startswith("name,status,residual,threshold,point,reason,runtime\n"))

    def test_table_summary(self):
        failed = _report(name="budget", residual=1.0, status=CheckStatus.FAIL)
        table = export.report_table([_report(), failed])
        self.assertTrue(table.endswith("2 reports: 1 passed, 1 failed, 0 skipped\n"))


class OutputTests(unittest.TestCase):
    def test_write_output_and_sidecar_path(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "out" / "scan.csv"
            written = export.write_output("n,tv\n", str(path))
            self.assertEqual(written.read_text(), "n,tv\n")
            self.assertEqual(export.sidecar_path(str(path)).name, "scan.meta.json")


if __name__ == "__main__":
    unittest.main()
