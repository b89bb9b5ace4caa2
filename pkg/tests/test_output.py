"""Tests for metrics reports, run manifests and rendering."""

import json
import tempfile
import unittest
from pathlib import Path

from streamtrust import __version__
from streamtrust.output import (
    MetricsReport,
    build_manifest,
    file_digest,
    read_report,
    render_fit_summary,
    render_report,
    render_sweep,
    write_manifest,
)


class TestMetricsReport(unittest.TestCase):

    def test_render_values_and_skips(self):
        report = MetricsReport()
        report.add("steps", 10)
        report.add("auroc", 0.8125)
        report.add("nan_metric", float("nan"))
        report.skip("drop_auprc", "no drop events")
        self.assertEqual(
            report.render(),
            "steps\t10\nauroc\t0.8125\nnan_metric\tnan\ndrop_auprc\tskipped: no drop events\n",
        )

    def test_write_with_curves(self):
        report = MetricsReport()
        report.add("auroc", 0.75)
        report.add_curve("roc", [(float("inf"), 0.0, 0.0), (0.5, 0.25, 1.0)])
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "out" / "r.txt"
            written = report.write(path)
            self.assertEqual([p.name for p in written], ["r.txt", "r.txt.curves.csv"])
            self.assertEqual(read_report(path), {"auroc": "0.75"})
            lines = written[1].read_text().splitlines()
            self.assertEqual(lines[0], "curve,threshold,x,y")
            self.assertEqual(lines[2], "roc,0.5,0.25,1")

    def test_write_without_curves(self):
        report = MetricsReport()
        report.add("x", 1)
        with tempfile.TemporaryDirectory() as tmpdir:
            written = report.write(Path(tmpdir) / "r.txt")
            self.assertEqual(len(written), 1)


class TestManifest(unittest.TestCase):

    def test_written_beside_output(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            out = Path(tmpdir) / "s.stream"
            out.write_text("data\n")
            manifest = build_manifest(
                "gen",
                config={"W": 16},
                inputs={"plan": Path("plan.json"), "config": None},
                outputs={"stream": out},
                seeds={"seed": 3},
            )
            path = write_manifest(out, manifest)
            self.assertEqual(path.name, "s.stream.manifest.json")
            data = json.loads(path.read_text())
            self.assertEqual(data["tool_version"], __version__)
            self.assertEqual(data["inputs"], {"plan": "plan.json"})
            self.assertEqual(data["seeds"], {"seed": 3})

    def test_digest(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "f"
            path.write_bytes(b"abc")
            self.assertEqual(
                file_digest(path),
                "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad",
            )


class TestRender(unittest.TestCase):

    def test_report_table(self):
        report = MetricsReport()
        report.add("brier", 0.125)
        report.skip("ood_auroc", "no OOD steps")
        text = render_report(report, color=False)
        self.assertIn("brier", text)
        self.assertIn("skipped: no OOD steps", text)

    def test_sweep_table(self):
        rows = [{"severity": 1.0, "monitor": 0.5, "maxprob": 0.375}]
        text = render_sweep(rows, color=False)
        self.assertIn("0.500", text)
        self.assertIn("+0.125", text)

    def test_sweep_table_with_ablations(self):
        rows = [{"severity": 2.0, "monitor": 0.5, "maxprob": 0.25, "no_temporal": 0.375, "frozen": 0.4375,
                 "monitor_detected": 0.9, "frozen_detected": 0.8}]
        text = render_sweep(rows, color=False)
        self.assertIn("No-temporal", text)
        self.assertIn("Frozen", text)
        self.assertIn("0.375", text)
        self.assertIn("0.438", text)
        self.assertNotIn("detected", text)

    def test_fit_summary(self):
        text = render_fit_summary((1.0, -2.0, 0.5, 3.0), -1.5, 0.42, 0.8, 100, color=False)
        self.assertIn("w[divergence]:", text)
        self.assertIn("-1.500000", text)


if __name__ == "__main__":
    unittest.main()
