"""End-to-end tests for the stream-trust CLI."""

import json
import tempfile
import unittest
from pathlib import Path

import numpy as np
from typer.testing import CliRunner

from streamtrust import __version__
from streamtrust.cli import app
from streamtrust.models import StreamRecord
from streamtrust.output.report import read_report
from streamtrust.params import load_params
from streamtrust.streams import read_decisions, read_stream, write_stream


runner = CliRunner()


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmpdir.name)

    def tearDown(self):
        self.tmpdir.cleanup()

    def plan(self, name, segments, seed=1, model=None):
        path = self.dir / name
        data = {"seed": seed, "segments": segments}
        if model is not None:
            data["model"] = model
        path.write_text(json.dumps(data))
        return path

    def invoke(self, *args):
        return runner.invoke(app, [str(a) for a in args])

    def gen(self, plan, out):
        result = self.invoke("gen", plan, "--out", out, "--quiet")
        self.assertEqual(result.exit_code, 0, result.output)
        return out


class TestVersion(CliTestCase):

    def test_version(self):
        result = self.invoke("--version")
        self.assertEqual(result.exit_code, 0)
        self.assertIn(f"stream-trust version {__version__}", result.output)


class TestGen(CliTestCase):

    def test_writes_stream_and_manifest(self):
        plan = self.plan("plan.json", [{"kind": "id", "length": 120}, {"kind": "cid", "length": 80, "severity": 2}])
        out = self.gen(plan, self.dir / "s.stream")
        records = list(read_stream(out))
        self.assertEqual(len(records), 200)
        manifest = json.loads((self.dir / "s.stream.manifest.json").read_text())
        self.assertEqual(manifest["command"], "gen")
        self.assertEqual(manifest["seeds"], {"seed": 1})
        self.assertEqual(manifest["extra"]["records"], 200)

    def test_rerun_is_byte_identical(self):
        plan = self.plan("plan.json", [{"kind": "id", "length": 100}, {"kind": "ood", "length": 20}])
        a = self.gen(plan, self.dir / "a.stream")
        b = self.gen(plan, self.dir / "b.stream")
        self.assertEqual(a.read_bytes(), b.read_bytes())
        ma = json.loads((self.dir / "a.stream.manifest.json").read_text())
        mb = json.loads((self.dir / "b.stream.manifest.json").read_text())
        self.assertEqual(ma["extra"]["sha256"], mb["extra"]["sha256"])

    def test_seed_option_changes_stream(self):
        plan = self.plan("plan.json", [{"kind": "id", "length": 50}])
        a = self.gen(plan, self.dir / "a.stream")
        result = self.invoke("gen", plan, "--out", self.dir / "b.stream", "--seed", 99, "--quiet")
        self.assertEqual(result.exit_code, 0)
        self.assertNotEqual(a.read_bytes(), (self.dir / "b.stream").read_bytes())

    def test_invalid_severity(self):
        plan = self.plan("plan.json", [{"kind": "cid", "length": 50, "severity": 6}])
        result = self.invoke("gen", plan, "--out", self.dir / "s.stream", "--quiet")
        self.assertEqual(result.exit_code, 1)
        self.assertFalse((self.dir / "s.stream").exists())

    def test_missing_plan(self):
        result = self.invoke("gen", self.dir / "absent.json", "--out", self.dir / "s.stream", "--quiet")
        self.assertEqual(result.exit_code, 2)


class TestFitMonitorEval(CliTestCase):

    def test_full_pipeline(self):
        dev = self.gen(self.plan("dev.json", [{"kind": "dev", "length": 2000}], seed=5), self.dir / "dev.stream")
        test = self.gen(
            self.plan("test.json", [{"kind": "id", "length": 1200}, {"kind": "cid", "length": 800, "severity": 4},
                                    {"kind": "ood", "length": 100}], seed=6),
            self.dir / "test.stream",
        )

        params_path = self.dir / "params.json"
        result = self.invoke("fit", dev, "--out", params_path, "--quiet")
        self.assertEqual(result.exit_code, 0, result.output)
        params = load_params(params_path)
        self.assertTrue(all(np.isfinite(params.weights)))
        diagnostics = json.loads(params_path.read_text())["diagnostics"]
        self.assertTrue(np.isfinite(diagnostics["log_loss"]))
        self.assertEqual(diagnostics["examples"], 2000)

        again = self.dir / "params2.json"
        self.assertEqual(self.invoke("fit", dev, "--out", again, "--quiet").exit_code, 0)
        self.assertEqual(params_path.read_bytes(), again.read_bytes())

        decisions = self.dir / "test.decisions"
        result = self.invoke("monitor", test, "--params", params_path, "--out", decisions, "--quiet")
        self.assertEqual(result.exit_code, 0, result.output)
        steps = read_decisions(decisions)
        self.assertEqual(len(steps), 2100)
        self.assertTrue(all(not s.decision.abstained for s in steps[:48]))
        manifest = json.loads((self.dir / "test.decisions.manifest.json").read_text())
        self.assertGreater(manifest["extra"]["state_nbytes"], 0)

        report_path = self.dir / "test.report"
        result = self.invoke("eval", test, decisions, "--out", report_path, "--quiet")
        self.assertEqual(result.exit_code, 0, result.output)
        report = read_report(report_path)
        for name in ("accuracy", "f1", "brier", "nll", "ece", "misclassification_auroc", "ood_auroc",
                     "drop_auprc", "drop_auprc_maxprob", "exceedance_deviation", "coverage"):
            self.assertIn(name, report)
            self.assertFalse(report[name].startswith("skipped"), name)
        self.assertTrue((self.dir / "test.report.curves.csv").exists())
        self.assertTrue((self.dir / "test.report.manifest.json").exists())

    def test_quantized_and_variant_options(self):
        stream = self.gen(self.plan("p.json", [{"kind": "id", "length": 300}]), self.dir / "s.stream")
        for args in (["--quantized"], ["--variant", "maxprob"], ["--variant", "no-conformal"]):
            out = self.dir / f"d{len(args)}{args[-1]}.tsv"
            result = self.invoke("monitor", stream, "--out", out, "--quiet", *args)
            self.assertEqual(result.exit_code, 0, result.output)
            self.assertEqual(len(read_decisions(out)), 300)
        result = self.invoke("monitor", stream, "--out", self.dir / "x.tsv", "--variant", "bogus", "--quiet")
        self.assertEqual(result.exit_code, 1)

    def test_fit_rejects_degenerate_and_unlabeled_streams(self):
        perfect = self.gen(
            self.plan("perfect.json", [{"kind": "id", "length": 200}], model={"id_accuracy": 1.0}),
            self.dir / "perfect.stream",
        )
        self.assertEqual(self.invoke("fit", perfect, "--out", self.dir / "p.json", "--quiet").exit_code, 1)

        unlabeled = self.dir / "unlabeled.stream"
        write_stream(unlabeled, [StreamRecord(t=t, posterior=np.array([0.7, 0.3])) for t in range(20)], 2)
        self.assertEqual(self.invoke("fit", unlabeled, "--out", self.dir / "u.json", "--quiet").exit_code, 1)

    def test_eval_without_drop_events(self):
        low = self.gen(self.plan("low.json", [{"kind": "id", "length": 300}], model={"id_accuracy": 0.7}),
                       self.dir / "low.stream")
        high = self.gen(self.plan("high.json", [{"kind": "id", "length": 300}], model={"id_accuracy": 1.0}),
                        self.dir / "high.stream")
        decisions = self.dir / "high.decisions"
        self.assertEqual(self.invoke("monitor", high, "--out", decisions, "--quiet").exit_code, 0)
        report_path = self.dir / "high.report"
        result = self.invoke("eval", high, decisions, "--id-stream", low, "--out", report_path, "--quiet")
        self.assertEqual(result.exit_code, 0, result.output)
        report = read_report(report_path)
        self.assertEqual(report["drop_auprc"], "skipped: no drop events")
        self.assertEqual(report["misclassification_auroc"], "skipped: single class")

    def test_eval_rejects_misaligned_decisions(self):
        stream = self.gen(self.plan("p.json", [{"kind": "id", "length": 200}]), self.dir / "s.stream")
        decisions = self.dir / "d.tsv"
        self.assertEqual(self.invoke("monitor", stream, "--out", decisions, "--quiet").exit_code, 0)
        lines = decisions.read_text().splitlines()
        decisions.write_text("\n".join(lines[:-1]) + "\n")
        result = self.invoke("eval", stream, decisions, "--out", self.dir / "r.txt", "--quiet")
        self.assertEqual(result.exit_code, 1)

    def test_missing_stream(self):
        result = self.invoke("monitor", self.dir / "absent.stream", "--out", self.dir / "d.tsv", "--quiet")
        self.assertEqual(result.exit_code, 2)


class TestSweepAndInitConfig(CliTestCase):

    def test_small_sweep(self):
        out = self.dir / "sweep.report"
        result = self.invoke("sweep", "--out", out, "--seeds", 1, "--id-length", 300, "--cid-length", 300, "--quiet")
        self.assertEqual(result.exit_code, 0, result.output)
        report = read_report(out)
        self.assertIn("severity_5_monitor_auprc", report)
        self.assertIn("severity_5_frozen_auprc", report)
        self.assertIn("severity_5_no_conformal_detected", report)
        self.assertIn("mean_no_temporal_auprc", report)
        self.assertIn("mean_gain", report)
        self.assertTrue((self.dir / "sweep.report.manifest.json").exists())

    def test_sweep_without_ablations(self):
        out = self.dir / "plain.report"
        result = self.invoke("sweep", "--out", out, "--seeds", 1, "--id-length", 300, "--cid-length", 300,
                             "--dev-length", 600, "--no-ablations", "--quiet")
        self.assertEqual(result.exit_code, 0, result.output)
        report = read_report(out)
        self.assertIn("severity_1_maxprob_auprc", report)
        self.assertFalse(any("frozen" in name for name in report))

    def test_sweep_rejects_zero_seeds(self):
        self.assertEqual(self.invoke("sweep", "--out", self.dir / "s.report", "--seeds", 0, "--quiet").exit_code, 1)

    def test_init_config(self):
        path = self.dir / "config.yaml"
        result = self.invoke("init-config", path)
        self.assertEqual(result.exit_code, 0)
        self.assertIn("risk_level: 0.1", path.read_text())


if __name__ == "__main__":
    unittest.main()
