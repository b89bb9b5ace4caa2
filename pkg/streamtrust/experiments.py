"""Evaluation runs over monitor output and the desk-scale severity sweep."""

import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from streamtrust.config import Config
from streamtrust.errors import AlignmentError, NoDropEventsError
from streamtrust.fitting import fit_combiner
from streamtrust.metrics import (
    IDBand,
    auprc,
    auroc,
    average_precision,
    brier,
    budget_adherence,
    correctness,
    detection_delays,
    drop_sweep,
    ece,
    event_series,
    exceedance_deviation,
    id_band,
    macro_f1,
    nll,
    pooled_drop_sweep,
    pr_curve,
    precision_recall_points,
    quantile_stability,
    roc_points,
    selective_risk,
)
from streamtrust.models import CombinerParams, MonitorStep, SegmentKind, SegmentSpec, StreamRecord
from streamtrust.monitor import Monitor, MonitorVariant, collect_signals, rescore
from streamtrust.output.report import MetricsReport
from streamtrust.streams.generator import SEVERITIES, GeneratorModel, dev_mixture, generate


def check_alignment(records: Sequence[StreamRecord], steps: Sequence[MonitorStep]) -> None:
    """
    Raises:
        AlignmentError: If the decisions do not cover the stream step for step
    """
    if len(records) != len(steps):
        raise AlignmentError(f"stream has {len(records)} records but decisions file has {len(steps)}")
    for i, (record, step) in enumerate(zip(records, steps)):
        if record.t != step.t:
            raise AlignmentError(f"record {i}: stream step {record.t} != decision step {step.t}")


def _failure_metrics(report: MetricsReport, name: str, scores: np.ndarray, positives: np.ndarray, reason: str) -> None:
    if positives.size == 0 or positives.all() or not positives.any():
        report.skip(f"{name}_auroc", reason)
        report.skip(f"{name}_auprc", reason)
        return
    report.add(f"{name}_auroc", auroc(scores, positives))
    report.add(f"{name}_auprc", average_precision(scores, positives))
    report.add_curve(f"{name}_roc", roc_points(scores, positives))
    report.add_curve(f"{name}_pr", precision_recall_points(scores, positives))


def evaluate_run(
    records: Sequence[StreamRecord],
    steps: Sequence[MonitorStep],
    config: Config,
    id_records: Sequence[StreamRecord] | None = None,
) -> MetricsReport:
    """
    Compute the full metrics report for one monitored stream.

    The ID band comes from ``id_records`` when given, otherwise from the
    first ``id_band_steps`` steps of the stream itself.

    Raises:
        AlignmentError: If records and decisions are not aligned
    """
    check_alignment(records, steps)
    report = MetricsReport()
    m = config.eval.window_m
    correct = correctness(records)
    scores = np.array([s.score for s in steps])
    quantiles = np.array([s.quantile for s in steps])
    warm = np.array([s.warm for s in steps], dtype=bool)
    abstained = np.array([s.decision.abstained for s in steps], dtype=bool)

    report.add("steps", len(records))
    report.add("warmup_steps", int(warm.sum()))
    report.add("abstain_rate", float(abstained.mean()) if abstained.size else 0.0)

    # proper scores and calibration on labeled in-distribution steps
    labeled = [i for i, ok in enumerate(correct) if ok is not None]
    if labeled:
        posteriors = np.stack([records[i].posterior for i in labeled])
        labels = [records[i].label for i in labeled]
        ok = np.array([correct[i] for i in labeled], dtype=bool)
        report.add("accuracy", float(ok.mean()))
        report.add("f1", macro_f1(labels, [records[i].predicted_label for i in labeled]))
        report.add("brier", brier(posteriors, labels))
        report.add("nll", nll(posteriors, labels))
        report.add("ece", ece(posteriors.max(axis=1), ok, config.eval.ece_bins))
        _failure_metrics(report, "misclassification", scores[labeled], ~ok, "single class")
    else:
        for name in ("accuracy", "f1", "brier", "nll", "ece",
                     "misclassification_auroc", "misclassification_auprc"):
            report.skip(name, "unlabeled")

    ood = np.array([r.is_ood for r in records], dtype=bool)
    if ood.any():
        keep = [i for i in range(len(records)) if ood[i] or correct[i] is True]
        _failure_metrics(report, "ood", scores[keep], ood[keep], "no correct in-distribution steps")
    else:
        report.skip("ood_auroc", "no OOD steps")
        report.skip("ood_auprc", "no OOD steps")

    _drop_metrics(report, records, steps, correct, config, id_records, abstained)

    post = ~warm
    if post.any():
        post_steps = [s.decision for s, w in zip(steps, warm) if not w]
        report.add("exceedance_deviation", exceedance_deviation(scores[post], quantiles[post], config.calib.risk_level))
        longrun, worst = budget_adherence(post_steps, config.calib.budget, config.calib.burst_window)
        report.add("budget_longrun_deviation", longrun)
        report.add("budget_worst_window", worst)
        report.add("quantile_std", quantile_stability(quantiles[post]))
        coverage, risk = selective_risk(post_steps, [correct[i] for i in np.flatnonzero(post)])
        report.add("coverage", coverage)
        report.add("selective_risk", risk)
    else:
        for name in ("exceedance_deviation", "budget_longrun_deviation", "budget_worst_window",
                     "quantile_std", "coverage", "selective_risk"):
            report.skip(name, "stream ended during warm-up")
    return report


def _drop_metrics(
    report: MetricsReport,
    records: Sequence[StreamRecord],
    steps: Sequence[MonitorStep],
    correct: list[bool | None],
    config: Config,
    id_records: Sequence[StreamRecord] | None,
    abstained: np.ndarray,
) -> None:
    m = config.eval.window_m
    names = ("drop_auprc", "drop_auprc_maxprob", "drop_events", "drop_detection_delay_median", "drop_events_missed")
    band_source = correctness(id_records) if id_records is not None else correct[: config.eval.id_band_steps]
    try:
        band = id_band(band_source, m)
    except ValueError as e:
        for name in names:
            report.skip(name, f"no ID band ({e})")
        return
    report.add("id_band_mu", band.mu_id)
    report.add("id_band_sigma", band.sigma_id)

    confidence = [1.0 - s.score for s in steps]
    csw, events, scored = event_series(correct, confidence, band, m)
    try:
        sweep = drop_sweep(csw, events)
    except NoDropEventsError:
        for name in names:
            report.skip(name, "no drop events")
        return
    report.add("drop_auprc", auprc(sweep))
    report.add_curve("drop_pr", pr_curve(sweep))
    baseline_csw, baseline_events, _ = event_series(correct, [r.confidence for r in records], band, m)
    report.add("drop_auprc_maxprob", auprc(drop_sweep(baseline_csw, baseline_events)))
    report.add("drop_events", int(events.sum()))
    median, missed, _ = detection_delays(list(events), list(abstained[scored]))
    if median is None:
        report.skip("drop_detection_delay_median", "no event detected")
    else:
        report.add("drop_detection_delay_median", median)
    report.add("drop_events_missed", missed)


def monitor_stream(
    records: Sequence[StreamRecord],
    config: Config,
    params: CombinerParams,
    variant: MonitorVariant = MonitorVariant.FULL,
    quantized: bool = False,
) -> list[MonitorStep]:
    first = records[0]
    feature_dim = first.feature.size if first.feature is not None else 0
    monitor = Monitor(config, params, first.num_classes, feature_dim, quantized=quantized, variant=variant)
    return list(monitor.run(records))


SWEEP_VARIANTS: tuple[str, ...] = ("no_temporal", "no_conformal", "frozen")


@dataclass(frozen=True)
class ReplicaSeries:
    """Scored-step CSW, drop events and abstentions of one method on one replica stream."""

    csw: np.ndarray
    events: np.ndarray
    alarms: np.ndarray | None = None


def _seed_base(seed: int) -> int:
    return 10_000 * (seed + 1)


def fit_seed_params(seed: int, model: GeneratorModel, config: Config, dev_length: int) -> CombinerParams:
    """Fit the combiner on the development mixture drawn for ``seed``."""
    records = generate(dev_mixture(dev_length, _seed_base(seed) + 4), model)
    return fit_combiner(collect_signals(records, config.signal), config.fit)


def _series(
    correct: list[bool | None],
    steps: list[MonitorStep],
    band: IDBand,
    m: int,
) -> ReplicaSeries:
    csw, events, scored = event_series(correct, [1.0 - s.score for s in steps], band, m)
    alarms = np.array([s.decision.abstained for s in steps], dtype=bool)[scored]
    return ReplicaSeries(csw, events, alarms)


def _seed_replicas(
    seed: int,
    severities: Sequence[int],
    model: GeneratorModel,
    config: Config,
    params: CombinerParams | None,
    variants: Sequence[str],
    id_length: int,
    cid_length: int,
    dev_length: int,
) -> dict[int, dict[str, ReplicaSeries]]:
    m = config.eval.window_m
    base = _seed_base(seed)
    fitted = params if params is not None else fit_seed_params(seed, model, config, dev_length)
    band_records = list(generate([SegmentSpec(SegmentKind.ID, config.eval.id_band_steps, base + 1)], model))
    band = id_band(correctness(band_records), m)

    results: dict[int, dict[str, ReplicaSeries]] = {}
    for severity in severities:
        # same ID and CID seeds at every severity so levels differ only in corruption strength
        records = list(generate([
            SegmentSpec(SegmentKind.ID, id_length, base + 2),
            SegmentSpec(SegmentKind.CID, cid_length, base + 3, severity=severity),
        ], model))
        correct = correctness(records)
        steps = monitor_stream(records, config, fitted)
        series = {"monitor": _series(correct, steps, band, m)}
        for name in variants:
            if name == "frozen":
                rescored = rescore(records, steps, config, CombinerParams.default())
            else:
                rescored = rescore(records, steps, config, fitted, MonitorVariant.parse(name))
            series[name] = _series(correct, rescored, band, m)
        csw, events, _ = event_series(correct, [r.confidence for r in records], band, m)
        series["maxprob"] = ReplicaSeries(csw, events)
        results[severity] = series
    return results


def _pooled_auprc(replicas: list[ReplicaSeries]) -> float:
    try:
        return auprc(pooled_drop_sweep((r.csw, r.events) for r in replicas))
    except NoDropEventsError:
        return float("nan")


def _detected_share(replicas: list[ReplicaSeries]) -> float:
    missed = total = 0
    for r in replicas:
        _, replica_missed, replica_total = detection_delays(list(r.events), list(r.alarms))
        missed += replica_missed
        total += replica_total
    return 1.0 - missed / total if total else float("nan")


def severity_sweep(
    seeds: Sequence[int],
    severities: Sequence[int] = SEVERITIES,
    model: GeneratorModel | None = None,
    config: Config | None = None,
    params: CombinerParams | None = None,
    variants: Sequence[str] = (),
    id_length: int = 1000,
    cid_length: int = 1000,
    dev_length: int = 2000,
    parallel: bool = False,
    on_replica: Callable[[], None] | None = None,
) -> list[dict[str, float]]:
    """
    Drop-detection AUPRC per CID severity for the monitor, its ablations and
    the max-probability baseline.

    Each seed fits its own combiner on a development mixture unless ``params``
    is given, then contributes one ID+CID stream per severity scored against a
    band from a separate ID stream. (CSW, event) pairs are pooled over seeds
    before the sweep. ``variants`` picks ablations from ``SWEEP_VARIANTS``;
    ``frozen`` keeps the unfitted default weights. With ``parallel`` the seeds
    run in worker processes. ``on_replica`` fires once per finished seed.

    Returns:
        One row per severity: {"severity", "monitor", "maxprob", <variant>...}
        with pooled AUPRC, plus "<method>_detected", the share of drop events
        with at least one abstention, for the monitor and each variant

    Raises:
        ValueError: If a variant is not one of ``SWEEP_VARIANTS``
    """
    unknown = [v for v in variants if v not in SWEEP_VARIANTS]
    if unknown:
        raise ValueError(f"Unknown sweep variant(s) {', '.join(unknown)}. Must be among: {', '.join(SWEEP_VARIANTS)}")
    variants = tuple(dict.fromkeys(variants))
    model = model or GeneratorModel()
    config = config or Config()
    args = (tuple(severities), model, config, params, variants, id_length, cid_length, dev_length)
    results: dict[int, dict[int, dict[str, ReplicaSeries]]] = {}

    if parallel and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(os.cpu_count() or 1, len(seeds))) as executor:
            futures = {executor.submit(_seed_replicas, seed, *args): seed for seed in seeds}
            for future in as_completed(futures):
                results[futures[future]] = future.result()
                if on_replica:
                    on_replica()
    else:
        for seed in seeds:
            results[seed] = _seed_replicas(seed, *args)
            if on_replica:
                on_replica()

    rows: list[dict[str, float]] = []
    for severity in severities:
        row: dict[str, float] = {"severity": float(severity)}
        for key in ("monitor", "maxprob", *variants):
            row[key] = _pooled_auprc([results[seed][severity][key] for seed in seeds])
        for key in ("monitor", *variants):
            row[f"{key}_detected"] = _detected_share([results[seed][severity][key] for seed in seeds])
        rows.append(row)
    return rows


def sweep_report(rows: list[dict[str, float]]) -> MetricsReport:
    report = MetricsReport()
    methods = [k for k in rows[0] if k != "severity" and not k.endswith("_detected")] if rows else []
    for row in rows:
        severity = int(row["severity"])
        for key in methods:
            report.add(f"severity_{severity}_{key}_auprc", row[key])
            if f"{key}_detected" in row:
                report.add(f"severity_{severity}_{key}_detected", row[f"{key}_detected"])
    for key in methods:
        if key not in ("monitor", "maxprob"):
            report.add(f"mean_{key}_auprc", float(np.nanmean([row[key] for row in rows])))
    gains = [row["monitor"] - row["maxprob"] for row in rows]
    report.add("mean_gain", float(np.nanmean(gains)) if gains else float("nan"))
    return report


__all__ = [
    "SWEEP_VARIANTS",
    "IDBand",
    "ReplicaSeries",
    "check_alignment",
    "evaluate_run",
    "fit_seed_params",
    "monitor_stream",
    "severity_sweep",
    "sweep_report",
]
