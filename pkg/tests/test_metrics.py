import csv
import statistics

import pytest

from hfcs.metrics import (
    SUMMARY_METRICS,
    ExportError,
    FailureRecord,
    IntervalRow,
    MetricsReport,
    NodeRow,
    aggregate,
    export_aggregate,
    export_report,
    finalize_summary,
    read_aggregate,
    read_report,
)
from hfcs.sim.config import Counts, ScenarioConfig
from hfcs.sim.runner import run


def report(**values):
    base = {"variant": "hfcs", "seed": 0, "duration": 10.0}
    base.update(values)
    return MetricsReport(finalize_summary(base))


def test_aggregate_textbook_values():
    st = aggregate([report(tasks_completed=v) for v in (1, 2, 3)])
    assert st["tasks_completed"].mean == 2.0 and st["tasks_completed"].sd == 1.0
    one = aggregate([report(tasks_completed=5)])
    assert one["tasks_completed"].sd == 0.0 and one["tasks_completed"].n == 1
    same = aggregate([report(tasks_completed=4)] * 3)
    assert same["tasks_completed"].sd == 0.0
    with pytest.raises(ValueError):
        aggregate([])


def test_detection_rate_and_complement():
    s = report(failures_triggered=4, failures_detected=3).summary
    assert s["detection_rate"] == 0.75 and s["undetected_rate"] == 0.25
    assert report().summary["detection_rate"] == 0.0


@pytest.fixture(scope="module")
def runs():
    cfg = ScenarioConfig(duration=200.0, counts=Counts(40, 30, 3))
    return [run(cfg, s) for s in range(3)]


def test_csv_round_trip(tmp_path, runs):
    rep = runs[0]
    rep.failures.append(FailureRecord(1.5, 9, "edge", 3, None))
    export_report(rep, tmp_path)
    back = read_report(tmp_path)
    assert back.summary == rep.summary
    assert back.nodes == rep.nodes
    assert back.failures == rep.failures
    assert back.intervals == rep.intervals


def test_reexport_is_byte_identical(tmp_path, runs):
    a, b = tmp_path / "a", tmp_path / "b"
    export_report(runs[1], a)
    export_report(runs[1], b)
    for name in ("nodes.csv", "summary.csv", "failures.csv", "intervals.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_zero_duration_export(tmp_path):
    rep = run(ScenarioConfig(duration=0.0, counts=Counts(0, 0, 0)), 0)
    export_report(rep, tmp_path)
    assert (tmp_path / "nodes.csv").read_text().splitlines()[0] == "id,layer,lon,lat,messages"
    rows = list(csv.DictReader((tmp_path / "summary.csv").open()))
    assert [r["metric"] for r in rows] == list(SUMMARY_METRICS)
    numeric = [r for r in rows if r["metric"] not in ("variant", "seed", "duration")]
    assert all(float(r["value"]) == 0.0 for r in numeric)


def test_aggregate_matches_recomputation_from_raw_csv(tmp_path, runs):
    for k, rep in enumerate(runs):
        export_report(rep, tmp_path / f"seed-{k}")
    path = export_aggregate(aggregate(runs), tmp_path / "aggregate.csv")
    agg = read_aggregate(path)
    assert len(agg) == len(SUMMARY_METRICS) - 2  # variant and seed are not aggregated
    for metric in ("tasks_completed", "metadata_messages", "mean_messages_per_node"):
        raw = []
        for k in range(len(runs)):
            rows = {r["metric"]: r["value"] for r in csv.DictReader((tmp_path / f"seed-{k}" / "summary.csv").open())}
            raw.append(float(rows[metric]))
        assert agg[metric].mean == pytest.approx(statistics.fmean(raw), rel=1e-12)
        assert agg[metric].sd == pytest.approx(statistics.stdev(raw), rel=1e-12)


def test_export_errors_carry_the_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ExportError, match="file"):
        export_report(MetricsReport(finalize_summary({})), blocker / "sub")


def test_rows_types_survive_parse(tmp_path):
    rep = MetricsReport(finalize_summary({"variant": "broadcast"}), [NodeRow(0, "cloud", 8.68, 50.11, 12)], [],
                        [IntervalRow(0, 5, 20, False), IntervalRow(1, 5, 20, True)])
    export_report(rep, tmp_path)
    back = read_report(tmp_path)
    assert back.intervals[1].pending is True and back.nodes[0].lon == 8.68
