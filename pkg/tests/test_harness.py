import json

import numpy as np
import pytest

from pointfilter import cli
from pointfilter.core import FilterConfig, MeasurementFrame
from pointfilter.harness import (CSV_FIELDS, FrameRecord, InputFileError, RunReport, emit,
                                 evaluate_files, ingest_measurements, ingest_truth, load_config,
                                 read_report, run_filter, run_sweep, run_synthetic, sweep_summary,
                                 truncate_scenario, write_measurements,
                                 write_truth)
from pointfilter.neural import load_model
from pointfilter.simulator import default_scenario, generate

# small network and short scenario keep end-to-end runs fast
FAST = FilterConfig(hidden_units=4, num_layers=1, epochs_init=3, epochs_finetune=1)


def short_spec(frames=8, **kw):
    return truncate_scenario(default_scenario(**kw), frames)


def test_ingest_groups_and_fills_gaps(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("time_step,x,y\n1,0,0\n1,1.5,2\n3,4,5\n")
    frames = ingest_measurements(p)
    assert [f.time_step for f in frames] == [1, 2, 3]
    assert [len(f) for f in frames] == [2, 0, 1]
    assert frames[0].points.tolist() == [[0.0, 0.0], [1.5, 2.0]]


def test_ingest_empty_file(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("")
    assert ingest_measurements(p) == []


def test_ingest_reports_line_number(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("time_step,x,y\n0,1,2\n0,abc,2\n")
    with pytest.raises(InputFileError, match="line 3"):
        ingest_measurements(p)
    p.write_text("t,x,y\n0,1,2\n")
    with pytest.raises(InputFileError, match="line 1"):
        ingest_measurements(p)
    p.write_text("time_step,x,y\n0,1\n")
    with pytest.raises(InputFileError, match="line 2"):
        ingest_measurements(p)


def test_truth_round_trip(tmp_path):
    truth, frames = generate(short_spec(frames=25))
    write_truth(truth, tmp_path / "t.csv")
    write_measurements(frames, tmp_path / "m.csv")
    back = ingest_truth(tmp_path / "t.csv")
    assert [len(g.labels) for g in back] == [len(g.labels) for g in truth]
    for a, b in zip(back, truth):
        assert a.positions.tobytes() == b.positions.tobytes()
    for a, b in zip(ingest_measurements(tmp_path / "m.csv"), frames):
        assert a.points.tobytes() == b.points.tobytes()


def test_duplicate_truth_label_rejected(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("time_step,track_label,x,y\n0,a,1,1\n0,a,2,2\n")
    with pytest.raises(InputFileError):
        ingest_truth(p)


def sample_report():
    recs = [FrameRecord(0, 2, 3, 50.0, 10.0, 40.0, 2, 0, 0, 0.0),
            FrameRecord(1, 2, 2, 1 / 3, 1 / 3, 0.0, 0, 1, 1, 0.5)]
    return RunReport(recs, {"ospa": 1.0, "loc": 0.5, "card": 0.5}, {"filter": {}}, 7)


def test_csv_header_and_round_trip(tmp_path):
    emit(sample_report(), tmp_path / "r.csv", "csv")
    text = (tmp_path / "r.csv").read_text()
    assert text.splitlines()[0] == "time_step,M,N,ospa,loc,card,births,deaths,decays,elapsed_ms"
    assert tuple(text.splitlines()[0].split(",")) == CSV_FIELDS
    records, _ = read_report(tmp_path / "r.csv", "csv")
    assert records == sample_report().records


def test_jsonl_line_count_and_round_trip(tmp_path):
    emit(sample_report(), tmp_path / "r.jsonl", "jsonl")
    lines = (tmp_path / "r.jsonl").read_text().splitlines()
    assert len(lines) == 2 + 1
    records, summary = read_report(tmp_path / "r.jsonl", "jsonl")
    assert records == sample_report().records and summary["seed"] == 7


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit(sample_report(), tmp_path / "r.x", "xml")


def test_frames_must_be_positive():
    with pytest.raises(ValueError):
        truncate_scenario(default_scenario(), 0)


def test_synthetic_report_shape_and_averages():
    spec = short_spec()
    rep = run_synthetic(FAST, spec, timing=False)
    assert len(rep.records) == spec.num_frames
    assert [r.time_step for r in rep.records] == list(range(spec.num_frames))
    assert rep.averages["ospa"] == pytest.approx(np.mean(rep.ospa_values()))
    assert rep.config["scenario"]["seed"] == spec.seed
    assert all(r.elapsed_ms == 0.0 for r in rep.records)


def test_synthetic_is_deterministic(tmp_path):
    spec = short_spec(seed=3)
    for name in ("a", "b"):
        emit(run_synthetic(FAST, spec, timing=False), tmp_path / f"{name}.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_sweep_counts_and_summary():
    spec = short_spec(frames=4)
    reps = run_sweep(FAST, spec, [10, 20, 30, 40, 50], timing=False)
    assert len(reps) == 5
    assert [r.config["scenario"]["lambda_c"] for r in reps] == [10, 20, 30, 40, 50]
    assert len({r.seed for r in reps}) == 5
    summary = sweep_summary(reps)
    assert sorted(summary["mean_ospa"]) == [10, 20, 30, 40, 50]
    assert -1.0 <= summary["spearman"] <= 1.0
    assert len(run_sweep(FAST, spec, [20], timing=False)) == 1
    assert len(run_sweep(FAST, spec, [20], repeats=2, timing=False)) == 2
    with pytest.raises(ValueError):
        run_sweep(FAST, spec, [])


def test_filter_without_truth_has_no_scores():
    _, frames = generate(short_spec(frames=4))
    rep = run_filter(frames, FAST, timing=False)
    assert rep.averages["ospa"] is None and all(r.ospa is None for r in rep.records)


def test_evaluate_files_identity(tmp_path):
    truth, _ = generate(short_spec(frames=5))
    write_truth(truth, tmp_path / "t.csv")
    write_measurements([MeasurementFrame(g.positions, g.time_step) for g in truth], tmp_path / "e.csv")
    rep = evaluate_files(tmp_path / "t.csv", tmp_path / "e.csv")
    assert rep.averages["ospa"] == 0.0 and len(rep.records) == 5


def test_load_config_sections(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"filter": {"g_max": 70.0}, "scenario": {"lambda_c": 5.0}}))
    cfg, spec = load_config(p)
    assert cfg.g_max == 70.0 and spec.lambda_c == 5.0 and len(spec.tracks) == 10
    p.write_text(json.dumps({"filters": {}}))
    with pytest.raises(ValueError):
        load_config(p)


def write_fast_config(tmp_path):
    p = tmp_path / "fast.json"
    p.write_text(json.dumps({"filter": {"hidden_units": 4, "num_layers": 1, "epochs_init": 3,
                                        "epochs_finetune": 1}}))
    return str(p)


def test_cli_synth_filter_eval(tmp_path, capsys):
    conf = write_fast_config(tmp_path)
    m, t, e, r = (str(tmp_path / n) for n in ("m.csv", "t.csv", "e.csv", "r.jsonl"))
    model = str(tmp_path / "model.txt")
    assert cli.main(["synth", "--config", conf, "--seed", "2", "--lambda-c", "5", "--frames", "6",
                     "--out", r, "--format", "jsonl", "--no-timing", "--measurements-out", m,
                     "--truth-out", t, "--estimates-out", e, "--save-model", model]) == 0
    assert len(open(r).read().splitlines()) == 7
    assert "ospa=" in capsys.readouterr().out
    load_model(model)
    assert cli.main(["filter", "--input", m, "--truth", t, "--config", conf, "--load-model", model,
                     "--out", str(tmp_path / "f.csv"), "--estimates", str(tmp_path / "fe.csv")]) == 0
    assert cli.main(["eval", "--truth", t, "--est", e]) == 0
    assert "ospa=" in capsys.readouterr().out


def test_cli_sweep(tmp_path, capsys):
    conf = write_fast_config(tmp_path)
    out = str(tmp_path / "s.csv")
    assert cli.main(["sweep", "--config", conf, "--frames", "3", "--lambdas", "10,50",
                     "--out", out, "--no-timing"]) == 0
    assert len(open(out).read().splitlines()) == 3
    assert "spearman=" in capsys.readouterr().out


def test_cli_reports_bad_input(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("time_step,x,y\n0,oops,1\n")
    assert cli.main(["filter", "--input", str(p)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert cli.main(["synth", "--frames", "0"]) == 2
