import math

import pytest

from blechannel import cli
from blechannel.harness import (
    EST_LABELS,
    AccuracyCurve,
    read_trace,
    write_samples_csv,
)
from blechannel.ranging import CalibrationModel, RangingSample
from blechannel.core import Channel


def run(argv):
    return cli.main(argv)


def test_simulate_then_classify_pipeline(tmp_path, capsys):
    trace_path = tmp_path / "trace.csv"
    out_path = tmp_path / "labeled.csv"
    assert run(["simulate", "--seed", "5", "--duration", "20", "--out", str(trace_path)]) == 0
    assert f"wrote {trace_path}" in capsys.readouterr().out

    assert run(["classify", "--in", str(trace_path), "--out", str(out_path)]) == 0
    out = capsys.readouterr().out
    assert "accuracy against ground truth: 1.0000" in out

    labeled = read_trace(str(out_path))
    assert labeled.est_labels is not None
    assert len(labeled.est_labels) == len(labeled.packets)
    assert set(labeled.est_labels) <= EST_LABELS


def test_simulate_honours_behavior_and_no_rssi(tmp_path):
    trace_path = tmp_path / "trace.csv"
    args = ["simulate", "--seed", "1", "--duration", "15", "--behavior", "rapid-toggle"]
    assert run(args + ["--no-rssi", "--out", str(trace_path)]) == 0
    trace = read_trace(str(trace_path))
    assert trace.behavior_tag == "rapid-toggle"
    assert all(p.rssi_dbm is None for p in trace.packets)


def test_accuracy_writes_a_readable_curve(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("duration_s = 30\nbucket_s = 10\nn_advertisers = 2\n", encoding="utf-8")
    out = tmp_path / "curve.csv"
    assert run(["accuracy", "--config", str(cfg), "--seed", "2", "--out", str(out)]) == 0
    assert "all buckets at 100%" in capsys.readouterr().out
    curve = AccuracyCurve.read(str(out))
    assert [b.start_s for b in curve.buckets] == [0.0, 10.0, 20.0]
    assert curve.totals.n_correct == curve.totals.n_classified > 0


def test_matrix_csv_has_one_row_per_behavior(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("duration_s = 20\nn_advertisers = 1\n", encoding="utf-8")
    out = tmp_path / "matrix.csv"
    assert run(["matrix", "--config", str(cfg), "--seed", "3", "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "compliant" in stdout and "continue-channel" in stdout
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("behavior,")
    assert len(lines) == 1 + 6


def test_ranging_emits_a_loadable_model(tmp_path, capsys):
    model_path = tmp_path / "model.txt"
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("channel_offsets_db = 0,6,12\nseed = 21\n", encoding="utf-8")
    assert run(["ranging", "--config", str(cfg), "--model-out", str(model_path)]) == 0
    out = capsys.readouterr().out
    assert "channel-aware RMSE" in out and "ratio" in out
    model = CalibrationModel.from_text(model_path.read_text(encoding="utf-8"))
    assert model.channel_aware
    assert model.n_samples == 600


def test_calibrate_recovers_known_model(tmp_path, capsys):
    truth = CalibrationModel(
        intercept_dbm=-40.0, path_loss_exponent=2.5, channel_offset_db=(0.0, 4.0, 8.0)
    )
    samples = [
        RangingSample(ch, d, truth.predict_rssi(ch, d))
        for ch in (Channel.of(37), Channel.of(38), Channel.of(39))
        for d in (1.0, 2.0, 4.0, 8.0)
    ]
    csv_path = tmp_path / "samples.csv"
    write_samples_csv(str(csv_path), samples)
    model_path = tmp_path / "fit.txt"
    assert run(["calibrate", "--in", str(csv_path), "--out", str(model_path)]) == 0
    assert "offsets 38/39 4.000/8.000" in capsys.readouterr().out
    fit = CalibrationModel.from_text(model_path.read_text(encoding="utf-8"))
    assert fit.intercept_dbm == pytest.approx(-40.0, abs=1e-9)
    assert fit.path_loss_exponent == pytest.approx(2.5, abs=1e-9)

    assert run(["calibrate", "--in", str(csv_path), "--agnostic", "--exponent", "2.5"]) == 0
    assert "exponent 2.5000" in capsys.readouterr().out


def test_env_seed_is_used_when_nothing_else_pins_one(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BLECHANNEL_SEED", "7")
    trace_path = tmp_path / "trace.csv"
    assert run(["simulate", "--duration", "10", "--out", str(trace_path)]) == 0
    assert read_trace(str(trace_path)).seed == 7
    # an explicit --seed always wins
    assert run(["simulate", "--duration", "10", "--seed", "9", "--out", str(trace_path)]) == 0
    assert read_trace(str(trace_path)).seed == 9
    # so does a seed pinned in the config file
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("seed = 11\nduration_s = 10\n", encoding="utf-8")
    assert run(["simulate", "--config", str(cfg), "--out", str(trace_path)]) == 0
    assert read_trace(str(trace_path)).seed == 11
    capsys.readouterr()


def test_bad_env_seed_is_a_usage_error(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BLECHANNEL_SEED", "lucky")
    assert run(["simulate", "--duration", "10", "--out", str(tmp_path / "t.csv")]) == 2
    assert "BLECHANNEL_SEED" in capsys.readouterr().err


def test_bad_config_is_a_usage_error(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("no_such_key = 1\n", encoding="utf-8")
    out = tmp_path / "curve.csv"
    assert run(["accuracy", "--config", str(cfg), "--out", str(out)]) == 2
    assert "no_such_key" in capsys.readouterr().err


def test_unreadable_input_is_a_data_error(tmp_path, capsys):
    assert run(["classify", "--in", str(tmp_path / "missing.csv")]) == 1
    capsys.readouterr()
    bad = tmp_path / "bad.csv"
    bad.write_text("not a trace\n", encoding="utf-8")
    assert run(["classify", "--in", str(bad)]) == 1
    assert "line 1" in capsys.readouterr().err


def test_missing_required_arguments_exit_via_argparse(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["simulate"])  # --out is required
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        run([])
    capsys.readouterr()


def test_classify_guard_width_changes_coverage(tmp_path, capsys):
    trace_path = tmp_path / "trace.csv"
    assert run(["simulate", "--seed", "4", "--duration", "30", "--out", str(trace_path)]) == 0
    capsys.readouterr()
    assert run(["classify", "--in", str(trace_path), "--guard", "0.2"]) == 0
    narrow = capsys.readouterr().out
    assert run(["classify", "--in", str(trace_path), "--guard", "2.0"]) == 0
    wide = capsys.readouterr().out

    def guard_count(text):
        token = text.split(" guard,")[0]
        return int(token.rsplit(" ", 1)[-1])

    assert guard_count(wide) > guard_count(narrow)
    assert not math.isnan(guard_count(wide))
