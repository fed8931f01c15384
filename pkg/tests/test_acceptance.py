"""End-to-end checks of the guarantees this package ships with.

Each test covers one numbered criterion and appends its verdict to
conftest.ACCEPTANCE_RESULTS, so the run ends with one PASS/FAIL line per
criterion in the terminal summary.  Tolerances and seeds are pinned; a
red test here means the property regressed, not that a knob needs
retuning.
"""

import dataclasses
import math
import os
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS

from blechannel.core import (
    APP_CLOCK,
    CHANNEL_FREQ_HZ,
    RADIO_CLOCK,
    Channel,
    Duration,
    ScanSettings,
    TimeInstant,
    preset_settings,
)
from blechannel.detector import ClassKind, DetectorConfig, classify_time
from blechannel.harness import (
    ExperimentConfig,
    run_accuracy_experiment,
    run_compatibility_matrix,
    run_ranging_experiment,
    write_samples_csv,
)
from blechannel.ranging import (
    CalibrationModel,
    RadioLink,
    RangingSample,
    calibrate,
    estimate_distance,
    friis_rx_power,
)
from blechannel.simkit import (
    ClockModel,
    Compliant,
    LossModel,
    gen_advertising,
    gen_scan_windows,
    simulate_reception,
    substream,
)


@contextmanager
def criterion(num: int, name: str):
    ok = False
    try:
        yield
        ok = True
    finally:
        ACCEPTANCE_RESULTS.append((num, name, ok))
        print(f"criterion {num} ({name}): {'PASS' if ok else 'FAIL'}")


def test_criterion_1_classifier_matches_enumeration_oracle():
    with criterion(1, "classifier oracle equivalence"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(20240817)
        n = 100_000
        interval_choices = np.array(
            [4_096_000_000, 5_000_000_000, 5_120_000_000], dtype=np.int64
        )
        guard_choices = np.array(
            [0, 100_000_000, 200_000_000, 500_000_000], dtype=np.int64
        )
        deltas = rng.integers(0, 3_600 * 10**9 + 1, size=n, dtype=np.int64)
        intervals = interval_choices[rng.integers(0, 3, n)]
        guards = guard_choices[rng.integers(0, 4, n)]

        # pepper in exact slot edges and one ns either side of each guard edge
        extra = []
        for T in interval_choices.tolist():
            for g in guard_choices.tolist():
                for k in (0, 1, 2, 17, 702):
                    base = k * T
                    half = g // 2
                    for d in (
                        base,
                        base + half - 1,
                        base + half,
                        base + T - half,
                        base + T - half + 1,
                        base + T - 1,
                    ):
                        if d >= 0:
                            extra.append((d, T, g))
        deltas = np.concatenate([deltas, np.array([e[0] for e in extra], dtype=np.int64)])
        intervals = np.concatenate([intervals, np.array([e[1] for e in extra], dtype=np.int64)])
        guards = np.concatenate([guards, np.array([e[2] for e in extra], dtype=np.int64)])

        # independent oracle: enumerate the slot by division, then test
        # membership in the closed window [sT + g/2, (s+1)T - g/2]
        slot = deltas // intervals
        rem = deltas - slot * intervals
        inside = (2 * rem >= guards) & (2 * rem <= 2 * intervals - guards)
        chan = 37 + (slot % 3)

        anchor = TimeInstant(0, APP_CLOCK)
        configs = {}
        mismatches = 0
        for i in range(len(deltas)):
            key = (int(intervals[i]), int(guards[i]))
            cfg = configs.get(key)
            if cfg is None:
                cfg = configs[key] = DetectorConfig(
                    scan_settings=ScanSettings(
                        scan_interval=Duration(key[0]), scan_window=Duration(key[0])
                    ),
                    guard=Duration(key[1]),
                )
            res = classify_time(TimeInstant(int(deltas[i]), APP_CLOCK), anchor, cfg)
            if inside[i]:
                ok = res.kind is ClassKind.CHANNEL and res.channel.id == chan[i]
            else:
                ok = res.kind is ClassKind.GUARD
            mismatches += not ok
        elapsed = time.perf_counter() - t0

        assert mismatches == 0
        assert elapsed < 5.0


def test_criterion_2_accuracy_plateau_under_mild_drift():
    with criterion(2, "100% accuracy plateau over 600 s"):
        t0 = time.perf_counter()
        cfg = ExperimentConfig(
            seed=7,
            n_seeds=20,
            duration_s=600.0,
            bucket_s=30.0,
            drift_rate=50e-6,
            jitter_min_s=0.0,
            jitter_max_s=0.05,
        )
        curve = run_accuracy_experiment(cfg)
        elapsed = time.perf_counter() - t0

        assert len(curve.buckets) == 20
        for b in curve.buckets:
            assert b.n_classified > 0
            assert b.accuracy == 1.0
        assert elapsed < 10.0


def test_criterion_3_decay_sets_in_near_the_drift_threshold():
    with criterion(3, "drift decay regime"):
        # (guard/2) / drift = 0.1 s / 200e-6 = 500 s of clean classification
        cfg = ExperimentConfig(
            seed=42,
            n_seeds=20,
            duration_s=660.0,
            bucket_s=30.0,
            drift_rate=200e-6,
            max_scan_time_s=660.0,
        )
        curve = run_accuracy_experiment(cfg)
        worst = curve.first_imperfect_bucket()
        assert worst is not None
        assert 450.0 <= worst.start_s <= 550.0

        for b in curve.buckets:
            if b.start_s < worst.start_s:
                assert b.accuracy == 1.0
        tail = [b for b in curve.buckets if b.start_s >= worst.start_s]
        # non-increasing up to binomial sampling noise on each bucket
        for prev, nxt in zip(tail, tail[1:]):
            se = math.sqrt(prev.accuracy * (1.0 - prev.accuracy) / prev.n_classified)
            assert nxt.accuracy <= prev.accuracy + 3.0 * se
        assert tail[-1].accuracy < tail[0].accuracy


def test_criterion_4_behavior_compatibility_matrix():
    with criterion(4, "behavior compatibility matrix"):
        cfg = ExperimentConfig(seed=11, duration_s=420.0, restart_every_s=60.0)
        result = run_compatibility_matrix(cfg)

        compliant = result.row("compliant")
        assert compliant.n_classified > 1000
        assert compliant.accuracy == 1.0

        alt = result.row("alt-interval")
        assert alt.detector_interval_s == 5.0
        assert alt.accuracy >= 0.99

        rapid = result.row("rapid-toggle")
        assert rapid.n_classified >= 3000
        assert 0.30 <= rapid.accuracy <= 0.40

        for tag in ("nonstandard-order", "continue-channel"):
            row = result.row(tag)
            assert row.n_classified > 1000
            assert row.accuracy < 0.60


def test_criterion_5_free_space_reference_values():
    with criterion(5, "free-space reference exactness"):
        link = RadioLink(tx_power_dbm=0.0, antenna_gain_db=0.0)
        f37 = CHANNEL_FREQ_HZ[37]
        f39 = CHANNEL_FREQ_HZ[39]

        rx_1m = friis_rx_power(link, f37, 1.0)
        assert rx_1m == pytest.approx(-40.06, abs=0.01)
        assert rx_1m == pytest.approx(-40.05924328322112, abs=1e-6)

        for d in (1.0, 3.3, 12.0):
            drop = friis_rx_power(link, f37, d) - friis_rx_power(link, f37, 2 * d)
            assert drop == pytest.approx(6.0206, abs=1e-6)
            assert drop == pytest.approx(6.020599913279624, abs=1e-9)

        for d in (1.0, 7.0):
            spread = friis_rx_power(link, f37, d) - friis_rx_power(link, f39, d)
            assert spread == pytest.approx(0.278, abs=0.005)
            assert spread == pytest.approx(0.2775735551865801, abs=1e-9)

        for i in range(40):
            d = 10.0 ** (-0.6 + i * (2.3 / 39))  # 0.25 m .. 50 m
            back = estimate_distance(link, f37, friis_rx_power(link, f37, d))
            assert abs(back - d) / d <= 1e-9


TRUTH = CalibrationModel(
    intercept_dbm=-40.0, path_loss_exponent=2.0, channel_offset_db=(0.0, -7.0, -15.0)
)
CHANNELS = tuple(sorted(CHANNEL_FREQ_HZ))


def _draw_samples(rng, n, sigma):
    out = []
    for _ in range(n):
        ch = Channel.of(rng.choice(CHANNELS))
        d = 10.0 ** (rng.random() * math.log10(16.0))
        rssi = TRUTH.predict_rssi(ch, d)
        if sigma:
            rssi += rng.gauss(0.0, sigma)
        out.append(RangingSample(channel=ch, distance_m=d, rssi_dbm=rssi))
    return out


def test_criterion_6_calibration_recovery_and_error_bars():
    with criterion(6, "calibration recovery and standard errors"):
        model = calibrate(_draw_samples(substream(6, "noiseless"), 300, 0.0))
        assert model.intercept_dbm == pytest.approx(-40.0, abs=1e-9)
        assert model.path_loss_exponent == pytest.approx(2.0, abs=1e-9)
        assert model.channel_offset_db[1] == pytest.approx(-7.0, abs=1e-9)
        assert model.channel_offset_db[2] == pytest.approx(-15.0, abs=1e-9)

        runs = 200
        per_param = [0, 0, 0, 0]
        joint = 0
        for run in range(runs):
            m = calibrate(_draw_samples(substream(1000 + run, "se"), 300, 2.0))
            within = [
                abs(m.intercept_dbm + 40.0) <= 3.0 * m.intercept_se,
                abs(m.channel_offset_db[1] + 7.0) <= 3.0 * m.offset_se[0],
                abs(m.channel_offset_db[2] + 15.0) <= 3.0 * m.offset_se[1],
                abs(m.path_loss_exponent - 2.0) <= 3.0 * m.exponent_se,
            ]
            for i, ok in enumerate(within):
                per_param[i] += ok
            joint += all(within)
        for count in per_param:
            assert count >= 0.95 * runs
        assert joint >= 0.95 * runs


def test_criterion_7_channel_awareness_pays_off_only_when_channels_differ():
    with criterion(7, "channel-aware ranging benefit"):
        base = ExperimentConfig(
            channel_offsets_db="0,7.5,15",
            distance_min_m=1.0,
            distance_max_m=5.0,
            shadow_sigma_db=2.0,
        )
        for i in range(20):
            result = run_ranging_experiment(dataclasses.replace(base, seed=21 + i))
            assert result.comparison.rmse_ratio < 0.5

        flat = dataclasses.replace(base, channel_offsets_db="0,0,0")
        for i in range(20):
            c = run_ranging_experiment(dataclasses.replace(flat, seed=21 + i)).comparison
            rel = abs(c.aware_rmse_m - c.agnostic_rmse_m) / c.agnostic_rmse_m
            assert rel < 0.05


def test_criterion_8_every_scan_window_catches_a_beacon():
    with criterion(8, "per-window reception guarantee"):
        scan = preset_settings("SCAN_MODE_LOW_POWER")
        adv = preset_settings("ADVERTISE_MODE_BALANCED")
        # the guarantee only holds when a full advertising period fits in a window
        assert adv.base_interval.ns + adv.rho_max.ns <= scan.scan_window.ns

        n_windows = 10_000
        start = TimeInstant(0, RADIO_CLOCK)
        end = TimeInstant(n_windows * scan.scan_interval.ns, RADIO_CLOCK)
        windows = gen_scan_windows(Compliant(), scan, [start], end, substream(3, "w"))
        assert len(windows) == n_windows
        events = gen_advertising(adv, "dev00", start, end, substream(3, "a"))
        packets = simulate_reception(
            events, windows, [start], ClockModel(), LossModel(0.0), substream(3, "r")
        )
        hit = {p.window_index for p in packets}
        assert hit == set(range(n_windows))


def _cli(args, cwd):
    env = {k: v for k, v in os.environ.items() if k != "BLECHANNEL_SEED"}
    proc = subprocess.run(
        [sys.executable, "-m", "blechannel.cli", *args],
        capture_output=True,
        cwd=cwd,
        env=env,
    )
    assert proc.returncode == 0, proc.stderr.decode()
    return proc.stdout


def test_criterion_9_cli_is_byte_deterministic(tmp_path):
    with criterion(9, "CLI byte determinism"):
        cfg_small = tmp_path / "small.cfg"
        cfg_small.write_text(
            "duration_s = 30\nbucket_s = 10\nn_advertisers = 2\n", encoding="utf-8"
        )
        cfg_matrix = tmp_path / "matrix.cfg"
        cfg_matrix.write_text("duration_s = 20\nn_advertisers = 1\n", encoding="utf-8")
        cfg_rng = tmp_path / "rng.cfg"
        cfg_rng.write_text("seed = 21\nchannel_offsets_db = 0,6,12\n", encoding="utf-8")

        trace = tmp_path / "trace.csv"
        samples = tmp_path / "samples.csv"

        # every subcommand, with its inputs and outputs
        plan = [
            (
                ["simulate", "--seed", "5", "--duration", "20", "--out", str(trace)],
                [trace],
            ),
            (
                ["classify", "--in", str(trace), "--out", str(tmp_path / "labeled.csv")],
                [tmp_path / "labeled.csv"],
            ),
            (
                ["accuracy", "--config", str(cfg_small), "--seed", "2", "--out", str(tmp_path / "curve.csv")],
                [tmp_path / "curve.csv"],
            ),
            (
                ["matrix", "--config", str(cfg_matrix), "--seed", "3", "--out", str(tmp_path / "matrix.csv")],
                [tmp_path / "matrix.csv"],
            ),
            (
                ["ranging", "--config", str(cfg_rng), "--model-out", str(tmp_path / "model.txt")],
                [tmp_path / "model.txt"],
            ),
            (
                ["calibrate", "--in", str(samples), "--out", str(tmp_path / "fit.txt")],
                [tmp_path / "fit.txt"],
            ),
        ]

        write_samples_csv(
            str(samples),
            _draw_samples(substream(9, "cli"), 60, 1.0),
        )

        for args, outputs in plan:
            first_stdout = _cli(args, tmp_path)
            first_bytes = [p.read_bytes() for p in outputs]
            second_stdout = _cli(args, tmp_path)
            second_bytes = [p.read_bytes() for p in outputs]
            assert first_stdout == second_stdout, args[0]
            assert first_bytes == second_bytes, args[0]
