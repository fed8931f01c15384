"""Trace files, experiment configuration and the canned experiments.

File formats kept here:

* trace CSV: ``# blechannel-trace v1`` magic, a metadata comment line, then
  ``recv_time_ns,device_id,true_channel,rssi_dbm`` rows, optionally with a
  trailing ``est_channel`` column after classification.
* accuracy curve CSV: per-bucket classification counts over elapsed scan
  time.
* experiment config: flat ``key = value`` lines, ``#``/``;`` comments,
  ``[section]`` headers allowed for grouping but carrying no meaning.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field, fields

from .core import (
    APP_CLOCK,
    RADIO_CLOCK,
    AdvSettings,
    Channel,
    Duration,
    ScanSettings,
    TimeInstant,
    preset_settings,
)
from .detector import ClassKind, DetectorConfig, classify_trace
from .errors import ConfigError, NoDataError, TraceOrderError, TraceParseError
from .ranging import EstimatorComparison, RangingSample, compare_estimators
from .simkit import (
    ClockModel,
    LossModel,
    PacketRecord,
    RssiModel,
    ScannerBehavior,
    SimTrace,
    app_anchor_times,
    attach_rssi,
    behavior_from_tag,
    gen_advertising,
    gen_scan_windows,
    simulate_reception,
    substream,
)

TRACE_MAGIC = "# blechannel-trace v1"
TRACE_COLUMNS = "recv_time_ns,device_id,true_channel,rssi_dbm"
EST_COLUMN = "est_channel"
EST_LABELS = frozenset({"37", "38", "39", "guard", "pre-start"})
CURVE_COLUMNS = "bucket_start_s,bucket_end_s,n_classified,n_correct,n_unclassified,accuracy"
SAMPLES_COLUMNS = "channel,distance_m,rssi_dbm"

_DEVICE_ID = re.compile(r"[A-Za-z0-9._:-]+")


@dataclass(frozen=True, slots=True)
class TraceFile:
    """In-memory form of a trace CSV."""

    scan_interval_ns: int
    scan_window_ns: int
    behavior_tag: str
    seed: int
    restarts_ns: tuple[int, ...] = (0,)
    packets: tuple[PacketRecord, ...] = ()
    est_labels: tuple[str, ...] | None = None

    @property
    def scan_settings(self) -> ScanSettings:
        return ScanSettings(
            scan_interval=Duration(self.scan_interval_ns),
            scan_window=Duration(self.scan_window_ns),
        )

    @property
    def restarts(self) -> tuple[TimeInstant, ...]:
        return tuple(TimeInstant(ns, APP_CLOCK) for ns in self.restarts_ns)

    @classmethod
    def from_sim(cls, trace: SimTrace) -> "TraceFile":
        return cls(
            scan_interval_ns=trace.scan_settings.scan_interval.ns,
            scan_window_ns=trace.scan_settings.scan_window.ns,
            behavior_tag=trace.behavior_tag,
            seed=trace.seed,
            restarts_ns=tuple(r.ns for r in trace.restarts),
            packets=trace.packets,
        )


def trace_to_text(trace: TraceFile | SimTrace) -> str:
    if isinstance(trace, SimTrace):
        trace = TraceFile.from_sim(trace)
    lines = [
        TRACE_MAGIC,
        f"# ts_ns={trace.scan_interval_ns} ds_ns={trace.scan_window_ns} "
        f"behavior={trace.behavior_tag} seed={trace.seed}",
    ]
    if trace.restarts_ns != (0,):
        lines.append("# restarts_ns=" + ",".join(str(ns) for ns in trace.restarts_ns))
    est = trace.est_labels
    if est is not None and len(est) != len(trace.packets):
        raise ConfigError("one est_channel label per packet required")
    lines.append(TRACE_COLUMNS + ("," + EST_COLUMN if est is not None else ""))
    for i, p in enumerate(trace.packets):
        if not _DEVICE_ID.fullmatch(p.device_id):
            raise ConfigError(f"device id not writable to CSV: {p.device_id!r}")
        row = (
            f"{p.recv.ns},{p.device_id},"
            f"{p.channel.id if p.channel is not None else ''},"
            f"{'' if p.rssi_dbm is None else format(p.rssi_dbm, '.6f')}"
        )
        if est is not None:
            row += f",{est[i]}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def write_trace(trace: TraceFile | SimTrace, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(trace_to_text(trace))


def _parse_meta_tokens(line: str, lineno: int) -> dict[str, str]:
    out = {}
    for token in line[1:].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise TraceParseError(f"bad metadata token {token!r}", line=lineno)
        out[key] = value
    return out


def trace_from_text(text: str) -> TraceFile:
    lines = text.splitlines()
    if not lines or lines[0].strip() != TRACE_MAGIC:
        raise TraceParseError(f"missing {TRACE_MAGIC!r} magic", line=1)
    if len(lines) < 2 or not lines[1].startswith("#"):
        raise TraceParseError("missing metadata line", line=2)
    meta = _parse_meta_tokens(lines[1], 2)
    try:
        scan_interval_ns = int(meta["ts_ns"])
        scan_window_ns = int(meta["ds_ns"])
        behavior = meta["behavior"]
        seed = int(meta["seed"])
    except KeyError as exc:
        raise TraceParseError(f"metadata key {exc.args[0]} missing", line=2) from exc
    except ValueError as exc:
        raise TraceParseError(f"bad metadata: {exc}", line=2) from exc
    if not 0 < scan_window_ns <= scan_interval_ns:
        raise TraceParseError("need 0 < ds_ns <= ts_ns", line=2)

    restarts = (0,)
    i = 2
    while i < len(lines) and lines[i].startswith("#"):
        extra = _parse_meta_tokens(lines[i], i + 1)
        if "restarts_ns" in extra:
            try:
                restarts = tuple(int(v) for v in extra["restarts_ns"].split(","))
            except ValueError as exc:
                raise TraceParseError("bad restarts_ns list", line=i + 1) from exc
            if not restarts or any(b <= a for a, b in zip(restarts, restarts[1:])):
                raise TraceParseError(
                    "restarts_ns must be non-empty and strictly increasing", line=i + 1
                )
        i += 1

    if i >= len(lines):
        raise TraceParseError("missing column header", line=len(lines) + 1)
    header = lines[i].strip()
    if header == TRACE_COLUMNS:
        has_est = False
    elif header == TRACE_COLUMNS + "," + EST_COLUMN:
        has_est = True
    else:
        raise TraceParseError(f"unexpected columns {header!r}", line=i + 1)

    packets = []
    est: list[str] = []
    prev_ns = None
    for lineno in range(i + 1, len(lines)):
        line = lines[lineno].strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != (5 if has_est else 4):
            raise TraceParseError(f"expected {5 if has_est else 4} fields", line=lineno + 1)
        try:
            recv_ns = int(parts[0])
        except ValueError as exc:
            raise TraceParseError("recv_time_ns must be an integer", line=lineno + 1) from exc
        if prev_ns is not None and recv_ns < prev_ns:
            raise TraceOrderError(f"line {lineno + 1}: timestamps moved backwards")
        prev_ns = recv_ns
        device = parts[1]
        if not _DEVICE_ID.fullmatch(device):
            raise TraceParseError(f"bad device id {device!r}", line=lineno + 1)
        channel = None
        if parts[2]:
            try:
                channel = Channel.of(int(parts[2]))
            except (ValueError, ConfigError) as exc:
                raise TraceParseError(f"bad true_channel {parts[2]!r}", line=lineno + 1) from exc
        rssi = None
        if parts[3]:
            try:
                rssi = float(parts[3])
            except ValueError as exc:
                raise TraceParseError(f"bad rssi_dbm {parts[3]!r}", line=lineno + 1) from exc
        if has_est:
            if parts[4] not in EST_LABELS:
                raise TraceParseError(f"bad est_channel {parts[4]!r}", line=lineno + 1)
            est.append(parts[4])
        packets.append(
            PacketRecord(
                recv=TimeInstant(recv_ns, APP_CLOCK),
                device_id=device,
                channel=channel,
                rssi_dbm=rssi,
            )
        )
    return TraceFile(
        scan_interval_ns=scan_interval_ns,
        scan_window_ns=scan_window_ns,
        behavior_tag=behavior,
        seed=seed,
        restarts_ns=restarts,
        packets=tuple(packets),
        est_labels=tuple(est) if has_est else None,
    )


def read_trace(path: str) -> TraceFile:
    with open(path, "r", encoding="utf-8") as f:
        return trace_from_text(f.read())


@dataclass(frozen=True, slots=True)
class AccuracyBucket:
    start_s: float
    end_s: float
    n_classified: int = 0
    n_correct: int = 0
    n_unclassified: int = 0

    @property
    def accuracy(self) -> float | None:
        if self.n_classified == 0:
            return None
        return self.n_correct / self.n_classified


@dataclass(frozen=True, slots=True)
class AccuracyCurve:
    """Classification accuracy bucketed over elapsed scan time."""

    buckets: tuple[AccuracyBucket, ...]

    @property
    def totals(self) -> AccuracyBucket:
        if not self.buckets:
            raise NoDataError("empty accuracy curve")
        return AccuracyBucket(
            start_s=self.buckets[0].start_s,
            end_s=self.buckets[-1].end_s,
            n_classified=sum(b.n_classified for b in self.buckets),
            n_correct=sum(b.n_correct for b in self.buckets),
            n_unclassified=sum(b.n_unclassified for b in self.buckets),
        )

    def first_imperfect_bucket(self) -> AccuracyBucket | None:
        """Earliest bucket that classified something and got any of it wrong."""
        for b in self.buckets:
            if b.n_classified > 0 and b.n_correct < b.n_classified:
                return b
        return None

    @staticmethod
    def merge(curves: list["AccuracyCurve"]) -> "AccuracyCurve":
        """Pool bucket counts across runs with identical bucket edges."""
        if not curves:
            raise NoDataError("nothing to merge")
        edges = [(b.start_s, b.end_s) for b in curves[0].buckets]
        for c in curves[1:]:
            if [(b.start_s, b.end_s) for b in c.buckets] != edges:
                raise ConfigError("cannot merge curves with different bucket edges")
        merged = []
        for i, (start, end) in enumerate(edges):
            merged.append(
                AccuracyBucket(
                    start_s=start,
                    end_s=end,
                    n_classified=sum(c.buckets[i].n_classified for c in curves),
                    n_correct=sum(c.buckets[i].n_correct for c in curves),
                    n_unclassified=sum(c.buckets[i].n_unclassified for c in curves),
                )
            )
        return AccuracyCurve(buckets=tuple(merged))

    def to_csv_text(self) -> str:
        lines = [CURVE_COLUMNS]
        for b in self.buckets:
            acc = "" if b.accuracy is None else format(b.accuracy, ".6f")
            lines.append(
                f"{b.start_s:.10g},{b.end_s:.10g},"
                f"{b.n_classified},{b.n_correct},{b.n_unclassified},{acc}"
            )
        return "\n".join(lines) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_csv_text())

    @classmethod
    def from_csv_text(cls, text: str) -> "AccuracyCurve":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != CURVE_COLUMNS:
            raise TraceParseError("not an accuracy-curve CSV", line=1)
        buckets = []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != 6:
                raise TraceParseError("expected 6 fields", line=lineno)
            try:
                buckets.append(
                    AccuracyBucket(
                        start_s=float(parts[0]),
                        end_s=float(parts[1]),
                        n_classified=int(parts[2]),
                        n_correct=int(parts[3]),
                        n_unclassified=int(parts[4]),
                    )
                )
            except ValueError as exc:
                raise TraceParseError(f"bad bucket row: {exc}", line=lineno) from exc
        return cls(buckets=tuple(buckets))

    @classmethod
    def read(cls, path: str) -> "AccuracyCurve":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_csv_text(f.read())


def build_accuracy_curve(samples, bucket_s: float, horizon_s: float) -> AccuracyCurve:
    """Bucket (elapsed_seconds, outcome) samples.

    ``outcome`` is True for a correct channel, False for a wrong one and
    None for unclassified (guard, pre-start or missing ground truth).
    Samples outside [0, horizon) are dropped.
    """
    if bucket_s <= 0 or horizon_s <= 0:
        raise ConfigError("bucket_s and horizon_s must be positive")
    n = math.ceil(horizon_s / bucket_s)
    classified = [0] * n
    correct = [0] * n
    unclassified = [0] * n
    for elapsed, outcome in samples:
        if not 0 <= elapsed < horizon_s:
            continue
        idx = min(int(elapsed / bucket_s), n - 1)
        if outcome is None:
            unclassified[idx] += 1
        else:
            classified[idx] += 1
            if outcome:
                correct[idx] += 1
    buckets = tuple(
        AccuracyBucket(
            start_s=i * bucket_s,
            end_s=min((i + 1) * bucket_s, horizon_s),
            n_classified=classified[i],
            n_correct=correct[i],
            n_unclassified=unclassified[i],
        )
        for i in range(n)
    )
    return AccuracyCurve(buckets=buckets)


MATRIX_BEHAVIORS = (
    "compliant",
    "balanced-offset",
    "alt-interval",
    "rapid-toggle",
    "nonstandard-order",
    "continue-channel",
)


@dataclass
class ExperimentConfig:
    """Flat settings shared by the canned experiments.

    Everything has a workable default, so a config file only needs the
    fields it wants to change.
    """

    seed: int = 0
    n_seeds: int = 1
    duration_s: float = 600.0
    bucket_s: float = 30.0
    scan_mode: str = "SCAN_MODE_LOW_LATENCY"
    adv_mode: str = "ADVERTISE_MODE_LOW_LATENCY"
    n_advertisers: int = 4
    adv_channels: str = "37,38,39"
    behavior: str = "compliant"
    alt_interval_s: float = 5.0
    restart_every_s: float = 0.0
    drift_rate: float = 0.0
    jitter_min_s: float = 0.0
    jitter_max_s: float = 0.0
    loss_prob: float = 0.0
    guard_s: float = 0.2
    max_scan_time_s: float = 600.0
    idle_timeout_s: float = 300.0
    tx_power_dbm: float = 0.0
    antenna_gain_db: float = 0.0
    path_loss_exponent: float = 2.0
    shadow_sigma_db: float = 2.0
    channel_offsets_db: str = "0,0,0"
    distance_min_m: float = 1.0
    distance_max_m: float = 16.0
    n_train: int = 600
    n_test: int = 300
    explicit: frozenset = field(default_factory=frozenset, repr=False, compare=False)

    def channel_list(self) -> tuple[Channel, ...]:
        try:
            ids = [int(v) for v in self.adv_channels.split(",") if v.strip()]
            return tuple(Channel.of(i) for i in ids)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"bad adv_channels {self.adv_channels!r}: {exc}") from exc

    def offsets(self) -> tuple[float, float, float]:
        parts = [v.strip() for v in self.channel_offsets_db.split(",")]
        if len(parts) != 3:
            raise ConfigError("channel_offsets_db needs exactly three values")
        try:
            a, b, c = (float(v) for v in parts)
        except ValueError as exc:
            raise ConfigError(f"bad channel_offsets_db: {exc}") from exc
        return (a, b, c)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        known = {f.name: f.type for f in fields(cls) if f.name != "explicit"}
        kwargs = {}
        for key, value in _parse_config_lines(text).items():
            ftype = known.get(key)
            if ftype is None:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                if ftype == "int":
                    kwargs[key] = int(value)
                elif ftype == "float":
                    kwargs[key] = float(value)
                else:
                    kwargs[key] = value
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
        return cls(**kwargs, explicit=frozenset(kwargs))

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_text(f.read())


def _parse_config_lines(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: unterminated section header")
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        out[key.strip()] = value.strip()
    return out


def _scan_preset(name: str) -> ScanSettings:
    settings = preset_settings(name)
    if not isinstance(settings, ScanSettings):
        raise ConfigError(f"{name} is not a scan mode")
    return settings


def _adv_preset(name: str) -> AdvSettings:
    settings = preset_settings(name)
    if not isinstance(settings, AdvSettings):
        raise ConfigError(f"{name} is not an advertise mode")
    return settings


def _restart_schedule(cfg: ExperimentConfig, duration: Duration) -> list[TimeInstant]:
    if cfg.restart_every_s <= 0:
        return [TimeInstant(0, RADIO_CLOCK)]
    step = Duration.from_seconds(cfg.restart_every_s).ns
    return [TimeInstant(ns, RADIO_CLOCK) for ns in range(0, duration.ns, step)]


def scenario_behavior(cfg: ExperimentConfig) -> ScannerBehavior:
    return behavior_from_tag(
        cfg.behavior, alt_interval=Duration.from_seconds(cfg.alt_interval_s)
    )


def simulate_scenario(cfg: ExperimentConfig, seed: int, with_rssi: bool = False) -> SimTrace:
    """One full simulated capture for the configured scenario."""
    scan = _scan_preset(cfg.scan_mode)
    adv = _adv_preset(cfg.adv_mode)
    behavior = scenario_behavior(cfg)
    duration = Duration.from_seconds(cfg.duration_s)
    if duration.ns <= 0:
        raise ConfigError("duration_s must be positive")
    end = TimeInstant(duration.ns, RADIO_CLOCK)
    restarts = _restart_schedule(cfg, duration)
    windows = gen_scan_windows(behavior, scan, restarts, end, substream(seed, "scan"))

    channels = cfg.channel_list()
    events = []
    for d in range(cfg.n_advertisers):
        rng = substream(seed, f"adv:{d}")
        # Stagger phases so devices do not transmit in lockstep.
        offset = rng.randrange(adv.base_interval.ns + adv.rho_max.ns + 1)
        events.extend(
            gen_advertising(
                adv, f"dev{d:02d}", TimeInstant(offset, RADIO_CLOCK), end, rng, channels
            )
        )

    clock = ClockModel(
        drift_rate=cfg.drift_rate, jitter_range=(cfg.jitter_min_s, cfg.jitter_max_s)
    )
    loss = LossModel(drop_prob=cfg.loss_prob)
    packets = simulate_reception(events, windows, restarts, clock, loss, substream(seed, "rx"))
    if with_rssi:
        model = RssiModel(
            tx_power_dbm=cfg.tx_power_dbm,
            antenna_gain_db=cfg.antenna_gain_db,
            path_loss_exponent=cfg.path_loss_exponent,
            shadow_sigma_db=cfg.shadow_sigma_db,
            channel_offset_db=cfg.offsets(),
        )
        rng = substream(seed, "rssi")
        span = cfg.distance_max_m - cfg.distance_min_m
        distances = {
            f"dev{d:02d}": cfg.distance_min_m + rng.random() * span
            for d in range(cfg.n_advertisers)
        }
        packets = attach_rssi(packets, model, distances, rng)
    return SimTrace(
        scan_settings=scan,
        behavior_tag=behavior.tag,
        seed=seed,
        restarts=tuple(app_anchor_times(restarts, clock)),
        packets=tuple(packets),
    )


def detector_config(cfg: ExperimentConfig, behavior: ScannerBehavior) -> DetectorConfig:
    """Detector settings for a scenario, honouring what the device really does."""
    effective = behavior.effective_settings(_scan_preset(cfg.scan_mode))
    return DetectorConfig(
        scan_settings=effective,
        guard=Duration.from_seconds(cfg.guard_s),
        max_scan_time=Duration.from_seconds(cfg.max_scan_time_s),
        idle_timeout=Duration.from_seconds(cfg.idle_timeout_s),
    )


def classification_samples(trace: SimTrace | TraceFile, dconf: DetectorConfig):
    """(elapsed_s, outcome) pairs for curve building; see build_accuracy_curve."""
    out = []
    for cp in classify_trace(trace.packets, list(trace.restarts), dconf):
        elapsed = (cp.packet.recv - cp.anchor).seconds
        if cp.result.kind is ClassKind.CHANNEL and cp.packet.channel is not None:
            out.append((elapsed, cp.result.channel == cp.packet.channel))
        else:
            out.append((elapsed, None))
    return out


def run_accuracy_experiment(cfg: ExperimentConfig) -> AccuracyCurve:
    """Accuracy over elapsed scan time, pooled over ``n_seeds`` replicas."""
    if cfg.n_seeds <= 0:
        raise ConfigError("n_seeds must be positive")
    behavior = scenario_behavior(cfg)
    dconf = detector_config(cfg, behavior)
    curves = []
    for i in range(cfg.n_seeds):
        trace = simulate_scenario(cfg, cfg.seed + i)
        samples = classification_samples(trace, dconf)
        curves.append(build_accuracy_curve(samples, cfg.bucket_s, cfg.duration_s))
    return AccuracyCurve.merge(curves)


@dataclass(frozen=True, slots=True)
class MatrixRow:
    behavior: str
    detector_interval_s: float
    n_classified: int
    n_correct: int
    n_unclassified: int

    @property
    def accuracy(self) -> float | None:
        if self.n_classified == 0:
            return None
        return self.n_correct / self.n_classified


@dataclass(frozen=True, slots=True)
class MatrixResult:
    """Per-behavior identification accuracy under one common scenario."""

    rows: tuple[MatrixRow, ...]

    def row(self, behavior: str) -> MatrixRow:
        for r in self.rows:
            if r.behavior == behavior:
                return r
        raise KeyError(behavior)

    def to_text(self) -> str:
        lines = [
            f"{'behavior':<18} {'T_s(s)':>7} {'classified':>10} "
            f"{'correct':>8} {'unclassified':>12} {'accuracy':>8}"
        ]
        for r in self.rows:
            acc = "n/a" if r.accuracy is None else f"{r.accuracy:.4f}"
            lines.append(
                f"{r.behavior:<18} {r.detector_interval_s:>7.3f} {r.n_classified:>10} "
                f"{r.n_correct:>8} {r.n_unclassified:>12} {acc:>8}"
            )
        return "\n".join(lines) + "\n"

    def to_csv_text(self) -> str:
        lines = ["behavior,detector_interval_s,n_classified,n_correct,n_unclassified,accuracy"]
        for r in self.rows:
            acc = "" if r.accuracy is None else format(r.accuracy, ".6f")
            lines.append(
                f"{r.behavior},{r.detector_interval_s:.6g},{r.n_classified},"
                f"{r.n_correct},{r.n_unclassified},{acc}"
            )
        return "\n".join(lines) + "\n"


def run_compatibility_matrix(cfg: ExperimentConfig) -> MatrixResult:
    """Run every scanner behavior through the same scenario and detector.

    The detector is granted each device's real timing (its effective scan
    settings), which mirrors calibrating the interval per device model; the
    question each row answers is whether arrival times then identify the
    channel at all.
    """
    rows = []
    for tag in MATRIX_BEHAVIORS:
        scen = dataclasses.replace(cfg, behavior=tag)
        behavior = scenario_behavior(scen)
        dconf = detector_config(scen, behavior)
        n_classified = n_correct = n_unclassified = 0
        for i in range(cfg.n_seeds):
            trace = simulate_scenario(scen, cfg.seed + i)
            for elapsed, outcome in classification_samples(trace, dconf):
                if outcome is None:
                    n_unclassified += 1
                else:
                    n_classified += 1
                    n_correct += outcome
        rows.append(
            MatrixRow(
                behavior=tag,
                detector_interval_s=dconf.scan_settings.scan_interval.seconds,
                n_classified=n_classified,
                n_correct=n_correct,
                n_unclassified=n_unclassified,
            )
        )
    return MatrixResult(rows=tuple(rows))


@dataclass(frozen=True, slots=True)
class RangingResult:
    """Outcome of the channel-aware versus channel-agnostic comparison."""

    comparison: EstimatorComparison
    offsets_db: tuple[float, float, float]
    n_train: int
    n_test: int

    def to_text(self) -> str:
        c = self.comparison
        return (
            f"channel offsets (37,38,39) dB: {self.offsets_db}\n"
            f"train/test samples: {self.n_train}/{self.n_test}\n"
            f"channel-aware RMSE:    {c.aware_rmse_m:.4f} m\n"
            f"channel-agnostic RMSE: {c.agnostic_rmse_m:.4f} m\n"
            f"ratio (aware/agnostic): {c.rmse_ratio:.4f}\n"
        )


def gen_ranging_samples(cfg: ExperimentConfig, n: int, rng) -> list[RangingSample]:
    """Draw labeled RSSI observations from the configured propagation model.

    Distances are log-uniform between the configured bounds, channels
    uniform, readings exact model predictions plus Gaussian shadowing.
    """
    if not 0 < cfg.distance_min_m <= cfg.distance_max_m:
        raise ConfigError("need 0 < distance_min_m <= distance_max_m")
    model = RssiModel(
        tx_power_dbm=cfg.tx_power_dbm,
        antenna_gain_db=cfg.antenna_gain_db,
        path_loss_exponent=cfg.path_loss_exponent,
        shadow_sigma_db=cfg.shadow_sigma_db,
        channel_offset_db=cfg.offsets(),
    )
    truth = model.to_calibration()
    channels = tuple(Channel.of(c) for c in (37, 38, 39))
    lo = math.log10(cfg.distance_min_m)
    hi = math.log10(cfg.distance_max_m)
    samples = []
    for _ in range(n):
        ch = rng.choice(channels)
        d = 10.0 ** (lo + rng.random() * (hi - lo))
        rssi = truth.predict_rssi(ch, d)
        if cfg.shadow_sigma_db > 0:
            rssi += rng.gauss(0.0, cfg.shadow_sigma_db)
        samples.append(RangingSample(channel=ch, distance_m=d, rssi_dbm=rssi))
    return samples


def run_ranging_experiment(cfg: ExperimentConfig) -> RangingResult:
    rng = substream(cfg.seed, "ranging")
    train = gen_ranging_samples(cfg, cfg.n_train, rng)
    test = gen_ranging_samples(cfg, cfg.n_test, rng)
    comparison = compare_estimators(train, test)
    return RangingResult(
        comparison=comparison,
        offsets_db=cfg.offsets(),
        n_train=cfg.n_train,
        n_test=cfg.n_test,
    )


def read_samples_csv(path: str) -> list[RangingSample]:
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not lines or lines[0].strip() != SAMPLES_COLUMNS:
        raise TraceParseError(f"expected {SAMPLES_COLUMNS!r} header", line=1)
    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise TraceParseError("expected 3 fields", line=lineno)
        try:
            samples.append(
                RangingSample(
                    channel=Channel.of(int(parts[0])),
                    distance_m=float(parts[1]),
                    rssi_dbm=float(parts[2]),
                )
            )
        except (ValueError, ConfigError) as exc:
            raise TraceParseError(f"bad sample row: {exc}", line=lineno) from exc
    return samples


def write_samples_csv(path: str, samples) -> None:
    lines = [SAMPLES_COLUMNS]
    for s in samples:
        lines.append(f"{s.channel.id},{s.distance_m!r},{s.rssi_dbm!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
