"""Event-level simulator for BLE advertising, scanning and reception.

Transmissions and scan windows are generated on the radio clock.  Reception
converts each caught packet to the scanning app's clock (rate drift plus a
per-restart delivery latency), which is all a scan callback ever sees.

Randomness is always taken from an explicit ``random.Random`` so that a run
is reproducible from its seed alone.  Use :func:`substream` to derive
independent generators for separate concerns (one per advertiser, one for
the scanner, one for reception) without manual seed bookkeeping.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass, replace

from . import ranging
from .core import (
    ADVERTISING_CHANNELS,
    APP_CLOCK,
    CH37,
    CHANNEL_FREQ_HZ,
    RADIO_CLOCK,
    AdvSettings,
    Channel,
    Duration,
    ScanSettings,
    TimeInstant,
    next_channel,
)
from .errors import ClockMismatchError, ConfigError

# Gap between the per-channel transmissions inside one advertising event.
# Real radios hop in well under a millisecond; the exact value only has to
# be small against every scan window in use.
INTER_BEACON_GAP = Duration(400_000)

_ALL_CHANNELS = tuple(Channel.of(c) for c in ADVERTISING_CHANNELS)


def substream(seed: int, tag: str) -> random.Random:
    """Independent deterministic generator for one concern of a run.

    String seeding hashes with SHA-512 under the hood, so distinct tags give
    unrelated streams and results do not depend on platform hash settings.
    """
    rng = random.Random()
    rng.seed(f"{seed}:{tag}")
    return rng


@dataclass(frozen=True, slots=True)
class AdvertisingEvent:
    """One advertising event: the same payload sent on each listed channel.

    Beacons go out back to back, ``INTER_BEACON_GAP`` apart, in the order of
    ``channels`` (compliant devices use 37, 38, 39).
    """

    start: TimeInstant
    device_id: str
    channels: tuple[Channel, ...] = _ALL_CHANNELS

    def beacons(self):
        for i, ch in enumerate(self.channels):
            yield TimeInstant(self.start.ns + i * INTER_BEACON_GAP.ns, self.start.clock), ch


@dataclass(frozen=True, slots=True)
class ScanWindow:
    """Half-open interval [start, end) during which one channel is scanned."""

    start: TimeInstant
    end: TimeInstant
    channel: Channel

    @property
    def duration(self) -> Duration:
        return self.end - self.start


def gen_advertising(
    settings: AdvSettings,
    device_id: str,
    start: TimeInstant,
    end: TimeInstant,
    rng: random.Random,
    channels: tuple[Channel, ...] = _ALL_CHANNELS,
) -> list[AdvertisingEvent]:
    """Advertising events from ``start`` up to and including ``end``.

    Consecutive events are separated by the base interval plus an integer
    nanosecond count drawn uniformly from [0, rho_max].
    """
    if start.clock != RADIO_CLOCK or end.clock != RADIO_CLOCK:
        raise ClockMismatchError("advertising runs on the radio clock")
    if not channels:
        raise ConfigError("an advertiser needs at least one channel")
    events = []
    t = start
    rho_span = settings.rho_max.ns
    while t.ns <= end.ns:
        events.append(AdvertisingEvent(t, device_id, channels))
        t = t + settings.base_interval + Duration(rng.randrange(rho_span + 1))
    return events


class ScannerBehavior:
    """How a particular scanner implementation lays out its windows.

    Subclasses produce the windows actually opened over a list of scan
    epochs (the spans between successive scan restarts).  ``tag`` is the
    stable name used in trace headers and experiment configs.
    """

    tag = "abstract"

    def effective_settings(self, settings: ScanSettings) -> ScanSettings:
        """Timing a calibrated detector would assume for this scanner.

        Most behaviors honour the requested settings; devices that ignore
        them report what they really do.
        """
        return settings

    def windows(
        self,
        settings: ScanSettings,
        epochs: list[tuple[TimeInstant, TimeInstant]],
        rng: random.Random,
    ) -> list[ScanWindow]:
        raise NotImplementedError


def _round_robin(start_ns, end_ns, interval_ns, window_ns, first: Channel):
    """Windows every ``interval_ns`` from ``start_ns``, channels cycling."""
    out = []
    ch = first
    k = 0
    while True:
        ws = start_ns + k * interval_ns
        if ws >= end_ns:
            return out
        we = min(ws + window_ns, end_ns)
        out.append(
            ScanWindow(TimeInstant(ws, RADIO_CLOCK), TimeInstant(we, RADIO_CLOCK), ch)
        )
        ch = next_channel(ch)
        k += 1


class Compliant(ScannerBehavior):
    """Restarts on channel 37 and cycles 37, 38, 39 at the requested cadence."""

    tag = "compliant"

    def windows(self, settings, epochs, rng):
        out = []
        for start, end in epochs:
            out.extend(
                _round_robin(
                    start.ns, end.ns, settings.scan_interval.ns, settings.scan_window.ns, CH37
                )
            )
        return out


class BalancedOffset(ScannerBehavior):
    """Settles into the compliant pattern only some time after each restart.

    For each epoch an offset is drawn uniformly from [0, offset_factor * T].
    Until the offset has elapsed the scanner keeps the requested cadence but
    picks channels at random; from the offset on it behaves compliantly,
    anchored at the offset instant rather than at the restart.
    """

    tag = "balanced-offset"

    def __init__(self, offset_factor: float = 2.0):
        if offset_factor < 0:
            raise ConfigError("offset_factor must be non-negative")
        self.offset_factor = offset_factor

    def windows(self, settings, epochs, rng):
        interval = settings.scan_interval.ns
        window = settings.scan_window.ns
        out = []
        for start, end in epochs:
            span = round(self.offset_factor * interval)
            settle_ns = min(start.ns + rng.randrange(span + 1), end.ns)
            k = 0
            while True:
                ws = start.ns + k * interval
                if ws >= settle_ns:
                    break
                we = min(ws + window, settle_ns)
                out.append(
                    ScanWindow(
                        TimeInstant(ws, RADIO_CLOCK),
                        TimeInstant(we, RADIO_CLOCK),
                        rng.choice(_ALL_CHANNELS),
                    )
                )
                k += 1
            out.extend(_round_robin(settle_ns, end.ns, interval, window, CH37))
        return out


class AltInterval(ScannerBehavior):
    """Compliant pattern, but at the device's own timing.

    Models hardware that ignores the requested scan parameters (seen on
    older handsets that always scan with a fixed interval).
    """

    tag = "alt-interval"

    def __init__(self, scan_interval: Duration, scan_window: Duration | None = None):
        if scan_window is None:
            scan_window = scan_interval
        self._own = ScanSettings(scan_interval=scan_interval, scan_window=scan_window)

    def effective_settings(self, settings):
        return self._own

    def windows(self, settings, epochs, rng):
        out = []
        for start, end in epochs:
            out.extend(
                _round_robin(
                    start.ns, end.ns, self._own.scan_interval.ns, self._own.scan_window.ns, CH37
                )
            )
        return out


class RapidToggle(ScannerBehavior):
    """Back-to-back short windows hopping to a random other channel each time.

    Window lengths are drawn uniformly from [min_window, max_window].  The
    requested interval and window are ignored; each restart begins on 37.
    """

    tag = "rapid-toggle"

    def __init__(
        self,
        min_window: Duration = Duration.from_seconds(0.100),
        max_window: Duration = Duration.from_seconds(0.200),
    ):
        if not 0 < min_window.ns <= max_window.ns:
            raise ConfigError("need 0 < min_window <= max_window")
        self.min_window = min_window
        self.max_window = max_window

    def windows(self, settings, epochs, rng):
        out = []
        for start, end in epochs:
            ch = CH37
            cursor = start.ns
            while cursor < end.ns:
                dur = rng.randrange(self.min_window.ns, self.max_window.ns + 1)
                we = min(cursor + dur, end.ns)
                out.append(
                    ScanWindow(TimeInstant(cursor, RADIO_CLOCK), TimeInstant(we, RADIO_CLOCK), ch)
                )
                ch = rng.choice([c for c in _ALL_CHANNELS if c != ch])
                cursor = we
        return out


class NonStandardOrder(ScannerBehavior):
    """Scans continuously but walks the channels in a random order.

    Windows fill the whole interval (window length equals the interval) and
    each next channel is drawn uniformly from the other two.  The walk is
    not reset by a scan restart.
    """

    tag = "nonstandard-order"

    def effective_settings(self, settings):
        return ScanSettings(
            scan_interval=settings.scan_interval, scan_window=settings.scan_interval
        )

    def windows(self, settings, epochs, rng):
        interval = settings.scan_interval.ns
        out = []
        ch = CH37
        for start, end in epochs:
            k = 0
            while True:
                ws = start.ns + k * interval
                if ws >= end.ns:
                    break
                we = min(ws + interval, end.ns)
                out.append(
                    ScanWindow(TimeInstant(ws, RADIO_CLOCK), TimeInstant(we, RADIO_CLOCK), ch)
                )
                ch = rng.choice([c for c in _ALL_CHANNELS if c != ch])
                k += 1
        return out


class ContinueChannel(ScannerBehavior):
    """Compliant timing, but a restart does not reset the channel cycle.

    A window cut short by a restart is scanned again first thing in the new
    epoch; otherwise the cycle simply continues where it stopped.  Only the
    window phase re-anchors at the restart.
    """

    tag = "continue-channel"

    def windows(self, settings, epochs, rng):
        interval = settings.scan_interval.ns
        window = settings.scan_window.ns
        out = []
        ch = CH37
        for start, end in epochs:
            made = _round_robin(start.ns, end.ns, interval, window, ch)
            out.extend(made)
            if made:
                last = made[-1]
                cut_short = last.end.ns == end.ns and last.duration.ns < window
                ch = last.channel if cut_short else next_channel(last.channel)
        return out


BEHAVIOR_TAGS = {
    cls.tag: cls
    for cls in (
        Compliant,
        BalancedOffset,
        AltInterval,
        RapidToggle,
        NonStandardOrder,
        ContinueChannel,
    )
}


def behavior_from_tag(
    tag: str, alt_interval: Duration = Duration.from_seconds(5.0)
) -> ScannerBehavior:
    """Instantiate a behavior by its stable name."""
    cls = BEHAVIOR_TAGS.get(tag)
    if cls is None:
        known = ", ".join(sorted(BEHAVIOR_TAGS))
        raise ConfigError(f"unknown scanner behavior {tag!r} (known: {known})")
    if cls is AltInterval:
        return AltInterval(scan_interval=alt_interval)
    return cls()


def gen_scan_windows(
    behavior: ScannerBehavior,
    settings: ScanSettings,
    restarts: list[TimeInstant],
    end: TimeInstant,
    rng: random.Random,
) -> list[ScanWindow]:
    """Windows a scanner opens between ``restarts[0]`` and ``end``.

    ``restarts`` are the radio instants at which scanning (re)starts; they
    must be strictly increasing and the first one must precede ``end``.
    """
    if not restarts:
        raise ConfigError("need at least one scan start instant")
    for r in restarts:
        if r.clock != RADIO_CLOCK:
            raise ClockMismatchError("scan restarts are radio instants")
    if end.clock != RADIO_CLOCK:
        raise ClockMismatchError("scan horizon is a radio instant")
    ns = [r.ns for r in restarts]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("scan restarts must be strictly increasing")
    if ns[0] >= end.ns:
        raise ConfigError("first scan start must precede the horizon")
    bounds = ns + [max(end.ns, ns[-1])]
    epochs = [
        (TimeInstant(a, RADIO_CLOCK), TimeInstant(min(b, end.ns), RADIO_CLOCK))
        for a, b in zip(bounds, bounds[1:])
    ]
    return behavior.windows(settings, epochs, rng)


@dataclass(frozen=True, slots=True)
class ClockModel:
    """Relation between the radio clock and the app clock.

    ``drift_rate`` is how many extra radio seconds elapse per app second
    (2e-4 means the radio runs 200 ppm fast relative to the app).  The
    ``jitter_range`` bounds a delivery latency added to every packet
    timestamp; it is drawn once per scan epoch, modelling a constant
    callback delay that changes when scanning restarts.
    """

    drift_rate: float = 0.0
    jitter_range: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if 1.0 + self.drift_rate <= 0.0:
            raise ConfigError("drift_rate must exceed -1")
        lo, hi = self.jitter_range
        if not 0.0 <= lo <= hi:
            raise ConfigError("need 0 <= jitter lower bound <= upper bound")

    def to_app_ns(self, radio_ns: int) -> int:
        return round(radio_ns / (1.0 + self.drift_rate))

    def draw_jitter(self, rng: random.Random) -> Duration:
        lo, hi = self.jitter_range
        lo_ns = round(lo * 1e9)
        hi_ns = round(hi * 1e9)
        return Duration(lo_ns + rng.randrange(hi_ns - lo_ns + 1))


@dataclass(frozen=True, slots=True)
class LossModel:
    """Independent per-packet loss."""

    drop_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ConfigError("drop_prob must be within [0, 1]")

    def drops(self, rng: random.Random) -> bool:
        return self.drop_prob > 0.0 and rng.random() < self.drop_prob


@dataclass(frozen=True, slots=True)
class RssiModel:
    """Log-distance received-power model with per-channel gain spread.

    ``channel_offset_db`` holds the hardware gain deviation of channels
    37, 38, 39 in that order; real chains have been seen to differ by well
    over 10 dB between advertising channels.  Frequency-dependent free-space
    loss is applied on top, so offsets of zero still leave the channels
    slightly apart.
    """

    tx_power_dbm: float = 0.0
    antenna_gain_db: float = 0.0
    path_loss_exponent: float = 2.0
    shadow_sigma_db: float = 0.0
    channel_offset_db: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.shadow_sigma_db < 0:
            raise ConfigError("shadow_sigma_db must be non-negative")
        if len(self.channel_offset_db) != 3:
            raise ConfigError("channel_offset_db needs one entry per advertising channel")

    def to_calibration(self) -> "ranging.CalibrationModel":
        """The exact noise-free model, as a calibration result."""
        intercept = (
            self.tx_power_dbm
            + self.antenna_gain_db
            - ranging.path_loss_db(CHANNEL_FREQ_HZ[37], 1.0)
        )
        return ranging.CalibrationModel(
            intercept_dbm=intercept,
            path_loss_exponent=self.path_loss_exponent,
            channel_offset_db=self.channel_offset_db,
        )


@dataclass(frozen=True, slots=True)
class PacketRecord:
    """One received advertising packet as the scanning app sees it."""

    recv: TimeInstant
    device_id: str
    channel: Channel | None
    rssi_dbm: float | None = None
    window_index: int = -1


@dataclass(frozen=True, slots=True)
class SimTrace:
    """A simulated capture: packets plus what the detector needs to run."""

    scan_settings: ScanSettings
    behavior_tag: str
    seed: int
    restarts: tuple[TimeInstant, ...]
    packets: tuple[PacketRecord, ...]


def app_anchor_times(restarts: list[TimeInstant], clock: ClockModel) -> list[TimeInstant]:
    """Restart instants as the app records them.

    The app reads its own clock when it issues the restart, so no delivery
    latency applies here, unlike packet timestamps.
    """
    return [TimeInstant(clock.to_app_ns(r.ns), APP_CLOCK) for r in restarts]


def simulate_reception(
    events: list[AdvertisingEvent],
    windows: list[ScanWindow],
    restarts: list[TimeInstant],
    clock: ClockModel,
    loss: LossModel,
    rng: random.Random,
) -> list[PacketRecord]:
    """Match transmissions against scan windows and timestamp the catches.

    A beacon is received iff some window covers its transmit instant on the
    matching channel.  Windows must be non-overlapping; all behaviors here
    produce such layouts.  The result is sorted by app timestamp.
    """
    beacons = []
    for ev in events:
        if ev.start.clock != RADIO_CLOCK:
            raise ClockMismatchError("advertising events are radio-clocked")
        for t, ch in ev.beacons():
            beacons.append((t.ns, ch, ev.device_id))
    beacons.sort(key=lambda b: b[0])
    windows = sorted(windows, key=lambda w: w.start.ns)
    restart_ns = [r.ns for r in restarts]
    # One latency draw per epoch, before any loss draws, keeps the stream
    # layout stable when loss settings change.
    jitters = [clock.draw_jitter(rng).ns for _ in restart_ns]

    received = []
    wi = 0
    n_windows = len(windows)
    for t, ch, dev in beacons:
        while wi < n_windows and windows[wi].end.ns <= t:
            wi += 1
        if wi == n_windows:
            break
        w = windows[wi]
        if w.start.ns <= t and w.channel == ch:
            if loss.drops(rng):
                continue
            epoch = bisect_right(restart_ns, t) - 1
            app_ns = clock.to_app_ns(t) + jitters[epoch]
            received.append(
                PacketRecord(
                    recv=TimeInstant(app_ns, APP_CLOCK),
                    device_id=dev,
                    channel=ch,
                    window_index=wi,
                )
            )
    received.sort(key=lambda p: p.recv.ns)
    return received


def attach_rssi(
    packets: list[PacketRecord],
    model: RssiModel,
    distances: dict[str, float],
    rng: random.Random,
) -> list[PacketRecord]:
    """Fill in RSSI readings given each device's distance in metres."""
    truth = model.to_calibration()
    out = []
    for p in packets:
        d = distances.get(p.device_id)
        if d is None:
            raise ConfigError(f"no distance given for device {p.device_id!r}")
        level = truth.predict_rssi(p.channel, d)
        if model.shadow_sigma_db > 0:
            level += rng.gauss(0.0, model.shadow_sigma_db)
        out.append(replace(p, rssi_dbm=level))
    return out
