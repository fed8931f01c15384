"""Advertising-channel identification from packet arrival times.

A compliant scanner restarts on channel 37 and then cycles 37, 38, 39, one
channel per scan interval.  Knowing when scanning started, the elapsed time
of a packet pins down the interval slot it arrived in and therefore the
channel it was received on; no radio access is needed.  Packets close to a
slot boundary are left unclassified (the guard zone) because clock drift
and delivery latency make the slot ambiguous there.

All classification arithmetic is integer nanoseconds, so results are exact
however long the scan has been running.
"""

from __future__ import annotations

import enum
from bisect import bisect_right
from dataclasses import dataclass, field

from .core import Channel, Duration, ScanSettings, TimeInstant
from .errors import ConfigError

DEFAULT_GUARD = Duration.from_seconds(0.2)
# Android silently downgrades scans that run longer than 30 minutes, so a
# session must restart well before that.
MAX_SCAN_TIME_CEILING = Duration.from_seconds(1800.0)
DEFAULT_MAX_SCAN_TIME = Duration.from_seconds(600.0)
DEFAULT_IDLE_TIMEOUT = Duration.from_seconds(300.0)


class ClassKind(enum.Enum):
    """What a packet's timing says about it."""

    CHANNEL = "channel"
    GUARD = "guard"
    PRE_START = "pre-start"


@dataclass(frozen=True, slots=True)
class Classification:
    """Outcome of classifying one packet against one scan-start anchor.

    ``slot_index`` counts scan intervals since the anchor.  ``slot_start``
    and ``slot_end`` bound the full interval the packet fell into, which is
    also the tightest window reconstruction the arrival time supports.
    They are present for guard packets too (the nearest slot by division);
    only the channel is withheld there.  Pre-start packets carry nothing.
    """

    kind: ClassKind
    channel: Channel | None = None
    slot_index: int | None = None
    slot_start: TimeInstant | None = None
    slot_end: TimeInstant | None = None
    offset_in_slot: Duration | None = None

    @property
    def label(self) -> str:
        """Stable text form: the channel id, "guard" or "pre-start"."""
        if self.kind is ClassKind.CHANNEL:
            return str(self.channel.id)
        return self.kind.value


@dataclass(frozen=True, slots=True)
class DetectorConfig:
    """Tuning for the classifier and the scanning state machine."""

    scan_settings: ScanSettings
    guard: Duration = DEFAULT_GUARD
    max_scan_time: Duration = DEFAULT_MAX_SCAN_TIME
    idle_timeout: Duration = DEFAULT_IDLE_TIMEOUT

    def __post_init__(self):
        if not 0 <= self.guard.ns < self.scan_settings.scan_interval.ns:
            raise ConfigError("guard must be non-negative and below the scan interval")
        if not 0 < self.max_scan_time.ns <= MAX_SCAN_TIME_CEILING.ns:
            raise ConfigError(
                f"max_scan_time must be positive and at most "
                f"{MAX_SCAN_TIME_CEILING.seconds:.0f} s"
            )
        if self.idle_timeout.ns <= 0:
            raise ConfigError("idle_timeout must be positive")


def classify_time(
    recv: TimeInstant, anchor: TimeInstant, config: DetectorConfig
) -> Classification:
    """Classify one arrival against the most recent scan start.

    ``recv`` and ``anchor`` must be on the same clock; subtracting them
    enforces that.  A packet is in the guard zone when it sits within half
    a guard length of either edge of its slot.
    """
    delta = (recv - anchor).ns
    if delta < 0:
        return Classification(kind=ClassKind.PRE_START)
    interval = config.scan_settings.scan_interval.ns
    slot, rem = divmod(delta, interval)
    start = TimeInstant(anchor.ns + slot * interval, anchor.clock)
    end = TimeInstant(anchor.ns + (slot + 1) * interval, anchor.clock)
    # Doubling both sides keeps the comparison in integers for odd guards.
    guard = config.guard.ns
    if 2 * rem < guard or 2 * rem > 2 * interval - guard:
        return Classification(
            kind=ClassKind.GUARD,
            slot_index=slot,
            slot_start=start,
            slot_end=end,
            offset_in_slot=Duration(rem),
        )
    return Classification(
        kind=ClassKind.CHANNEL,
        channel=Channel.of(37 + slot % 3),
        slot_index=slot,
        slot_start=start,
        slot_end=end,
        offset_in_slot=Duration(rem),
    )


class SessionMode(enum.Enum):
    LOW_POWER = "low-power"
    LOW_LATENCY = "low-latency"


@dataclass
class DetectorSession:
    """Scanning state machine for live classification.

    The session idles in a low-power background scan.  The first packet
    from a target switches it to continuous scanning with a fresh restart,
    which is the instant all later packets are classified against.  The
    scan is restarted whenever it has run for ``max_scan_time`` (drift
    accumulates from the anchor, and the platform degrades overlong scans)
    and dropped back to low power after ``idle_timeout`` without a packet.

    Drive it with :func:`session_on_packet` for every arrival and
    :func:`session_on_tick` from a timer.
    """

    config: DetectorConfig
    mode: SessionMode = SessionMode.LOW_POWER
    anchor: TimeInstant | None = None
    last_signal: TimeInstant | None = None
    restarts: list[TimeInstant] = field(default_factory=list)

    def _restart(self, now: TimeInstant) -> None:
        self.anchor = now
        self.restarts.append(now)

    def on_packet(self, recv: TimeInstant) -> Classification | None:
        """Classify an arrival, or absorb it if it only (re)arms the scan.

        Returns None for the packet that triggers the switch out of low
        power: the scan restarts on detection, so that packet has no slot.
        """
        self.last_signal = recv
        if self.mode is SessionMode.LOW_POWER:
            self.mode = SessionMode.LOW_LATENCY
            self._restart(recv)
            return None
        if (recv - self.anchor).ns > self.config.max_scan_time.ns:
            # A timer should normally have restarted us; recover here so a
            # tickless driver still never classifies against a stale anchor.
            self._restart(recv)
            return None
        return classify_time(recv, self.anchor, self.config)

    def on_tick(self, now: TimeInstant) -> str | None:
        """Advance time-based transitions; returns "restart", "idle" or None."""
        if self.mode is not SessionMode.LOW_LATENCY:
            return None
        if self.last_signal is not None and (now - self.last_signal).ns > self.config.idle_timeout.ns:
            self.mode = SessionMode.LOW_POWER
            self.anchor = None
            return "idle"
        if self.anchor is not None and (now - self.anchor).ns > self.config.max_scan_time.ns:
            self._restart(now)
            return "restart"
        return None


def session_on_packet(session: DetectorSession, recv: TimeInstant) -> Classification | None:
    return session.on_packet(recv)


def session_on_tick(session: DetectorSession, now: TimeInstant) -> str | None:
    return session.on_tick(now)


@dataclass(frozen=True, slots=True)
class ClassifiedPacket:
    """A trace packet with its classification and the anchor used."""

    packet: object
    result: Classification
    anchor: TimeInstant


def classify_trace(packets, restarts, config: DetectorConfig) -> list[ClassifiedPacket]:
    """Classify a whole capture against a known restart schedule.

    ``restarts`` are the scan-start instants the app recorded, on the same
    clock as the packet timestamps.  Each packet is classified against the
    latest restart at or before it; packets older than every restart come
    back as pre-start.  ``packets`` only need a ``recv`` instant attribute,
    so both simulated and file-loaded records work.
    """
    restarts = sorted(restarts, key=lambda r: r.ns)
    if not restarts:
        raise ConfigError("need at least one scan start to classify against")
    starts_ns = [r.ns for r in restarts]
    out = []
    for p in packets:
        # Latest restart at or before the packet; packets may arrive in any
        # order here even though trace files keep them sorted.
        ri = max(bisect_right(starts_ns, p.recv.ns) - 1, 0)
        anchor = restarts[ri]
        out.append(ClassifiedPacket(p, classify_time(p.recv, anchor, config), anchor))
    return out
