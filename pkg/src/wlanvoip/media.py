"""Voice codecs, RTP/CBR/FTP sources, the receiver jitter buffer and media metrics."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import ConfigError
from .kernel import TICKS_PER_MS, TICKS_PER_SECOND
from .packets import Packet, PacketKind, encapsulate_voip, MAX_VOIP_PAYLOAD, MIN_VOIP_PAYLOAD

SAMPLE_RATE = 8000


@dataclass(frozen=True)
class Codec:
    name: str
    bit_rate: int  # bit/s
    frame_period: int  # microseconds per codec frame
    frames_per_packet: int = 1
    sample_rate: int = SAMPLE_RATE

    @property
    def packet_period(self) -> int:
        return self.frame_period * self.frames_per_packet


CODECS = {
    "G711": Codec("G711", 64_000, 20 * TICKS_PER_MS),
    "G729": Codec("G729", 8_000, 10 * TICKS_PER_MS, frames_per_packet=2),
    "G7231": Codec("G7231", 6_300, 30 * TICKS_PER_MS),
}


def codec(name: str, frame_ms: float | None = None, frames_per_packet: int | None = None) -> Codec:
    key = name.upper().replace(".", "")
    if key not in CODECS:
        raise ConfigError(f"unknown codec {name!r}; known: {', '.join(CODECS)}")
    base = CODECS[key]
    period = base.frame_period if frame_ms is None else int(round(frame_ms * TICKS_PER_MS))
    fpp = base.frames_per_packet if frames_per_packet is None else frames_per_packet
    if period <= 0 or fpp < 1:
        raise ConfigError(f"codec {name}: frame period and aggregation must be positive")
    return Codec(base.name, base.bit_rate, period, fpp)


def codec_packetize(c: Codec) -> tuple[int, int]:
    """Return ``(payload_bytes, packet_period_ticks)``; payload rounds up to whole bytes."""
    bits_num = c.bit_rate * c.frame_period * c.frames_per_packet
    payload = -(-bits_num // (8 * TICKS_PER_SECOND))
    if not MIN_VOIP_PAYLOAD <= payload <= MAX_VOIP_PAYLOAD:
        raise ConfigError(
            f"codec {c.name} with {c.frame_period / TICKS_PER_MS:g} ms frames x"
            f"{c.frames_per_packet} gives a {payload}-byte payload, outside "
            f"[{MIN_VOIP_PAYLOAD}, {MAX_VOIP_PAYLOAD}]; change frame size or aggregation"
        )
    return payload, c.packet_period


class RtpSource:
    """Jitter-free periodic voice source for one direction of a call."""

    def __init__(self, flow_id: str, c: Codec, start: int, stop: int | None = None):
        self.flow_id = flow_id
        self.codec = c
        self.payload_bytes, self.period = codec_packetize(c)
        self.start = start
        self.stop = stop
        self.seq_no = 0

    def tick(self, now: int) -> tuple[Packet, int]:
        pkt = encapsulate_voip(self.payload_bytes, seq_no=self.seq_no, created_at=now,
                               flow_id=self.flow_id)
        self.seq_no += 1
        return pkt, self.start + self.seq_no * self.period

    def emission_times(self, until: int) -> list[int]:
        """Emission instants in ``[start, until)``; exact integer arithmetic."""
        end = until if self.stop is None else min(until, self.stop)
        if end <= self.start:
            return []
        n = -(-(end - self.start) // self.period)
        return [self.start + k * self.period for k in range(n)]


def rtp_source_tick(flow: RtpSource, now: int) -> tuple[Packet, int]:
    return flow.tick(now)


class CbrSource:
    def __init__(self, flow_id: str, rate: float, pkt_bytes: int, start: int = 0):
        if not rate > 0:
            raise ConfigError("CBR rate must be positive")
        if pkt_bytes <= 0:
            raise ConfigError("CBR packet size must be positive")
        self.flow_id = flow_id
        self.rate = rate
        self.pkt_bytes = pkt_bytes
        self.start = start
        self.seq_no = 0

    @property
    def period(self) -> float:
        return self.pkt_bytes * 8 * TICKS_PER_SECOND / self.rate

    def fire_time(self, k: int) -> int:
        # Computed from the index so rounding never accumulates.
        return self.start + int(round(k * self.period))

    def tick(self, now: int) -> tuple[Packet, int]:
        pkt = Packet(self.pkt_bytes, PacketKind.CBR, flow_id=self.flow_id,
                     seq_no=self.seq_no, created_at=now)
        self.seq_no += 1
        return pkt, self.fire_time(self.seq_no)


def cbr_source_tick(source: CbrSource, now: int) -> tuple[Packet, int]:
    return source.tick(now)


class FtpTransfer:
    """Stop-and-wait bulk transfer.

    One segment is outstanding at a time. A delivered segment advances the
    transfer; a lost one is sent again until it gets through.
    """

    def __init__(self, flow_id: str, file_bytes: int, segment_bytes: int, mtu_payload: int = 1460):
        if segment_bytes <= 0 or segment_bytes > mtu_payload:
            raise ConfigError(f"FTP segment size must be in [1, {mtu_payload}] bytes")
        if file_bytes < 0:
            raise ConfigError("FTP file size must be non-negative")
        self.flow_id = flow_id
        self.file_bytes = file_bytes
        self.segment_bytes = segment_bytes
        self.acked_bytes = 0
        self.emissions = 0
        self.retransmissions = 0
        self.outstanding: Packet | None = None
        self._next_seq = 0

    @property
    def done(self) -> bool:
        return self.acked_bytes >= self.file_bytes

    def next_segment(self, now: int) -> Packet | None:
        if self.outstanding is not None:
            raise ConfigError("stop-and-wait: a segment is already outstanding")
        if self.done:
            return None
        size = min(self.segment_bytes, self.file_bytes - self.acked_bytes)
        pkt = Packet(size, PacketKind.FTP, flow_id=self.flow_id, seq_no=self._next_seq,
                     created_at=now)
        self.outstanding = pkt
        self.emissions += 1
        return pkt

    def on_outcome(self, delivered: bool, now: int) -> Packet | None:
        """Record the fate of the outstanding segment; return the next one to send."""
        pkt = self.outstanding
        self.outstanding = None
        if delivered:
            self.acked_bytes += pkt.payload_bytes
            self._next_seq += 1
            return self.next_segment(now)
        self.retransmissions += 1
        self.emissions += 1
        again = Packet(pkt.payload_bytes, PacketKind.FTP, flow_id=self.flow_id,
                       seq_no=pkt.seq_no, created_at=now)
        self.outstanding = again
        return again


def ftp_source_model(file_bytes: int, segment_bytes: int, flow: str) -> FtpTransfer:
    return FtpTransfer(flow, file_bytes, segment_bytes)


class Playout(enum.Enum):
    QUEUED = "queued"
    DROPPED_LATE = "dropped_late"


@dataclass
class JitterBuffer:
    """Fixed-offset playout buffer anchored on the first arrival.

    Packet ``seq`` is due at ``first_arrival + playout_offset + (seq -
    first_seq) * period``; anything later is dropped.
    """

    depth: int = 60 * TICKS_PER_MS
    period: int = 20 * TICKS_PER_MS
    playout_offset: int | None = None
    queued: list = field(default_factory=list)
    dropped_late: int = 0
    first_arrival: int | None = None
    first_seq: int | None = None

    def __post_init__(self):
        if self.playout_offset is None:
            self.playout_offset = self.depth

    def deadline(self, seq_no: int) -> int:
        return self.first_arrival + self.playout_offset + (seq_no - self.first_seq) * self.period

    def offer(self, pkt: Packet, arrived: int) -> Playout:
        if self.first_arrival is None:
            self.first_arrival = arrived
            self.first_seq = pkt.seq_no
        if arrived > self.deadline(pkt.seq_no):
            self.dropped_late += 1
            return Playout.DROPPED_LATE
        self.queued.append(pkt.seq_no)
        return Playout.QUEUED


def jitter_buffer_offer(jb: JitterBuffer, pkt: Packet, arrived: int) -> Playout:
    return jb.offer(pkt, arrived)


@dataclass
class FlowMetrics:
    bytes_sent: int = 0
    bytes_received: int = 0
    rtp_delay_sum: int = 0
    rtp_delivered: int = 0
    payload_bits_delivered: int = 0
    window_bits: dict = field(default_factory=dict)
    bin_width: int = TICKS_PER_SECOND

    def record_delivery(self, payload_bytes: int, at: int, delay: int | None = None):
        bits = 8 * payload_bytes
        self.payload_bits_delivered += bits
        b = at // self.bin_width
        self.window_bits[b] = self.window_bits.get(b, 0) + bits
        if delay is not None:
            self.rtp_delay_sum += delay
            self.rtp_delivered += 1


def rtp_avg_e2e_delay(m: FlowMetrics) -> float | None:
    if m.rtp_delivered == 0:
        return None
    return m.rtp_delay_sum / m.rtp_delivered / TICKS_PER_SECOND


def overall_throughput(m: FlowMetrics | list, window: int) -> float:
    """Delivered payload bits per second over ``window`` ticks."""
    if window <= 0:
        raise ConfigError("throughput window must be positive")
    flows = m if isinstance(m, (list, tuple)) else [m]
    bits = sum(f.payload_bits_delivered for f in flows)
    return bits * TICKS_PER_SECOND / window
