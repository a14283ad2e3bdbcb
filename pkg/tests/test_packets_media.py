import pytest
from hypothesis import given, strategies as st

import oracles
from wlanvoip.errors import ConfigError
from wlanvoip.kernel import TICKS_PER_MS, TICKS_PER_SECOND
from wlanvoip.media import (
    CbrSource, FlowMetrics, JitterBuffer, Playout, RtpSource, cbr_source_tick, codec,
    codec_packetize, ftp_source_model, jitter_buffer_offer, overall_throughput,
    rtp_avg_e2e_delay, rtp_source_tick,
)
from wlanvoip.packets import (
    Delivery, Packet, PacketKind, encapsulate_voip, header_overhead, udp_delivery_contract,
)
from wlanvoip.phy import Reception


def test_encapsulation_bounds():
    assert encapsulate_voip(160).wire_bytes == 200
    assert encapsulate_voip(20).wire_bytes == 60
    with pytest.raises(ConfigError, match="codec payload"):
        encapsulate_voip(19)
    with pytest.raises(ConfigError):
        encapsulate_voip(161)


def test_header_overhead():
    assert header_overhead() == 40
    assert header_overhead() / encapsulate_voip(160).wire_bytes == pytest.approx(0.2)
    assert Packet(100, PacketKind.SIGNALING).wire_bytes == 128
    assert Packet(1000, PacketKind.FTP).wire_bytes == 1040


@given(st.integers(20, 160))
def test_wire_minus_payload_is_constant(payload):
    assert encapsulate_voip(payload).wire_bytes - payload == 40 == oracles.voip_wire_bytes(0)


def test_udp_contract_never_retransmits():
    pkt = encapsulate_voip(160)
    assert udp_delivery_contract(pkt, Reception.DELIVERED) is Delivery.DELIVERED
    for lost in (Reception.LOST_SNR, Reception.LOST_COLLISION):
        assert udp_delivery_contract(pkt, lost) is Delivery.SILENTLY_LOST


def test_codec_examples():
    assert codec_packetize(codec("G711")) == (160, 20 * TICKS_PER_MS)
    assert codec_packetize(codec("G711", frame_ms=15)) == (120, 15 * TICKS_PER_MS)
    with pytest.raises(ConfigError, match="aggregation"):
        codec_packetize(codec("G729", frame_ms=10, frames_per_packet=1))
    assert codec_packetize(codec("G729")) == (20, 20 * TICKS_PER_MS)
    # 6.3 kbit/s x 30 ms = 23.625 bytes, rounded up
    assert codec_packetize(codec("G.723.1"))[0] == 24 == oracles.codec_payload_bytes(6300, 30)
    with pytest.raises(ConfigError):
        codec("iLBC")


def test_rtp_source_one_second():
    src = RtpSource("f", codec("G711"), start=0)
    times = src.emission_times(TICKS_PER_SECOND)
    assert len(times) == 50
    assert len(times) * 160 == 8000
    assert len(times) * 200 == 10_000
    assert RtpSource("f", codec("G711"), start=500, stop=500).emission_times(10**6) == []


def test_rtp_source_has_no_drift():
    src = RtpSource("f", codec("G711"), start=10 * TICKS_PER_SECOND)
    now = src.start
    for _ in range(134 * 50):
        pkt, nxt = rtp_source_tick(src, now)
        assert nxt - now == 20_000
        now = nxt
    assert now == src.start + 134 * TICKS_PER_SECOND
    assert pkt.seq_no == 134 * 50 - 1


def test_two_sources_same_schedule_separate_seq():
    a = RtpSource("a", codec("G711"), start=0)
    b = RtpSource("b", codec("G711"), start=0)
    assert a.emission_times(10**6) == b.emission_times(10**6)
    pa, _ = a.tick(0)
    pb, _ = b.tick(0)
    assert (pa.flow_id, pa.seq_no) != (pb.flow_id, pb.seq_no) and pa.seq_no == pb.seq_no == 0


def test_cbr_period():
    src = CbrSource("c", 409_600, 512)
    assert src.period == 10_000
    _, nxt = cbr_source_tick(src, 0)
    assert nxt == 10_000
    with pytest.raises(ConfigError):
        CbrSource("c", 0, 512)


@given(st.floats(1e3, 1e7), st.integers(1, 1472), st.integers(1, 2000))
def test_cbr_schedule_does_not_accumulate_rounding(rate, size, k):
    src = CbrSource("c", rate, size)
    assert abs(src.fire_time(k) - k * src.period) <= 0.5


def test_ftp_lossless_serialized():
    ftp = ftp_source_model(10 * 1000, 1000, "ftp")
    pkt = ftp.next_segment(0)
    sent = [pkt]
    while pkt is not None:
        with pytest.raises(ConfigError):
            ftp.next_segment(0)
        pkt = ftp.on_outcome(True, 0)
        if pkt is not None:
            sent.append(pkt)
    assert len(sent) == ftp.emissions == 10
    assert [p.seq_no for p in sent] == list(range(10))


def test_ftp_retransmits_until_delivered():
    ftp = ftp_source_model(2500, 1000, "ftp")
    pkt = ftp.next_segment(0)
    pkt = ftp.on_outcome(False, 1)
    assert pkt.seq_no == 0
    while pkt is not None:
        pkt = ftp.on_outcome(True, 2)
    assert ftp.acked_bytes == 2500 and ftp.retransmissions == 1 and ftp.emissions == 4


def test_ftp_empty_file():
    assert ftp_source_model(0, 1000, "ftp").next_segment(0) is None


def _voice(seq):
    return encapsulate_voip(160, seq_no=seq)


def test_jitter_buffer_boundaries():
    jb = JitterBuffer(depth=60_000, period=20_000)
    assert jitter_buffer_offer(jb, _voice(0), 1000) is Playout.QUEUED
    # seq 1 sits at its slot plus 59 ms: inside the 60 ms depth
    assert jitter_buffer_offer(jb, _voice(1), 1000 + 20_000 + 59_000) is Playout.QUEUED
    deadline = oracles.jitter_deadline(1000, 60_000, 2, 0, 20_000)
    assert jb.deadline(2) == deadline
    assert jitter_buffer_offer(jb, _voice(2), deadline) is Playout.QUEUED
    assert jitter_buffer_offer(jb, _voice(3), jb.deadline(3) + 1) is Playout.DROPPED_LATE
    assert jb.dropped_late == 1 and jb.queued == [0, 1, 2]


@given(st.integers(1, 200_000), st.integers(0, 50_000))
def test_constant_delay_never_drops(depth, delay):
    jb = JitterBuffer(depth=depth, period=20_000)
    for seq in range(50):
        jb.offer(_voice(seq), seq * 20_000 + delay)
    assert jb.dropped_late == 0


@given(st.lists(st.integers(0, 120_000), min_size=1, max_size=40),
       st.integers(1, 100_000), st.integers(1, 100_000))
def test_smaller_buffer_never_drops_less(delays, d1, d2):
    lo, hi = sorted((d1, d2))

    def drops(depth):
        jb = JitterBuffer(depth=depth, period=20_000)
        for seq, d in enumerate(delays):
            jb.offer(_voice(seq), seq * 20_000 + d)
        return jb.dropped_late

    assert drops(lo) >= drops(hi)


def test_mean_delay_and_throughput():
    m = FlowMetrics()
    assert rtp_avg_e2e_delay(m) is None
    m.record_delivery(500, 10, delay=40_000)
    m.record_delivery(500, 20, delay=60_000)
    assert rtp_avg_e2e_delay(m) == pytest.approx(0.05)
    assert overall_throughput(m, TICKS_PER_SECOND) == 8000.0

    big = FlowMetrics()
    big.record_delivery(8000, 0)
    assert overall_throughput(big, TICKS_PER_SECOND // 2) == 128_000.0
    with pytest.raises(ConfigError):
        overall_throughput(big, 0)


@given(st.lists(st.integers(0, 1500), max_size=30), st.integers(1, 10**8))
def test_throughput_times_window_is_bits(sizes, window):
    m = FlowMetrics()
    for s in sizes:
        m.record_delivery(s, 0)
    assert overall_throughput(m, window) * window / TICKS_PER_SECOND == pytest.approx(8 * sum(sizes))
