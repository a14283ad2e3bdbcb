"""Applications running on the simulated nodes and the per-stream byte ledger.

Every packet an application creates belongs to one stream. A stream is a
flow id plus a direction tag, for example ``voip-4-5:i>r`` for traffic from
the call initiator to the receiver or ``voip-4-5:i>s`` for messages
addressed to the signaling server. Each packet ends up in exactly one of
three places: received, lost, or still in flight when the run stops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .kernel import TICKS_PER_SECOND
from .media import CbrSource, FtpTransfer, JitterBuffer, Playout, RtpSource, codec
from .packets import Packet, PacketKind
from .signaling import (
    STEP,
    CallPhase,
    CallState,
    HangUp,
    ProxyNode,
    Protocol,
    Register,
    Role,
    StartCall,
    TRANSPORT_OVERHEAD,
    fail,
    retransmit,
)

DIRECTION_TAGS = {
    (Role.INITIATOR, Role.RECEIVER): "i>r",
    (Role.RECEIVER, Role.INITIATOR): "r>i",
    (Role.INITIATOR, Role.SERVER): "i>s",
    (Role.RECEIVER, Role.SERVER): "r>s",
    (Role.SERVER, Role.INITIATOR): "s>i",
    (Role.SERVER, Role.RECEIVER): "s>r",
}


@dataclass
class StreamStats:
    sent_packets: int = 0
    sent_bytes: int = 0
    received_packets: int = 0
    received_bytes: int = 0
    lost_packets: int = 0
    lost_bytes: int = 0
    lost_reasons: dict = field(default_factory=dict)

    @property
    def in_flight_packets(self) -> int:
        return self.sent_packets - self.received_packets - self.lost_packets

    @property
    def in_flight_bytes(self) -> int:
        return self.sent_bytes - self.received_bytes - self.lost_bytes

    @property
    def unaccounted_bytes(self) -> int:
        """Bytes not received by the end of the run: dropped plus still in flight."""
        return self.sent_bytes - self.received_bytes


class Ledger:
    def __init__(self):
        self.streams: dict[str, StreamStats] = {}
        self._open: dict[int, str] = {}

    def stream(self, key: str) -> StreamStats:
        s = self.streams.get(key)
        if s is None:
            s = self.streams[key] = StreamStats()
        return s

    def sent(self, pkt: Packet):
        s = self.stream(pkt.stream)
        s.sent_packets += 1
        s.sent_bytes += pkt.wire_bytes
        self._open[id(pkt)] = pkt.stream

    def _close(self, pkt: Packet) -> bool:
        return self._open.pop(id(pkt), None) is not None

    def received(self, pkt: Packet) -> bool:
        if not self._close(pkt):
            return False
        s = self.streams[pkt.stream]
        s.received_packets += 1
        s.received_bytes += pkt.wire_bytes
        return True

    def lost(self, pkt: Packet, reason: str) -> bool:
        if not self._close(pkt):
            return False
        s = self.streams[pkt.stream]
        s.lost_packets += 1
        s.lost_bytes += pkt.wire_bytes
        s.lost_reasons[reason] = s.lost_reasons.get(reason, 0) + 1
        return True


class MediaStats:
    """Receiver-side RTP bookkeeping for one direction of a call."""

    def __init__(self, period: int, depth: int):
        self.delay_sum = 0
        self.delivered = 0
        self.payload_bits = 0
        self.bins: dict[int, int] = {}
        self.arrivals: list[tuple[int, int]] = []  # (tick, payload bits)
        self.jitter = JitterBuffer(depth=depth, period=period)

    def record(self, pkt: Packet, now: int):
        self.delay_sum += now - pkt.created_at
        self.delivered += 1
        bits = 8 * pkt.payload_bytes
        self.payload_bits += bits
        self.arrivals.append((now, bits))
        b = now // TICKS_PER_SECOND
        self.bins[b] = self.bins.get(b, 0) + bits
        self.jitter.offer(pkt, now)


class App:
    kind = ""

    def __init__(self, sim, spec):
        self.sim = sim
        self.spec = spec
        self.id = spec.id

    def start(self):
        raise NotImplementedError

    def on_packet(self, node_id: int, pkt: Packet):
        raise NotImplementedError

    def on_lost(self, pkt: Packet, reason: str):
        pass

    def _packet(self, payload: int, kind: PacketKind, src: int, dst: int, tag: str,
                seq: int = 0, message=None) -> Packet:
        return Packet(payload, kind, flow_id=self.id, seq_no=seq, created_at=self.sim.kernel.now,
                      src=src, dst=dst, stream=f"{self.id}:{tag}", message=message)

    def _emit(self, pkt: Packet):
        self.sim.ledger.sent(pkt)
        self.sim.nodes[pkt.src].send(pkt)


class CbrApp(App):
    kind = "cbr"

    def start(self):
        self.source = CbrSource(self.id, self.spec.rate_bps, self.spec.packet_bytes,
                                start=self.spec.start)
        self.delivered_bits = 0
        self.bins: dict[int, int] = {}
        if self.spec.start < self.spec.stop:
            self.sim.kernel.schedule(self.spec.start, self._fire)

    def _fire(self, _=None):
        now = self.sim.kernel.now
        src = self.source
        seq = src.seq_no
        pkt, nxt = src.tick(now)
        self._emit(self._packet(pkt.payload_bytes, PacketKind.CBR, self.spec.src, self.spec.dst,
                                "data", seq))
        if nxt < self.spec.stop:
            self.sim.kernel.schedule(nxt, self._fire)

    def on_packet(self, node_id, pkt):
        if self.sim.ledger.received(pkt):
            self.delivered_bits += 8 * pkt.payload_bytes
            b = self.sim.kernel.now // TICKS_PER_SECOND
            self.bins[b] = self.bins.get(b, 0) + 8 * pkt.payload_bytes


class FtpApp(App):
    """Stop-and-wait bulk transfer; the sender learns each segment's fate."""

    kind = "ftp"

    def start(self):
        self.transfer = FtpTransfer(self.id, self.spec.file_bytes, self.spec.segment_bytes)
        self.delivered_bits = 0
        self.bins: dict[int, int] = {}
        self.finished_at = None
        if self.spec.start < self.spec.stop:
            self.sim.kernel.schedule(self.spec.start, self._begin)

    def _begin(self, _=None):
        self._send(self.transfer.next_segment(self.sim.kernel.now))

    def _send(self, seg: Packet | None):
        if seg is None:
            if self.transfer.done and self.finished_at is None:
                self.finished_at = self.sim.kernel.now
            return
        if self.sim.kernel.now >= self.spec.stop:
            return
        self._emit(self._packet(seg.payload_bytes, PacketKind.FTP, self.spec.src, self.spec.dst,
                                "data", seg.seq_no))

    def on_packet(self, node_id, pkt):
        if not self.sim.ledger.received(pkt):
            return
        self.delivered_bits += 8 * pkt.payload_bytes
        b = self.sim.kernel.now // TICKS_PER_SECOND
        self.bins[b] = self.bins.get(b, 0) + 8 * pkt.payload_bytes
        self._send(self.transfer.on_outcome(True, self.sim.kernel.now))

    def on_lost(self, pkt, reason):
        self._send(self.transfer.on_outcome(False, self.sim.kernel.now))


class CallAgent:
    """One side of a call: feeds the signaling state machine and runs its
    retransmission timer."""

    def __init__(self, app: "VoipApp", role: Role, node_id: int):
        self.app = app
        self.sim = app.sim
        self.role = role
        self.node_id = node_id
        self.cfg = app.cfg
        self.protocol = app.protocol
        self.state = CallState(app.protocol, role, call_id=app.id)
        self._timer = None
        self._tries = 0
        self.retransmissions = 0

    def feed(self, inp):
        now = self.sim.kernel.now
        before = self.state
        self.state, out = STEP[self.protocol](self.state, inp, now, self.cfg)
        for msg in out:
            self.app.send_message(self, msg)
        st = self.state
        if st.progress != before.progress or st.phase is not before.phase:
            self._arm()
        if st.established_at is not None and before.established_at is None:
            self.app.on_established(self)
        if st.phase is CallPhase.TERMINATED and before.phase is not CallPhase.TERMINATED:
            self.app.on_terminated(self)

    def _arm(self):
        k = self.sim.kernel
        k.cancel(self._timer)
        self._timer = None
        if self.state.awaiting and self.state.last_out:
            self._tries = 1
            self._timer = k.after(self.cfg.retransmit_initial, self._on_timer)

    def _on_timer(self, _=None):
        self._timer = None
        st = self.state
        if not (st.awaiting and st.last_out):
            return
        now = self.sim.kernel.now
        if self._tries >= self.cfg.retransmit_max_tries:
            self.state = fail(st, now)
            self.app.on_terminated(self)
            return
        self.state, out = retransmit(st, now)
        self.retransmissions += 1
        for msg in out:
            self.app.send_message(self, msg)
        self._tries += 1
        wait = self.cfg.retransmit_initial * self.cfg.retransmit_factor ** (self._tries - 1)
        self._timer = self.sim.kernel.after(wait, self._on_timer)


class VoipApp(App):
    """A call between two nodes: signaling set-up through the server node,
    then RTP in both directions until hang-up."""

    kind = "voip"

    def __init__(self, sim, spec, protocol: Protocol, cfg, server_node: int):
        super().__init__(sim, spec)
        self.protocol = protocol
        self.cfg = cfg
        self.server_node = server_node
        self.codec = codec(spec.codec, spec.frame_ms, spec.frames_per_packet)
        self.agents = {
            Role.INITIATOR: CallAgent(self, Role.INITIATOR, spec.src),
            Role.RECEIVER: CallAgent(self, Role.RECEIVER, spec.dst),
        }
        self.node_of = {Role.INITIATOR: spec.src, Role.RECEIVER: spec.dst, Role.SERVER: server_node}
        self.sources: dict = {}
        period = self.codec.packet_period
        self.media = {
            Role.RECEIVER: MediaStats(period, spec.jitter_buffer),  # media arriving at receiver
            Role.INITIATOR: MediaStats(period, spec.jitter_buffer),
        }
        self.signaling_sent = {Role.INITIATOR: 0, Role.RECEIVER: 0}

    def start(self):
        k = self.sim.kernel
        spec = self.spec
        if spec.start >= spec.stop:
            return
        if self.protocol is Protocol.SIP:
            reg_at = max(0, spec.start - self.cfg.register_lead)
            for agent in self.agents.values():
                k.schedule(reg_at, lambda _, a=agent: a.feed(Register()))
        k.schedule(spec.start, lambda _: self.agents[Role.INITIATOR].feed(StartCall()))
        k.schedule(spec.stop, self._stop)

    def send_message(self, agent: CallAgent, msg):
        src = self.node_of[agent.role]
        # End-to-end messages travel through the server node, which forwards them.
        dst = self.server_node
        tag = DIRECTION_TAGS[(msg.src, msg.dst)]
        self.signaling_sent[agent.role] = self.signaling_sent.get(agent.role, 0) + \
            msg.size_bytes + TRANSPORT_OVERHEAD
        self._emit(self._packet(msg.size_bytes, PacketKind.SIGNALING, src, dst, tag,
                                message=msg))

    def server_emit(self, msg):
        tag = DIRECTION_TAGS[(msg.src, msg.dst)]
        self._emit(self._packet(msg.size_bytes, PacketKind.SIGNALING, self.server_node,
                                self.node_of[msg.dst], tag, message=msg))

    def on_established(self, agent: CallAgent):
        now = self.sim.kernel.now
        if now >= self.spec.stop:
            return
        peer = Role.RECEIVER if agent.role is Role.INITIATOR else Role.INITIATOR
        src = RtpSource(f"{self.id}:{agent.role.value}", self.codec, now, self.spec.stop)
        self.sources[agent.role] = (src, peer)
        self.sim.kernel.schedule(now, self._rtp_fire, agent.role)

    def _rtp_fire(self, role: Role):
        src, peer = self.sources[role]
        if self.agents[role].state.phase is not CallPhase.ESTABLISHED:
            return
        now = self.sim.kernel.now
        seq = src.seq_no
        pkt, nxt = src.tick(now)
        tag = DIRECTION_TAGS[(role, peer)]
        self._emit(self._packet(pkt.payload_bytes, PacketKind.RTP_MEDIA, self.node_of[role],
                                self.node_of[peer], tag, seq))
        if nxt < self.spec.stop:
            self.sim.kernel.schedule(nxt, self._rtp_fire, role)

    def on_terminated(self, agent: CallAgent):
        pass

    def _stop(self, _=None):
        self.agents[Role.INITIATOR].feed(HangUp())

    def on_packet(self, node_id: int, pkt: Packet):
        msg = pkt.message
        if pkt.kind is PacketKind.SIGNALING and node_id == self.server_node \
                and msg.dst is not Role.SERVER and self.node_of[msg.dst] != node_id:
            self.sim.proxy_in(self, pkt)
            return
        if not self.sim.ledger.received(pkt):
            return
        if pkt.kind is PacketKind.RTP_MEDIA:
            role = Role.RECEIVER if node_id == self.node_of[Role.RECEIVER] else Role.INITIATOR
            self.media[role].record(pkt, self.sim.kernel.now)
            return
        if msg.dst is Role.SERVER:
            self.sim.server_in(self, pkt)
            return
        self.agents[msg.dst].feed(msg)


class SignalingServer:
    """Node-level wrapper that applies the proxy's forwarding delay."""

    def __init__(self, sim, node_id: int, protocol: Protocol, cfg):
        self.sim = sim
        self.node_id = node_id
        self.proxy = ProxyNode(node_id, protocol, forward_delay=cfg.proxy_delay, cfg=cfg)

    def forward(self, app: VoipApp, pkt: Packet):
        out = self.proxy.handle(pkt.message, self.sim.kernel.now)
        if not out:
            self.sim.lost(pkt, "unroutable")
            return

        def go(_):
            pkt.dst = app.node_of[pkt.message.dst]
            self.sim.nodes[self.node_id].send(pkt)

        self.sim.kernel.after(self.proxy.forward_delay, go)

    def answer(self, app: VoipApp, pkt: Packet):
        out = self.proxy.handle(pkt.message, self.sim.kernel.now)
        if not out:
            return

        def go(_):
            for msg in out:
                app.server_emit(msg)

        self.sim.kernel.after(self.proxy.forward_delay, go)
