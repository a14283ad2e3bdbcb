"""Build a simulation from a :class:`Scenario`, run it, and collect the report."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .apps import CbrApp, FtpApp, Ledger, SignalingServer, VoipApp
from .errors import StateMachineError, WlanVoipError
from .kernel import TICKS_PER_SECOND, Kernel
from .mac import PcfSchedule
from .mobility import WaypointPath
from .network import Air, BackboneLink, Node, PointCoordinator, Radio, Station, Trace, compute_routes
from .packets import Packet
from .scenario import Scenario, dump_scenario, scenario_hash
from .signaling import Protocol, Role, establishment_time


class SimulationFault(WlanVoipError):
    """A state-machine failure during a run, with the tail of the event trace."""

    def __init__(self, message: str, trace_tail: list[str]):
        super().__init__(message + "\nlast events:\n  " + "\n  ".join(trace_tail))
        self.trace_tail = trace_tail


class Simulation:
    def __init__(self, scenario: Scenario, seed: int = 0, *, full_trace: bool = False,
                 sample_limit: int = 200):
        self.scenario = scenario
        self.seed = seed
        self.kernel = Kernel(seed)
        self.trace = Trace(sample_limit=sample_limit, full_receptions=full_trace)
        self.ledger = Ledger()
        self.nodes: dict[int, Node] = {n.id: Node(self, n.id) for n in scenario.nodes}
        self.stations: dict[int, Station] = {}
        self.coordinators: list[PointCoordinator] = []
        self._build_radio()
        self.links = [BackboneLink(self, a, b, scenario.backbone.latency,
                                   scenario.backbone.capacity_bps)
                      for a, b in scenario.backbone.links]
        for link in self.links:
            for end in link.ends:
                self.nodes[end].links[link.other(end)] = link
        compute_routes(self.nodes, {n.id: list(n.nodes) for n in scenario.networks}, self.links)
        self.server = None
        if scenario.server_node is not None:
            self.server = SignalingServer(self, scenario.server_node, scenario.signaling_mode,
                                          scenario.signaling)
        self.apps = []
        for spec in scenario.applications:
            if spec.kind == "voip":
                app = VoipApp(self, spec, scenario.signaling_mode, scenario.signaling,
                              scenario.server_node)
            elif spec.kind == "ftp":
                app = FtpApp(self, spec)
            else:
                app = CbrApp(self, spec)
            self.apps.append(app)
        self.apps_by_id = {a.id: a for a in self.apps}

    def _build_radio(self):
        sc = self.scenario
        paths = {n.id: WaypointPath.static(n.position) for n in sc.nodes}
        pos = {n.id: n.position for n in sc.nodes}
        for m in sc.mobility:
            paths[m.node] = WaypointPath.from_legs(pos[m.node], m.start, m.legs, sc.speeds)
        radios = {}
        for net in sc.networks:
            for nid in net.nodes:
                radios[nid] = Radio(nid, net.id, net.listenable.bits, net.listening.bits, paths[nid])
        self.air = Air(self.kernel, radios, sc.radio, self.trace)
        for nid, radio in radios.items():
            st = Station(self, self.nodes[nid], radio, sc.mac, sc.min_snr)
            self.nodes[nid].station = st
            self.stations[nid] = st
        if sc.pcf is not None:
            p = sc.pcf
            net = next(n for n in sc.networks if n.id == p.network)
            for nid in p.polling_list:
                self.stations[nid].cf_pollable = True
            sched = PcfSchedule(p.superframe, p.cfp, tuple(p.polling_list))
            self.coordinators.append(PointCoordinator(
                self, self.stations[p.coordinator], [radios[n] for n in net.nodes], sched,
                p.beacon_bytes, p.max_response_bytes, sc.duration))

    # -- hooks used by nodes and applications -------------------------------
    def deliver(self, node: Node, pkt: Packet):
        self.apps_by_id[pkt.flow_id].on_packet(node.node_id, pkt)

    def lost(self, pkt: Packet, reason: str):
        if self.ledger.lost(pkt, reason):
            self.apps_by_id[pkt.flow_id].on_lost(pkt, reason)

    def proxy_in(self, app, pkt: Packet):
        self.server.forward(app, pkt)

    def server_in(self, app, pkt: Packet):
        self.server.answer(app, pkt)

    # -- running ------------------------------------------------------------
    def run(self) -> "MetricsReport":
        if self.scenario.duration == 0:
            # A zero-length run covers no time at all, so nothing is started.
            return collect(self)
        for c in self.coordinators:
            c.start()
        for app in self.apps:
            app.start()
        try:
            self.kernel.run_until(self.scenario.duration)
        except StateMachineError as exc:
            raise SimulationFault(str(exc), self.kernel.trace_tail()) from exc
        return collect(self)


@dataclass
class MetricsReport:
    scenario_name: str
    scenario_hash: str
    signaling_mode: str
    seed: int
    duration: int
    flows: list = field(default_factory=list)
    globals: dict = field(default_factory=dict)
    voip_bins: dict = field(default_factory=dict)
    all_bins: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    polls: list = field(default_factory=list)
    receptions: list = field(default_factory=list)
    talkspurt_curve: list = field(default_factory=list)
    scenario_text: str = ""

    def flow(self, flow_id: str) -> dict:
        for row in self.flows:
            if row["flow_id"] == flow_id:
                return row
        raise KeyError(flow_id)

    def throughput_over(self, window: int, voip_only: bool = True) -> float:
        """Delivered payload bit/s over ``[0, window)`` using the 1 s bins."""
        bins = self.voip_bins if voip_only else self.all_bins
        whole = window // TICKS_PER_SECOND
        bits = sum(v for b, v in bins.items() if b < whole)
        return bits * TICKS_PER_SECOND / window if window > 0 else 0.0

    def window_curve(self, voip_only: bool = True) -> list[tuple[int, float]]:
        """``(window_s, bit/s)`` for every whole-second window up to the run length."""
        return [(w, self.throughput_over(w * TICKS_PER_SECOND, voip_only))
                for w in range(1, self.duration // TICKS_PER_SECOND + 1)]


# Talkspurt lengths for the throughput-versus-audio-length curve, in ms.
TALKSPURT_MS = tuple(range(5, 1001, 5))


def talkspurt_curve(spurts: list, lengths_ms=TALKSPURT_MS) -> list[tuple[int, float]]:
    """Aggregate RTP throughput over the first ``L`` ms of every media direction.

    ``spurts`` holds ``(media_start, arrivals)`` per direction, ``arrivals``
    being ``(tick, bits)`` pairs. For each length the payload bits that
    arrived within ``[start, start + L)`` are summed over all directions and
    divided by ``L``.
    """
    prepared = []
    for start, arrivals in spurts:
        offsets = [t - start for t, _ in arrivals]
        cum = [0]
        for _, b in arrivals:
            cum.append(cum[-1] + b)
        prepared.append((offsets, cum))
    out = []
    for ms in lengths_ms:
        horizon = ms * 1000
        bits = sum(cum[bisect.bisect_left(offsets, horizon)] for offsets, cum in prepared)
        out.append((ms, bits * 1000 / ms))
    return out


def _sec(t):
    return None if t is None else t / TICKS_PER_SECOND


def _stream_cols(ledger: Ledger, flow_id: str, tag: str) -> dict:
    s = ledger.streams.get(f"{flow_id}:{tag}")
    if s is None:
        return {"sent": 0, "received": 0, "lost": 0, "dropped": 0, "in_flight": 0, "packets": 0}
    return {"sent": s.sent_bytes, "received": s.received_bytes, "lost": s.unaccounted_bytes,
            "dropped": s.lost_bytes, "in_flight": s.in_flight_bytes, "packets": s.sent_packets}


def collect(sim: Simulation) -> MetricsReport:
    sc = sim.scenario
    rep = MetricsReport(sc.name, scenario_hash(sc), sc.signaling_mode.value, sim.seed, sc.duration)
    voip_bins: dict = {}
    all_bins: dict = {}
    spurts: list = []

    def add_bins(target, bins):
        for b, v in bins.items():
            target[b] = target.get(b, 0) + v

    for app in sim.apps:
        row = {"flow_id": app.id, "kind": app.kind, "src": app.spec.src, "dst": app.spec.dst,
               "mode": sc.signaling_mode.value if app.kind == "voip" else ""}
        if app.kind == "voip":
            ini = app.agents[Role.INITIATOR].state
            rcv = app.agents[Role.RECEIVER].state
            e_i, e_r = establishment_time(ini), establishment_time(rcv)
            started = ini.initiated_at
            ir = _stream_cols(sim.ledger, app.id, "i>r")
            ri = _stream_cols(sim.ledger, app.id, "r>i")
            tags = ("i>s", "r>s", "s>i", "s>r")
            i_s, r_s, s_i, s_r = (_stream_cols(sim.ledger, app.id, t) for t in tags)
            to_srv, from_srv = [i_s, r_s], [s_i, s_r]
            m_r, m_i = app.media[Role.RECEIVER], app.media[Role.INITIATOR]
            delivered = m_r.delivered + m_i.delivered
            delay_sum = m_r.delay_sum + m_i.delay_sum
            row.update({
                "call_started_s": _sec(started),
                "init_established_s": _sec(e_i.at) if e_i else None,
                "recv_established_s": _sec(e_r.at) if e_r else None,
                "init_setup_latency_s": _sec(e_i.setup_latency) if e_i else None,
                "recv_setup_latency_s": _sec(e_r.at - started) if e_r and started is not None
                else None,
                "init_bytes_sent": ir["sent"],
                "recv_bytes_received": ir["received"],
                "init_to_recv_bytes_lost": ir["lost"],
                "init_to_recv_in_flight": ir["in_flight"],
                "recv_bytes_sent": ri["sent"],
                "init_bytes_received": ri["received"],
                "recv_to_init_bytes_lost": ri["lost"],
                "recv_to_init_in_flight": ri["in_flight"],
                "to_server_bytes": sum(c["sent"] for c in to_srv),
                "from_server_bytes": sum(c["sent"] for c in from_srv),
                "server_bytes_lost": sum(c["lost"] for c in to_srv + from_srv),
                "init_signaling_sent": ini.bytes_sent,
                "init_signaling_received": ini.bytes_received,
                "recv_signaling_sent": rcv.bytes_sent,
                "recv_signaling_received": rcv.bytes_received,
                "signaling_retransmissions": sum(a.retransmissions for a in app.agents.values()),
                # media plus signaling, as seen by each end
                "init_total_bytes_sent": ir["sent"] + i_s["sent"],
                "init_total_bytes_received": ri["received"] + s_i["received"],
                "recv_total_bytes_sent": ri["sent"] + r_s["sent"],
                "recv_total_bytes_received": ir["received"] + s_r["received"],
                "rtp_delivered": delivered,
                "rtp_avg_delay_s": delay_sum / delivered / TICKS_PER_SECOND if delivered else None,
                "jitter_drops": m_r.jitter.dropped_late + m_i.jitter.dropped_late,
                "setup_failed": started is not None and e_i is None,
                "throughput_bps": (m_r.payload_bits + m_i.payload_bits) * TICKS_PER_SECOND
                / sc.duration if sc.duration else 0.0,
            })
            for sender, media in ((Role.INITIATOR, m_r), (Role.RECEIVER, m_i)):
                source = app.sources.get(sender)
                if source is not None:
                    spurts.append((source[0].start, media.arrivals))
            add_bins(voip_bins, m_r.bins)
            add_bins(voip_bins, m_i.bins)
            add_bins(all_bins, m_r.bins)
            add_bins(all_bins, m_i.bins)
        else:
            d = _stream_cols(sim.ledger, app.id, "data")
            row.update({"init_bytes_sent": d["sent"], "recv_bytes_received": d["received"],
                        "init_to_recv_bytes_lost": d["lost"], "init_to_recv_in_flight": d["in_flight"],
                        "payload_bits_delivered": app.delivered_bits,
                        "throughput_bps": app.delivered_bits * TICKS_PER_SECOND / sc.duration
                        if sc.duration else 0.0})
            add_bins(all_bins, app.bins)
        rep.flows.append(row)

    t = sim.trace
    window = sc.duration
    rep.voip_bins = dict(sorted(voip_bins.items()))
    rep.all_bins = dict(sorted(all_bins.items()))
    voip_bits = sum(voip_bins.values())
    all_bits = sum(all_bins.values())
    rep.globals = {
        "overall_throughput_bps": voip_bits * TICKS_PER_SECOND / window if window else 0.0,
        "network_throughput_bps": all_bits * TICKS_PER_SECOND / window if window else 0.0,
        "transmissions": t.transmissions,
        "collisions": t.collisions,
        "mac_drops": t.mac_drops,
        "queue_drops": t.queue_drops,
        "mac_retries": t.retries,
        "cross_network_receptions": t.cross_network_receptions,
        "events_fired": sim.kernel.fired_total,
        "polls": len(t.polls),
    }
    if sim.server is not None:
        rep.globals["proxy_forwarded"] = sim.server.proxy.forwarded
        rep.globals["proxy_unroutable"] = sim.server.proxy.unroutable
    rep.events = list(t.sample)
    rep.polls = list(t.polls)
    rep.receptions = list(t.receptions)
    rep.talkspurt_curve = talkspurt_curve(spurts)
    rep.scenario_text = dump_scenario(sc)
    return rep


def run(scenario: Scenario, seed: int = 0, **kw) -> MetricsReport:
    return Simulation(scenario, seed, **kw).run()


def run_mode(scenario: Scenario, mode: Protocol | str, seed: int = 0, **kw) -> MetricsReport:
    if isinstance(mode, str):
        mode = Protocol(mode.lower())
    return run(scenario.with_mode(mode), seed, **kw)
