"""Scenario documents: YAML schema, validation with line context, round-trip dump.

Times are held in ticks (microseconds) internally and written back in the
unit their key names (``_s``, ``_ms``, ``_us``).
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass, field, replace
from importlib import resources

import yaml

from .errors import ConfigError, ScenarioError
from .kernel import TICKS_PER_MS, TICKS_PER_SECOND
from .mac import MacParams
from .media import codec, codec_packetize
from .packets import MAX_VOIP_PAYLOAD
from .phy import DEFAULT_MIN_SNR_DB, RATES_MBPS, ChannelMask, RadioConfig
from .signaling import (
    DEFAULT_FLOWS,
    DEFAULT_SIZES,
    START,
    H323Phase,
    Leg,
    Protocol,
    Role,
    SignalingConfig,
    SipMethod,
    validate_flow,
)

APP_KINDS = ("voip", "ftp", "cbr")


@dataclass(frozen=True)
class NodeSpec:
    id: int
    position: tuple


@dataclass(frozen=True)
class NetworkSpec:
    id: int
    listenable: ChannelMask
    listening: ChannelMask
    nodes: tuple


@dataclass(frozen=True)
class BackboneSpec:
    links: tuple = ()
    latency: int = 500
    capacity_bps: float = 100e6
    channel: ChannelMask = ChannelMask(0b0001)


@dataclass(frozen=True)
class PcfSpec:
    network: int
    coordinator: int
    superframe: int
    cfp: int
    polling_list: tuple
    beacon_bytes: int = 40
    max_response_bytes: int = 200


@dataclass(frozen=True)
class AppSpec:
    id: str
    kind: str
    src: int
    dst: int
    start: int
    stop: int
    codec: str | None = None
    frame_ms: float | None = None
    frames_per_packet: int | None = None
    jitter_buffer: int | None = None
    file_bytes: int | None = None
    segment_bytes: int | None = None
    rate_bps: float | None = None
    packet_bytes: int | None = None


@dataclass(frozen=True)
class MobilitySpec:
    node: int
    start: int
    legs: tuple  # ((x, y), speed_class) pairs


@dataclass(frozen=True)
class Scenario:
    name: str
    duration: int
    nodes: tuple
    networks: tuple
    backbone: BackboneSpec
    radio: RadioConfig
    min_snr: dict
    mac: MacParams
    signaling: SignalingConfig
    server_node: int | None
    signaling_mode: Protocol
    applications: tuple
    mobility: tuple = ()
    speeds: dict = field(default_factory=lambda: {"slow": 1.0, "fast": 5.0})
    pcf: PcfSpec | None = None

    def node_ids(self) -> list[int]:
        return [n.id for n in self.nodes]

    def network_of(self, node_id: int) -> NetworkSpec | None:
        for net in self.networks:
            if node_id in net.nodes:
                return net
        return None

    def with_mode(self, mode: Protocol) -> "Scenario":
        return replace(self, signaling_mode=mode)

    def with_frame(self, codec_name: str, frame_ms: float) -> "Scenario":
        """Override the frame period of every call using ``codec_name``."""
        apps = []
        for a in self.applications:
            if a.kind == "voip" and (a.codec or "").upper() == codec_name.upper():
                codec_packetize(codec(a.codec, frame_ms, a.frames_per_packet))  # validates it
                a = replace(a, frame_ms=frame_ms)
            apps.append(a)
        return replace(self, applications=tuple(apps))



class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-9`` style numbers as floats.

    Plain YAML 1.1 needs a dot in the mantissa, so PyYAML would hand such
    values back as strings.
    """


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)$"),
    list("-+0123456789"),
)


class _Lines:
    """Map dotted document paths to 1-based source lines."""

    def __init__(self, text: str):
        self.lines: dict[str, int] = {}
        try:
            root = yaml.compose(text)
        except yaml.YAMLError:
            root = None
        if root is not None:
            self._walk(root, "")

    def _walk(self, node, path):
        self.lines.setdefault(path, node.start_mark.line + 1)
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                sub = f"{path}.{k.value}" if path else str(k.value)
                self.lines[sub] = k.start_mark.line + 1
                self._walk(v, sub)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._walk(v, f"{path}[{i}]")

    def at(self, path: str) -> int | None:
        while path:
            if path in self.lines:
                return self.lines[path]
            cut = max(path.rfind("."), path.rfind("["))
            path = path[:cut] if cut > 0 else ""
        return None


class _Reader:
    def __init__(self, lines: _Lines):
        self._lines = lines

    def fail(self, msg: str, path: str):
        raise ScenarioError(msg, field=path, line=self._lines.at(path))

    def section(self, data, path, required=True) -> dict:
        if data is None and not required:
            return {}
        if not isinstance(data, dict):
            self.fail("expected a mapping", path)
        return data

    def no_extra(self, data: dict, allowed, path):
        for k in data:
            if k not in allowed:
                self.fail(f"unknown key {k!r}", f"{path}.{k}" if path else str(k))

    def get(self, data: dict, key, path, kind, default=..., check=None):
        sub = f"{path}.{key}" if path else key
        if key not in data:
            if default is ...:
                self.fail("required field is missing", sub)
            return default
        value = data[key]
        try:
            if kind is float:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise TypeError
                value = float(value)
            elif kind is int:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise TypeError
            elif kind is bool:
                if not isinstance(value, bool):
                    raise TypeError
            elif kind is str:
                value = str(value)
        except TypeError:
            self.fail(f"expected {kind.__name__}, got {value!r}", sub)
        if check is not None:
            msg = check(value)
            if msg:
                self.fail(msg, sub)
        return value


def _positive(v):
    return None if v > 0 else "must be positive"


def _non_negative(v):
    return None if v >= 0 else "must be non-negative"


def _ticks_s(v: float) -> int:
    return int(round(v * TICKS_PER_SECOND))


def _ticks_ms(v: float) -> int:
    return int(round(v * TICKS_PER_MS))


_KIND_BY_NAME = {k.value: k for k in list(SipMethod) + list(H323Phase)}
_ROLE_BY_NAME = {r.value: r for r in Role}


def load_scenario(text: str) -> Scenario:
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"malformed document: {exc}",
                            line=mark.line + 1 if mark else None) from None
    rd = _Reader(_Lines(text))
    doc = rd.section(data, "")
    rd.no_extra(doc, {"name", "duration_s", "nodes", "networks", "backbone", "radio", "mac",
                      "signaling", "applications", "mobility"}, "")

    name = rd.get(doc, "name", "", str, "scenario")
    duration = _ticks_s(rd.get(doc, "duration_s", "", float, 134.0, _non_negative))

    # nodes
    raw_nodes = doc.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        rd.fail("expected a non-empty list of nodes", "nodes")
    nodes = []
    seen_ids = set()
    for i, nd in enumerate(raw_nodes):
        p = f"nodes[{i}]"
        nd = rd.section(nd, p)
        rd.no_extra(nd, {"id", "position"}, p)
        nid = rd.get(nd, "id", p, int)
        if nid in seen_ids:
            rd.fail(f"node id {nid} is defined twice", f"{p}.id")
        seen_ids.add(nid)
        pos = nd.get("position", [0.0, 0.0])
        if (not isinstance(pos, list) or len(pos) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pos)):
            rd.fail("position must be [x, y] in meters", f"{p}.position")
        nodes.append(NodeSpec(nid, (float(pos[0]), float(pos[1]))))

    def known_node(nid, path):
        if nid not in seen_ids:
            rd.fail(f"unknown node {nid}", path)
        return nid

    # networks
    raw_nets = doc.get("networks")
    if not isinstance(raw_nets, list) or not raw_nets:
        rd.fail("expected a non-empty list of networks", "networks")
    networks = []
    member = {}
    for i, nt in enumerate(raw_nets):
        p = f"networks[{i}]"
        nt = rd.section(nt, p)
        rd.no_extra(nt, {"id", "listenable", "listening", "nodes"}, p)
        net_id = rd.get(nt, "id", p, int)
        masks = []
        for key in ("listenable", "listening"):
            raw = rd.get(nt, key, p, str)
            try:
                m = ChannelMask.parse(raw)
            except ConfigError as exc:
                rd.fail(str(exc), f"{p}.{key}")
            if m.bits == 0:
                rd.fail("channel mask of zero on a radio network", f"{p}.{key}")
            masks.append(m)
        net_nodes = nt.get("nodes")
        if not isinstance(net_nodes, list) or not net_nodes:
            rd.fail("expected a non-empty list of node ids", f"{p}.nodes")
        for j, nid in enumerate(net_nodes):
            q = f"{p}.nodes[{j}]"
            if isinstance(nid, bool) or not isinstance(nid, int):
                rd.fail("node ids are integers", q)
            known_node(nid, q)
            if nid in member:
                rd.fail(f"node {nid} already belongs to network {member[nid]}", q)
            member[nid] = net_id
        networks.append(NetworkSpec(net_id, masks[0], masks[1], tuple(net_nodes)))
    if len({n.id for n in networks}) != len(networks):
        rd.fail("network ids must be unique", "networks")

    # backbone
    bb = rd.section(doc.get("backbone"), "backbone", required=False)
    rd.no_extra(bb, {"channel", "latency_ms", "capacity_mbps", "links"}, "backbone")
    links = []
    for j, link in enumerate(bb.get("links", [])):
        q = f"backbone.links[{j}]"
        if not isinstance(link, list) or len(link) != 2:
            rd.fail("a link is a pair of node ids", q)
        a, b = (known_node(v, q) for v in link)
        if a == b:
            rd.fail("a link needs two distinct nodes", q)
        links.append((a, b))
    bb_channel = ChannelMask.parse(rd.get(bb, "channel", "backbone", str, "0001"))
    backbone = BackboneSpec(
        links=tuple(links),
        latency=_ticks_ms(rd.get(bb, "latency_ms", "backbone", float, 0.5, _non_negative)),
        capacity_bps=rd.get(bb, "capacity_mbps", "backbone", float, 100.0, _positive) * 1e6,
        channel=bb_channel,
    )

    # radio
    rsec = rd.section(doc.get("radio"), "radio", required=False)
    rd.no_extra(rsec, {"tx_power_dbm", "antenna_gain_dbi", "carrier_freq_mhz", "antenna_height_m",
                       "noise_floor_dbm", "cs_threshold_dbm", "min_snr_db"}, "radio")
    try:
        radio = RadioConfig(
            tx_power=rd.get(rsec, "tx_power_dbm", "radio", float, 39.0),
            antenna_gain=rd.get(rsec, "antenna_gain_dbi", "radio", float, 15.0),
            carrier_freq=rd.get(rsec, "carrier_freq_mhz", "radio", float, 5700.0, _positive) * 1e6,
            antenna_height=rd.get(rsec, "antenna_height_m", "radio", float, 1.5, _positive),
            noise_floor=rd.get(rsec, "noise_floor_dbm", "radio", float, -96.0),
            cs_threshold=rd.get(rsec, "cs_threshold_dbm", "radio", float, -82.0),
        )
    except ConfigError as exc:
        rd.fail(str(exc), "radio")
    min_snr = dict(DEFAULT_MIN_SNR_DB)
    snr_raw = rd.section(rsec.get("min_snr_db"), "radio.min_snr_db", required=False)
    for rate, val in snr_raw.items():
        q = f"radio.min_snr_db.{rate}"
        if rate not in RATES_MBPS:
            rd.fail(f"{rate} is not an 802.11a rate", q)
        min_snr[rate] = rd.get(snr_raw, rate, "radio.min_snr_db", float)
    ordered = [min_snr[r] for r in RATES_MBPS]
    if any(b < a for a, b in zip(ordered, ordered[1:])):
        rd.fail("SNR thresholds must not decrease with rate", "radio.min_snr_db")

    # mac
    msec = rd.section(doc.get("mac"), "mac", required=False)
    rd.no_extra(msec, {"slot_us", "sifs_us", "cw_min", "cw_max", "retry_limit", "ack_bytes",
                       "mac_header_bytes", "fcs_bytes", "data_rate_mbps", "control_rate_mbps",
                       "rts_cts", "always_backoff", "queue_limit", "pcf"}, "mac")
    defaults = MacParams()
    try:
        mac = MacParams(
            slot_time=rd.get(msec, "slot_us", "mac", int, defaults.slot_time),
            sifs=rd.get(msec, "sifs_us", "mac", int, defaults.sifs),
            cw_min=rd.get(msec, "cw_min", "mac", int, defaults.cw_min),
            cw_max=rd.get(msec, "cw_max", "mac", int, defaults.cw_max),
            retry_limit=rd.get(msec, "retry_limit", "mac", int, defaults.retry_limit),
            ack_bytes=rd.get(msec, "ack_bytes", "mac", int, defaults.ack_bytes),
            mac_header_bytes=rd.get(msec, "mac_header_bytes", "mac", int, defaults.mac_header_bytes),
            fcs_bytes=rd.get(msec, "fcs_bytes", "mac", int, defaults.fcs_bytes),
            data_rate=rd.get(msec, "data_rate_mbps", "mac", int, defaults.data_rate),
            control_rate=rd.get(msec, "control_rate_mbps", "mac", int, defaults.control_rate),
            rts_cts=rd.get(msec, "rts_cts", "mac", bool, defaults.rts_cts),
            queue_limit=rd.get(msec, "queue_limit", "mac", int, defaults.queue_limit),
            always_backoff=rd.get(msec, "always_backoff", "mac", bool, defaults.always_backoff),
        )
    except ConfigError as exc:
        rd.fail(str(exc), "mac")
    for key, rate in (("data_rate_mbps", mac.data_rate), ("control_rate_mbps", mac.control_rate)):
        if rate not in RATES_MBPS:
            rd.fail(f"{rate} is not an 802.11a rate", f"mac.{key}")

    pcf = None
    if msec.get("pcf") is not None:
        ps = rd.section(msec["pcf"], "mac.pcf")
        rd.no_extra(ps, {"network", "coordinator", "superframe_ms", "cfp_ms", "polling_list",
                         "beacon_bytes", "max_response_bytes"}, "mac.pcf")
        net_id = rd.get(ps, "network", "mac.pcf", int)
        net = next((n for n in networks if n.id == net_id), None)
        if net is None:
            rd.fail(f"unknown network {net_id}", "mac.pcf.network")
        coord = rd.get(ps, "coordinator", "mac.pcf", int)
        if coord not in net.nodes:
            rd.fail(f"coordinator {coord} is not in network {net_id}", "mac.pcf.coordinator")
        plist = ps.get("polling_list")
        if not isinstance(plist, list) or not plist:
            rd.fail("polling list must be a non-empty list", "mac.pcf.polling_list")
        for j, nid in enumerate(plist):
            if nid not in net.nodes or nid == coord:
                rd.fail(f"node {nid} cannot be polled in network {net_id}",
                        f"mac.pcf.polling_list[{j}]")
        superframe = _ticks_ms(rd.get(ps, "superframe_ms", "mac.pcf", float, check=_positive))
        cfp = _ticks_ms(rd.get(ps, "cfp_ms", "mac.pcf", float, check=_positive))
        if cfp >= superframe:
            rd.fail("contention-free period must be shorter than the superframe", "mac.pcf.cfp_ms")
        pcf = PcfSpec(net_id, coord, superframe, cfp, tuple(plist),
                      rd.get(ps, "beacon_bytes", "mac.pcf", int, 40, _non_negative),
                      rd.get(ps, "max_response_bytes", "mac.pcf", int, 200, _non_negative))

    # signaling
    ssec = rd.section(doc.get("signaling"), "signaling", required=False)
    rd.no_extra(ssec, {"mode", "server_node", "proxy_delay_ms", "retransmit_initial_ms",
                       "retransmit_factor", "retransmit_max_tries", "register_lead_s", "sizes",
                       "sip_flow", "h323_flow"}, "signaling")
    mode_name = rd.get(ssec, "mode", "signaling", str, "sip").lower()
    try:
        mode = Protocol(mode_name)
    except ValueError:
        rd.fail(f"signaling mode must be sip or h323, got {mode_name!r}", "signaling.mode")
    server = ssec.get("server_node")
    if server is not None:
        known_node(server, "signaling.server_node")
    sizes = dict(DEFAULT_SIZES)
    size_raw = rd.section(ssec.get("sizes"), "signaling.sizes", required=False)
    for key in size_raw:
        if key not in _KIND_BY_NAME:
            rd.fail(f"unknown message {key!r}", f"signaling.sizes.{key}")
        sizes[_KIND_BY_NAME[key]] = rd.get(size_raw, key, "signaling.sizes", int, check=_positive)
    flows = dict(DEFAULT_FLOWS)
    for key, proto in (("sip_flow", Protocol.SIP), ("h323_flow", Protocol.H323)):
        if key in ssec:
            flows[proto] = _parse_flow(rd, ssec[key], f"signaling.{key}", proto)
    sig = SignalingConfig(
        sizes=sizes,
        flows=flows,
        proxy_delay=_ticks_ms(rd.get(ssec, "proxy_delay_ms", "signaling", float, 2.0, _non_negative)),
        retransmit_initial=_ticks_ms(
            rd.get(ssec, "retransmit_initial_ms", "signaling", float, 500.0, _positive)),
        retransmit_factor=rd.get(ssec, "retransmit_factor", "signaling", int, 2, _positive),
        retransmit_max_tries=rd.get(ssec, "retransmit_max_tries", "signaling", int, 6, _positive),
        register_lead=_ticks_s(rd.get(ssec, "register_lead_s", "signaling", float, 2.0,
                                      _non_negative)),
    )

    # applications
    raw_apps = doc.get("applications", [])
    if not isinstance(raw_apps, list):
        rd.fail("expected a list", "applications")
    apps = []
    app_ids = set()
    for i, ap in enumerate(raw_apps):
        p = f"applications[{i}]"
        ap = rd.section(ap, p)
        rd.no_extra(ap, {"id", "kind", "src", "dst", "start_s", "stop_s", "codec", "frame_ms",
                         "frames_per_packet", "jitter_buffer_ms", "file_bytes", "segment_bytes",
                         "rate_kbps", "packet_bytes"}, p)
        kind = rd.get(ap, "kind", p, str).lower()
        if kind not in APP_KINDS:
            rd.fail(f"application kind must be one of {', '.join(APP_KINDS)}", f"{p}.kind")
        src = known_node(rd.get(ap, "src", p, int), f"{p}.src")
        dst = known_node(rd.get(ap, "dst", p, int), f"{p}.dst")
        if src == dst:
            rd.fail("source and destination must differ", p)
        for end, nid in (("src", src), ("dst", dst)):
            if nid not in member and not any(nid in lk for lk in links):
                rd.fail(f"node {nid} has no network attachment", f"{p}.{end}")
        app_id = rd.get(ap, "id", p, str, f"{kind}-{src}-{dst}")
        if app_id in app_ids:
            rd.fail(f"application id {app_id!r} is used twice", f"{p}.id")
        app_ids.add(app_id)
        start = _ticks_s(rd.get(ap, "start_s", p, float, 0.0, _non_negative))
        stop = _ticks_s(rd.get(ap, "stop_s", p, float, duration / TICKS_PER_SECOND))
        if stop < start:
            rd.fail("stop_s must not precede start_s", f"{p}.stop_s")
        spec = AppSpec(app_id, kind, src, dst, start, stop)
        if kind == "voip":
            cname = rd.get(ap, "codec", p, str, "G711")
            frame_ms = rd.get(ap, "frame_ms", p, float, None)
            fpp = rd.get(ap, "frames_per_packet", p, int, None)
            try:
                c = codec(cname, frame_ms, fpp)
                codec_packetize(c)
            except ConfigError as exc:
                rd.fail(str(exc), f"{p}.codec")
            jb = rd.get(ap, "jitter_buffer_ms", p, float, 60.0, _positive)
            spec = replace(spec, codec=c.name, frame_ms=c.frame_period / TICKS_PER_MS,
                           frames_per_packet=c.frames_per_packet, jitter_buffer=_ticks_ms(jb))
        elif kind == "ftp":
            spec = replace(
                spec,
                file_bytes=rd.get(ap, "file_bytes", p, int, 1_000_000, _non_negative),
                segment_bytes=rd.get(ap, "segment_bytes", p, int, 1460,
                                     lambda v: None if 0 < v <= 1460 else "must be in [1, 1460]"),
            )
        else:
            spec = replace(
                spec,
                rate_bps=rd.get(ap, "rate_kbps", p, float, 409.6, _positive) * 1000,
                packet_bytes=rd.get(ap, "packet_bytes", p, int, 512,
                                    lambda v: None if 0 < v <= 1472 else "must be in [1, 1472]"),
            )
        apps.append(spec)
    if any(a.kind == "voip" for a in apps) and server is None:
        rd.fail("VOIP applications need a signaling.server_node", "signaling.server_node")

    # mobility
    mob = rd.section(doc.get("mobility"), "mobility", required=False)
    rd.no_extra(mob, {"speeds", "paths"}, "mobility")
    speeds = {"slow": 1.0, "fast": 5.0}
    sp_raw = rd.section(mob.get("speeds"), "mobility.speeds", required=False)
    for k in sp_raw:
        speeds[str(k)] = rd.get(sp_raw, k, "mobility.speeds", float, check=_positive)
    paths = []
    moving = set()
    for i, pth in enumerate(mob.get("paths", []) or []):
        p = f"mobility.paths[{i}]"
        pth = rd.section(pth, p)
        rd.no_extra(pth, {"node", "start_s", "waypoints"}, p)
        nid = known_node(rd.get(pth, "node", p, int), f"{p}.node")
        if nid in moving:
            rd.fail(f"node {nid} has two mobility paths", f"{p}.node")
        moving.add(nid)
        start = _ticks_s(rd.get(pth, "start_s", p, float, 0.0, _non_negative))
        legs = []
        wps = pth.get("waypoints")
        if not isinstance(wps, list) or not wps:
            rd.fail("expected a non-empty list of waypoints", f"{p}.waypoints")
        for j, wp in enumerate(wps):
            q = f"{p}.waypoints[{j}]"
            wp = rd.section(wp, q)
            rd.no_extra(wp, {"to", "speed"}, q)
            to = wp.get("to")
            if not isinstance(to, list) or len(to) != 2:
                rd.fail("waypoint 'to' must be [x, y]", f"{q}.to")
            spd = rd.get(wp, "speed", q, str, "slow")
            if spd not in speeds:
                rd.fail(f"unknown speed class {spd!r}", f"{q}.speed")
            legs.append(((float(to[0]), float(to[1])), spd))
        paths.append(MobilitySpec(nid, start, tuple(legs)))

    return Scenario(
        name=name,
        duration=duration,
        nodes=tuple(nodes),
        networks=tuple(networks),
        backbone=backbone,
        radio=radio,
        min_snr=min_snr,
        mac=mac,
        signaling=sig,
        server_node=server,
        signaling_mode=mode,
        applications=tuple(apps),
        mobility=tuple(paths),
        speeds=speeds,
        pcf=pcf,
    )


def _parse_flow(rd: _Reader, raw, path, proto) -> tuple:
    if not isinstance(raw, list) or not raw:
        rd.fail("a flow is a non-empty list of [message, sender, receiver, trigger]", path)
    legs = []
    for j, item in enumerate(raw):
        q = f"{path}[{j}]"
        if not isinstance(item, list) or len(item) != 4:
            rd.fail("flow legs are [message, sender, receiver, trigger]", q)
        kind, snd, rcv, on = (str(v) for v in item)
        if kind not in _KIND_BY_NAME:
            rd.fail(f"unknown message {kind!r}", q)
        for who in (snd, rcv):
            if who not in _ROLE_BY_NAME:
                rd.fail(f"unknown role {who!r}", q)
        if on != START and on not in _KIND_BY_NAME:
            rd.fail(f"unknown trigger {on!r}", q)
        legs.append(Leg(_KIND_BY_NAME[kind], _ROLE_BY_NAME[snd], _ROLE_BY_NAME[rcv],
                        START if on == START else _KIND_BY_NAME[on]))
    try:
        return validate_flow(tuple(legs), proto)
    except ConfigError as exc:
        rd.fail(str(exc), path)


def _num(v: float):
    return int(v) if float(v).is_integer() else v


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "name": s.name,
        "duration_s": _num(s.duration / TICKS_PER_SECOND),
        "nodes": [{"id": n.id, "position": [_num(n.position[0]), _num(n.position[1])]}
                  for n in s.nodes],
        "networks": [{"id": n.id, "listenable": str(n.listenable), "listening": str(n.listening),
                      "nodes": list(n.nodes)} for n in s.networks],
        "backbone": {
            "channel": str(s.backbone.channel),
            "latency_ms": _num(s.backbone.latency / TICKS_PER_MS),
            "capacity_mbps": _num(s.backbone.capacity_bps / 1e6),
            "links": [list(lk) for lk in s.backbone.links],
        },
        "radio": {
            "tx_power_dbm": _num(s.radio.tx_power),
            "antenna_gain_dbi": _num(s.radio.antenna_gain),
            "carrier_freq_mhz": _num(s.radio.carrier_freq / 1e6),
            "antenna_height_m": _num(s.radio.antenna_height),
            "noise_floor_dbm": _num(s.radio.noise_floor),
            "cs_threshold_dbm": _num(s.radio.cs_threshold),
            "min_snr_db": {r: _num(s.min_snr[r]) for r in RATES_MBPS},
        },
        "mac": _mac_dict(s),
        "signaling": {
            "mode": s.signaling_mode.value,
            "server_node": s.server_node,
            "proxy_delay_ms": _num(s.signaling.proxy_delay / TICKS_PER_MS),
            "retransmit_initial_ms": _num(s.signaling.retransmit_initial / TICKS_PER_MS),
            "retransmit_factor": s.signaling.retransmit_factor,
            "retransmit_max_tries": s.signaling.retransmit_max_tries,
            "register_lead_s": _num(s.signaling.register_lead / TICKS_PER_SECOND),
            "sizes": {k.value: v for k, v in s.signaling.sizes.items()},
            "sip_flow": _flow_list(s.signaling.flows[Protocol.SIP]),
            "h323_flow": _flow_list(s.signaling.flows[Protocol.H323]),
        },
        "applications": [_app_dict(a) for a in s.applications],
        "mobility": {
            "speeds": {k: _num(v) for k, v in s.speeds.items()},
            "paths": [{"node": m.node, "start_s": _num(m.start / TICKS_PER_SECOND),
                       "waypoints": [{"to": [_num(x), _num(y)], "speed": spd}
                                     for (x, y), spd in m.legs]} for m in s.mobility],
        },
    }


def _flow_list(flow) -> list:
    return [[leg.kind.value, leg.sender.value, leg.receiver.value,
             leg.on if leg.on == START else leg.on.value] for leg in flow]


def _mac_dict(s: Scenario) -> dict:
    m = s.mac
    out = {
        "slot_us": m.slot_time, "sifs_us": m.sifs, "cw_min": m.cw_min, "cw_max": m.cw_max,
        "retry_limit": m.retry_limit, "ack_bytes": m.ack_bytes,
        "mac_header_bytes": m.mac_header_bytes, "fcs_bytes": m.fcs_bytes,
        "data_rate_mbps": m.data_rate, "control_rate_mbps": m.control_rate,
        "rts_cts": m.rts_cts, "always_backoff": m.always_backoff, "queue_limit": m.queue_limit,
    }
    if s.pcf is not None:
        p = s.pcf
        out["pcf"] = {
            "network": p.network, "coordinator": p.coordinator,
            "superframe_ms": _num(p.superframe / TICKS_PER_MS), "cfp_ms": _num(p.cfp / TICKS_PER_MS),
            "polling_list": list(p.polling_list), "beacon_bytes": p.beacon_bytes,
            "max_response_bytes": p.max_response_bytes,
        }
    return out


def _app_dict(a: AppSpec) -> dict:
    d = {"id": a.id, "kind": a.kind, "src": a.src, "dst": a.dst,
         "start_s": _num(a.start / TICKS_PER_SECOND), "stop_s": _num(a.stop / TICKS_PER_SECOND)}
    if a.kind == "voip":
        d.update(codec=a.codec, frame_ms=_num(a.frame_ms), frames_per_packet=a.frames_per_packet,
                 jitter_buffer_ms=_num(a.jitter_buffer / TICKS_PER_MS))
    elif a.kind == "ftp":
        d.update(file_bytes=a.file_bytes, segment_bytes=a.segment_bytes)
    else:
        d.update(rate_kbps=_num(a.rate_bps / 1000), packet_bytes=a.packet_bytes)
    return d


def dump_scenario(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False, default_flow_style=None)


def scenario_hash(s: Scenario) -> str:
    """Digest of the scenario with the signaling mode factored out."""
    canon = dump_scenario(s.with_mode(Protocol.SIP))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def shipped_scenario_text(name: str = "paper_80211a") -> str:
    return resources.files("wlanvoip.scenarios").joinpath(f"{name}.yaml").read_text()


def load_shipped(name: str = "paper_80211a") -> Scenario:
    return load_scenario(shipped_scenario_text(name))


def resolve_scenario(ref: str) -> Scenario:
    """Load a scenario from a path, or by name from the shipped set."""
    if os.path.exists(ref):
        with open(ref, encoding="utf-8") as fh:
            return load_scenario(fh.read())
    try:
        return load_shipped(ref)
    except FileNotFoundError:
        raise ScenarioError(f"no scenario file or shipped scenario named {ref!r}") from None


__all__ = [
    "AppSpec", "BackboneSpec", "MobilitySpec", "NetworkSpec", "NodeSpec", "PcfSpec", "Scenario",
    "dump_scenario", "load_scenario", "load_shipped", "resolve_scenario", "scenario_hash",
    "scenario_to_dict", "shipped_scenario_text", "MAX_VOIP_PAYLOAD",
]
