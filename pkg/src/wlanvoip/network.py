"""The simulated network: radios on a shared medium, DCF stations, PCF
coordinators, backbone links and static routing.

The medium keeps one busy counter per radio. A counter steps from 0 to 1 or
back on every audible transmission start/end, and those edges are what the
DCF state machines see as MediumBusy / MediumIdle. A station counts its own
transmissions too.

A data frame and its ACK are modelled as two transmissions back to back: the
ACK starts the moment the data ends and lasts SIFS + ACK airtime, so the
medium never looks idle inside the exchange. The same trick covers the
RTS/CTS handshake and PCF poll/response pairs.
"""

from __future__ import annotations

import math
from collections import deque

from .errors import StateMachineError
from .mac import (
    BROADCAST,
    CancelTimer,
    DcfInput,
    DcfPhase,
    DcfState,
    DeliverSuccess,
    DropFrame,
    FreezeBackoff,
    MacParams,
    Mpdu,
    MpduKind,
    PcfSchedule,
    StartTimer,
    TimerKind,
    TransmitPpdu,
    ack_timeout,
    dcf_step,
    pcf_poll_next,
    pifs,
)
from .mobility import WaypointPath, position_at
from .phy import (
    SNR_TOLERANCE_DB, RadioConfig, Reception, phy_mode, ppdu_duration, reception_outcome,
    two_ray_rx_power,
)

_WAIT_DIFS = DcfPhase.WAIT_DIFS
_BACKOFF = DcfPhase.BACKOFF

_DELIVERED = Reception.DELIVERED
_LOST_SNR = Reception.LOST_SNR
_LOST_COLLISION = Reception.LOST_COLLISION

# Path loss to and from moving radios is re-evaluated once per sample period.
MOBILITY_SAMPLE = 100_000  # ticks


class Trace:
    """Run-level counters plus a bounded sample of notable events."""

    def __init__(self, sample_limit: int = 200, full_receptions: bool = False):
        self.sample_limit = sample_limit
        self.sample: list[tuple] = []
        self.full_receptions = full_receptions
        self.receptions: list[tuple] = []
        # Decoded frames per (sender network, receiver network); only pairs
        # across networks are tallied here, same-network ones in `receptions_same`.
        self.reception_pairs: dict = {}
        self.receptions_same = 0
        self.polls: list[tuple] = []
        self.transmissions = 0
        self.collisions = 0
        self.snr_losses = 0
        self.mac_drops = 0
        self.queue_drops = 0
        self.retries = 0

    def note(self, t: int, what: str, node: int, detail: str = ""):
        if len(self.sample) < self.sample_limit:
            self.sample.append((t, what, node, detail))

    @property
    def cross_network_receptions(self) -> int:
        return sum(n for (a, b), n in self.reception_pairs.items() if a != b)


class Radio:
    __slots__ = ("node_id", "net_id", "tx_bits", "rx_bits", "path", "static", "busy",
                 "transmitting", "listener", "position", "sensing")

    def __init__(self, node_id: int, net_id: int, tx_bits: int, rx_bits: int,
                 path: WaypointPath):
        self.node_id = node_id
        self.net_id = net_id
        self.tx_bits = tx_bits
        self.rx_bits = rx_bits
        self.path = path
        self.static = path.is_static
        self.position = path.points[0]
        self.busy = 0
        self.transmitting = None
        self.listener = None
        # True while the listener is deferring and wants busy/idle edges
        self.sensing = False

    def position_at(self, t: int):
        return self.position if self.static else position_at(self.path, t)


class Transmission:
    __slots__ = ("src", "mpdu", "start", "end", "mode", "hears", "sensed", "corrupt",
                 "on_end", "on_clear", "audible")

    def __init__(self, src, mpdu, start, end, mode, hears, sensed, on_end, on_clear,
                 audible=()):
        self.src = src
        self.mpdu = mpdu
        self.start = start
        self.end = end
        self.mode = mode
        self.hears = hears  # {node_id: (radio, rx_power_dbm)}
        self.sensed = sensed  # radios whose busy counter this transmission holds
        self.corrupt: set = set()
        self.on_end = on_end
        self.on_clear = on_clear
        # (node_id, (src_net, rx_net)) for receivers above the SNR floor
        self.audible = audible


class Air:
    """Shared wireless medium across every radio network.

    Two radios interact only when the sender's listenable mask overlaps the
    receiver's listening mask; with disjoint masks per network that keeps the
    networks fully isolated.
    """

    def __init__(self, kernel, radios: dict, cfg: RadioConfig, trace: Trace):
        self.kernel = kernel
        self.radios = radios
        self.cfg = cfg
        self.trace = trace
        self.active: list[Transmission] = []
        self._peers = {
            nid: [r for r in radios.values() if r is not src and (src.tx_bits & r.rx_bits)]
            for nid, src in radios.items()
        }
        self._power_cache: dict = {}
        self._moving_cache: dict = {}
        # A sender's view of the medium only changes when it or a peer moves.
        self._fixed_view = {
            nid: src.static and all(r.static for r in self._peers[nid])
            for nid, src in radios.items()
        }
        self._views: dict = {}

    def power(self, a: Radio, b: Radio, t: int) -> float:
        key = (a.node_id, b.node_id)
        if a.static and b.static:
            p = self._power_cache.get(key)
            if p is None:
                p = self._power_cache[key] = self._power(a.position, b.position)
            return p
        # Moving radios: positions are sampled on a fixed time grid.
        epoch = t // MOBILITY_SAMPLE
        hit = self._moving_cache.get(key)
        if hit is not None and hit[0] == epoch:
            return hit[1]
        ts = epoch * MOBILITY_SAMPLE
        p = self._power(a.position_at(ts), b.position_at(ts))
        self._moving_cache[key] = (epoch, p)
        return p

    def _power(self, pa, pb) -> float:
        d = math.dist(pa, pb)
        return two_ray_rx_power(self.cfg, self.cfg, max(d, 0.1))

    def transmit(self, src: Radio, mpdu: Mpdu, duration: int, mode, on_end=None,
                 on_clear=None) -> Transmission:
        now = self.kernel.now
        hears, sensed, audible = self._view(src, now, mode)
        tx = Transmission(src, mpdu, now, now + duration, mode, hears, sensed, on_end, on_clear,
                          audible)
        corrupt = tx.corrupt
        for other in self.active:
            ohears = other.hears
            # No capture: any overlap at a radio that hears both ruins both.
            for nid in hears:
                if nid in ohears:
                    corrupt.add(nid)
                    other.corrupt.add(nid)
            # Half duplex: a radio cannot receive while it transmits.
            if src.node_id in ohears:
                other.corrupt.add(src.node_id)
            if other.src.node_id in hears:
                corrupt.add(other.src.node_id)
        if corrupt:
            self.trace.collisions += 1
        self.active.append(tx)
        src.transmitting = tx
        self.trace.transmissions += 1
        for r in sensed:
            r.busy += 1
            if r.busy == 1 and r.sensing:
                r.listener.on_medium(True)
        self.kernel.after(duration, self._end, tx)
        return tx

    def _view(self, src: Radio, now: int, mode):
        nid = src.node_id
        epoch = 0 if self._fixed_view[nid] else now // MOBILITY_SAMPLE
        view = self._views.get(nid)
        if view is None or view[0] != epoch:
            cs = self.cfg.cs_threshold
            hears = {}
            sensed = [src]
            for r in self._peers[nid]:
                p = self.power(src, r, now)
                hears[r.node_id] = (r, p)
                if p >= cs:
                    sensed.append(r)
            view = self._views[nid] = (epoch, hears, sensed, {})
        _, hears, sensed, by_mode = view
        audible = by_mode.get(id(mode))
        if audible is None:
            noise = self.cfg.noise_floor
            need = mode.min_rx_snr - SNR_TOLERANCE_DB
            audible = by_mode[id(mode)] = tuple(
                (rid, (src.net_id, r.net_id) if r.net_id != src.net_id else None)
                for rid, (r, p) in hears.items() if p - noise >= need)
        return hears, sensed, audible

    def outcome_at(self, tx: Transmission, node_id: int) -> Reception:
        heard = tx.hears.get(node_id)
        if heard is None:
            return Reception.LOST_SNR
        return reception_outcome(heard[1], tx.mode, node_id in tx.corrupt, self.cfg.noise_floor)

    def _end(self, tx: Transmission):
        self.active.remove(tx)
        src = tx.src
        if src.transmitting is tx:
            src.transmitting = None
        trace = self.trace
        dst = tx.mpdu.dst
        corrupt = tx.corrupt
        pairs = trace.reception_pairs
        # Same rule as phy.reception_outcome: a receiver above the SNR floor
        # gets the frame unless it was corrupted by an overlap.
        result = _LOST_SNR
        same = 0
        for nid, key in tx.audible:
            if nid in corrupt:
                if nid == dst:
                    result = _LOST_COLLISION
                continue
            if nid == dst:
                result = _DELIVERED
            if key is None:
                same += 1
            else:
                pairs[key] = pairs.get(key, 0) + 1
            if trace.full_receptions:
                rnet = self.radios[nid].net_id
                trace.receptions.append((self.kernel.now, src.node_id, nid, src.net_id, rnet,
                                         tx.mpdu.kind.value))
        trace.receptions_same += same
        if dst == BROADCAST:
            result = None
        elif result is _LOST_SNR:
            if dst in corrupt and dst in tx.hears:
                result = _LOST_COLLISION
            else:
                trace.snr_losses += 1
        if tx.on_end is not None:
            tx.on_end(tx, result)
        for r in tx.sensed:
            r.busy -= 1
            if r.busy == 0 and r.sensing:
                r.listener.on_medium(False)
        if tx.on_clear is not None:
            tx.on_clear(tx, result)

    def reserve(self, radios, until: int):
        """Hold the medium busy at ``radios`` until ``until`` (a NAV)."""
        for r in radios:
            r.busy += 1
            if r.busy == 1 and r.sensing:
                r.listener.on_medium(True)
        self.kernel.schedule(until, self._release, radios)

    def _release(self, radios):
        for r in radios:
            r.busy -= 1
            if r.busy == 0 and r.sensing:
                r.listener.on_medium(False)


class _Airtimes:
    """Memoised PPDU durations for one PHY mode."""

    def __init__(self, mode):
        self.mode = mode
        self._cache: dict = {}

    def __call__(self, mpdu_bytes: int) -> int:
        d = self._cache.get(mpdu_bytes)
        if d is None:
            d = self._cache[mpdu_bytes] = ppdu_duration(mpdu_bytes, self.mode)
        return d


class Station:
    """Drives :func:`dcf_step` against the kernel and the medium for one radio."""

    def __init__(self, sim, node, radio: Radio, params: MacParams, min_snr: dict):
        self.sim = sim
        self.kernel = sim.kernel
        self.node = node
        self.radio = radio
        radio.listener = self
        self.p = params
        self.data_mode = phy_mode(params.data_rate, min_snr)
        self.ctrl_mode = phy_mode(params.control_rate, min_snr)
        self.data_air = _Airtimes(self.data_mode)
        self.ctrl_air = _Airtimes(self.ctrl_mode)
        self.state = DcfState.initial(params)
        self.timer = None
        self.timer_kind = None
        self.ack_deadline = None
        self._ack_expected = False
        self._seq = 0
        self._last_seen: dict = {}
        self.cf_pollable = False
        self.cf_queue: deque = deque()
        self.cf_tries = 0
        self.service_log: list | None = None
        self._head_since = None
        self._pending_data = None
        self.delivered_frames = 0

    # -- frame intake -------------------------------------------------------
    def make_mpdu(self, dst: int, body: int, packet=None, kind=MpduKind.DATA) -> Mpdu:
        self._seq += 1
        return Mpdu(self.node.node_id, dst, kind, body, self.p.mac_header_bytes,
                    self.p.fcs_bytes, packet, self._seq)

    def enqueue(self, mpdu: Mpdu) -> bool:
        if self.cf_pollable:
            if len(self.cf_queue) >= self.p.queue_limit:
                self._queue_drop(mpdu)
                return False
            self.cf_queue.append(mpdu)
            return True
        st = self.state
        if len(st.pending) >= self.p.queue_limit:
            self._queue_drop(mpdu)
            return False
        if st.phase is DcfPhase.IDLE:
            self._sync()
            if self.service_log is not None:
                self._head_since = self.kernel.now
        self._step(DcfInput.FRAME_ENQUEUED, mpdu)
        return True

    def _queue_drop(self, mpdu: Mpdu):
        self.sim.trace.queue_drops += 1
        self.node.on_mac_drop(mpdu, "queue")

    # -- the state machine plumbing ----------------------------------------
    def _step(self, inp: DcfInput, frame=None):
        now = self.kernel.now
        self.state, actions = dcf_step(self.state, inp, now, self.p, self.kernel.rng, frame)
        for a in actions:
            t = type(a)
            if t is StartTimer:
                if a.kind is TimerKind.ACK_TIMEOUT:
                    self.ack_deadline = now + a.delay
                    if not self._ack_expected:
                        self._set_timer(TimerKind.ACK_TIMEOUT, a.delay)
                else:
                    self._set_timer(a.kind, a.delay)
            elif t is CancelTimer or t is FreezeBackoff:
                self._clear_timer()
            elif t is TransmitPpdu:
                self._transmit(a.mpdu)
            elif t is DeliverSuccess:
                self._log_service(now)
                self.node.on_mac_success(a.mpdu)
            elif t is DropFrame:
                self._log_service(None)
                self.sim.trace.mac_drops += 1
                self.node.on_mac_drop(a.mpdu, "retry")
        st = self.state
        ph = st.phase
        sensing = self.radio.sensing = ph is _WAIT_DIFS or ph is _BACKOFF
        if sensing and st.medium_busy != (self.radio.busy > 0):
            self._step(DcfInput.MEDIUM_IDLE if st.medium_busy else DcfInput.MEDIUM_BUSY)

    def _sync(self):
        """Refresh the medium flag in a phase that ignores medium edges.

        Outside WAIT_DIFS/BACKOFF a MediumBusy/MediumIdle input only updates
        the flag, so setting it directly is the same transition.
        """
        st = self.state
        busy = self.radio.busy > 0
        if st[5] != busy:
            self.state = DcfState(st[0], st[1], st[2], st[3], st[4], busy, st[6])

    def _log_service(self, now):
        if self.service_log is not None:
            if now is not None:
                self.service_log.append(now - self._head_since)
            self._head_since = self.kernel.now

    def _set_timer(self, kind: TimerKind, delay: int):
        if self.timer is not None:
            self.kernel.cancel(self.timer)
        self.timer_kind = kind
        self.timer = self.kernel.after(delay, self._on_timer, kind)

    def _clear_timer(self):
        if self.timer is not None:
            self.kernel.cancel(self.timer)
            self.timer = None
            self.timer_kind = None

    def _on_timer(self, kind: TimerKind):
        self.timer = None
        self.timer_kind = None
        if kind is TimerKind.DIFS:
            self._step(DcfInput.DIFS_EXPIRED)
        elif kind is TimerKind.BACKOFF:
            self._step(DcfInput.BACKOFF_EXPIRED)
        else:
            self.sim.trace.retries += 1
            self._sync()
            self._step(DcfInput.ACK_TIMEOUT)

    def on_medium(self, busy: bool):
        # Only the deferring phases react to the medium; elsewhere the flag is
        # refreshed from the radio right before it matters (see _sync).
        st = self.state
        ph = st.phase
        if (ph is not _WAIT_DIFS and ph is not _BACKOFF) or st.medium_busy == busy:
            return
        if busy:
            tm = self.timer
            # A timer ending on this very tick wins: the other sender could
            # not have been heard yet, so both transmit and collide.
            if (tm is not None and tm.fire_at == self.kernel.now
                    and self.timer_kind is not TimerKind.ACK_TIMEOUT and tm.pending):
                return
            self._step(DcfInput.MEDIUM_BUSY)
        else:
            self._step(DcfInput.MEDIUM_IDLE)

    # -- transmissions -------------------------------------------------------
    def _transmit(self, mpdu: Mpdu):
        trace = self.sim.trace
        if len(trace.sample) < trace.sample_limit:
            trace.note(self.kernel.now, "tx", self.node.node_id,
                       f"{mpdu.kind.value}->{mpdu.dst} {mpdu.total_bytes}B")
        if self.p.rts_cts and mpdu.needs_ack:
            rts = Mpdu(self.node.node_id, mpdu.dst, MpduKind.RTS, 0, 0, 0)
            rts_bytes = self.p.rts_bytes
            self._ack_expected = True
            self.sim.air.transmit(self.radio, rts, self.ctrl_air(rts_bytes), self.ctrl_mode,
                                  on_end=self._rts_end)
            self._pending_data = mpdu
            return
        self.sim.air.transmit(self.radio, mpdu, self.data_air(mpdu.total_bytes),
                              self.data_mode, on_end=self._data_end)

    def _rts_end(self, tx: Transmission, result):
        peer = self.sim.stations.get(tx.mpdu.dst)
        if result is _DELIVERED and peer is not None and peer.radio.transmitting is None:
            cts = Mpdu(peer.node.node_id, self.node.node_id, MpduKind.CTS, 0, 0, 0)
            self.sim.air.transmit(peer.radio, cts, self.p.sifs + peer.ctrl_air(self.p.cts_bytes),
                                  self.ctrl_mode, on_end=self._cts_end)
        else:
            self._exchange_failed()

    def _cts_end(self, tx: Transmission, result):
        if result is _DELIVERED and self.radio.transmitting is None:
            mpdu = self._pending_data
            self.sim.air.transmit(self.radio, mpdu, self.p.sifs + self.data_air(mpdu.total_bytes),
                                  self.data_mode, on_end=self._data_end)
        else:
            self._exchange_failed()

    def _exchange_failed(self):
        self._ack_expected = False
        self._sync()
        self._step(DcfInput.TX_DONE)

    def _data_end(self, tx: Transmission, result):
        mpdu = tx.mpdu
        if not mpdu.needs_ack:
            self._ack_expected = False
            if result is _DELIVERED or mpdu.dst == BROADCAST:
                self._deliver_to_peer(mpdu)
            self._sync()
            self._step(DcfInput.TX_DONE)
            return
        peer = self.sim.stations.get(mpdu.dst)
        ok = result is _DELIVERED and peer is not None and peer.radio.transmitting is None
        self._ack_expected = ok
        if ok:
            peer.receive_data(mpdu)
            ack = Mpdu(peer.node.node_id, self.node.node_id, MpduKind.ACK, 0, 0, 0)
            ack_len = self.p.sifs + peer.ctrl_air(self.p.ack_bytes)
            self.sim.air.transmit(peer.radio, ack, ack_len, peer.ctrl_mode,
                                  on_clear=self._ack_end)
        self._sync()
        self._step(DcfInput.TX_DONE)

    def _deliver_to_peer(self, mpdu: Mpdu):
        peer = self.sim.stations.get(mpdu.dst)
        if peer is not None:
            peer.receive_data(mpdu)

    def _ack_end(self, tx: Transmission, result):
        self._ack_expected = False
        if self.state.phase is not DcfPhase.WAIT_ACK:
            raise StateMachineError(f"ACK for node {self.node.node_id} outside WAIT_ACK")
        if result is _DELIVERED:
            self._sync()
            self._step(DcfInput.ACK_RECEIVED)
        else:
            self._set_timer(TimerKind.ACK_TIMEOUT, max(0, self.ack_deadline - self.kernel.now))

    def receive_data(self, mpdu: Mpdu):
        """A data frame addressed here was decoded; filter MAC-level duplicates."""
        if self._last_seen.get(mpdu.src) == mpdu.seq:
            return
        self._last_seen[mpdu.src] = mpdu.seq
        self.delivered_frames += 1
        self.node.on_frame(mpdu)


class PointCoordinator:
    """Contention-free period scheduling for one network.

    At every target beacon time the coordinator waits for an idle medium,
    then PIFS, then sends a beacon that sets the NAV of every radio in the
    network until the nominal end of the CFP. It then polls stations round
    robin while a worst-case poll + response still fits. The cursor carries
    over between CFPs.
    """

    def __init__(self, sim, station: Station, members: list, schedule: PcfSchedule,
                 beacon_bytes: int, max_response_bytes: int, horizon: int):
        self.sim = sim
        self.kernel = sim.kernel
        self.station = station
        self.radio = station.radio
        self.members = members  # radios of the network, coordinator included
        self.schedule = schedule
        self.beacon_bytes = beacon_bytes
        self.max_response_bytes = max_response_bytes
        self.horizon = horizon
        p = station.p
        self.p = p
        self.cfp_index = -1
        self.cfp_end = 0
        self.polls = 0
        air_c, air_d = station.ctrl_air, station.data_air
        self.poll_time = air_c(p.mac_header_bytes + p.fcs_bytes)
        self.worst_exchange = (self.poll_time + p.sifs
                               + max(air_d(p.mac_header_bytes + max_response_bytes + p.fcs_bytes),
                                     air_c(p.mac_header_bytes + p.fcs_bytes))
                               + p.sifs)
        self._tbtt_at = 0

    def start(self):
        if self.schedule.superframe_period < self.horizon:
            self.kernel.schedule(0, self._tbtt, 0)

    def _tbtt(self, k: int):
        self._tbtt_at = self.kernel.now
        self.cfp_index = k
        self.cfp_end = self.kernel.now + self.schedule.cfp_duration
        nxt = self.kernel.now + self.schedule.superframe_period
        if nxt < self.horizon:
            self.kernel.schedule(nxt, self._tbtt, k + 1)
        self._try_access()

    def _try_access(self):
        if self.radio.busy > 0:
            self.kernel.after(self.p.slot_time or 1, self._retry_access, self.cfp_index)
            return
        self.kernel.after(pifs(self.p), self._pifs_done, self.cfp_index)

    def _retry_access(self, k):
        if k == self.cfp_index:
            self._try_access()

    def _pifs_done(self, k: int):
        if k != self.cfp_index:
            return
        if self.radio.busy > 0:
            self._try_access()
            return
        now = self.kernel.now
        beacon_len = self.station.ctrl_air(self.p.mac_header_bytes + self.beacon_bytes
                                           + self.p.fcs_bytes)
        if now + beacon_len >= self.cfp_end:
            return  # CFP foreshortened to nothing
        self.sim.air.reserve(self.members, self.cfp_end)
        beacon = Mpdu(self.radio.node_id, BROADCAST, MpduKind.BEACON, self.beacon_bytes,
                      self.p.mac_header_bytes, self.p.fcs_bytes)
        self.sim.trace.note(now, "beacon", self.radio.node_id, f"cfp {k}")
        self.sim.air.transmit(self.radio, beacon, beacon_len, self.station.ctrl_mode,
                              on_end=self._after_frame)

    def _after_frame(self, tx, result):
        self.kernel.after(self.p.sifs, self._poll_next, self.cfp_index)

    def _poll_next(self, k: int):
        if k != self.cfp_index:
            return
        now = self.kernel.now
        if now + self.worst_exchange > self.cfp_end:
            return
        target, self.schedule = pcf_poll_next(self.schedule)
        self.polls += 1
        self.sim.trace.polls.append((now, self.radio.node_id, target, k))
        poll = Mpdu(self.radio.node_id, target, MpduKind.POLL, 0, self.p.mac_header_bytes,
                    self.p.fcs_bytes)
        self.sim.air.transmit(self.radio, poll, self.poll_time, self.station.ctrl_mode,
                              on_end=self._poll_end)

    def _poll_end(self, tx, result):
        polled = self.sim.stations.get(tx.mpdu.dst)
        if result is not _DELIVERED or polled is None:
            # No response can come; move on after PIFS.
            self.kernel.after(pifs(self.p), self._poll_next, self.cfp_index)
            return
        p = self.p
        if polled.cf_queue:
            mpdu = polled.cf_queue[0]
            dur = p.sifs + polled.data_air(mpdu.total_bytes)
            mode = polled.data_mode
        else:
            mpdu = Mpdu(polled.node.node_id, self.radio.node_id, MpduKind.NULL, 0,
                        p.mac_header_bytes, p.fcs_bytes)
            dur = p.sifs + polled.ctrl_air(mpdu.total_bytes)
            mode = polled.ctrl_mode
        self.sim.air.transmit(polled.radio, mpdu, dur, mode, on_end=self._response_end)

    def _response_end(self, tx, result):
        mpdu = tx.mpdu
        if mpdu.kind is MpduKind.DATA:
            polled = self.sim.stations[mpdu.src]
            if result is _DELIVERED:
                polled.cf_queue.popleft()
                polled.cf_tries = 0
                self.sim.stations[mpdu.dst].receive_data(mpdu)
                polled.node.on_mac_success(mpdu)
            else:
                polled.cf_tries += 1
                if polled.cf_tries > self.p.retry_limit:
                    polled.cf_queue.popleft()
                    polled.cf_tries = 0
                    self.sim.trace.mac_drops += 1
                    polled.node.on_mac_drop(mpdu, "retry")
        self.kernel.after(self.p.sifs, self._poll_next, self.cfp_index)


class BackboneLink:
    """Lossless full-duplex point-to-point link with FIFO serialisation."""

    def __init__(self, sim, a: int, b: int, latency: int, capacity_bps: float):
        self.sim = sim
        self.ends = (a, b)
        self.latency = latency
        self.capacity_bps = capacity_bps
        self._free_at = {a: 0, b: 0}
        self.carried = 0

    def other(self, node_id: int) -> int:
        a, b = self.ends
        return b if node_id == a else a

    def send(self, from_id: int, pkt):
        k = self.sim.kernel
        ser = -(-pkt.wire_bytes * 8 * 1_000_000 // int(self.capacity_bps))
        start = max(k.now, self._free_at[from_id])
        self._free_at[from_id] = start + ser
        self.carried += 1
        k.schedule(start + ser + self.latency, self.sim.nodes[self.other(from_id)].receive, pkt)


class Node:
    def __init__(self, sim, node_id: int):
        self.sim = sim
        self.node_id = node_id
        self.station: Station | None = None
        self.links: dict = {}
        self.routes: dict = {}

    def send(self, pkt):
        """Forward ``pkt`` one hop toward ``pkt.dst``."""
        if pkt.dst == self.node_id:
            self.sim.deliver(self, pkt)
            return
        hop = self.routes.get(pkt.dst)
        if hop is None:
            self.sim.lost(pkt, "no_route")
            return
        nxt, link = hop
        if link is None:
            st = self.station
            st.enqueue(st.make_mpdu(nxt, pkt.wire_bytes, pkt))
        else:
            link.send(self.node_id, pkt)

    def receive(self, pkt):
        if pkt.dst == self.node_id:
            self.sim.deliver(self, pkt)
        else:
            self.send(pkt)

    def on_frame(self, mpdu: Mpdu):
        if mpdu.packet is not None:
            self.receive(mpdu.packet)

    def on_mac_success(self, mpdu: Mpdu):
        pass

    def on_mac_drop(self, mpdu: Mpdu, reason: str):
        if mpdu.packet is not None:
            self.sim.lost(mpdu.packet, reason)


def compute_routes(nodes: dict, wireless: dict, links: list) -> None:
    """Fill ``node.routes`` with breadth-first next hops.

    ``wireless`` maps network id to member node ids; members reach each other
    in one radio hop. Ties go to the lowest node id.
    """
    adj: dict = {nid: {} for nid in nodes}
    for members in wireless.values():
        for a in members:
            for b in members:
                if a != b:
                    adj[a].setdefault(b, None)
    for link in links:
        a, b = link.ends
        adj[a][b] = link
        adj[b][a] = link
    for src in nodes:
        first: dict = {}
        seen = {src}
        frontier = [src]
        while frontier:
            nxt_frontier = []
            for u in frontier:
                for v in sorted(adj[u]):
                    if v in seen:
                        continue
                    seen.add(v)
                    first[v] = (v, adj[u][v]) if u == src else first[u]
                    nxt_frontier.append(v)
            frontier = nxt_frontier
        nodes[src].routes = first


__all__ = [
    "Air", "BackboneLink", "Node", "PointCoordinator", "Radio", "Station", "Trace",
    "Transmission", "ack_timeout", "compute_routes",
]
