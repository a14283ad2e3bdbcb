"""SIP and H.323 call set-up as table-driven message flows.

A flow is an ordered table of :class:`Leg` entries. Each leg names the
message, who sends it, who receives it and which received message (or the
call start) triggers it. The last leg always goes initiator -> receiver: the
initiator counts as established when it emits that leg, the receiver when the
leg is delivered.

Message bodies are not encoded; each message only carries its configured
size. Sizes exclude the 28 bytes of UDP/IP overhead, which is added when
bytes are counted.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field, replace
from typing import Union

from .errors import ConfigError, StateMachineError
from .packets import IP_HEADER, UDP_HEADER

TRANSPORT_OVERHEAD = UDP_HEADER + IP_HEADER


class Protocol(enum.Enum):
    SIP = "sip"
    H323 = "h323"


class Role(enum.Enum):
    INITIATOR = "initiator"
    RECEIVER = "receiver"
    SERVER = "server"

    # Members are singletons, so identity hashing is equivalent and keeps
    # the per-packet role lookups cheap. Roles are never kept in sets.
    __hash__ = object.__hash__


class SipMethod(enum.Enum):
    REGISTER = "REGISTER"
    INVITE = "INVITE"
    BYE = "BYE"
    CANCEL = "CANCEL"
    ACK = "ACK"
    OK200 = "OK200"


class H323Phase(enum.Enum):
    RAS_ARQ = "RasArq"
    RAS_ACF = "RasAcf"
    SETUP = "Setup"
    CALL_PROCEEDING = "CallProceeding"
    ALERTING = "Alerting"
    CONNECT = "Connect"
    CAPS_EXCHANGE = "CapsExchange"
    OPEN_LOGICAL_CHANNEL = "OpenLogicalChannel"
    OLC_ACK = "OlcAck"
    RELEASE_COMPLETE = "ReleaseComplete"


MessageKind = Union[SipMethod, H323Phase]

START = "start"

DEFAULT_SIZES: dict[MessageKind, int] = {
    SipMethod.REGISTER: 300,
    SipMethod.INVITE: 620,
    SipMethod.OK200: 450,
    SipMethod.ACK: 250,
    SipMethod.BYE: 250,
    SipMethod.CANCEL: 250,
    H323Phase.RAS_ARQ: 120,
    H323Phase.RAS_ACF: 120,
    H323Phase.SETUP: 260,
    H323Phase.CALL_PROCEEDING: 260,
    H323Phase.ALERTING: 260,
    H323Phase.CONNECT: 260,
    H323Phase.CAPS_EXCHANGE: 380,
    H323Phase.OPEN_LOGICAL_CHANNEL: 150,
    H323Phase.OLC_ACK: 150,
    H323Phase.RELEASE_COMPLETE: 260,
}


@dataclass(frozen=True)
class SipMessage:
    method: SipMethod
    size_bytes: int
    src: Role
    dst: Role
    via_proxy: bool = True
    call_id: str = ""

    def __post_init__(self):
        if self.size_bytes <= 0:
            raise ConfigError(f"SIP {self.method.value} size must be positive")

    @property
    def kind(self) -> SipMethod:
        return self.method


@dataclass(frozen=True)
class H323Message:
    phase: H323Phase
    size_bytes: int
    src: Role
    dst: Role
    via_proxy: bool = True
    call_id: str = ""

    def __post_init__(self):
        if self.size_bytes <= 0:
            raise ConfigError(f"H.323 {self.phase.value} size must be positive")

    @property
    def kind(self) -> H323Phase:
        return self.phase


SignalingMessage = Union[SipMessage, H323Message]


@dataclass(frozen=True)
class Leg:
    kind: MessageKind
    sender: Role
    receiver: Role
    on: object  # START or the MessageKind the sender must have received


I, R, S = Role.INITIATOR, Role.RECEIVER, Role.SERVER

SIP_FLOW = (
    Leg(SipMethod.INVITE, I, R, START),
    Leg(SipMethod.OK200, R, I, SipMethod.INVITE),
    Leg(SipMethod.ACK, I, R, SipMethod.OK200),
)

H323_FLOW = (
    Leg(H323Phase.RAS_ARQ, I, S, START),
    Leg(H323Phase.RAS_ACF, S, I, H323Phase.RAS_ARQ),
    Leg(H323Phase.SETUP, I, R, H323Phase.RAS_ACF),
    Leg(H323Phase.CALL_PROCEEDING, R, I, H323Phase.SETUP),
    Leg(H323Phase.ALERTING, R, I, H323Phase.SETUP),
    Leg(H323Phase.CONNECT, R, I, H323Phase.SETUP),
    Leg(H323Phase.CAPS_EXCHANGE, I, R, H323Phase.CONNECT),
    Leg(H323Phase.CAPS_EXCHANGE, R, I, H323Phase.CAPS_EXCHANGE),
    Leg(H323Phase.OPEN_LOGICAL_CHANNEL, I, R, H323Phase.CAPS_EXCHANGE),
    Leg(H323Phase.OLC_ACK, R, I, H323Phase.OPEN_LOGICAL_CHANNEL),
    Leg(H323Phase.OPEN_LOGICAL_CHANNEL, R, I, H323Phase.OPEN_LOGICAL_CHANNEL),
    Leg(H323Phase.OLC_ACK, I, R, H323Phase.OPEN_LOGICAL_CHANNEL),
)

DEFAULT_FLOWS = {Protocol.SIP: SIP_FLOW, Protocol.H323: H323_FLOW}

TEARDOWN = {
    Protocol.SIP: (SipMethod.BYE, SipMethod.CANCEL),
    Protocol.H323: (H323Phase.RELEASE_COMPLETE, H323Phase.RELEASE_COMPLETE),
}


def validate_flow(flow: tuple, protocol: Protocol) -> tuple:
    kinds = SipMethod if protocol is Protocol.SIP else H323Phase
    if not flow:
        raise ConfigError(f"{protocol.value} flow is empty")
    for leg in flow:
        if not isinstance(leg.kind, kinds):
            raise ConfigError(f"{leg.kind} is not a {protocol.value} message")
        if leg.sender == leg.receiver:
            raise ConfigError(f"flow leg {leg.kind.value} is sent to its own sender")
    final = flow[-1]
    if final.sender is not I or final.receiver is not R:
        raise ConfigError(f"{protocol.value} flow must end with an initiator->receiver leg")
    if any(leg.receiver is R and leg.kind == final.kind for leg in flow[:-1]):
        raise ConfigError(f"{protocol.value} final message {final.kind.value} must reach the "
                          "receiver only once")
    if not any(leg.on == START and leg.sender is I for leg in flow):
        raise ConfigError(f"{protocol.value} flow has no leg triggered by the call start")
    if protocol is Protocol.SIP and any(S in (leg.sender, leg.receiver) for leg in flow):
        raise ConfigError("SIP flow legs are end-to-end; the proxy only forwards")
    return flow


def half_round_trips(flow: tuple) -> tuple[int, int]:
    """Sequential one-way hops until (initiator, receiver) establishment.

    Legs fired by the same trigger leave together and share a hop.
    """
    depth: dict = {}
    for leg in flow:
        trigger_depth = 0 if leg.on == START else depth.get((leg.sender, leg.on))
        if trigger_depth is None:
            raise ConfigError(f"leg {leg.kind.value} is never triggered")
        key = (leg.receiver, leg.kind)
        depth.setdefault(key, trigger_depth + 1)
    final = flow[-1]
    rx = depth[(final.receiver, final.kind)]
    return rx - 1, rx


class CallPhase(enum.Enum):
    IDLE = "idle"
    SETUP = "setup"
    ESTABLISHED = "established"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class StartCall:
    pass


@dataclass(frozen=True)
class HangUp:
    pass


@dataclass(frozen=True)
class Register:
    pass


@dataclass(frozen=True)
class CallState:
    protocol: Protocol
    role: Role
    phase: CallPhase = CallPhase.IDLE
    call_id: str = ""
    initiated_at: int | None = None
    established_at: int | None = None
    terminated_at: int | None = None
    bytes_sent: int = 0
    bytes_received: int = 0
    seen: frozenset = frozenset()
    stray: int = 0
    progress: int = 0
    last_out: tuple = ()
    log: tuple = ()
    failed: bool = False

    @property
    def awaiting(self) -> bool:
        """True while this side still waits for the peer to move the set-up forward."""
        if self.phase is CallPhase.SETUP:
            return True
        return False


@dataclass(frozen=True)
class SignalingConfig:
    sizes: dict = field(default_factory=lambda: dict(DEFAULT_SIZES))
    flows: dict = field(default_factory=lambda: dict(DEFAULT_FLOWS))
    proxy_delay: int = 2_000
    retransmit_initial: int = 500_000
    retransmit_factor: int = 2
    retransmit_max_tries: int = 6
    register_lead: int = 2_000_000

    def size(self, kind: MessageKind) -> int:
        return self.sizes[kind]

    def make(self, kind: MessageKind, src: Role, dst: Role, call_id: str = "") -> SignalingMessage:
        via = dst is not Role.SERVER
        if isinstance(kind, SipMethod):
            return SipMessage(kind, self.sizes[kind], src, dst, via_proxy=via, call_id=call_id)
        return H323Message(kind, self.sizes[kind], src, dst, via_proxy=via, call_id=call_id)


DEFAULT_SIGNALING = SignalingConfig()


@functools.lru_cache(maxsize=None)
def _reactions(flow: tuple) -> dict:
    reactions: dict = {}
    for leg in flow:
        reactions.setdefault((leg.receiver, leg.kind), [])
    for leg in flow:
        if leg.on != START:
            reactions.setdefault((leg.sender, leg.on), []).append(leg)
    return reactions


def _sent(state: CallState, msgs: list, now: int) -> CallState:
    if not msgs:
        return state
    add = sum(m.size_bytes + TRANSPORT_OVERHEAD for m in msgs)
    log = state.log + tuple((now, "tx", m.kind.value, m.size_bytes + TRANSPORT_OVERHEAD) for m in msgs)
    return replace(state, bytes_sent=state.bytes_sent + add, log=log)


def _received(state: CallState, msg: SignalingMessage, now: int) -> CallState:
    n = msg.size_bytes + TRANSPORT_OVERHEAD
    return replace(state, bytes_received=state.bytes_received + n,
                   log=state.log + ((now, "rx", msg.kind.value, n),))


def _flow_step(state: CallState, inp, now: int, cfg: SignalingConfig):
    protocol = state.protocol
    flow = cfg.flows[protocol]
    out: list = []

    if isinstance(inp, Register):
        if protocol is not Protocol.SIP:
            raise StateMachineError("REGISTER is a SIP operation")
        if state.phase is not CallPhase.IDLE:
            raise StateMachineError("REGISTER after the call has started")
        out.append(cfg.make(SipMethod.REGISTER, state.role, Role.SERVER, state.call_id))
        return _sent(state, out, now), out

    if isinstance(inp, StartCall):
        if state.role is not Role.INITIATOR or state.phase is not CallPhase.IDLE:
            raise StateMachineError(f"StartCall for {state.role.value} in {state.phase.value}")
        out = [cfg.make(leg.kind, leg.sender, leg.receiver, state.call_id)
               for leg in flow if leg.on == START and leg.sender is state.role]
        state = replace(state, phase=CallPhase.SETUP, initiated_at=now,
                        progress=state.progress + 1, last_out=tuple(out))
        return _sent(state, out, now), out

    if isinstance(inp, HangUp):
        bye, cancel = TEARDOWN[protocol]
        peer = Role.RECEIVER if state.role is Role.INITIATOR else Role.INITIATOR
        if state.phase is CallPhase.ESTABLISHED:
            out.append(cfg.make(bye, state.role, peer, state.call_id))
        elif state.phase is CallPhase.SETUP and state.role is Role.INITIATOR:
            out.append(cfg.make(cancel, state.role, peer, state.call_id))
        elif state.phase is CallPhase.TERMINATED:
            return state, out
        state = replace(state, phase=CallPhase.TERMINATED, terminated_at=now, last_out=())
        return _sent(state, out, now), out

    msg = inp
    if msg.dst is not state.role:
        raise StateMachineError(f"{msg.kind.value} addressed to {msg.dst.value} "
                                f"handed to {state.role.value}")
    state = _received(state, msg, now)
    kind = msg.kind
    bye, cancel = TEARDOWN[protocol]

    if kind is bye or kind is cancel:
        live = state.phase in (CallPhase.SETUP, CallPhase.ESTABLISHED)
        if protocol is Protocol.SIP and kind is cancel and state.phase is CallPhase.ESTABLISHED:
            live = False
        if not live:
            return replace(state, stray=state.stray + 1), out
        state = replace(state, phase=CallPhase.TERMINATED, terminated_at=now, last_out=())
        return state, out

    if state.phase is CallPhase.TERMINATED:
        return replace(state, stray=state.stray + 1), out

    final = flow[-1]
    if state.role is Role.RECEIVER and kind == final.kind:
        if state.established_at is not None or state.phase is CallPhase.IDLE:
            return replace(state, stray=state.stray + 1), out
        state = replace(state, phase=CallPhase.ESTABLISHED, established_at=now,
                        progress=state.progress + 1, last_out=())
        return state, out

    reactions = _reactions(flow)
    key = (state.role, kind)
    if key not in reactions:
        return replace(state, stray=state.stray + 1), out

    legs = reactions[key]
    duplicate = kind in state.seen
    if duplicate and not legs:
        return replace(state, stray=state.stray + 1), out
    out = [cfg.make(leg.kind, leg.sender, leg.receiver, state.call_id) for leg in legs]

    if duplicate:
        # Our earlier answer was lost; send it again unchanged.
        return _sent(state, out, now), out

    state = replace(state, seen=state.seen | {kind}, progress=state.progress + 1)
    if state.phase is CallPhase.IDLE:
        state = replace(state, phase=CallPhase.SETUP, initiated_at=now)
    if out:
        state = replace(state, last_out=tuple(out))
    if state.role is Role.INITIATOR and any(leg is final for leg in legs):
        state = replace(state, phase=CallPhase.ESTABLISHED, established_at=now, last_out=())
    return _sent(state, out, now), out


def sip_step(state: CallState, inp, now: int, cfg: SignalingConfig = DEFAULT_SIGNALING):
    if state.protocol is not Protocol.SIP:
        raise StateMachineError("sip_step on a non-SIP call")
    if isinstance(inp, H323Message):
        raise StateMachineError("H.323 message handed to a SIP call")
    return _flow_step(state, inp, now, cfg)


def h323_step(state: CallState, inp, now: int, cfg: SignalingConfig = DEFAULT_SIGNALING):
    if state.protocol is not Protocol.H323:
        raise StateMachineError("h323_step on a non-H.323 call")
    if isinstance(inp, (SipMessage, Register)):
        raise StateMachineError("SIP input handed to an H.323 call")
    return _flow_step(state, inp, now, cfg)


STEP = {Protocol.SIP: sip_step, Protocol.H323: h323_step}


def retransmit(state: CallState, now: int) -> tuple[CallState, list]:
    """Resend the last batch this side emitted (application-level timer fired)."""
    out = list(state.last_out)
    return _sent(state, out, now), out


def fail(state: CallState, now: int) -> CallState:
    """Give up after the retransmission budget is spent."""
    return replace(state, phase=CallPhase.TERMINATED, terminated_at=now, failed=True, last_out=())


@dataclass(frozen=True)
class Establishment:
    at: int
    setup_latency: int


def establishment_time(c: CallState) -> Establishment | None:
    if c.established_at is None:
        return None
    return Establishment(c.established_at, c.established_at - c.initiated_at)


def signaling_byte_totals(c: CallState) -> tuple[int, int]:
    return c.bytes_sent, c.bytes_received


@dataclass
class ProxyNode:
    """Node 10: SIP proxy/registrar, or H.323 gatekeeper and gateway anchor.

    ``handle`` returns ``(message, deliver_to_role)`` pairs that the network
    should emit after ``forward_delay``.
    """

    node_id: int
    protocol: Protocol
    forward_delay: int = 2_000
    admit: bool = True
    registrations: dict = field(default_factory=dict)
    forwarded: int = 0
    unroutable: int = 0
    rejected: int = 0
    cfg: SignalingConfig = DEFAULT_SIGNALING

    def handle(self, msg: SignalingMessage, now: int) -> list:
        kind = msg.kind
        if kind is SipMethod.REGISTER:
            self.registrations[(msg.call_id, msg.src)] = now
            return []
        if msg.dst is Role.SERVER:
            reactions = _reactions(self.cfg.flows[self.protocol])
            legs = reactions.get((Role.SERVER, kind), [])
            if not self.admit:
                self.rejected += 1
                return []
            return [self.cfg.make(leg.kind, Role.SERVER, leg.receiver, msg.call_id) for leg in legs]
        if self.protocol is Protocol.SIP and not self._registered(msg):
            self.unroutable += 1
            return []
        self.forwarded += 1
        return [msg]

    def _registered(self, msg) -> bool:
        return (msg.call_id, msg.dst) in self.registrations
