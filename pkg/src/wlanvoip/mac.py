"""802.11 MAC timing and state machines.

``dcf_step`` is a pure transition function: it takes a :class:`DcfState` and
returns a new one plus a list of actions for the caller (the station engine)
to carry out against the kernel and the medium.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from .errors import ConfigError, StateMachineError
from .kernel import Rng
from .phy import PhyMode, phy_mode, ppdu_duration


@dataclass(frozen=True)
class MacParams:
    slot_time: int = 9
    sifs: int = 16
    cw_min: int = 16
    cw_max: int = 1023
    retry_limit: int = 7
    ack_bytes: int = 14
    mac_header_bytes: int = 24
    fcs_bytes: int = 4
    data_rate: int = 54
    control_rate: int = 6
    rts_cts: bool = False
    rts_bytes: int = 20
    cts_bytes: int = 14
    queue_limit: int = 64
    # When set, every fresh frame draws a backoff even on an idle medium
    # (the usual post-transmission behaviour). Off by default.
    always_backoff: bool = False

    def __post_init__(self):
        if self.cw_min > self.cw_max:
            raise ConfigError("mac.cw_min must not exceed mac.cw_max")
        if self.cw_min < 0:
            raise ConfigError("mac.cw_min must be non-negative")
        if self.slot_time < 0 or self.sifs <= 0:
            raise ConfigError("mac.slot_time must be >= 0 and mac.sifs > 0")
        if self.retry_limit < 0:
            raise ConfigError("mac.retry_limit must be non-negative")
        if self.queue_limit < 1:
            raise ConfigError("mac.queue_limit must be at least 1")
        # Prebuilt timer actions (derived, not fields).
        object.__setattr__(self, "_difs_timer", StartTimer(TimerKind.DIFS, difs(self)))
        object.__setattr__(self, "_ack_timer", StartTimer(
            TimerKind.ACK_TIMEOUT, ack_timeout(phy_mode(self.control_rate), self)))

    @property
    def overhead_bytes(self) -> int:
        return self.mac_header_bytes + self.fcs_bytes


def difs(p: MacParams) -> int:
    return p.sifs + 2 * p.slot_time


def pifs(p: MacParams) -> int:
    return p.sifs + p.slot_time


def ack_exchange_time(body_bytes: int, data_mode: PhyMode, ctrl_mode: PhyMode, p: MacParams) -> int:
    return (
        ppdu_duration(p.mac_header_bytes + body_bytes + p.fcs_bytes, data_mode)
        + p.sifs
        + ppdu_duration(p.ack_bytes, ctrl_mode)
    )


def ack_timeout(ctrl_mode: PhyMode, p: MacParams) -> int:
    return p.sifs + ppdu_duration(p.ack_bytes, ctrl_mode) + p.slot_time


def next_cw(cw: int, p: MacParams) -> int:
    return min((cw + 1) * 2 - 1, p.cw_max)


class MpduKind(enum.Enum):
    DATA = "data"
    ACK = "ack"
    BEACON = "beacon"
    POLL = "poll"
    NULL = "null"
    RTS = "rts"
    CTS = "cts"


BROADCAST = -1


@dataclass(eq=False, slots=True)
class Mpdu:
    src: int
    dst: int
    kind: MpduKind = MpduKind.DATA
    body_bytes: int = 0
    header_bytes: int = 24
    fcs_bytes: int = 4
    packet: object = None
    seq: int = 0
    # Fixed at construction; frames are not edited once built.
    needs_ack: bool = field(init=False, repr=False)

    def __post_init__(self):
        kind = self.kind
        if self.body_bytes and (kind is MpduKind.NULL or kind is MpduKind.POLL):
            raise ConfigError(f"{kind.value} frames carry no body")
        self.needs_ack = kind is MpduKind.DATA and self.dst != BROADCAST

    @property
    def total_bytes(self) -> int:
        return self.header_bytes + self.body_bytes + self.fcs_bytes


class DcfPhase(enum.Enum):
    IDLE = "idle"
    WAIT_DIFS = "wait_difs"
    BACKOFF = "backoff"
    TRANSMITTING = "transmitting"
    WAIT_ACK = "wait_ack"


class DcfInput(enum.Enum):
    FRAME_ENQUEUED = "frame_enqueued"
    MEDIUM_BUSY = "medium_busy"
    MEDIUM_IDLE = "medium_idle"
    DIFS_EXPIRED = "difs_expired"
    BACKOFF_EXPIRED = "backoff_expired"
    TX_DONE = "tx_done"
    ACK_RECEIVED = "ack_received"
    ACK_TIMEOUT = "ack_timeout"


class TimerKind(enum.Enum):
    DIFS = "difs"
    BACKOFF = "backoff"
    ACK_TIMEOUT = "ack_timeout"


class StartTimer(NamedTuple):
    kind: TimerKind
    delay: int


class CancelTimer(NamedTuple):
    pass


class TransmitPpdu(NamedTuple):
    mpdu: Mpdu


class FreezeBackoff(NamedTuple):
    remaining: int


class DropFrame(NamedTuple):
    mpdu: Mpdu


class DeliverSuccess(NamedTuple):
    mpdu: Mpdu


class DcfState(NamedTuple):
    """Per-station DCF state.

    ``backoff_remaining`` is ``None`` when no backoff is armed; otherwise a
    whole number of slots in microseconds. ``backoff_resumed_at`` marks the
    tick the countdown (re)started while in BACKOFF.
    """

    phase: DcfPhase = DcfPhase.IDLE
    cw: int = 16
    backoff_remaining: int | None = None
    retries: int = 0
    pending: tuple = ()
    medium_busy: bool = False
    backoff_resumed_at: int | None = None

    @classmethod
    def initial(cls, p: MacParams) -> "DcfState":
        return cls(cw=p.cw_min)

    @property
    def head(self) -> Mpdu | None:
        return self.pending[0] if self.pending else None


def draw_backoff(state: DcfState, p: MacParams, rng: Rng) -> int:
    return rng.uniform_int(0, state.cw) * p.slot_time


_CANCEL = CancelTimer()
_IDLE = DcfPhase.IDLE
_WAIT_DIFS = DcfPhase.WAIT_DIFS
_BACKOFF = DcfPhase.BACKOFF
_TRANSMITTING = DcfPhase.TRANSMITTING
_WAIT_ACK = DcfPhase.WAIT_ACK


def _draw(cw: int, p: MacParams, rng: Rng) -> int:
    return rng.uniform_int(0, cw) * p.slot_time


def _arm_access(cw, backoff, retries, pending, busy, p, rng, actions, fresh) -> DcfState:
    """Start channel access for the head frame.

    A fresh frame that finds the medium idle goes out after DIFS with no
    backoff; if the medium is busy a backoff is drawn and the station defers.
    A retry keeps the backoff it was given.
    """
    if fresh:
        backoff = _draw(cw, p, rng) if (busy or p.always_backoff) else None
    if not busy:
        actions.append(p._difs_timer)
    return DcfState(_WAIT_DIFS, cw, backoff, retries, pending, busy, None)


def _finish_head(pending, busy, p, rng, actions) -> DcfState:
    pending = pending[1:]
    if not pending:
        return DcfState(_IDLE, p.cw_min, None, 0, pending, busy, None)
    return _arm_access(p.cw_min, None, 0, pending, busy, p, rng, actions, fresh=True)


def dcf_step(
    state: DcfState,
    event: DcfInput,
    now: int,
    p: MacParams,
    rng: Rng,
    frame: Mpdu | None = None,
) -> tuple[DcfState, list]:
    actions: list = []
    phase, cw, backoff, retries, pending, busy, resumed = state

    if event is DcfInput.FRAME_ENQUEUED:
        if frame is None:
            raise StateMachineError("FRAME_ENQUEUED needs a frame")
        pending = pending + (frame,)
        if phase is _IDLE:
            return _arm_access(cw, backoff, retries, pending, busy, p, rng, actions, True), actions
        return DcfState(phase, cw, backoff, retries, pending, busy, resumed), actions

    if event is DcfInput.MEDIUM_BUSY:
        if busy:
            return state, actions
        if phase is _WAIT_DIFS:
            # DIFS interrupted: cancel and make sure a backoff follows.
            actions.append(_CANCEL)
            if backoff is None:
                backoff = _draw(cw, p, rng)
        elif phase is _BACKOFF:
            elapsed_slots = (now - resumed) // p.slot_time if p.slot_time else 0
            backoff = max(0, backoff - elapsed_slots * p.slot_time)
            actions.append(FreezeBackoff(backoff))
            phase, resumed = _WAIT_DIFS, None
        return DcfState(phase, cw, backoff, retries, pending, True, resumed), actions

    if event is DcfInput.MEDIUM_IDLE:
        if not busy:
            return state, actions
        if phase is _WAIT_DIFS:
            actions.append(p._difs_timer)
        return DcfState(phase, cw, backoff, retries, pending, False, resumed), actions

    if event is DcfInput.DIFS_EXPIRED:
        if phase is not _WAIT_DIFS or busy:
            raise StateMachineError(f"DIFS expiry in phase {phase.value}")
        if not backoff:
            actions.append(TransmitPpdu(pending[0]))
            return DcfState(_TRANSMITTING, cw, None, retries, pending, busy, None), actions
        actions.append(StartTimer(TimerKind.BACKOFF, backoff))
        return DcfState(_BACKOFF, cw, backoff, retries, pending, busy, now), actions

    if event is DcfInput.BACKOFF_EXPIRED:
        if phase is not _BACKOFF:
            raise StateMachineError(f"backoff expiry in phase {phase.value}")
        actions.append(TransmitPpdu(pending[0]))
        return DcfState(_TRANSMITTING, cw, None, retries, pending, busy, None), actions

    if event is DcfInput.TX_DONE:
        if phase is not _TRANSMITTING:
            raise StateMachineError(f"TX_DONE in phase {phase.value}")
        head = pending[0]
        if head.needs_ack:
            actions.append(p._ack_timer)
            return DcfState(_WAIT_ACK, cw, backoff, retries, pending, busy, resumed), actions
        actions.append(DeliverSuccess(head))
        return _finish_head(pending, busy, p, rng, actions), actions

    if event is DcfInput.ACK_RECEIVED:
        if phase is not _WAIT_ACK:
            raise StateMachineError(f"ACK_RECEIVED in phase {phase.value}")
        actions.append(_CANCEL)
        actions.append(DeliverSuccess(pending[0]))
        return _finish_head(pending, busy, p, rng, actions), actions

    if event is DcfInput.ACK_TIMEOUT:
        if phase is not _WAIT_ACK:
            raise StateMachineError(f"ACK_TIMEOUT in phase {phase.value}")
        if retries >= p.retry_limit:
            actions.append(DropFrame(pending[0]))
            return _finish_head(pending, busy, p, rng, actions), actions
        cw = next_cw(cw, p)
        backoff = _draw(cw, p, rng)
        return _arm_access(cw, backoff, retries + 1, pending, busy, p, rng, actions, False), actions

    raise StateMachineError(f"unknown DCF input {event!r}")


@dataclass(frozen=True)
class PcfSchedule:
    superframe_period: int
    cfp_duration: int
    polling_list: tuple
    cursor: int = 0

    def __post_init__(self):
        if not self.polling_list:
            raise ConfigError("pcf.polling_list must not be empty")
        if not 0 < self.cfp_duration < self.superframe_period:
            raise ConfigError("pcf.cfp_duration must be positive and shorter than the superframe")
        if not 0 <= self.cursor < len(self.polling_list):
            raise ConfigError("pcf cursor out of range")


def pcf_poll_next(s: PcfSchedule) -> tuple[object, PcfSchedule]:
    station = s.polling_list[s.cursor]
    return station, replace(s, cursor=(s.cursor + 1) % len(s.polling_list))
