"""RTP/UDP/IP encapsulation and the packet record carried through the stack."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ConfigError
from .phy import Reception

RTP_HEADER = 12
UDP_HEADER = 8
IP_HEADER = 20
TCP_HEADER = 20

MIN_VOIP_PAYLOAD = 20
MAX_VOIP_PAYLOAD = 160


class PacketKind(enum.Enum):
    RTP_MEDIA = "rtp"
    SIGNALING = "signaling"
    FTP = "ftp"
    CBR = "cbr"


# Transport + network header bytes per kind. FTP rides TCP/IP; the rest UDP/IP.
HEADER_BYTES = {
    PacketKind.RTP_MEDIA: RTP_HEADER + UDP_HEADER + IP_HEADER,
    PacketKind.SIGNALING: UDP_HEADER + IP_HEADER,
    PacketKind.FTP: TCP_HEADER + IP_HEADER,
    PacketKind.CBR: UDP_HEADER + IP_HEADER,
}


# Enum members hash through a Python-level method; string keys stay in C.
_HEADER_BY_VALUE = {k.value: v for k, v in HEADER_BYTES.items()}


def header_overhead() -> int:
    """RTP + UDP + IP header bytes carried by every voice packet."""
    return HEADER_BYTES[PacketKind.RTP_MEDIA]


@dataclass(eq=False)
class Packet:
    payload_bytes: int
    kind: PacketKind
    flow_id: str = ""
    seq_no: int = 0
    created_at: int = 0
    src: int = 0
    dst: int = 0
    stream: str = ""
    message: object = None

    @property
    def header_bytes(self) -> int:
        return _HEADER_BY_VALUE[self.kind._value_]

    @property
    def wire_bytes(self) -> int:
        return self.payload_bytes + _HEADER_BY_VALUE[self.kind._value_]


def encapsulate_voip(payload: int, *, seq_no: int = 0, created_at: int = 0,
                     flow_id: str = "", setting: str = "codec payload") -> Packet:
    if not MIN_VOIP_PAYLOAD <= payload <= MAX_VOIP_PAYLOAD:
        raise ConfigError(
            f"{setting} of {payload} bytes is outside the voice payload range "
            f"[{MIN_VOIP_PAYLOAD}, {MAX_VOIP_PAYLOAD}]"
        )
    return Packet(payload, PacketKind.RTP_MEDIA, flow_id=flow_id, seq_no=seq_no,
                  created_at=created_at)


class Delivery(enum.Enum):
    DELIVERED = "delivered"
    SILENTLY_LOST = "silently_lost"


@dataclass
class DeliveryRecord:
    flow_id: str
    seq_no: int
    sent_at: int
    wire_bytes: int
    received_at: int | None = None

    @property
    def lost(self) -> bool:
        return self.received_at is None


def udp_delivery_contract(pkt: Packet, outcome: Reception) -> Delivery:
    """Map a final reception outcome to the transport-level result.

    UDP never retransmits or reports loss to the sender; MAC retries are the
    only recovery and they have already run by the time this is asked.
    """
    if outcome is Reception.DELIVERED:
        return Delivery.DELIVERED
    return Delivery.SILENTLY_LOST
