"""Packets exchanged between simulated nodes."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Any, Optional

from .addressing import NetAddress


class PacketKind(enum.Enum):
    SPA = "spa"
    SYN = "syn"
    DATA = "data"
    REPLY = "reply"
    CONTROL = "control"  # controller <-> gateway/client messages over a secure channel


@dataclass(frozen=True)
class SimPacket:
    src: NetAddress
    dst: NetAddress
    kind: PacketKind
    created_at_ms: float = 0.0
    payload: bytes = b""
    flow_id: Optional[int] = None
    payload_len: int = 0
    packet_id: int = 0
    origin: str = ""
    message: Any = None

    @property
    def dst_port(self) -> int:
        return self.dst.port

    def rewrite(self, **changes) -> SimPacket:
        return replace(self, **changes)

    def describe(self) -> str:
        extra = f" flow={self.flow_id}" if self.flow_id is not None else ""
        return f"{self.kind.value} {self.src}->{self.dst}{extra} id={self.packet_id}"


def spa_packet(src: NetAddress, dst: NetAddress, data: bytes, now_ms: float, **kw) -> SimPacket:
    return SimPacket(src, dst, PacketKind.SPA, now_ms, payload=bytes(data), **kw)


def fmt_ms(t: float) -> str:
    """Stable text form of a simulation timestamp."""
    t = float(t)
    if t.is_integer():
        return str(int(t))
    return f"{t:.6f}".rstrip("0")
