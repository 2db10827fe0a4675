"""Host identities and simulation-scoped network addresses."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from ipaddress import IPv4Address


class Role(enum.Enum):
    INITIATING_HOST = "InitiatingHost"
    ACCEPTING_HOST = "AcceptingHost"
    CONTROLLER = "Controller"
    SERVICE = "Service"


@dataclass(frozen=True, order=True)
class NetAddress:
    """IPv4 address plus 16-bit port."""

    ip: IPv4Address
    port: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.ip, IPv4Address):
            object.__setattr__(self, "ip", IPv4Address(self.ip))
        if not 0 <= self.port <= 0xFFFF:
            raise ValueError(f"port out of range: {self.port}")

    @classmethod
    def parse(cls, text: str) -> NetAddress:
        host, _, port = text.partition(":")
        return cls(IPv4Address(host), int(port) if port else 0)

    def with_port(self, port: int) -> NetAddress:
        return NetAddress(self.ip, port)

    def with_ip(self, ip: IPv4Address) -> NetAddress:
        return NetAddress(ip, self.port)

    def __str__(self) -> str:
        return f"{self.ip}:{self.port}"


def host_id_for(name: str) -> bytes:
    """Stable 16-byte identifier derived from a host name."""
    return hashlib.blake2b(name.encode(), digest_size=16).digest()


@dataclass(frozen=True)
class HostIdentity:
    host_id: bytes
    role: Role
    real_address: NetAddress
    name: str = ""

    def __post_init__(self) -> None:
        if len(self.host_id) != 16:
            raise ValueError("host_id must be 16 bytes")

    @classmethod
    def named(cls, name: str, role: Role, address: str | NetAddress) -> HostIdentity:
        if isinstance(address, str):
            address = NetAddress.parse(address)
        return cls(host_id_for(name), role, address, name)

    @property
    def label(self) -> str:
        return self.name or self.host_id.hex()
