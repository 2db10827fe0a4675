"""Single Packet Authorization: wire format, credentials, verification.

An SPA packet is a fixed 89-byte datagram::

    version(1) | client_id(16) | timestamp_ms(8, big-endian) | nonce(16)
    | requested_service_id(16) | mac(32)

``mac`` is HMAC-SHA-256 under the client's key over the first 57 bytes.
A packet is accepted at most once per ``(client_id, nonce)``.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
import random
import struct
from dataclasses import dataclass, field
from typing import Callable, Optional

SPA_VERSION = 0x01
KEY_LEN = 32
_BODY = struct.Struct(">B16sQ16s16s")
BODY_LEN = _BODY.size
MAC_LEN = 32
PACKET_LEN = BODY_LEN + MAC_LEN  # 89

DEFAULT_HORIZON_MS = 5000


class SpaError(Exception):
    pass


class DuplicateCredential(SpaError):
    pass


class MalformedPacket(SpaError):
    pass


class RejectReason(enum.Enum):
    MALFORMED = "malformed"
    UNKNOWN_CLIENT = "unknown_client"
    BAD_MAC = "bad_mac"
    STALE = "stale"
    REPLAY = "replay"


@dataclass(frozen=True)
class VerifyResult:
    reason: Optional[RejectReason] = None

    @property
    def accepted(self) -> bool:
        return self.reason is None

    def __bool__(self) -> bool:
        return self.accepted

    def __str__(self) -> str:
        return "accept" if self.accepted else f"reject:{self.reason.value}"


ACCEPT = VerifyResult()


def reject(reason: RejectReason) -> VerifyResult:
    return VerifyResult(reason)


@dataclass(frozen=True)
class Credential:
    host_id: bytes
    hmac_key: bytes
    created_at: int = 0

    def __post_init__(self) -> None:
        if len(self.hmac_key) != KEY_LEN:
            raise ValueError(f"hmac_key must be {KEY_LEN} bytes, got {len(self.hmac_key)}")
        if len(self.host_id) != 16:
            raise ValueError("host_id must be 16 bytes")


CredentialLookup = Callable[[bytes], Optional[Credential]]


class CredentialStore:
    """Key database: at most one active credential per host."""

    def __init__(self) -> None:
        self._active: dict[bytes, Credential] = {}

    def generate_credential(self, host_id: bytes, rng: random.Random, now_ms: int = 0) -> Credential:
        cred = Credential(host_id, rng.randbytes(KEY_LEN), now_ms)
        self.add(cred)
        return cred

    def add(self, cred: Credential) -> None:
        if cred.host_id in self._active:
            raise DuplicateCredential(cred.host_id.hex())
        self._active[cred.host_id] = cred

    def revoke(self, host_id: bytes) -> None:
        self._active.pop(host_id, None)

    def lookup(self, host_id: bytes) -> Optional[Credential]:
        return self._active.get(host_id)

    def __contains__(self, host_id: bytes) -> bool:
        return host_id in self._active

    def __len__(self) -> int:
        return len(self._active)


def generate_credential(host_id: bytes, rng: random.Random, store: CredentialStore | None = None,
                        now_ms: int = 0) -> Credential:
    if store is None:
        return Credential(host_id, rng.randbytes(KEY_LEN), now_ms)
    return store.generate_credential(host_id, rng, now_ms)


def compute_mac(key: bytes, body: bytes) -> bytes:
    return hmac.new(key, body, hashlib.sha256).digest()


@dataclass(frozen=True)
class SpaPacket:
    client_id: bytes
    timestamp_ms: int
    nonce: bytes
    requested_service_id: bytes
    mac: bytes
    version: int = SPA_VERSION

    def body(self) -> bytes:
        return _BODY.pack(self.version, self.client_id, self.timestamp_ms, self.nonce,
                          self.requested_service_id)

    def serialize(self) -> bytes:
        return self.body() + self.mac

    def __bytes__(self) -> bytes:
        return self.serialize()

    @classmethod
    def deserialize(cls, data: bytes) -> SpaPacket:
        if len(data) != PACKET_LEN:
            raise MalformedPacket(f"expected {PACKET_LEN} bytes, got {len(data)}")
        version, client_id, ts, nonce, service = _BODY.unpack_from(data)
        return cls(client_id, ts, nonce, service, bytes(data[BODY_LEN:]), version)


def build_spa(credential: Credential, requested_service_id: bytes, now_ms: int,
              rng: random.Random) -> SpaPacket:
    nonce = rng.randbytes(16)
    body = _BODY.pack(SPA_VERSION, credential.host_id, now_ms, nonce, requested_service_id)
    return SpaPacket(credential.host_id, now_ms, nonce, requested_service_id,
                     compute_mac(credential.hmac_key, body))


@dataclass
class ReplayWindow:
    """Seen ``(client_id, nonce)`` pairs.

    Entries are keyed to the packet timestamp, so an entry is only evicted
    once any packet carrying it would be rejected as stale anyway.
    """

    horizon_ms: int = DEFAULT_HORIZON_MS
    seen: dict[tuple[bytes, bytes], tuple[int, int]] = field(default_factory=dict)

    def __contains__(self, key: tuple[bytes, bytes]) -> bool:
        return key in self.seen

    def record(self, key: tuple[bytes, bytes], timestamp_ms: int, now_ms: int) -> None:
        self.seen[key] = (now_ms, timestamp_ms)

    def evict(self, now_ms: int) -> int:
        dead = [k for k, (_, ts) in self.seen.items() if now_ms - ts > self.horizon_ms]
        for k in dead:
            del self.seen[k]
        return len(dead)

    def __len__(self) -> int:
        return len(self.seen)


def _as_packet(packet: bytes | SpaPacket) -> SpaPacket | None:
    if isinstance(packet, SpaPacket):
        return packet
    try:
        return SpaPacket.deserialize(bytes(packet))
    except MalformedPacket:
        return None


def check_spa(packet: bytes | SpaPacket, credential_lookup: CredentialLookup, now_ms: int,
              horizon_ms: int = DEFAULT_HORIZON_MS) -> VerifyResult:
    """Stateless checks: format, known client, MAC, freshness. No replay state."""
    pkt = _as_packet(packet)
    if pkt is None:
        return reject(RejectReason.MALFORMED)
    cred = credential_lookup(pkt.client_id)
    if cred is None:
        return reject(RejectReason.UNKNOWN_CLIENT)
    if not hmac.compare_digest(compute_mac(cred.hmac_key, pkt.body()), pkt.mac):
        return reject(RejectReason.BAD_MAC)
    # version is under the MAC, so only a key holder can produce a wrong one
    if pkt.version != SPA_VERSION:
        return reject(RejectReason.MALFORMED)
    if abs(now_ms - pkt.timestamp_ms) > horizon_ms:
        return reject(RejectReason.STALE)
    return ACCEPT


def verify_spa(packet: bytes | SpaPacket, credential_lookup: CredentialLookup,
               replay_window: ReplayWindow, now_ms: int) -> VerifyResult:
    result = check_spa(packet, credential_lookup, now_ms, replay_window.horizon_ms)
    if not result:
        return result
    pkt = _as_packet(packet)
    key = (pkt.client_id, pkt.nonce)
    if key in replay_window:
        return reject(RejectReason.REPLAY)
    replay_window.record(key, pkt.timestamp_ms, now_ms)
    return ACCEPT
