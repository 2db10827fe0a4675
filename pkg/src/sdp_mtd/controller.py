"""SDP controller: host registry, policy, SPA verification and grants."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Union

from .addressing import HostIdentity, NetAddress, Role
from .packets import fmt_ms
from .spa import (
    Credential,
    CredentialStore,
    ReplayWindow,
    SpaPacket,
    verify_spa,
)

DEFAULT_TTL_MS = 30_000
SESSION_TOKEN_LEN = 32


class ControllerError(Exception):
    pass


class DuplicateHost(ControllerError):
    pass


class UnknownHost(ControllerError):
    pass


@dataclass(frozen=True)
class ServiceGrant:
    service_id: bytes
    gateway_listen_port: int
    service_forward_address: NetAddress


@dataclass(frozen=True)
class AuthorizationDirective:
    client_id: bytes
    client_address: NetAddress
    allowed_services: tuple[ServiceGrant, ...]
    ttl_ms: int
    issued_at_ms: int
    gateway_address: Optional[NetAddress] = None

    def __post_init__(self) -> None:
        if self.ttl_ms <= 0:
            raise ValueError("ttl_ms must be positive")


@dataclass(frozen=True)
class SecureChannel:
    """Stand-in for a mutual-TLS tunnel between two registered hosts."""

    peer_a: bytes
    peer_b: bytes
    established_at_ms: int
    channel_id: int


@dataclass(frozen=True)
class CredentialUpdate:
    client_id: bytes
    session_token: bytes
    channel: SecureChannel
    gateway_address: Optional[NetAddress] = None


@dataclass(frozen=True)
class Grant:
    directive: AuthorizationDirective
    credential_update: CredentialUpdate
    gateway_channel: SecureChannel

    granted = True


@dataclass(frozen=True)
class Deny:
    reason: str

    granted = False


ControllerDecision = Union[Grant, Deny]

NOT_AUTHORIZED = "not_authorized"


@dataclass
class Controller:
    """Policy decision point. All mutation goes through the methods below."""

    ttl_ms: int = DEFAULT_TTL_MS
    rng: random.Random = field(default_factory=lambda: random.Random(0))
    replay_window: ReplayWindow = field(default_factory=ReplayWindow)
    identity: Optional[HostIdentity] = None

    def __post_init__(self) -> None:
        self.registry: dict[bytes, HostIdentity] = {}
        self.credentials = CredentialStore()
        self.policy: dict[bytes, frozenset[bytes]] = {}
        # gateway_id -> service_id -> (listen_port, forward address)
        self.exposures: dict[bytes, dict[bytes, tuple[int, NetAddress]]] = {}
        self.channels: list[SecureChannel] = []
        self.log: list[str] = []
        if self.identity is not None:
            self.registry[self.identity.host_id] = self.identity

    @property
    def own_id(self) -> bytes:
        return self.identity.host_id if self.identity else b"\0" * 16

    def register_host(self, identity: HostIdentity, credential: Credential | None = None) -> None:
        if identity.host_id in self.registry:
            raise DuplicateHost(identity.label)
        if credential is not None and credential.host_id != identity.host_id:
            raise ValueError("credential belongs to a different host")
        self.registry[identity.host_id] = identity
        if credential is not None:
            self.credentials.add(credential)

    def _require(self, host_id: bytes) -> HostIdentity:
        try:
            return self.registry[host_id]
        except KeyError:
            raise UnknownHost(host_id.hex()) from None

    def expose_service(self, service_id: bytes, gateway_id: bytes, listen_port: int,
                       forward_port: int | None = None) -> None:
        """Publish ``service_id`` behind ``gateway_id`` on ``listen_port``."""
        service = self._require(service_id)
        self._require(gateway_id)
        fwd = service.real_address
        if forward_port is not None:
            fwd = fwd.with_port(forward_port)
        self.exposures.setdefault(gateway_id, {})[service_id] = (listen_port, fwd)

    def set_policy(self, client_id: bytes, services) -> None:
        self._require(client_id)
        services = frozenset(services)
        for s in services:
            self._require(s)
        self.policy[client_id] = services

    def revoke_host(self, host_id: bytes) -> None:
        self._require(host_id)
        self.credentials.revoke(host_id)

    def lookup_credential(self, host_id: bytes) -> Optional[Credential]:
        return self.credentials.lookup(host_id)

    def _open_channel(self, a: bytes, b: bytes, now_ms: int) -> SecureChannel:
        for peer in (a, b):
            if peer != self.own_id:
                self._require(peer)
        ch = SecureChannel(a, b, now_ms, len(self.channels) + 1)
        self.channels.append(ch)
        return ch

    def _allowed_for(self, client_id: bytes, gateway_id: bytes) -> tuple[ServiceGrant, ...]:
        exposed = self.exposures.get(gateway_id, {})
        return tuple(ServiceGrant(sid, *exposed[sid])
                     for sid in sorted(self.policy.get(client_id, ())) if sid in exposed)

    def handle_forwarded_spa(self, packet: bytes | SpaPacket, gateway_id: bytes, now_ms: int,
                             source: NetAddress | None = None,
                             gateway_address: NetAddress | None = None) -> ControllerDecision:
        """Verify an SPA relayed by ``gateway_id`` and decide.

        ``source`` is the client address observed by the gateway; it
        defaults to the client's registered address.
        """
        gateway = self._require(gateway_id)
        if gateway.role is not Role.ACCEPTING_HOST:
            raise UnknownHost(f"{gateway.label} is not an accepting host")
        result = verify_spa(packet, self.lookup_credential, self.replay_window, now_ms)
        pkt = packet if isinstance(packet, SpaPacket) else None
        if pkt is None and len(packet) >= 17:
            client_id = bytes(packet[1:17])
        else:
            client_id = pkt.client_id if pkt else b""
        if not result:
            return self._deny(now_ms, client_id, result.reason.value)
        allowed = self._allowed_for(client_id, gateway_id)
        if not allowed:
            return self._deny(now_ms, client_id, NOT_AUTHORIZED)
        if source is None:
            source = self.registry[client_id].real_address
        directive = AuthorizationDirective(client_id, source, allowed, self.ttl_ms, now_ms,
                                           gateway_address)
        client_channel = self._open_channel(self.own_id, client_id, now_ms)
        update = CredentialUpdate(client_id, self.rng.randbytes(SESSION_TOKEN_LEN),
                                  client_channel, gateway_address)
        gateway_channel = self._open_channel(self.own_id, gateway_id, now_ms)
        services = ";".join(self._name(g.service_id) for g in allowed)
        self.log.append(f"{fmt_ms(now_ms)},grant,{client_id.hex()},,{services}")
        return Grant(directive, update, gateway_channel)

    def _deny(self, now_ms: int, client_id: bytes, reason: str) -> Deny:
        self.log.append(f"{fmt_ms(now_ms)},deny,{client_id.hex()},{reason},")
        return Deny(reason)

    def _name(self, host_id: bytes) -> str:
        host = self.registry.get(host_id)
        return host.label if host else host_id.hex()
