"""Scenario configuration: line-oriented ``section.key = value`` files.

Example::

    scenario.name = fig1_sdp_scan
    scenario.mode = sdp
    scenario.seed = 42
    attack.kind = scan
    attack.ports = 0-999

Blank lines and ``#`` comments are ignored. Unknown keys are errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from ipaddress import IPv4Address
from pathlib import Path
from typing import Optional

from .mtd import parse_pool_range

MODES = ("sdp", "baseline")
ATTACKS = ("none", "scan", "dos", "replay", "probe")
SPA_MODES = ("valid", "invalid", "none")


class ConfigError(Exception):
    pass


class ParseError(ConfigError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(ConfigError):
    def __init__(self, field_name: str, message: str, line: int | None = None):
        where = f"line {line}, " if line else ""
        super().__init__(f"{where}{field_name}: {message}")
        self.field = field_name
        self.line = line


@dataclass(frozen=True)
class ServiceConfig:
    listen_port: int
    port: int
    capacity_pps: float = 2000.0
    queue_len: int = 64
    gateways: tuple[str, ...] = ("gateway1",)


@dataclass(frozen=True)
class MtdConfig:
    enabled: bool = True
    lifespan_ms: float = 10_000.0
    pool_range: str = "10.0.100.10-10.0.100.59"
    idle_timeout_ms: float = 60_000.0
    gc_interval_ms: float = 1_000.0

    def pool(self) -> list[IPv4Address]:
        return parse_pool_range(self.pool_range)


@dataclass(frozen=True)
class BaselineConfig:
    port: int = 22
    service: str = "amf_smf"


@dataclass(frozen=True)
class ClientConfig:
    name: str = "ue_gnb"
    gateway: str = "gateway1"
    spa: str = "valid"
    spa_at_ms: float = 0.0
    service: str = "amf_smf"
    start_ms: float = 20.0
    packets: int = 10
    interval_ms: float = 10.0
    payload_len: int = 1000


@dataclass(frozen=True)
class AttackConfig:
    kind: str = "none"
    target: str = "gateway1"
    ports: tuple[int, int] = (0, 999)
    port: Optional[int] = None
    rate_pps: float = 0.0
    duration_ms: float = 0.0
    start_ms: float = 0.0
    interval_ms: float = 1.0
    tamper: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    mode: str
    seed: int
    duration_ms: float = 1_000.0
    topology: str = "figure1"
    latency_ms: float = 1.0
    link_latency: tuple[tuple[str, str, float], ...] = ()
    keys: tuple[tuple[str, bytes], ...] = ()
    policy: tuple[tuple[str, tuple[str, ...]], ...] = ()
    t_ms: float = 30_000.0
    spa_port: int = 62201
    spa_horizon_ms: int = 5000
    services: tuple[tuple[str, ServiceConfig], ...] = ()
    mtd: MtdConfig = field(default_factory=MtdConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    client: ClientConfig = field(default_factory=ClientConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)

    def with_mode(self, mode: str) -> ScenarioConfig:
        if mode not in MODES:
            raise ValidationError("scenario.mode", f"must be one of {MODES}")
        return replace(self, mode=mode)

    def with_seed(self, seed: int) -> ScenarioConfig:
        return replace(self, seed=seed)

    def with_attack(self, **changes) -> ScenarioConfig:
        return replace(self, attack=replace(self.attack, **changes))

    def with_client(self, **changes) -> ScenarioConfig:
        return replace(self, client=replace(self.client, **changes))

    def service_map(self) -> dict[str, ServiceConfig]:
        return dict(self.services)

    def key_map(self) -> dict[str, bytes]:
        return dict(self.keys)

    def policy_map(self) -> dict[str, tuple[str, ...]]:
        return dict(self.policy)


DEFAULT_SERVICES = (
    ("amf_smf", ServiceConfig(listen_port=44, port=7777)),
    ("upf", ServiceConfig(listen_port=45, port=8888)),
)
DEFAULT_POLICY = (("ue_gnb", ("amf_smf", "upf")),)


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition("-")
    lo_i = int(lo)
    hi_i = int(hi) if hi else lo_i
    if hi_i < lo_i:
        raise ValueError(f"empty range {text!r}")
    return lo_i, hi_i


def _names(text: str) -> tuple[str, ...]:
    return tuple(n.strip() for n in text.split(",") if n.strip())


def _num(text: str) -> float:
    return float(text)


def _converter(tp):
    return {
        "int": int, "float": _num, "bool": _bool, "str": str,
        "tuple[int, int]": _range, "tuple[str, ...]": _names, "Optional[int]": int,
    }[tp]


_SECTIONS = {"mtd": MtdConfig, "baseline": BaselineConfig, "client": ClientConfig,
             "attack": AttackConfig}
_SCENARIO_KEYS = {"name": str, "mode": str, "seed": int, "duration_ms": _num,
                  "topology": str, "latency_ms": _num}
_SDP_KEYS = {"t_ms": _num, "spa_port": int, "spa_horizon_ms": int}


def parse_scenario(text: str) -> ScenarioConfig:
    top: dict[str, object] = {}
    sections: dict[str, dict[str, object]] = {k: {} for k in _SECTIONS}
    keys: dict[str, bytes] = {}
    policy: dict[str, tuple[str, ...]] = {}
    services: dict[str, dict[str, object]] = {}
    links: list[tuple[str, str, float]] = []
    lines: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected 'section.key = value', got {raw.strip()!r}")
        lhs, value = (s.strip() for s in line.split("=", 1))
        parts = lhs.split(".")
        if len(parts) < 2 or not all(parts):
            raise ParseError(lineno, f"key must be dotted 'section.key', got {lhs!r}")
        if lhs in lines:
            raise ParseError(lineno, f"duplicate key {lhs!r} (first on line {lines[lhs]})")
        lines[lhs] = lineno
        section = parts[0]
        try:
            if section == "scenario" and len(parts) == 2 and parts[1] in _SCENARIO_KEYS:
                top[parts[1]] = _SCENARIO_KEYS[parts[1]](value)
            elif section == "sdp" and len(parts) == 2 and parts[1] in _SDP_KEYS:
                top[parts[1]] = _SDP_KEYS[parts[1]](value)
            elif section == "keys" and len(parts) == 2:
                keys[parts[1]] = bytes.fromhex(value)
            elif section == "policy" and len(parts) == 2:
                policy[parts[1]] = _names(value)
            elif section == "service" and len(parts) == 3:
                allowed = {f.name: f.type for f in fields(ServiceConfig)}
                if parts[2] not in allowed:
                    raise ParseError(lineno, f"unknown key {lhs!r}")
                services.setdefault(parts[1], {})[parts[2]] = _converter(allowed[parts[2]])(value)
            elif section == "link" and len(parts) == 2 and parts[1] == "latency":
                for entry in filter(None, (e.strip() for e in value.split(";"))):
                    a, b, ms = entry.split()
                    links.append((a, b, _num(ms)))
            elif section in _SECTIONS and len(parts) == 2:
                allowed = {f.name: f.type for f in fields(_SECTIONS[section])}
                if parts[1] not in allowed:
                    raise ParseError(lineno, f"unknown key {lhs!r}")
                sections[section][parts[1]] = _converter(allowed[parts[1]])(value)
            else:
                raise ParseError(lineno, f"unknown key {lhs!r}")
        except ParseError:
            raise
        except ValueError as exc:
            raise ValidationError(lhs, str(exc), lineno) from None

    if "seed" not in top:
        raise ValidationError("scenario.seed", "missing (no implicit randomness)")
    for required in ("name", "mode"):
        if required not in top:
            raise ValidationError(f"scenario.{required}", "missing")

    svc = dict(DEFAULT_SERVICES)
    for name, values in services.items():
        base = svc.get(name)
        if base is None:
            if not {"listen_port", "port"} <= values.keys():
                raise ValidationError(f"service.{name}", "new services need listen_port and port")
            svc[name] = ServiceConfig(**values)
        else:
            svc[name] = replace(base, **values)

    cfg = ScenarioConfig(
        **top,
        link_latency=tuple(links),
        keys=tuple(sorted(keys.items())),
        policy=tuple(sorted(policy.items())) if policy else DEFAULT_POLICY,
        services=tuple(sorted(svc.items())),
        **{name: cls(**sections[name]) for name, cls in _SECTIONS.items()},
    )
    validate(cfg, lines)
    return cfg


def validate(cfg: ScenarioConfig, lines: dict[str, int] | None = None) -> None:
    from .netsim.topology import preset

    lines = lines or {}

    def fail(key: str, msg: str):
        raise ValidationError(key, msg, lines.get(key))

    if cfg.mode not in MODES:
        fail("scenario.mode", f"must be one of {MODES}, got {cfg.mode!r}")
    if cfg.attack.kind not in ATTACKS:
        fail("attack.kind", f"must be one of {ATTACKS}, got {cfg.attack.kind!r}")
    if cfg.client.spa not in SPA_MODES:
        fail("client.spa", f"must be one of {SPA_MODES}")
    if cfg.t_ms <= 0:
        fail("sdp.t_ms", "must be positive")
    if cfg.duration_ms <= 0:
        fail("scenario.duration_ms", "must be positive")
    try:
        topo = preset(cfg.topology)
    except KeyError:
        fail("scenario.topology", f"unknown preset {cfg.topology!r}")
    names = {n.name for n in topo.nodes}

    def known(key: str, name: str):
        if name not in names:
            fail(key, f"unknown host {name!r}")

    for host, key in cfg.keys:
        known(f"keys.{host}", host)
        if len(key) != 32:
            fail(f"keys.{host}", "key must be 32 bytes (64 hex chars)")
    for client, services in cfg.policy:
        known(f"policy.{client}", client)
        for s in services:
            known(f"policy.{client}", s)
    for name, svc in cfg.services:
        known(f"service.{name}.port", name)
        for gw in svc.gateways:
            known(f"service.{name}.gateways", gw)
        if svc.capacity_pps <= 0:
            fail(f"service.{name}.capacity_pps", "must be positive")
    for a, b, _ in cfg.link_latency:
        known("link.latency", a)
        known("link.latency", b)
    known("client.name", cfg.client.name)
    known("client.gateway", cfg.client.gateway)
    known("client.service", cfg.client.service)
    known("baseline.service", cfg.baseline.service)
    known("attack.target", cfg.attack.target)
    if cfg.client.service not in dict(cfg.services):
        fail("client.service", f"{cfg.client.service!r} has no service entry")
    try:
        pool = set(cfg.mtd.pool())
    except ValueError as exc:
        fail("mtd.pool_range", str(exc))
    reals = {n.real_address.ip for n in topo.nodes}
    if pool & reals:
        fail("mtd.pool_range", f"overlaps host addresses {sorted(map(str, pool & reals))}")


def load_scenario(path: str | Path) -> ScenarioConfig:
    text = Path(path).read_text()
    return parse_scenario(text)
