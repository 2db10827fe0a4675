"""Software defined perimeter with moving target defense, plus a network simulator to attack it."""

from .addressing import HostIdentity, NetAddress, Role
from .config import ScenarioConfig, load_scenario
from .controller import AuthorizationDirective, Controller, Deny, Grant
from .gateway import FirewallRule, Gateway
from .mtd import AddressMapping, MtController, MtGateway
from .spa import Credential, ReplayWindow, SpaPacket, build_spa, verify_spa

__version__ = "0.1.0"

__all__ = [
    "AddressMapping", "AuthorizationDirective", "Controller", "Credential", "Deny", "FirewallRule",
    "Gateway", "Grant", "HostIdentity", "MtController", "MtGateway", "NetAddress", "ReplayWindow",
    "Role", "ScenarioConfig", "SpaPacket", "build_spa", "load_scenario", "verify_spa",
]
