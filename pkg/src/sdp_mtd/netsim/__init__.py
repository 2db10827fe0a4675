"""Deterministic discrete-event simulation of the SDP+MTD deployment."""

from .attacks import attack_dos_flood, attack_port_scan, attack_probe_connect, attack_replay
from .engine import EventKind, SimEvent, Simulator
from .metrics import Metrics
from .network import Network
from .scenario import InvalidScenario, ScenarioResult, build_network, run_scenario
from .topology import Link, Topology, figure1

__all__ = [
    "EventKind", "InvalidScenario", "Link", "Metrics", "Network", "ScenarioResult", "SimEvent",
    "Simulator", "Topology", "attack_dos_flood", "attack_port_scan", "attack_probe_connect",
    "attack_replay", "build_network", "figure1", "run_scenario",
]
