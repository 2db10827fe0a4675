from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..config import ConfigError, ScenarioConfig, validate
from .attacks import ReplayPlan, ScanPlan, ProbePlan, plan_attack
from .metrics import Metrics
from .network import Network
from .topology import InvalidTopology


class InvalidScenario(ValueError):
    pass


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    metrics: Metrics
    trace: list[str]
    logs: dict[str, list[str]] = field(default_factory=dict)
    scan: Optional[dict[int, str]] = None
    unaccounted: list[int] = field(default_factory=list)
    network: Optional[Network] = field(default=None, repr=False, compare=False)

    def trace_text(self) -> str:
        return "".join(line + "\n" for line in self.trace)


def build_network(config: ScenarioConfig) -> Network:
    try:
        validate(config)
        return Network(config)
    except (ConfigError, InvalidTopology) as exc:
        raise InvalidScenario(str(exc)) from exc


def run_scenario(config: ScenarioConfig, seed: int | None = None) -> ScenarioResult:
    """Run one scenario to completion. Output is a pure function of (config, seed)."""
    if seed is not None:
        config = config.with_seed(seed)
    net = build_network(config)
    net.start()
    plan = plan_attack(net)
    net.finish()
    metrics = net.metrics
    scan = None
    if isinstance(plan, ScanPlan):
        scan = plan.report()
        metrics.ports_reported_open = [p for p, s in scan.items() if s == "open"]
    elif isinstance(plan, ProbePlan):
        metrics.probe_result = plan.report()
    elif isinstance(plan, ReplayPlan) and config.mode == "baseline":
        metrics.replay_accepted = int(plan.report()["replies"] > 0)
    return ScenarioResult(config, metrics, list(net.sim.trace), net.logs(), scan,
                          net.unaccounted(), net)
