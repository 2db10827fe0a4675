from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Terminal states for an injected packet. Every injected packet ends in exactly one.
DISPOSITIONS = (
    "delivered_to_service",
    "delivered_to_controller",
    "dropped_at_gateway",
    "dropped_at_mtd",
    "queue_overflow",
    "unroutable",
    "in_flight",
)


class DuplicateDisposition(RuntimeError):
    pass


@dataclass
class Metrics:
    injected: int = 0
    delivered_to_service: int = 0
    delivered_to_controller: int = 0
    dropped_at_gateway: int = 0
    dropped_at_mtd: int = 0
    queue_overflow: int = 0
    unroutable: int = 0
    in_flight: int = 0
    grants: int = 0
    denials: int = 0
    denial_reasons: list[str] = field(default_factory=list)
    latency_samples: dict[int, list[float]] = field(default_factory=dict)
    legit_payload_bytes: int = 0
    duration_ms: float = 0.0
    ports_reported_open: list[int] = field(default_factory=list)
    attacker_at_service: int = 0
    controller_untrusted: int = 0
    flood_sent: int = 0
    probe_result: Optional[str] = None
    replay_accepted: int = 0
    mutations: int = 0
    legit_sent: int = 0
    legit_replies: int = 0
    _fate: dict[int, str] = field(default_factory=dict, repr=False, compare=False)

    def register(self) -> int:
        self.injected += 1
        return self.injected

    def dispose(self, packet_id: int, category: str) -> None:
        if category not in DISPOSITIONS:
            raise ValueError(category)
        if packet_id <= 0:
            return
        if packet_id in self._fate:
            raise DuplicateDisposition(
                f"packet {packet_id} already {self._fate[packet_id]}, now {category}")
        self._fate[packet_id] = category
        setattr(self, category, getattr(self, category) + 1)

    def fate(self, packet_id: int) -> Optional[str]:
        return self._fate.get(packet_id)

    def accounted(self) -> int:
        return sum(getattr(self, c) for c in DISPOSITIONS)

    def all_latencies(self) -> np.ndarray:
        samples = [x for flow in sorted(self.latency_samples) for x in self.latency_samples[flow]]
        return np.asarray(samples, dtype=float)

    @property
    def mean_latency_ms(self) -> float:
        lat = self.all_latencies()
        return float(lat.mean()) if lat.size else float("nan")

    @property
    def goodput_Bps(self) -> float:
        """Legit payload bytes delivered to services per simulated second."""
        if self.duration_ms <= 0:
            return 0.0
        return self.legit_payload_bytes / (self.duration_ms / 1000.0)

    @property
    def ports_open(self) -> int:
        return len(self.ports_reported_open)

    def rows(self) -> list[tuple[str, object]]:
        """Stable (metric, value) pairs for reports."""
        return [
            ("injected", self.injected),
            ("delivered_to_service", self.delivered_to_service),
            ("delivered_to_controller", self.delivered_to_controller),
            ("dropped_at_gateway", self.dropped_at_gateway),
            ("dropped_at_mtd", self.dropped_at_mtd),
            ("queue_overflow", self.queue_overflow),
            ("unroutable", self.unroutable),
            ("in_flight", self.in_flight),
            ("grants", self.grants),
            ("denials", self.denials),
            ("denial_reasons", ";".join(self.denial_reasons)),
            ("legit_sent", self.legit_sent),
            ("legit_replies", self.legit_replies),
            ("mean_latency_ms", self.mean_latency_ms),
            ("goodput_Bps", self.goodput_Bps),
            ("ports_open", self.ports_open),
            ("ports_reported_open", ";".join(map(str, self.ports_reported_open))),
            ("attacker_at_service", self.attacker_at_service),
            ("controller_untrusted", self.controller_untrusted),
            ("flood_sent", self.flood_sent),
            ("probe_result", self.probe_result or ""),
            ("replay_accepted", self.replay_accepted),
            ("mutations", self.mutations),
        ]
