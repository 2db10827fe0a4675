"""Deterministic discrete-event core.

Events fire in ``(fire_at_ms, sequence_no)`` order. Nothing here reads the
wall clock; time only advances by popping the queue.
"""

from __future__ import annotations

import enum
import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ..packets import SimPacket, fmt_ms


class EventKind(enum.Enum):
    DELIVER = "deliver"
    TIMER = "timer"
    INJECT = "inject"


@dataclass(order=True)
class SimEvent:
    fire_at_ms: float
    sequence_no: int
    kind: EventKind = field(compare=False)
    node: str = field(compare=False)
    packet: Optional[SimPacket] = field(default=None, compare=False)
    tag: str = field(default="", compare=False)
    data: Any = field(default=None, compare=False)


class Simulator:
    def __init__(self) -> None:
        self.now: float = 0.0
        self._queue: list[SimEvent] = []
        self._seq = itertools.count()
        self.handlers: dict[str, Any] = {}
        self.trace: list[str] = []
        self.events_run = 0

    def register(self, name: str, handler) -> None:
        self.handlers[name] = handler

    def schedule(self, at: float, kind: EventKind, node: str, *, packet: SimPacket | None = None,
                 tag: str = "", data: Any = None) -> SimEvent:
        if at < self.now:
            raise ValueError(f"cannot schedule in the past ({at} < {self.now})")
        ev = SimEvent(at, next(self._seq), kind, node, packet, tag, data)
        heapq.heappush(self._queue, ev)
        return ev

    def timer(self, at: float, node: str, tag: str, data: Any = None) -> SimEvent:
        return self.schedule(at, EventKind.TIMER, node, tag=tag, data=data)

    def inject(self, at: float, node: str, step: Callable[[], None] | Any, tag: str = "") -> SimEvent:
        return self.schedule(at, EventKind.INJECT, node, tag=tag, data=step)

    def record(self, node: str, action: str, detail: str = "") -> None:
        self.trace.append(f"{len(self.trace)},{fmt_ms(self.now)},{node},{action},{detail}")

    def pending(self) -> int:
        return len(self._queue)

    def run(self, until: float) -> None:
        while self._queue and self._queue[0].fire_at_ms <= until:
            ev = heapq.heappop(self._queue)
            self.now = ev.fire_at_ms
            self.events_run += 1
            handler = self.handlers[ev.node]
            if ev.kind is EventKind.DELIVER:
                handler.on_packet(ev.packet)
            elif ev.kind is EventKind.TIMER:
                handler.on_timer(ev.tag, ev.data)
            else:
                handler.on_inject(ev.tag, ev.data)
        self.now = max(self.now, until)

    def drain(self) -> list[SimEvent]:
        """Remove and return events left after :meth:`run` (packets still in flight)."""
        rest = sorted(self._queue)
        self._queue.clear()
        return rest
