"""Deterministic discrete-event engine and link-level delivery.

Time is integer microseconds.  Events are totally ordered by
``(time_us, seq)`` where ``seq`` is a monotone insertion counter, so two
runs over the same scenario and seed replay the exact same trace.  Every
node owns a pseudo-random stream derived from ``(seed, node_id)``; link
jitter and loss are always drawn from the *sender's* stream.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import IntEnum
from random import Random
from typing import Callable

from .errors import SchedulingError, UndeliverableError
from .packets import VETTING_KINDS, Packet, PacketKind
from .topology import Topology

MICROS_PER_MS = 1_000
MICROS_PER_S = 1_000_000

_STREAM_SALT = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def derive_stream(seed: int, index: int) -> Random:
    """Independent deterministic RNG for stream ``index`` under ``seed``."""
    mixed = ((seed & _MASK64) * _STREAM_SALT + index * 0x100000001B3 + 1) & _MASK64
    return Random(mixed)


class EventKind(IntEnum):
    DELIVER = 0
    TIMER = 1
    APP = 2


@dataclass(slots=True)
class LinkParams:
    """Per-hop delivery model: fixed base delay, uniform jitter, iid loss."""

    delay_us: int = 2_000
    jitter_us: int = 1_000
    loss: float = 0.0


class Simulator:
    """Owns the clock, the event queue, and one Node per topology vertex."""

    def __init__(
        self,
        topology: Topology,
        profiles,
        link: LinkParams,
        seed: int,
        collector=None,
        vetting_config=None,
        log_events: bool = False,
    ):
        from .metrics import RunCollector
        from .node import Node

        self.topology = topology
        self.link = link
        self.seed = seed
        self.now_us = 0
        self.collector = collector if collector is not None else RunCollector()
        self.vetting_config = vetting_config
        self.profiles = profiles
        self.log_events = log_events
        self.event_log: list[tuple] = []
        self._queue: list[tuple[int, int, int, int, object]] = []
        self._seq = 0
        self._vet_counter = 0
        self._stories: dict[int, int] = {}
        self._app_handler: Callable[[object], None] | None = None
        self.rngs = [derive_stream(seed, i) for i in range(topology.node_count)]
        self.nodes = [
            Node(self, i, profiles[i], topology.neighbors[i])
            for i in range(topology.node_count)
        ]

    # -- scheduling ---------------------------------------------------

    def schedule_at(self, time_us: int, kind: EventKind, node_id: int, payload) -> None:
        if time_us < self.now_us:
            raise SchedulingError(
                f"event at t={time_us}us is before current time {self.now_us}us"
            )
        heapq.heappush(self._queue, (time_us, self._seq, int(kind), node_id, payload))
        self._seq += 1

    def schedule_in(self, delay_us: int, kind: EventKind, node_id: int, payload) -> None:
        self.schedule_at(self.now_us + delay_us, kind, node_id, payload)

    def schedule_timer(self, node_id: int, delay_us: int, payload) -> None:
        self.schedule_in(delay_us, EventKind.TIMER, node_id, payload)

    def set_app_handler(self, handler: Callable[[object], None]) -> None:
        self._app_handler = handler

    def next_vet_id(self) -> int:
        self._vet_counter += 1
        return self._vet_counter

    def collusion_story(self, group: int) -> int:
        """Shared fabricated packet count a collusion group sticks to."""
        story = self._stories.get(group)
        if story is None:
            story = derive_stream(self.seed, 0x10000 + group).randint(20, 60)
            self._stories[group] = story
        return story

    # -- link layer ---------------------------------------------------

    def transmit(self, src: int, dst: int, packet: Packet, jitter: bool = True) -> None:
        """Schedule unicast delivery of ``packet`` from ``src`` to ``dst``.

        Raises ``UndeliverableError`` for non-adjacent endpoints: honest
        protocol code must never unicast off the topology.
        """
        if dst not in self.topology.neighbors[src]:
            raise UndeliverableError(f"{src} -> {dst}: nodes are not adjacent")
        self._send(src, dst, packet, jitter)

    def transmit_or_drop(self, src: int, dst: int, packet: Packet, jitter: bool = True) -> bool:
        """Forwarding along unverified (possibly forged) paths: a hop that
        does not exist drops the packet instead of crashing the run."""
        if dst not in self.topology.neighbors[src]:
            self.collector.on_undeliverable(packet)
            return False
        self._send(src, dst, packet, jitter)
        return True

    def broadcast(self, src: int, packet: Packet, jitter: bool = True) -> int:
        """One independently drawn delivery per neighbor of ``src``."""
        count = 0
        for dst in self.topology.neighbors[src]:
            self._send(src, dst, packet, jitter)
            count += 1
        return count

    def _send(self, src: int, dst: int, packet: Packet, jitter: bool) -> None:
        rng = self.rngs[src]
        if packet.kind in VETTING_KINDS:
            self.collector.on_vet_message(packet)
        if packet.kind is PacketKind.DATA:
            # the sender's count reflects what it transmitted, lost or not
            self.nodes[src].note_data_sent(dst)
        if self.link.loss > 0.0 and rng.random() < self.link.loss:
            self.collector.on_link_drop(packet)
            return
        delay = self.link.delay_us
        if jitter and self.link.jitter_us > 0:
            delay += rng.randint(0, self.link.jitter_us)
        heapq.heappush(
            self._queue,
            (self.now_us + delay, self._seq, int(EventKind.DELIVER), dst, packet),
        )
        self._seq += 1

    # -- main loop ----------------------------------------------------

    def run(self, until_us: int | None = None, stop: Callable[[], bool] | None = None) -> None:
        """Process events in (time, seq) order until the queue drains.

        ``until_us`` leaves later events queued; ``stop`` is polled after
        each event (used by the synchronous vetting facades).
        """
        queue = self._queue
        while queue:
            time_us, _, kind, node_id, payload = queue[0]
            if until_us is not None and time_us > until_us:
                break
            heapq.heappop(queue)
            self.now_us = time_us
            if kind == EventKind.DELIVER:
                if self.log_events:
                    pkt: Packet = payload  # type: ignore[assignment]
                    self.event_log.append(
                        (time_us, "deliver", node_id, int(pkt.kind), pkt.origin, pkt.seq_no)
                    )
                self.nodes[node_id].on_packet(payload)
            elif kind == EventKind.TIMER:
                if self.log_events:
                    self.event_log.append((time_us, "timer", node_id, payload[0]))
                self.nodes[node_id].on_timer(payload)
            else:
                if self.log_events:
                    self.event_log.append((time_us, "app", node_id, payload))
                if self._app_handler is not None:
                    self._app_handler(payload)
            if stop is not None and stop():
                break

    def idle(self) -> bool:
        return not self._queue
