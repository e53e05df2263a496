"""Packet-count bookkeeping and reliability-vetted path selection.

Every node tracks, per neighbor, how many data packets it sent to and
received from that neighbor.  Before a candidate route is trusted, a
traveling accumulator packet walks the path: at each hop the current
holder asks its next-hop neighbour for that neighbour's counts about the
holder, cross-checks them against its own mirror counts, and on a match
adds the neighbour's send/receive ratio to the running total.  A mismatch
zeroes the accumulator and sends it straight home; unanswered requests
burn retry and strike counters until the path is declared untrusted.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import TYPE_CHECKING, Callable

from .engine import MICROS_PER_MS
from .errors import NoRouteError
from .packets import (
    DriRepPayload,
    DriReqPayload,
    Packet,
    PacketKind,
    RelPayload,
)

if TYPE_CHECKING:
    from .node import Node

RECENT_IDS_KEPT = 8


class VetStatus(IntEnum):
    IN_PROGRESS = 0
    TRUSTED = 1
    UNTRUSTED = 2
    REL_ZEROED = 3


@dataclass(slots=True)
class DriEntry:
    """Counts of data packets exchanged with one neighbor."""

    sent: int = 0
    received: int = 0
    recent_packet_ids: deque = field(default_factory=lambda: deque(maxlen=RECENT_IDS_KEPT))


EMPTY_ENTRY = DriEntry()


@dataclass(frozen=True, slots=True)
class VettingConfig:
    t1_ms: int = 50
    k_r: int = 3
    k_m: int = 3
    delta_match: int = 2
    ratio_cap: float = 1.0


@dataclass(slots=True)
class VettingResult:
    status: VetStatus
    rel: float
    vetted_hops: int
    path: tuple[int, ...]


def record_data_packet(table: dict[int, DriEntry], neighbor: int, direction: str,
                       packet_id: int | None = None) -> dict[int, DriEntry]:
    """Bump the sent or received count for ``neighbor`` by one."""
    entry = table.get(neighbor)
    if entry is None:
        entry = DriEntry()
        table[neighbor] = entry
    if direction == "sent":
        entry.sent += 1
    elif direction == "received":
        entry.received += 1
    else:
        raise ValueError(f"unknown direction {direction!r}")
    if packet_id is not None:
        entry.recent_packet_ids.append(packet_id)
    return table


def reliability_ratio(entry: DriEntry, cfg: VettingConfig) -> float:
    """Sent-over-received quotient with total guards for empty denominators.

    No traffic at all is treated as neutral evidence (1.0); a neighbor
    that received without ever sending scores 0.0; a pure originator is
    clamped to ``ratio_cap`` instead of diverging.
    """
    if entry.received > 0:
        if entry.sent == 0:
            return 0.0
        return min(entry.sent / entry.received, cfg.ratio_cap)
    if entry.sent == 0:
        return 1.0
    return cfg.ratio_cap


def accumulate_rel(rel: float, ratio: float) -> float:
    return rel + ratio


def cross_check(local: DriEntry, reported: DriEntry, delta: int) -> bool:
    """Mirror consistency: my sent ~ your received and vice versa."""
    return (
        abs(local.sent - reported.received) <= delta
        and abs(local.received - reported.sent) <= delta
    )


def mean_route_reliability(rel: float, vetted_hops: int) -> float:
    """Accumulated reliability averaged over the hops that contributed."""
    if vetted_hops < 1:
        raise ValueError("mean route reliability needs at least one vetted hop")
    return rel / vetted_hops


def result_mrr(path: tuple[int, ...], result: VettingResult) -> float:
    """Selection score of one vetted candidate."""
    if result.status is VetStatus.TRUSTED:
        if len(path) == 2:  # destination is a direct neighbor: nothing to vet
            return 1.0
        return mean_route_reliability(result.rel, result.vetted_hops)
    return 0.0


def select_route(
    candidates: list[tuple[tuple[int, ...], VettingResult]],
) -> tuple[int, ...] | None:
    """Pick the maximum-reliability candidate, or None if nothing is safe.

    Untrusted candidates are excluded outright; the rest compete on mean
    route reliability, then table hop count, then first-hop id.  A best
    score of zero means every surviving candidate was reliability-zeroed,
    which is not a route worth using.
    """
    if not candidates:
        raise NoRouteError("no candidate routes to select from")
    best_key = None
    best_path = None
    for path, result in candidates:
        if result.status is VetStatus.UNTRUSTED:
            continue
        mrr = result_mrr(path, result)
        key = (-mrr, len(path) - 1, path[1], path)
        if best_key is None or key < best_key:
            best_key = key
            best_path = path
    if best_path is None or -best_key[0] <= 0.0:
        return None
    return best_path


# ---------------------------------------------------------------------------
# Distributed walk: holder-side state machine driven by the event loop.
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class HopProbe:
    """State of one in-flight next-hop interrogation at the current holder."""

    vet_id: int
    path: tuple[int, ...]
    hop_index: int  # index of the holder within path
    rel: float
    strikes: int  # mismatches / exhausted hops so far on this walk
    checked_hops: int
    attempt: int
    timeouts: int  # feedback-timer expiries within the current attempt
    cfg: VettingConfig


def begin_vetting(
    node: Node,
    path: tuple[int, ...],
    cfg: VettingConfig,
    on_done: Callable[[VettingResult], None],
) -> int:
    """Start vetting ``path`` (full source..destination sequence) at its source."""
    if len(path) < 2 or path[0] != node.id:
        raise NoRouteError("vetting needs a source..destination path starting here")
    sim = node.sim
    vet_id = sim.next_vet_id()
    if len(path) == 2:
        # direct neighbor: the walk is skipped entirely
        result = VettingResult(VetStatus.TRUSTED, 0.0, 0, path)
        sim.collector.on_vetting_done(result)
        on_done(result)
        return vet_id
    node.vet_waiters[vet_id] = (path, cfg, on_done)
    # generous upper bound on the whole walk, in case a return leg is lost
    worst_hop_ms = (cfg.k_m + 2) * cfg.k_r * cfg.t1_ms + 200
    deadline_us = len(path) * worst_hop_ms * MICROS_PER_MS
    sim.schedule_timer(node.id, deadline_us, ("vet_deadline", vet_id))
    _advance(node, vet_id, path, 0, 0.0, 0, 0, cfg)
    return vet_id


def _advance(
    node: Node,
    vet_id: int,
    path: tuple[int, ...],
    hop_index: int,
    rel: float,
    strikes: int,
    checked: int,
    cfg: VettingConfig,
) -> None:
    """Holder at path[hop_index] inspects its next-hop neighbour."""
    if hop_index + 1 == len(path) - 1:
        # next hop is the destination: send the accumulator home as-is
        _send_home(node, vet_id, path, hop_index, rel, strikes, checked,
                   VetStatus.TRUSTED)
        return
    probe = HopProbe(
        vet_id=vet_id,
        path=path,
        hop_index=hop_index,
        rel=rel,
        strikes=strikes,
        checked_hops=checked,
        attempt=1,
        timeouts=0,
        cfg=cfg,
    )
    node.rel_pending[vet_id] = probe
    _send_dri_request(node, probe)


def _send_dri_request(node: Node, probe: HopProbe) -> None:
    nhn = probe.path[probe.hop_index + 1]
    pkt = Packet(
        kind=PacketKind.DRI_REQ,
        origin=node.id,
        final_dst=nhn,
        prev_hop=node.id,
        seq_no=node.next_seq(),
        payload=DriReqPayload(probe.vet_id, node.id, probe.attempt),
    )
    node.sim.transmit_or_drop(node.id, nhn, pkt)
    node.sim.schedule_timer(
        node.id,
        probe.cfg.t1_ms * MICROS_PER_MS,
        ("rel_tf", probe.vet_id, probe.attempt, probe.timeouts),
    )


def handle_dri_req(node: Node, pkt: Packet) -> None:
    """An honest node reports its true counts about the asker."""
    payload: DriReqPayload = pkt.payload
    entry = node.dri.get(payload.asker, EMPTY_ENTRY)
    reply = Packet(
        kind=PacketKind.DRI_REP,
        origin=node.id,
        final_dst=payload.asker,
        prev_hop=node.id,
        seq_no=node.next_seq(),
        payload=DriRepPayload(
            payload.vet_id, payload.asker, payload.attempt, entry.sent, entry.received
        ),
    )
    node.sim.transmit(node.id, payload.asker, reply)


def handle_dri_rep(node: Node, pkt: Packet) -> None:
    payload: DriRepPayload = pkt.payload
    probe = node.rel_pending.get(payload.vet_id)
    if probe is None or payload.attempt != probe.attempt:
        return  # stale or duplicate reply
    del node.rel_pending[payload.vet_id]
    cfg = probe.cfg
    nhn = probe.path[probe.hop_index + 1]
    local = node.dri.get(nhn, EMPTY_ENTRY)
    reported = DriEntry(sent=payload.sent, received=payload.received)
    if cross_check(local, reported, cfg.delta_match):
        rel = accumulate_rel(probe.rel, reliability_ratio(reported, cfg))
        _forward_rel(node, probe, rel)
    else:
        strikes = probe.strikes + 1
        status = VetStatus.UNTRUSTED if strikes > cfg.k_m else VetStatus.REL_ZEROED
        _send_home(
            node, probe.vet_id, probe.path, probe.hop_index, 0.0, strikes,
            probe.checked_hops + 1, status,
        )


def handle_feedback_timer(node: Node, payload: tuple) -> None:
    _, vet_id, attempt, timeouts = payload
    probe = node.rel_pending.get(vet_id)
    if probe is None or probe.attempt != attempt or probe.timeouts != timeouts:
        return  # answered or superseded in the meantime
    cfg = probe.cfg
    probe.timeouts += 1
    if probe.timeouts < cfg.k_r:
        _send_dri_request(node, probe)
        return
    # retry budget exhausted: strike the hop and, if allowed, try it afresh
    probe.timeouts = 0
    probe.strikes += 1
    if probe.strikes > cfg.k_m:
        del node.rel_pending[vet_id]
        _send_home(
            node, probe.vet_id, probe.path, probe.hop_index, 0.0, probe.strikes,
            probe.checked_hops, VetStatus.UNTRUSTED,
        )
        return
    probe.attempt += 1
    _send_dri_request(node, probe)


def _forward_rel(node: Node, probe: HopProbe, rel: float) -> None:
    """Matched: the accumulator moves one hop down the path."""
    nhn = probe.path[probe.hop_index + 1]
    payload = RelPayload(
        vet_id=probe.vet_id,
        source=probe.path[0],
        destination=probe.path[-1],
        next_hop_neighbour=nhn,
        rel=rel,
        path=probe.path,
        hop_index=probe.hop_index + 1,
        strikes=probe.strikes,
        checked_hops=probe.checked_hops + 1,
        returning=False,
        status=int(VetStatus.IN_PROGRESS),
        cfg=probe.cfg,
    )
    pkt = Packet(
        kind=PacketKind.REL,
        origin=node.id,
        final_dst=nhn,
        prev_hop=node.id,
        seq_no=node.next_seq(),
        payload=payload,
    )
    node.sim.transmit_or_drop(node.id, nhn, pkt)


def _send_home(
    node: Node,
    vet_id: int,
    path: tuple[int, ...],
    hop_index: int,
    rel: float,
    strikes: int,
    checked: int,
    status: VetStatus,
) -> None:
    if hop_index == 0:
        _finalize(node, vet_id, rel, checked, status)
        return
    payload = RelPayload(
        vet_id=vet_id,
        source=path[0],
        destination=path[-1],
        next_hop_neighbour=path[hop_index],
        rel=rel,
        path=path,
        hop_index=hop_index - 1,
        strikes=strikes,
        checked_hops=checked,
        returning=True,
        status=int(status),
    )
    pkt = Packet(
        kind=PacketKind.REL,
        origin=node.id,
        final_dst=path[0],
        prev_hop=node.id,
        seq_no=node.next_seq(),
        payload=payload,
    )
    node.sim.transmit_or_drop(node.id, path[hop_index - 1], pkt)


def handle_rel(node: Node, pkt: Packet) -> None:
    payload: RelPayload = pkt.payload
    if payload.returning:
        if payload.hop_index == 0:
            _finalize(
                node, payload.vet_id, payload.rel, payload.checked_hops,
                VetStatus(payload.status),
            )
        else:
            relay = Packet(
                kind=PacketKind.REL,
                origin=pkt.origin,
                final_dst=payload.source,
                prev_hop=node.id,
                seq_no=node.next_seq(),
                payload=RelPayload(
                    payload.vet_id, payload.source, payload.destination,
                    payload.next_hop_neighbour, payload.rel, payload.path,
                    payload.hop_index - 1, payload.strikes, payload.checked_hops,
                    True, payload.status,
                ),
            )
            node.sim.transmit_or_drop(node.id, payload.path[payload.hop_index - 1], relay)
        return
    # forward leg: this node is the new holder
    _advance(
        node, payload.vet_id, payload.path, payload.hop_index, payload.rel,
        payload.strikes, payload.checked_hops, payload.cfg,
    )


def handle_vet_deadline(node: Node, payload: tuple) -> None:
    """Missing return trip: the whole vetting times out as untrusted."""
    _, vet_id = payload
    if vet_id in node.vet_waiters:
        _finalize(node, vet_id, 0.0, 0, VetStatus.UNTRUSTED)


def _finalize(node: Node, vet_id: int, rel: float, checked: int, status: VetStatus) -> None:
    waiter = node.vet_waiters.pop(vet_id, None)
    if waiter is None:
        return  # deadline already resolved it
    path, _cfg, on_done = waiter
    result = VettingResult(status=status, rel=rel, vetted_hops=checked, path=path)
    node.sim.collector.on_vetting_done(result)
    on_done(result)


def vet_path(sim, source: int, path, cfg: VettingConfig | None = None) -> VettingResult:
    """Synchronous facade: run the walk on the live simulator and block on it."""
    if cfg is None:
        cfg = sim.vetting_config or VettingConfig()
    done: list[VettingResult] = []
    begin_vetting(sim.nodes[source], tuple(path), cfg, done.append)
    sim.run(stop=lambda: bool(done))
    return done[0]
