"""On-demand route discovery: request flooding, replies, and ping checks.

Route requests flood with duplicate suppression and accumulate the node
sequence they traverse, so every reply hands the source a complete
candidate path.  Replies travel the recorded path backwards, installing
forward routes at the relays.  Candidate ranking before any vetting is
highest destination sequence number, then fewest hops, then lowest
next-hop id; this is exactly the ordering a forged reply is built to win.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

from .engine import MICROS_PER_MS
from .errors import NoRouteError
from .packets import (
    Packet,
    PacketKind,
    PingPayload,
    PongPayload,
    RrepPayload,
    RreqPayload,
)

if TYPE_CHECKING:
    from .node import Node

DISCOVERY_WINDOW_MS = 200
NO_EXPIRY = 1 << 62


@dataclass(slots=True)
class RouteEntry:
    destination: int
    next_hop: int
    hop_count: int
    reliability_count: float
    dest_seq_no: int
    expiry_us: int
    path: tuple[int, ...] = ()


class RoutingTable:
    """Destination -> candidate entries, at most one per next hop."""

    def __init__(self) -> None:
        self._routes: dict[int, list[RouteEntry]] = {}

    def upsert(self, entry: RouteEntry) -> None:
        entries = self._routes.setdefault(entry.destination, [])
        for i, existing in enumerate(entries):
            if existing.next_hop == entry.next_hop:
                if (entry.dest_seq_no, -entry.hop_count) >= (
                    existing.dest_seq_no, -existing.hop_count
                ):
                    entries[i] = entry
                return
        entries.append(entry)

    def entries(self, destination: int) -> list[RouteEntry]:
        return self._routes.get(destination, [])

    def best(self, destination: int, now_us: int) -> RouteEntry | None:
        live = [e for e in self.entries(destination) if e.expiry_us > now_us]
        if not live:
            return None
        return min(live, key=rank_key)


def rank_key(entry: RouteEntry):
    return (-entry.dest_seq_no, entry.hop_count, entry.next_hop)


@dataclass(frozen=True, slots=True)
class Candidate:
    """One route reply as seen by the discovering source."""

    path: tuple[int, ...]
    dest_seq: int
    adv_hops: int

    @property
    def in_list(self) -> tuple[int, ...]:
        return self.path[1:-1]


def candidate_rank_key(c: Candidate):
    return (-c.dest_seq, c.adv_hops, c.path[1] if len(c.path) > 1 else -1, c.path)


@dataclass(slots=True)
class DiscoveryState:
    request_id: int
    target: int
    candidates: list[Candidate] = field(default_factory=list)
    seen_paths: set[tuple[int, ...]] = field(default_factory=set)
    on_done: Callable[[list[Candidate]], None] | None = None


def initiate_discovery(
    node: Node,
    destination: int,
    on_done: Callable[[list[Candidate]], None],
    window_ms: int = DISCOVERY_WINDOW_MS,
) -> int:
    """Flood a fresh route request and collect replies for a fixed window."""
    if destination == node.id:
        raise NoRouteError("discovery to self is a no-op")
    node.request_counter += 1
    request_id = node.request_counter
    known = node.routes.best(destination, node.sim.now_us)
    requested_seq = known.dest_seq_no if known is not None else 0
    node.discoveries[request_id] = DiscoveryState(
        request_id=request_id, target=destination, on_done=on_done
    )
    node.seen_rreqs.add((node.id, request_id))
    rreq = Packet(
        kind=PacketKind.RREQ,
        origin=node.id,
        final_dst=destination,
        prev_hop=node.id,
        seq_no=node.next_seq(),
        hop_count=0,
        payload=RreqPayload(request_id, destination, requested_seq, (node.id,)),
    )
    # control flood runs jitter-free so the first copy anywhere arrives
    # along a minimum-hop chain
    node.sim.broadcast(node.id, rreq, jitter=False)
    node.sim.schedule_timer(
        node.id, window_ms * MICROS_PER_MS, ("discovery", request_id)
    )
    return request_id


def handle_rreq(node: Node, pkt: Packet) -> None:
    payload: RreqPayload = pkt.payload
    key = (pkt.origin, payload.request_id)
    if key in node.seen_rreqs:
        return
    node.seen_rreqs.add(key)
    if payload.target == node.id:
        node.seq_no += 1
        _send_rrep(node, payload.path + (node.id,), node.seq_no, payload.request_id)
        return
    cached = node.routes.best(payload.target, node.sim.now_us)
    if (
        cached is not None
        and cached.dest_seq_no >= payload.requested_seq
        and cached.path
        and not set(cached.path[1:]) & set(payload.path)
    ):
        _send_rrep(
            node, payload.path + cached.path, cached.dest_seq_no, payload.request_id
        )
        return
    relay = Packet(
        kind=PacketKind.RREQ,
        origin=pkt.origin,
        final_dst=payload.target,
        prev_hop=node.id,
        seq_no=node.next_seq(),
        hop_count=pkt.hop_count + 1,
        payload=RreqPayload(
            payload.request_id,
            payload.target,
            payload.requested_seq,
            payload.path + (node.id,),
        ),
    )
    node.sim.broadcast(node.id, relay, jitter=False)


def _send_rrep(node: Node, path: tuple[int, ...], dest_seq: int, request_id: int) -> None:
    """Unicast a reply back along the recorded path; ``path`` starts at the
    requesting source and this node sits at ``path.index(node.id)``."""
    my_pos = path.index(node.id)
    if my_pos == 0:
        return
    reply = Packet(
        kind=PacketKind.RREP,
        origin=node.id,
        final_dst=path[0],
        prev_hop=node.id,
        seq_no=node.next_seq(),
        hop_count=len(path) - 1,
        payload=RrepPayload(request_id, dest_seq, path, my_pos - 1),
    )
    node.sim.transmit_or_drop(node.id, path[my_pos - 1], reply)


def handle_rrep(node: Node, pkt: Packet) -> None:
    payload: RrepPayload = pkt.payload
    pos = payload.pos
    if payload.path[pos] != node.id:
        return  # mis-relayed reply
    remaining = len(payload.path) - 1 - pos
    if not node.profile.is_blackhole:
        node.routes.upsert(
            RouteEntry(
                destination=payload.path[-1],
                next_hop=payload.path[pos + 1],
                hop_count=remaining,
                reliability_count=0.0,
                dest_seq_no=payload.dest_seq,
                expiry_us=NO_EXPIRY,
                path=payload.path[pos:],
            )
        )
    if pos == 0:
        state = node.discoveries.get(payload.request_id)
        if state is None:
            return  # reply for an unknown or finished discovery
        if payload.path not in state.seen_paths:
            state.seen_paths.add(payload.path)
            state.candidates.append(
                Candidate(path=payload.path, dest_seq=payload.dest_seq,
                          adv_hops=pkt.hop_count)
            )
        return
    relay = Packet(
        kind=PacketKind.RREP,
        origin=pkt.origin,
        final_dst=payload.path[0],
        prev_hop=node.id,
        seq_no=node.next_seq(),
        hop_count=pkt.hop_count,
        payload=RrepPayload(payload.request_id, payload.dest_seq, payload.path, pos - 1),
    )
    node.sim.transmit_or_drop(node.id, payload.path[pos - 1], relay)


def handle_discovery_timer(node: Node, payload: tuple) -> None:
    _, request_id = payload
    state = node.discoveries.pop(request_id, None)
    if state is None or state.on_done is None:
        return
    state.candidates.sort(key=candidate_rank_key)
    state.on_done(state.candidates)


# -- destination liveness ---------------------------------------------------


def ping_destination(
    node: Node,
    destination: int,
    on_result: Callable[[bool, tuple[int, ...]], None],
    timeout_ms: int | None = None,
) -> None:
    """Probe the stored route; silence means the caller should rediscover."""
    entry = node.routes.best(destination, node.sim.now_us)
    if entry is None or not entry.path:
        raise NoRouteError(f"node {node.id} has no stored route to {destination}")
    node.ping_counter += 1
    ping_id = node.ping_counter
    if timeout_ms is None:
        timeout_ms = 4 * len(entry.path) * 3 + 50  # generous round trip bound
    node.ping_waits[ping_id] = (entry.path, on_result)
    pkt = Packet(
        kind=PacketKind.PING,
        origin=node.id,
        final_dst=destination,
        prev_hop=node.id,
        seq_no=node.next_seq(),
        payload=PingPayload(ping_id, entry.path, 1),
    )
    node.sim.transmit_or_drop(node.id, entry.path[1], pkt)
    node.sim.schedule_timer(node.id, timeout_ms * MICROS_PER_MS, ("ping", ping_id))


def handle_ping(node: Node, pkt: Packet) -> None:
    payload: PingPayload = pkt.payload
    if payload.path[payload.pos] != node.id:
        return
    if payload.pos == len(payload.path) - 1:
        pong = Packet(
            kind=PacketKind.PONG,
            origin=node.id,
            final_dst=payload.path[0],
            prev_hop=node.id,
            seq_no=node.next_seq(),
            payload=PongPayload(payload.ping_id, payload.path, payload.pos - 1),
        )
        node.sim.transmit_or_drop(node.id, payload.path[payload.pos - 1], pong)
        return
    fwd = Packet(
        kind=PacketKind.PING,
        origin=pkt.origin,
        final_dst=pkt.final_dst,
        prev_hop=node.id,
        seq_no=node.next_seq(),
        payload=PingPayload(payload.ping_id, payload.path, payload.pos + 1),
    )
    node.sim.transmit_or_drop(node.id, payload.path[payload.pos + 1], fwd)


def handle_pong(node: Node, pkt: Packet) -> None:
    payload: PongPayload = pkt.payload
    if payload.path[payload.pos] != node.id:
        return
    if payload.pos == 0:
        waiter = node.ping_waits.pop(payload.ping_id, None)
        if waiter is not None:
            path, on_result = waiter
            on_result(True, path)
        return
    back = Packet(
        kind=PacketKind.PONG,
        origin=pkt.origin,
        final_dst=pkt.final_dst,
        prev_hop=node.id,
        seq_no=node.next_seq(),
        payload=PongPayload(payload.ping_id, payload.path, payload.pos - 1),
    )
    node.sim.transmit_or_drop(node.id, payload.path[payload.pos - 1], back)


def handle_ping_timer(node: Node, payload: tuple) -> None:
    _, ping_id = payload
    waiter = node.ping_waits.pop(ping_id, None)
    if waiter is not None:
        path, on_result = waiter
        on_result(False, path)
