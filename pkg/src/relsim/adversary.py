"""Black-hole node behavior: lure, absorb, and lie.

A black hole answers every route request with a forged reply that wins
the pre-vetting route ranking, silently drops every data-plane packet it
receives, and answers count-table queries with fabricated numbers.
Colluding pairs keep their fabrications mutually mirror-consistent so
they can vouch for each other, which still cannot survive a cross-check
against an honest predecessor's true counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import TYPE_CHECKING

from .errors import TopologyError
from .packets import (
    BaseRepPayload,
    BaseReqPayload,
    DriRepPayload,
    DriReqPayload,
    Packet,
    PacketKind,
    RrepPayload,
    RreqPayload,
)
from .topology import Topology

if TYPE_CHECKING:
    from .node import Node

FABRICATED_LOW = 20
FABRICATED_HIGH = 60


class Role:
    HONEST = "honest"
    BLACKHOLE = "blackhole"


@dataclass(slots=True)
class AdversaryProfile:
    node: int
    role: str = Role.HONEST
    collusion_group: int | None = None
    collusion_partner: int | None = None
    seq_inflation: int = 100
    claimed_hop_count: int = 1
    reply_prob: float = 1.0

    @property
    def is_blackhole(self) -> bool:
        return self.role == Role.BLACKHOLE


def honest_profiles(node_count: int) -> list[AdversaryProfile]:
    return [AdversaryProfile(node=i) for i in range(node_count)]


def fabricated_counts(node: Node, subject_profile: AdversaryProfile | None) -> tuple[int, int]:
    """Counts a black hole claims when queried.

    About outsiders: one uniform draw used for both directions, which is
    self-consistent but wildly off any honest node's true mirror.  About
    a collusion partner: the group's shared story, so partner claims stay
    mirror-consistent with each other.
    """
    profile = node.profile
    if (
        subject_profile is not None
        and profile.collusion_group is not None
        and subject_profile.collusion_group == profile.collusion_group
    ):
        story = node.sim.collusion_story(profile.collusion_group)
        return story, story
    value = node.rng.randint(FABRICATED_LOW, FABRICATED_HIGH)
    return value, value


def blackhole_on_rreq(node: Node, pkt: Packet) -> None:
    """Forge an immediate route reply instead of rebroadcasting.

    The claimed tail runs through the collusion partner when one exists,
    otherwise straight to the requested destination; the inflated
    sequence number makes the forgery rank first before vetting.
    """
    payload: RreqPayload = pkt.payload
    profile = node.profile
    key = (pkt.origin, payload.request_id)
    if key in node.seen_rreqs:
        return  # one forgery per request is plenty of lure
    node.seen_rreqs.add(key)
    if profile.collusion_partner is not None and profile.collusion_partner != payload.target:
        tail: tuple[int, ...] = (node.id, profile.collusion_partner, payload.target)
    else:
        tail = (node.id, payload.target)
    forged_path = payload.path + tail  # true prefix up to the previous relay
    forged_seq = payload.requested_seq + profile.seq_inflation
    claimed_hops = len(payload.path) - 1 + profile.claimed_hop_count
    reply = Packet(
        kind=PacketKind.RREP,
        origin=node.id,
        final_dst=payload.path[0],
        prev_hop=node.id,
        seq_no=node.next_seq(),
        hop_count=claimed_hops,
        payload=RrepPayload(
            request_id=payload.request_id,
            dest_seq=forged_seq,
            path=forged_path,
            pos=len(payload.path) - 1,
        ),
    )
    node.sim.transmit_or_drop(node.id, payload.path[-1], reply)


def blackhole_on_data(node: Node, pkt: Packet) -> None:
    """Absorb a data-plane packet: count the drop, forward nothing."""
    node.sim.collector.on_blackhole_drop(pkt)


def blackhole_on_dri_request(node: Node, pkt: Packet) -> None:
    payload: DriReqPayload = pkt.payload
    if node.profile.reply_prob <= 0.0 or (
        node.profile.reply_prob < 1.0 and node.rng.random() >= node.profile.reply_prob
    ):
        return  # stay silent; the asker's feedback timer will burn out
    subject_profile = node.sim.profiles[payload.asker]
    sent, received = fabricated_counts(node, subject_profile)
    reply = Packet(
        kind=PacketKind.DRI_REP,
        origin=node.id,
        final_dst=payload.asker,
        prev_hop=node.id,
        seq_no=node.next_seq(),
        payload=DriRepPayload(payload.vet_id, payload.asker, payload.attempt, sent, received),
    )
    node.sim.transmit_or_drop(node.id, payload.asker, reply)


def blackhole_on_base_request(node: Node, pkt: Packet) -> None:
    """Answer a flag-table interrogation with uniformly rosy lies."""
    payload: BaseReqPayload = pkt.payload
    if node.profile.reply_prob <= 0.0 or (
        node.profile.reply_prob < 1.0 and node.rng.random() >= node.profile.reply_prob
    ):
        return
    if payload.piece == 2:
        value: object = payload.expected_next
    else:
        value = (True, True)
    reply = Packet(
        kind=PacketKind.BASE_REP,
        origin=node.id,
        final_dst=payload.relay_path[0],
        prev_hop=node.id,
        seq_no=node.next_seq(),
        payload=BaseRepPayload(
            payload.vet_id, payload.piece, payload.subject, value,
            payload.relay_path, len(payload.relay_path) - 2, payload.attempt,
        ),
    )
    node.sim.transmit_or_drop(node.id, payload.relay_path[-2], reply)


def assign_adversaries(
    rng: Random,
    topology: Topology,
    protected: set[int],
    blackholes: int,
    colluding_pairs: int,
) -> list[AdversaryProfile]:
    """Place solo black holes and adjacent colluding pairs off the endpoints."""
    profiles = honest_profiles(topology.node_count)
    eligible = sorted(set(range(topology.node_count)) - protected)
    taken: set[int] = set()
    group = 0
    for _ in range(colluding_pairs):
        anchors = [
            u for u in eligible
            if u not in taken
            and any(v in eligible and v not in taken for v in topology.neighbors[u])
        ]
        if not anchors:
            raise TopologyError("not enough adjacent eligible nodes for colluding pairs")
        first = rng.choice(anchors)
        partners = [
            v for v in topology.neighbors[first] if v in eligible and v not in taken and v != first
        ]
        second = rng.choice(partners)
        for member, partner in ((first, second), (second, first)):
            profiles[member] = AdversaryProfile(
                node=member,
                role=Role.BLACKHOLE,
                collusion_group=group,
                collusion_partner=partner,
            )
        taken.update((first, second))
        group += 1
    remaining = [u for u in eligible if u not in taken]
    if blackholes > len(remaining):
        raise TopologyError("not enough eligible nodes for the requested black holes")
    for member in rng.sample(remaining, blackholes):
        profiles[member] = AdversaryProfile(node=member, role=Role.BLACKHOLE)
    return profiles
