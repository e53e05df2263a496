"""Shared fixture builders: line topologies with optional black holes."""

from __future__ import annotations

import pytest

from relsim.adversary import AdversaryProfile, Role, honest_profiles
from relsim.defense import VettingConfig
from relsim.engine import EventKind, LinkParams, Simulator
from relsim.packets import DataPayload, Packet, PacketKind
from relsim.topology import topology_from_positions

PROBE_SPACING_US = 5_000


def blackhole(node: int, **kwargs) -> AdversaryProfile:
    return AdversaryProfile(node=node, role=Role.BLACKHOLE, **kwargs)


def line_sim(
    n: int,
    roles: dict[int, AdversaryProfile] | None = None,
    seed: int = 7,
    link: LinkParams | None = None,
    vet_cfg: VettingConfig | None = None,
) -> Simulator:
    """Chain topology 0-1-...-(n-1) with 100 m spacing at exactly range."""
    positions = [(i * 100.0, 0.0) for i in range(n)]
    topo = topology_from_positions(positions, 100.0)
    profiles = honest_profiles(n)
    for idx, profile in (roles or {}).items():
        profiles[idx] = profile
    return Simulator(
        topo,
        profiles,
        link or LinkParams(),
        seed,
        vetting_config=vet_cfg or VettingConfig(),
    )


def warm_up(sim: Simulator, packets: int = 10) -> None:
    """Exchange probe data both ways on every edge; black holes stay mute."""

    def app(payload):
        _, sender, receiver = payload
        node = sim.nodes[sender]
        pkt = Packet(
            kind=PacketKind.DATA,
            origin=sender,
            final_dst=receiver,
            prev_hop=sender,
            seq_no=node.next_seq(),
            payload=DataPayload(-1, sim.now_us, (sender, receiver), 1),
        )
        sim.transmit(sender, receiver, pkt)

    previous = sim._app_handler
    sim.set_app_handler(app)
    for u, v in sim.topology.edges():
        for sender, receiver in ((u, v), (v, u)):
            if sim.profiles[sender].is_blackhole:
                continue
            for j in range(packets):
                sim.schedule_at(
                    sim.now_us + j * PROBE_SPACING_US, EventKind.APP, sender,
                    ("probe", sender, receiver),
                )
    sim.run()
    sim.set_app_handler(previous)


@pytest.fixture
def honest_line():
    sim = line_sim(4)
    warm_up(sim)
    return sim
