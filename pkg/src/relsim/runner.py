"""Single-run orchestration: warm-up, discovery, vetting, traffic, metrics.

A run builds a connected topology, places the adversaries away from the
flow endpoints, floods warm-up probes so the per-neighbor count and flag
tables hold real evidence, then starts the application flows.  Each flow
acquires a route according to the configured scheme, buffering generated
packets until a route is installed; flows that never obtain a route keep
generating and are reported as starved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import aodv, baseline, defense, metrics
from .adversary import assign_adversaries
from .engine import MICROS_PER_MS, MICROS_PER_S, EventKind, LinkParams, Simulator, derive_stream
from .errors import TopologyError, UndefinedMetricError
from .packets import DataPayload, Packet, PacketKind
from .scenario import ScenarioConfig
from .topology import build_connected_topology

SCENARIO_STREAM = 0x20000
WARMUP_START_MS = 50
PROBE_SPACING_MS = 5
FIRST_FLOW_START_S = 1.0
FLOW_STAGGER_S = 0.1


@dataclass(slots=True)
class RunRecord:
    scenario: str
    scheme: str
    blackholes: int
    seed: int
    throughput_pct: float
    loss_pct: float
    delay_s: float
    mrr: float
    vet_msgs: int
    untrusted_paths: int
    starved_flows: int
    failed: bool = False
    failure_reason: str = ""


@dataclass(slots=True)
class _FlowDriver:
    flow_id: int
    source: int
    destination: int
    start_us: int
    packet_count: int
    route: tuple[int, ...] | None = None
    no_route: bool = False
    buffer: list | None = None
    sent_seq: int = 0

    def __post_init__(self):
        if self.buffer is None:
            self.buffer = []


class ScenarioRun:
    """Mutable state of one simulation run."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        rng = derive_stream(cfg.seed, SCENARIO_STREAM)
        self.topology = build_connected_topology(
            cfg.nodes, cfg.area_side, cfg.radio_range, rng
        )
        self.flows: list[_FlowDriver] = []
        endpoints: set[int] = set()
        total = cfg.nodes
        for i in range(cfg.flows):
            src = rng.randrange(total)
            dst = rng.randrange(total - 1)
            if dst >= src:
                dst += 1
            endpoints.update((src, dst))
            start_us = int((FIRST_FLOW_START_S + i * FLOW_STAGGER_S) * MICROS_PER_S)
            horizon = cfg.duration - (FIRST_FLOW_START_S + i * FLOW_STAGGER_S)
            count = max(0, math.floor(horizon * cfg.packet_rate))
            self.flows.append(
                _FlowDriver(
                    flow_id=i, source=src, destination=dst,
                    start_us=start_us, packet_count=count,
                )
            )
        profiles = assign_adversaries(
            rng, self.topology, endpoints, cfg.blackholes, cfg.colluding_pairs
        )
        link = LinkParams(
            delay_us=int(cfg.link_delay_ms * MICROS_PER_MS),
            jitter_us=int(cfg.link_jitter_ms * MICROS_PER_MS),
            loss=cfg.link_loss,
        )
        self.vet_cfg = defense.VettingConfig(
            t1_ms=cfg.t1_ms, k_r=cfg.k_r, k_m=cfg.k_m,
            delta_match=cfg.delta_match, ratio_cap=cfg.ratio_cap,
        )
        self.sim = Simulator(
            self.topology, profiles, link, cfg.seed, vetting_config=self.vet_cfg
        )
        self.sim.set_app_handler(self._on_app_event)
        for flow in self.flows:
            self.sim.collector.register_flow(flow.flow_id, flow.source, flow.destination)

    # -- warm-up --------------------------------------------------------

    def schedule_warmup(self) -> None:
        cfg = self.cfg
        if cfg.warmup_packets == 0:
            return
        start = WARMUP_START_MS * MICROS_PER_MS
        spacing = PROBE_SPACING_MS * MICROS_PER_MS
        for u, v in self.topology.edges():
            for sender, receiver in ((u, v), (v, u)):
                if self.sim.profiles[sender].is_blackhole:
                    continue  # black holes originate no traffic
                for j in range(cfg.warmup_packets):
                    self.sim.schedule_at(
                        start + j * spacing, EventKind.APP, sender,
                        ("probe", sender, receiver),
                    )

    def schedule_flows(self) -> None:
        for flow in self.flows:
            if flow.packet_count > 0:
                self.sim.schedule_at(
                    flow.start_us, EventKind.APP, flow.source,
                    ("flow_start", flow.flow_id),
                )

    # -- app events -------------------------------------------------------

    def _on_app_event(self, payload: tuple) -> None:
        tag = payload[0]
        if tag == "probe":
            self._send_probe(payload[1], payload[2])
        elif tag == "flow_start":
            flow = self.flows[payload[1]]
            self._generate_packet(flow, 0)
            self._acquire_route(flow)
        elif tag == "flow_send":
            self._generate_packet(self.flows[payload[1]], payload[2])

    def _send_probe(self, sender: int, receiver: int) -> None:
        node = self.sim.nodes[sender]
        pkt = Packet(
            kind=PacketKind.DATA,
            origin=sender,
            final_dst=receiver,
            prev_hop=sender,
            seq_no=node.next_seq(),
            payload=DataPayload(-1, self.sim.now_us, (sender, receiver), 1),
        )
        self.sim.transmit(sender, receiver, pkt)

    def _generate_packet(self, flow: _FlowDriver, index: int) -> None:
        self.sim.collector.on_generated(flow.flow_id)
        created = self.sim.now_us
        if flow.route is not None:
            self._send_data(flow, created)
        else:
            flow.buffer.append(created)
        nxt = index + 1
        if nxt < flow.packet_count:
            when = flow.start_us + int(nxt / self.cfg.packet_rate * MICROS_PER_S)
            self.sim.schedule_at(
                when, EventKind.APP, flow.source, ("flow_send", flow.flow_id, nxt)
            )

    def _send_data(self, flow: _FlowDriver, created_us: int) -> None:
        node = self.sim.nodes[flow.source]
        pkt = Packet(
            kind=PacketKind.DATA,
            origin=flow.source,
            final_dst=flow.destination,
            prev_hop=flow.source,
            seq_no=node.next_seq(),
            payload=DataPayload(flow.flow_id, created_us, flow.route, 1),
        )
        self.sim.transmit_or_drop(flow.source, flow.route[1], pkt)

    # -- route acquisition ------------------------------------------------

    def _acquire_route(self, flow: _FlowDriver) -> None:
        node = self.sim.nodes[flow.source]
        entry = node.routes.best(flow.destination, self.sim.now_us)
        if entry is not None and entry.path:
            aodv.ping_destination(
                node, flow.destination,
                lambda alive, path, f=flow: self._after_ping(f, alive, path),
            )
            return
        self._discover(flow)

    def _after_ping(self, flow: _FlowDriver, alive: bool, path: tuple[int, ...]) -> None:
        if not alive:
            self._discover(flow)
            return
        if self.cfg.scheme == "undefended":
            self._activate(flow, path)
        else:
            # path answered but carries no fresh vetting evidence: re-vet it
            self._vet_candidates(flow, [aodv.Candidate(path, 0, len(path) - 1)])

    def _discover(self, flow: _FlowDriver) -> None:
        node = self.sim.nodes[flow.source]
        aodv.initiate_discovery(
            node, flow.destination,
            lambda cands, f=flow: self._on_candidates(f, cands),
        )

    def _on_candidates(self, flow: _FlowDriver, candidates: list[aodv.Candidate]) -> None:
        if not candidates:
            flow.no_route = True
            return
        if self.cfg.scheme == "undefended":
            best = min(candidates, key=aodv.candidate_rank_key)
            self._activate(flow, best.path)
            return
        self._vet_candidates(flow, sorted(candidates, key=aodv.candidate_rank_key))

    def _vet_candidates(self, flow: _FlowDriver, candidates: list[aodv.Candidate]) -> None:
        node = self.sim.nodes[flow.source]
        results: list[tuple[tuple[int, ...], defense.VettingResult]] = []
        order = list(candidates)
        baseline_mode = self.cfg.scheme == "baseline"

        def vet_next() -> None:
            if not order:
                finish()
                return
            candidate = order.pop(0)
            if baseline_mode:
                baseline.begin_baseline_vetting(
                    node, candidate.path, self.vet_cfg, collect
                )
            else:
                defense.begin_vetting(node, candidate.path, self.vet_cfg, collect)

        def collect(result: defense.VettingResult) -> None:
            results.append((result.path, result))
            if baseline_mode and result.status is defense.VetStatus.TRUSTED:
                # ranked order: the first trusted candidate is the pick
                self._activate(flow, result.path)
                return
            vet_next()

        def finish() -> None:
            if baseline_mode:
                flow.no_route = True
                return
            chosen = defense.select_route(results)
            if chosen is None:
                flow.no_route = True
                return
            self._activate(flow, chosen)

        vet_next()

    def _activate(self, flow: _FlowDriver, path: tuple[int, ...]) -> None:
        flow.route = path
        node = self.sim.nodes[flow.source]
        mrr = metrics.ground_truth_route_mrr(self.sim, path, self.vet_cfg)
        node.routes.upsert(
            aodv.RouteEntry(
                destination=flow.destination,
                next_hop=path[1],
                hop_count=len(path) - 1,
                reliability_count=mrr * max(1, len(path) - 2),
                dest_seq_no=max(
                    (e.dest_seq_no for e in node.routes.entries(flow.destination)),
                    default=0,
                ),
                expiry_us=aodv.NO_EXPIRY,
                path=path,
            )
        )
        self.sim.collector.on_route_selected(flow.flow_id, path, mrr, self.sim.now_us)
        for created in flow.buffer:
            self._send_data(flow, created)
        flow.buffer.clear()

    # -- execution ----------------------------------------------------------

    def execute(self) -> RunRecord:
        self.schedule_warmup()
        self.schedule_flows()
        self.sim.run()
        return self._record()

    def _record(self) -> RunRecord:
        cfg = self.cfg
        collector = self.sim.collector
        for flow in self.flows:
            collector.flows[flow.flow_id].never_sent = len(flow.buffer)
        stats = collector.flow_stats(cfg.duration, cfg.packet_size)
        try:
            throughput = metrics.throughput_ratio(stats)
            loss = metrics.packet_loss(stats)
        except UndefinedMetricError:
            throughput = math.nan
            loss = math.nan
        try:
            delay = metrics.mean_end_to_end_delay(stats)
        except UndefinedMetricError:
            delay = math.nan
        return RunRecord(
            scenario=cfg.scenario_id,
            scheme=cfg.scheme,
            blackholes=cfg.blackholes + 2 * cfg.colluding_pairs,
            seed=cfg.seed,
            throughput_pct=throughput,
            loss_pct=loss,
            delay_s=delay,
            mrr=collector.mean_selected_mrr(),
            vet_msgs=collector.vet_messages,
            untrusted_paths=collector.untrusted_paths,
            starved_flows=metrics.starved_flow_count(stats),
        )


def run_scenario(cfg: ScenarioConfig) -> RunRecord:
    """Run one scenario to completion; failures produce a marked record."""
    try:
        return ScenarioRun(cfg).execute()
    except TopologyError as exc:
        return RunRecord(
            scenario=cfg.scenario_id,
            scheme=cfg.scheme,
            blackholes=cfg.blackholes + 2 * cfg.colluding_pairs,
            seed=cfg.seed,
            throughput_pct=math.nan,
            loss_pct=math.nan,
            delay_s=math.nan,
            mrr=math.nan,
            vet_msgs=0,
            untrusted_paths=0,
            starved_flows=0,
            failed=True,
            failure_reason=str(exc),
        )
