import math

from relsim.runner import ScenarioRun, run_scenario
from relsim.scenario import ScenarioConfig


def _cfg(**kwargs):
    base = dict(nodes=20, flows=4, duration=20.0, seed=3, scheme="proposed")
    base.update(kwargs)
    return ScenarioConfig(**base).validate()


def test_clean_run_conserves_everything():
    record = run_scenario(_cfg(scheme="undefended"))
    assert record.throughput_pct == 100.0
    assert record.loss_pct == 0.0
    assert record.starved_flows == 0
    assert not record.failed


def test_same_config_twice_is_identical():
    cfg = _cfg(blackholes=3, colluding_pairs=1, seed=42)
    assert run_scenario(cfg) == run_scenario(cfg)


def test_same_config_twice_replays_the_event_trace():
    def trace(cfg):
        run = ScenarioRun(cfg)
        run.sim.log_events = True
        run.execute()
        return run.sim.event_log

    cfg = _cfg(blackholes=2, colluding_pairs=1, seed=13, duration=10.0)
    assert trace(cfg) == trace(cfg)


def test_vet_msgs_column_mirrors_collector():
    cfg = _cfg(scheme="proposed", blackholes=2)
    run = ScenarioRun(cfg)
    record = run.execute()
    assert record.vet_msgs == run.sim.collector.vet_messages
    assert record.untrusted_paths == run.sim.collector.untrusted_paths


def test_per_flow_ledger_balances_exactly():
    """generated = delivered + hole drops + link drops + undeliverable +
    never transmitted, for every flow, once the queue drains."""
    for kwargs in (
        dict(scheme="undefended", blackholes=4),
        dict(scheme="proposed", colluding_pairs=2, link_loss=0.05),
        dict(scheme="baseline", blackholes=2, colluding_pairs=1),
    ):
        cfg = _cfg(**kwargs)
        run = ScenarioRun(cfg)
        run.execute()
        assert run.sim.idle()
        for flow in run.flows:
            led = run.sim.collector.flows[flow.flow_id]
            assert led.generated == (
                led.delivered
                + led.blackhole_drops
                + led.link_drops
                + led.undeliverable
                + led.never_sent
            ), (kwargs, led)


def test_defended_run_reroutes_around_attack():
    record = run_scenario(_cfg(scheme="proposed", blackholes=3, seed=8))
    captured = run_scenario(_cfg(scheme="undefended", blackholes=3, seed=8))
    assert record.loss_pct <= captured.loss_pct
    assert record.mrr > 0.5


def test_proposed_on_captured_fixture_reports_no_trusted_route():
    """Line fixture with the hole astride the only path: every candidate is
    poisoned, so selection must refuse rather than feed the hole."""
    from relsim import aodv
    from relsim.defense import select_route, vet_path

    from conftest import blackhole, line_sim, warm_up

    sim = line_sim(4, {2: blackhole(2)})
    warm_up(sim)
    candidates = []
    aodv.initiate_discovery(sim.nodes[0], 3, candidates.extend)
    sim.run()
    assert candidates
    vetted = [(c.path, vet_path(sim, 0, c.path)) for c in candidates]
    assert select_route(vetted) is None


def test_undefended_loss_grows_with_attack_size():
    """Across seeds, mean undefended loss is non-decreasing in hole count."""
    means = []
    for holes in (0, 2, 4):
        losses = []
        for seed in range(20, 26):
            record = run_scenario(
                _cfg(scheme="undefended", blackholes=holes, nodes=16, flows=3,
                     duration=10.0, seed=seed, area_side=600.0, radio_range=300.0)
            )
            assert not record.failed
            losses.append(record.loss_pct)
        means.append(sum(losses) / len(losses))
    assert means[0] <= means[1] <= means[2]
    assert means[0] == 0.0 and means[2] > 0.0


def test_undefended_blackhole_capture_scores_zero_mrr():
    record = run_scenario(_cfg(scheme="undefended", blackholes=6, nodes=30, seed=5))
    # every routed flow was lured by a forged reply on this seed
    assert record.loss_pct == 100.0
    assert record.mrr == 0.0


def test_impossible_placement_yields_failed_record():
    # valid config, but endpoints crowd out the adversaries at runtime
    cfg = ScenarioConfig(
        nodes=12, flows=20, blackholes=8, duration=5.0, seed=1, scheme="undefended"
    ).validate()
    record = run_scenario(cfg)
    assert record.failed
    assert record.failure_reason
    assert math.isnan(record.throughput_pct)


def test_reliability_series_plateaus_once_routes_are_vetted():
    from relsim.metrics import reliability_series

    cfg = _cfg(scheme="proposed", colluding_pairs=2, seed=9)
    run = ScenarioRun(cfg)
    run.execute()
    series = reliability_series(run.sim.collector, cfg.duration, 1.0)
    assert series, "routes should exist"
    tail = [v for _, v in series[-5:]]
    assert all(v >= 90.0 for v in tail)


def test_undefended_series_reflects_captured_routes():
    from relsim.metrics import reliability_series

    cfg = _cfg(scheme="undefended", blackholes=6, nodes=30, seed=5)
    run = ScenarioRun(cfg)
    run.execute()
    series = reliability_series(run.sim.collector, cfg.duration, 1.0)
    assert series
    assert series[-1][1] < 50.0
