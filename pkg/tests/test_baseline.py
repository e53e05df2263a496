import pytest

from relsim.baseline import FlagDriEntry, baseline_update, baseline_vet
from relsim.defense import VetStatus, VettingConfig, vet_path

from conftest import blackhole, line_sim, warm_up


# -- flag table ---------------------------------------------------------------


def test_fresh_entry_plus_from():
    table = {}
    baseline_update(table, 3, "from")
    assert (table[3].from_flag, table[3].through_flag) == (True, False)


def test_through_completes_the_pair():
    table = {3: FlagDriEntry(from_flag=True)}
    baseline_update(table, 3, "through")
    assert (table[3].from_flag, table[3].through_flag) == (True, True)


def test_updates_are_idempotent():
    table = {}
    for _ in range(5):
        baseline_update(table, 3, "from")
        baseline_update(table, 3, "through")
    assert (table[3].from_flag, table[3].through_flag) == (True, True)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        baseline_update({}, 3, "sideways")


def test_warmup_sets_both_flags_between_honest_neighbors():
    sim = line_sim(3)
    warm_up(sim)
    entry = sim.nodes[0].flags[1]
    assert entry.from_flag and entry.through_flag


def test_warmup_leaves_blackhole_flags_dark():
    """No data from the hole and no acknowledgements for data sent to it."""
    sim = line_sim(4, {2: blackhole(2)})
    warm_up(sim)
    entry = sim.nodes[1].flags.get(2)
    assert entry is None or (entry.from_flag, entry.through_flag) == (False, False)


# -- vetting -------------------------------------------------------------------


def test_honest_warmed_path_is_trusted(honest_line):
    result = baseline_vet(honest_line, 0, (0, 1, 2, 3))
    assert result.status is VetStatus.TRUSTED


def test_honest_single_intermediate_is_trusted():
    sim = line_sim(3)
    warm_up(sim)
    result = baseline_vet(sim, 0, (0, 1, 2))
    assert result.status is VetStatus.TRUSTED


def test_solo_blackhole_reported_dark_by_honest_successor():
    """The hole's next-hop neighbor reports (False, False) about it."""
    sim = line_sim(5, {2: blackhole(2)})
    warm_up(sim)
    successor_view = sim.nodes[3].flags.get(2)
    assert successor_view is None or not (
        successor_view.from_flag or successor_view.through_flag
    )
    result = baseline_vet(sim, 0, (0, 1, 2, 3, 4))
    assert result.status is VetStatus.UNTRUSTED


def test_solo_blackhole_first_position_refused_by_source_table():
    sim = line_sim(4, {1: blackhole(1)})
    warm_up(sim)
    result = baseline_vet(sim, 0, (0, 1, 2, 3))
    assert result.status is VetStatus.UNTRUSTED


def test_solo_blackhole_last_intermediate_caught_by_destination():
    sim = line_sim(4, {2: blackhole(2)})
    warm_up(sim)
    result = baseline_vet(sim, 0, (0, 1, 2, 3))
    assert result.status is VetStatus.UNTRUSTED


def test_colluding_pair_defeats_the_interrogation():
    """Mutual vouching: the false negative the count scheme was built to fix."""
    sim = line_sim(
        5,
        {
            2: blackhole(2, collusion_group=0, collusion_partner=3),
            3: blackhole(3, collusion_group=0, collusion_partner=2),
        },
    )
    warm_up(sim)
    result = baseline_vet(sim, 0, (0, 1, 2, 3, 4))
    assert result.status is VetStatus.TRUSTED  # false negative by design


def test_collusion_differential_on_identical_state():
    """Same fixture, same seed: flag scheme fooled, count scheme not."""
    def build():
        sim = line_sim(
            5,
            {
                2: blackhole(2, collusion_group=0, collusion_partner=3),
                3: blackhole(3, collusion_group=0, collusion_partner=2),
            },
            seed=31,
        )
        warm_up(sim)
        return sim

    assert baseline_vet(build(), 0, (0, 1, 2, 3, 4)).status is VetStatus.TRUSTED
    rel_result = vet_path(build(), 0, (0, 1, 2, 3, 4))
    assert rel_result.rel == 0.0 or rel_result.status is VetStatus.UNTRUSTED


def test_deep_collusion_is_still_caught():
    """With two honest relays before the pair, the lookahead answer of an
    honest voucher exposes the first colluder."""
    sim = line_sim(
        6,
        {
            3: blackhole(3, collusion_group=0, collusion_partner=4),
            4: blackhole(4, collusion_group=0, collusion_partner=3),
        },
    )
    warm_up(sim)
    result = baseline_vet(sim, 0, (0, 1, 2, 3, 4, 5))
    assert result.status is VetStatus.UNTRUSTED


def test_silent_voucher_burns_timers_to_untrusted():
    sim = line_sim(4, {2: blackhole(2, reply_prob=0.0)})
    warm_up(sim)
    result = baseline_vet(sim, 0, (0, 1, 2, 3), VettingConfig(k_r=2, k_m=1, t1_ms=10))
    assert result.status is VetStatus.UNTRUSTED


def test_message_overhead_exceeds_count_scheme_per_hop(honest_line):
    """Three relayed question/answer round trips per interrogated hop versus
    one adjacent request/reply plus the traveling accumulator."""
    before = honest_line.collector.vet_messages
    baseline_vet(honest_line, 0, (0, 1, 2, 3))
    baseline_msgs = honest_line.collector.vet_messages - before

    from conftest import line_sim as fresh_line

    other = fresh_line(4)
    warm_up(other)
    before = other.collector.vet_messages
    vet_path(other, 0, (0, 1, 2, 3))
    rel_msgs = other.collector.vet_messages - before

    hops = 2
    assert baseline_msgs / hops > rel_msgs / hops
    assert baseline_msgs == 30  # 12 for the voucher hop, 18 relayed to the far end
    assert rel_msgs == 8


def test_direct_neighbor_path_trusted_without_messages():
    sim = line_sim(3)
    warm_up(sim)
    before = sim.collector.vet_messages
    result = baseline_vet(sim, 0, (0, 1))
    assert result.status is VetStatus.TRUSTED
    assert sim.collector.vet_messages == before
