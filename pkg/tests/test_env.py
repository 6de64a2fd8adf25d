"""Channel environment tests: chain generators, transition statistics,
sensing rewards, and the state-aware genie oracle."""

import numpy as np
import pytest

from mcaccess.baselines import GenieAgent
from mcaccess.env import (ChannelEnv, MarkovChannelChain, PatternSpec,
                          TimeVaryingEnv, TimeVaryingSchedule,
                          genie_average_reward, make_arbitrary,
                          make_correlated_subsets, make_round_robin, sense)
from mcaccess.errors import ActionError, ConfigError


def cycle_of(chain) -> list[int]:
    order = [0]
    while True:
        nxt = int(chain.successor[order[-1]])
        if nxt == 0:
            return order
        order.append(nxt)


# --------------------------------------------------------------- generators

def test_round_robin_three_channels_structure():
    chain = make_round_robin(3, 0.9)
    np.testing.assert_array_equal(chain.states,
                                  [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    np.testing.assert_array_equal(chain.successor, [1, 2, 0])


def test_round_robin_sixteen_channels_cycle_length():
    chain = make_round_robin(16, 0.75)
    assert chain.n_states == 16
    assert len(cycle_of(chain)) == 16


def test_round_robin_p_one_alternates_deterministically():
    env = ChannelEnv(make_round_robin(2, 1.0), seed=0)
    good = [int(np.argmax(env.step())) for _ in range(6)]
    assert good == [(good[0] + k) % 2 for k in range(6)]


def test_generator_validation():
    with pytest.raises(ConfigError):
        make_round_robin(1, 0.5)
    with pytest.raises(ConfigError):
        make_round_robin(4, 1.5)
    with pytest.raises(ConfigError):
        make_arbitrary(4, -0.1, 0)
    with pytest.raises(ConfigError):
        make_correlated_subsets(5, 2, 0.5, 0)


def test_arbitrary_same_seed_identical():
    a = make_arbitrary(16, 0.9, 123)
    b = make_arbitrary(16, 0.9, 123)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.successor, b.successor)


def test_arbitrary_ten_seeds_give_distinct_cycles():
    cycles = {tuple(make_arbitrary(16, 0.9, s).successor) for s in range(1, 11)}
    assert len(cycles) == 10


def test_arbitrary_three_channels_cycle_is_one_of_two():
    # all cyclic successor maps on 3 elements
    valid = {(1, 2, 0), (2, 0, 1)}
    seen = {tuple(make_arbitrary(3, 0.5, s).successor) for s in range(30)}
    assert seen <= valid
    assert len(seen) == 2


def test_correlated_subsets_paper_shape():
    chain = make_correlated_subsets(32, 8, 0.9, 7)
    assert chain.n_states == 8
    assert (chain.states.sum(axis=1) == 4).all()
    # subsets partition the channels
    assert (chain.states.sum(axis=0) == 1).all()
    assert len(cycle_of(chain)) == 8


def test_correlated_subsets_size_one_reduces_to_single_good():
    chain = make_correlated_subsets(4, 4, 0.5, 3)
    assert chain.n_states == 4
    assert (chain.states.sum(axis=1) == 1).all()


def test_correlated_subsets_two_groups_alternate_at_p_one():
    env = ChannelEnv(make_correlated_subsets(8, 2, 1.0, 5), seed=1)
    first = env.state_index
    seq = [env.step() is not None and env.state_index for _ in range(5)]
    assert seq == [(first + 1) % 2, first, (first + 1) % 2, first, (first + 1) % 2]


def test_chain_validation_rejects_broken_successor():
    states = np.eye(3, dtype=np.uint8)
    with pytest.raises(ConfigError):
        MarkovChannelChain(states, np.array([1, 0, 2]), 0.5)  # two cycles
    with pytest.raises(ConfigError):
        MarkovChannelChain(states, np.array([1, 2, 3]), 0.5)  # out of range
    with pytest.raises(ConfigError):
        MarkovChannelChain(np.array([[0, 2, 0]]), np.array([0]), 0.5)


def test_pattern_spec_builds_and_validates():
    assert PatternSpec("round_robin", 4, 0.9).build().n_states == 4
    assert PatternSpec("correlated_subsets", 8, 0.9, n_subsets=2,
                       order_seed=1).build().n_states == 2
    with pytest.raises(ConfigError):
        PatternSpec("diagonal", 4, 0.9)


def test_single_state_chain_reset_is_that_state():
    chain = MarkovChannelChain(np.array([[1, 0, 1]], dtype=np.uint8),
                               np.array([0]), 0.5)
    env = ChannelEnv(chain, seed=3)
    for _ in range(20):
        np.testing.assert_array_equal(env.reset(), [1, 0, 1])
        env.step()
        assert env.state_index == 0


# ------------------------------------------------------------ reset and step

def test_reset_uniform_over_states():
    env = ChannelEnv(make_round_robin(4, 0.5), seed=99)
    counts = np.zeros(4)
    for _ in range(100_000):
        env.reset()
        counts[env.state_index] += 1
    np.testing.assert_allclose(counts / counts.sum(), 0.25, atol=0.01)


def test_reset_reproducible_under_fixed_seed():
    a = ChannelEnv(make_round_robin(8, 0.5), seed=5)
    b = ChannelEnv(make_round_robin(8, 0.5), seed=5)
    assert [a.reset().tolist() for _ in range(20)] == \
           [b.reset().tolist() for _ in range(20)]


def test_step_degenerate_probabilities():
    always = ChannelEnv(make_round_robin(4, 1.0), seed=1)
    never = ChannelEnv(make_round_robin(4, 0.0), seed=1)
    start = never.state_index
    for _ in range(50):
        before = always.state_index
        always.step()
        assert always.state_index == (before + 1) % 4
        never.step()
        assert never.state_index == start


@pytest.mark.parametrize("p", [0.25, 0.5, 0.9])
def test_step_switch_fraction_matches_p(p):
    env = ChannelEnv(make_round_robin(4, p), seed=int(p * 100))
    switches = 0
    steps = 100_000
    for _ in range(steps):
        before = env.state_index
        env.step()
        switches += env.state_index != before
    assert abs(switches / steps - p) < 0.01


def test_trajectory_deterministic_under_fixed_seed():
    a = ChannelEnv(make_arbitrary(8, 0.7, 3), seed=11)
    b = ChannelEnv(make_arbitrary(8, 0.7, 3), seed=11)
    ta = [int(a.state_index) for _ in range(500) if a.step() is not None]
    tb = [int(b.state_index) for _ in range(500) if b.step() is not None]
    assert ta == tb


def test_single_good_invariant_along_trajectory():
    env = ChannelEnv(make_arbitrary(8, 0.6, 2), seed=4)
    for _ in range(1000):
        assert env.step().sum() == 1


def test_correlated_good_set_is_always_one_fixed_subset():
    chain = make_correlated_subsets(12, 3, 0.8, 9)
    subsets = {tuple(row) for row in chain.states}
    env = ChannelEnv(chain, seed=2)
    for _ in range(500):
        assert tuple(env.step()) in subsets


# ------------------------------------------------------------------ sensing

def test_sense_rewards():
    state = np.array([0, 1, 0], dtype=np.uint8)
    assert sense(state, 2) == 1
    assert sense(state, 1) == -1
    assert sense(np.zeros(5, dtype=np.uint8), 3) == -1


def test_sense_rejects_out_of_range_channels():
    state = np.array([0, 1, 0], dtype=np.uint8)
    with pytest.raises(ActionError):
        sense(state, 0)
    with pytest.raises(ActionError):
        sense(state, 4)


def test_env_sense_returns_plus_minus_one_only():
    env = ChannelEnv(make_round_robin(4, 0.5), seed=8)
    seen = {env.sense(int(env.rng.integers(1, 5))) for _ in range(200)}
    assert seen <= {-1, 1}


# -------------------------------------------------------------- genie oracle

def test_genie_average_reward_formula():
    assert genie_average_reward(0.9) == pytest.approx(0.8)
    assert genie_average_reward(0.5) == pytest.approx(0.0)
    assert genie_average_reward(1.0) == pytest.approx(1.0)
    assert genie_average_reward(0.25) == pytest.approx(0.5)


def test_genie_simulation_matches_formula():
    env = ChannelEnv(make_round_robin(8, 0.9), seed=13)
    genie = GenieAgent()
    total = sum(genie.train_step(env) for _ in range(100_000))
    assert abs(total / 100_000 - genie_average_reward(0.9)) < 0.01


def test_genie_beats_stay_policy_below_half():
    # p = 0.25: stay is the likelier outcome, genie should bet on it
    env = ChannelEnv(make_round_robin(6, 0.25), seed=21)
    genie = GenieAgent()
    total = sum(genie.train_step(env) for _ in range(50_000))
    assert abs(total / 50_000 - genie_average_reward(0.25)) < 0.02


# ------------------------------------------------------------- time-varying

def test_schedule_validation():
    spec = PatternSpec("round_robin", 4, 0.9)
    with pytest.raises(ConfigError):
        TimeVaryingSchedule([])
    with pytest.raises(ConfigError):
        TimeVaryingSchedule([(5, spec)])
    with pytest.raises(ConfigError):
        TimeVaryingSchedule([(0, spec), (0, spec)])
    with pytest.raises(ConfigError):
        TimeVaryingSchedule([(0, spec), (10, PatternSpec("round_robin", 6, 0.9))])


def test_time_varying_swaps_chain_at_boundary():
    first = PatternSpec("round_robin", 4, 0.0)
    second = PatternSpec("arbitrary", 4, 0.0, order_seed=5)
    env = TimeVaryingEnv(TimeVaryingSchedule([(0, first), (3, second)]), seed=6)
    opening_chain = env.chain
    env.step()  # slot 1
    env.step()  # slot 2
    assert env.chain is opening_chain
    env.step()  # slot 3: swap
    assert env.chain is not opening_chain
    assert env.n_channels == 4
    assert env.slot == 3


def test_time_varying_is_deterministic():
    spec = [(0, PatternSpec("round_robin", 4, 0.8)),
            (100, PatternSpec("arbitrary", 4, 0.8, order_seed=2))]
    a = TimeVaryingEnv(TimeVaryingSchedule(list(spec)), seed=3)
    b = TimeVaryingEnv(TimeVaryingSchedule(list(spec)), seed=3)
    for _ in range(300):
        np.testing.assert_array_equal(a.step(), b.step())
