"""Tests for the transmit-power policies: exploration schedule, action grid,
reward shaping, the three baselines, replay memory, the network policy and the
tabular policy. Learning tests use scaled-down configurations and in-test
oracles (value iteration, chi-square uniformity, hand-set tables)."""
import numpy as np
import pytest
from scipy import stats

from rfcharge.agents import (
    DqnConfig,
    DqnPolicy,
    ExplorationSchedule,
    GreedyPolicy,
    NoPolicy,
    QTable,
    RandomPolicy,
    ReplayMemory,
    StateBinner,
    StateFeatures,
    TabularConfig,
    TabularPolicy,
    exploration_rate,
    greedy_power,
    inversion_power,
    power_grid,
    random_power,
    reward_value,
)
from rfcharge.env import EnvParams, Observation, SlotOutcome, data_rate


def make_obs(slot=0, battery_mj=1e5, user_gain=0.04, user_index=0,
             energy_arrival_mj=0.0, device_gain_reports=None):
    return Observation(slot=slot, battery_mj=battery_mj, user_index=user_index,
                       user_gain=user_gain, energy_arrival_mj=energy_arrival_mj,
                       device_gain_reports=device_gain_reports)


def make_outcome(slot=0, power_mw=100.0, user_satisfied=True,
                 all_activated=True, n_activated=5, efficiency_per_w=0.0,
                 user_rate_bps=133e6, battery_mj_after=1e5):
    return SlotOutcome(slot=slot, power_mw=power_mw, user_index=0,
                       user_rate_bps=user_rate_bps,
                       user_satisfied=user_satisfied, n_activated=n_activated,
                       all_activated=all_activated,
                       efficiency_per_w=efficiency_per_w,
                       energy_arrival_mj=0.0,
                       battery_mj_after=battery_mj_after)


class ScriptedRng:
    """Stands in for a Generator: fixed uniform value and integer choice."""

    def __init__(self, uniform_value, integer_value):
        self.uniform_value = uniform_value
        self.integer_value = integer_value

    def random(self):
        return self.uniform_value

    def integers(self, n):
        assert self.integer_value < n
        return self.integer_value


# ---------------------------------------------------------------------------
# exploration schedule
# ---------------------------------------------------------------------------

def test_exploration_rate_starts_at_initial():
    assert exploration_rate(0, 1.0, 0.01) == 1.0
    assert exploration_rate(0, 0.5, 0.01) == 0.5


def test_exploration_rate_decays_to_final():
    assert exploration_rate(1e9, 1.0, 0.01, time_scale=3000.0) == pytest.approx(
        0.01, abs=1e-8)


def test_exploration_rate_constant_when_initial_equals_final():
    for t in (0, 1, 10, 1000, 10**6):
        assert exploration_rate(t, 0.01, 0.01) == 0.01


def test_exploration_rate_monotone_non_increasing():
    ts = np.linspace(0, 20000, 400)
    rates = [exploration_rate(t, 1.0, 0.01, time_scale=3000.0) for t in ts]
    assert all(b <= a for a, b in zip(rates, rates[1:]))


def test_exploration_rate_quarters_after_one_time_scale():
    # final + (initial - final) / (1 + 1)^2 with exponent 2
    assert exploration_rate(3000, 1.0, 0.01, time_scale=3000.0) == pytest.approx(
        0.01 + 0.99 / 4.0)


def test_exploration_rate_clamped_into_unit_range():
    assert exploration_rate(0, 5.0, 0.01) == 1.0
    assert exploration_rate(10**9, 1.0, 0.3) >= 0.3


def test_schedule_rate_matches_free_function():
    sched = ExplorationSchedule()
    for t in (0, 500, 3000, 60000):
        assert sched.rate(t) == exploration_rate(
            t, sched.initial, sched.final, exponent=sched.exponent,
            time_scale=sched.time_scale)


# ---------------------------------------------------------------------------
# action grid and rewards
# ---------------------------------------------------------------------------

def test_power_grid_endpoints_and_spacing():
    grid = power_grid(200.0, 100)
    assert grid.shape == (100,)
    assert grid[0] == 0.0
    assert grid[-1] == 200.0
    steps = np.diff(grid)
    assert np.allclose(steps, 200.0 / 99.0)


def test_reward_satisfaction_requires_devices_and_user():
    assert reward_value(make_outcome(user_satisfied=True, all_activated=True),
                        "satisfaction") == 1.0
    assert reward_value(make_outcome(user_satisfied=False, all_activated=True),
                        "satisfaction") == 0.0
    assert reward_value(make_outcome(user_satisfied=True, all_activated=False),
                        "satisfaction") == 0.0


def test_reward_efficiency_reads_per_watt_field():
    out = make_outcome(power_mw=200.0, efficiency_per_w=5.0)
    assert reward_value(out, "efficiency") == 5.0


def test_reward_unknown_mode_rejected():
    with pytest.raises(ValueError):
        reward_value(make_outcome(), "bonus")


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

def test_greedy_power_examples():
    assert greedy_power(1e5, 200.0) == 200.0
    assert greedy_power(50.0, 200.0) == 50.0
    assert greedy_power(0.0, 200.0) == 0.0


def test_greedy_policy_reads_battery_from_observation():
    policy = GreedyPolicy(EnvParams())
    assert policy.act(make_obs(battery_mj=1e5)) == 200.0
    assert policy.act(make_obs(battery_mj=37.5)) == 37.5


def test_random_power_uniform_statistics():
    rng = np.random.default_rng(123)
    draws = np.array([random_power(1e9, 200.0, rng) for _ in range(100_000)])
    # mean of U(0, 200) is 100 with standard error (200/sqrt(12))/sqrt(n)
    tol = 3.0 * (200.0 / np.sqrt(12.0)) / np.sqrt(draws.size)
    assert abs(draws.mean() - 100.0) < tol
    assert draws.min() >= 0.0
    assert draws.max() <= 200.0


def test_random_power_clamps_to_battery():
    rng = np.random.default_rng(5)
    draws = [random_power(30.0, 200.0, rng) for _ in range(1000)]
    assert max(draws) <= 30.0
    assert random_power(0.0, 200.0, rng) == 0.0


def test_inversion_power_hits_rate_exactly():
    p = inversion_power(0.01, 133e6, 20e6, 1e-6, 1e9, 1e9)
    assert p == pytest.approx(9.94, abs=0.01)
    assert data_rate(p, 0.01, 20e6, 1e-6) == pytest.approx(133e6, rel=1e-9)


def test_inversion_round_trip_many_gains():
    rng = np.random.default_rng(42)
    gains = rng.uniform(1e-4, 1.0, size=1000)
    for g in gains:
        p = inversion_power(float(g), 133e6, 20e6, 1e-6, 1e12, 1e12)
        assert data_rate(p, float(g), 20e6, 1e-6) == pytest.approx(
            133e6, rel=1e-9)


def test_inversion_edge_cases():
    assert inversion_power(0.01, 0.0, 20e6, 1e-6, 1e9, 1e9) == 0.0
    assert inversion_power(1e-9, 133e6, 20e6, 1e-6, 1e9, 200.0) == 200.0
    assert inversion_power(0.01, 133e6, 20e6, 1e-6, 5.0, 200.0) == 5.0
    assert inversion_power(0.0, 133e6, 20e6, 1e-6, 1e9, 200.0) == 0.0


def test_no_policy_matches_inversion_function():
    params = EnvParams()
    policy = NoPolicy(params)
    obs = make_obs(user_gain=0.01, battery_mj=1e9)
    expected = inversion_power(0.01, params.users.rate_requirement_bps,
                               params.ap.bandwidth_hz, params.ap.noise_power_w,
                               1e9, params.ap.max_tx_power_mw)
    assert policy.act(obs) == expected


# ---------------------------------------------------------------------------
# state features and replay memory
# ---------------------------------------------------------------------------

def test_state_features_normalization():
    params = EnvParams()
    feats = StateFeatures(params)
    # reference gain is the deterministic gain at the nearest user distance
    assert feats.gain_ref == pytest.approx(1.0 / params.users.distance_min_m ** 2)
    vec = feats.vector(make_obs(user_gain=feats.gain_ref,
                                battery_mj=params.ap.battery_capacity_mj))
    assert vec == pytest.approx([1.0, 1.0])


def test_replay_memory_evicts_oldest_first():
    mem = ReplayMemory(capacity=5, state_dim=2)
    for i in range(8):
        mem.push(np.array([float(i), 0.0]), float(i), float(i),
                 np.array([float(i), 1.0]))
    assert len(mem) == 5
    kept = set(mem.powers.astype(int))
    assert kept == {3, 4, 5, 6, 7}


def test_replay_memory_sample_without_replacement():
    mem = ReplayMemory(capacity=5, state_dim=2)
    for i in range(5):
        mem.push(np.array([float(i), 0.0]), float(i), 0.0, np.zeros(2))
    _, powers, _, _ = mem.sample(5, np.random.default_rng(0))
    assert sorted(powers.astype(int)) == [0, 1, 2, 3, 4]


def test_replay_memory_partial_fill_sampling():
    mem = ReplayMemory(capacity=100, state_dim=2)
    for i in range(3):
        mem.push(np.array([float(i), 0.0]), float(i), 0.0, np.zeros(2))
    assert len(mem) == 3
    _, powers, _, _ = mem.sample(3, np.random.default_rng(1))
    assert sorted(powers.astype(int)) == [0, 1, 2]


# ---------------------------------------------------------------------------
# network policy
# ---------------------------------------------------------------------------

def test_dqn_default_hyperparameters():
    cfg = DqnConfig()
    assert cfg.learning_rate == 1e-5
    assert cfg.discount == 0.4
    assert cfg.n_actions == 100
    assert cfg.hidden_sizes == (64, 64)
    assert cfg.memory_capacity == 50_000
    assert cfg.minibatch_size == 200
    assert cfg.train_interval_slots == 2
    assert cfg.target_sync_slots == 400
    assert cfg.replay_start_slot == 3000


def test_dqn_config_validation():
    with pytest.raises(ValueError):
        DqnConfig(learning_rate=0.0).validate()
    with pytest.raises(ValueError):
        DqnConfig(discount=1.0).validate()
    with pytest.raises(ValueError):
        DqnConfig(n_actions=1).validate()
    with pytest.raises(ValueError):
        DqnConfig(memory_capacity=10, minibatch_size=11).validate()
    with pytest.raises(ValueError):
        DqnConfig(reward_mode="bogus").validate()


def make_dqn(config, init_seed=0, explore_seed=1):
    return DqnPolicy(EnvParams(), config, np.random.default_rng(init_seed),
                     np.random.default_rng(explore_seed))


def test_dqn_exploring_action_clamps_to_battery():
    cfg = DqnConfig(exploration=ExplorationSchedule(initial=1.0, final=1.0))
    agent = make_dqn(cfg)
    agent._rng = ScriptedRng(uniform_value=0.0, integer_value=74)
    # grid level 74 is about 149.5 mW, far above the 40 mJ battery
    assert agent.actions_mw[74] > 40.0
    assert agent.act(make_obs(battery_mj=40.0)) == 40.0
    assert agent.action_index_for_power(40.0) == round(
        40.0 / (agent.actions_mw[1] - agent.actions_mw[0]))


def test_dqn_full_exploration_is_uniform():
    cfg = DqnConfig(exploration=ExplorationSchedule(initial=1.0, final=1.0))
    agent = make_dqn(cfg)
    obs = make_obs(battery_mj=1e6)
    counts = np.zeros(cfg.n_actions)
    n = 10_000
    for _ in range(n):
        counts[agent.action_index_for_power(agent.act(obs))] += 1
    expected = n / cfg.n_actions
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < stats.chi2.ppf(0.999, cfg.n_actions - 1)


def test_dqn_greedy_action_is_deterministic_argmax():
    cfg = DqnConfig(exploration=ExplorationSchedule(initial=0.0, final=0.0))
    agent = make_dqn(cfg)
    for w in agent.online.weights:
        w[:] = 0.0
    for b in agent.online.biases:
        b[:] = 0.0
    obs = make_obs(battery_mj=1e6)
    # all-equal outputs tie-break to the lowest power level
    assert agent.act(obs) == 0.0
    agent.online.biases[-1][7] = 1.0
    assert agent.act(obs) == agent.actions_mw[7]
    assert agent.act(obs) == agent.actions_mw[7]


def test_dqn_does_not_train_before_replay_start():
    cfg = DqnConfig(learning_rate=0.1, hidden_sizes=(8, 8), n_actions=10,
                    memory_capacity=1000, minibatch_size=4,
                    train_interval_slots=1, replay_start_slot=100)
    agent = make_dqn(cfg)
    before = agent.online.copy()
    outcome = make_outcome()
    for t in range(99):
        agent.observe(make_obs(slot=t), 50.0, outcome, make_obs(slot=t + 1))
    assert all(np.array_equal(a, b) for a, b in
               zip(agent.online.weights, before.weights))
    assert all(np.array_equal(a, b) for a, b in
               zip(agent.online.biases, before.biases))
    assert agent.last_loss is None
    agent.observe(make_obs(slot=100), 50.0, outcome, make_obs(slot=101))
    assert agent.last_loss is not None
    assert not all(np.array_equal(a, b) for a, b in
                   zip(agent.online.weights, before.weights))


def test_dqn_zero_discount_targets_equal_rewards():
    cfg = DqnConfig(discount=0.0)
    agent = make_dqn(cfg)
    rewards = np.array([0.0, 1.0, 1.0, 0.0, 1.0])
    next_states = np.random.default_rng(3).random((5, 2))
    assert np.array_equal(agent._targets(rewards, next_states), rewards)


def test_dqn_target_network_syncs_on_schedule():
    cfg = DqnConfig(learning_rate=0.1, hidden_sizes=(4,), n_actions=5,
                    memory_capacity=100, minibatch_size=4,
                    train_interval_slots=1, target_sync_slots=10,
                    replay_start_slot=0)
    agent = make_dqn(cfg)
    outcome = make_outcome()
    for t in range(1, 5):
        agent.observe(make_obs(slot=t), 50.0, outcome, make_obs(slot=t + 1))
    # trained at t=4 but not yet synced: online moved away from target
    assert not all(np.array_equal(a, b) for a, b in
                   zip(agent.online.weights, agent.target.weights))
    agent.observe(make_obs(slot=10), 50.0, outcome, make_obs(slot=11))
    assert all(np.array_equal(a, b) for a, b in
               zip(agent.online.weights, agent.target.weights))
    assert all(np.array_equal(a, b) for a, b in
               zip(agent.online.biases, agent.target.biases))


def test_dqn_memory_stores_executed_power():
    agent = make_dqn(DqnConfig())
    agent.observe(make_obs(slot=0, battery_mj=40.0), 40.0, make_outcome(),
                  make_obs(slot=1))
    assert agent.memory.powers[0] == 40.0


def test_dqn_identically_seeded_agents_stay_identical():
    cfg = DqnConfig(learning_rate=1e-3, hidden_sizes=(16, 16), n_actions=20,
                    memory_capacity=5000, minibatch_size=32,
                    replay_start_slot=300, target_sync_slots=100,
                    exploration=ExplorationSchedule(time_scale=300.0))

    def run():
        from rfcharge.env import AccessPointEnv
        env = AccessPointEnv(EnvParams(), seed=7)
        agent = make_dqn(cfg, init_seed=11, explore_seed=12)
        obs = env.observation()
        for _ in range(1200):
            power = agent.act(obs)
            out = env.step(power)
            nxt = env.observation()
            agent.observe(obs, out.power_mw, out, nxt)
            obs = nxt
        return agent

    a, b = run(), run()
    assert a.last_loss is not None  # training actually happened
    assert a.last_loss == b.last_loss
    assert all(np.array_equal(wa, wb) for wa, wb in
               zip(a.online.weights, b.online.weights))
    assert all(np.array_equal(ba, bb) for ba, bb in
               zip(a.online.biases, b.online.biases))


# ---------------------------------------------------------------------------
# tabular policy
# ---------------------------------------------------------------------------

def test_q_learning_matches_value_iteration_on_toy_mdp():
    # two states, two actions, deterministic transitions
    rewards = np.array([[0.0, 1.0], [2.0, 0.0]])
    transitions = np.array([[0, 1], [0, 1]])
    discount = 0.4
    expected = np.zeros((2, 2))
    for _ in range(200):
        expected = rewards + discount * expected[transitions].max(axis=2)
    table = QTable(2, 2)
    for _ in range(2000):
        for s in range(2):
            for a in range(2):
                table.update(s, a, rewards[s, a], transitions[s, a], 0.3,
                             discount)
    assert np.abs(table.q - expected).max() < 1e-3


def test_q_table_zero_rewards_stay_zero():
    table = QTable(3, 4)
    rng = np.random.default_rng(0)
    for _ in range(500):
        table.update(int(rng.integers(3)), int(rng.integers(4)), 0.0,
                     int(rng.integers(3)), 0.5, 0.9)
    assert np.all(table.q == 0.0)


def test_q_table_zero_discount_converges_to_reward():
    table = QTable(1, 1)
    for _ in range(200):
        table.update(0, 0, 1.0, 0, 0.1, 0.0)
    assert table.q[0, 0] == pytest.approx(1.0, abs=1e-8)


def test_q_table_greedy_action_argmax_ties_low():
    table = QTable(2, 3)
    table.q[0] = [0.1, 0.9, 0.2]
    table.q[1] = [0.5, 0.5, 0.1]
    assert table.greedy_action(0) == 1
    assert table.greedy_action(1) == 0


def test_state_binner_reference_point_and_bounds():
    params = EnvParams()
    cfg = TabularConfig()
    binner = StateBinner(params, cfg)
    assert binner.n_states == 400
    feats = StateFeatures(params)
    full = make_obs(user_gain=feats.gain_ref,
                    battery_mj=params.ap.battery_capacity_mj)
    # normalized gain 1 -> log10 = 0 -> bin 16 of 20; full battery clamps to 19
    assert binner.index(full) == 16 * 20 + 19
    tiny = make_obs(user_gain=1e-12, battery_mj=0.0)
    assert binner.index(tiny) == 0
    huge = make_obs(user_gain=1e6, battery_mj=params.ap.battery_capacity_mj)
    assert binner.index(huge) == 19 * 20 + 19


def test_state_binner_monotone_in_battery():
    params = EnvParams()
    binner = StateBinner(params, TabularConfig())
    gains = 0.04
    indices = [binner.index(make_obs(user_gain=gains, battery_mj=b))
               for b in np.linspace(0, params.ap.battery_capacity_mj, 50)]
    assert all(b >= a for a, b in zip(indices, indices[1:]))


def test_tabular_greedy_reads_hand_set_table():
    params = EnvParams()
    cfg = TabularConfig(exploration=ExplorationSchedule(initial=0.0, final=0.0))
    policy = TabularPolicy(params, cfg, np.random.default_rng(0))
    obs = make_obs(battery_mj=1e6)
    state = policy.binner.index(obs)
    policy.table.q[state, 3] = 1.0
    assert policy.act(obs) == policy.actions_mw[3]


def test_tabular_observe_updates_expected_cell():
    params = EnvParams()
    cfg = TabularConfig(learning_rate=0.1, discount=0.4, n_actions=5)
    policy = TabularPolicy(params, cfg, np.random.default_rng(0))
    obs = make_obs(slot=0)
    nxt = make_obs(slot=1)
    outcome = make_outcome(user_satisfied=True, all_activated=True)
    policy.observe(obs, 100.0, outcome, nxt)  # grid step 50 -> action 2
    state = policy.binner.index(obs)
    assert policy.table.q[state, 2] == pytest.approx(0.1)
    assert np.count_nonzero(policy.table.q) == 1


def test_tabular_exploring_action_clamps_to_battery():
    params = EnvParams()
    cfg = TabularConfig(exploration=ExplorationSchedule(initial=1.0, final=1.0))
    policy = TabularPolicy(params, cfg, np.random.default_rng(0))
    policy._rng = ScriptedRng(uniform_value=0.0, integer_value=99)
    assert policy.act(make_obs(battery_mj=25.0)) == 25.0


def test_tabular_config_validation():
    with pytest.raises(ValueError):
        TabularConfig(learning_rate=0.0).validate()
    with pytest.raises(ValueError):
        TabularConfig(discount=-0.1).validate()
    with pytest.raises(ValueError):
        TabularConfig(gain_bins=0).validate()
