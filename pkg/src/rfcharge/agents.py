"""Transmit-power policies: deep Q-network and tabular Q-learning trained
online, plus the Greedy, Random, and rate-inversion (No-policy) baselines.

Every policy implements `act(observation) -> power_mw` returning a value
already inside [0, min(max_tx_power, battery)], and `observe(...)` called
after the slot completes.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .env import EnvParams, Observation, SlotOutcome

log = logging.getLogger(__name__)

REWARD_SATISFACTION = "satisfaction"   # 1 when every device activates and the user's rate is met
REWARD_EFFICIENCY = "efficiency"       # that indicator per watt spent
REWARD_MODES = (REWARD_SATISFACTION, REWARD_EFFICIENCY)


def reward_value(outcome: SlotOutcome, mode: str) -> float:
    if mode == REWARD_SATISFACTION:
        return float(outcome.all_activated and outcome.user_satisfied)
    if mode == REWARD_EFFICIENCY:
        return outcome.efficiency_per_w
    raise ValueError(f"unknown reward mode {mode!r}")


def exploration_rate(t: float, initial: float, final: float,
                     increment: float | None = None, exponent: float = 2.0,
                     time_scale: float = 1.0) -> float:
    """Decaying exploration probability clamp(final + inc/(t'+1)^exponent,
    final, 1) with t' = t / time_scale. At t=0 it equals `initial` whenever
    increment is left at its default initial - final."""
    inc = (initial - final) if increment is None else increment
    eps = final + inc / (t / time_scale + 1.0) ** exponent
    return min(1.0, max(final, eps))


def power_grid(max_power_mw: float, n_actions: int) -> np.ndarray:
    """Evenly spaced transmit-power levels from 0 to the maximum."""
    return np.linspace(0.0, max_power_mw, n_actions)


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

def greedy_power(battery_mj: float, max_power_mw: float) -> float:
    """Spend everything available each slot."""
    return min(max_power_mw, battery_mj)


def random_power(battery_mj: float, max_power_mw: float,
                 rng: np.random.Generator) -> float:
    """Uniform draw over [0, max power], clamped to the battery."""
    return min(rng.uniform(0.0, max_power_mw), battery_mj)


def inversion_power(user_gain: float, rate_requirement_bps: float,
                    bandwidth_hz: float, noise_power_w: float,
                    battery_mj: float, max_power_mw: float) -> float:
    """Exact power (mW) making the served user's Shannon rate hit the
    requirement, clamped to [0, min(max power, battery)]. A zero gain cannot
    be satisfied; the slot idles."""
    if user_gain <= 0:
        log.debug("zero channel gain: idling instead of inverting the rate")
        return 0.0
    watts = noise_power_w * (2.0 ** (rate_requirement_bps / bandwidth_hz) - 1.0)
    return min(watts / user_gain * 1000.0, max_power_mw, battery_mj)


class GreedyPolicy:
    name = "greedy"

    def __init__(self, params: EnvParams):
        self._max = params.ap.max_tx_power_mw

    def act(self, obs: Observation) -> float:
        return greedy_power(obs.battery_mj, self._max)

    def observe(self, obs, power_mw, outcome, next_obs) -> None:
        pass


class RandomPolicy:
    name = "random"

    def __init__(self, params: EnvParams, rng: np.random.Generator):
        self._max = params.ap.max_tx_power_mw
        self._rng = rng

    def act(self, obs: Observation) -> float:
        return random_power(obs.battery_mj, self._max, self._rng)

    def observe(self, obs, power_mw, outcome, next_obs) -> None:
        pass


class NoPolicy:
    """Serves the data user at exactly its required rate; ignores devices."""

    name = "nopolicy"

    def __init__(self, params: EnvParams):
        self._p = params

    def act(self, obs: Observation) -> float:
        p = self._p
        return inversion_power(obs.user_gain, p.users.rate_requirement_bps,
                               p.ap.bandwidth_hz, p.ap.noise_power_w,
                               obs.battery_mj, p.ap.max_tx_power_mw)

    def observe(self, obs, power_mw, outcome, next_obs) -> None:
        pass


# ---------------------------------------------------------------------------
# shared learning machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExplorationSchedule:
    initial: float = 1.0
    final: float = 0.01
    exponent: float = 2.0
    time_scale: float = 3000.0  # slots per schedule step; one episode default

    def rate(self, t: int) -> float:
        return exploration_rate(t, self.initial, self.final,
                                exponent=self.exponent,
                                time_scale=self.time_scale)


class StateFeatures:
    """Maps an observation to the learning state (normalized gain, normalized
    battery). The gain reference is the deterministic gain at the closest
    possible user distance."""

    def __init__(self, params: EnvParams):
        self.gain_ref = 1.0 / params.users.distance_min_m ** 2
        self.battery_ref = params.ap.battery_capacity_mj

    def vector(self, obs: Observation) -> np.ndarray:
        return np.array([obs.user_gain / self.gain_ref,
                         obs.battery_mj / self.battery_ref])


class ReplayMemory:
    """Fixed-capacity ring buffer of (state, power, reward, next state)."""

    def __init__(self, capacity: int, state_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.powers = np.zeros(capacity)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, state, power_mw, reward, next_state) -> None:
        i = self._next
        self.states[i] = state
        self.powers[i] = power_mw
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform without replacement within the minibatch."""
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return (self.states[idx], self.powers[idx], self.rewards[idx],
                self.next_states[idx])


# ---------------------------------------------------------------------------
# deep Q-network policy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DqnConfig:
    learning_rate: float = 1e-5
    discount: float = 0.4
    n_actions: int = 100
    hidden_sizes: tuple[int, ...] = (64, 64)
    negative_slope: float = 0.01
    memory_capacity: int = 50_000
    minibatch_size: int = 200
    train_interval_slots: int = 2
    target_sync_slots: int = 400
    replay_start_slot: int = 3000
    reward_mode: str = REWARD_SATISFACTION
    exploration: ExplorationSchedule = field(default_factory=ExplorationSchedule)

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be > 0")
        if not 0 <= self.discount < 1:
            raise ValueError("discount must lie in [0, 1)")
        if self.n_actions < 2:
            raise ValueError("need at least two actions")
        if self.minibatch_size < 1 or self.memory_capacity < self.minibatch_size:
            raise ValueError("memory must hold at least one minibatch")
        if self.train_interval_slots < 1 or self.target_sync_slots < 1:
            raise ValueError("training and sync intervals must be >= 1")
        if self.reward_mode not in REWARD_MODES:
            raise ValueError(f"unknown reward mode {self.reward_mode!r}")


class DqnPolicy:
    """Q-network over (normalized gain, normalized battery) with one output
    per power level, epsilon-greedy action choice, uniform experience replay
    and a periodically copied target network."""

    name = "dqn"

    def __init__(self, params: EnvParams, config: DqnConfig,
                 init_rng: np.random.Generator,
                 exploration_rng: np.random.Generator):
        config.validate()
        self.config = config
        self.features = StateFeatures(params)
        self.actions_mw = power_grid(params.ap.max_tx_power_mw, config.n_actions)
        self._action_step = self.actions_mw[1] - self.actions_mw[0]
        sizes = (2, *config.hidden_sizes, config.n_actions)
        self.online = nn.init_mlp(sizes, init_rng, config.negative_slope)
        self.target = self.online.copy()
        self.memory = ReplayMemory(config.memory_capacity, state_dim=2)
        self._rng = exploration_rng
        self.last_loss: float | None = None

    def action_index_for_power(self, power_mw: float) -> int:
        """Nearest grid level for a (possibly battery-clamped) power."""
        idx = int(round(power_mw / self._action_step))
        return min(max(idx, 0), self.config.n_actions - 1)

    def act(self, obs: Observation) -> float:
        eps = self.config.exploration.rate(obs.slot)
        if self._rng.random() < eps:
            idx = int(self._rng.integers(self.config.n_actions))
        else:
            q = nn.forward(self.online, self.features.vector(obs))
            idx = int(np.argmax(q))  # ties resolve to the lowest power
        return min(self.actions_mw[idx], obs.battery_mj)

    def _targets(self, rewards: np.ndarray, next_states: np.ndarray) -> np.ndarray:
        q_next = nn.forward(self.target, next_states)
        return rewards + self.config.discount * q_next.max(axis=1)

    def observe(self, obs: Observation, power_mw: float, outcome: SlotOutcome,
                next_obs: Observation) -> None:
        cfg = self.config
        r = reward_value(outcome, cfg.reward_mode)
        self.memory.push(self.features.vector(obs), power_mw, r,
                         self.features.vector(next_obs))
        t = obs.slot
        if (t >= cfg.replay_start_slot and t % cfg.train_interval_slots == 0
                and len(self.memory) >= cfg.minibatch_size):
            states, powers, rewards, next_states = self.memory.sample(
                cfg.minibatch_size, self._rng)
            actions = np.minimum(
                np.maximum(np.round(powers / self._action_step).astype(int), 0),
                cfg.n_actions - 1)
            targets = self._targets(rewards, next_states)
            self.last_loss = nn.sgd_step(self.online, states, actions, targets,
                                         cfg.learning_rate)
        if t % cfg.target_sync_slots == 0:
            self.target = self.online.copy()


# ---------------------------------------------------------------------------
# tabular Q-learning policy
# ---------------------------------------------------------------------------

class QTable:
    """Plain Q-learning over integer states and actions."""

    def __init__(self, n_states: int, n_actions: int):
        self.q = np.zeros((n_states, n_actions))

    def update(self, state: int, action: int, reward: float, next_state: int,
               learning_rate: float, discount: float) -> None:
        best_next = self.q[next_state].max()
        td_target = reward + discount * best_next
        self.q[state, action] += learning_rate * (td_target - self.q[state, action])

    def greedy_action(self, state: int) -> int:
        return int(np.argmax(self.q[state]))


@dataclass(frozen=True)
class TabularConfig:
    learning_rate: float = 0.1
    discount: float = 0.4
    n_actions: int = 100
    gain_bins: int = 20
    battery_bins: int = 20
    gain_log_floor: float = -4.0   # log10 of normalized gain at the low edge
    gain_log_ceil: float = 1.0
    reward_mode: str = REWARD_SATISFACTION
    exploration: ExplorationSchedule = field(default_factory=ExplorationSchedule)

    def validate(self) -> None:
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning rate must lie in (0, 1]")
        if not 0 <= self.discount < 1:
            raise ValueError("discount must lie in [0, 1)")
        if self.gain_bins < 1 or self.battery_bins < 1 or self.n_actions < 2:
            raise ValueError("bin and action counts must be positive")
        if self.reward_mode not in REWARD_MODES:
            raise ValueError(f"unknown reward mode {self.reward_mode!r}")


class StateBinner:
    """Discretizes (gain, battery): the gain axis is log-compressed before
    uniform binning because gains span orders of magnitude."""

    def __init__(self, params: EnvParams, config: TabularConfig):
        self.cfg = config
        self.features = StateFeatures(params)

    @property
    def n_states(self) -> int:
        return self.cfg.gain_bins * self.cfg.battery_bins

    def index(self, obs: Observation) -> int:
        cfg = self.cfg
        g, b = self.features.vector(obs)
        logg = math.log10(max(g, 1e-300))
        span = cfg.gain_log_ceil - cfg.gain_log_floor
        gi = int((logg - cfg.gain_log_floor) / span * cfg.gain_bins)
        gi = min(max(gi, 0), cfg.gain_bins - 1)
        bi = int(b * cfg.battery_bins)
        bi = min(max(bi, 0), cfg.battery_bins - 1)
        return gi * cfg.battery_bins + bi


class TabularPolicy:
    """Q-table over the binned state, same exploration schedule and action
    grid as the network policy, no replay and no target network."""

    name = "trl"

    def __init__(self, params: EnvParams, config: TabularConfig,
                 exploration_rng: np.random.Generator):
        config.validate()
        self.config = config
        self.binner = StateBinner(params, config)
        self.table = QTable(self.binner.n_states, config.n_actions)
        self.actions_mw = power_grid(params.ap.max_tx_power_mw, config.n_actions)
        self._action_step = self.actions_mw[1] - self.actions_mw[0]
        self._rng = exploration_rng

    def act(self, obs: Observation) -> float:
        eps = self.config.exploration.rate(obs.slot)
        if self._rng.random() < eps:
            idx = int(self._rng.integers(self.config.n_actions))
        else:
            idx = self.table.greedy_action(self.binner.index(obs))
        return min(self.actions_mw[idx], obs.battery_mj)

    def observe(self, obs, power_mw, outcome, next_obs) -> None:
        cfg = self.config
        idx = int(round(power_mw / self._action_step))
        idx = min(max(idx, 0), cfg.n_actions - 1)
        self.table.update(self.binner.index(obs), idx,
                          reward_value(outcome, cfg.reward_mode),
                          self.binner.index(next_obs),
                          cfg.learning_rate, cfg.discount)
