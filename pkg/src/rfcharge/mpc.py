"""Receding-horizon transmit-power control: per-parameter GPR forecasters
feed a virtual rollout of the slot equations, and a coarse-grid search with
bisection refinement picks the constant candidate power that maximizes the
average performance index over the horizon.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from scipy.linalg import cho_solve

from .agents import REWARD_MODES, REWARD_SATISFACTION
from .env import (AccessPointEnv, EnvParams, Observation, WATTS_PER_MW,
                  device_step_array)
from .gpr import GprHyperparams, GprModel, rbf_kernel

OBSERVABILITY_REPORTED = "reported"   # devices report realized gains one slot late
OBSERVABILITY_EXPECTED = "expected"   # AP knows only average device gains

_REFINE_POINTS = 15   # interior candidates per refinement stage
_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 4                  # rollout covers horizon + 1 slots
    window: int = 20
    grid_points: int = 64
    precision_mw: float = 1e-31       # floored at 1e-6 * max power in use
    observability: str = OBSERVABILITY_REPORTED
    index_mode: str = REWARD_SATISFACTION
    # Heavier noise damping than the GPR default: channel gains are nearly
    # uncorrelated slot to slot, and a near-interpolating fit extrapolates
    # their noise to implausible (even negative) levels.  A larger noise
    # share pulls one-step forecasts toward the window mean while still
    # tracking slow level shifts such as solar state changes.
    gpr: GprHyperparams = field(
        default_factory=lambda: GprHyperparams(noise_ratio=0.3))

    def validate(self) -> None:
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.window < 2:
            raise ValueError("window must hold at least two observations")
        if self.grid_points < 2:
            raise ValueError("grid needs at least two points")
        if self.precision_mw <= 0:
            raise ValueError("precision must be > 0")
        if self.observability not in (OBSERVABILITY_REPORTED,
                                      OBSERVABILITY_EXPECTED):
            raise ValueError(f"unknown observability {self.observability!r}")
        if self.index_mode not in REWARD_MODES:
            raise ValueError(f"unknown index mode {self.index_mode!r}")
        self.gpr.validate()


@dataclass
class Predictions:
    """Forecasts covering virtual slots t .. t+L.

    arrivals_mj[j] and user_gains[j] are for slot t+1+j (the current slot's
    arrival is already banked and its user gain is observed); device_gains[j]
    is the per-device row for slot t+j, which is never directly observed.
    """

    arrivals_mj: np.ndarray    # (L,)
    user_gains: np.ndarray     # (L,)
    device_gains: np.ndarray   # (L+1, N)


class _SlidingSeries:
    def __init__(self, capacity: int):
        self._items = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def append(self, slot: int, value) -> None:
        self._items.append((slot, value))

    def arrays(self):
        q = np.array([s for s, _ in self._items], dtype=float)
        p = np.array([v for _, v in self._items], dtype=float)
        return q, p

    def last_value(self):
        return self._items[-1][1]


class GprForecasters:
    """One GPR per forecast parameter: the AP energy arrival, the served-user
    gain, and each device's gain (fitted jointly since their windows share
    slot indices). Cold starts repeat the last observation, or fall back to
    the configured means before anything is observed. Static geometry (device
    distances) is assumed known to the AP; only fading is forecast."""

    def __init__(self, params: EnvParams, config: MpcConfig,
                 device_distances_m: np.ndarray):
        self.params = params
        self.config = config
        self.device_distances_m = np.asarray(device_distances_m, dtype=float)
        n = params.devices.count
        if self.device_distances_m.shape != (n,):
            raise ValueError(
                f"need one distance per device: got "
                f"{self.device_distances_m.shape} for {n} devices")
        self._arrivals = _SlidingSeries(config.window)
        self._user = _SlidingSeries(config.window)
        self._devices = [_SlidingSeries(config.window) for _ in range(n)]
        self._mean_arrival = params.solar.stationary_mean_arrival_mj()
        self._expected_gains = (params.channel.second_moment()
                                / self.device_distances_m ** 2)
        self._steady_weights_cache: dict[tuple, np.ndarray] = {}

    # -- observations -------------------------------------------------------

    def observe_arrival(self, slot: int, arrival_mj: float) -> None:
        self._arrivals.append(slot, arrival_mj)

    def observe_user_gain(self, slot: int, gain: float) -> None:
        self._user.append(slot, gain)

    def observe_device_gains(self, slot: int, gains: np.ndarray) -> None:
        for series, g in zip(self._devices, gains):
            series.append(slot, float(g))

    # -- forecasts ----------------------------------------------------------

    def _steady_weights(self, q: np.ndarray,
                        queries: np.ndarray) -> np.ndarray | None:
        """Posterior-mean weight matrix W with prediction = mean + std (W y).

        Once a window is full its slot axis is always k consecutive integers,
        and the query offsets from the newest slot repeat every slot, so the
        whole linear map from standardized targets to predictions is a
        constant; it is computed once and cached. Only valid while the
        noise-to-signal ratio is fixed, i.e. with ratio-based hyperparameters.
        """
        h = self.config.gpr
        k = q.size
        if (h.signal_variance is not None or h.noise_variance is not None
                or k != self.config.window or q[-1] - q[0] != k - 1):
            return None
        offsets = tuple((queries - q[-1]).tolist())
        key = (k, offsets)
        weights = self._steady_weights_cache.get(key)
        if weights is None:
            qc = np.arange(k, dtype=float)
            qc -= qc.mean()
            corr = rbf_kernel(qc, qc, h.lengthscale, 1.0)
            ratio = h.noise_ratio + h.jitter_ratio
            chol = np.linalg.cholesky(corr + ratio * np.eye(k))
            kstar = rbf_kernel(qc[-1] + np.asarray(offsets), qc,
                               h.lengthscale, 1.0)
            weights = cho_solve((chol, True), kstar.T, check_finite=False).T
            self._steady_weights_cache[key] = weights
        return weights

    def _series_forecast(self, series: _SlidingSeries, queries: np.ndarray,
                         fallback: float) -> np.ndarray:
        if len(series) < 2:
            value = series.last_value() if len(series) else fallback
            return np.full(queries.shape, float(value))
        q, p = series.arrays()
        weights = self._steady_weights(q, queries)
        if weights is not None:
            mean = p.mean()
            std = p.std()
            if std < _STD_FLOOR:
                std = 1.0
            return mean + std * (weights @ ((p - mean) / std))
        model = GprModel.fit(q, p, self.config.gpr)
        return model.predict(queries)

    def _device_forecast(self, queries: np.ndarray) -> np.ndarray:
        n = len(self._devices)
        out = np.empty((queries.size, n))
        lengths = {len(s) for s in self._devices}
        if lengths == {0}:
            return np.tile(self._expected_gains, (queries.size, 1))
        if len(self._devices[0]) < 2:
            for i, s in enumerate(self._devices):
                out[:, i] = float(s.last_value())
            return out
        # all device windows share their slot axis: one factorization serves all
        q, p0 = self._devices[0].arrays()
        weights = self._steady_weights(q, queries)
        if weights is not None:
            targets = np.column_stack([s.arrays()[1] for s in self._devices])
            means = targets.mean(axis=0)
            stds = targets.std(axis=0)
            stds[stds < _STD_FLOOR] = 1.0
            return means + stds * (weights @ ((targets - means) / stds))
        model = GprModel.fit(q, p0, self.config.gpr)
        out[:, 0] = model.predict(queries)
        for i, s in enumerate(self._devices[1:], start=1):
            _, p = s.arrays()
            out[:, i] = model.refit_targets(p).predict(queries)
        return out

    def predict(self, slot: int, horizon: int) -> Predictions:
        future = slot + 1 + np.arange(horizon, dtype=float)
        arrivals = self._series_forecast(self._arrivals, future,
                                         self._mean_arrival)
        user_fallback = (self.params.channel.second_moment()
                         / self.params.users.distance_min_m ** 2)
        user = self._series_forecast(self._user, future, user_fallback)
        if self.config.observability == OBSERVABILITY_EXPECTED:
            devices = np.tile(self._expected_gains, (horizon + 1, 1))
        else:
            devices = self._device_forecast(slot + np.arange(horizon + 1,
                                                             dtype=float))
        return Predictions(arrivals_mj=np.maximum(arrivals, 0.0),
                           user_gains=np.maximum(user, 0.0),
                           device_gains=np.maximum(devices, 0.0))


class OracleForecasters:
    """Perfect foresight read from the environment's random trace. A test
    and analysis hook; a real AP cannot do this."""

    def __init__(self, env: AccessPointEnv):
        self._env = env
        self.device_distances_m = env.device_distances_m

    def observe_arrival(self, slot, arrival_mj) -> None:
        pass

    def observe_user_gain(self, slot, gain) -> None:
        pass

    def observe_device_gains(self, slot, gains) -> None:
        pass

    def predict(self, slot: int, horizon: int) -> Predictions:
        env = self._env
        arrivals = np.array([env.arrival_at(slot + 1 + j)
                             for j in range(horizon)])
        user = np.array([env.user_gain_at(slot + 1 + j)
                         for j in range(horizon)])
        devices = np.vstack([env.device_gains_at(slot + j)
                             for j in range(horizon + 1)])
        return Predictions(arrivals, user, devices)


# ---------------------------------------------------------------------------
# virtual rollout and power search
# ---------------------------------------------------------------------------

def rollout_values(candidates_mw: np.ndarray, battery_mj: float,
                   device_batteries_mj: np.ndarray, current_user_gain: float,
                   predictions: Predictions, params: EnvParams,
                   mode: str = REWARD_SATISFACTION) -> np.ndarray:
    """Average performance index over the horizon for each candidate power.

    Each candidate is held constant across the rollout but clamped per
    virtual slot to the virtual battery; batteries follow the same equations
    as the environment with predictions standing in for randomness.
    """
    u = np.atleast_1d(np.asarray(candidates_mw, dtype=float))
    horizon = len(predictions.arrivals_mj)
    cap = params.ap.battery_capacity_mj
    p_max = params.ap.max_tx_power_mw
    noise = params.ap.noise_power_w
    bandwidth = params.ap.bandwidth_hz
    r_min = params.users.rate_requirement_bps

    b_ap = np.full(u.shape, cap if params.unlimited_energy else battery_mj)
    b_dev = np.tile(np.asarray(device_batteries_mj, dtype=float), (u.size, 1))
    total = np.zeros(u.shape)
    for j in range(horizon + 1):
        executed = np.minimum(u, np.minimum(p_max, b_ap))
        gain_u = current_user_gain if j == 0 else predictions.user_gains[j - 1]
        rate = bandwidth * np.log2(1.0 + executed * WATTS_PER_MW * gain_u / noise)
        satisfied = rate >= r_min
        received = executed[:, None] * predictions.device_gains[j][None, :]
        b_dev, activated = device_step_array(
            b_dev, received, params.harvester,
            params.devices.battery_capacity_mj, params.devices.sample_cost_mj)
        index = np.logical_and(activated.all(axis=1), satisfied).astype(float)
        if mode != REWARD_SATISFACTION:
            watts = executed * WATTS_PER_MW
            index = np.divide(index, watts, out=np.zeros_like(index),
                              where=watts > 0)
        total += index
        if j < horizon:
            if params.unlimited_energy:
                b_ap = np.full(u.shape, cap)
            else:
                b_ap = np.minimum(cap, b_ap - executed
                                  + predictions.arrivals_mj[j])
    return total / (horizon + 1)


def rollout_value(candidate_mw: float, battery_mj: float,
                  device_batteries_mj: np.ndarray, current_user_gain: float,
                  predictions: Predictions, params: EnvParams,
                  mode: str = REWARD_SATISFACTION) -> float:
    return float(rollout_values(np.array([candidate_mw]), battery_mj,
                                device_batteries_mj, current_user_gain,
                                predictions, params, mode)[0])


def optimize_power(battery_mj: float, device_batteries_mj: np.ndarray,
                   current_user_gain: float, predictions: Predictions,
                   params: EnvParams, config: MpcConfig) -> tuple[float, float]:
    """Maximize the rollout value over [0, min(max power, battery)].

    A coarse grid brackets the best region; repeated subdivision of the
    bracket then walks to the lowest power attaining the best value (ties
    always resolve toward less power). Subdividing with a batch of interior
    points per stage is the vectorized form of bisection: each stage shrinks
    the bracket by the batch size instead of by two.
    """
    hi = min(params.ap.max_tx_power_mw, battery_mj)
    hi = max(hi, 0.0)
    grid = np.linspace(0.0, hi, config.grid_points)
    values = rollout_values(grid, battery_mj, device_batteries_mj,
                            current_user_gain, predictions, params,
                            config.index_mode)
    i = int(np.argmax(values))  # first maximum: lowest-power tie-break
    best_u = float(grid[i])
    best_v = float(values[i])
    if i == 0:
        return best_u, best_v
    lo = float(grid[i - 1])   # value at lo is strictly below best_v
    precision = max(config.precision_mw, 1e-6 * params.ap.max_tx_power_mw)
    while best_u - lo > precision:
        xs = np.linspace(lo, best_u, _REFINE_POINTS + 2)[1:-1]
        vs = rollout_values(xs, battery_mj, device_batteries_mj,
                            current_user_gain, predictions, params,
                            config.index_mode)
        j = int(np.argmax(vs))  # first maximum again
        if vs[j] >= best_v:
            best_u, best_v = float(xs[j]), float(vs[j])
            if j > 0:
                lo = float(xs[j - 1])
        else:
            lo = float(xs[-1])
    return best_u, best_v


class MpcPolicy:
    """Model-predictive transmit-power control.

    Keeps a one-slot-delayed replica of the device batteries (device gain
    reports are exact, so the replica matches the true levels entering the
    current slot), forecasts the uncertain inputs, and transmits the power
    the rollout search selects.
    """

    name = "mpc"

    def __init__(self, params: EnvParams, config: MpcConfig, forecasters):
        config.validate()
        self.params = params
        self.config = config
        self.forecasters = forecasters
        self.device_batteries_mj = np.zeros(params.devices.count)
        self._expected_gains = (params.channel.second_moment()
                                / np.asarray(forecasters.device_distances_m) ** 2)
        self._last_power_mw = 0.0
        self.last_value: float | None = None

    def _advance_replica(self, gains: np.ndarray) -> None:
        received = self._last_power_mw * gains
        self.device_batteries_mj, _ = device_step_array(
            self.device_batteries_mj, received, self.params.harvester,
            self.params.devices.battery_capacity_mj,
            self.params.devices.sample_cost_mj)

    def act(self, obs: Observation) -> float:
        f = self.forecasters
        t = obs.slot
        if t > 0:
            f.observe_arrival(t, obs.energy_arrival_mj)
            if self.config.observability == OBSERVABILITY_EXPECTED:
                self._advance_replica(self._expected_gains)
            elif obs.device_gain_reports is not None:
                f.observe_device_gains(t - 1, obs.device_gain_reports)
                self._advance_replica(obs.device_gain_reports)
        f.observe_user_gain(t, obs.user_gain)
        predictions = f.predict(t, self.config.horizon)
        power, value = optimize_power(obs.battery_mj, self.device_batteries_mj,
                                      obs.user_gain, predictions, self.params,
                                      self.config)
        power = min(power, obs.battery_mj)
        self._last_power_mw = power
        self.last_value = value
        return power

    def observe(self, obs, power_mw, outcome, next_obs) -> None:
        pass
