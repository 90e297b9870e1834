"""Slot-level physics of a solar-powered access point (AP) that charges
RF-energy-harvesting IoT devices over the air while serving legacy data users.

One unit convention throughout: battery levels and per-slot energies in mJ,
transmit/received powers in mW, rates in bit/s, noise power in W. Slots are
1 s long, so a power of x mW spends exactly x mJ in a slot; the reported
energy-efficiency metric alone converts to watts (1/W units).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WATTS_PER_MW = 1e-3
_TRACE_BLOCK = 2048


class ConfigError(ValueError):
    """A model parameter is outside its documented range."""


# ---------------------------------------------------------------------------
# solar energy supply
# ---------------------------------------------------------------------------

DEFAULT_SOLAR_STATE_NAMES = ("Excellent", "Good", "Fair", "Poor")


@dataclass(frozen=True)
class SolarModel:
    """Markov-modulated solar supply: a named weather state evolves each slot
    and the raw harvest draw x ~ Normal(mean_j, std_j), clipped at 0, scales
    to an AP energy arrival x * panel_area * conversion_efficiency (mJ)."""

    transition_matrix: np.ndarray
    state_means_mj: np.ndarray
    state_stds_mj: np.ndarray
    panel_area_cm2: float = 15.0
    conversion_efficiency: float = 0.15
    state_names: tuple[str, ...] = DEFAULT_SOLAR_STATE_NAMES

    def __post_init__(self):
        object.__setattr__(self, "transition_matrix",
                           np.asarray(self.transition_matrix, dtype=float))
        object.__setattr__(self, "state_means_mj",
                           np.asarray(self.state_means_mj, dtype=float))
        object.__setattr__(self, "state_stds_mj",
                           np.asarray(self.state_stds_mj, dtype=float))
        object.__setattr__(self, "state_names", tuple(self.state_names))

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    def validate(self) -> None:
        k = self.n_states
        if k < 1:
            raise ConfigError("solar model needs at least one state")
        if self.transition_matrix.shape != (k, k):
            raise ConfigError(
                f"solar transition matrix must be {k}x{k}, "
                f"got {self.transition_matrix.shape}")
        if np.any(self.transition_matrix < -1e-12):
            raise ConfigError("solar transition probabilities must be >= 0")
        row_sums = self.transition_matrix.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > 1e-9):
            raise ConfigError(
                f"solar transition matrix rows must sum to 1, got {row_sums}")
        if self.state_means_mj.shape != (k,) or self.state_stds_mj.shape != (k,):
            raise ConfigError("solar state means/stds must have one entry per state")
        if np.any(self.state_stds_mj < 0):
            raise ConfigError("solar state stds must be >= 0")
        if not self.panel_area_cm2 > 0:
            raise ConfigError(f"panel area must be > 0, got {self.panel_area_cm2}")
        if not 0.0 <= self.conversion_efficiency <= 1.0:
            raise ConfigError("solar conversion efficiency must lie in [0, 1]")

    def stationary_distribution(self) -> np.ndarray:
        """Left eigenvector of the transition matrix for eigenvalue 1."""
        vals, vecs = np.linalg.eig(self.transition_matrix.T)
        idx = int(np.argmin(np.abs(vals - 1.0)))
        pi = np.real(vecs[:, idx])
        pi = np.abs(pi)
        return pi / pi.sum()

    def stationary_mean_arrival_mj(self) -> float:
        """Long-run mean per-slot AP energy arrival (ignoring the clip at 0)."""
        mean_x = float(self.stationary_distribution() @ self.state_means_mj)
        return mean_x * self.panel_area_cm2 * self.conversion_efficiency


def default_solar_model(panel_area_cm2: float = 15.0,
                        conversion_efficiency: float = 0.15) -> SolarModel:
    """Illustrative four-state supply, diagonally dominant with state means
    spanning an order of magnitude. Not calibrated against measured data."""
    matrix = np.full((4, 4), 0.1)
    np.fill_diagonal(matrix, 0.7)
    return SolarModel(
        transition_matrix=matrix,
        state_means_mj=np.array([120.0, 60.0, 25.0, 10.0]),
        state_stds_mj=np.array([30.0, 15.0, 6.0, 2.5]),
        panel_area_cm2=panel_area_cm2,
        conversion_efficiency=conversion_efficiency,
    )


def sample_energy_arrival(model: SolarModel, state_index: int,
                          rng: np.random.Generator) -> tuple[int, float]:
    """Advance the weather chain one step and draw the slot's energy arrival.

    Returns (new_state_index, arrival_mj). Negative Normal draws clip to 0.
    """
    row = model.transition_matrix[state_index]
    new_state = int(rng.choice(model.n_states, p=row))
    x = rng.normal(model.state_means_mj[new_state], model.state_stds_mj[new_state])
    x = max(0.0, x)
    return new_state, x * model.panel_area_cm2 * model.conversion_efficiency


# ---------------------------------------------------------------------------
# wireless channel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelModel:
    """Block-fading channel: per-slot complex coefficient Z with the given
    mean and variance; the link gain is |Z|^2 / distance^2."""

    mean: float = 1.0
    variance: float = 0.1

    def validate(self) -> None:
        if self.variance < 0:
            raise ConfigError(f"channel variance must be >= 0, got {self.variance}")

    def second_moment(self) -> float:
        """E[|Z|^2] = mean^2 + variance."""
        return self.mean ** 2 + self.variance


def sample_fading_power(channel: ChannelModel, rng: np.random.Generator,
                        size: int | tuple | None = None) -> float | np.ndarray:
    """Draw |Z|^2 with Z complex normal: variance split evenly across the
    real and imaginary parts, mean on the real axis."""
    scale = math.sqrt(channel.variance / 2.0)
    re = channel.mean + scale * rng.standard_normal(size)
    im = scale * rng.standard_normal(size)
    out = re * re + im * im
    return float(out) if size is None else out


def sample_channel_gain(distance_m: float, channel: ChannelModel,
                        rng: np.random.Generator) -> float:
    """One slot's link gain |Z|^2 / d^2 at the given distance."""
    if not distance_m > 0:
        raise ConfigError(f"distance must be > 0, got {distance_m}")
    return sample_fading_power(channel, rng) / distance_m ** 2


# ---------------------------------------------------------------------------
# RF energy harvester
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarvesterCurve:
    """Piecewise-linear RF-to-DC conversion efficiency versus received power.

    Efficiency is 0 below the sensitivity threshold, linearly interpolated
    between breakpoints, and clamped to the last breakpoint's value above
    the table. Default values are illustrative, not measured.
    """

    breakpoints_mw: np.ndarray
    efficiencies: np.ndarray
    sensitivity_mw: float

    def __post_init__(self):
        object.__setattr__(self, "breakpoints_mw",
                           np.asarray(self.breakpoints_mw, dtype=float))
        object.__setattr__(self, "efficiencies",
                           np.asarray(self.efficiencies, dtype=float))

    def validate(self) -> None:
        bp, eff = self.breakpoints_mw, self.efficiencies
        if bp.ndim != 1 or bp.shape != eff.shape or len(bp) < 1:
            raise ConfigError("harvester breakpoints and efficiencies must be "
                              "equal-length non-empty 1-d tables")
        if np.any(np.diff(bp) <= 0):
            raise ConfigError("harvester breakpoint powers must strictly increase")
        if np.any((eff < 0) | (eff > 1)):
            raise ConfigError("harvester efficiencies must lie in [0, 1]")
        if self.sensitivity_mw < 0 or self.sensitivity_mw > bp[0]:
            raise ConfigError("harvester sensitivity must lie in [0, first breakpoint]")

    def efficiency(self, power_mw):
        """beta(p): scalar in, scalar out; array in, array out."""
        p = np.asarray(power_mw, dtype=float)
        eff = np.interp(p, self.breakpoints_mw, self.efficiencies)
        eff = np.where(p < self.sensitivity_mw, 0.0, eff)
        return float(eff) if np.isscalar(power_mw) else eff


def default_harvester_curve() -> HarvesterCurve:
    # Anchors at -20/-10/0/5/10 dBm; peak efficiency in line with published
    # 2.45 GHz rectennas. Illustrative, fully configurable.
    return HarvesterCurve(
        breakpoints_mw=np.array([0.01, 0.1, 1.0, 3.16, 10.0]),
        efficiencies=np.array([0.0, 0.2, 0.65, 0.78, 0.80]),
        sensitivity_mw=0.01,
    )


def harvester_beta(power_mw, curve: HarvesterCurve):
    """Conversion efficiency at the given received power (see HarvesterCurve)."""
    return curve.efficiency(power_mw)


# ---------------------------------------------------------------------------
# node parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ApParams:
    """Access-point side constants."""

    battery_capacity_mj: float = 100_000.0
    max_tx_power_mw: float = 200.0
    bandwidth_hz: float = 20e6
    noise_power_w: float = 1e-6

    def validate(self) -> None:
        if not self.battery_capacity_mj > 0:
            raise ConfigError("AP battery capacity must be > 0")
        if not self.max_tx_power_mw > 0:
            raise ConfigError("max transmit power must be > 0")
        if not self.bandwidth_hz > 0:
            raise ConfigError("bandwidth must be > 0")
        if not self.noise_power_w > 0:
            raise ConfigError("noise power must be > 0")


@dataclass(frozen=True)
class DeviceParams:
    """Population of RF-energy-harvesting IoT devices."""

    count: int = 5
    distance_min_m: float = 9.0
    distance_max_m: float = 10.0
    battery_capacity_mj: float = 50.0
    sample_cost_mj: float = 1.38

    def validate(self) -> None:
        if self.count < 1:
            raise ConfigError("device count must be >= 1")
        if not 0 < self.distance_min_m <= self.distance_max_m:
            raise ConfigError("device distances must satisfy 0 < min <= max")
        if not self.battery_capacity_mj > 0:
            raise ConfigError("device battery capacity must be > 0")
        if not self.sample_cost_mj > 0:
            raise ConfigError("device sample cost must be > 0")


@dataclass(frozen=True)
class UserParams:
    """Population of legacy data users; one is served per slot."""

    count: int = 10
    distance_min_m: float = 5.0
    distance_max_m: float = 25.0
    rate_requirement_bps: float = 133e6

    def validate(self) -> None:
        if self.count < 1:
            raise ConfigError("user count must be >= 1")
        if not 0 < self.distance_min_m <= self.distance_max_m:
            raise ConfigError("user distances must satisfy 0 < min <= max")
        if self.rate_requirement_bps < 0:
            raise ConfigError("rate requirement must be >= 0")


@dataclass(frozen=True)
class EnvParams:
    """Everything that defines one simulated network."""

    ap: ApParams = field(default_factory=ApParams)
    devices: DeviceParams = field(default_factory=DeviceParams)
    users: UserParams = field(default_factory=UserParams)
    channel: ChannelModel = field(default_factory=ChannelModel)
    solar: SolarModel = field(default_factory=default_solar_model)
    harvester: HarvesterCurve = field(default_factory=default_harvester_curve)
    unlimited_energy: bool = False
    initial_battery_mj: float | None = None  # None -> start full

    def validate(self) -> None:
        self.ap.validate()
        self.devices.validate()
        self.users.validate()
        self.channel.validate()
        self.solar.validate()
        self.harvester.validate()
        if self.initial_battery_mj is not None and not (
                0 <= self.initial_battery_mj <= self.ap.battery_capacity_mj):
            raise ConfigError("initial battery must lie in [0, capacity]")


# ---------------------------------------------------------------------------
# slot equations
# ---------------------------------------------------------------------------

def ap_battery_step(battery_mj: float, power_mw: float, arrival_mj: float,
                    capacity_mj: float) -> float:
    """Next AP battery level: min(capacity, battery - spent + arrival).

    Spending more than the battery holds is a programming error upstream.
    """
    if power_mw > battery_mj + 1e-9:
        raise ValueError(
            f"spent {power_mw} mJ from a battery holding {battery_mj} mJ")
    return min(capacity_mj, battery_mj - power_mw + arrival_mj)


def device_step(battery_mj: float, received_mw: float, curve: HarvesterCurve,
                capacity_mj: float, sample_cost_mj: float) -> tuple[float, bool]:
    """Harvest-then-spend update for one device in one slot.

    The device banks received_mw * beta(received_mw) mJ (capped at capacity);
    if the post-harvest level covers one sample cost it spends it and
    activates. Returns (new_battery_mj, activated).
    """
    harvested = received_mw * curve.efficiency(received_mw)
    b = min(capacity_mj, battery_mj + harvested)
    if b >= sample_cost_mj:
        return b - sample_cost_mj, True
    return b, False


def device_step_array(batteries_mj: np.ndarray, received_mw: np.ndarray,
                      curve: HarvesterCurve, capacity_mj: float,
                      sample_cost_mj: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized device_step over a device population (same equations)."""
    p = np.asarray(received_mw, dtype=float)
    eff = np.interp(p, curve.breakpoints_mw, curve.efficiencies)
    harvested = np.where(p < curve.sensitivity_mw, 0.0, eff) * p
    b = np.minimum(capacity_mj, batteries_mj + harvested)
    activated = b >= sample_cost_mj
    return b - sample_cost_mj * activated, activated


def data_rate(power_mw: float, gain: float, bandwidth_hz: float,
              noise_power_w: float) -> float:
    """Shannon rate (bit/s) of the served user at the given transmit power."""
    if power_mw <= 0 or gain <= 0:
        return 0.0
    snr = power_mw * WATTS_PER_MW * gain / noise_power_w
    return bandwidth_hz * math.log2(1.0 + snr)


def energy_efficiency(all_activated: bool, user_satisfied: bool,
                      power_mw: float) -> float:
    """I*J per watt spent; 0 on idle slots."""
    if power_mw <= 0:
        return 0.0
    return float(all_activated and user_satisfied) / (power_mw * WATTS_PER_MW)


# ---------------------------------------------------------------------------
# the environment
# ---------------------------------------------------------------------------

@dataclass
class SlotOutcome:
    """Everything observable about one completed slot."""

    slot: int
    power_mw: float            # executed transmit power
    user_index: int
    user_rate_bps: float
    user_satisfied: bool       # J_t
    n_activated: int           # n_t
    all_activated: bool        # I_t
    efficiency_per_w: float    # eta_t
    energy_arrival_mj: float   # arrival landing in the *next* slot's battery
    battery_mj_after: float


@dataclass
class Observation:
    """What the AP knows when choosing the current slot's power."""

    slot: int
    battery_mj: float
    user_index: int
    user_gain: float                       # current slot, known via CSI
    energy_arrival_mj: float               # arrival that landed this slot
    device_gain_reports: np.ndarray | None  # previous slot's gains, else None


class _RandomTrace:
    """Per-slot randomness, generated in blocks from dedicated streams so a
    seed fixes the whole future independently of how far it is consumed."""

    def __init__(self, params: EnvParams, solar_rng, channel_rng, user_rng):
        self._params = params
        self._solar_rng = solar_rng
        self._channel_rng = channel_rng
        self._user_rng = user_rng
        self._solar_state = int(solar_rng.choice(
            params.solar.n_states, p=params.solar.stationary_distribution()))
        self.solar_states = np.empty(0, dtype=int)
        self.arrivals_mj = np.empty(0)
        self.user_indices = np.empty(0, dtype=int)
        self.user_fading = np.empty(0)
        self.device_fading = np.empty((0, params.devices.count))

    def ensure(self, slot: int) -> None:
        while len(self.arrivals_mj) <= slot:
            self._extend()

    def _extend(self) -> None:
        n = _TRACE_BLOCK
        p = self._params
        states = np.empty(n, dtype=int)
        arrivals = np.empty(n)
        state = self._solar_state
        for i in range(n):
            state, arrivals[i] = sample_energy_arrival(p.solar, state, self._solar_rng)
            states[i] = state
        self._solar_state = state
        self.solar_states = np.concatenate([self.solar_states, states])
        self.arrivals_mj = np.concatenate([self.arrivals_mj, arrivals])
        self.user_indices = np.concatenate([
            self.user_indices,
            self._user_rng.integers(p.users.count, size=n)])
        self.user_fading = np.concatenate([
            self.user_fading,
            sample_fading_power(p.channel, self._channel_rng, size=n)])
        self.device_fading = np.concatenate([
            self.device_fading,
            sample_fading_power(p.channel, self._channel_rng,
                                size=(n, p.devices.count))])


class AccessPointEnv:
    """Discrete-time simulator of the AP, its battery, the harvesting devices
    and the served data users. Deterministic given the seed.

    The per-slot contract: the agent reads `observation()`, picks a power in
    [0, min(max_tx_power, battery)], and `step()` returns the slot's outcome.
    Slot 0's arrival is part of the initial battery, so the first observed
    arrival lands with slot 1.
    """

    def __init__(self, params: EnvParams, seed: int | np.random.SeedSequence = 0):
        params.validate()
        self.params = params
        if isinstance(seed, np.random.SeedSequence):
            root = seed
        else:
            root = np.random.SeedSequence(seed)
        self._streams = root.spawn(4)  # geometry, solar, channel, user selection
        self.reset()

    def reset(self) -> Observation:
        p = self.params
        geom_rng = np.random.Generator(np.random.PCG64(self._streams[0]))
        solar_rng = np.random.Generator(np.random.PCG64(self._streams[1]))
        channel_rng = np.random.Generator(np.random.PCG64(self._streams[2]))
        user_rng = np.random.Generator(np.random.PCG64(self._streams[3]))
        self.user_distances_m = geom_rng.uniform(
            p.users.distance_min_m, p.users.distance_max_m, size=p.users.count)
        self.device_distances_m = geom_rng.uniform(
            p.devices.distance_min_m, p.devices.distance_max_m,
            size=p.devices.count)
        self._trace = _RandomTrace(p, solar_rng, channel_rng, user_rng)
        self.t = 0
        cap = p.ap.battery_capacity_mj
        if p.unlimited_energy:
            self.battery_mj = cap
        elif p.initial_battery_mj is not None:
            self.battery_mj = float(p.initial_battery_mj)
        else:
            self.battery_mj = cap
        self.device_batteries_mj = np.zeros(p.devices.count)
        self._last_arrival_mj = 0.0
        return self.observation()

    # -- observability -----------------------------------------------------

    def user_gain_at(self, slot: int) -> float:
        self._trace.ensure(slot)
        d = self.user_distances_m[self._trace.user_indices[slot]]
        return float(self._trace.user_fading[slot] / d ** 2)

    def device_gains_at(self, slot: int) -> np.ndarray:
        self._trace.ensure(slot)
        return self._trace.device_fading[slot] / self.device_distances_m ** 2

    def arrival_at(self, slot: int) -> float:
        """Arrival landing in the battery when slot `slot` begins (0 at slot 0)."""
        if slot <= 0:
            return 0.0
        self._trace.ensure(slot - 1)
        return float(self._trace.arrivals_mj[slot - 1])

    def observation(self) -> Observation:
        t = self.t
        self._trace.ensure(t)
        reports = self.device_gains_at(t - 1) if t > 0 else None
        return Observation(
            slot=t,
            battery_mj=self.battery_mj,
            user_index=int(self._trace.user_indices[t]),
            user_gain=self.user_gain_at(t),
            energy_arrival_mj=self._last_arrival_mj,
            device_gain_reports=reports,
        )

    def max_feasible_power_mw(self) -> float:
        return min(self.params.ap.max_tx_power_mw, self.battery_mj)

    # -- dynamics -----------------------------------------------------------

    def step(self, power_mw: float) -> SlotOutcome:
        p = self.params
        power_mw = float(power_mw)
        limit = self.max_feasible_power_mw()
        if not 0.0 <= power_mw <= limit + 1e-9:
            raise ValueError(
                f"power {power_mw} mW outside [0, {limit}] at slot {self.t}")
        power_mw = min(power_mw, limit)

        t = self.t
        user_gain = self.user_gain_at(t)
        rate = data_rate(power_mw, user_gain, p.ap.bandwidth_hz, p.ap.noise_power_w)
        satisfied = rate >= p.users.rate_requirement_bps

        received = power_mw * self.device_gains_at(t)
        self.device_batteries_mj, activated = device_step_array(
            self.device_batteries_mj, received, p.harvester,
            p.devices.battery_capacity_mj, p.devices.sample_cost_mj)
        n_act = int(activated.sum())
        all_act = n_act == p.devices.count

        eta = energy_efficiency(all_act, satisfied, power_mw)

        arrival = float(self._trace.arrivals_mj[t])  # lands in slot t+1
        if p.unlimited_energy:
            self.battery_mj = p.ap.battery_capacity_mj
        else:
            self.battery_mj = ap_battery_step(
                self.battery_mj, power_mw, arrival, p.ap.battery_capacity_mj)
        self._last_arrival_mj = arrival

        outcome = SlotOutcome(
            slot=t,
            power_mw=power_mw,
            user_index=int(self._trace.user_indices[t]),
            user_rate_bps=rate,
            user_satisfied=bool(satisfied),
            n_activated=n_act,
            all_activated=bool(all_act),
            efficiency_per_w=eta,
            energy_arrival_mj=arrival,
            battery_mj_after=self.battery_mj,
        )
        self.t = t + 1
        self._trace.ensure(self.t)
        return outcome
