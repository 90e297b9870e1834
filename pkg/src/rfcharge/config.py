"""Experiment configuration: strict YAML loading into typed settings.

Every key maps one-to-one onto a dataclass field; unknown keys are errors
(naming the offending dotted path) so silent typos cannot change a run.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .agents import DqnConfig, ExplorationSchedule, TabularConfig
from .env import (ApParams, ChannelModel, ConfigError, DeviceParams, EnvParams,
                  HarvesterCurve, SolarModel, UserParams,
                  default_harvester_curve, default_solar_model)
from .gpr import GprHyperparams
from .mpc import MpcConfig

AGENT_NAMES = ("dqn", "trl", "mpc", "greedy", "random", "nopolicy")
SWEEP_AXES = ("panel_area", "device_distance", "user_distance")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple[float, ...]

    def validate(self) -> None:
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; "
                              f"expected one of {SWEEP_AXES}")
        if len(self.values) < 1:
            raise ConfigError("sweep needs at least one value")


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvParams = field(default_factory=EnvParams)
    agents: tuple[str, ...] = AGENT_NAMES
    seeds: tuple[int, ...] = tuple(range(10))
    total_slots: int = 150_000
    episode_slots: int = 3000
    collection_slot: int = 120_000
    dqn: DqnConfig = field(default_factory=DqnConfig)
    trl: TabularConfig = field(default_factory=TabularConfig)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    sweep: SweepSpec | None = None

    def validate(self) -> None:
        self.env.validate()
        for name in self.agents:
            if name not in AGENT_NAMES:
                raise ConfigError(f"unknown agent {name!r}; "
                                  f"expected one of {AGENT_NAMES}")
        if len(set(self.agents)) != len(self.agents):
            raise ConfigError("agents must be unique")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if self.episode_slots < 1:
            raise ConfigError("episode length must be >= 1 slot")
        if self.total_slots < 0:
            raise ConfigError("total slots must be >= 0")
        if self.collection_slot % self.episode_slots != 0:
            raise ConfigError("collection slot must fall on an episode boundary")
        if self.total_slots < self.collection_slot:
            raise ConfigError("total slots must be >= the collection slot")
        try:
            self.dqn.validate()
            self.trl.validate()
            self.mpc.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.sweep is not None:
            self.sweep.validate()


def apply_sweep_value(config: ExperimentConfig, axis: str,
                      value: float) -> ExperimentConfig:
    """Derive the configuration for one sweep point."""
    env = config.env
    if axis == "panel_area":
        env = replace(env, solar=replace(env.solar, panel_area_cm2=value))
    elif axis == "device_distance":
        width = env.devices.distance_max_m - env.devices.distance_min_m
        env = replace(env, devices=replace(env.devices,
                                           distance_min_m=value - width / 2,
                                           distance_max_m=value + width / 2))
    elif axis == "user_distance":
        env = replace(env, users=replace(env.users, distance_max_m=value))
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    derived = replace(config, env=env, sweep=None)
    derived.validate()
    return derived


# ---------------------------------------------------------------------------
# strict dict -> dataclass loading
# ---------------------------------------------------------------------------

def _require_mapping(data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be a mapping, "
                         f"got {type(data).__name__}")


def _check_keys(data: dict, allowed, path: str) -> None:
    for key in data:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown configuration key {where!r}")


def _numeric(value):
    """Repair YAML 1.1's exponent quirk: '20.0e6' loads as a string."""
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def _build_simple(cls, data: dict, path: str, overrides: dict | None = None):
    """Fill a flat dataclass from a dict, defaulting missing fields."""
    fields = {f.name: f for f in dataclasses.fields(cls)}
    _check_keys(data, fields, path)
    kwargs = {key: _numeric(value) for key, value in data.items()}
    if overrides:
        kwargs.update(overrides)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad value under {path!r}: {exc}") from exc


def _build_solar(data: dict, path: str) -> SolarModel:
    default = default_solar_model()
    allowed = ("transition_matrix", "state_means_mj", "state_stds_mj",
               "panel_area_cm2", "conversion_efficiency", "state_names")
    _check_keys(data, allowed, path)
    kwargs = {}
    for key in allowed:
        if key in data:
            value = data[key]
            if key in ("transition_matrix", "state_means_mj", "state_stds_mj"):
                value = np.asarray(value, dtype=float)
            elif key == "state_names":
                value = tuple(value)
            kwargs[key] = value
        else:
            kwargs[key] = getattr(default, key)
    return SolarModel(**kwargs)


def _build_harvester(data: dict, path: str) -> HarvesterCurve:
    default = default_harvester_curve()
    allowed = ("breakpoints", "sensitivity_mw")
    _check_keys(data, allowed, path)
    if "breakpoints" in data:
        pairs = np.asarray(data["breakpoints"], dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ConfigError(f"{path}.breakpoints must be a list of "
                              "[power_mw, efficiency] pairs")
        breakpoints, efficiencies = pairs[:, 0], pairs[:, 1]
    else:
        breakpoints = default.breakpoints_mw
        efficiencies = default.efficiencies
    sensitivity = _numeric(data.get("sensitivity_mw", float(breakpoints[0])))
    return HarvesterCurve(breakpoints, efficiencies, sensitivity)


def _build_env(data: dict, path: str) -> EnvParams:
    allowed = ("ap", "devices", "users", "channel", "solar", "harvester",
               "unlimited_energy", "initial_battery_mj")
    _check_keys(data, allowed, path)

    def sub(key):
        value = data.get(key, {})
        _require_mapping(value, f"{path}.{key}")
        return value

    return EnvParams(
        ap=_build_simple(ApParams, sub("ap"), f"{path}.ap"),
        devices=_build_simple(DeviceParams, sub("devices"), f"{path}.devices"),
        users=_build_simple(UserParams, sub("users"), f"{path}.users"),
        channel=_build_simple(ChannelModel, sub("channel"), f"{path}.channel"),
        solar=_build_solar(sub("solar"), f"{path}.solar"),
        harvester=_build_harvester(sub("harvester"), f"{path}.harvester"),
        unlimited_energy=bool(data.get("unlimited_energy", False)),
        initial_battery_mj=data.get("initial_battery_mj"),
    )


def _build_exploration(data: dict, path: str) -> ExplorationSchedule:
    return _build_simple(ExplorationSchedule, data, path)


def _build_dqn(data: dict, path: str) -> DqnConfig:
    data = dict(data)
    exploration = data.pop("exploration", {})
    _require_mapping(exploration, f"{path}.exploration")
    if "hidden_sizes" in data:
        data["hidden_sizes"] = tuple(int(h) for h in data["hidden_sizes"])
    return _build_simple(DqnConfig, data, path, overrides={
        "exploration": _build_exploration(exploration, f"{path}.exploration")})


def _build_trl(data: dict, path: str) -> TabularConfig:
    data = dict(data)
    exploration = data.pop("exploration", {})
    _require_mapping(exploration, f"{path}.exploration")
    return _build_simple(TabularConfig, data, path, overrides={
        "exploration": _build_exploration(exploration, f"{path}.exploration")})


def _build_mpc(data: dict, path: str) -> MpcConfig:
    data = dict(data)
    gpr = data.pop("gpr", {})
    _require_mapping(gpr, f"{path}.gpr")
    return _build_simple(MpcConfig, data, path, overrides={
        "gpr": _build_simple(GprHyperparams, gpr, f"{path}.gpr")})


def config_from_dict(data: dict) -> ExperimentConfig:
    _require_mapping(data, "")
    allowed = ("env", "agents", "seeds", "total_slots", "episode_slots",
               "collection_slot", "dqn", "trl", "mpc", "sweep")
    _check_keys(data, allowed, "")

    def sub(key):
        value = data.get(key, {})
        _require_mapping(value, key)
        return value

    sweep = None
    if "sweep" in data and data["sweep"] is not None:
        _require_mapping(data["sweep"], "sweep")
        _check_keys(data["sweep"], ("axis", "values"), "sweep")
        try:
            sweep = SweepSpec(axis=data["sweep"]["axis"],
                              values=tuple(float(v)
                                           for v in data["sweep"]["values"]))
        except KeyError as exc:
            raise ConfigError(f"sweep needs both 'axis' and 'values'") from exc

    defaults = ExperimentConfig()
    # YAML carries no schema, so wrong-typed values surface here as stray
    # TypeError/ValueError during validation; report them as config errors.
    try:
        config = ExperimentConfig(
            env=_build_env(sub("env"), "env"),
            agents=tuple(data.get("agents", defaults.agents)),
            seeds=tuple(int(s) for s in data.get("seeds", defaults.seeds)),
            total_slots=int(data.get("total_slots", defaults.total_slots)),
            episode_slots=int(data.get("episode_slots",
                                       defaults.episode_slots)),
            collection_slot=int(data.get("collection_slot",
                                         defaults.collection_slot)),
            dqn=_build_dqn(sub("dqn"), "dqn"),
            trl=_build_trl(sub("trl"), "trl"),
            mpc=_build_mpc(sub("mpc"), "mpc"),
            sweep=sweep,
        )
        config.validate()
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad configuration value: {exc}") from exc
    return config


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    return config_from_dict(data)
