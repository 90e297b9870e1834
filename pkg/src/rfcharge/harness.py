"""Experiment harness: seeded runs of each policy on a shared environment
stream, tumbling-episode metrics, CSV emission, and parameter sweeps.

Within one seed every policy sees identical solar, channel, geometry, and
user-selection randomness (policy-side randomness is a separate stream), so
cross-policy differences are not buried in environment noise. Results are
deterministic functions of (config, seed), independent of worker count.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .agents import (DqnPolicy, GreedyPolicy, NoPolicy, RandomPolicy,
                     TabularPolicy)
from .config import AGENT_NAMES, ExperimentConfig, apply_sweep_value
from .env import AccessPointEnv
from .mpc import GprForecasters, MpcPolicy

METRIC_NAMES = ("activated_devices", "satisfied_fraction",
                "energy_efficiency", "reward")

EPISODE_CSV_HEADER = ("episode_index", "agent", "seed", "activated_devices",
                      "satisfied_fraction", "energy_efficiency", "reward")

SWEEP_CSV_HEADER = ("axis_value", "agent", "seed", "metric", "value")


@dataclass
class EpisodeRow:
    """Metrics of one tumbling episode of one run."""

    episode_index: int
    agent: str
    seed: int
    activated_devices: float     # mean n_t
    satisfied_fraction: float    # mean J_t
    energy_efficiency: float     # mean eta_t (1/W)
    reward: float                # mean I_t * J_t

    def metric(self, name: str) -> float:
        return getattr(self, name)


def make_agent(name: str, config: ExperimentConfig, env: AccessPointEnv,
               seed: int):
    """Build one policy; learning/exploration randomness is keyed by
    (seed, agent) so swapping agents never perturbs the environment draws."""
    agent_root = np.random.SeedSequence([seed, AGENT_NAMES.index(name)])
    init_ss, explore_ss = agent_root.spawn(2)
    init_rng = np.random.Generator(np.random.PCG64(init_ss))
    explore_rng = np.random.Generator(np.random.PCG64(explore_ss))
    params = config.env
    if name == "dqn":
        return DqnPolicy(params, config.dqn, init_rng, explore_rng)
    if name == "trl":
        return TabularPolicy(params, config.trl, explore_rng)
    if name == "mpc":
        forecasters = GprForecasters(params, config.mpc, env.device_distances_m)
        return MpcPolicy(params, config.mpc, forecasters)
    if name == "greedy":
        return GreedyPolicy(params)
    if name == "random":
        return RandomPolicy(params, explore_rng)
    if name == "nopolicy":
        return NoPolicy(params)
    raise ValueError(f"unknown agent {name!r}")


def run_policy(config: ExperimentConfig, agent_name: str,
               seed: int) -> list[EpisodeRow]:
    """Run one (agent, seed) pair for the configured horizon."""
    env = AccessPointEnv(config.env, np.random.SeedSequence(seed))
    agent = make_agent(agent_name, config, env, seed)
    episode = config.episode_slots
    rows = []
    sums = np.zeros(4)  # n, J, eta, I*J
    obs = env.observation()
    for t in range(config.total_slots):
        power = agent.act(obs)
        outcome = env.step(power)
        next_obs = env.observation()
        agent.observe(obs, outcome.power_mw, outcome, next_obs)
        obs = next_obs
        sums[0] += outcome.n_activated
        sums[1] += outcome.user_satisfied
        sums[2] += outcome.efficiency_per_w
        sums[3] += outcome.all_activated and outcome.user_satisfied
        if (t + 1) % episode == 0:
            means = sums / episode
            if not np.all(np.isfinite(means)):
                raise RuntimeError(
                    f"non-finite episode metrics for agent={agent_name} "
                    f"seed={seed} episode={t // episode}: {means}")
            rows.append(EpisodeRow(t // episode, agent_name, seed,
                                   *means.tolist()))
            sums[:] = 0.0
    return rows


def _run_task(args):
    config, agent_name, seed, axis_value = args
    return [(axis_value, row) for row in run_policy(config, agent_name, seed)]


def _execute(tasks, workers: int):
    """Run tasks preserving submission order regardless of worker count."""
    if workers <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks))


def run_experiment(config: ExperimentConfig, workers: int = 1) -> list[EpisodeRow]:
    """All (agent, seed) runs of a single-point experiment."""
    config.validate()
    tasks = [(config, agent, seed, None)
             for agent in config.agents for seed in config.seeds]
    rows = []
    for result in _execute(tasks, workers):
        rows.extend(row for _, row in result)
    return rows


def run_sweep(config: ExperimentConfig, workers: int = 1):
    """One run per (axis value, agent, seed); returns long-format records
    (axis_value, agent, seed, metric, post-collection mean)."""
    config.validate()
    if config.sweep is None:
        raise ValueError("configuration has no sweep section")
    axis = config.sweep.axis
    tasks = []
    for value in config.sweep.values:
        derived = apply_sweep_value(config, axis, value)
        for agent in config.agents:
            for seed in config.seeds:
                tasks.append((derived, agent, seed, value))
    records = []
    first_kept = config.collection_slot // config.episode_slots
    for (_, agent, seed, value), result in zip(tasks, _execute(tasks, workers)):
        episodes = [row for _, row in result if row.episode_index >= first_kept]
        for metric in METRIC_NAMES:
            mean = (math.nan if not episodes else
                    float(np.mean([e.metric(metric) for e in episodes])))
            records.append((value, agent, seed, metric, mean))
    return records


# ---------------------------------------------------------------------------
# summaries and CSV emission
# ---------------------------------------------------------------------------

def post_collection(rows: list[EpisodeRow],
                    config: ExperimentConfig) -> list[EpisodeRow]:
    first_kept = config.collection_slot // config.episode_slots
    return [r for r in rows if r.episode_index >= first_kept]


def summarize(rows: list[EpisodeRow], config: ExperimentConfig):
    """Per-agent post-collection means and standard errors across seeds."""
    kept = post_collection(rows, config)
    out = []
    for agent in config.agents:
        for metric in METRIC_NAMES:
            per_seed = []
            for seed in config.seeds:
                vals = [r.metric(metric) for r in kept
                        if r.agent == agent and r.seed == seed]
                if vals:
                    per_seed.append(float(np.mean(vals)))
            if not per_seed:
                continue
            mean = float(np.mean(per_seed))
            stderr = (float(np.std(per_seed, ddof=1) / np.sqrt(len(per_seed)))
                      if len(per_seed) > 1 else 0.0)
            out.append((agent, metric, mean, stderr))
    return out


def format_summary_table(summary) -> str:
    lines = [f"{'agent':<10}" + "".join(f"{m:>22}" for m in METRIC_NAMES)]
    agents = []
    for agent, _, _, _ in summary:
        if agent not in agents:
            agents.append(agent)
    by_key = {(a, m): (mean, se) for a, m, mean, se in summary}
    for agent in agents:
        cells = []
        for metric in METRIC_NAMES:
            mean, se = by_key[(agent, metric)]
            cells.append(f"{mean:>13.4f} ±{se:<7.4f}")
        lines.append(f"{agent:<10}" + "".join(f"{c:>22}" for c in cells))
    return "\n".join(lines)


def _fmt(value) -> str:
    """Shortest round-trip decimal form; deterministic across runs."""
    return repr(float(value))


def write_episodes_csv(path, rows: list[EpisodeRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EPISODE_CSV_HEADER)
        for r in rows:
            writer.writerow([r.episode_index, r.agent, r.seed,
                             _fmt(r.activated_devices),
                             _fmt(r.satisfied_fraction),
                             _fmt(r.energy_efficiency),
                             _fmt(r.reward)])


def write_summary_csv(path, summary) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("agent", "metric", "mean", "stderr"))
        for agent, metric, mean, stderr in summary:
            writer.writerow([agent, metric, _fmt(mean), _fmt(stderr)])


def write_sweep_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_CSV_HEADER)
        for value, agent, seed, metric, mean in records:
            writer.writerow([_fmt(value), agent, seed, metric, _fmt(mean)])
