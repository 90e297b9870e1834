"""Dissect a single MPC decision.

Warms up the forecasters on live observations, prints the forecasts entering
one slot's rollout, scans candidate powers to show the landscape the search
walks, and compares the bracketed search against a dense reference grid.
"""
import numpy as np

from rfcharge.env import AccessPointEnv, EnvParams
from rfcharge.mpc import (GprForecasters, MpcConfig, MpcPolicy,
                          optimize_power, rollout_values)

params = EnvParams()
config = MpcConfig()
env = AccessPointEnv(params, seed=11)
policy = MpcPolicy(params, config,
                   GprForecasters(params, config, env.device_distances_m))

obs = env.observation()
for _ in range(40):  # warm up the sliding windows
    env.step(policy.act(obs))
    obs = env.observation()

power = policy.act(obs)  # the decision under the microscope
preds = policy.forecasters.predict(obs.slot, config.horizon)

print(f"=== slot {obs.slot}: what the controller sees ===")
print(f"AP battery {obs.battery_mj:.0f} mJ, current user gain "
      f"{obs.user_gain:.5f}")
print("replica device batteries [mJ]:",
      np.round(policy.device_batteries_mj, 3))
print("forecast arrivals    [mJ]:", np.round(preds.arrivals_mj, 1))
print("forecast user gains      :", np.round(preds.user_gains, 5))
print("forecast device gains (slot 0 row):",
      np.round(preds.device_gains[0], 5))

print()
print(f"=== rollout landscape over {config.horizon + 1} virtual slots ===")
scan = np.linspace(0.0, params.ap.max_tx_power_mw, 11)
values = rollout_values(scan, obs.battery_mj, policy.device_batteries_mj,
                        obs.user_gain, preds, params)
for u, v in zip(scan, values):
    bar = "#" * int(round(40 * v))
    print(f"u = {u:>5.0f} mW  value {v:.3f}  {bar}")

best_u, best_v = optimize_power(obs.battery_mj, policy.device_batteries_mj,
                                obs.user_gain, preds, params, config)
dense = np.linspace(0.0, min(params.ap.max_tx_power_mw, obs.battery_mj), 4096)
dense_best = rollout_values(dense, obs.battery_mj,
                            policy.device_batteries_mj, obs.user_gain,
                            preds, params).max()
print()
print(f"bracketed search picks {best_u:.2f} mW with value {best_v:.3f} "
      f"(4096-point grid best: {dense_best:.3f})")
print("ties resolve toward less power: the search returns the cheapest "
      "power attaining the best predicted index")

outcome = env.step(power)
print()
print(f"executed {outcome.power_mw:.2f} mW -> rate "
      f"{outcome.user_rate_bps / 1e6:.0f} Mb/s (satisfied: "
      f"{outcome.user_satisfied}), {outcome.n_activated}/"
      f"{params.devices.count} devices activated")
