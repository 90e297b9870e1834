"""Simulator and transmit-power controllers for a solar-powered WiFi access
point that wirelessly charges RF-energy-harvesting IoT devices while serving
legacy data users."""

from .env import (AccessPointEnv, ApParams, ChannelModel, ConfigError,
                  DeviceParams, EnvParams, HarvesterCurve, Observation,
                  SlotOutcome, SolarModel, UserParams,
                  default_harvester_curve, default_solar_model)
from .agents import (DqnConfig, DqnPolicy, ExplorationSchedule, GreedyPolicy,
                     NoPolicy, RandomPolicy, TabularConfig, TabularPolicy)
from .gpr import GprHyperparams, GprModel
from .mpc import GprForecasters, MpcConfig, MpcPolicy, OracleForecasters
from .config import (ExperimentConfig, SweepSpec, apply_sweep_value,
                     config_from_dict, load_config)
from .harness import (run_experiment, run_policy, run_sweep, summarize,
                      write_episodes_csv, write_summary_csv, write_sweep_csv)

__version__ = "0.1.0"
