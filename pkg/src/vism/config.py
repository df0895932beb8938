"""Run configuration: defaults, the flat key-value config file, validation.

The config format is a TOML-compatible subset: one ``key = value`` pair per
line, ``#`` comments, values being numbers, booleans, quoted strings or flat
arrays of numbers.  Every key mirrors a parameter name used by the solver
modules; unknown keys are rejected before any solve starts.
"""

import os
from dataclasses import dataclass, field as dataclass_field

from . import constants
from .coupling import CouplingConfig
from .errors import ConfigError, InputError
from .evolution import EvolutionConfig
from .fitting import FitConfig
from .io import read_lj_table
from .physics import IonSpecies, PhysicalParams, default_lj_params

DEFAULTS = {
    # files and geometry
    "molecule": "",
    "out": ".",
    "lj_table": "",
    "h": 0.5,
    "pad": constants.DEFAULT_PAD,
    "probe_radius": constants.DEFAULT_PROBE_RADIUS,
    # physical parameters
    "gamma": constants.DEFAULT_GAMMA,
    "p_h": constants.DEFAULT_PRESSURE,
    "rho_s": constants.DEFAULT_RHO_S,
    "eps_m": constants.DEFAULT_EPS_M,
    "eps_s": constants.DEFAULT_EPS_S,
    "n_exponent": constants.DEFAULT_N_EXPONENT,
    "q_k": constants.DEFAULT_Q_EXPONENT,
    "k_e": constants.COULOMB_K,
    "beta": constants.BETA_ROOM,
    "ion_conc_molar": [],
    "ion_charges": [],
    # PB solver
    "pb_tol": 1e-6,
    "pb_max_iter": 20000,
    "newton_max_outer": 50,
    "newton_tol": 1e-8,
    # surface evolution
    "dt_factor": 0.1,
    "grad_floor": 1e-10,
    "steps_per_coupling": 50,
    "max_total_steps": 5000,
    "convergence_tol": 1e-6,
    "init_mode": "ramp",
    # coupling
    "alpha": 0.5,
    "alpha_prime": 0.5,
    "outer_tol": 1e-5,
    "max_outer": 200,
    "warm_start_nonpolar": True,
    # fitting
    "param_tol": 1e-3,
    "max_fit_iters": 30,
    "nonpolar": False,
    # output and execution
    "dump_fields": False,
    "csv": False,
    "threads": 0,  # 0 = VISM_THREADS env or all cores
    "deterministic": True,
    # validation commands
    "born_radius": 2.0,
    "born_charge": 1.0,
    "h_list": [1.0, 0.5, 0.25],
    "q_list": [1.01, 1.001, 1.0001, 1.00001, 1.000001],
    "n_list": [5, 10, 20, 40],
}


def _parse_value(text, path, lineno):
    text = text.strip()
    if text.startswith('"'):
        end = text.find('"', 1)
        if end < 0:
            raise InputError(f"{path}:{lineno}: unterminated string")
        return text[1:end]
    if "#" in text:
        text = text.split("#", 1)[0].strip()
    if text in ("true", "false"):
        return text == "true"
    if text.startswith("["):
        if not text.endswith("]"):
            raise InputError(f"{path}:{lineno}: unterminated array")
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(tok.strip(), path, lineno) for tok in inner.split(",")]
    return _parse_scalar(text, path, lineno)


def _parse_scalar(tok, path, lineno):
    try:
        if any(c in tok for c in ".eE") and not tok.lstrip("+-").isdigit():
            return float(tok)
        return int(tok)
    except ValueError:
        raise InputError(f"{path}:{lineno}: cannot parse value '{tok}'") from None


def parse_config_file(path):
    """Read one config file into a dict; unknown keys are errors."""
    out = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            key = key.strip()
            if key not in DEFAULTS:
                raise InputError(
                    f"{path}:{lineno}: unknown config key '{key}'"
                )
            out[key] = _parse_value(value, path, lineno)
    return out


def _coerce(key, value):
    default = DEFAULTS[key]
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"config key '{key}' must be a boolean")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or (isinstance(value, float) and value != int(value)):
            raise ConfigError(f"config key '{key}' must be an integer")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key '{key}' must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"config key '{key}' must be a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"config key '{key}' must be an array")
        return [float(v) for v in value]
    raise ConfigError(f"unhandled config key type for '{key}'")


@dataclass
class RunConfig:
    """Validated, merged configuration for one CLI invocation."""

    settings: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        merged = dict(DEFAULTS)
        for key, value in self.settings.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key '{key}'")
            merged[key] = _coerce(key, value)
        self.settings = merged
        # Fail fast on range errors before any solve starts.
        self.build_params()
        self.build_evolution()
        self.build_coupling()

    def __getitem__(self, key):
        return self.settings[key]

    def build_lj(self):
        if self["lj_table"]:
            return read_lj_table(self["lj_table"])
        return default_lj_params()

    def build_ions(self):
        molar = self["ion_conc_molar"]
        charges = self["ion_charges"]
        if not molar and not charges:
            return None
        if len(molar) != len(charges):
            raise ConfigError("ion_conc_molar and ion_charges must have equal length")
        return IonSpecies.from_molar(molar, charges, beta=self["beta"])

    def build_params(self):
        return PhysicalParams(
            gamma=self["gamma"],
            p_h=self["p_h"],
            rho_s=self["rho_s"],
            eps_m=self["eps_m"],
            eps_s=self["eps_s"],
            n_exponent=self["n_exponent"],
            q_k=self["q_k"],
            ions=self.build_ions(),
            lj=self.build_lj(),
            k_e=self["k_e"],
            beta=self["beta"],
            pb_tol=self["pb_tol"],
            pb_max_iter=self["pb_max_iter"],
            newton_max_outer=self["newton_max_outer"],
            newton_tol=self["newton_tol"],
        )

    def build_evolution(self):
        return EvolutionConfig(
            dt_factor=self["dt_factor"],
            grad_floor=self["grad_floor"],
            steps_per_coupling=self["steps_per_coupling"],
            max_total_steps=self["max_total_steps"],
            convergence_tol=self["convergence_tol"],
            init_mode=self["init_mode"],
        )

    def build_coupling(self):
        return CouplingConfig(
            alpha=self["alpha"],
            alpha_prime=self["alpha_prime"],
            outer_tol=self["outer_tol"],
            max_outer=self["max_outer"],
            warm_start_nonpolar=self["warm_start_nonpolar"],
        )

    def build_fit(self):
        return FitConfig(
            param_tol=self["param_tol"],
            max_fit_iters=self["max_fit_iters"],
            h=self["h"],
            pad=self["pad"],
            probe_radius=self["probe_radius"],
            coupling=self.build_coupling(),
            evolution=self.build_evolution(),
            threads=self.threads(),
        )

    def threads(self):
        if self["threads"] > 0:
            return self["threads"]
        env = os.environ.get("VISM_THREADS", "")
        if env.isdigit() and int(env) > 0:
            return int(env)
        return os.cpu_count() or 1

    def effective_text(self):
        """Serialised form of the merged settings (config round-trips)."""
        lines = []
        for key in sorted(self.settings):
            value = self.settings[key]
            if isinstance(value, bool):
                lines.append(f"{key} = {'true' if value else 'false'}")
            elif isinstance(value, str):
                lines.append(f'{key} = "{value}"')
            elif isinstance(value, list):
                body = ", ".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in value)
                lines.append(f"{key} = [{body}]")
            elif isinstance(value, float):
                lines.append(f"{key} = {value:.17g}")
            else:
                lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def load_run_config(config_path=None, overrides=None):
    settings = {}
    if config_path:
        settings.update(parse_config_file(config_path))
    if overrides:
        settings.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(settings)
