"""Experiment configuration: flat key-value files with sections.

A config has three sections: [hamiltonian], [experiment] (with a `type` key
naming one of the seven experiments), and an optional [run] section carrying
the master seed and output directory.  Every key is validated against the
schema for its experiment type before any computation; unknown sections or
keys are rejected.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .operators import HamiltonianSpec

EXPERIMENT_TYPES = ("spectrum", "levels", "evolve", "eth", "thermal",
                    "chargespread", "sweep")

DEFAULT_QUANTILES = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# field coercion
# ---------------------------------------------------------------------------

def _to_bool(raw):
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def _to_floats(raw):
    items = [p for p in raw.replace(",", " ").split() if p]
    return [float(p) for p in items]


def _to_ints(raw):
    return [int(p) for p in raw.replace(",", " ").split() if p]


_COERCERS = {
    "str": lambda raw: raw.strip(),
    "int": lambda raw: int(raw),
    "float": lambda raw: float(raw),
    "bool": _to_bool,
    "floats": _to_floats,
    "ints": _to_ints,
}


@dataclass
class Field:
    kind: str
    default: object = None
    required: bool = False
    choices: tuple = ()


def _apply_schema(section_name, raw: dict, schema: dict) -> dict:
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section_name}]: "
                          f"{', '.join(sorted(unknown))}")
    out = {}
    for key, spec in schema.items():
        if key in raw:
            try:
                value = _COERCERS[spec.kind](raw[key])
            except ConfigError:
                raise
            except Exception as err:
                raise ConfigError(f"[{section_name}] {key}: {err}") from None
        elif spec.required:
            raise ConfigError(f"[{section_name}] missing required key {key!r}")
        else:
            value = spec.default
        if spec.choices and value not in spec.choices:
            raise ConfigError(f"[{section_name}] {key} must be one of "
                              f"{spec.choices}, got {value!r}")
        out[key] = value
    return out


# ---------------------------------------------------------------------------
# schemas
# ---------------------------------------------------------------------------

HAMILTONIAN_SCHEMA = {
    "kind": Field("str", required=True, choices=("qubit", "qutrit")),
    "L": Field("int", required=True),
    "J": Field("float", 1.0),
    "h_x": Field("float", 1.05),
    "h_z": Field("float", 0.5),
    "h1": Field("float", 1.05),
    "h2": Field("float", 0.0),
    "h3": Field("float", 0.5),
    "a": Field("float", 1.0),
    "spread_mean": Field("float", 1.0),
    "spread_width": Field("float", 0.1),
    "seed": Field("int", 0),
    "normalize_by_L": Field("bool", True),
}

RUN_SCHEMA = {
    "master_seed": Field("int", 0),
    "output_dir": Field("str", "out"),
}

_UNFOLD_KEYS = {
    "unfold_degree": Field("int", 10),
    "unfold_trim": Field("float", 0.025),
    "bins": Field("int", 40),
    "s_max": Field("float", 4.0),
    "surmise_beta": Field("int", 1, choices=(1, 2, 4)),
}

EXPERIMENT_SCHEMAS = {
    "spectrum": {
        "sectors": Field("str", "auto", choices=("auto", "none", "parity", "charge")),
        "export_matrix": Field("bool", False),
    },
    "levels": {
        "sectors": Field("str", "auto", choices=("auto", "none", "parity", "charge")),
        "include_full": Field("bool", False),
        **_UNFOLD_KEYS,
    },
    "evolve": {
        "observable": Field("str", "entropy:1"),
        "n_states": Field("int", 100),
        "f": Field("float", 0.0),
        "target_energies": Field("floats", []),
        "target_tol": Field("float", 0.002),
        "max_attempts": Field("int", 2_000_000),
        "t_max": Field("float", 100.0),
        "dt": Field("float", 0.25),
        "quantiles": Field("floats", _to_floats(DEFAULT_QUANTILES)),
        "thermal_prediction": Field("bool", True),
    },
    "eth": {
        "sizes": Field("ints", [4, 5, 6, 7, 8, 9, 10]),
        "n_random_ops": Field("int", 50),
        "ratio_observable": Field("str", "sx(1)"),
        "scatter_L": Field("int", 0),
        "scatter_observable": Field("str", "sx(1)"),
        "scatter_site": Field("int", 1),
        "thermal_curve_points": Field("int", 0),
    },
    "thermal": {
        "mode": Field("str", "targets", choices=("targets", "surface")),
        "targets_e": Field("floats", []),
        "targets_q": Field("floats", []),
        "observables": Field("str", ""),
        "site": Field("int", 1),
        "beta_grid": Field("str", "-5:5:21"),
        "mu_grid": Field("str", "-2:2:21"),
    },
    "chargespread": {
        "initial": Field("str", "single"),
        "t_max": Field("float", 100.0),
        "dt": Field("float", 0.25),
        "late_fraction": Field("float", 0.5),
    },
    "sweep": {
        "mode": Field("str", required=True,
                      choices=("coefficient_grid", "system_size", "energy_grid",
                               "charge_grid")),
    },
}

SWEEP_MODE_SCHEMAS = {
    "coefficient_grid": {
        "variants": Field("str", required=True),
        "n_states": Field("int", 150),
        "t_max": Field("float", 50.0),
        "dt": Field("float", 0.25),
        "quantiles": Field("floats", _to_floats(DEFAULT_QUANTILES)),
        "site": Field("int", 1),
        **_UNFOLD_KEYS,
    },
    "system_size": {
        "sizes": Field("ints", required=True),
        "target_energies": Field("floats", required=True),
        "n_states": Field("int", 100),
        "target_tol": Field("float", 0.002),
        "t_max": Field("float", 1000.0),
        "dt": Field("float", 0.5),
        "late_fraction": Field("float", 0.5),
        "site": Field("int", 1),
        "reference_L": Field("int", 0),
        "reference_points": Field("int", 33),
    },
    "energy_grid": {
        "e_min": Field("float", required=True),
        "e_max": Field("float", required=True),
        "e_step": Field("float", required=True),
        "n_per_point": Field("int", 1),
        "observable": Field("str", "sx(1)"),
        "site": Field("int", 1),
        "target_tol": Field("float", 0.002),
        "t_late": Field("float", 1000.0),
        "late_window": Field("float", 500.0),
        "late_samples": Field("int", 101),
        "micro_half_width": Field("float", 0.1),
        "curve_points": Field("int", 81),
    },
    "charge_grid": {
        "f_values": Field("floats", required=True),
        "n_states": Field("int", 50),
        "observable": Field("str", ""),
        "site": Field("int", 1),
        "t_max": Field("float", 100.0),
        "dt": Field("float", 0.25),
        "growth_curves": Field("bool", False),
        "gge_prediction": Field("bool", True),
        "scatter_sectors": Field("ints", []),
    },
}


@dataclass
class ExperimentConfig:
    hamiltonian: HamiltonianSpec
    experiment: str
    params: dict
    master_seed: int = 0
    output_dir: Path = Path("out")

    def to_dict(self) -> dict:
        return {
            "hamiltonian": self.hamiltonian.to_dict(),
            "experiment": self.experiment,
            "params": {k: v for k, v in self.params.items()},
            "master_seed": self.master_seed,
            "output_dir": str(self.output_dir),
        }


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(delimiters=("=",), strict=True,
                                       interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"config parse error: {err}") from None
    sections = set(parser.sections())
    unknown = sections - {"hamiltonian", "experiment", "run"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    if "hamiltonian" not in sections:
        raise ConfigError("missing [hamiltonian] section")
    if "experiment" not in sections:
        raise ConfigError("missing [experiment] section")

    ham_kwargs = _apply_schema("hamiltonian", dict(parser["hamiltonian"]),
                               HAMILTONIAN_SCHEMA)
    try:
        ham = HamiltonianSpec(**ham_kwargs)
    except ValueError as err:
        raise ConfigError(f"[hamiltonian] {err}") from None

    exp_raw = dict(parser["experiment"])
    exp_type = exp_raw.pop("type", None)
    if exp_type is None:
        raise ConfigError("[experiment] missing required key 'type'")
    exp_type = exp_type.strip()
    if exp_type not in EXPERIMENT_TYPES:
        raise ConfigError(f"unknown experiment type {exp_type!r}; "
                          f"choose from {EXPERIMENT_TYPES}")
    if exp_type == "sweep":
        mode = exp_raw.get("mode", "").strip()
        if mode not in SWEEP_MODE_SCHEMAS:
            raise ConfigError(f"[experiment] sweep mode must be one of "
                              f"{tuple(SWEEP_MODE_SCHEMAS)}, got {mode!r}")
        schema = {**EXPERIMENT_SCHEMAS["sweep"], **SWEEP_MODE_SCHEMAS[mode]}
    else:
        schema = EXPERIMENT_SCHEMAS[exp_type]
    params = _apply_schema("experiment", exp_raw, schema)

    run_kwargs = _apply_schema("run", dict(parser["run"]) if "run" in sections else {},
                               RUN_SCHEMA)
    return ExperimentConfig(ham, exp_type, params,
                            master_seed=run_kwargs["master_seed"],
                            output_dir=Path(run_kwargs["output_dir"]))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return parse_config(text)


def parse_grid(raw: str, name: str):
    """Parse 'start:stop:num' into a numpy linspace."""
    import numpy as np
    parts = raw.split(":")
    if len(parts) != 3:
        raise ConfigError(f"{name} must look like 'start:stop:num', got {raw!r}")
    try:
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"{name}: bad grid {raw!r}") from None
    if num < 2:
        raise ConfigError(f"{name}: grid needs at least 2 points")
    return np.linspace(start, stop, num)
