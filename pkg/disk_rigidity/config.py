"""
INI configuration of an experiment run. See README.md for the schema.
"""
import configparser
from dataclasses import dataclass, field, fields

from disk_rigidity.errors import ConfigError
from disk_rigidity.geometry.families import FAMILIES

EXPERIMENTS = ("curvature", "moebius", "schwarzian", "raytransform", "kernel", "decompose", "variation", "pipeline",
               "volume")
SAMPLED = ("moebius", "schwarzian", "raytransform", "kernel", "variation", "pipeline", "volume")

DEFAULT_TOLERANCES = {
    "moebius": 1e-5,
    "schwarzian": 1e-6,
    "method_agreement": 1e-3,
    "variation": 1e-3,
    "distance_variation": 1e-4,
    "order": 1.8,
    "kernel": 1e-6,
    "ray_slack": 1e-4,
    "pipeline_factor": 10.0,
    "curvature_margin": 0.0,
    "volume": 1e-10,
}


@dataclass
class ExperimentConfig:
    experiment: str = "curvature"
    family: str = "conformal"
    amplitude: float = 0.05
    support_radius: float = 0.5
    twist: float = 0.6
    cdrm_radius: float = 0.7
    seed: int = None
    pairs: int = 5
    quadruples: int = 20
    point_pairs: int = 10
    rays: int = 50
    fields: int = 3
    t_values: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    n_radial: int = 32
    n_angular: int = 64
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out: str = "results"

    def tolerance(self, key):
        return self.tolerances[key]

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment.name", f"unknown experiment '{self.experiment}', expected one of {EXPERIMENTS}")
        if self.family not in FAMILIES:
            raise ConfigError("deformation.family", f"unknown family '{self.family}', expected one of {FAMILIES}")
        if not 0.0 < self.support_radius < self.cdrm_radius < 1.0:
            raise ConfigError("deformation.cdrm_radius", "need 0 < support_radius < cdrm_radius < 1")
        if self.experiment in SAMPLED and self.seed is None:
            raise ConfigError("samplers.seed", f"experiment '{self.experiment}' samples and needs a seed")
        for key, value in self.tolerances.items():
            if not value > 0.0:
                raise ConfigError(f"tolerances.{key}", f"must be positive, got {value}")
        if self.n_angular % 4 or self.n_radial < 3:
            raise ConfigError("samplers.n_angular", "n_angular must be divisible by 4 and n_radial at least 3")
        return self


# section -> key -> (attribute, parser)
_SCHEMA = {
    "experiment": {"name": ("experiment", str)},
    "deformation": {
        "family": ("family", str),
        "amplitude": ("amplitude", float),
        "support_radius": ("support_radius", float),
        "twist": ("twist", float),
        "cdrm_radius": ("cdrm_radius", float),
    },
    "samplers": {
        "seed": ("seed", int),
        "pairs": ("pairs", int),
        "quadruples": ("quadruples", int),
        "point_pairs": ("point_pairs", int),
        "rays": ("rays", int),
        "fields": ("fields", int),
        "t_values": ("t_values", lambda s: tuple(float(v) for v in s.replace(",", " ").split())),
        "n_radial": ("n_radial", int),
        "n_angular": ("n_angular", int),
    },
    "output": {"directory": ("out", str)},
}


def load_config(path=None, experiment=None, seed=None, out=None):
    """
    Reads an INI file (optional) and applies the command-line overrides, which win over file values.
    """
    config = ExperimentConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        with open(path) as f:
            parser.read_file(f)
        for section in parser.sections():
            if section == "tolerances":
                for key, raw in parser.items(section):
                    if key not in DEFAULT_TOLERANCES:
                        raise ConfigError(f"tolerances.{key}", "unknown tolerance")
                    config.tolerances[key] = _parse(section, key, float, raw)
                continue
            if section not in _SCHEMA:
                raise ConfigError(section, "unknown section")
            for key, raw in parser.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"{section}.{key}", "unknown key")
                attribute, parse = _SCHEMA[section][key]
                setattr(config, attribute, _parse(section, key, parse, raw))
    for attribute, value in (("experiment", experiment), ("seed", seed), ("out", out)):
        if value is not None:
            setattr(config, attribute, value)
    return config.validate()


def _parse(section, key, parse, raw):
    try:
        return parse(raw)
    except ValueError as e:
        raise ConfigError(f"{section}.{key}", f"cannot parse '{raw}': {e}") from e


def describe(config):
    return {f.name: getattr(config, f.name) for f in fields(config) if f.name != "tolerances"}
