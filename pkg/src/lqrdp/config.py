"""Experiment configuration: a JSON document validated before any numerics.

Grammar (JSON object; only ``algorithm`` is required)::

    {
      "plant": "example" | "scalar" | {"A": [[..]], "B": [[..]], "Q": [[..]],
                                       "R": [[..]], "gamma": 0.9},
      "algorithm": "qvi" | "qpi" | "vi" | "pi" | "two_phase" | "solve"
                   | "certify" | "paper_example",
      "init": "zero" | "lambda_min_scaled_identity" | "lambda_max_scaled_identity"
              | "indefinite_ones" | "optimal" | "optimal_perturbed" | [[..]],
      "max_iters": 10000,
      "tol": 1e-10,
      "eps": [0.01, 0.05, 0.1],
      "output": "out/run",
      "seed": 0,
      "random_instances": 0,
      "perturbation": 0.1
    }

``plant`` defaults to ``"example"``.  ``init`` is a Q-parameter for
``qvi``/``certify``, a value matrix for ``vi`` and a gain for ``qpi``,
``pi`` and ``two_phase``.  The symbolic initializers derived from the
spectrum of ``P*`` apply to Q-parameters; ``optimal`` and
``optimal_perturbed`` (``F* + perturbation * N(0, 1)`` drawn with
``seed``) apply to gains.  Matrices are row-major nested lists.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import jsonschema
import numpy as np

from .errors import DimensionError
from .model import Plant, example_plant, scalar_plant

__all__ = [
    "ALGORITHMS",
    "SYMBOLIC_INITS",
    "CONFIG_SCHEMA",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
]

ALGORITHMS = ("qvi", "qpi", "vi", "pi", "two_phase", "solve", "certify", "paper_example")
Q_INITS = ("zero", "lambda_min_scaled_identity", "lambda_max_scaled_identity", "indefinite_ones")
GAIN_INITS = ("zero", "optimal", "optimal_perturbed")
SYMBOLIC_INITS = tuple(dict.fromkeys(Q_INITS + GAIN_INITS))

_matrix = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["algorithm"],
    "properties": {
        "plant": {
            "oneOf": [
                {"enum": ["example", "scalar"]},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["A", "B", "Q", "R"],
                    "properties": {
                        "A": _matrix, "B": _matrix, "Q": _matrix, "R": _matrix,
                        "gamma": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    },
                },
            ]
        },
        "algorithm": {"enum": list(ALGORITHMS)},
        "init": {"oneOf": [{"enum": list(SYMBOLIC_INITS)}, _matrix]},
        "max_iters": {"type": "integer", "minimum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "eps": {"type": "array", "minItems": 1,
                "items": {"type": "number", "exclusiveMinimum": 0}},
        "output": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0},
        "random_instances": {"type": "integer", "minimum": 0},
        "perturbation": {"type": "number", "minimum": 0},
    },
}


class ConfigError(ValueError):
    """Schema or dimension violation in an experiment configuration."""


def _rectangular(rows, name):
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ConfigError(f"{name}: rows have unequal lengths")
    return np.array(rows, dtype=float)


@dataclass
class ExperimentConfig:
    algorithm: str
    plant: str | dict = "example"
    init: str | list | None = None
    max_iters: int = 10_000
    tol: float = 1e-10
    eps: list[float] = field(default_factory=lambda: [0.01, 0.05, 0.1])
    output: str = "out/run"
    seed: int = 0
    random_instances: int = 0
    perturbation: float = 0.1

    def build_plant(self) -> Plant:
        if self.plant == "example":
            return example_plant()
        if self.plant == "scalar":
            return scalar_plant()
        spec = self.plant
        mats = {k: _rectangular(spec[k], k) for k in ("A", "B", "Q", "R")}
        try:
            return Plant(mats["A"], mats["B"], mats["Q"], mats["R"], spec.get("gamma", 1.0))
        except DimensionError as exc:
            raise ConfigError(str(exc)) from exc

    def init_matrix(self) -> np.ndarray | None:
        if isinstance(self.init, list):
            return _rectangular(self.init, "init")
        return None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def dumps(self) -> str:
        """Canonical JSON; parsing it back gives an equal config."""
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"


def _check_init(cfg: ExperimentConfig):
    if cfg.init is None or isinstance(cfg.init, list):
        return
    gain_algs = ("qpi", "pi", "two_phase")
    if cfg.algorithm in gain_algs and cfg.init not in GAIN_INITS:
        raise ConfigError(f"init '{cfg.init}' is not a gain initializer")
    if cfg.algorithm in ("qvi", "certify") and cfg.init not in Q_INITS:
        raise ConfigError(f"init '{cfg.init}' is not a Q-parameter initializer")
    if cfg.algorithm == "vi" and cfg.init != "zero":
        raise ConfigError("vi accepts only 'zero' or an explicit matrix")


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate ``doc`` against :data:`CONFIG_SCHEMA` and build the config.

    Raises
    ------
    ConfigError
        On any schema, shape or initializer mismatch.
    """
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    cfg = ExperimentConfig(**doc)
    cfg.eps = [float(e) for e in cfg.eps]
    cfg.tol = float(cfg.tol)
    cfg.perturbation = float(cfg.perturbation)
    if isinstance(cfg.plant, dict):
        cfg.plant = dict(cfg.plant)
        cfg.build_plant()
    cfg.init_matrix()
    _check_init(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(doc)
