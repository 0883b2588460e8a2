"""Run configuration: YAML documents, defaults, presets, CLI overrides.

The canonical config format is a YAML mapping (JSON, being a YAML subset,
also parses); the schema is documented in schemas/config.schema.json.
Unknown keys are rejected and every validation error names the offending
field path.  Command-line flags override file values.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import yaml


from .engine import (
    DESK_SCHEDULE,
    SCHEDULE_PRESETS,
    StepSchedule,
    default_sample_stride,
)
from .errors import ConfigError
from .events import DetectorConfig, default_tau
from .spin import ModelParams, SpinState


class _ConfigLoader(yaml.SafeLoader):
    """SafeLoader with YAML-1.2-style float recognition (accepts 1e-05),
    so the JSON config echo embedded in outputs replays unchanged."""


_ConfigLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:
         [-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |[-+]?\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)

EXPERIMENTS = ("trajectory", "ensemble", "sweep", "validate", "analytic")

DEFAULT_OMEGA = 1.0
DEFAULT_GAMMA = 5.0
DEFAULT_HORIZON = 2.0 * math.pi
DEFAULT_N = 10_000
DEFAULT_SEED = 20040723
DEFAULT_GAMMAS = (5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 100.0)

# Baseline initial state: populations 3/4 (up) and 1/4 (down), real amplitudes.
DEFAULT_INIT = SpinState(math.sqrt(0.75), math.sqrt(0.25))

# Trial count bundled with the "paper" schedule preset.
PAPER_PRESET_N = 100_000


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration for one CLI invocation."""

    experiment: str
    omega: float = DEFAULT_OMEGA
    gamma: float = DEFAULT_GAMMA
    gammas: tuple[float, ...] = DEFAULT_GAMMAS
    init: SpinState = DEFAULT_INIT
    n_trajectories: int = DEFAULT_N
    master_seed: int = DEFAULT_SEED
    horizon: float = DEFAULT_HORIZON
    preset: str = "desk"
    schedule: StepSchedule = DESK_SCHEDULE
    sample_stride: int | None = None
    detector: DetectorConfig = DetectorConfig()
    stream_index: int = 0
    workers: int | None = None
    out_dir: str = "out"
    emit_csv: bool = True
    emit_json: bool = True
    emit_svg: bool = False

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.omega, self.gamma)

    @property
    def stride(self) -> int:
        if self.sample_stride is not None:
            return self.sample_stride
        return default_sample_stride(self.schedule)

    def to_json_dict(self) -> dict:
        """Simulation-relevant resolved config (the reproducibility contract).

        Output location and worker count are excluded: neither affects any
        numeric result.
        """
        return {
            "experiment": self.experiment,
            "omega": self.omega,
            "gamma": self.gamma,
            "gammas": list(self.gammas),
            "init": {
                "alpha": [self.init.alpha.real, self.init.alpha.imag],
                "beta": [self.init.beta.real, self.init.beta.imag],
            },
            "n_trajectories": self.n_trajectories,
            "master_seed": self.master_seed,
            "horizon": self.horizon,
            "schedule": {
                "fine_dt": self.schedule.fine_dt,
                "switch_time": self.schedule.switch_time,
                "coarse_dt": self.schedule.coarse_dt,
            },
            "sample_stride": self.stride,
            "detector": {"epsilon": self.detector.epsilon, "tau": self.detector.tau},
            "stream_index": self.stream_index,
        }


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(f"{path}: {message}")


def _as_number(value, path: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             path, f"expected a number, got {value!r}")
    v = float(value)
    _require(math.isfinite(v), path, "must be finite")
    return v


def _as_int(value, path: str) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool),
             path, f"expected an integer, got {value!r}")
    return value


def _as_bool(value, path: str) -> bool:
    _require(isinstance(value, bool), path, f"expected a boolean, got {value!r}")
    return value


def _check_keys(mapping: dict, allowed, path: str):
    unknown = set(mapping) - set(allowed)
    if unknown:
        where = f"{path}." if path else ""
        names = ", ".join(sorted(f"{where}{k}" for k in unknown))
        raise ConfigError(f"unknown key(s): {names}")


def _parse_amplitude(value, path: str) -> complex:
    _require(
        isinstance(value, (list, tuple)) and len(value) == 2,
        path, "expected [re, im]",
    )
    return complex(_as_number(value[0], f"{path}[0]"), _as_number(value[1], f"{path}[1]"))


def _parse_init(doc, path: str) -> SpinState:
    _require(isinstance(doc, dict), path, "expected a mapping with alpha and beta")
    _check_keys(doc, ("alpha", "beta"), path)
    _require("alpha" in doc and "beta" in doc, path, "needs both alpha and beta")
    a = _parse_amplitude(doc["alpha"], f"{path}.alpha")
    b = _parse_amplitude(doc["beta"], f"{path}.beta")
    try:
        return SpinState(a, b)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_schedule(doc, path: str, preset: str) -> tuple[str, StepSchedule]:
    if doc is None:
        return preset, SCHEDULE_PRESETS[preset]
    _require(isinstance(doc, dict), path, "expected a mapping")
    _check_keys(doc, ("preset", "fine_dt", "switch_time", "coarse_dt"), path)
    if "preset" in doc:
        name = doc["preset"]
        _require(name in SCHEDULE_PRESETS, f"{path}.preset",
                 f"must be one of {sorted(SCHEDULE_PRESETS)}, got {name!r}")
        _require(len(doc) == 1, path, "preset cannot be combined with explicit steps")
        return name, SCHEDULE_PRESETS[name]
    _require(
        {"fine_dt", "switch_time", "coarse_dt"} <= set(doc),
        path, "explicit schedule needs fine_dt, switch_time and coarse_dt",
    )
    try:
        sched = StepSchedule(
            fine_dt=_as_number(doc["fine_dt"], f"{path}.fine_dt"),
            switch_time=_as_number(doc["switch_time"], f"{path}.switch_time"),
            coarse_dt=_as_number(doc["coarse_dt"], f"{path}.coarse_dt"),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return "custom", sched


def _parse_detector(doc, path: str) -> DetectorConfig:
    if doc is None:
        return DetectorConfig()
    _require(isinstance(doc, dict), path, "expected a mapping")
    _check_keys(doc, ("epsilon", "tau"), path)
    eps = _as_number(doc.get("epsilon", 0.01), f"{path}.epsilon")
    _require(0.0 < eps < 0.5, f"{path}.epsilon", f"must lie in (0, 1/2), got {eps}")
    tau = _as_number(doc["tau"], f"{path}.tau") if "tau" in doc else default_tau(eps)
    _require(tau > 0, f"{path}.tau", f"must be positive, got {tau}")
    return DetectorConfig(epsilon=eps, tau=tau)


def _parse_output(doc, path: str) -> dict:
    if doc is None:
        return {}
    _require(isinstance(doc, dict), path, "expected a mapping")
    _check_keys(doc, ("directory", "csv", "json", "svg"), path)
    res = {}
    if "directory" in doc:
        _require(isinstance(doc["directory"], str), f"{path}.directory", "expected a string")
        res["out_dir"] = doc["directory"]
    for key, attr in (("csv", "emit_csv"), ("json", "emit_json"), ("svg", "emit_svg")):
        if key in doc:
            res[attr] = _as_bool(doc[key], f"{path}.{key}")
    return res


_TOP_KEYS = (
    "experiment", "omega", "gamma", "gammas", "init", "n_trajectories",
    "master_seed", "horizon", "schedule", "sample_stride", "detector",
    "stream_index", "workers", "output",
)


def parse_config(text: str, experiment: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Parse and validate a YAML config document into a RunConfig.

    experiment comes from the CLI subcommand; a conflicting 'experiment'
    key in the document is an error.  overrides (flag values) win over the
    document.
    """
    try:
        doc = yaml.load(text, Loader=_ConfigLoader) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config document: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    _check_keys(doc, _TOP_KEYS, "")

    if "experiment" in doc:
        exp_doc = doc["experiment"]
        _require(exp_doc in EXPERIMENTS, "experiment",
                 f"must be one of {EXPERIMENTS}, got {exp_doc!r}")
        if experiment is not None and exp_doc != experiment:
            raise ConfigError(
                f"experiment: document says {exp_doc!r} but the {experiment!r} command was invoked"
            )
        experiment = exp_doc
    if experiment is None:
        raise ConfigError("experiment: missing (no subcommand and no document key)")

    overrides = dict(overrides or {})
    kwargs: dict = {"experiment": experiment}

    preset = "desk"
    if "preset" in overrides and overrides["preset"] is not None:
        preset = overrides.pop("preset")
        _require(preset in SCHEDULE_PRESETS, "preset",
                 f"must be one of {sorted(SCHEDULE_PRESETS)}, got {preset!r}")
        doc = dict(doc)
        doc["schedule"] = {"preset": preset}

    omega = _as_number(doc.get("omega", DEFAULT_OMEGA), "omega")
    _require(omega >= 0, "omega", f"must be >= 0, got {omega}")
    gamma = _as_number(doc.get("gamma", DEFAULT_GAMMA), "gamma")
    _require(gamma >= 0, "gamma", f"must be >= 0, got {gamma}")
    kwargs["omega"] = omega
    kwargs["gamma"] = gamma

    if "gammas" in doc:
        seq = doc["gammas"]
        _require(isinstance(seq, (list, tuple)) and seq, "gammas", "expected a non-empty list")
        vals = []
        for i, g in enumerate(seq):
            gv = _as_number(g, f"gammas[{i}]")
            _require(gv >= 0, f"gammas[{i}]", f"must be >= 0, got {gv}")
            vals.append(gv)
        kwargs["gammas"] = tuple(vals)

    kwargs["init"] = _parse_init(doc["init"], "init") if "init" in doc else DEFAULT_INIT

    preset_name, schedule = _parse_schedule(doc.get("schedule"), "schedule", preset)
    kwargs["preset"] = preset_name
    kwargs["schedule"] = schedule

    default_n = PAPER_PRESET_N if preset_name == "paper" else DEFAULT_N
    n = _as_int(doc.get("n_trajectories", default_n), "n_trajectories")
    _require(n >= 1, "n_trajectories", f"must be >= 1, got {n}")
    kwargs["n_trajectories"] = n

    seed = _as_int(doc.get("master_seed", DEFAULT_SEED), "master_seed")
    _require(0 <= seed < 2**64, "master_seed", "must fit in 64 bits")
    kwargs["master_seed"] = seed

    horizon = _as_number(doc.get("horizon", DEFAULT_HORIZON), "horizon")
    _require(horizon > 0, "horizon", f"must be positive, got {horizon}")
    kwargs["horizon"] = horizon

    if "sample_stride" in doc and doc["sample_stride"] is not None:
        stride = _as_int(doc["sample_stride"], "sample_stride")
        _require(stride >= 1, "sample_stride", f"must be >= 1, got {stride}")
        kwargs["sample_stride"] = stride

    kwargs["detector"] = _parse_detector(doc.get("detector"), "detector")

    if "stream_index" in doc:
        idx = _as_int(doc["stream_index"], "stream_index")
        _require(idx >= 0, "stream_index", f"must be >= 0, got {idx}")
        kwargs["stream_index"] = idx

    if "workers" in doc and doc["workers"] is not None:
        w = _as_int(doc["workers"], "workers")
        _require(w >= 1, "workers", f"must be >= 1, got {w}")
        kwargs["workers"] = w

    kwargs.update(_parse_output(doc.get("output"), "output"))

    # flag overrides win over the document
    for key, value in overrides.items():
        if value is None:
            continue
        if key in ("omega", "gamma", "horizon"):
            v = _as_number(value, key)
            _require(v >= 0 if key != "horizon" else v > 0, key, f"invalid value {v}")
            kwargs[key] = v
        elif key in ("n_trajectories", "master_seed", "sample_stride", "workers", "stream_index"):
            v = _as_int(value, key)
            _require(v >= (0 if key in ("master_seed", "stream_index") else 1), key,
                     f"invalid value {v}")
            kwargs[key] = v
        elif key == "gammas":
            kwargs[key] = tuple(float(g) for g in value)
        elif key in ("out_dir",):
            kwargs[key] = str(value)
        elif key in ("emit_csv", "emit_json", "emit_svg"):
            kwargs[key] = bool(value)
        else:
            raise ConfigError(f"unknown override {key!r}")

    config = RunConfig(**kwargs)
    try:
        config.params  # range-check omega/gamma jointly
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return config


def load_config_file(path: str | None, experiment: str, overrides: dict | None = None) -> RunConfig:
    if path is None:
        return parse_config("", experiment, overrides)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text, experiment, overrides)
