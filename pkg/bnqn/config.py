"""Run configuration: one JSON file, per-subcommand sections, flags on top.

Precedence is flag > file > default. ``RunConfig.to_dict`` writes the fully
resolved configuration, which parses back to an equal RunConfig.
"""

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import METHODS, MethodParams
from .basins import GridSpec
from .errors import ConfigError
from .funcs import as_point, point_to_list, spec_from_dict
from .presets import get_preset

logger = logging.getLogger(__name__)

SECTIONS = (
    "function",
    "method",
    "params",
    "grid",
    "outputs",
    "seed",
    "threads",
    "preset",
    "trace",
    "rate",
    "local",
    "conjugacy",
    "flow_run",
    "compare",
)

RANDOM_DELTA_RANGE = (0.0, 3.0)


def _point(data, key, where, default=None):
    value = data.get(key, default)
    if value is None:
        return None
    try:
        return as_point(value)
    except (TypeError, ValueError, IndexError) as err:
        raise ConfigError(f"{where}.{key}", str(err)) from err


def _number(data, key, where, default, kind=float):
    value = data.get(key, default)
    try:
        return kind(value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{where}.{key}", str(err)) from err


def _optional_list(z):
    return None if z is None else point_to_list(z)


@dataclass(frozen=True)
class Outputs:
    image_path: str = "basins.ppm"
    stats_path: str = "stats.json"
    trace_path: str = "trace.csv"
    report_path: str = "report.json"
    flow_path: str = "flow.csv"

    @classmethod
    def from_dict(cls, data, where="outputs"):
        unknown = sorted(set(data) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigError(f"{where}.{unknown[0]}", "unknown output")
        for key, value in data.items():
            if not isinstance(value, str) or not value:
                raise ConfigError(f"{where}.{key}", "must be a non-empty path")
        return cls(**data)

    def to_dict(self):
        return {
            "image_path": self.image_path,
            "stats_path": self.stats_path,
            "trace_path": self.trace_path,
            "report_path": self.report_path,
            "flow_path": self.flow_path,
        }


@dataclass(frozen=True)
class PointSettings:
    """Settings of the subcommands that start from one point: trace, rate, flow_run."""

    z0: complex = 0.3 + 0.7j
    limit: object = None

    @classmethod
    def from_dict(cls, data, where):
        return cls(_point(data, "z0", where, [0.3, 0.7]), _point(data, "limit", where))

    def to_dict(self):
        out = {"z0": point_to_list(self.z0)}
        if self.limit is not None:
            out["limit"] = point_to_list(self.limit)
        return out


@dataclass(frozen=True)
class LocalSettings:
    z_star: object = None
    r0: object = None
    samples: int = 360
    sector_samples: int = 36

    @classmethod
    def from_dict(cls, data, where="local"):
        r0 = data.get("r0")
        if r0 is not None and not (isinstance(r0, (int, float)) and r0 > 0):
            raise ConfigError(f"{where}.r0", f"must be a positive number, got {r0!r}")
        samples = _number(data, "samples", where, 360, int)
        if samples < 1:
            raise ConfigError(f"{where}.samples", "must be >= 1")
        return cls(_point(data, "z_star", where), r0, samples, _number(data, "sector_samples", where, 36, int))

    def to_dict(self):
        return {
            "z_star": _optional_list(self.z_star),
            "r0": self.r0,
            "samples": self.samples,
            "sector_samples": self.sector_samples,
        }


DEFAULT_CONJUGACY_STARTS = (0.3 + 0.7j, -1.2 + 0.4j, 0.9 - 1.1j, 1.5 + 1.5j, -0.2 - 0.6j)


@dataclass(frozen=True)
class ConjugacySettings:
    c: float = 2.0
    angle: float = math.pi / 3
    steps: int = 50
    z0s: tuple = DEFAULT_CONJUGACY_STARTS
    tolerance: float = 1e-9

    @classmethod
    def from_dict(cls, data, where="conjugacy"):
        c = _number(data, "c", where, 2.0)
        if not c > 0:
            raise ConfigError(f"{where}.c", f"must be > 0, got {c}")
        try:
            z0s = tuple(as_point(z) for z in data.get("z0s", [point_to_list(z) for z in DEFAULT_CONJUGACY_STARTS]))
        except (TypeError, ValueError, IndexError) as err:
            raise ConfigError(f"{where}.z0s", str(err)) from err
        return cls(
            c,
            _number(data, "angle", where, math.pi / 3),
            _number(data, "steps", where, 50, int),
            z0s,
            _number(data, "tolerance", where, 1e-9),
        )

    def to_dict(self):
        return {
            "c": self.c,
            "angle": self.angle,
            "steps": self.steps,
            "z0s": [point_to_list(z) for z in self.z0s],
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class CompareSettings:
    """Each run is an overlay applied to the base config before running it."""

    runs: tuple = ({"method": "bnqn"}, {"method": "newton"})

    @classmethod
    def from_dict(cls, data, where="compare"):
        runs = data.get("runs", [{"method": "bnqn"}, {"method": "newton"}])
        if not isinstance(runs, list) or not runs or not all(isinstance(r, dict) for r in runs):
            raise ConfigError(f"{where}.runs", "must be a non-empty list of objects")
        return cls(tuple(runs))

    def to_dict(self):
        return {"runs": [dict(r) for r in self.runs]}


def random_deltas(seed):
    """Three distinct deltas drawn uniformly from RANDOM_DELTA_RANGE."""
    rng = np.random.default_rng([seed, 1])
    low, high = RANDOM_DELTA_RANGE
    while True:
        deltas = [float(d) for d in rng.uniform(low, high, size=3)]
        if len(set(deltas)) == 3:
            return deltas


def _resolve_params(data, seed):
    data = json.loads(json.dumps(data)) if data else {}
    bnqn = data.get("bnqn", {})
    if bnqn.get("deltas") == "random":
        bnqn["deltas"] = random_deltas(seed)
        logger.info("random deltas %s", bnqn["deltas"])
        data["bnqn"] = bnqn
    relaxed = data.get("random_relaxed", {})
    if "seed" in relaxed and relaxed["seed"] != seed:
        raise ConfigError("params.random_relaxed.seed", f"must equal the top-level seed {seed}")
    relaxed["seed"] = seed
    data["random_relaxed"] = relaxed
    return data


@dataclass(frozen=True)
class RunConfig:
    function: object
    method: str = "bnqn"
    params: MethodParams = MethodParams()
    grid: GridSpec = GridSpec()
    outputs: Outputs = Outputs()
    seed: int = 0
    threads: int = field(default=1, compare=False)
    trace: PointSettings = PointSettings()
    rate: PointSettings = PointSettings(0.1 + 0j)
    local: LocalSettings = LocalSettings()
    conjugacy: ConjugacySettings = ConjugacySettings()
    flow_run: PointSettings = PointSettings(4 + 3j)
    compare: CompareSettings = CompareSettings()
    preset: object = field(default=None, compare=False)

    @classmethod
    def from_dict(cls, data):
        """Validate and resolve a raw config dict.

        Raises:
            ConfigError: naming the first offending field.
        """
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ConfigError(unknown[0], "unknown config section")

        preset = data.get("preset")
        function = data.get("function")
        grid = data.get("grid")
        params = data.get("params")
        if preset is not None:
            chosen = get_preset(preset)
            if function is None:
                # the preset deltas are sized to the preset function
                function = chosen.function.to_dict()
                params = merge(chosen.params, params or {})
            grid = grid if grid is not None else chosen.grid.to_dict()
        if function is None:
            raise ConfigError("function", "missing; give a function or a preset")

        method = data.get("method", "bnqn")
        if method not in METHODS:
            raise ConfigError("method", f"unknown method {method!r}, expected one of {', '.join(METHODS)}")
        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ConfigError("seed", f"must be a 64-bit unsigned integer, got {seed!r}")
        threads = data.get("threads", 1)
        if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
            raise ConfigError("threads", f"must be a positive integer, got {threads!r}")

        return cls(
            function=spec_from_dict(function, "function"),
            method=method,
            params=MethodParams.from_dict(_resolve_params(params, seed)),
            grid=GridSpec.from_dict(grid or {}),
            outputs=Outputs.from_dict(data.get("outputs", {})),
            seed=seed,
            threads=threads,
            trace=PointSettings.from_dict(data.get("trace", {}), "trace"),
            rate=PointSettings.from_dict({"z0": [0.1, 0.0], **data.get("rate", {})}, "rate"),
            local=LocalSettings.from_dict(data.get("local", {})),
            conjugacy=ConjugacySettings.from_dict(data.get("conjugacy", {})),
            flow_run=PointSettings.from_dict({"z0": [4.0, 3.0], **data.get("flow_run", {})}, "flow_run"),
            compare=CompareSettings.from_dict(data.get("compare", {})),
            preset=preset,
        )

    def to_dict(self):
        return {
            "function": self.function.to_dict(),
            "method": self.method,
            "params": self.params.to_dict(),
            "grid": self.grid.to_dict(),
            "outputs": self.outputs.to_dict(),
            "seed": self.seed,
            "trace": self.trace.to_dict(),
            "rate": self.rate.to_dict(),
            "local": self.local.to_dict(),
            "conjugacy": self.conjugacy.to_dict(),
            "flow_run": self.flow_run.to_dict(),
            "compare": self.compare.to_dict(),
        }


def load_config(path):
    """Read a config file into a raw dict.

    Raises:
        OSError: the file cannot be read.
        ConfigError: the file is not valid JSON.
    """
    with open(path) as file:
        try:
            return json.load(file)
        except json.JSONDecodeError as err:
            raise ConfigError("config", f"{path} is not valid JSON: {err}") from err


def merge(base, overlay):
    """Recursively overlay one raw config dict on another."""
    out = dict(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out


def apply_overrides(data, method=None, seed=None, threads=None, preset=None):
    """Put command-line flags over the file's values."""
    data = dict(data)
    if preset is not None:
        chosen = get_preset(preset)
        data["preset"] = chosen.name
        data.pop("function", None)
        data.pop("grid", None)
    if method is not None:
        data["method"] = method
    if seed is not None:
        data["seed"] = seed
        params = dict(data.get("params", {}))
        relaxed = dict(params.get("random_relaxed", {}))
        relaxed.pop("seed", None)
        if relaxed or "random_relaxed" in params:
            params["random_relaxed"] = relaxed
        data["params"] = params
    if threads is not None:
        data["threads"] = threads
    return data

