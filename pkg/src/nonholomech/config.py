"""Run configuration: YAML ingestion, defaults per command, overrides and validation."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Any

import yaml

COMMANDS = (
    "snake-field",
    "snake-gait",
    "snake-platform",
    "snake-reduce-theta",
    "chaplygin-passive",
    "chaplygin-forced",
    "chaplygin-sweep",
    "chaplygin-headings",
    "chaplygin-multi",
    "validate",
)


class ConfigError(ValueError):
    """Malformed or invalid configuration; `where` names the field and, when known, the line."""

    def __init__(self, msg: str, where: str = "", line: int | None = None):
        self.where, self.line = where, line
        loc = where + (f" (line {line})" if line is not None else "")
        super().__init__(f"{loc}: {msg}" if loc else msg)


# kind tags: float, float?, int, str, bool, floats, connections, beanies
_SCHEMA: dict[str, dict[str, tuple[str, Any]]] = {
    "numerics": {
        "dt": ("float", 1e-3),
        "t_final": ("float?", None),
        "grid_resolution": ("int", 101),
        "grid_bounds": ("floats", [-2.5, 2.5, -2.5, 2.5]),
        "tolerance": ("float", 1e-6),
    },
    "snake": {"R": ("float", 1.0), "M_l": ("float", 1.0), "J": ("float", 1.0), "M_p": ("float", 3.0)},
    "beanie": {k: ("float", 1.0) for k in ("m", "B", "C", "a", "k", "M")},
    "gait": {
        "B1": ("float", 0.8), "B2": ("float", 0.8), "phi": ("float", -math.pi / 2),
        "omega": ("float", 1.0), "c1": ("float", 0.0), "c2": ("float", 0.0),
    },
    "platform_input": {
        "U": ("float", 0.003), "V": ("float", 0.003), "omega": ("float", 2.0),
        "lag0": ("float", math.pi / 2), "lag_rate": ("float", 0.0),
        "alpha1_0": ("float", 1.2), "alpha2_0": ("float", 0.0),
    },
    "scenario": {"cycles": ("int", 3), "theta_center": ("float", 7 * math.pi / 12)},
    "field": {"connections": ("connections", ["int", "ext", "theta"]), "theta": ("float", 0.0)},
    "init": {k: ("float", 0.0) for k in ("x", "y", "theta", "phi", "x_p", "y_p", "xd", "yd", "thetad", "phid", "x_pd", "y_pd")},
    "control": {"A": ("float", 1.0), "omega": ("float", 1.2), "free_platform": ("bool", False)},
    "sweep": {"omega_min": ("float", 0.3), "omega_max": ("float", 2.0), "n_points": ("int", 100), "A": ("float", 1.0)},
    "headings": {"omegas": ("floats", [0.0, 0.5, 0.8, 1.1, 1.2, 1.3, 1.6, 1.9]), "A": ("float", 1.0)},
    "multi": {
        "A": ("float", 1.0), "omega": ("float", 0.9), "targeted_index": ("int", 0),
        "beanies": ("beanies", [{"x": 0.0, "y": 0.0, "theta": 0.0, "phi": 0.0},
                                {"x": 2.0, "y": 1.0, "theta": math.pi / 3, "phi": 0.0}]),
    },
}

_BEANIE_KEYS = ("x", "y", "theta", "phi")

_BLOCKS = {
    "snake-field": ("numerics", "snake", "field"),
    "snake-gait": ("numerics", "snake", "gait", "scenario"),
    "snake-platform": ("numerics", "snake", "platform_input", "scenario"),
    "snake-reduce-theta": ("numerics", "snake", "gait", "scenario"),
    "chaplygin-passive": ("numerics", "beanie", "init"),
    "chaplygin-forced": ("numerics", "beanie", "init", "control"),
    "chaplygin-sweep": ("numerics", "beanie", "sweep"),
    "chaplygin-headings": ("numerics", "beanie", "headings"),
    "chaplygin-multi": ("numerics", "beanie", "multi"),
    "validate": ("numerics", "snake", "beanie"),
}

_COMMAND_DEFAULTS: dict[str, dict[str, dict[str, Any]]] = {
    "snake-platform": {"scenario": {"cycles": 10}},
    "snake-reduce-theta": {"gait": {"B1": 0.37, "B2": 0.37}, "scenario": {"cycles": 2}},
    "chaplygin-passive": {"numerics": {"t_final": 200.0}, "init": {"theta": -math.pi / 4, "phi": math.pi}},
    "chaplygin-forced": {"numerics": {"t_final": 50.0}},
    "chaplygin-sweep": {"numerics": {"t_final": 150.0}},
    "chaplygin-headings": {"numerics": {"t_final": 200.0}},
    "chaplygin-multi": {"numerics": {"t_final": 100.0}},
}


@dataclass
class RunConfig:
    """Effective configuration. `output` is kept out of the canonical echo so echoes compare across directories."""

    command: str
    blocks: dict[str, dict[str, Any]]
    output: str | None = None

    def __getitem__(self, block: str) -> dict[str, Any]:
        return self.blocks[block]

    def canonical(self) -> dict[str, Any]:
        return {"command": self.command, **copy.deepcopy(self.blocks)}

    def canonical_text(self) -> str:
        return yaml.safe_dump(self.canonical(), sort_keys=True, default_flow_style=False)


def _line_index(text: str) -> dict[tuple[str, ...], int]:
    """Map dotted key paths to 1-based source lines."""
    out: dict[tuple[str, ...], int] = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = path + (str(k.value),)
                out[p] = k.start_mark.line + 1
                walk(v, p)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                p = path + (str(i),)
                out[p] = v.start_mark.line + 1
                walk(v, p)

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return out
    if root is not None:
        walk(root, ())
    return out


def _number(v, where, line, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", where, line)
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"expected an integer, got {v!r}", where, line)
        return int(v)
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError("must be finite", where, line)
    return v


def _coerce(kind: str, v, where: str, lines: dict, path: tuple) -> Any:
    line = lines.get(path)
    if kind == "float":
        return _number(v, where, line)
    if kind == "float?":
        return None if v is None else _number(v, where, line)
    if kind == "int":
        return _number(v, where, line, integer=True)
    if kind == "bool":
        if not isinstance(v, bool):
            raise ConfigError(f"expected true or false, got {v!r}", where, line)
        return v
    if kind == "floats":
        if not isinstance(v, list):
            raise ConfigError("expected a list of numbers", where, line)
        return [_number(x, f"{where}[{i}]", lines.get(path + (str(i),), line)) for i, x in enumerate(v)]
    if kind == "connections":
        if not isinstance(v, list) or not v or any(c not in ("int", "ext", "theta") for c in v):
            raise ConfigError("expected a non-empty list drawn from int, ext, theta", where, line)
        return list(dict.fromkeys(v))
    if kind == "beanies":
        if not isinstance(v, list) or not v:
            raise ConfigError("expected a non-empty list of beanie initial poses", where, line)
        out = []
        for i, item in enumerate(v):
            p = path + (str(i),)
            if not isinstance(item, dict):
                raise ConfigError("expected a mapping", f"{where}[{i}]", lines.get(p, line))
            extra = set(item) - set(_BEANIE_KEYS)
            if extra:
                raise ConfigError(f"unknown keys {sorted(map(str, extra))}", f"{where}[{i}]", lines.get(p, line))
            out.append({k: _number(item.get(k, 0.0), f"{where}[{i}].{k}", lines.get(p + (k,), line)) for k in _BEANIE_KEYS})
        return out
    raise AssertionError(kind)


def _defaults(command: str) -> dict[str, dict[str, Any]]:
    blocks = {b: {k: copy.deepcopy(d) for k, (_, d) in _SCHEMA[b].items()} for b in _BLOCKS[command]}
    for b, vals in _COMMAND_DEFAULTS.get(command, {}).items():
        blocks[b].update(vals)
    return blocks


def parse_override(text: str) -> tuple[tuple[str, ...], Any]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value", "--set")
    key, raw = text.split("=", 1)
    path = tuple(p for p in key.strip().split("."))
    if not all(path):
        raise ConfigError(f"bad key {key!r}", "--set")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value {raw!r}: {exc}", f"--set {key}") from None
    return path, value


def build_config(text: str | None = None, command: str | None = None, overrides=()) -> RunConfig:
    """Merge a YAML document, an explicit command and dotted overrides into a validated RunConfig."""
    lines: dict = {}
    raw: dict = {}
    if text is not None:
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}", "config",
                              mark.line + 1 if mark else None) from None
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("top level must be a mapping", "config", 1)
        raw = loaded
        lines = _line_index(text)
    raw = copy.deepcopy(raw)
    for path, value in overrides:
        node = raw
        for p in path[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError("cannot override inside a non-mapping", ".".join(path))
        node[path[-1]] = value

    cmd = raw.pop("command", None)
    output = raw.pop("output", None)
    if output is not None and not isinstance(output, str):
        raise ConfigError("expected a directory path", "output", lines.get(("output",)))
    if command is not None:
        if cmd is not None and cmd != command:
            raise ConfigError(f"config says {cmd!r} but {command!r} was requested", "command", lines.get(("command",)))
        cmd = command
    if cmd is None:
        raise ConfigError("no command given", "command")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}; choose from {', '.join(COMMANDS)}", "command", lines.get(("command",)))

    blocks = _defaults(cmd)
    for name, body in raw.items():
        line = lines.get((str(name),))
        if name not in _SCHEMA:
            raise ConfigError("unknown block", str(name), line)
        if name not in blocks:
            raise ConfigError(f"block not used by {cmd}", str(name), line)
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigError("expected a mapping", str(name), line)
        for key, value in body.items():
            path = (str(name), str(key))
            where = f"{name}.{key}"
            if key not in _SCHEMA[name]:
                raise ConfigError("unknown key", where, lines.get(path, line))
            blocks[name][key] = _coerce(_SCHEMA[name][key][0], value, where, lines, path)
    _check_semantics(cmd, blocks)
    return RunConfig(cmd, blocks, output)


def _check_semantics(cmd: str, b: dict) -> None:
    num = b["numerics"]
    if not num["dt"] > 0:
        raise ConfigError("must be positive", "numerics.dt")
    if num["t_final"] is not None and not num["t_final"] > 0:
        raise ConfigError("must be positive", "numerics.t_final")
    if num["grid_resolution"] < 2:
        raise ConfigError("must be at least 2", "numerics.grid_resolution")
    gb = num["grid_bounds"]
    if len(gb) != 4 or not (gb[0] < gb[1] and gb[2] < gb[3]):
        raise ConfigError("expected [a1_min, a1_max, a2_min, a2_max] with increasing pairs", "numerics.grid_bounds")
    if not num["tolerance"] > 0:
        raise ConfigError("must be positive", "numerics.tolerance")
    for block in ("snake", "beanie"):
        for k, v in b.get(block, {}).items():
            if not v > 0:
                raise ConfigError("must be positive", f"{block}.{k}")
    if "gait" in b and not b["gait"]["omega"] > 0:
        raise ConfigError("must be positive", "gait.omega")
    if "platform_input" in b and not b["platform_input"]["omega"] > 0:
        raise ConfigError("must be positive", "platform_input.omega")
    if "scenario" in b and b["scenario"]["cycles"] < 1:
        raise ConfigError("must be at least 1", "scenario.cycles")
    if cmd == "chaplygin-sweep":
        s = b["sweep"]
        if not 0 < s["omega_min"] < s["omega_max"]:
            raise ConfigError("need 0 < omega_min < omega_max", "sweep")
        if s["n_points"] < 2:
            raise ConfigError("must be at least 2", "sweep.n_points")
    if cmd == "chaplygin-headings" and not b["headings"]["omegas"]:
        raise ConfigError("need at least one frequency", "headings.omegas")
    if cmd == "chaplygin-multi":
        m = b["multi"]
        if not 0 <= m["targeted_index"] < len(m["beanies"]):
            raise ConfigError("out of range for the beanie list", "multi.targeted_index")
    if cmd == "chaplygin-passive":
        i = b["init"]
        if any(i[k] != 0.0 for k in ("xd", "yd", "thetad", "phid", "x_pd", "y_pd")):
            raise ConfigError("the passive run starts at rest; velocities must be zero", "init")
