"""Experiment configuration: YAML loading, validation, object building.

Configurations are nested mappings.  Every builder validates its block and
raises ConfigError naming the offending key, so the CLI can exit with a
precise diagnostic.
"""

import math

import numpy as np
import yaml

from .bundles import (chart_global_path, flat_circle_bundle,
                      levi_civita_sphere_bundle, single_chart_bundle)
from .connections import (Chart, constant_connection,
                          levi_civita_sphere_connection, magnetic_connection,
                          polynomial_connection, zero_connection)
from .errors import ConfigError
from .paths import (affine_path, circle_arc_path, constant_path, line_path,
                    spline_path)

CONNECTION_PRESETS = ("zero", "constant", "magnetic", "polynomial",
                      "levi_civita_sphere")
PATH_PRESETS = ("affine", "line", "circle_arc", "constant", "spline")
BUNDLE_PRESETS = ("levi_civita_sphere", "flat_circle", "single_chart")
WORD_PRESETS = ("snake_constant", "snake_loop", "circle_trace")
EXPERIMENTS = ("transport", "convergence", "reconstruct", "holonomy",
               "bordism", "verify-all")


def load_config(path):
    """Parse a YAML config file into a mapping; parse errors name the file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    return data


def normalized_echo(config):
    """Deterministic YAML text of a config mapping (sorted keys)."""
    return yaml.safe_dump(config, sort_keys=True, default_flow_style=False)


def _get(block, key, default=None, required=False, where=""):
    if key not in block:
        if required:
            raise ConfigError(f"missing required key", key=f"{where}{key}")
        return default
    return block[key]


def _number(block, key, default=None, required=False, where=""):
    value = _get(block, key, default, required, where)
    if value is None:
        return None
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", key=f"{where}{key}")
    return float(value)


def _integer(block, key, default=None, required=False, where=""):
    value = _get(block, key, default, required, where)
    if value is None:
        return None
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"expected an integer, got {value!r}", key=f"{where}{key}")
    return value


def _vector(block, key, default=None, required=False, where=""):
    value = _get(block, key, default, required, where)
    if value is None:
        return None
    try:
        return np.asarray(value, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"expected a numeric list, got {value!r}",
                          key=f"{where}{key}") from exc


def build_connection(block):
    """Connection form from its config block."""
    where = "connection."
    if not isinstance(block, dict):
        raise ConfigError("connection block must be a mapping", key="connection")
    preset = _get(block, "preset", required=True, where=where)
    if preset == "zero":
        dim = _integer(block, "dim", 1, where=where)
        fiber_dim = _integer(block, "fiber_dim", 2, where=where)
        return zero_connection(Chart(dim), fiber_dim)
    if preset == "constant":
        mats = _get(block, "matrices", required=True, where=where)
        try:
            mats = [np.asarray(m, dtype=float) for m in mats]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"matrices must be numeric grids: {exc}",
                              key=where + "matrices") from exc
        return constant_connection(Chart(len(mats)), mats)
    if preset == "magnetic":
        strength = _number(block, "strength", 1.0, where=where)
        return magnetic_connection(strength)
    if preset == "polynomial":
        terms = _get(block, "terms", required=True, where=where)
        dim = _integer(block, "dim", required=True, where=where)
        fiber_dim = _integer(block, "fiber_dim", required=True, where=where)
        try:
            parsed = [[(tuple(e), np.asarray(m, dtype=float)) for e, m in comp]
                      for comp in terms]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"terms must be [[exponents, matrix], ...] per "
                              f"coordinate: {exc}", key=where + "terms") from exc
        return polynomial_connection(Chart(dim), fiber_dim, parsed)
    if preset == "levi_civita_sphere":
        return levi_civita_sphere_connection()
    raise ConfigError(f"unknown preset {preset!r} (choose from "
                      f"{', '.join(CONNECTION_PRESETS)})", key=where + "preset")


def build_path(block, chart):
    """Chart path from its config block."""
    where = "path."
    if not isinstance(block, dict):
        raise ConfigError("path block must be a mapping", key="path")
    preset = _get(block, "preset", required=True, where=where)
    domain = _vector(block, "domain", [0.0, 1.0], where=where)
    if len(domain) != 2:
        raise ConfigError("domain must be [start, end]", key=where + "domain")
    domain = (float(domain[0]), float(domain[1]))
    cuts = _vector(block, "cuts", None, where=where)
    cuts = None if cuts is None else tuple(cuts)
    if preset == "affine":
        point = _vector(block, "point", required=True, where=where)
        direction = _vector(block, "direction", required=True, where=where)
        return affine_path(chart, point, direction, domain, cuts)
    if preset == "line":
        start = _vector(block, "start", required=True, where=where)
        end = _vector(block, "end", required=True, where=where)
        return line_path(chart, start, end, domain, cuts)
    if preset == "circle_arc":
        center = _vector(block, "center", [0.0, 0.0], where=where)
        radius = _number(block, "radius", 1.0, where=where)
        return circle_arc_path(chart, center, radius, domain, cuts)
    if preset == "constant":
        point = _vector(block, "point", required=True, where=where)
        return constant_path(chart, point, domain, cuts)
    if preset == "spline":
        times = _vector(block, "times", required=True, where=where)
        waypoints = _get(block, "waypoints", required=True, where=where)
        try:
            waypoints = np.asarray(waypoints, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"waypoints must be a numeric grid: {exc}",
                              key=where + "waypoints") from exc
        return spline_path(chart, times, waypoints, cuts)
    raise ConfigError(f"unknown preset {preset!r} (choose from "
                      f"{', '.join(PATH_PRESETS)})", key=where + "preset")


def build_bundle(block):
    """Global bundle from its config block."""
    where = "bundle."
    if not isinstance(block, dict):
        raise ConfigError("bundle block must be a mapping", key="bundle")
    preset = _get(block, "preset", required=True, where=where)
    if preset == "levi_civita_sphere":
        cap = _number(block, "cap", 0.8, where=where)
        return levi_civita_sphere_bundle(cap)
    if preset == "flat_circle":
        angle = _number(block, "far_angle", 0.0, where=where)
        c, s = math.cos(angle), math.sin(angle)
        return flat_circle_bundle(far=np.array([[c, -s], [s, c]]))
    if preset == "single_chart":
        conn_block = _get(block, "connection", required=True, where=where)
        return single_chart_bundle(build_connection(conn_block))
    raise ConfigError(f"unknown preset {preset!r} (choose from "
                      f"{', '.join(BUNDLE_PRESETS)})", key=where + "preset")


def merge_tolerances(defaults, config_block, overrides):
    """Layer tolerance values: defaults < config block < CLI overrides."""
    merged = dict(defaults)
    for source, label in ((config_block or {}, "tolerances"),
                          (overrides or {}, "--tol")):
        for key, value in source.items():
            if key not in merged:
                raise ConfigError(
                    f"unknown tolerance {key!r} (known: {', '.join(sorted(merged))})",
                    key=f"{label}.{key}")
            try:
                merged[key] = float(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"tolerance {key!r} must be a number, "
                                  f"got {value!r}", key=f"{label}.{key}") from exc
    return merged
