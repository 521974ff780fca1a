"""Configuration-driven experiment runner.

Subcommands: transport, convergence, reconstruct, holonomy, bordism,
verify-all.  Each reads a YAML config (verify-all runs without one), writes
a text report and CSV tables (scientific notation, 17 significant digits),
and exits 0 when all checks pass, 1 on a failed check, 2 on a config error.
The output directory resolves as: --output-dir flag, then the
PATHBUNDLE_OUTPUT_DIR environment variable, then the config's output.dir,
then ./pathbundle_out.
"""

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import acceptance, bordisms
from .acceptance import Check, circle_distance, expected_colatitude_angle
from .bundles import (chart_global_path, colatitude_loop, circle_loop,
                      loop_holonomy_angle, subordinate_cut, global_transport)
from .config import (EXPERIMENTS, build_bundle, build_connection, build_path,
                     load_config, merge_tolerances, normalized_echo)
from .errors import ConfigError, PathBundleError
from .matrices import operator_distance
from .paths import constant_path
from .reconstruct import (TransportOracle, additivity_residual, grid_points,
                          homogeneity_residual, reconstruct_at, roundtrip_error)
from .transport import (convergence_slope, cocycle_residual, transport_ode,
                        transport_product)

ENV_OUTPUT_DIR = "PATHBUNDLE_OUTPUT_DIR"


@dataclass
class Report:
    experiment: str
    echo: str
    checks: list
    csv_files: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def text(self):
        lines = [f"experiment: {self.experiment}", "", "config echo:"]
        lines += ["  " + ln for ln in self.echo.rstrip("\n").split("\n")]
        lines.append("")
        lines += [c.describe() for c in self.checks]
        lines.append("")
        lines += [f"csv: {name}" for name in self.csv_files]
        lines.append("result: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"


def _fmt(value):
    return f"{float(value):.16e}"


def write_csv(path, header, rows):
    """Comma-separated table with a header row; numbers get 17 significant
    digits in scientific notation (lossless for float64)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else _fmt(cell)
                             for cell in row])


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

TRANSPORT_TOLERANCES = {
    "identity": 1e-12,
    "cocycle": 1e-8,
    "invertibility": 1e-8,
    "method_agreement": 1e-6,
}


def run_transport(config, outdir, seed, tol_overrides):
    tols = merge_tolerances(TRANSPORT_TOLERANCES,
                            config.get("tolerances"), tol_overrides)
    conn = build_connection(config.get("connection", {}))
    path = build_path(config.get("path", {}), conn.chart)
    integrator = config.get("integrator", {}) or {}
    steps = integrator.get("steps")
    rule = integrator.get("rule", "midpoint")

    result = transport_ode(conn, path, steps=steps, estimate_error=True)
    lo, hi = path.carrier
    quartiles = (lo, lo + 0.5 * (hi - lo), hi)
    checks = [
        Check("smallest singular value of transport",
              result.smallest_singular_value, tols["invertibility"], ">="),
        Check("cocycle residual at carrier quartiles",
              cocycle_residual(conn, path, *quartiles), tols["cocycle"]),
        Check("ode vs midpoint-product agreement",
              operator_distance(
                  result.map,
                  transport_product(conn, path, n=result.steps or 1,
                                    rule=rule).map),
              tols["method_agreement"]),
    ]
    if config.get("connection", {}).get("preset") == "zero":
        checks.insert(0, Check(
            "identity residual (flat connection)",
            operator_distance(result.map, np.eye(conn.fiber_dim)),
            tols["identity"]))

    rows = [("check:" + c.name, c.value) for c in checks]
    rows += [(f"transport_{i}_{j}", result.map[i, j])
             for i in range(conn.fiber_dim) for j in range(conn.fiber_dim)]
    if result.error_estimate is not None:
        rows.append(("truncation_estimate", result.error_estimate))
    csv_name = "transport.csv"
    write_csv(os.path.join(outdir, csv_name), ("name", "value"), rows)
    return checks, [csv_name]


CONVERGENCE_TOLERANCES = {
    "left_slope_low": 0.9,
    "left_slope_high": 1.1,
    "midpoint_slope": 1.8,
}


def run_convergence(config, outdir, seed, tol_overrides):
    tols = merge_tolerances(CONVERGENCE_TOLERANCES,
                            config.get("tolerances"), tol_overrides)
    conn_block = config.get("connection", {"preset": "magnetic"})
    conn = build_connection(conn_block)
    path_block = config.get("path", {
        "preset": "circle_arc", "center": [0.3, 0.2],
        "radius": 0.8, "domain": [0.0, 2.0]})
    path = build_path(path_block, conn.chart)
    integrator = config.get("integrator", {}) or {}
    n_min = integrator.get("n_min", 16)
    n_max = integrator.get("n_max", 4096)
    reference = transport_ode(conn, path, steps=8192).map

    n_values, k = [], 0
    while n_min * 2 ** k <= n_max:
        n_values.append(n_min * 2 ** k)
        k += 1
    table = {}
    for rule in ("left", "midpoint"):
        table[rule] = [
            (n, operator_distance(
                transport_product(conn, path, n=n, rule=rule).map, reference))
            for n in n_values]
    left_slope = convergence_slope(table["left"])
    mid_slope = convergence_slope(table["midpoint"])

    checks = [
        Check("left-rule slope", left_slope,
              (tols["left_slope_low"], tols["left_slope_high"]), "in"),
        Check("midpoint-rule slope", mid_slope, tols["midpoint_slope"], ">="),
    ]
    csv_name = "convergence.csv"
    rows = [(n, err_l, err_m) for (n, err_l), (_, err_m)
            in zip(table["left"], table["midpoint"])]
    write_csv(os.path.join(outdir, csv_name),
              ("n", "error_left", "error_midpoint"),
              [(str(n), el, em) for n, el, em in rows])
    return checks, [csv_name]


RECONSTRUCT_TOLERANCES = {
    "roundtrip": 1e-4,
    "linearity": 1e-6,
    "order_low": 3.5,
    "order_high": 4.5,
}


def run_reconstruct(config, outdir, seed, tol_overrides):
    tols = merge_tolerances(RECONSTRUCT_TOLERANCES,
                            config.get("tolerances"), tol_overrides)
    conn = build_connection(config.get("connection", {"preset": "magnetic"}))
    grid_block = config.get("grid", {}) or {}
    box = grid_block.get("box")
    if box is None:
        box = conn.chart.bbox or tuple((-1.0, 1.0) for _ in range(conn.chart.dim))
    counts = grid_block.get("counts", [10] * conn.chart.dim)
    if len(counts) != conn.chart.dim or len(box) != conn.chart.dim:
        raise ConfigError("grid box/counts must match the chart dimension",
                          key="grid")
    probe_h = float(config.get("probe_step", 1e-4))
    grid = grid_points(box, counts)
    rt = roundtrip_error(conn, grid, h=probe_h)

    rng = np.random.default_rng(seed)
    oracle = TransportOracle.from_connection(conn)
    lin_worst = 0.0
    for _ in range(5):
        p = np.array([rng.uniform(lo * 0.8, hi * 0.8) for lo, hi in box])
        u = rng.uniform(-1.0, 1.0, size=conn.chart.dim)
        v = rng.uniform(-1.0, 1.0, size=conn.chart.dim)
        lam = rng.uniform(0.5, 3.0)
        lin_worst = max(lin_worst,
                        homogeneity_residual(oracle, p, v, lam, h=probe_h),
                        additivity_residual(oracle, p, u, v, h=probe_h))

    p0 = np.array([0.5 * (lo + hi) + 0.2 * (hi - lo) for lo, hi in box])
    v0 = np.ones(conn.chart.dim)
    truth = conn.evaluate(p0, v0)
    err_h = operator_distance(reconstruct_at(oracle, p0, v0, h=1e-3), truth)
    err_h2 = operator_distance(reconstruct_at(oracle, p0, v0, h=5e-4), truth)
    ratio = err_h / max(err_h2, 1e-300)

    checks = [
        Check("grid round-trip error", rt, tols["roundtrip"]),
        Check("homogeneity/additivity residual", lin_worst, tols["linearity"]),
        Check("halving ratio", ratio,
              (tols["order_low"], tols["order_high"]), "in"),
    ]
    csv_name = "reconstruct.csv"
    write_csv(os.path.join(outdir, csv_name), ("name", "value"),
              [("roundtrip_error", rt), ("linearity_residual", lin_worst),
               ("halving_ratio", ratio)])
    return checks, [csv_name]


HOLONOMY_TOLERANCES = {
    "angle": 1e-6,
    "rotation": 1e-6,
}


def run_holonomy(config, outdir, seed, tol_overrides):
    tols = merge_tolerances(HOLONOMY_TOLERANCES,
                            config.get("tolerances"), tol_overrides)
    bundle_block = config.get("bundle", {"preset": "levi_civita_sphere"})
    bundle = build_bundle(bundle_block)
    preset = bundle_block.get("preset")
    loop_block = config.get("loop", {}) or {}

    if preset == "levi_civita_sphere":
        theta = float(loop_block.get("theta", math.pi / 3))
        loop = colatitude_loop(bundle.atlas, theta)
        expected = expected_colatitude_angle(theta)
    elif preset == "flat_circle":
        loop = circle_loop(bundle.atlas)
        expected = float(bundle_block.get("far_angle", 0.0))
    else:
        raise ConfigError("holonomy needs a levi_civita_sphere or "
                          "flat_circle bundle", key="bundle.preset")

    cut = subordinate_cut(loop, bundle.atlas)
    angle = loop_holonomy_angle(bundle, loop, cut=cut,
                                rotation_tol=tols["rotation"])
    gap = circle_distance(angle, expected)
    glued = global_transport(bundle, loop, cut=cut,
                             target_chart=cut.chart_indices[0])
    checks = [
        Check("holonomy angle gap", gap, tols["angle"]),
    ]
    csv_name = "holonomy.csv"
    write_csv(os.path.join(outdir, csv_name), ("name", "value"),
              [("angle", angle), ("expected", expected), ("gap", gap),
               ("trace", float(np.trace(glued.map))),
               ("segments", float(len(cut.chart_indices)))])
    return checks, [csv_name]


BORDISM_TOLERANCES = {
    "snake_constant": 1e-10,
    "snake_decorated": 1e-8,
    "trace": 1e-8,
}


def run_bordism(config, outdir, seed, tol_overrides):
    tols = merge_tolerances(BORDISM_TOLERANCES,
                            config.get("tolerances"), tol_overrides)
    word_block = config.get("word", {}) or {}
    preset = word_block.get("preset")
    if preset not in ("snake_constant", "snake_loop", "circle_trace"):
        raise ConfigError("word.preset must be snake_constant, snake_loop, "
                          "or circle_trace", key="word.preset")
    bundle = build_bundle(config.get("bundle", {
        "preset": "single_chart", "connection": {"preset": "magnetic"}}))

    rows, checks = [], []
    if preset == "snake_constant":
        point = word_block.get("point", [0.3, 0.2])
        loop = chart_global_path(
            bundle.atlas, constant_path(bundle.connections[0].chart, point))
        residual = max(bordisms.snake_residual(bundle, loop, "plus"),
                       bordisms.snake_residual(bundle, loop, "minus"))
        checks.append(Check("snake residual (constant)", residual,
                            tols["snake_constant"]))
        rows.append(("snake_residual", residual))
    elif preset == "snake_loop":
        theta = float(word_block.get("theta", math.pi / 3))
        loop = colatitude_loop(bundle.atlas, theta)
        residual = bordisms.snake_residual(bundle, loop, "plus")
        checks.append(Check("snake residual (decorated)", residual,
                            tols["snake_decorated"]))
        rows.append(("snake_residual", residual))
    else:  # circle_trace
        center = word_block.get("center", [0.3, 0.2])
        radius = float(word_block.get("radius", 0.8))
        from .paths import circle_arc_path
        chart_loop = circle_arc_path(bundle.connections[0].chart, center,
                                     radius, (0.0, 2.0 * math.pi))
        loop = chart_global_path(bundle.atlas, chart_loop)
        word = bordisms.circle_word(bundle, loop)
        value = bordisms.evaluate_bordism(word, bundle).matrix[0, 0]
        holonomy = transport_ode(bundle.connections[0], chart_loop).map
        gap = abs(value - np.trace(holonomy))
        checks.append(Check("circle word vs holonomy trace", gap, tols["trace"]))
        rows += [("circle_word_value", value),
                 ("holonomy_trace", float(np.trace(holonomy))), ("gap", gap)]

    csv_name = "bordism.csv"
    write_csv(os.path.join(outdir, csv_name), ("name", "value"), rows)
    return checks, [csv_name]


def run_verify_all(config, outdir, seed, tol_overrides):
    if tol_overrides:
        raise ConfigError("verify-all runs at the pinned acceptance "
                          "tolerances; --tol is not accepted", key="--tol")
    results = acceptance.run_all(seed=seed)
    checks = []
    rows = []
    for result in results:
        for check in result.checks:
            named = Check(f"[{result.index}] {check.name}", check.value,
                          check.threshold, check.comparator)
            checks.append(named)
            threshold = (f"{check.threshold}" if check.comparator != "in"
                         else f"{check.threshold[0]}..{check.threshold[1]}")
            rows.append((f"criterion_{result.index}", check.name,
                         _fmt(check.value), threshold,
                         "pass" if check.passed else "fail"))
    csv_name = "verify_all.csv"
    with open(os.path.join(outdir, csv_name), "w", newline="",
              encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(("criterion", "check", "value", "threshold", "status"))
        writer.writerows(rows)
    return checks, [csv_name]


RUNNERS = {
    "transport": run_transport,
    "convergence": run_convergence,
    "reconstruct": run_reconstruct,
    "holonomy": run_holonomy,
    "bordism": run_bordism,
    "verify-all": run_verify_all,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _parse_tol(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--tol expects NAME=VALUE, got {pair!r}",
                              key="--tol")
        key, _, value = pair.partition("=")
        out[key.strip()] = value.strip()
    return out


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pathbundle",
        description="Transport, holonomy, reconstruction, and bordism "
                    "experiments over chart-local bundle data.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None,
                       help="YAML config file (verify-all runs without one)")
        p.add_argument("--output-dir", default=None,
                       help=f"output directory (overrides ${ENV_OUTPUT_DIR} "
                            f"and the config)")
        p.add_argument("--seed", type=int, default=None,
                       help="random seed (default: config seed or 0)")
        p.add_argument("--tol", action="append", metavar="NAME=VALUE",
                       help="override a named tolerance")
    return parser


def resolve_output_dir(args, config):
    if args.output_dir:
        return args.output_dir
    env = os.environ.get(ENV_OUTPUT_DIR)
    if env:
        return env
    configured = (config.get("output") or {}).get("dir")
    if configured:
        return configured
    return "pathbundle_out"


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else {}
        declared = config.get("experiment")
        if declared is not None and declared != args.experiment:
            raise ConfigError(
                f"config declares experiment {declared!r} but the "
                f"{args.experiment!r} subcommand was invoked", key="experiment")
        seed = args.seed if args.seed is not None else int(config.get("seed", 0))
        outdir = resolve_output_dir(args, config)
        os.makedirs(outdir, exist_ok=True)
        tol_overrides = _parse_tol(args.tol)
        runner = RUNNERS[args.experiment]
        checks, csv_files = runner(config, outdir, seed, tol_overrides)
    except ConfigError as exc:
        location = f" at {exc.key}" if exc.key else ""
        print(f"config error{location}: {exc}", file=sys.stderr)
        return 2
    except PathBundleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    report = Report(args.experiment, normalized_echo(config), checks, csv_files)
    report_path = os.path.join(outdir, f"{args.experiment.replace('-', '_')}_report.txt")
    with open(report_path, "w", encoding="utf-8") as handle:
        handle.write(report.text())
    print(report.text(), end="")

    if report.passed:
        return 0
    failing = next(c for c in checks if not c.passed)
    print(f"failed check: {failing.name}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
