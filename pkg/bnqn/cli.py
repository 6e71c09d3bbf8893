"""Command-line front end.

    python -m bnqn basins --preset quartic_unity --out out/
    python -m bnqn trace --config run.json -v

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 a numerical
probe or invariance check failed, 1 anything else.
"""

import argparse
import cmath
import logging
import math
import sys

import pandas as pd

from . import basins, localdyn
from .baselines import METHODS, FlowMode, newton_flow, run_method
from .config import RunConfig, apply_overrides, load_config, merge
from .core import OutcomeKind, conjugacy_check, run
from .errors import BnqnError, ConfigError, InsufficientTail, ProbeFailed
from .funcs import POLYNOMIALS, critical_points, eval_f, eval_jet, point_to_list, spec_roots
from .presets import PRESETS
from .reporting import FLOW_COLUMNS, TRACE_COLUMNS, output_path, write_bytes, write_csv, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PROBE = 4


def cmd_basins(config, out_dir):
    image = basins.classify_grid(config.function, config.method, config.params, config.grid, threads=config.threads)
    stats = basins.basin_stats(image)
    image_path = write_bytes(output_path(out_dir, config.outputs.image_path), basins.render_ppm(image))
    write_json(
        output_path(out_dir, config.outputs.stats_path),
        {"config": config.to_dict(), "metadata": image.metadata, **stats.to_dict()},
    )
    grid = config.grid
    return (
        f"basins: {grid.nx}x{grid.ny} {config.method}, {len(image.roots)} roots, "
        f"coverage {stats.coverage:.4f} -> {image_path}"
    )


def cmd_voronoi(config, out_dir):
    sites = basins.known_roots(config.function, config.grid)
    image = basins.voronoi_raster(sites, config.grid)
    stats = basins.basin_stats(image)
    image_path = write_bytes(output_path(out_dir, config.outputs.image_path), basins.render_ppm(image))
    write_json(
        output_path(out_dir, config.outputs.stats_path),
        {"config": config.to_dict(), "metadata": image.metadata, **stats.to_dict()},
    )
    return f"voronoi: {len(sites)} sites -> {image_path}"


def _point_row(spec, step, z):
    try:
        jet = eval_jet(spec, z)
        fval, grad_norm = 0.5 * abs(jet.f) ** 2, abs(jet.f) * abs(jet.df)
    except BnqnError:
        fval, grad_norm = math.inf, math.inf
    return {"step": step, "re": z.real, "im": z.imag, "F": fval, "grad_norm": grad_norm}


def cmd_trace(config, out_dir):
    z0 = config.trace.z0
    if config.method == "bnqn":
        trace, outcome = run(z0, config.function, config.params.bnqn)
        rows = [record.to_row(n) for n, record in enumerate(trace)]
        rows.append(_point_row(config.function, len(trace), outcome.z))
    else:
        points, outcome = run_method(config.method, z0, config.function, config.params)
        rows = [_point_row(config.function, n, z) for n, z in enumerate(points)]
    trace_path = write_csv(output_path(out_dir, config.outputs.trace_path), rows, TRACE_COLUMNS)
    write_json(
        trace_path.with_suffix(".json"),
        {"config": config.to_dict(), "outcome": outcome.to_dict(), "rows": len(rows)},
    )
    return f"trace: {config.method} from {z0} -> {outcome.kind.value} after {outcome.iters} steps -> {trace_path}"


def _nearest_root(spec, z):
    if not isinstance(spec, POLYNOMIALS):
        return z
    roots = spec_roots(spec)
    return min(roots, key=lambda r: abs(r - z)) if roots else z


def cmd_rate(config, out_dir):
    settings = config.rate
    points, outcome = run_method(config.method, settings.z0, config.function, config.params)
    if settings.limit is None and outcome.kind is not OutcomeKind.ROOT:
        raise InsufficientTail(f"run ended with {outcome.kind.value}, no root to measure a rate against")
    limit = settings.limit if settings.limit is not None else _nearest_root(config.function, outcome.z)
    estimate = localdyn.contraction_rate(points, limit)
    multiplicity = localdyn.root_multiplicity(config.function, limit)
    try:
        expected = localdyn.expected_rate(config.method, multiplicity, config.params.relaxed.gamma if config.method == "relaxed" else 1.0)
    except ValueError:
        expected = None
    write_json(
        output_path(out_dir, config.outputs.report_path),
        {
            "config": config.to_dict(),
            "ratio": estimate.ratio,
            "superlinear": estimate.superlinear,
            "n_used": estimate.n_used,
            "expected": expected,
            "multiplicity": multiplicity,
            "limit": point_to_list(limit),
            "outcome": outcome.to_dict(),
        },
    )
    shown = "superlinear" if estimate.superlinear else f"{estimate.ratio:.4f}"
    return f"rate: {config.method} ratio {shown} (expected {expected})"


def cmd_local(config, out_dir):
    spec = config.function
    if not isinstance(spec, POLYNOMIALS):
        raise ConfigError("function", "local probes need a polynomial function")
    settings = config.local
    params = config.params.bnqn
    stars = [settings.z_star] if settings.z_star is not None else [c.z for c in critical_points(spec, params.tolerance)]
    probes = []
    failures = []
    for z_star in stars:
        try:
            report = localdyn.bnqn_local_probe(spec, z_star, settings.r0, settings.samples, params, strict=False)
        except ProbeFailed as err:
            failures.extend(err.failures)
            probes.append({"z_star": point_to_list(z_star), "passed": False, "failures": err.failures})
            continue
        sector = localdyn.saddle_sector_probe(spec, z_star, settings.r0, settings.sector_samples, params)
        mismatched = [s for s in sector if s.expected is not None and s.expected is not s.outcome]
        entry = report.to_dict()
        entry["sector"] = [s.to_dict() for s in sector]
        entry["sector_mismatches"] = len(mismatched)
        failures.extend(report.failures)
        failures.extend(f"sector start {s.start} ended {s.outcome.value}, expected {s.expected.value}" for s in mismatched)
        probes.append(entry)
    report_path = write_json(
        output_path(out_dir, config.outputs.report_path),
        {"config": config.to_dict(), "probes": probes, "passed": not failures},
    )
    if failures:
        raise ProbeFailed(failures)
    return f"local: {len(stars)} critical points probed, all assertions hold -> {report_path}"


def cmd_conjugacy(config, out_dir):
    settings = config.conjugacy
    report = conjugacy_check(
        config.function,
        config.params.bnqn,
        settings.z0s,
        settings.c,
        settings.angle,
        settings.steps,
        settings.tolerance,
    )
    report_path = write_json(
        output_path(out_dir, config.outputs.report_path),
        {"config": config.to_dict(), **report.to_dict()},
    )
    if not report.passed:
        raise ProbeFailed([f"max deviation {report.max_deviation:.3e} exceeds {report.tolerance:.1e}"])
    return f"conjugacy: c={settings.c} angle={settings.angle:.6f} pass, max deviation {report.max_deviation:.3e} -> {report_path}"


def cmd_flow(config, out_dir):
    z0 = config.flow_run.z0
    trajectory = newton_flow(config.function, z0, config.params.flow)
    f0 = eval_f(config.function, z0)
    # f(z(t)) = exp(-t) f(z0) holds only along the raw field
    track_drift = config.params.flow.mode is FlowMode.RAW and f0 != 0
    rows = []
    for t, z in trajectory:
        f = eval_f(config.function, z)
        drift = abs(cmath.exp(t) * f / f0 - 1.0) if track_drift else None
        rows.append({"t": t, "re": z.real, "im": z.imag, "abs_f": abs(f), "drift": drift})
    flow_path = write_csv(output_path(out_dir, config.outputs.flow_path), rows, FLOW_COLUMNS)
    write_json(flow_path.with_suffix(".json"), {"config": config.to_dict(), "points": len(rows)})
    end = trajectory[-1][1]
    return f"flow: {len(rows)} points from {z0} to {end} -> {flow_path}"


def cmd_compare(config, out_dir, raw=None):
    raw = raw if raw is not None else config.to_dict()
    runs = []
    for overlay in config.compare.runs:
        run_config = RunConfig.from_dict(merge(raw, overlay))
        image = basins.classify_grid(
            run_config.function, run_config.method, run_config.params, run_config.grid, threads=run_config.threads
        )
        stats = basins.basin_stats(image)
        runs.append({"overlay": dict(overlay), "method": run_config.method, "stats": stats.to_dict()})
    table = pd.DataFrame(
        [
            {
                "method": r["method"],
                "coverage": r["stats"]["coverage"],
                "boundary_adjacency_count": r["stats"]["boundary_adjacency_count"],
                "unresolved_fraction": r["stats"]["unresolved_fraction"],
                "critical_fraction": r["stats"]["critical_fraction"],
                "diverged_fraction": r["stats"]["diverged_fraction"],
                "roots": len(r["stats"]["roots"]),
            }
            for r in runs
        ]
    )
    report_path = write_json(
        output_path(out_dir, config.outputs.report_path),
        {"config": config.to_dict(), "runs": runs, "table": table.to_dict(orient="list")},
    )
    best = table.loc[table["boundary_adjacency_count"].idxmin(), "method"]
    return f"compare: {len(runs)} runs, smoothest boundary {best} -> {report_path}"


COMMANDS = {
    "basins": cmd_basins,
    "voronoi": cmd_voronoi,
    "trace": cmd_trace,
    "local": cmd_local,
    "rate": cmd_rate,
    "conjugacy": cmd_conjugacy,
    "flow": cmd_flow,
    "compare": cmd_compare,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="bnqn", description="Root finding with Backtracking New Q-Newton's method")
    parser.add_argument("command", choices=sorted(COMMANDS), help="what to run")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default=".", help="directory for artifacts (default: current directory)")
    parser.add_argument("--seed", type=int, default=None, help="seed for every random choice")
    parser.add_argument("--threads", type=int, default=None, help="worker processes for grid work")
    parser.add_argument("--preset", choices=sorted(PRESETS), default=None, help="ready-made function and grid")
    parser.add_argument("--method", choices=METHODS, default=None, help="iteration to run")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    return parser


def configure_logging(verbosity):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        raw = load_config(args.config) if args.config else {}
        raw = apply_overrides(raw, method=args.method, seed=args.seed, threads=args.threads, preset=args.preset)
        config = RunConfig.from_dict(raw)
        command = COMMANDS[args.command]
        if command is cmd_compare:
            summary = command(config, args.out, raw)
        else:
            summary = command(config, args.out)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ProbeFailed, InsufficientTail) as err:
        print(f"{args.command}: FAILED {err}", file=sys.stderr)
        return EXIT_PROBE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except Exception:
        logger.exception("%s failed", args.command)
        return EXIT_FAILURE
    print(summary)
    return EXIT_OK
