"""Command-line entry point: ``contactnet {analytic,simulate,experiment,saturation}``.

Every subcommand writes its fully resolved configuration, including the
effective seed, to stderr as one JSON line before doing any work.  Passing
that JSON back with ``--config`` reproduces the run; explicit flags override
values from the file.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.
"""

import argparse
import json
import logging
import math
import os
import sys

from . import __version__
from ._rng import fresh_seed
from .analytic import (
    MEASURE_CONVENTIONS,
    PopulationParams,
    RateParams,
    SpatialParams,
    coresidence_moments,
    edge_probability_fast_limit,
    mean_degree_fast,
    mean_degree_fast_limit,
    psi,
    psi_decomposition,
    saturation_fixed_point,
    slow_fast_ratio,
    slow_mean_degree,
    slow_mean_degree_limit,
    spatial_psi,
)
from .ctmc import INITIAL_GRAPH_RULES, MIGRATION_MODES, SimConfig, simulate
from .experiments import (
    WORKERS_ENV,
    ExperimentDesign,
    builtin_designs,
    default_workers,
    emit_csv,
    emit_plotdata,
    get_design,
    run_design,
)
from .graph_state import read_edgelist, write_edgelist
from .graph_stats import summarize

log = logging.getLogger("contactnet")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
DESK_MAX_N = 800  # builtin designs drop their largest N tier unless --max-N says otherwise


class ConfigError(Exception):
    """Invalid user input; reported with exit code 2."""


# --- parser ------------------------------------------------------------------------


def _common(p):
    p.add_argument("--config", metavar="PATH",
                   help="JSON file of settings; explicit flags override its values")
    p.add_argument("-v", "--verbose", action="count", default=0,
                   help="more log output on stderr (repeatable)")


def _rates(p):
    g = p.add_argument_group("rates (events per unit time)")
    g.add_argument("--rf", type=float, help="tie formation rate per co-focal non-adjacent pair (default 1)")
    g.add_argument("--rl", type=float, help="tie dissolution rate per edge (default 5)")
    g.add_argument("--rm", type=float, help="migration rate per vertex")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="contactnet", allow_abbrev=False,
        description="Contact formation network process: closed forms, simulation "
                    "and reference studies.  Time is measured in units of 1/r_f "
                    "when --rf is left at 1.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("analytic", allow_abbrev=False,
                       help="equilibrium quantities as one JSON document",
                       description="Closed-form equilibrium quantities.  Quantities whose "
                                   "inputs are missing are reported as null.")
    _common(p)
    _rates(p)
    g = p.add_argument_group("population")
    g.add_argument("--N", type=float, help="number of vertices (count)")
    g.add_argument("--P", type=float, help="expected local population N/M (vertices per focus)")
    g.add_argument("--M", type=float, help="number of foci (count); alternative to --P")
    g.add_argument("--t", type=float,
                   help="look-back window for co-residence moments (time units, default 1)")
    g = p.add_argument_group("spatial variant")
    g.add_argument("--V", type=float, help="system volume (length^k)")
    g.add_argument("--v", type=float, help="voxel volume (length^k)")
    g.add_argument("--L", type=float, help="system side length (length); with --l and --k")
    g.add_argument("--l", type=float, help="voxel side length (length)")
    g.add_argument("--k", type=int, help="spatial dimension (count)")
    g.add_argument("--convention", choices=MEASURE_CONVENTIONS,
                   help="how volume factors split between parameter and reference "
                        "measure (default volume)")
    p.add_argument("--out", metavar="PATH", help="write the JSON here instead of stdout")

    p = sub.add_parser("simulate", allow_abbrev=False, help="simulate one trajectory",
                       description="Simulate one trajectory and print the final graph summary as JSON.")
    _common(p)
    _rates(p)
    g = p.add_argument_group("population")
    g.add_argument("--N", type=int, help="number of vertices (count)")
    g.add_argument("--P", type=float,
                   help="expected local population (vertices per focus); M is drawn "
                        "from floor/ceil(N/P) so the mean of N/M is P")
    g.add_argument("--M", type=int, help="number of foci (count); alternative to --P")
    g = p.add_argument_group("run")
    g.add_argument("--horizon", type=float, help="simulated time (time units, default 25)")
    g.add_argument("--migration-mode", choices=MIGRATION_MODES,
                   help="destination law for migrations (default uniform-all)")
    g.add_argument("--initial-graph", choices=INITIAL_GRAPH_RULES,
                   help="seed graph: empty, Bernoulli at the large-N mean degree "
                        "(default), or explicit from --initial-edgelist")
    g.add_argument("--initial-edgelist", metavar="PATH",
                   help="edge-list file ('u v' lines, optional 'foci' line with 1-based ids)")
    g.add_argument("--seed", type=int, help="64-bit RNG seed (default: fresh random, logged)")
    g.add_argument("--d-max", type=int, help="degree cap for the saturated fraction (count)")
    g = p.add_argument_group("output")
    g.add_argument("--out", metavar="PATH", help="summary JSON path (default stdout)")
    g.add_argument("--trajectory", metavar="PATH", help="write the event log as JSON lines")
    g.add_argument("--edgelist", metavar="PATH", help="write the final graph and foci")

    p = sub.add_parser("experiment", allow_abbrev=False, help="run a factorial study",
                       description="Run a builtin study (" + ", ".join(sorted(builtin_designs()))
                                   + "; the prefix before '_' also works) or a design JSON file.")
    _common(p)
    p.add_argument("design", nargs="?", help="builtin design name or path to a design JSON file")
    p.add_argument("--scale", type=float,
                   help="replication multiplier (default 0.1: 1000 -> 100 per cell)")
    p.add_argument("--max-N", type=int, dest="max_N",
                   help="drop cells with more vertices than this (count, default 800)")
    p.add_argument("--seed", type=int, help="master seed (default 1)")
    p.add_argument("--workers", type=int,
                   help=f"worker processes (default ${WORKERS_ENV} or the CPU count); "
                        "results do not depend on it")
    p.add_argument("--out", metavar="DIR", help="output directory (default results)")

    p = sub.add_parser("saturation", allow_abbrev=False, help="degree-capped static model study",
                       description="Metropolis sampling of the degree-capped Bernoulli model "
                                   "over a grid of N, with the Chernoff fixed-point bound.")
    _common(p)
    p.add_argument("--p", type=float, help="tie probability (dimensionless, default 0.12)")
    p.add_argument("--d-max", type=int, help="maximum degree (count, default 12)")
    p.add_argument("--N", type=int, nargs="+",
                   help="vertex counts (default 25 50 100 200 350 500)")
    p.add_argument("--draws", type=int, help="retained draws per N (count, default 50)")
    p.add_argument("--chain-scale", type=float,
                   help="multiplier on burn-in 500*C(N,2) and thinning 250*C(N,2) "
                        "toggles (default 0.1)")
    p.add_argument("--seed", type=int, help="master seed (default 1)")
    p.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or CPUs)")
    p.add_argument("--out", metavar="PATH", help="CSV path (default stdout)")
    return parser


# --- helpers -----------------------------------------------------------------------


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def _overlay(base, args, mapping):
    """Copy non-None flag values onto ``base`` under their config keys."""
    for flag, key in mapping.items():
        val = getattr(args, flag)
        if val is not None:
            base[key] = val
    return base


def _announce(config):
    print(json.dumps(config, sort_keys=True), file=sys.stderr, flush=True)


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _finite_or_none(x):
    return x if x is None or math.isfinite(x) else None


# --- analytic ----------------------------------------------------------------------

_ANALYTIC_FLAGS = {name: name for name in
                   ("rf", "rl", "rm", "N", "P", "M", "t", "V", "v", "L", "l", "k", "convention")}


def analytic_quantities(cfg):
    """Named closed-form quantities for a flat settings dict; missing inputs give None."""
    rates = RateParams(cfg["rf"], cfg["rl"], cfg.get("rm") or 0.0)
    n, p, m = cfg.get("N"), cfg.get("P"), cfg.get("M")
    if p is not None and m is not None:
        raise ValueError("give at most one of P and M")
    if m is not None and n is None:
        raise ValueError("M needs N to define the local population")
    if n is not None and n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    if p is not None and not p > 0:
        raise ValueError(f"P must be positive, got {p}")
    if m is not None:
        p = n / m
    if p is not None and n is not None and p > n:
        raise ValueError(f"P={p} exceeds N={n}")
    if m is None and p is not None and n is not None:
        m = n / p
    pop = PopulationParams(n, m) if n is not None and m is not None else None
    t = cfg.get("t", 1.0)
    if t is None or t < 0:
        raise ValueError(f"t must be >= 0, got {t}")

    out = dict.fromkeys(("mean_degree_exact", "mean_degree_limit", "slow_mean_degree",
                         "psi", "theta_e", "coresidence_mean", "coresidence_var",
                         "edge_prob_fast", "spatial_psi"))
    out["slow_fast_ratio"] = slow_fast_ratio(rates)
    if p is not None:
        out["mean_degree_limit"] = mean_degree_fast_limit(rates, p)
        out["slow_mean_degree"] = slow_mean_degree_limit(rates, p)
        out["theta_e"] = math.log(rates.r_f * p / rates.r_ell)
    if pop is not None:
        if n >= 2:
            out["mean_degree_exact"] = mean_degree_fast(rates, pop)
        out["slow_mean_degree"] = slow_mean_degree(rates, pop)
        out["theta_e"], _ = psi_decomposition(rates, pop)
        out["psi"] = psi(rates, pop)
        out["edge_prob_fast"] = edge_probability_fast_limit(rates, m)
        if rates.r_m > 0:
            out["coresidence_mean"], out["coresidence_var"] = coresidence_moments(rates, m, t)

    spatial = None
    if cfg.get("L") is not None or cfg.get("l") is not None or cfg.get("k") is not None:
        if None in (cfg.get("L"), cfg.get("l"), cfg.get("k")):
            raise ValueError("the hypercube form needs all of L, l and k")
        spatial = SpatialParams.hypercube(cfg["L"], cfg["l"], cfg["k"])
    elif cfg.get("V") is not None or cfg.get("v") is not None:
        if cfg.get("V") is None or cfg.get("v") is None:
            raise ValueError("the spatial variant needs both V and v")
        spatial = SpatialParams(cfg["V"], cfg["v"])
    if spatial is not None:
        convention = cfg.get("convention") or "volume"
        theta, log_h = spatial_psi(rates, spatial, convention)
        out["spatial_psi"] = theta + log_h
        out["spatial_theta_e"] = theta
        out["spatial_log_measure"] = log_h
        out["convention"] = convention
    return {k: _finite_or_none(v) if isinstance(v, float) else v for k, v in out.items()}


def cmd_analytic(args):
    cfg = {"rf": 1.0, "rl": 5.0, "t": 1.0}
    cfg.update(_load_config(args.config))
    _overlay(cfg, args, _ANALYTIC_FLAGS)
    unknown = set(cfg) - set(_ANALYTIC_FLAGS)
    if unknown:
        raise ConfigError(f"unknown analytic settings: {sorted(unknown)}")
    _announce(cfg)
    try:
        result = analytic_quantities(cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    _write_json(result, args.out)


# --- simulate ----------------------------------------------------------------------


def resolve_sim_config(args):
    cfg = {"rates": {"r_f": 1.0, "r_ell": 5.0, "r_m": 0.0}, "horizon": 25.0,
           "migration_mode": "uniform-all", "initial_graph_rule": "bernoulli"}
    file_cfg = _load_config(args.config)
    rates = file_cfg.pop("rates", {})
    cfg.update(file_cfg)
    cfg["rates"] = {**cfg["rates"], **rates}
    for flag, key in (("rf", "r_f"), ("rl", "r_ell"), ("rm", "r_m")):
        if getattr(args, flag) is not None:
            cfg["rates"][key] = getattr(args, flag)
    _overlay(cfg, args, {"N": "n_vertices", "horizon": "horizon",
                         "migration_mode": "migration_mode",
                         "initial_graph": "initial_graph_rule", "seed": "seed"})
    # a focus spec on the command line replaces one from the file
    if args.P is not None:
        cfg.pop("n_foci", None)
        cfg["expected_local_pop"] = args.P
    if args.M is not None:
        cfg.pop("expected_local_pop", None)
        cfg["n_foci"] = args.M
    if args.initial_edgelist is not None:
        try:
            graph, foci = read_edgelist(args.initial_edgelist)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.initial_edgelist}: {exc.strerror}") from exc
        cfg["initial_graph_rule"] = "explicit"
        cfg["initial_edges"] = graph.edges.tolist()
        cfg.setdefault("n_vertices", graph.n_vertices)
        if foci is not None:
            cfg["initial_foci"] = [int(k) + 1 for k in foci]
    if cfg.get("seed") is None:
        cfg["seed"] = fresh_seed()
    if "n_vertices" not in cfg:
        raise ConfigError("N (n_vertices) is required")
    try:
        return SimConfig.from_dict(cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def cmd_simulate(args):
    config = resolve_sim_config(args)
    d_max = args.d_max
    if d_max is not None and d_max < 0:
        raise ConfigError("d-max must be >= 0")
    _announce(config.to_dict())
    record = args.trajectory is not None
    try:
        state, traj = simulate(config, record=record)
    except ValueError as exc:
        # initial-state problems such as foci out of range
        raise ConfigError(str(exc)) from exc
    summary = summarize(state.to_graph(), d_max=d_max).to_dict()
    summary["n_foci"] = state.n_foci
    summary["seed"] = config.seed
    if record:
        traj.dump(args.trajectory)
        log.info("wrote %d events to %s", len(traj), args.trajectory)
    if args.edgelist is not None:
        write_edgelist(args.edgelist, state.to_graph(), state.focus_of)
    _write_json(summary, args.out)


# --- experiment --------------------------------------------------------------------


def resolve_design(args):
    file_cfg = _load_config(args.config)
    name = args.design
    try:
        if name is not None and os.path.isfile(name):
            file_cfg = {**ExperimentDesign.from_json(name).to_dict(), **file_cfg}
            name = None
        if name is not None:
            try:
                base = {**get_design(name).to_dict(), "max_n": DESK_MAX_N}
            except KeyError as exc:
                raise ConfigError(exc.args[0]) from exc
        elif "name" in file_cfg and "N" not in file_cfg:
            base = {**get_design(file_cfg["name"]).to_dict(), "max_n": DESK_MAX_N}
        elif file_cfg:
            base = {}
        else:
            raise ConfigError("give a design name or a design file")
        cfg = {**base, **file_cfg}
        _overlay(cfg, args, {"scale": "scale_factor", "max_N": "max_n", "seed": "master_seed"})
        return ExperimentDesign.from_dict(cfg)
    except KeyError as exc:
        raise ConfigError(f"unknown design {exc.args[0]!r}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _workers(args):
    try:
        w = args.workers if args.workers is not None else default_workers()
    except ValueError as exc:
        raise ConfigError(f"bad ${WORKERS_ENV}: {exc}") from exc
    if w < 1:
        raise ConfigError("workers must be >= 1")
    return w


def _progress(total):
    done = [0]

    def report(res):
        done[0] += 1
        parts = [f"N={res.N}"]
        if res.P is not None:
            parts += [f"P={res.P:g}", f"r_m={res.r_m:g}"]
        a = res.stats.get("mean_degree")
        desc = f"mean_degree {a.mean:.4g} +- {1.96 * a.std_error:.2g}" if a else "no rows"
        fail = f", {len(res.failures)} failed" if res.failures else ""
        print(f"[{done[0]}/{total}] cell {res.cell_id} {' '.join(parts)}: {desc} "
              f"({len(res.rows)} reps{fail})", file=sys.stderr, flush=True)
    return report


def cmd_experiment(args):
    design = resolve_design(args)
    workers = _workers(args)
    out = args.out or "results"
    _announce(design.to_dict())
    cells = design.cells()
    if not cells:
        raise ConfigError("max-N removes every cell of the design")
    log.info("%d cells x %d replications on %d workers", len(cells),
             design.effective_replications, workers)
    results = run_design(design, workers=workers, progress=_progress(len(cells)))
    os.makedirs(out, exist_ok=True)
    csv_path = os.path.join(out, f"{design.name}.csv")
    emit_csv(results, csv_path)
    paths = emit_plotdata(results, os.path.join(out, "plot"), design)
    print(f"wrote {csv_path} and {len(paths)} plot-data files", file=sys.stderr)
    if all(not r.rows for r in results):
        raise RuntimeError("every replication failed")


# --- saturation --------------------------------------------------------------------


def cmd_saturation(args):
    cfg = {"p": 0.12, "d_max": 12, "N": [25, 50, 100, 200, 350, 500], "draws": 50,
           "chain_scale": 0.1, "seed": 1}
    cfg.update(_load_config(args.config))
    _overlay(cfg, args, {k: k for k in ("p", "d_max", "N", "draws", "chain_scale", "seed")})
    unknown = set(cfg) - {"p", "d_max", "N", "draws", "chain_scale", "seed"}
    if unknown:
        raise ConfigError(f"unknown saturation settings: {sorted(unknown)}")
    if not 0 < cfg["p"] < 1:
        raise ConfigError(f"p must lie in (0, 1), got {cfg['p']}")
    if any(n < 2 or not 1 <= cfg["d_max"] <= n - 1 for n in cfg["N"]):
        raise ConfigError("need N >= 2 and 1 <= d_max <= N - 1 for every N")
    if not cfg["chain_scale"] > 0:
        raise ConfigError("chain-scale must be positive")
    try:
        design = ExperimentDesign(
            "saturation", tuple(cfg["N"]), replications=cfg["draws"], kind="saturation",
            statistic="saturated_fraction", master_seed=cfg["seed"], tie_prob=cfg["p"],
            d_max=cfg["d_max"], chain_scale=cfg["chain_scale"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    workers = _workers(args)
    _announce(cfg)
    results = run_design(design, workers=workers, progress=_progress(len(design.cells())))
    failed = [f for r in results for f in r.failures]
    if failed:
        raise RuntimeError("; ".join(msg for _, _, msg in failed))
    lines = ["N,mean_degree,saturated_fraction,chernoff_fixed_point"]
    for res in results:
        s = res.stats
        f = saturation_fixed_point(cfg["p"], cfg["d_max"], res.N)
        lines.append(f"{res.N},{s['mean_degree'].mean!r},{s['saturated_fraction'].mean!r},{f!r}")
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)


COMMANDS = {"analytic": cmd_analytic, "simulate": cmd_simulate,
            "experiment": cmd_experiment, "saturation": cmd_saturation}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"contactnet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        log.debug("traceback", exc_info=True)
        print(f"contactnet {args.command}: runtime error: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
