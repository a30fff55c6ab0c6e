"""Factorial simulation studies: designs, replication, aggregation and output.

A design crosses lists of N, P and r_m.  Each (cell, replication) pair gets
its own random stream derived from ``(master_seed, cell_id, rep)``, so the
rows, and the CSV written from them, do not depend on how many worker
processes ran them or in which order.
"""

import csv
import itertools
import json
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ._rng import stream_seed
from .analytic import (
    PopulationParams,
    RateParams,
    mean_degree_fast,
    mean_degree_fast_limit,
    saturation_fixed_point,
    slow_mean_degree,
)
from .ctmc import SimConfig, run
from .graph_stats import summarize
from .static_samplers import ConstrainedModel, expected_triangles_bernoulli, sample_constrained

__all__ = [
    "ExperimentDesign",
    "ReplicationRow",
    "CellResult",
    "Aggregate",
    "builtin_designs",
    "get_design",
    "run_design",
    "aggregate",
    "emit_csv",
    "read_csv",
    "emit_plotdata",
    "CSV_COLUMNS",
    "WORKERS_ENV",
]

CSV_COLUMNS = (
    "design", "cell_id", "N", "M", "P", "r_m", "r_f", "r_ell", "horizon", "rep", "seed",
    "edges", "mean_degree", "triangles", "saturated_fraction",
    "ref_mean_degree_exact", "ref_mean_degree_limit", "ref_mean_degree_slow",
    "ref_triangles_bernoulli",
)
WORKERS_ENV = "CONTACTNET_WORKERS"
STATISTICS = ("mean_degree", "triangles", "saturated_fraction")
Z95 = 1.96

FULL_N = (50, 100, 200, 400, 800, 1600)
FULL_P = (5, 10, 20, 40)
FULL_RM = (1, 10, 25, 50, 100)
MIGRATION_SWEEP = (1 / 125, 1 / 25, 1 / 5, 1, 5, 25, 125)


@dataclass
class ExperimentDesign:
    """A full factorial study.

    ``kind`` is ``"ctmc"`` (one simulated trajectory per replication) or
    ``"saturation"`` (one degree-capped Metropolis chain per N, thinned into
    ``replications`` draws; ``P`` and ``r_m`` are unused).  ``statistic``
    selects the quantity plotted by :func:`emit_plotdata`.
    """

    name: str
    N: tuple
    P: tuple = ()
    r_m: tuple = ()
    r_f: float = 1.0
    r_ell: float = 5.0
    horizon: float = 25.0
    replications: int = 1000
    scale_factor: float = 1.0
    master_seed: int = 1
    max_n: int | None = None
    kind: str = "ctmc"
    statistic: str = "mean_degree"
    migration_mode: str = "uniform-all"
    tie_prob: float = 0.12
    d_max: int = 12
    chain_scale: float = 0.1

    def __post_init__(self):
        self.N = tuple(int(n) for n in self.N)
        self.P = tuple(float(p) for p in self.P)
        self.r_m = tuple(float(r) for r in self.r_m)
        self.horizon = float(self.horizon)
        self.validate()

    def validate(self):
        if self.kind not in ("ctmc", "saturation"):
            raise ValueError(f"design kind must be 'ctmc' or 'saturation', got {self.kind!r}")
        if self.statistic not in STATISTICS:
            raise ValueError(f"statistic must be one of {STATISTICS}")
        if not self.N:
            raise ValueError("design needs at least one N value")
        grids = {"N": self.N}
        if self.kind == "ctmc":
            if not self.P or not self.r_m:
                raise ValueError("ctmc designs need P and r_m grids")
            grids.update(P=self.P, r_m=self.r_m)
            RateParams(self.r_f, self.r_ell)
            if not self.horizon >= 0:
                raise ValueError("horizon must be >= 0")
        for name, values in grids.items():
            if any(not x > 0 for x in values):
                raise ValueError(f"all {name} grid values must be positive")
        if self.kind == "ctmc":
            for n, p in itertools.product(self.N, self.P):
                if p > n:
                    raise ValueError(f"P={p} exceeds N={n}")
        if not self.scale_factor > 0:
            raise ValueError("scale_factor must be positive")
        if self.effective_replications < 2:
            raise ValueError("need at least 2 replications per cell for a confidence interval")

    @property
    def effective_replications(self):
        return int(round(self.replications * self.scale_factor))

    def full_cells(self):
        """Every cell of the unfiltered grid as ``(cell_id, N, P, r_m)``.

        Cell ids index the full grid, so truncating with ``max_n`` leaves the
        surviving cells' ids and random streams unchanged.
        """
        if self.kind == "saturation":
            return [(i, n, None, None) for i, n in enumerate(self.N)]
        grid = itertools.product(self.N, self.P, self.r_m)
        return [(i, n, p, r) for i, (n, p, r) in enumerate(grid)]

    def cells(self):
        return [c for c in self.full_cells() if self.max_n is None or c[1] <= self.max_n]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown design fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def builtin_designs(scale_factor=0.1, max_n=None, master_seed=1):
    """The four reference studies.

    At ``scale_factor=1`` the grids and replication counts are the full
    reference protocol; the default runs a tenth of the replications.
    """
    common = dict(scale_factor=scale_factor, max_n=max_n, master_seed=master_seed)
    return {
        "figure2_convergence": ExperimentDesign(
            "figure2_convergence", FULL_N, FULL_P, FULL_RM, **common),
        "figure3_migration": ExperimentDesign(
            "figure3_migration", (500,), (5, 10, 20), MIGRATION_SWEEP, **common),
        "figure4_triangles": ExperimentDesign(
            "figure4_triangles", FULL_N, FULL_P, FULL_RM, statistic="triangles", **common),
        "figure1_saturation": ExperimentDesign(
            "figure1_saturation", (25, 50, 100, 200, 350, 500), replications=500,
            kind="saturation", statistic="saturated_fraction", **common),
    }


def get_design(name, **kw):
    """Look up a builtin design by full name or by its prefix (``figure3``)."""
    designs = builtin_designs(**kw)
    if name in designs:
        return designs[name]
    hits = [k for k in designs if k.split("_")[0] == name]
    if len(hits) == 1:
        return designs[hits[0]]
    raise KeyError(f"unknown design {name!r}; choose from {sorted(designs)}")


# --- rows and cells ------------------------------------------------------------------


@dataclass
class ReplicationRow:
    design: str
    cell_id: int
    N: int
    M: int | None
    P: float | None
    r_m: float | None
    r_f: float | None
    r_ell: float | None
    horizon: float | None
    rep: int
    seed: int
    edges: int
    mean_degree: float
    triangles: int
    saturated_fraction: float | None = None
    ref_mean_degree_exact: float | None = None
    ref_mean_degree_limit: float | None = None
    ref_mean_degree_slow: float | None = None
    ref_triangles_bernoulli: float | None = None


@dataclass(frozen=True)
class Aggregate:
    mean: float
    std_error: float
    n: int

    @property
    def ci(self):
        return self.mean - Z95 * self.std_error, self.mean + Z95 * self.std_error

    def contains(self, x):
        lo, hi = self.ci
        return lo <= x <= hi

    def overlaps(self, other):
        """CI overlap with another aggregate or with a point value."""
        lo, hi = self.ci
        if isinstance(other, Aggregate):
            olo, ohi = other.ci
            return lo <= ohi and olo <= hi
        return self.contains(other)


@dataclass
class CellResult:
    design: str
    cell_id: int
    N: int
    P: float | None
    r_m: float | None
    references: dict
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def m_distribution(self):
        return Counter(r.M for r in self.rows)

    @property
    def stats(self):
        return aggregate(self.rows)


def aggregate(rows):
    """Mean, standard error and count per statistic over ``rows``.

    Statistics absent from every row are omitted.  The 95% interval is the
    normal approximation ``mean +- 1.96 SE``; fewer than two values give an
    infinite SE.
    """
    out = {}
    for name in STATISTICS:
        vals = np.array([getattr(r, name) for r in rows if getattr(r, name) is not None],
                        dtype=np.float64)
        if len(vals) == 0:
            continue
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.inf
        out[name] = Aggregate(float(vals.mean()), se, len(vals))
    return out


def cell_references(design, n, p):
    if design.kind == "saturation":
        f = saturation_fixed_point(design.tie_prob, design.d_max, n)
        return {"saturated_fraction_bound": 1.0 - f}
    rates = RateParams(design.r_f, design.r_ell)
    pop = PopulationParams.from_local_pop(n, p)
    exact = mean_degree_fast(rates, pop)
    return {
        "ref_mean_degree_exact": exact,
        "ref_mean_degree_limit": mean_degree_fast_limit(rates, p),
        "ref_mean_degree_slow": slow_mean_degree(rates, pop),
        "ref_triangles_bernoulli": expected_triangles_bernoulli(n, exact / (n - 1)),
    }


# --- execution -----------------------------------------------------------------------


def _run_ctmc_reps(design, cell, reps):
    cell_id, n, p, r_m = cell
    refs = cell_references(design, n, p)
    rates = RateParams(design.r_f, design.r_ell, r_m)
    rows, failures = [], []
    for rep in reps:
        seed = stream_seed(design.master_seed, cell_id, rep)
        try:
            config = SimConfig(n, rates, expected_local_pop=p, horizon=design.horizon,
                               migration_mode=design.migration_mode, seed=seed)
            summary, m, _ = run(config)
        except Exception as exc:  # reported, never fatal to the design
            failures.append((cell_id, rep, f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(ReplicationRow(
            design.name, cell_id, n, m, p, r_m, design.r_f, design.r_ell, design.horizon,
            rep, seed, summary.edge_count, summary.mean_degree, summary.triangle_count,
            **refs,
        ))
    return rows, failures


def _run_saturation_cell(design, cell):
    cell_id, n, _, _ = cell
    seed = stream_seed(design.master_seed, cell_id, 0)
    reps = design.effective_replications
    try:
        model = ConstrainedModel(n, design.tie_prob, design.d_max, scale=design.chain_scale)
        draws = sample_constrained(model, reps, seed=seed)
    except Exception as exc:
        return [], [(cell_id, 0, f"{type(exc).__name__}: {exc}")]
    rows = []
    for rep, g in enumerate(draws):
        s = summarize(g, d_max=design.d_max)
        rows.append(ReplicationRow(
            design.name, cell_id, n, None, None, None, None, None, None,
            rep, seed, s.edge_count, s.mean_degree, s.triangle_count, s.saturated_fraction,
        ))
    return rows, []


def _work(design, cell, reps):
    if design.kind == "saturation":
        return cell[0], _run_saturation_cell(design, cell)
    return cell[0], _run_ctmc_reps(design, cell, reps)


def default_workers():
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _tasks(design, chunk):
    reps = design.effective_replications
    for cell in design.cells():
        if design.kind == "saturation":
            yield cell, range(0)
        else:
            for start in range(0, reps, chunk):
                yield cell, range(start, min(reps, start + chunk))


def run_design(design, workers=None, progress=None, chunk=25):
    """Run every cell of ``design``; returns :class:`CellResult` objects in cell order.

    ``progress``, if given, is called as ``progress(cell_result)`` once each
    cell has all its replications.  Failed replications are recorded on the
    cell and skipped.
    """
    design.validate()
    workers = default_workers() if workers is None else int(workers)
    cells = design.cells()
    results = {
        c[0]: CellResult(design.name, c[0], c[1], c[2], c[3], cell_references(design, c[1], c[2]))
        for c in cells
    }
    pending = Counter()
    tasks = list(_tasks(design, chunk))
    for cell, _ in tasks:
        pending[cell[0]] += 1

    def collect(cell_id, out):
        rows, failures = out
        res = results[cell_id]
        res.rows.extend(rows)
        res.failures.extend(failures)
        pending[cell_id] -= 1
        if pending[cell_id] == 0:
            res.rows.sort(key=lambda r: r.rep)
            res.failures.sort()
            if progress is not None:
                progress(res)

    if workers <= 1 or len(tasks) <= 1:
        for cell, reps in tasks:
            collect(*_work(design, cell, reps))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_work, design, cell, reps) for cell, reps in tasks]
            for fut in futures:
                collect(*fut.result())
    return [results[c[0]] for c in cells]


# --- output --------------------------------------------------------------------------


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def emit_csv(results, path):
    """Write all replication rows; failures follow as ``#`` comment lines."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for res in results:
                for row in res.rows:
                    w.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
            for res in results:
                for cell_id, rep, msg in res.failures:
                    fh.write(f"# failed design={res.design} cell_id={cell_id} rep={rep}: {msg}\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results to {path}: {exc.strerror}") from exc


_INT_COLUMNS = {"cell_id", "N", "M", "rep", "seed", "edges", "triangles"}


def read_csv(path):
    """Parse a CSV written by :func:`emit_csv` back into :class:`ReplicationRow` objects."""
    rows = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
    for rec in reader:
        kw = {}
        for k, v in rec.items():
            if k == "design":
                kw[k] = v
            elif v == "":
                kw[k] = None
            elif k in _INT_COLUMNS:
                kw[k] = int(v)
            else:
                kw[k] = float(v)
        rows.append(ReplicationRow(**kw))
    return rows


def _write_series(path, title, columns, data):
    try:
        with open(path, "w") as fh:
            fh.write(f"# {title}: " + "\t".join(columns) + "\n")
            for rec in data:
                fh.write("\t".join(_fmt(x) for x in rec) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write plot data to {path}: {exc.strerror}") from exc
    return path


def _num(x):
    return f"{x:g}"


def emit_plotdata(results, outdir, design=None):
    """Write one tab-separated file per plotted series and return their paths.

    ``ctmc`` designs with a single N are plotted against r_m (with
    ``log10(r_m)`` as an extra column), all others against N.  Reference
    curves from the closed-form results go in files named ``*_ref_*``.
    """
    results = list(results)
    if not results:
        return []
    os.makedirs(outdir, exist_ok=True)
    name = results[0].design
    stat = design.statistic if design is not None else _guess_statistic(results)
    written = []

    def path(tag):
        return os.path.join(outdir, f"{name}_{tag}.tsv")

    if results[0].P is None:
        # saturation study: one chain per N
        by_n = sorted(results, key=lambda r: r.N)
        for s in ("mean_degree", "saturated_fraction"):
            data = []
            for res in by_n:
                a = res.stats.get(s)
                if a is not None:
                    data.append((res.N, a.mean, *a.ci))
            written.append(_write_series(path(s), s, ("N", s, "ci_low", "ci_high"), data))
        data = [(r.N, r.references["saturated_fraction_bound"]) for r in by_n]
        written.append(_write_series(path("ref_saturated_fraction_bound"),
                                     "saturated fraction lower bound",
                                     ("N", "saturated_fraction_bound"), data))
        return written

    n_values = sorted({r.N for r in results})
    against_rm = len(n_values) == 1
    if against_rm:
        for p in sorted({r.P for r in results}):
            cells = sorted((r for r in results if r.P == p), key=lambda r: r.r_m)
            data = []
            for res in cells:
                a = res.stats.get(stat)
                if a is not None:
                    data.append((res.r_m, math.log10(res.r_m), a.mean, *a.ci))
            written.append(_write_series(
                path(f"P{_num(p)}"), f"{stat} P={_num(p)} N={n_values[0]}",
                ("r_m", "log10_r_m", stat, "ci_low", "ci_high"), data))
            ref = cells[0].references
            if stat == "mean_degree":
                keys = ("ref_mean_degree_slow", "ref_mean_degree_exact")
            else:
                keys = ("ref_triangles_bernoulli",)
            for key in keys:
                data = [(r.r_m, math.log10(r.r_m), ref[key]) for r in cells]
                written.append(_write_series(
                    path(f"P{_num(p)}_{key}"), f"{key} P={_num(p)}",
                    ("r_m", "log10_r_m", key), data))
        return written

    combos = sorted({(r.P, r.r_m) for r in results})
    for p, r_m in combos:
        cells = sorted((r for r in results if (r.P, r.r_m) == (p, r_m)), key=lambda r: r.N)
        data = []
        for res in cells:
            a = res.stats.get(stat)
            if a is not None:
                data.append((res.N, a.mean, *a.ci))
        written.append(_write_series(
            path(f"P{_num(p)}_rm{_num(r_m)}"), f"{stat} P={_num(p)} r_m={_num(r_m)}",
            ("N", stat, "ci_low", "ci_high"), data))
    keys = (("ref_mean_degree_exact", "ref_mean_degree_limit") if stat == "mean_degree"
            else ("ref_triangles_bernoulli",))
    for p in sorted({r.P for r in results}):
        cells = {r.N: r for r in results if r.P == p}
        for key in keys:
            data = [(n, cells[n].references[key]) for n in sorted(cells)]
            written.append(_write_series(path(f"P{_num(p)}_{key}"), f"{key} P={_num(p)}",
                                         ("N", key), data))
    return written


def _guess_statistic(results):
    return "saturated_fraction" if results[0].P is None else "mean_degree"
