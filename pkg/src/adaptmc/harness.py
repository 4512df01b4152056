"""Monte Carlo sweeps that write one CSV row per trial plus one
aggregate row per grid point.

Per-trial seeds come from ``SeedSequence([base_seed, grid_index, trial])``
so a sweep is reproducible regardless of how trials are scheduled.
"""

import csv
import io
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .approximation import adaptive_approximate, passive_approximate, passive_entry_sample
from .completion import adaptive_complete
from .config import resolve_output
from .instances import InstanceSpec, make_low_rank, make_lower_bound_instance
from .metrics import error_report
from .oracle import EntryOracle
from .sampling import InvalidArgument
from .subspace import projection_check_setup, projection_trial

CSV_FIELDS = (
    "experiment", "d", "n", "r", "mu0_target", "mu0_realized", "column_mu",
    "m", "p", "m1", "m2", "trial", "seed", "raw_queries", "unique_entries",
    "frob_error", "spectral_error", "excess_eps", "exact_success", "wall_ms",
)
# trailing columns for the rescaled axes and per-kind extras
EXTRA_FIELDS = (
    "method", "eps_over_sqrt_r", "eps_sqrt_p", "p_over_rlogr", "p_over_mu0",
    "delta", "note",
)
HEADER = CSV_FIELDS + EXTRA_FIELDS
AGG = "agg"
_MEAN_FIELDS = (
    "mu0_realized", "column_mu", "raw_queries", "unique_entries", "frob_error",
    "spectral_error", "excess_eps", "exact_success", "wall_ms", "eps_over_sqrt_r",
    "eps_sqrt_p",
)


def derive_seed(base_seed, grid_index, trial):
    ss = np.random.SeedSequence([int(base_seed), int(grid_index), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _fmt(v):
    if v is None or v == "":
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def _rescaled_axes(p, r, mu0):
    rl = r * math.log(r) if r > 1 else float("nan")
    return {
        "p_over_rlogr": p / rl if r > 1 else "",
        "p_over_mu0": p / mu0,
    }


# -- trial workers (top level so they pickle) ------------------------------

def _completion_trial(task):
    cfg, gi, point, trial = task
    seed = derive_seed(cfg.base_seed, gi, trial)
    d, n, r, mu0, m = point
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    spec = InstanceSpec(d, n, r, mu0, cfg.row_mode, cfg.column_norm_mode, cfg.noise_sigma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        inst = make_low_rank(spec, rng)
    oracle = EntryOracle(inst.matrix)
    res = adaptive_complete(oracle, m, tau_rel=cfg.tau_rel, rng=rng)
    known = 0.0 if cfg.noise_sigma == 0 and inst.true_rank <= r else None
    rep = error_report(inst.matrix, res.estimate, r, best_rank_r_error=known)
    wall = (time.perf_counter() - t0) * 1e3
    p = m / d
    row = {
        "experiment": "complete", "d": d, "n": n, "r": r, "mu0_target": mu0,
        "mu0_realized": inst.realized_mu0, "column_mu": inst.realized_column_mu,
        "m": m, "p": p, "m1": "", "m2": "", "trial": trial, "seed": seed,
        "raw_queries": res.raw_queries, "unique_entries": res.unique_entries_observed,
        "frob_error": rep.frob_error, "spectral_error": rep.spectral_error,
        "excess_eps": rep.excess_risk_eps, "exact_success": rep.exact_success,
        "wall_ms": wall, "method": "adaptive", "delta": "", "note": "",
        "eps_over_sqrt_r": "", "eps_sqrt_p": "",
    }
    row.update(_rescaled_axes(p, r, mu0))
    return [(gi, 0, trial, row)]


def _approx_trial(task):
    cfg, gi, point, trial = task
    seed = derive_seed(cfg.base_seed, gi, trial)
    d, n, r, mu0, norm_mode, p = point
    rng = np.random.default_rng(seed)
    spec = InstanceSpec(d, n, r, mu0, cfg.row_mode, norm_mode, cfg.noise_sigma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        inst = make_low_rank(spec, rng)
    X = inst.matrix
    total = max(1, min(d, int(round(p * d))))
    m1 = cfg.m1 if cfg.m1 > 0 else max(1, int(round(cfg.m1_frac * total)))
    m2 = max(1, total - m1)
    svals = np.linalg.svd(X, compute_uv=False)
    best = float(np.sqrt(np.sum(svals[r:] ** 2)))
    methods = cfg.methods or ["adaptive"]
    # one stream per method; every method sees the same instance
    streams = rng.spawn(len(methods))
    out = []
    for k, method in enumerate(methods):
        t0 = time.perf_counter()
        oracle = EntryOracle(X)
        alg_rng = streams[k]
        if method == "adaptive":
            res = adaptive_approximate(oracle, m1, m2, r, alg_rng)
            mm1, mm2 = m1, m2
        elif method == "passive":
            res = passive_approximate(oracle, total, r, alg_rng)
            mm1, mm2 = 0, total
        else:
            raise InvalidArgument(f"unknown method {method!r}")
        rep = error_report(X, res.x_hat, r, best_rank_r_error=best)
        wall = (time.perf_counter() - t0) * 1e3
        p_eff = res.raw_queries / (d * n)
        row = {
            "experiment": "approx", "d": d, "n": n, "r": r, "mu0_target": mu0,
            "mu0_realized": inst.realized_mu0, "column_mu": inst.realized_column_mu,
            "m": total, "p": p, "m1": mm1, "m2": mm2, "trial": trial, "seed": seed,
            "raw_queries": res.raw_queries, "unique_entries": res.unique_entries_observed,
            "frob_error": rep.frob_error, "spectral_error": rep.spectral_error,
            "excess_eps": rep.excess_risk_eps, "exact_success": rep.exact_success,
            "wall_ms": wall, "method": method,
            "eps_over_sqrt_r": rep.excess_risk_eps / math.sqrt(r),
            "eps_sqrt_p": rep.excess_risk_eps * math.sqrt(p),
            "delta": "", "note": f"p_realized={p_eff!r}",
        }
        row.update(_rescaled_axes(p, r, mu0))
        out.append((gi, k, trial, row))
    return out


def _bounds_trial(task):
    cfg, gi, point, trial = task
    seed = derive_seed(cfg.base_seed, gi, trial)
    d, r, mu0, m, delta = point
    t0 = time.perf_counter()
    sizes, params = projection_check_setup(d, r, mu0, m, delta)
    held, ratio = projection_trial(d, sizes, params, m, np.random.default_rng(seed))
    row = {
        "experiment": "validate-bounds", "d": d, "n": "", "r": r, "mu0_target": mu0,
        "mu0_realized": (d / r) / min(sizes), "column_mu": "", "m": m, "p": m / d,
        "m1": "", "m2": "", "trial": trial, "seed": seed, "raw_queries": m,
        "unique_entries": "", "frob_error": "", "spectral_error": "",
        "excess_eps": ratio, "exact_success": held,
        "wall_ms": (time.perf_counter() - t0) * 1e3, "method": "sandwich",
        "eps_over_sqrt_r": "", "eps_sqrt_p": "", "p_over_rlogr": "", "p_over_mu0": "",
        "delta": delta, "note": f"target={1 - 4 * delta!r}",
    }
    return [(gi, 0, trial, row)]


def _lowerbound_trial(task):
    cfg, gi, point, trial = task
    seed = derive_seed(cfg.base_seed, gi, trial)
    d, n, r, mu0, method, knob = point
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    inst = make_lower_bound_instance(d, n, r, mu0, rng)
    X = inst.matrix
    oracle = EntryOracle(X)
    if method == "passive":
        budget = max(1, int(round(knob * d * n)))
        est = passive_entry_sample(oracle, budget, r, rng)
        m, note = "", f"budget_frac={knob!r}"
        p = knob
    else:
        est = adaptive_complete(oracle, int(knob), tau_rel=cfg.tau_rel, rng=rng).estimate
        m, note = int(knob), f"ledger_cap={d * r + n * int(knob)}"
        p = m / d
    led = oracle.snapshot_ledger()
    rep = error_report(X, est, r, best_rank_r_error=0.0)
    row = {
        "experiment": "lowerbound", "d": d, "n": n, "r": r, "mu0_target": mu0,
        "mu0_realized": inst.realized_mu0, "column_mu": inst.realized_column_mu,
        "m": m, "p": p, "m1": "", "m2": "", "trial": trial,
        "seed": seed, "raw_queries": led.raw_queries, "unique_entries": led.unique_entries,
        "frob_error": rep.frob_error, "spectral_error": rep.spectral_error,
        "excess_eps": rep.excess_risk_eps, "exact_success": rep.exact_success,
        "wall_ms": (time.perf_counter() - t0) * 1e3, "method": method,
        "eps_over_sqrt_r": "", "eps_sqrt_p": "", "p_over_rlogr": "", "p_over_mu0": "",
        "delta": "", "note": note,
    }
    return [(gi, 0, trial, row)]


# -- grids -----------------------------------------------------------------

def _m_values(cfg, d):
    if cfg.m_grid:
        return [int(m) for m in cfg.m_grid]
    if cfg.p_grid:
        return [max(1, min(d, int(round(p * d)))) for p in cfg.p_grid]
    return [cfg.m]


def completion_points(cfg):
    pts = []
    for n in cfg.n_grid or [cfg.n]:
        d = n if cfg.square else cfg.d
        for r in cfg.r_grid or [cfg.r]:
            for mu0 in cfg.mu0_grid or [cfg.mu0]:
                for m in _m_values(cfg, d):
                    if not 1 <= m <= d:
                        raise InvalidArgument(f"m={m} outside [1, d={d}]")
                    pts.append((d, n, r, mu0, m))
    return pts


def approx_points(cfg):
    d, n = (cfg.n, cfg.n) if cfg.square else (cfg.d, cfg.n)
    pts = []
    for norm in cfg.norm_modes or [cfg.column_norm_mode]:
        for r in cfg.r_grid or [cfg.r]:
            for p in cfg.p_grid:
                pts.append((d, n, r, cfg.mu0, norm, p))
    return pts


def bounds_points(cfg):
    return [
        (cfg.d, cfg.r, cfg.mu0, m, delta)
        for delta in cfg.delta_grid or [cfg.delta]
        for m in _m_values(cfg, cfg.d)
    ]


def lowerbound_points(cfg):
    d, n, r = cfg.d, cfg.n, cfg.r
    mu0 = d / (r * cfg.block) if cfg.block else cfg.mu0
    pts = [(d, n, r, mu0, "passive", f) for f in cfg.budget_fracs or [0.3]]
    pts += [(d, n, r, mu0, "adaptive", m) for m in _m_values(cfg, d)]
    return pts


# -- driver ----------------------------------------------------------------

def _run(cfg, points, worker, skip=None):
    tasks = []
    skipped = {}
    for gi, point in enumerate(points):
        reason = skip(point) if skip else None
        if reason:
            skipped[gi] = (point, reason)
            continue
        tasks.extend((cfg, gi, point, t) for t in range(cfg.trials))
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(worker, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    else:
        chunks = [worker(t) for t in tasks]
    keyed = sorted((item for chunk in chunks for item in chunk), key=lambda x: x[:3])
    rows = []
    by_point = {}
    for gi, k, _, row in keyed:
        by_point.setdefault((gi, k), []).append(row)
    for gi in range(len(points)):
        if gi in skipped:
            rows.append(_skipped_row(cfg, skipped[gi]))
            continue
        for k in sorted(k for (g, k) in by_point if g == gi):
            trial_rows = by_point[(gi, k)]
            rows.extend(trial_rows)
            rows.append(aggregate(trial_rows, cfg.base_seed))
    return rows


def _skipped_row(cfg, item):
    point, reason = item
    d, r, mu0, m, delta = point
    row = {f: "" for f in HEADER}
    row.update({
        "experiment": "validate-bounds", "d": d, "r": r, "mu0_target": mu0, "m": m,
        "p": m / d, "trial": AGG, "seed": cfg.base_seed, "delta": delta,
        "method": "sandwich", "note": f"skipped: {reason}",
    })
    return row


def aggregate(trial_rows, base_seed):
    """Grid-point summary: means of numeric fields, success rate in
    ``exact_success``, binomial standard error in ``note``."""
    agg = dict(trial_rows[0])
    agg["trial"] = AGG
    agg["seed"] = base_seed
    for f in _MEAN_FIELDS:
        vals = [r[f] for r in trial_rows if r[f] != ""]
        agg[f] = float(np.mean([float(v) for v in vals])) if vals else ""
    rate = agg["exact_success"]
    k = len(trial_rows)
    se = math.sqrt(rate * (1 - rate) / k) if rate != "" else ""
    agg["note"] = f"trials={k};success_se={se!r}"
    return agg


def run_completion_sweep(cfg):
    return _run(cfg, completion_points(cfg), _completion_trial)


def run_approx_sweep(cfg):
    return _run(cfg, approx_points(cfg), _approx_trial)


def _bounds_skip(point):
    d, r, mu0, m, delta = point
    try:
        projection_check_setup(d, r, mu0, m, delta)
    except InvalidArgument as exc:
        return str(exc)
    return None


def run_bounds_validation(cfg):
    return _run(cfg, bounds_points(cfg), _bounds_trial, skip=_bounds_skip)


def run_lowerbound_demo(cfg):
    return _run(cfg, lowerbound_points(cfg), _lowerbound_trial)


RUNNERS = {
    "complete-sweep": run_completion_sweep,
    "approx-sweep": run_approx_sweep,
    "bounds-validate": run_bounds_validation,
    "lowerbound-demo": run_lowerbound_demo,
    "single-run": run_completion_sweep,
}


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=HEADER, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({f: _fmt(row.get(f, "")) for f in HEADER})
    return buf.getvalue()


def write_csv(rows, path):
    path = resolve_output(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(rows_to_csv(rows))
    except OSError as exc:
        raise InvalidArgument(f"cannot write {path}: {exc}") from None
    return path


def run_experiment(cfg):
    rows = RUNNERS[cfg.kind](cfg)
    return rows, write_csv(rows, cfg.output)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def strip_wall_time(text):
    """CSV text with the wall-time column blanked, for reproducibility checks."""
    out = []
    for line in text.splitlines():
        cells = next(csv.reader([line]))
        if len(cells) == len(HEADER) and cells[HEADER.index("wall_ms")] != "wall_ms":
            cells[HEADER.index("wall_ms")] = ""
        out.append(cells)
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(out)
    return buf.getvalue()


# -- summaries -------------------------------------------------------------

def aggregate_rows(rows):
    return [r for r in rows if r["trial"] == AGG and not r.get("note", "").startswith("skipped")]


def success_curve(rows, key=("d", "n", "r", "mu0_target"), x="m", method=None):
    """``{group: [(x, success_rate), ...]}`` from aggregate rows."""
    curves = {}
    for row in aggregate_rows(rows):
        if method and row.get("method") != method:
            continue
        g = tuple(row[k] for k in key)
        curves.setdefault(g, []).append((float(row[x]), float(row["exact_success"])))
    return {g: sorted(v) for g, v in curves.items()}


def threshold_crossing(curve, target=0.9):
    """Smallest x at which the (x, rate) curve reaches ``target``, linearly
    interpolated against the previous grid point. NaN if never reached."""
    prev = None
    for x, y in curve:
        if y >= target:
            if prev is None or prev[1] >= target:
                return float(x)
            x0, y0 = prev
            return float(x0 + (target - y0) * (x - x0) / (y - y0))
        prev = (x, y)
    return float("nan")


def _num(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return float("nan")


def locate_threshold(cfg, target=0.9, coarse=None, fine_points=8):
    """Coarse-to-fine search for the smallest m reaching ``target`` success.

    Runs ``cfg`` (a complete-sweep config at a single (n, r, mu0) point)
    over a geometric coarse grid, then over an evenly spaced fine grid
    inside the bracketing interval. Returns ``(m_star, rows)``; m_star is
    linearly interpolated on the fine curve, NaN if never reached.
    """
    d = cfg.n if cfg.square else cfg.d
    if coarse is None:
        coarse = sorted({min(d, 2 ** k) for k in range(1, int(math.log2(d)) + 2)})
    base = cfg.replace(kind="complete-sweep", p_grid=[], n_grid=[], r_grid=[], mu0_grid=[])
    rows = run_completion_sweep(base.replace(m_grid=list(coarse)))
    curve = next(iter(success_curve(rows).values()))
    hi = next((x for x, y in curve if y >= target), None)
    if hi is None:
        return float("nan"), rows
    lo = max([x for x, y in curve if x < hi] or [1.0])
    fine = sorted({int(round(v)) for v in np.linspace(lo, hi, fine_points + 2)})
    # a separate seed block keeps the fine pass independent of the coarse one
    fine_rows = run_completion_sweep(base.replace(m_grid=fine, base_seed=base.base_seed + 1))
    curve = next(iter(success_curve(fine_rows).values()))
    m_star = threshold_crossing(curve, target)
    # the fine pass draws fresh seeds and may fall short even at hi
    if math.isnan(m_star):
        m_star = float(hi)
    return m_star, rows + fine_rows


def summary_table(rows):
    lines = [
        f"{'experiment':<16}{'method':<10}{'d':>6}{'n':>6}{'r':>4}{'mu0':>7}{'m':>6}"
        f"{'p':>8}{'success':>9}{'+-se':>8}{'unique':>11}{'eps':>11}"
    ]
    for row in aggregate_rows(rows):
        rate = _num(row["exact_success"])
        note = str(row.get("note", ""))
        k = int(note.split("trials=")[1].split(";")[0]) if "trials=" in note else 0
        se = math.sqrt(rate * (1 - rate) / k) if k else float("nan")
        lines.append(
            f"{row['experiment']:<16}{row['method']:<10}{row['d']:>6}{row['n'] or '-':>6}"
            f"{row['r']:>4}{_num(row['mu0_target']):>7.3g}{row['m'] or '-':>6}"
            f"{_num(row['p']):>8.3f}{rate:>9.3f}{se:>8.3f}"
            f"{_num(row['unique_entries']):>11.1f}{_num(row['excess_eps']):>11.4g}"
        )
    return "\n".join(lines)


PLOT_KINDS = ("completion", "approx", "bounds", "lowerbound")

_PLOT_HEAD = '''"""Generated plotting script; reads CSVs written by adaptmc."""
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

CSV_PATHS = {paths!r}
OUT = {out!r}


def load():
    rows = []
    for path in CSV_PATHS:
        with open(path, newline="") as fh:
            rows.extend(r for r in csv.DictReader(fh) if r["trial"] == "agg")
    return rows


def fnum(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return float("nan")


rows = load()
curves = defaultdict(list)
for r in rows:
    if not r.get("note", "").startswith("skipped"):
        curves[tuple(r[k] for k in {group!r})].append((fnum(r[{x!r}]), fnum(r[{y!r}])))

fig, ax = plt.subplots(figsize=(5, 4))
for label, pts in sorted(curves.items()):
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=" ".join(label))
ax.set_xlabel({xlabel!r})
ax.set_ylabel({ylabel!r})
if curves:
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else OUT)
'''

_PLOTS = {
    "completion": [
        ("success_vs_p", ("n", "r", "mu0_target"), "p", "exact_success", "p = m/d", "P(exact recovery)"),
        ("success_vs_m", ("n", "r", "mu0_target"), "m", "exact_success", "samples per column m", "P(exact recovery)"),
        ("success_vs_p_over_rlogr", ("n", "r", "mu0_target"), "p_over_rlogr", "exact_success", "p / (r log r)", "P(exact recovery)"),
        ("success_vs_p_over_mu0", ("n", "r", "mu0_target"), "p_over_mu0", "exact_success", "p / mu0", "P(exact recovery)"),
    ],
    "approx": [
        ("eps_vs_p", ("method", "column_mu", "r", "n"), "p", "excess_eps", "p", "excess risk eps"),
        ("eps_over_sqrt_r_vs_p", ("method", "r", "n"), "p", "eps_over_sqrt_r", "p", "eps / sqrt(r)"),
        ("eps_sqrt_p_vs_p", ("method", "r", "n"), "p", "eps_sqrt_p", "p", "sqrt(p) eps"),
    ],
    "bounds": [
        ("coverage_vs_m", ("d", "r", "delta"), "m", "exact_success", "m", "sandwich coverage"),
    ],
    "lowerbound": [
        ("success_vs_unique", ("method",), "unique_entries", "exact_success", "unique entries observed", "P(exact recovery)"),
    ],
}


def emit_plot_scripts(csv_paths, kind, outdir):
    """Write one standalone matplotlib script per figure for ``kind``."""
    if kind not in _PLOTS:
        raise InvalidArgument(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = [str(Path(p).resolve()) for p in csv_paths]
    written = []
    for name, group, x, y, xlabel, ylabel in _PLOTS[kind]:
        script = outdir / f"plot_{name}.py"
        script.write_text(_PLOT_HEAD.format(
            paths=paths, out=str(outdir / f"{name}.png"), group=group, x=x, y=y,
            xlabel=xlabel, ylabel=ylabel,
        ))
        written.append(script)
    return written
