import csv
import math
import subprocess
import sys

import numpy as np
import pytest

from adaptmc.completion import adaptive_complete
from adaptmc.config import ExperimentConfig, load_config
from adaptmc.harness import (
    AGG,
    CSV_FIELDS,
    HEADER,
    derive_seed,
    emit_plot_scripts,
    locate_threshold,
    rows_to_csv,
    run_approx_sweep,
    run_bounds_validation,
    run_completion_sweep,
    run_lowerbound_demo,
    strip_wall_time,
    summary_table,
    threshold_crossing,
    write_csv,
)
from adaptmc.instances import InstanceSpec, make_low_rank
from adaptmc.oracle import EntryOracle
from adaptmc.sampling import InvalidArgument


def _cfg(**kw):
    base = dict(kind="complete-sweep", trials=4, base_seed=3, d=60, n=60, r=3, mu0=1.0, m_grid=[20])
    base.update(kw)
    return ExperimentConfig(**base).validate()


def _aggs(rows):
    return [r for r in rows if r["trial"] == AGG]


def test_derive_seed():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    seeds = {derive_seed(1, g, t) for g in range(10) for t in range(10)}
    assert len(seeds) == 100


def test_header_frozen_prefix():
    assert HEADER[:len(CSV_FIELDS)] == CSV_FIELDS
    assert CSV_FIELDS[0] == "experiment" and CSV_FIELDS[-1] == "wall_ms"


def test_trivial_point_full_sampling():
    rows = run_completion_sweep(_cfg(d=30, n=30, r=1, m_grid=[30], trials=5))
    (agg,) = _aggs(rows)
    assert agg["exact_success"] == 1.0
    assert len(rows) == 6


def test_aggregate_is_mean_of_trials():
    rows = run_completion_sweep(_cfg(m_grid=[3, 6, 60], n_grid=[60, 80], trials=6))
    aggs = _aggs(rows)
    assert len(aggs) == 6 and len(rows) == 6 * 7
    for i, agg in enumerate(aggs):
        trials = rows[i * 7:i * 7 + 6]
        assert all(t["m"] == agg["m"] and t["n"] == agg["n"] for t in trials)
        assert agg["exact_success"] == pytest.approx(np.mean([t["exact_success"] for t in trials]))
        rate = agg["exact_success"]
        assert f"success_se={math.sqrt(rate * (1 - rate) / 6)!r}" in agg["note"]


def test_rescaled_axes():
    rows = run_completion_sweep(_cfg(mu0=2.0, d=60, n=60, r=3, m_grid=[30], trials=1))
    row = rows[0]
    assert row["p"] == 0.5
    assert row["p_over_mu0"] == 0.25
    assert row["p_over_rlogr"] == pytest.approx(0.5 / (3 * math.log(3)))


def test_rows_carry_oracle_ledger():
    cfg = _cfg(trials=2)
    rows = run_completion_sweep(cfg)
    seed = derive_seed(cfg.base_seed, 0, 1)
    rng = np.random.default_rng(seed)
    inst = make_low_rank(InstanceSpec(60, 60, 3, 1.0), rng)
    o = EntryOracle(inst.matrix)
    adaptive_complete(o, 20, rng=rng)
    led = o.snapshot_ledger()
    assert rows[1]["seed"] == seed
    assert (rows[1]["raw_queries"], rows[1]["unique_entries"]) == (led.raw_queries, led.unique_entries)


def test_csv_byte_identical_and_worker_independent(tmp_path):
    cfg = _cfg(m_grid=[5, 15], trials=3)
    a = rows_to_csv(run_completion_sweep(cfg))
    b = rows_to_csv(run_completion_sweep(cfg))
    c = rows_to_csv(run_completion_sweep(cfg.replace(workers=2)))
    assert strip_wall_time(a) == strip_wall_time(b) == strip_wall_time(c)
    p = write_csv(run_completion_sweep(cfg), tmp_path / "x.csv")
    assert strip_wall_time(p.read_text()) == strip_wall_time(a)


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(InvalidArgument):
        write_csv([], blocker / "sub" / "x.csv")


def test_approx_sweep_columns():
    cfg = ExperimentConfig(kind="approx-sweep", trials=2, d=60, n=60, r=3, row_mode="sign",
                           noise_sigma=1.0, p_grid=[0.3, 0.6], methods=["adaptive", "passive"],
                           norm_modes=["log-normal"]).validate()
    rows = run_approx_sweep(cfg)
    assert len(rows) == 2 * 2 * 3
    for row in rows:
        if row["trial"] == AGG:
            continue
        eps = row["excess_eps"]
        assert eps >= -1e-10
        assert row["eps_over_sqrt_r"] == pytest.approx(eps / math.sqrt(3))
        assert row["eps_sqrt_p"] == pytest.approx(eps * math.sqrt(row["p"]))
        if row["method"] == "adaptive":
            assert row["m1"] + row["m2"] == row["m"]
    # both methods see the same instance in every trial
    by = {(r["method"], r["p"], r["trial"]): r for r in rows}
    assert by[("adaptive", 0.3, 0)]["column_mu"] == by[("passive", 0.3, 0)]["column_mu"]


def test_approx_rank_zero_rejected():
    with pytest.raises(InvalidArgument):
        ExperimentConfig(kind="approx-sweep", r_grid=[0, 2], p_grid=[0.5]).validate()


def test_bounds_sweep_points():
    cfg = ExperimentConfig(kind="bounds-validate", trials=100, d=1000, r=3, mu0=1.0, delta=0.05,
                           m_grid=[5, 200, 400, 1000]).validate()
    rows = run_bounds_validation(cfg)
    aggs = _aggs(rows)
    assert aggs[0]["note"].startswith("skipped")
    rates = [a["exact_success"] for a in aggs[1:]]
    assert rates[0] >= 0.80
    assert rates[-1] == 1.0
    assert rates[0] <= rates[1] + 0.02 <= rates[2] + 0.04


def test_lowerbound_full_budget_both_succeed():
    cfg = ExperimentConfig(kind="lowerbound-demo", trials=3, d=20, n=30, r=2, block=2,
                           m_grid=[20], budget_fracs=[1.0]).validate()
    rows = run_lowerbound_demo(cfg)
    aggs = _aggs(rows)
    assert [a["method"] for a in aggs] == ["passive", "adaptive"]
    assert all(a["exact_success"] == 1.0 for a in aggs)
    for row in rows:
        if row["method"] == "adaptive" and row["trial"] != AGG:
            assert row["unique_entries"] <= 20 * 2 + 30 * 20


def test_threshold_crossing():
    assert threshold_crossing([(10, 0.5), (20, 0.7), (30, 0.95)]) == pytest.approx(20 + 10 * 0.2 / 0.25)
    assert threshold_crossing([(10, 0.95)]) == 10
    assert math.isnan(threshold_crossing([(10, 0.1), (20, 0.2)]))


def test_locate_threshold_small():
    cfg = _cfg(d=80, n=80, r=2, trials=10)
    m_star, rows = locate_threshold(cfg, 0.9, coarse=[2, 8, 32, 80], fine_points=3)
    assert 1 <= m_star <= 80
    assert any(r["trial"] == AGG for r in rows)


def test_summary_table_lists_aggregates():
    rows = run_completion_sweep(_cfg(trials=2))
    text = summary_table(rows)
    assert len(text.splitlines()) == 2
    assert "complete" in text


def _write_csv_file(path, rows):
    path.write_text(rows_to_csv(rows))
    return path


def test_plot_scripts(tmp_path):
    p = _write_csv_file(tmp_path / "c.csv", run_completion_sweep(_cfg(m_grid=[5, 20], trials=2)))
    scripts = emit_plot_scripts([p], "completion", tmp_path / "plots")
    assert len(scripts) == 4
    names = {s.name for s in scripts}
    assert "plot_success_vs_p_over_rlogr.py" in names and "plot_success_vs_p_over_mu0.py" in names
    out = tmp_path / "fig.png"
    subprocess.run([sys.executable, str(scripts[0]), str(out)], check=True)
    assert out.stat().st_size > 0
    approx = emit_plot_scripts([p], "approx", tmp_path / "aplots")
    assert {s.name for s in approx} >= {"plot_eps_vs_p.py", "plot_eps_over_sqrt_r_vs_p.py", "plot_eps_sqrt_p_vs_p.py"}
    with pytest.raises(InvalidArgument):
        emit_plot_scripts([p], "nope", tmp_path)


def test_plot_script_on_empty_csv(tmp_path):
    empty = tmp_path / "empty.csv"
    with open(empty, "w", newline="") as fh:
        csv.writer(fh).writerow(HEADER)
    (script,) = [s for s in emit_plot_scripts([empty], "completion", tmp_path) if "vs_m" in s.name]
    subprocess.run([sys.executable, str(script), str(tmp_path / "e.png")], check=True)
    assert (tmp_path / "e.png").exists()


def test_config_file_and_overrides(tmp_path, monkeypatch):
    ini = tmp_path / "c.ini"
    ini.write_text(
        "[experiment]\nkind = complete-sweep\ntrials = 7\nbase_seed = 2\n"
        "[instance]\nd = 100\nsquare = false\nr = 4\n"
        "[grid]\nn = 100, 200\nm = 10, 20\n"
        "[algorithm]\ntau_rel = 1e-7\n"
    )
    cfg = load_config(ini, {"trials": 3, "r": None})
    assert cfg.trials == 3 and cfg.base_seed == 2 and cfg.r == 4
    assert cfg.n_grid == [100, 200] and cfg.m_grid == [10, 20] and cfg.tau_rel == 1e-7
    assert cfg.square is False
    monkeypatch.setenv("ADAPTMC_THREADS", "3")
    assert load_config(ini).workers == 3
    assert load_config(ini, {"workers": 1}).workers == 1


@pytest.mark.parametrize("text", [
    "[grid]\nbogus = 1\n",
    "[instance]\nwhat = 1\n",
    "[experiment]\ntrials = 0\n[grid]\nm = 5\n",
    "[experiment]\nkind = complete-sweep\n",
    "[experiment]\nkind = approx-sweep\n[grid]\np = 0.5, 1.5\n",
    "[experiment]\nkind = nope\n",
])
def test_config_rejects(tmp_path, text):
    ini = tmp_path / "bad.ini"
    ini.write_text(text)
    with pytest.raises(InvalidArgument):
        load_config(ini)


def test_missing_config_file(tmp_path):
    with pytest.raises(InvalidArgument):
        load_config(tmp_path / "none.ini")


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("ADAPTMC_OUTPUT_DIR", str(tmp_path))
    p = write_csv([], "rel.csv")
    assert p == tmp_path / "rel.csv" and p.read_text().startswith("experiment,")
