"""Acceptance checks, one test per numbered criterion.

Every check records a PASS/FAIL line with the observed values and the
tolerance used; the lines are printed at the end of the pytest run (and
directly when this file is executed as a script).
"""

import json
import time
from importlib import resources

import numpy as np
import pytest

from dptol.cli import main as cli_main
from dptol.distributions import Distribution
from dptol.mdp import MDPConfig, MDPDraws, gibbs_run, mdp_tolerance_bg, sample_a, sample_eta
from dptol.quantile import (
    DPPosterior,
    expected_quantile,
    expected_quantile_a0,
    quantile_process_cdf,
)
from dptol.rng import rng_stream
from dptol.simulation import load_config, run_experiment
from dptol.tolerance import (
    dp_a0_index,
    expectation_interval,
    min_feasible_n,
    two_sided_bg_bonferroni,
    wilks_upper,
)
from oracles import beta_condition_scan, stick_breaking_quantiles, wilks_rank_scan

RESULTS = []
POTENCY = np.array([
    95.661, 102.259, 103.135, 99.827, 98.830, 94.887, 103.362, 94.117, 96.665,
    106.234, 103.735, 104.317, 101.807, 98.198, 98.186, 107.872, 99.987, 103.051,
    106.445, 95.922, 102.956, 101.596, 96.806, 107.041, 92.589,
])
GRID = (0.5, 0.9, 0.95, 0.99)


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def within(value, target, tol):
    return abs(value - target) <= tol


def config(name):
    return load_config(resources.files("dptol").joinpath("configs", f"{name}.toml"))


# 1 ----------------------------------------------------------------------------


def test_criterion_1_order_statistic_equivalence():
    t0 = time.perf_counter()
    m100, m1000 = dp_a0_index(100, 0.95, 0.95), dp_a0_index(1000, 0.95, 0.95)
    headline = time.perf_counter() - t0
    mismatches = []
    for beta in GRID:
        for gamma in GRID:
            for n in range(2, 2001):
                if dp_a0_index(n, beta, gamma) != beta_condition_scan(n, beta, gamma):
                    mismatches.append(("dp", n, beta, gamma))
                m = wilks_rank_scan(n, beta, gamma)
                rank, _, infeasible = wilks_upper(np.arange(float(n)), beta, gamma)
                if infeasible != (m is None) or (m is not None and rank != m):
                    mismatches.append(("wilks", n, beta, gamma))
    sweep = time.perf_counter() - t0
    ok = m100 == 99 and m1000 == 962 and not mismatches and headline < 1.0
    record(1, "order-statistic indices (exact)", ok,
           f"m(100)={m100}, m(1000)={m1000} in {headline * 1e3:.1f} ms; "
           f"{len(mismatches)} mismatches over n=2..2000 x 16 (beta, gamma) pairs "
           f"(sweep with both oracles {sweep:.0f} s)")
    assert ok, mismatches[:5]


# 2 ----------------------------------------------------------------------------


def test_criterion_2_feasibility():
    f = min_feasible_n(0.95, 0.95, "frequentist")
    r = min_feasible_n(0.95, 0.95, "dp_a0_rule_of_thumb")
    ok = (f, r) == (59, 60)
    record(2, "minimum feasible n (exact)", ok, f"frequentist={f}, rule of thumb={r}")
    assert ok


# 3 ----------------------------------------------------------------------------


def test_criterion_3_closed_form_vs_integration():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (2, 10, 100):
        x = rng_stream(7, n).standard_normal(n)
        dp = DPPosterior(1e-12, Distribution.normal(0, 1), x)
        for q in (0.025, 0.5, 0.975):
            worst = max(worst, abs(expected_quantile(dp, q) - expected_quantile_a0(np.sort(x), q)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 10
    record(3, "integration at a=1e-12 vs closed form (tol 1e-6)", ok,
           f"max abs diff {worst:.2e} in {elapsed:.2f} s")
    assert ok


# 4 ----------------------------------------------------------------------------


def test_criterion_4_stick_breaking_oracle():
    qs = [0.05, 0.5, 0.95]
    worst_h = worst_e = 0.0
    t0 = time.perf_counter()
    for n in (5, 30):
        x = rng_stream(11, n).normal(0.0, 2.0, n)
        for a in (1.0, 10.0):
            for base in (Distribution.normal(0, 2), Distribution.laplace(0, 2)):
                dp = DPPosterior(a, base, x)
                Q = stick_breaking_quantiles(x, a, base, qs, 100000,
                                             rng_stream(404, n, int(a), base.family == "laplace"))
                for j, q in enumerate(qs):
                    grid = np.quantile(Q[:, j], [0.1, 0.3, 0.5, 0.7, 0.9])
                    freq = (Q[:, j][:, None] <= grid).mean(axis=0)
                    h = quantile_process_cdf(dp, q, grid)
                    worst_h = max(worst_h, float(np.max(np.abs(h - freq))))
                    worst_e = max(worst_e, abs(expected_quantile(dp, q) - Q[:, j].mean()))
    ok = worst_h <= 0.01 and worst_e <= 0.01
    record(4, "stick-breaking oracle, 1e5 draws (tol 0.01)", ok,
           f"max |H - freq| = {worst_h:.4f}, max |E Q - mean| = {worst_e:.4f} "
           f"({time.perf_counter() - t0:.0f} s)")
    assert ok


# 5 ----------------------------------------------------------------------------

EXPECTATION_ROWS = [
    ("DP(a=0)", 0.0, None, (93.3948, 107.4120)),
    ("DP(a=10, N(100,5^2))", 10.0, Distribution.normal(100, 5), (92.4398, 108.0114)),
    ("DP(a=5, Laplace(100,2.9847))", 5.0, Distribution.laplace(100, 2.9847), (93.0554, 107.6498)),
]


def test_criterion_5_potency_expectation():
    t0 = time.perf_counter()
    ok, parts = True, []
    for label, a, base, (lo, up) in EXPECTATION_ROWS:
        dp = DPPosterior(a, base, POTENCY)
        iv = expectation_interval(dp, 0.95, method="grid", step=0.02)
        fine = expectation_interval(dp, 0.95)
        good = within(iv.lower, lo, 0.01) and within(iv.upper, up, 0.01)
        ok &= good
        parts.append(f"{label} [{iv.lower:.4f}, {iv.upper:.4f}] "
                     f"(quadrature [{fine.lower:.4f}, {fine.upper:.4f}])")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 5
    record(5, "potency expectation rows (tol 0.01, lattice step 0.02)", ok,
           "; ".join(parts) + f"; {elapsed:.2f} s")
    assert ok


# 6 ----------------------------------------------------------------------------


def test_criterion_6_potency_content_level():
    rows = [("DP(a=1, N(100,3.3^2))", 1.0, Distribution.normal(100, 3.3), (92.5817, 107.8836)),
            ("DP(a=10, N(100,5^2))", 10.0, Distribution.normal(100, 5), (88.0546, 111.9407))]
    ok, parts = True, []
    for label, a, base, (lo, up) in rows:
        iv = two_sided_bg_bonferroni(DPPosterior(a, base, POTENCY), 0.95, 0.95,
                                     "level_and_content_split")
        ok &= within(iv.lower, lo, 0.5) and within(iv.upper, up, 0.5)
        parts.append(f"{label} [{iv.lower:.4f}, {iv.upper:.4f}]")
    record(6, "potency (0.95, 0.95) rows (tol 0.5, convention level_and_content_split: "
              "each side at content 0.975 and level 0.975)", ok, "; ".join(parts))
    assert ok


# 7 ----------------------------------------------------------------------------

COVERAGE_ROWS = [
    # config, n, (coverage, tol), (statistic name, target, tol)
    ("table1_wilks", 100, (0.9801, 0.01), ("mean_upper", 4.2951, 0.15)),
    ("table4_dp_a0", 1000, (0.9489, 0.005), ("mean_length", 3.9142, 0.03)),
    ("table5_dp_a100_laplace", 50, (0.9486, 0.01), ("mean_length", 6.0084, 0.1)),
    ("table8_dp_03n_exp", 100, (0.9408, 0.01), ("mean_length", 3.6597, 0.05)),
]


@pytest.mark.slow
@pytest.mark.parametrize("name,n,cov,stat", COVERAGE_ROWS, ids=[r[0] for r in COVERAGE_ROWS])
def test_criterion_7_coverage_tables(name, n, cov, stat):
    cfg = config(name)
    cfg.n_values = (n,)
    assert cfg.K == 2000
    t0 = time.perf_counter()
    row = run_experiment(cfg)[0]
    value = getattr(row, stat[0])
    ok = within(row.mean_coverage, *cov) and within(value, stat[1], stat[2])
    record(7, f"{name} n={n}, K={cfg.K}", ok,
           f"coverage {row.mean_coverage:.4f} (target {cov[0]} +/- {cov[1]}), "
           f"{stat[0]} {value:.4f} (target {stat[1]} +/- {stat[2]}), "
           f"{time.perf_counter() - t0:.0f} s")
    assert ok


# 8 ----------------------------------------------------------------------------


def test_criterion_8a_mdp_conditionals():
    rng = rng_stream(8, 1)
    a, n = 2.0, 25
    eta = np.array([sample_eta(a, n, rng) for _ in range(100000)])
    from scipy import stats
    p_eta = stats.kstest(eta, stats.beta(a, n).cdf).pvalue
    eta0, k, a_a, b_a = 0.05, 25, 1.0, 1.0
    draws = np.array([sample_a(a_a, b_a, k, eta0, rng) for _ in range(100000)])
    p_a = stats.kstest(draws, stats.gamma(a_a + k, scale=1 / (b_a - np.log(eta0))).cdf).pvalue
    ok = p_eta > 0.01 and p_a > 0.01
    record(8, "MDP conditional updates, KS at alpha 0.01 over 1e5 draws", ok,
           f"eta p={p_eta:.3f}, a p={p_a:.3f}")
    assert ok


def test_criterion_8b_identical_draws_reduce_to_single_dp():
    S = 50
    draws = MDPDraws(np.full(S, 3.0), np.tile([100.0, 16.0], (S, 1)), np.full(S, 0.1), 25)
    mdp = mdp_tolerance_bg(draws, POTENCY, 0.95, 0.95)
    single = two_sided_bg_bonferroni(DPPosterior(3.0, Distribution.normal(100, 4), POTENCY),
                                     0.95, 0.95)
    ok = (mdp.lower, mdp.upper) == (single.lower, single.upper)
    record(8, "identical draws reproduce the single-DP limits bit for bit", ok,
           f"MDP [{mdp.lower!r}, {mdp.upper!r}] vs DP [{single.lower!r}, {single.upper!r}]")
    assert ok


def test_criterion_8c_potency_mdp_row():
    target, tol = (92.4686, 109.4773), 1.0
    cfg = MDPConfig(a_a=1, b_a=1, mu0=100.0, tau0=5.0, ig_shape=1, ig_scale=1, seed=0)
    draws = gibbs_run(cfg, POTENCY)
    iv = mdp_tolerance_bg(draws, POTENCY, 0.95, 0.95)
    ok = within(iv.lower, target[0], tol) and within(iv.upper, target[1], tol)
    record(8, "potency MDP (0.95, 0.95) row (tol 1.0)", ok,
           f"[{iv.lower:.4f}, {iv.upper:.4f}] vs [{target[0]}, {target[1]}], "
           f"posterior mean a = {draws.a_samples.mean():.2f}")
    assert ok


@pytest.mark.slow
def test_criterion_8d_mdp_spot_check():
    cfg = config("table3_mdp")
    t0 = time.perf_counter()
    row = run_experiment(cfg)[0]
    ok = cfg.K == 200 and within(row.mean_coverage, 0.9708, 0.02)
    record(8, "MDP spot check, Laplace(0,2) data, n=100, K=200 (tol 0.02)", ok,
           f"coverage {row.mean_coverage:.4f} vs 0.9708, mean upper {row.mean_upper:.4f}, "
           f"{time.perf_counter() - t0:.0f} s")
    assert ok


# 9 ----------------------------------------------------------------------------


def test_criterion_9_replay_determinism(tmp_path, capsys):
    checks = []

    out = tmp_path / "sim"
    assert cli_main(["simulate", "table1_wilks", "--K", "50", "--out", str(out)]) == 0
    for name in ("table1_wilks.csv", "table1_wilks.md"):
        before = (out / name).read_bytes()
        assert cli_main(["replay", str(out / "table1_wilks.manifest.json")]) == 0
        checks.append(("simulate " + name, (out / name).read_bytes() == before))

    data = tmp_path / "potency.txt"
    data.write_text("\n".join(f"{v:.3f}" for v in POTENCY))
    man = tmp_path / "fit.json"
    capsys.readouterr()
    assert cli_main(["fit", str(data), "--method", "mdp", "--mu0", "100", "--tau0", "5",
                     "--seed", "7", "--manifest", str(man)]) == 0
    first = capsys.readouterr().out
    assert cli_main(["replay", str(man)]) == 0
    checks.append(("fit mdp", capsys.readouterr().out == first))

    report, pman = tmp_path / "potency.json", tmp_path / "potency.manifest.json"
    assert cli_main(["potency", "--report", str(report), "--manifest", str(pman)]) == 0
    before = report.read_bytes()
    assert cli_main(["replay", str(pman)]) == 0
    checks.append(("potency report", report.read_bytes() == before))
    assert json.loads(pman.read_text())["command"] == "potency"

    ok = all(c[1] for c in checks)
    record(9, "manifest replay reproduces outputs byte for byte", ok,
           ", ".join(f"{name}: {'identical' if same else 'DIFFERENT'}" for name, same in checks))
    assert ok


if __name__ == "__main__":  # pragma: no cover
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
