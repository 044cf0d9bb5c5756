"""Acceptance gate: one test per criterion, one printed verdict line each.

Slow by design: criterion 7 runs the full reference-scale sweep (200
trials per SNR point) and criterion 9 runs the quick profile three
times through the CLI.  Everything is deterministic; the verdict lines
are echoed again in the terminal summary by conftest.
"""

import os
import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import (
    fista_l21,
    mc_covariance,
    naive_mmse,
    prox_row_reference,
)

from juice_mmv.bench import (
    ALGORITHMS,
    ExperimentSpec,
    _run_trial,
    experiment_setup,
    resolve_solver_config,
    run_convergence_probe,
)
from juice_mmv.cli import main
from juice_mmv.estimator import genie_ls, genie_mmse, mmse_estimate
from juice_mmv.metrics import nase_db, srr, squared_error
from juice_mmv.seeding import stream
from juice_mmv.sim import (
    CovarianceSet,
    SystemConfig,
    build_covariance_set,
    build_geometry,
    compute_covariance,
    make_scenario,
)
from juice_mmv.solver import (
    SolverConfig,
    default_solver_config,
    group_norms,
    solve,
    x_update,
    z_update_cov,
    z_update_plain,
)


def _cmat(rng, rows, cols):
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)


def _cov_stack(rng, n, m):
    R = np.empty((n, m, m), dtype=complex)
    for i in range(n):
        A = _cmat(rng, m, m + 2)
        R[i] = A @ A.conj().T / m
    return R


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# --- criterion 1: per-row prox against a numeric minimizer


def test_criterion_1_prox_oracle(acceptance):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for trial in range(1000):
        M = int(rng.integers(1, 9))
        z = _cmat(rng, M, 1)
        v = _cmat(rng, M, 1)
        lz = _cmat(rng, M, 1)
        lv = _cmat(rng, M, 1)
        g = rng.uniform(0.2, 2.0, size=1)
        q = rng.uniform(0.2, 2.0, size=1)
        rho = float(rng.uniform(0.2, 3.0))
        beta2 = float(rng.uniform(0.0, 0.5)) if trial % 2 else 0.0
        R = _cov_stack(rng, 1, M)
        s = 0.5 * (z + v - (lz + lv) / rho)[:, 0]
        # scale beta1 so a third of the draws straddle the kill threshold
        base = 2.0 * rho * np.linalg.norm(s) / max(g[0], 1e-12)
        beta1 = float(base * rng.choice([0.1, 0.9, 1.1]) * rng.uniform(0.8, 1.2))
        x = x_update(z, v, lz, lv, g, q, R if beta2 > 0 else None, beta1, beta2, rho)[:, 0]
        alpha = beta1 * g[0]
        if beta2 > 0:
            dev = np.linalg.norm(np.outer(z[:, 0], v[:, 0].conj()) - R[0]) ** 2
            alpha += beta2 * q[0] * dev
        ref = prox_row_reference(s, alpha, rho)
        worst = max(worst, float(np.linalg.norm(x - ref)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 10.0
    acceptance(
        f"criterion 1 prox oracle: 1000 instances, worst |x - ref| = {worst:.2e} "
        f"(tol 1e-6), {elapsed:.1f}s (limit 10s): {_verdict(ok)}"
    )
    assert worst < 1e-6
    assert elapsed < 10.0


# --- criterion 2: Z-updates solve their normal equations


def test_criterion_2_linear_solve_residuals(acceptance):
    rng = np.random.default_rng(515)
    worst = 0.0
    for trial in range(100):
        tau = int(rng.integers(4, 11))
        N = int(rng.integers(6, 17))
        M = int(rng.integers(2, 7))
        Phi = _cmat(rng, tau, N)
        Y = _cmat(rng, tau, M)
        X = _cmat(rng, M, N)
        rho = float(rng.uniform(0.3, 3.0))
        if trial % 2 == 0:
            L = _cmat(rng, M, N)
            Z = z_update_plain(X, L, Y, Phi, rho)
            A = Phi.T @ Phi.conj() + rho * np.eye(N)
            rhs = rho * X + L + Y.T @ Phi.conj()
        else:
            V = _cmat(rng, M, N)
            Lz = _cmat(rng, M, N)
            R = _cov_stack(rng, N, M)
            q = rng.uniform(0.2, 2.0, size=N)
            beta2 = float(rng.uniform(0.05, 0.5))
            Z = z_update_cov(X, V, Lz, Y, Phi, R, q, beta2, rho)
            coef = 2.0 * beta2 * q * group_norms(X)
            B = np.empty((M, N), dtype=complex)
            d = np.empty(N)
            for i in range(N):
                B[:, i] = coef[i] * (R[i] @ V[:, i]) + rho * X[:, i] + Lz[:, i]
                d[i] = coef[i] * np.linalg.norm(V[:, i]) ** 2 + rho
            A = Phi.T @ Phi.conj() + np.diag(d)
            rhs = Y.T @ Phi.conj() + B
        rel = np.linalg.norm(Z @ A - rhs) / np.linalg.norm(rhs)
        worst = max(worst, float(rel))
    ok = worst < 1e-10
    acceptance(
        f"criterion 2 linear-solve residuals: 100 updates, worst relative "
        f"residual = {worst:.2e} (tol 1e-10): {_verdict(ok)}"
    )
    assert worst < 1e-10


# --- criterion 3: convex solver against a proximal-gradient oracle


def test_criterion_3_convex_reference(acceptance):
    from juice_mmv.solver import objective_l21

    rng = np.random.default_rng(33)
    t0 = time.perf_counter()
    worst = 0.0
    N, M, K, tau = 20, 4, 2, 10
    for _ in range(20):
        Phi = _cmat(rng, tau, N)
        Phi /= np.linalg.norm(Phi, axis=0, keepdims=True)
        X_true = np.zeros((M, N), dtype=complex)
        X_true[:, rng.choice(N, K, replace=False)] = _cmat(rng, M, K)
        noise_var = 0.01
        Y = Phi @ X_true.T + np.sqrt(noise_var) * _cmat(rng, tau, M)
        cfg = default_solver_config("ADMM", N, M, noise_var)
        cfg = replace(cfg, k_max=4000, eps_tol=1e-10)
        res = solve(Y, Phi, cfg)
        ones = np.ones(N)
        f_admm = objective_l21(res.X_hat, Y, Phi, cfg.beta1, ones)
        Z = fista_l21(Y, Phi, cfg.beta1, ones, iters=60000)
        f_ref = objective_l21(Z, Y, Phi, cfg.beta1, ones)
        worst = max(worst, abs(f_admm - f_ref) / abs(f_ref))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-3 and elapsed < 60.0
    acceptance(
        f"criterion 3 convex reference: 20 instances, worst relative objective "
        f"gap = {worst:.2e} (tol 1e-3), {elapsed:.1f}s (limit 60s): {_verdict(ok)}"
    )
    assert worst < 1e-3
    assert elapsed < 60.0


# --- criterion 4: covariance mode with beta2 = 0 degenerates to the plain mode


def test_criterion_4_mode_reduction(acceptance):
    rng = np.random.default_rng(44)
    tau, N, M = 8, 12, 3
    Phi = _cmat(rng, tau, N)
    Y = _cmat(rng, tau, M)
    cov = CovarianceSet(R_tilde=np.broadcast_to(np.eye(M), (N, M, M)).copy())

    def iterates(cfg, use_cov):
        acc = []
        solve(Y, Phi, cfg, cov=cov if use_cov else None,
              x_callback=lambda j, X: acc.append(X.copy()))
        return acc

    base = dict(beta1=0.3, rho=0.8, l_max=1, k_max=10, eps_tol=1e-15)
    plain = iterates(SolverConfig(mode="ADMM", **base), False)
    # eps0 = 1 pins the initial weights at g = 1; beta2 = 0 silences q
    reduced = iterates(SolverConfig(mode="COV_ADMM", beta2=0.0, eps0=1.0, **base), True)
    gaps = [float(np.max(np.abs(a - b))) for a, b in zip(plain, reduced)]
    ok = len(plain) == len(reduced) == 11 and max(gaps) <= 1e-12
    acceptance(
        f"criterion 4 mode reduction: 10 inner iterations, max |X_cov - X_admm| "
        f"= {max(gaps):.2e} (tol 1e-12): {_verdict(ok)}"
    )
    assert len(plain) == len(reduced) == 11
    assert max(gaps) <= 1e-12


# --- criterion 5: oracle estimators


def test_criterion_5_oracle_estimators(acceptance):
    cfg = SystemConfig(N=50, M=8, K=4, tau_p=12, P=50, seed=3, snr_db=np.inf)
    geom = build_geometry(stream(3, 0, 0), cfg)
    cov = build_covariance_set(geom, cfg)

    # (a) noiseless genie LS floor
    num = den = 0.0
    for t in range(50):
        sc = make_scenario(stream(3, 1, t), cfg, geom, cov)
        est = genie_ls(sc.Y, sc.Phi, sc.active_set)
        n, d = squared_error(sc.X_true, est.embed(cfg.N))
        num, den = num + n, den + d
    ls_floor = num / den
    ok_floor = ls_floor < 1e-12

    # (b) MMSE dominates LS at every grid SNR (1000 paired trials, 5% slack)
    grid = [float(s) for s in range(0, 21, 2)]
    ratios = []
    for si, snr in enumerate(grid):
        cfg_s = replace(cfg, snr_db=snr)
        mse_ls = mse_mm = 0.0
        for t in range(1000):
            sc = make_scenario(stream(3, 100 + si, t), cfg_s, geom, cov)
            e_ls = genie_ls(sc.Y, sc.Phi, sc.active_set)
            e_mm = genie_mmse(sc.Y, sc.Phi, sc.active_set, cov, sc.noise_var)
            mse_ls += squared_error(sc.X_true, e_ls.embed(cfg.N))[0]
            mse_mm += squared_error(sc.X_true, e_mm.embed(cfg.N))[0]
        ratios.append(mse_mm / mse_ls)
    worst_ratio = max(ratios)
    ok_dom = worst_ratio <= 1.05

    # (c) structured assembly equals the dense Kronecker construction
    rng = np.random.default_rng(55)
    worst_kron = 0.0
    for _ in range(5):
        tau, M, N, k = 6, 3, 10, 3
        Phi = _cmat(rng, tau, N)
        Y = _cmat(rng, tau, M)
        R = _cov_stack(rng, N, M)
        support = np.sort(rng.choice(N, k, replace=False))
        ours = mmse_estimate(Y, Phi, support, CovarianceSet(R_tilde=R), 0.3)
        ref = naive_mmse(Y, Phi, support, R, 0.3)
        worst_kron = max(worst_kron, float(np.max(np.abs(ours.X_hat_S - ref))))
    ok_kron = worst_kron < 1e-10

    ok = ok_floor and ok_dom and ok_kron
    acceptance(
        f"criterion 5 oracle estimators: noiseless LS NASE = {ls_floor:.1e} "
        f"(tol 1e-12), worst MMSE/LS MSE ratio over 11 SNRs x 1000 trials = "
        f"{worst_ratio:.4f} (limit 1.05), Kronecker gap = {worst_kron:.1e} "
        f"(tol 1e-10): {_verdict(ok)}"
    )
    assert ok_floor and ok_dom and ok_kron


# --- criterion 6: covariance quadrature against stratified Monte Carlo


def test_criterion_6_covariance_quadrature(acceptance):
    rng = np.random.default_rng(606)
    worst = 0.0
    for trial in range(5):
        theta = float(rng.uniform(np.pi / 3, 2 * np.pi / 3))
        spread = float(rng.uniform(0.03, 0.25))
        cfg = SystemConfig(M=16, angular_spread=spread)
        R = compute_covariance(theta, cfg)
        mc = mc_covariance(theta, spread, 16, cfg.delta_r, 10**6,
                           np.random.default_rng(1000 + trial))
        worst = max(worst, float(np.max(np.abs(R - mc))))
    ok = worst < 1e-3
    acceptance(
        f"criterion 6 covariance quadrature: 5 pairs vs 1e6-sample MC, worst "
        f"entrywise gap = {worst:.2e} (tol 1e-3): {_verdict(ok)}"
    )
    assert worst < 1e-3


# --- criterion 7: reference-scale sweep


SWEEP_SNRS = (8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0)
SWEEP_TRIALS = 200


@pytest.fixture(scope="session")
def paper_sweep():
    """Per-trial outcomes for all algorithms over the reference-scale grid."""
    spec = ExperimentSpec(
        system=SystemConfig(seed=0),
        snr_grid_db=SWEEP_SNRS,
        trials=SWEEP_TRIALS,
    )
    geom, Phi, cov = experiment_setup(spec)
    outcomes = {snr: {a: [] for a in ALGORITHMS} for snr in SWEEP_SNRS}
    for si, snr in enumerate(SWEEP_SNRS):
        t0 = time.perf_counter()
        for t in range(SWEEP_TRIALS):
            _, _, _, outs = _run_trial(spec, geom, Phi, cov, si, t)
            for algo, out in outs.items():
                outcomes[snr][algo].append(out)
        print(f"sweep snr={snr:.0f}dB done in {time.perf_counter() - t0:.0f}s", flush=True)
    return outcomes


def _cell_nase(outs):
    return sum(o.se_num for o in outs) / sum(o.se_den for o in outs)


def _cell_srr(outs):
    return float(np.mean([srr(o.s_true, o.s_hat) for o in outs]))


def test_criterion_7i_cov_srr(acceptance, paper_sweep):
    cells = {snr: _cell_srr(paper_sweep[snr]["COV_ADMM"]) for snr in SWEEP_SNRS if snr >= 10.0}
    worst = min(cells.values())
    ok = all(abs(1.0 - v) <= 0.005 for v in cells.values())
    detail = " ".join(f"{snr:.0f}dB={v:.4f}" for snr, v in cells.items())
    acceptance(
        f"criterion 7i cov-ADMM SRR = 1 +- 0.005 for SNR >= 10: worst {worst:.4f} "
        f"({detail}): {_verdict(ok)}"
    )
    assert ok


def test_criterion_7ii_irw_srr(acceptance, paper_sweep):
    value = _cell_srr(paper_sweep[8.0]["IRW_ADMM"])
    ok = value > 0.95
    acceptance(f"criterion 7ii IRW-ADMM SRR at 8 dB = {value:.4f} (> 0.95): {_verdict(ok)}")
    assert ok


def test_criterion_7iii_nase_ordering(acceptance, paper_sweep):
    cell = paper_sweep[12.0]
    order = ("COV_ADMM_MMSE", "COV_ADMM", "IRW_ADMM", "ADMM")
    den = sum(o.se_den for o in cell["ADMM"])
    checks = []
    for worse, better in zip(order[1:], order[:-1]):
        d = np.array([a.se_num - b.se_num
                      for a, b in zip(cell[worse], cell[better])])
        gap = float(d.sum() / den)
        se = float(np.std(d, ddof=1) * np.sqrt(len(d)) / den)
        checks.append((worse, better, gap, se, gap >= -2.0 * se))
    ok = all(c[-1] for c in checks)
    detail = ", ".join(f"{w} - {b} = {g:.2e} (2se {2*s:.1e})" for w, b, g, s, _ in checks)
    acceptance(
        f"criterion 7iii NASE ordering at 12 dB (each gap >= 0 within MC error): "
        f"{detail}: {_verdict(ok)}"
    )
    assert ok


def test_criterion_7iv_irw_tracks_genie_ls(acceptance, paper_sweep):
    gaps = {}
    for snr in SWEEP_SNRS:
        if snr < 12.0:
            continue
        irw = nase_db(_cell_nase(paper_sweep[snr]["IRW_ADMM"]))
        ls = nase_db(_cell_nase(paper_sweep[snr]["GENIE_LS"]))
        gaps[snr] = irw - ls
    worst = max(gaps.values())
    ok = worst <= 1.0
    detail = " ".join(f"{snr:.0f}dB={g:+.2f}" for snr, g in gaps.items())
    acceptance(
        f"criterion 7iv IRW-ADMM within 1 dB of genie LS for SNR >= 12: worst "
        f"{worst:+.2f} dB ({detail}): {_verdict(ok)}"
    )
    assert ok


# --- criterion 8: convergence profile


def _sustained_hit(nase_series, slack=1.05):
    final = nase_series[-1]
    bound = slack * final
    hit = len(nase_series) - 1
    for j in range(len(nase_series) - 1, -1, -1):
        if nase_series[j] <= bound:
            hit = j
        else:
            break
    return hit


def test_criterion_8_convergence_profile(acceptance):
    spec = ExperimentSpec(
        system=SystemConfig(seed=0),
        snr_grid_db=SWEEP_SNRS,
        trials=SWEEP_TRIALS,
        algorithms=("IRW_ADMM", "COV_ADMM"),
    )
    rows = run_convergence_probe(spec, 16.0, 100)
    hits = {}
    for algo in ("IRW_ADMM", "COV_ADMM"):
        series = [r.nase for r in rows if r.algorithm == algo]
        hits[algo] = _sustained_hit(series)
    ok_irw = hits["IRW_ADMM"] <= 60
    ok_cov = hits["COV_ADMM"] <= 30
    acceptance(
        f"criterion 8 convergence at 16 dB: IRW within 5% of final by iteration "
        f"{hits['IRW_ADMM']} (limit 60): {_verdict(ok_irw)}; cov by iteration "
        f"{hits['COV_ADMM']} (limit 30): {_verdict(ok_cov)}"
    )
    # Both bounds are deliberately left red; the decisions ledger carries
    # the measurements.  The first outer pass runs uniform weights to a
    # plateau more than 5% above the final error, so the budget is only
    # reachable with short passes, and short passes are exactly what
    # support recovery cannot afford: structures that bring the reweighted
    # solver under 60 cumulative iterations (k_max=20, l_max=10 measures
    # 56-60) drop its 8 dB recovery rate to 0.90-0.93 against the 0.95
    # criterion, and nothing on the measured Pareto front puts the
    # covariance solver under 30 while keeping the 10-12 dB recovery rate
    # and the 12 dB ordering intact.  The bounds stay red rather than
    # loosened and the schedule keeps support recovery.
    assert ok_irw
    assert ok_cov


# --- criterion 9: determinism through the CLI


def test_criterion_9_quick_run_determinism(acceptance, tmp_path, monkeypatch, capsys):
    config = tmp_path / "exp.toml"
    config.write_text('[system]\nseed = 17\n', encoding="utf-8")
    digests = []
    for name, threads in (("a.csv", None), ("b.csv", None), ("c.csv", "2")):
        out = tmp_path / name
        if threads is None:
            monkeypatch.delenv("JUICE_THREADS", raising=False)
        else:
            monkeypatch.setenv("JUICE_THREADS", threads)
        code = main(["run", "--config", str(config), "--quick", "--out", str(out)])
        assert code == 0
        digests.append(out.read_bytes())
    ok = digests[0] == digests[1] == digests[2]
    acceptance(
        f"criterion 9 determinism: three --quick runs (serial x2, JUICE_THREADS=2) "
        f"byte-identical = {ok}: {_verdict(ok)}"
    )
    assert ok


# --- secondary: figure renderer golden test through both CLIs


def test_criterion_10_figgen_golden(acceptance, tmp_path, capsys):
    import subprocess
    import sys

    config = tmp_path / "exp.toml"
    config.write_text('[system]\nseed = 11\n', encoding="utf-8")
    sweep = tmp_path / "sweep.csv"
    conv = tmp_path / "conv.csv"
    assert main(["run", "--config", str(config), "--quick", "--out", str(sweep)]) == 0
    assert main(["converge", "--config", str(config), "--quick", "--snr-db", "16",
                 "--trials", "10", "--out", str(conv)]) == 0
    assert sweep.exists() and conv.exists()
    capsys.readouterr()

    out_png = tmp_path / "fig.png"
    proc = subprocess.run(
        [sys.executable, "-m", "figgen.cli", "--sweep", str(sweep),
         "--converge", str(conv), "--out", str(out_png), "--dump"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    dump = set(proc.stdout.strip().splitlines())

    expected = set()
    header = None
    for line in sweep.read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        f = dict(zip(header, line.split(",")))
        expected.add(f"a\t{f['algorithm']}\t{float(f['snr_db'])!r}\t{float(f['nase_db'])!r}")
        expected.add(f"b\t{f['algorithm']}\t{float(f['snr_db'])!r}\t{float(f['srr'])!r}")
    header = None
    for line in conv.read_text(encoding="utf-8").splitlines():
        if header is None:
            header = line.split(",")
            continue
        f = dict(zip(header, line.split(",")))
        expected.add(f"c\t{f['algorithm']}\t{float(f['iteration'])!r}\t{float(f['nase_db'])!r}")

    ok = dump == expected and out_png.stat().st_size > 0
    acceptance(
        f"criterion 10 [secondary] figgen golden: dump series == CSV series "
        f"({len(dump)} points), three-panel image rendered: {_verdict(ok)}"
    )
    assert dump == expected
    assert out_png.stat().st_size > 0
