"""Refine a detected support with the linear MMSE estimator.

The covariance-mode solver is good at finding the support but its
estimate carries shrinkage bias.  Re-estimating the channels on the
detected support with the known covariances removes most of that bias;
with a correct support the result matches the genie MMSE that was told
the support in advance.
"""

import numpy as np

from juice_mmv import (
    ExperimentSpec,
    SystemConfig,
    build_covariance_set,
    build_geometry,
    detect_support,
    genie_ls,
    genie_mmse,
    make_scenario,
    mmse_estimate,
    resolve_solver_config,
    solve,
    squared_error,
    stream,
)


def nase_db_of(X_true, X_hat):
    num, den = squared_error(X_true, X_hat)
    return 10 * np.log10(num / den)


cfg = SystemConfig(N=60, M=8, K=5, tau_p=14, P=100, snr_db=12.0, seed=9)
geom = build_geometry(stream(cfg.seed, 0), cfg)
cov = build_covariance_set(geom, cfg)
sc = make_scenario(stream(cfg.seed, 1, 0), cfg, geom, cov)

sol_cfg = resolve_solver_config("COV_ADMM", ExperimentSpec(system=cfg), sc.noise_var)
res = solve(sc.Y, sc.Phi, sol_cfg, cov=cov)
support = detect_support(res.X_hat)
print(f"true support:     {sc.active_set}")
print(f"detected support: {support.indices}\n")

refined = mmse_estimate(sc.Y, sc.Phi, support, cov, sc.noise_var)
rows = [
    ("raw solver output", nase_db_of(sc.X_true, res.X_hat)),
    ("MMSE on detected support", nase_db_of(sc.X_true, refined.embed(cfg.N))),
    ("genie LS (true support)", nase_db_of(sc.X_true, genie_ls(sc.Y, sc.Phi, sc.active_set).embed(cfg.N))),
    ("genie MMSE (true support)", nase_db_of(sc.X_true, genie_mmse(sc.Y, sc.Phi, sc.active_set, cov, sc.noise_var).embed(cfg.N))),
]
for name, val in rows:
    print(f"{name:28s} nase = {val:7.2f} dB")

print("\nWith the support right, refinement closes most of the gap to the")
print("genie MMSE; the residual difference is the detection uncertainty.")
