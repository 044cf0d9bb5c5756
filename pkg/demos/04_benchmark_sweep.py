"""Drive a small benchmark sweep through the library API.

The juice CLI wraps exactly this flow: build an ExperimentSpec, call
run(), get one aggregated row per (algorithm, SNR) cell.  Here we keep
the system small and the trial count low so the sweep finishes in well
under a minute, and print the same table the CLI writes to CSV.
"""

from juice_mmv import ExperimentSpec, SystemConfig, format_result_rows, run

spec = ExperimentSpec(
    system=SystemConfig(N=60, M=8, K=5, tau_p=14, P=100, seed=5),
    snr_grid_db=(8.0, 12.0, 16.0),
    trials=20,
    algorithms=("ADMM", "IRW_ADMM", "COV_ADMM", "COV_ADMM_MMSE", "GENIE_LS"),
)
spec.validate()

# run() always writes the CSV (the CLI's --out chooses where); the
# returned rows carry the same cells for in-process use.
rows = run(spec, csv_path="/tmp/demo_sweep.csv")
print(format_result_rows(rows))

print("\nReading the table: at fixed SNR the reweighted rows beat plain by")
print("2-4 dB of nase, the MMSE refinement adds ~2 dB more, and GENIE_LS")
print("shows what a perfect support would give the plain estimator.  With")
print("only M=8 antennas the covariance mode runs neck and neck with the")
print("reweighted one; its edge grows with the antenna count.  srr is")
print("lenient to false alarms, srr_alt demands the exact support.")
