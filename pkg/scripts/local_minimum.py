"""GI-VQE runs on the charged P=3 ladder (J=5, m=1, mu=2, charges (0,0) and (2,0)), no penalty.

Prints the relative error of each run against the sector oracle and stops
at the first run within the requested tolerance.
"""
import argparse

from z2vqe.config import validate_config
from z2vqe.experiments import ground_state_experiment

parser = argparse.ArgumentParser()
parser.add_argument("--layers", type=int, default=3)
parser.add_argument("--runs", type=int, default=20)
parser.add_argument("--tol", type=float, default=0.01)
parser.add_argument("--max-iter", type=int, default=500)
parser.add_argument("--init", default="normal", choices=["normal", "random"])
args = parser.parse_args()

cfg = validate_config({"experiment": "ground-state", "P": 3, "layers": args.layers,
                       "mu": 2.0, "J": 5.0, "m": 1.0, "charges": [[0, 0], [2, 0]],
                       "n_runs": args.runs, "max_iter": args.max_iter, "init": args.init})
report = ground_state_experiment(cfg, stop_within=args.tol)
print(f"sector oracle {report.oracle[3]:.8f}")
for r in report.runs:
    print(f"run {r.run_id}: E={r.final_energy:.6f} rel_error={r.rel_error:.3e} "
          f"fidelity={r.gauss_fidelity:.12f}")
