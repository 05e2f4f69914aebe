"""Print the static potential table for the P=3 ladder at J=5, m=1, mu=3."""
import argparse

from z2vqe.config import validate_config
from z2vqe.experiments import string_breaking_scan

parser = argparse.ArgumentParser()
parser.add_argument("--P", type=int, default=3)
parser.add_argument("--mu", type=float, default=3.0)
parser.add_argument("--J", type=float, default=5.0)
parser.add_argument("--m", type=float, default=1.0)
args = parser.parse_args()

cfg = validate_config({"experiment": "string-breaking", "P": args.P, "mu": args.mu,
                       "J": args.J, "m": args.m})
table = string_breaking_scan(cfg)
print(f"vacuum energy {table.vacuum_energy:.6f}")
print(f"{'site':>8} {'d':>2} {'V(d)':>10}")
for row in table.rows:
    print(f"{str(row.charge_site):>8} {row.d:>2} {row.V:10.4f}")
print("averaged:", {d: round(v, 4) for d, v in table.averaged().items()})
