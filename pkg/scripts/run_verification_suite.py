"""Run the inequality checks on the standard configurations and write JSON reports."""
import argparse
from pathlib import Path

import numpy as np

from heatlab.asymptotics import LatticeFamily, regime4_envelope, single_ball_remainder
from heatlab.geometry import BallUnion
from heatlab.theorems import (Budget, lemma2_lattice_instance, verify_decoupling, verify_theorem1, verify_theorem2,
                              verify_theorem3i)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/reports")
    ap.add_argument("--samples", type=int, default=400_000)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    budget = Budget(samples=args.samples, seed=args.seed)
    disk = BallUnion.single(2, 1.0, label="unit disk")
    grid = np.logspace(-3, 0, 15)
    reports = {
        "T1_disk": verify_theorem1(disk, np.logspace(-4, 1, 15), budget),
        "T1_lattice": verify_theorem1(LatticeFamily(2, 0.25, 0.4).truncate(500), grid, budget),
        "T2_disk": verify_theorem2(disk, np.logspace(-4, 1, 15), budget),
        "T2_lattice": verify_theorem2(LatticeFamily(2, 0.25, 1.5).truncate(500), grid, budget),
        "T3i": verify_theorem3i(LatticeFamily(2, 0.25, 0.4), [1e-4, 1e-3], budget=budget),
        "T3ii": verify_decoupling(LatticeFamily(2, 0.25, 0.0).window(5), None, np.logspace(-3, 0, 8), budget),
        "L2": lemma2_lattice_instance(),
        "remainder": single_ball_remainder(2, 1.0, np.logspace(-6, 0, 25)),
        "envelope_R4": regime4_envelope(3, 0.25, np.logspace(-6, -3, 4)),
        "envelope_R5": regime4_envelope(3, 0.25, np.logspace(-6, -3, 4), alpha=2.0),
    }
    for name, rep in reports.items():
        (out / f"{name}.json").write_text(rep.to_json() + "\n")
        print(f"{name:12s} {rep.summary()}")


if __name__ == "__main__":
    main()
