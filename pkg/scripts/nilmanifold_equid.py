#!/usr/bin/env python3
"""Cesaro occupation statistics of a drifted unipotent walk on H(R)/H(Z)."""

import argparse
import math

import numpy as np
from fractions import Fraction as F

from nilwalk.algebra import heisenberg3
from nilwalk.measures import AffineImage, AtomicMeasure
from nilwalk.nilmanifold import cesaro_equidistribution, haar_control


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--replicas", type=int, default=100)
    ap.add_argument("--cells", type=int, default=8)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    heis = heisenberg3()
    base = AtomicMeasure(heis, [(1, 0, 0), (0, 1, 0), (0, 0, 1)],
                         [F(2, 5), F(3, 10), F(3, 10)])
    mat = np.array([[1.0, 0, 0], [0, 1.0, 0],
                    [math.sqrt(2), math.sqrt(3), 0.0]])
    mu = AffineImage(base, mat, np.zeros(3))

    checkpoints = sorted({args.steps // 4, args.steps // 2, args.steps})
    rep = cesaro_equidistribution(mu, args.steps, args.replicas,
                                  cells_per_axis=args.cells, seed=args.seed,
                                  checkpoints=checkpoints)
    for cp in checkpoints:
        r = rep["checkpoints"][cp]
        print(f"N={cp:5d}  max-cell discrepancy = {r['discrepancy']:.5f}   "
              f"(relative {r['relative_discrepancy']:.3f}, {r['n_samples']} samples)")
    floor = haar_control(args.steps * args.replicas, args.cells)
    print(f"uniform-sampling floor at the same sample count: "
          f"{floor['discrepancy']:.5f}")


if __name__ == "__main__":
    main()
