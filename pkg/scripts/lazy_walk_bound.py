#!/usr/bin/env python3
"""Exact profile of the lazy-walk Cesaro comparison bound over dyadic N."""

import argparse

from nilwalk.nilmanifold import lazy_walk_bound_profile


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--min-exp", type=int, default=4)
    ap.add_argument("--max-exp", type=int, default=14)
    args = ap.parse_args()

    prof = lazy_walk_bound_profile(range(args.min_exp, args.max_exp + 1))
    for row in prof["rows"]:
        print(f"N = {row['N']:6d}   bound = {row['value']:.6f}   "
              f"bound * sqrt(N)/log(N) = {row['normalized']:.4f}")
    print(f"fitted constant (max of the normalized column): "
          f"{prof['fitted_constant']:.4f}")
    print(f"max/min of the normalized column: {prof['max_over_min']:.3f}")


if __name__ == "__main__":
    main()
