#!/usr/bin/env python3
"""Homogeneous-kernel diagnostics: semigroup composition and Green inversion.

Prints the fitted composition constant and shape residual of the iterated
order-1 potential against the order-2 kernel, and the fitted fundamental
solution constant at two resolutions.

Usage: python scripts/riesz_diagnostics.py [--grid 64]
"""

import argparse
import sys

from cryamabe.heisenberg import BoxDomain
from cryamabe.riesz import gaussian_bump, green_inversion_check, semigroup_check


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--grid", type=int, default=64)
    args = ap.parse_args()

    rep = semigroup_check(shape=(args.grid,) * 3)
    print(
        f"semigroup on {rep['grid']}: fitted constant {rep['fitted_constant']:.4f}, "
        f"shape residual {rep['shape_residual']:.4%}"
    )
    box = BoxDomain((-3.0, -3.0, -6.0), (3.0, 3.0, 6.0))
    for n in (args.grid // 2 + args.grid // 4, args.grid):
        g = green_inversion_check(
            gaussian_bump(box, (n,) * 3, width=0.6), margin=max(4, n // 8), centered_radial=True
        )
        print(f"green inversion at {n}^3: constant {g['constant']:.6f}, residual {g['residual']:.4%}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
