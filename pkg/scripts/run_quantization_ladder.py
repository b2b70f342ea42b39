#!/usr/bin/env python3
"""Energy quantization experiment: synthesized concentrating sequences.

Builds a weak limit plus one or two shrinking extremal bubbles, evaluates the
energy and mass bookkeeping on each rung of the radius ladder through the
exact conformal transport, and prints the gap to the predicted bubble level.

Usage: python scripts/run_quantization_ladder.py [--bubbles 2] [--out out/]
"""

import argparse
import os
import sys

import numpy as np

from cryamabe.bubbling import BubbleChart, PSSequenceSpec, quantization_ladder
from cryamabe.energy import YamabeProblem


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--bubbles", type=int, default=1, choices=(1, 2))
    ap.add_argument("--jmax", type=int, default=8)
    ap.add_argument("--ladder", type=str, default="1e-1,3e-2,1e-2,3e-3,1e-3")
    ap.add_argument("--out", type=str, default="out")
    args = ap.parse_args()

    ladder = tuple(float(x) for x in args.ladder.split(","))
    prob = YamabeProblem.build(N=1, k=1.0, jmax=args.jmax)
    consts = prob.constants
    center = np.array([1.0 + 0j, 0.0 + 0j])
    charts = [BubbleChart.standard(center, ladder, consts)]
    if args.bubbles == 2:
        charts.append(BubbleChart.standard(-center, ladder, consts))
    spec = PSSequenceSpec(prob.ground_constant(), tuple(charts))

    rows = quantization_ladder(spec, prob)
    print(f"bubble level C_E = {consts.C_E:.8f}; {args.bubbles} bubble(s)")
    print(f"{'R_n':>10} {'E_n':>12} {'gap/C_E':>10} {'p*-mass':>12} {'|u|_Hk^2':>10}")
    for r in rows:
        print(
            f"{r['R_n']:>10.1e} {r['E_n']:>12.6f} {r['energy_gap'] / consts.C_E:>+10.5f}"
            f" {r['mass_n']:>12.6f} {r['hk_norm_sq']:>10.4f}"
        )

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"quantization_{args.bubbles}bubble.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,R_n,E_n,energy_gap,pstar_mass,hk_norm_sq\n")
        for r in rows:
            fh.write(
                f"{r['n']},{r['R_n']!r},{r['E_n']!r},{r['energy_gap']!r},{r['mass_n']!r},{r['hk_norm_sq']!r}\n"
            )
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
