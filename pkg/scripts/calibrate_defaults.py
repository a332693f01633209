#!/usr/bin/env python3
"""Regenerate the packaged default constants file from the pilot grid."""

import argparse
import pathlib

from repunif.constants import save_constants
from repunif.harness import calibrate

DEFAULT_GRID = [(500, 0.3), (1000, 0.25), (2000, 0.2)]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rho", type=float, default=0.2)
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--seed", type=int, default=31415)
    parser.add_argument(
        "--out",
        default=str(pathlib.Path(__file__).resolve().parents[1]
                    / "src" / "repunif" / "default_constants.txt"),
    )
    args = parser.parse_args()
    constants, provenance = calibrate(DEFAULT_GRID, args.rho, args.trials, args.seed)
    provenance.append("regenerate with: python scripts/calibrate_defaults.py")
    save_constants(args.out, constants, provenance)
    print(f"wrote {args.out}")
    for line in provenance:
        print(f"  {line}")


if __name__ == "__main__":
    main()
