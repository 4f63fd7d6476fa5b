#!/usr/bin/env python
"""Weight-evolution dataset: binomial mixture of 1..6 photons, fixed
tau = 0.825/gamma (the optimum for that mixture), seeded run.

Extra CLI flags are passed through, e.g. --out or --seed.
"""

import sys

from cavityqubits.cli import main

if __name__ == "__main__":
    sys.exit(
        main(["fig2", "--nmax", "6", "--tau", "0.825", "--seed", "7", *sys.argv[1:]])
    )
