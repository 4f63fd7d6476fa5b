#!/usr/bin/env python
"""Trapping-escape curves: mean atoms to escape versus relative jitter for
one, two, and three Rabi cycles; closed form plus Monte Carlo columns.

Extra CLI flags are passed through, e.g. --trials or --out.
"""

import sys

from cavityqubits.cli import main

if __name__ == "__main__":
    sys.exit(
        main(
            [
                "fig3",
                "--sigma-rel", "0.01:0.20:0.01",
                "--m", "1,2,3",
                "--trials", "20000",
                "--seed", "3",
                *sys.argv[1:],
            ]
        )
    )
