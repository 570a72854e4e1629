"""kavg-plot: render experiment CSVs as figures.

    kavg-plot --job fig5 --in out/fig5/fig5_entropy.csv --out plots/
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FIGURES, FigureJob, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kavg-plot", description=__doc__)
    parser.add_argument("--job", required=True, choices=FIGURES)
    parser.add_argument("--in", dest="input_csv", required=True, type=Path)
    parser.add_argument("--out", required=True, type=Path)
    args = parser.parse_args(argv)

    paths = render(FigureJob(args.input_csv, args.job, args.out))
    for p in paths:
        print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
