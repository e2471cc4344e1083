#!/usr/bin/env python3
"""
Summarize an Experiment 1 CSV: iterations each detector needs to come
within a relative tolerance of the ZF SER, and the UW-SVD speedup.
"""

import argparse
import logging
import sys
from pathlib import Path
from types import SimpleNamespace

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from uwsvd_mimo.experiments.summary import DEFAULT_REL_TOL, iterations_to_threshold
from uwsvd_mimo.utils.csv_writer import read_csv


def summarize(csv_path, rel_tol):
    """Return rows of (method, iterations with UW-SVD, iterations plain)."""
    frame = read_csv(csv_path)
    reached = {}
    for (method, uwsvd), group in frame.groupby(["method", "uwsvd"], sort=True):
        group = group.sort_values("iteration")
        curve = SimpleNamespace(ser=group["ser"].to_numpy(), zf_ser=float(group["zf_ser"].iloc[0]))
        reached[(method, bool(uwsvd))] = iterations_to_threshold(curve, rel_tol)

    rows = []
    for method in sorted({m for m, _ in reached}):
        rows.append((method, reached.get((method, True)), reached.get((method, False))))
    return rows


def main():
    parser = argparse.ArgumentParser(description="Iterations-to-ZF summary of an Experiment 1 CSV")
    parser.add_argument('csv', help='Experiment 1 result file')
    parser.add_argument('--rel-tol', type=float, default=DEFAULT_REL_TOL, help='Relative excess over ZF SER')
    parser.add_argument('--verbose', '-v', action='store_true', help='Enable debug logging')
    args = parser.parse_args()

    level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s')

    try:
        rows = summarize(args.csv, args.rel_tol)
    except Exception as e:
        logging.error(f"Error: {e}")
        sys.exit(1)

    print(f"{'method':<8}{'uwsvd':>8}{'plain':>8}{'speedup':>10}")
    for method, with_uwsvd, plain in rows:
        speedup = f"{plain / with_uwsvd:.2f}" if with_uwsvd and plain else "-"
        print(f"{method:<8}{str(with_uwsvd or '-'):>8}{str(plain or '-'):>8}{speedup:>10}")


if __name__ == '__main__':
    main()
