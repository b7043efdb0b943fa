#!/usr/bin/env python3
"""
Run Log Analysis Script
Summarises a metrics CSV written by run_experiment.py: final values, best
values and the rounds where feasibility first dropped below a few thresholds.
"""

import sys
import os
from typing import Dict, List, Optional

# Add project root to path
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)

from src.errors import ThanosError
from src.metrics.records import RunRecord
from src.storage.run_log import read_csv

FEAS_THRESHOLDS = (1e-2, 1e-4, 1e-6, 1e-8)
METRICS = ('dist', 'feas', 'consensus', 'stat_residual')


def first_below(records: List[RunRecord], field: str, threshold: float) -> Optional[int]:
    """First round k whose `field` is at or below threshold."""
    for rec in records:
        value = getattr(rec, field)
        if value is not None and value <= threshold:
            return rec.k
    return None


def summarize(records: List[RunRecord]) -> Dict:
    """Final and best value of every metric column."""
    summary = {'rounds': len(records)}
    if not records:
        return summary
    last = records[-1]
    for field in METRICS:
        values = [(getattr(r, field), r.k) for r in records if getattr(r, field) is not None]
        if not values:
            continue
        best, best_k = min(values)
        summary[field] = {'final': getattr(last, field), 'best': best, 'best_k': best_k}
    summary['final_sigma'] = last.sigma
    summary['final_eta'] = last.eta
    return summary


def analyze_run_log(path: str) -> int:
    """Print the summary of one run log."""
    print(f"🔍 RUN LOG ANALYSIS: {path}")
    print("=" * 50)
    try:
        records = read_csv(path)
    except ThanosError as e:
        print(f"❌ {e}")
        return e.exit_code

    summary = summarize(records)
    print(f"\n📊 {summary['rounds']} rounds recorded")
    if not records:
        print("  (header-only log)")
        return 0

    print("\n📈 METRICS (final / best @ k):")
    for field in METRICS:
        if field not in summary:
            print(f"  {field:<14} -")
            continue
        row = summary[field]
        print(f"  {field:<14} {row['final']:.3e} / {row['best']:.3e} @ {row['best_k']}")
    print(f"\n  sigma at end: {summary['final_sigma']:.4g}, mean eta at end: {summary['final_eta']:.4g}")

    print("\n🎯 FEASIBILITY MILESTONES:")
    for threshold in FEAS_THRESHOLDS:
        k = first_below(records, 'feas', threshold)
        print(f"  feas <= {threshold:.0e}: {'k=' + str(k) if k is not None else 'not reached'}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("Usage: python analyze_run_log.py metrics.csv")
        return 2
    return analyze_run_log(argv[0])


if __name__ == "__main__":
    sys.exit(main())
