#!/usr/bin/env python3
"""Run the whole identity registry and print one report line per record.

Examples:
    python scripts/run_verify_all.py --digits 40
    python scripts/run_verify_all.py --digits 30 --method raw --max-terms 10000
    python scripts/run_verify_all.py --json > reports.json
"""

import argparse
import sys
import time

from altprod import harness as hz


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--digits", type=int, default=30)
    ap.add_argument("--method", choices=["raw", "euler", "wynn", "richardson"])
    ap.add_argument("--max-terms", type=int, default=None)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    t0 = time.perf_counter()
    reports = hz.verify_all(
        args.digits,
        method=args.method.upper() if args.method else None,
        max_terms=args.max_terms,
        workers=args.workers,
    )
    wall = time.perf_counter() - t0

    if args.json:
        print(hz.reports_to_json(reports))
    else:
        for r in reports:
            status = "PASS" if r.passed else "FAIL"
            line = (
                f"{r.id:<16} {status}  agreement={r.agreement_digits:>3} "
                f"target={r.target_digits}  terms={r.terms_used:>5} "
                f"method={r.method:<10} {r.elapsed_ms:>5}ms"
            )
            if r.reason:
                line += f"\n{'':19}reason: {r.reason}"
            print(line)
        passed = sum(r.passed for r in reports)
        print(f"\n{passed}/{len(reports)} passed in {wall:.2f}s wall")
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
