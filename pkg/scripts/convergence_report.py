#!/usr/bin/env python3
"""Raw-truncation behavior of the product records: partial values, honest
digit counts against the accelerated limit, and the error-halving ratio
error(2n)/error(n) that tells the linear-tail members (ratio about 1/2)
from the quadratic-tail members (ratio about 1/4).

Example:
    python scripts/convergence_report.py --ids KT1,KT3,MELZAK --digits 30
"""

import argparse
import sys

import mpmath as mp

from altprod import harness as hz
from altprod import numkernel as nk
from altprod import products as pr

DEFAULT_IDS = "KT1,KT2,KT3,KT4,MELZAK,HOLCOMBE,GS53R,GS55R"


def halving_ratios(spec, p, points=(32, 64, 128)):
    limit = pr.limit(spec, p, min(nk.digits_for_bits(p), 40)).value
    session = pr.ProductEvalSession(spec)
    with mp.workprec(p + 64):
        lim = mp.make_mpf(limit.raw)
        err = {
            n: abs(mp.exp(mp.make_mpf(session.log_partial(n, p).raw)) - lim)
            for n in sorted(set(points) | {2 * n for n in points})
        }
        return [float(err[2 * n] / err[n]) for n in points]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ids", default=DEFAULT_IDS, help="comma-separated registry ids")
    ap.add_argument("--n", default="1,10,100,1000", help="table indices")
    ap.add_argument("--digits", type=int, default=30)
    args = ap.parse_args()

    ids = [tok.strip() for tok in args.ids.split(",") if tok.strip()]
    n_values = [int(tok) for tok in args.n.split(",")]
    p = nk.bits_for_digits(args.digits)
    reg = hz.default_registry()
    show = min(args.digits, 15)

    for id in ids:
        form = reg.lhs_form(id)
        if form[0] != "product":
            print(f"{id}: skipped (no product LHS)")
            continue
        rows = hz.convergence_table(id, n_values, p)
        print(f"\n{id}  ({reg.get(id).anchor})")
        print(f"  {'n':>6}  {'partial':<{show + 4}}  digits")
        for row in rows:
            print(
                f"  {row.n:>6}  {nk.truncated_decimal(row.partial, show):<{show + 4}}"
                f"  {row.digits}"
            )
        ratios = halving_ratios(form[1], p)
        pretty = ", ".join(f"{r:.4f}" for r in ratios)
        print(f"  error(2n)/error(n) at n=32,64,128: {pretty}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
