"""Corpus-max implied constants at several resolutions.

    python3 scripts/audit_corpus.py --n 48 96

Prints one line per field and resolution, then the relative change of the
corpus max between consecutive resolutions.
"""

import argparse
import gc
import json
import time

from nsmorrey.audits import run_audits, summarize
from nsmorrey.fields import Grid4
from nsmorrey.functionals import LadderConfig
from nsmorrey.generators import corpus_fields


def corpus_max(n: int, nt: int, delta: float, verbose: bool = True) -> dict:
    recs = []
    for name, v, p in corpus_fields(Grid4.cube(n, nt), delta):
        mine = run_audits(v, p, ((0.0, 0.0, 0.0), 0.0), ladder_config=LadderConfig(1.0, 0.5, 4))
        if verbose:
            print(n, name, json.dumps({k: round(c, 5) for k, c in summarize(mine).items()}),
                  flush=True)
        recs += mine
        del v, p
        gc.collect()
    return summarize(recs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[48, 96])
    ap.add_argument("--nt", type=int, default=49)
    ap.add_argument("--delta", type=float, default=0.1, help="swirl mollification")
    args = ap.parse_args()
    maxima = {}
    for n in args.n:
        t0 = time.perf_counter()
        maxima[n] = corpus_max(n, args.nt, args.delta)
        print(f"{n}: corpus max {json.dumps(maxima[n])} ({time.perf_counter() - t0:.1f} s)")
    for a, b in zip(args.n, args.n[1:]):
        change = {k: abs(maxima[b][k] - maxima[a][k]) / maxima[a][k]
                  for k in maxima[a] if maxima[a][k] > 0}
        print(f"{a}->{b} relative change:", json.dumps({k: round(c, 4) for k, c in change.items()}))


if __name__ == "__main__":
    main()
