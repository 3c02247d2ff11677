"""Rank a lattice of centers around the mollified swirl by the C + D0 score.

    python3 scripts/near_singular_scan.py --delta 0.05 --out scan.csv
"""

import argparse
import math

from nsmorrey.criteria import ScanRegion, scan, scan_csv
from nsmorrey.fields import Grid4
from nsmorrey.functionals import LadderConfig
from nsmorrey.generators import gen_near_singular
from nsmorrey.reports import write_text


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--n", type=int, default=48)
    ap.add_argument("--half-width", type=float, default=0.25, help="lattice spans [-w, w]^3")
    ap.add_argument("--stride", type=float, default=0.25)
    ap.add_argument("--out", help="optional CSV of ranked centers")
    args = ap.parse_args()
    r0 = 0.25
    g = Grid4.cube(args.n, args.n + 1, -2 * args.half_width, 2 * args.half_width, -r0 * r0, 0.0)
    v = gen_near_singular(args.delta, g)
    w = args.half_width
    centers = ScanRegion((-w, -w, -w, 0.0), (w, w, w, 0.0)).centers(args.stride)
    entries = scan(v, None, centers, "CKN_12", {"eps0": 1.0}, LadderConfig(r0, 2 ** -0.5, 5))
    for e in entries[:5]:
        print(e.center, f"{e.score:.5g}", e.verdict.verdict)
    core = next(e.score for e in entries if e.center[0] == (0.0, 0.0, 0.0))
    far = max(e.score for e in entries if math.dist(e.center[0], (0, 0, 0)) >= 0.25 - 1e-12)
    print(f"core / best far score: {core / far:.3f}")
    if args.out:
        write_text(args.out, scan_csv(entries))


if __name__ == "__main__":
    main()
