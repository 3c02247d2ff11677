"""Compare F(v, lam r) with F(v_lam, r) for every functional on the corpus.

    python3 scripts/scaling_study.py --n 48 --lam 0.5 0.25 --r 0.5 0.25
"""

import argparse

from nsmorrey.fields import Grid4, ParabolicCylinder, natural_rescale
from nsmorrey.functionals import evaluate
from nsmorrey.generators import corpus_fields


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=48, help="source grid nodes per axis")
    ap.add_argument("--lam", type=float, nargs="+", default=[0.5, 0.25])
    ap.add_argument("--r", type=float, nargs="+", default=[0.5, 0.25])
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--floor", type=float, default=1e-6)
    args = ap.parse_args()
    n_dst, nt = max(8, (5 * args.n) // 6), args.n // 2 + 1
    worst = 0.0
    print("lam r field functional F(v,lam r) F(v_lam,r) rel_err")
    for lam in args.lam:
        for r in args.r:
            src = Grid4.for_cylinder(ParabolicCylinder((0, 0, 0), 0.0, lam * r), args.n, nt)
            dst = Grid4.for_cylinder(ParabolicCylinder((0, 0, 0), 0.0, r), n_dst, nt - 4)
            for name, v, p in corpus_fields(src, args.delta):
                which = ("A", "E", "C", "H", "E3", "M") + (("D0",) if p is not None else ())
                a = evaluate(v, p, (0, 0, 0), 0.0, [lam * r], which=which, s=5, l=5)[0]
                vl, pl = natural_rescale(v, p, lam, dst)
                b = evaluate(vl, pl, (0, 0, 0), 0.0, [r], which=which, s=5, l=5)[0]
                for k in which:
                    err = abs(b[k] - a[k]) / max(abs(a[k]), args.floor)
                    worst = max(worst, err)
                    print(f"{lam} {r} {name} {k} {a[k]:.6g} {b[k]:.6g} {err:.4f}")
    print(f"worst relative error {worst:.4f}")


if __name__ == "__main__":
    main()
