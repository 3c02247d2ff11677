"""Compute reference values with scipy quadrature and freeze them for the tests.

Every value here comes from one-dimensional (or two-dimensional) adaptive
quadrature of closed-form integrands, independent of the package's grid
machinery.  Run once; the output is committed as tests/data/oracles.json.
"""

import argparse
import json
import math
from pathlib import Path

from scipy import integrate

BALL = 4.0 * math.pi / 3.0


def ball_y(f, r):
    """int_{B(0, r)} f(x2) dx via slabs of constant x2."""
    return integrate.quad(lambda y: math.pi * (r * r - y * y) * f(y), -r, r,
                          epsabs=1e-14, epsrel=1e-12, limit=200)[0]


def shear(a=1.0, k=1.0):
    """Functionals of v = (a e^{-k^2 t} sin(k x2), 0, 0) at center 0, t0 = 0."""
    def E(r):
        tint = integrate.quad(lambda t: math.exp(-2 * k * k * t), -r * r, 0)[0]
        return a * a * k * k * tint * ball_y(lambda y: math.cos(k * y) ** 2, r) / r

    def A(r):
        return a * a * math.exp(2 * k * k * r * r) * ball_y(lambda y: math.sin(k * y) ** 2, r) / r

    def C(r):
        tint = integrate.quad(lambda t: math.exp(-3 * k * k * t), -r * r, 0)[0]
        return a ** 3 * tint * ball_y(lambda y: abs(math.sin(k * y)) ** 3, r) / r ** 2

    out = {"E1": E(1.0), "E_half": E(0.5), "A1": A(1.0), "A_half": A(0.5), "C1": C(1.0),
           "C_half": C(0.5)}
    out["I21_half_1"] = out["C_half"] / (8 * out["A1"] ** 0.75 * out["E1"] ** 0.75
                                         + out["A1"] ** 1.5 / 8)
    out["I22_R1"] = (out["A_half"] + out["E_half"]) / (out["C1"] ** (2 / 3) + out["C1"])
    return out


def near_singular_A(delta, r):
    """A(r) at center 0 for the time-independent swirl (-x2, x1, 0)/(|x|^2 + delta^2)."""
    radial = integrate.quad(lambda s: s ** 4 / (s * s + delta * delta) ** 2, 0, r,
                            epsabs=1e-14, epsrel=1e-12)[0]
    return 8 * math.pi / 3 * radial / r


def local_energy_terms(t, R=0.7, t_on=-0.95, t_full=-0.8):
    """Both sides of the localized energy identity for the unit shear flow."""
    def tau(s):
        if s <= t_on:
            return 0.0, 0.0
        if s >= t_full:
            return 1.0, 0.0
        w = t_full - t_on
        q = (s - t_on) / w
        return 3 * q * q - 2 * q ** 3, (6 * q - 6 * q * q) / w

    def ball(fn):
        return integrate.dblquad(lambda rho, y: 2 * math.pi * rho * fn(y, rho * rho), -R, R,
                                 0, lambda y: math.sqrt(max(R * R - y * y, 0.0)),
                                 epsabs=1e-13, epsrel=1e-11)[0]

    s = lambda y, r2: (y * y + r2) / R ** 2
    beta = lambda y, r2: (1 - s(y, r2)) ** 3
    lap = lambda y, r2: (-18 * (1 - s(y, r2)) ** 2 + 24 * s(y, r2) * (1 - s(y, r2))) / R ** 2
    Is = ball(lambda y, r2: beta(y, r2) * math.sin(y) ** 2)
    Ic = ball(lambda y, r2: beta(y, r2) * math.cos(y) ** 2)
    Il = ball(lambda y, r2: lap(y, r2) * math.sin(y) ** 2)
    pts = [t_on, t_full]
    mass = tau(t)[0] * math.exp(-2 * t) * Is
    diss = integrate.quad(lambda q: tau(q)[0] * math.exp(-2 * q), -1, t, points=pts)[0] * Ic
    flux = integrate.quad(lambda q: math.exp(-2 * q) * (tau(q)[0] * Il + tau(q)[1] * Is),
                          -1, t, points=pts)[0]
    return {"lhs": mass + 2 * diss, "rhs": flux}


def gaussian_ball(r=1.0):
    """int_{B(0, r)} exp(-|x|^2) dx."""
    return 4 * math.pi * integrate.quad(lambda s: s * s * math.exp(-s * s), 0, r,
                                        epsabs=1e-15, epsrel=1e-13)[0]


def build() -> dict:
    return {
        "ball_volume": BALL,
        "constant": {"A1": BALL, "C1": BALL, "H1": BALL, "M55_1": BALL ** 0.2,
                     "L3inf": BALL ** (1 / 3), "L5": BALL ** 0.2,
                     "I21_1_1": BALL ** -0.5,
                     "I22_R1": (BALL / 4) / (BALL ** (2 / 3) + BALL),
                     "L21b_quarter_lhs": BALL / 16, "L21b_C0": BALL},
        "shear": shear(),
        "near_singular_A": {str(r): near_singular_A(0.05, r) for r in (0.4, 0.2, 0.1)},
        "local_energy": {str(t): local_energy_terms(t) for t in (-0.75, -0.5, -0.25)},
        "gaussian_ball": gaussian_ball(),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "data"
                                         / "oracles.json"))
    args = ap.parse_args(argv)
    Path(args.out).write_text(json.dumps(build(), indent=2, sort_keys=True) + "\n")
    print(args.out)


if __name__ == "__main__":
    main()
