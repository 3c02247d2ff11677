"""Closed-form velocity/pressure fields used as the audit corpus.

Every generator samples an analytic formula node by node, so re-running with
the same spec reproduces the arrays byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ContractError
from .fields import Grid4, ScalarField, VectorField

KINDS = ("zero", "constant", "linear_strain", "shear_heat", "trig_divfree",
         "near_singular", "manufactured_linear_triple")


@dataclass
class GeneratorSpec:
    kind: str
    params: dict = field(default_factory=dict)
    grid: Optional[Grid4] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown generator kind {self.kind!r}; choose from {KINDS}")

    def to_json(self) -> dict:
        return {"schema": "genspec-v1", "kind": self.kind, "params": self.params,
                "grid": None if self.grid is None else self.grid.to_dict()}

    @classmethod
    def from_json(cls, d: dict) -> "GeneratorSpec":
        if d.get("schema") != "genspec-v1":
            raise ConfigurationError("generator spec must carry schema 'genspec-v1'")
        grid = Grid4.from_dict(d["grid"]) if d.get("grid") else None
        return cls(d["kind"], dict(d.get("params", {})), grid)


@dataclass
class Generated:
    v: VectorField
    p: Optional[ScalarField] = None
    u: Optional[VectorField] = None
    f: Optional[VectorField] = None


def _meta(kind, params, grid, formula, singular=None) -> str:
    d = {"genspec": {"schema": "genspec-v1", "kind": kind, "params": params,
                     "grid": grid.to_dict()},
         "formula": formula}
    if singular is not None:
        d["singular"] = singular
    return json.dumps(d, sort_keys=True)


def _sample(grid: Grid4, fn, ncomp: int) -> np.ndarray:
    """Fill an array slice by slice from ``fn(X, Y, Z, t)``."""
    out = np.empty(grid.shape + ((ncomp,) if ncomp else ()))
    X, Y, Z = grid.mesh()
    for k, t in enumerate(grid.times):
        out[k] = fn(X, Y, Z, float(t))
    return out


def _stack(a, b, c):
    return np.stack(np.broadcast_arrays(a, b, c), axis=-1)


def _check_wavelength(grid: Grid4, k: float, what: str) -> None:
    if k == 0:
        return
    per_wave = 2 * math.pi / abs(k) / max(grid.spacing)
    if per_wave < 8:
        raise ConfigurationError(
            f"{what}: wavenumber {k} gives {per_wave:.1f} samples per wavelength, need >= 8")


# -- elementary fields -----------------------------------------------------

def gen_zero(grid: Grid4):
    meta = _meta("zero", {}, grid, "v=0, p=0")
    return (VectorField(grid, np.zeros(grid.shape + (3,)), meta),
            ScalarField(grid, np.zeros(grid.shape), meta))


def gen_constant(value, grid: Grid4):
    c = np.asarray(value, dtype=np.float64)
    if c.shape != (3,):
        raise ConfigurationError("constant value must be a 3-vector")
    meta = _meta("constant", {"value": c.tolist()}, grid, "v=c, p=0")
    v = np.broadcast_to(c, grid.shape + (3,)).copy()
    return VectorField(grid, v, meta), ScalarField(grid, np.zeros(grid.shape), meta)


def gen_linear_strain(rate: float, grid: Grid4):
    """Steady strain v = a(x1, -x2, 0) with p = -a^2 (x1^2 + x2^2) / 2.

    Exact: v.grad v = -grad p and the Laplacian of v vanishes.
    """
    a = float(rate)
    meta = _meta("linear_strain", {"rate": a}, grid, "v=a(x1,-x2,0), p=-a^2(x1^2+x2^2)/2")
    v = _sample(grid, lambda X, Y, Z, t: _stack(a * X, -a * Y, 0.0 * Z), 3)
    p = _sample(grid, lambda X, Y, Z, t: -0.5 * a * a * (X * X + Y * Y), 0)
    return VectorField(grid, v, meta), ScalarField(grid, p, meta)


def gen_shear_heat(amplitude: float, wavenumber: float, grid: Grid4):
    """v = (a exp(-k^2 t) sin(k x2), 0, 0), p = 0: exact since v.grad v = 0."""
    a, k = float(amplitude), float(wavenumber)
    _check_wavelength(grid, k, "shear_heat")
    meta = _meta("shear_heat", {"amplitude": a, "wavenumber": k}, grid,
                 "v=(a*exp(-k^2 t)*sin(k x2),0,0), p=0")
    v = _sample(grid, lambda X, Y, Z, t: _stack(a * math.exp(-k * k * t) * np.sin(k * Y), 0.0, 0.0), 3)
    return VectorField(grid, v, meta), ScalarField(grid, np.zeros(grid.shape), meta)


# -- random trigonometric curl field ---------------------------------------

class TrigModes:
    """v = sum_m c_m cos(k_m.x + phi_m) exp(-decay |k_m|^2 t), c_m = k_m x b_m.

    Each term is the curl of b_m sin(k_m.x + phi_m) exp(...), so div v = 0
    identically.  The pressure solves -Lap p = d_i d_j (v_i v_j) in closed form
    (product-to-sum over mode pairs).
    """

    def __init__(self, seed: int, modes: int, amplitude: float, kmax: int = 2, decay: float = 0.05):
        rng = np.random.default_rng(seed)
        ks = []
        while len(ks) < modes:
            k = rng.integers(-kmax, kmax + 1, size=3)
            if k.any():
                ks.append(k.astype(np.float64))
        self.k = np.array(ks).reshape(-1, 3)
        b = rng.standard_normal((modes, 3))
        self.phase = rng.uniform(0.0, 2 * math.pi, size=modes)
        self.c = amplitude * np.cross(self.k, b) / math.sqrt(max(modes, 1))
        self.decay = float(decay)
        self.k2 = (self.k ** 2).sum(axis=1)
        self.kmax_norm = float(np.sqrt(self.k2.max())) if modes else 0.0

    def _trig(self, X, Y, Z):
        for m in range(len(self.k)):
            th = self.k[m, 0] * X + self.k[m, 1] * Y + self.k[m, 2] * Z + self.phase[m]
            yield m, np.cos(th), np.sin(th)

    def velocity(self, X, Y, Z, t):
        out = np.zeros(X.shape + (3,))
        for m, cm, _ in self._trig(X, Y, Z):
            out += (math.exp(-self.decay * self.k2[m] * t) * cm)[..., None] * self.c[m]
        return out

    def pressure(self, X, Y, Z, t):
        trig = list(self._trig(X, Y, Z))
        g = np.exp(-self.decay * self.k2 * t)
        p = np.zeros(X.shape)
        n = len(trig)
        for m in range(n):
            _, cm, sm = trig[m]
            for j in range(m + 1, n):
                _, cj, sj = trig[j]
                kc = float(self.k[j] @ self.c[m]) * float(self.k[m] @ self.c[j])
                if kc == 0.0:
                    continue
                qp = self.k[m] + self.k[j]
                qm = self.k[m] - self.k[j]
                term = 0.0
                if qp.any():
                    term = term + (kc / float(qp @ qp)) * (cm * cj - sm * sj)
                if qm.any():
                    term = term - (kc / float(qm @ qm)) * (cm * cj + sm * sj)
                p -= g[m] * g[j] * term
        return p


def gen_trig_divfree(seed: int, modes: int, amplitude: float, grid: Grid4,
                     kmax: int = 2, decay: float = 0.05, with_pressure: bool = True):
    """Random smooth divergence-free field; returns ``(v, p)`` (``p`` None if not requested)."""
    tm = TrigModes(seed, modes, amplitude, kmax, decay)
    _check_wavelength(grid, tm.kmax_norm, "trig_divfree")
    params = {"seed": int(seed), "modes": int(modes), "amplitude": float(amplitude),
              "kmax": int(kmax), "decay": float(decay)}
    meta = _meta("trig_divfree", params, grid, "v=curl(sum b_m sin(k_m.x+phi_m) exp(-decay|k_m|^2 t))")
    v = VectorField(grid, _sample(grid, tm.velocity, 3), meta)
    p = ScalarField(grid, _sample(grid, tm.pressure, 0), meta) if with_pressure else None
    return v, p


# -- near-singular swirl ---------------------------------------------------

def gen_near_singular(delta: float, grid: Grid4, center=(0.0, 0.0, 0.0)):
    """Mollified -1-homogeneous swirl v = (-x2, x1, 0) / (|x|^2 + delta^2) about ``center``."""
    d = float(delta)
    floor = 2 * max(grid.spacing)
    if d < floor:
        raise ConfigurationError(f"delta={d} below two grid spacings ({floor})")
    cx, cy, cz = (float(c) for c in center)
    meta = _meta("near_singular", {"delta": d, "center": [cx, cy, cz]}, grid,
                 "v=(-x2,x1,0)/(|x|^2+delta^2)", singular=[[cx, cy, cz]])

    def fn(X, Y, Z, t):
        x, y, z = X - cx, Y - cy, Z - cz
        den = x * x + y * y + z * z + d * d
        return _stack(-y / den, x / den, 0.0 * z)

    return VectorField(grid, _sample(grid, fn, 3), meta)


# -- manufactured linear triple --------------------------------------------

def _bump(X, Y, Z, c, R):
    """psi = (1 - s)^4, s = |x - c|^2 / R^2, with gradient and Laplacian."""
    dx, dy, dz = X - c[0], Y - c[1], Z - c[2]
    s = (dx * dx + dy * dy + dz * dz) / (R * R)
    om = np.clip(1.0 - s, 0.0, None)
    psi = om ** 4
    gfac = -8.0 * om ** 3 / (R * R)
    lap = (-24.0 * om ** 3 + 48.0 * s * om ** 2) / (R * R)
    return psi, (gfac * dx, gfac * dy, gfac * dz), lap


def gen_manufactured_triple(bump: dict, u_spec: Optional[dict], grid: Grid4,
                            domain_radius: float = 1.0):
    """``(v, u, f)`` with v = a psi(x) exp(-t) e and f = d_t v + u.grad v - Lap v.

    ``bump`` keys: ``center`` (3-vector), ``radius``, ``amplitude`` (default 1),
    ``direction`` (default e1).  ``u_spec`` is ``None``/``{"kind": "zero"}`` or
    ``{"kind": "trig_divfree", "seed", "modes", "amplitude"[, "kmax", "decay"]}``.
    """
    c = [float(x) for x in bump.get("center", (0.0, 0.0, 0.0))]
    R = float(bump["radius"])
    a = float(bump.get("amplitude", 1.0))
    e = np.asarray(bump.get("direction", (1.0, 0.0, 0.0)), dtype=np.float64)
    if math.sqrt(sum(x * x for x in c)) + R >= domain_radius:
        raise ContractError("bump support touches the boundary of the unit ball")
    for label, cc, (lo, hi) in zip("xyz", c, grid.ranges):
        if cc - R <= lo or cc + R >= hi:
            raise ContractError(f"bump support touches the grid boundary along {label}")
    if R < 4 * max(grid.spacing):
        raise ConfigurationError("bump radius must span at least 4 grid spacings")

    u_spec = dict(u_spec or {"kind": "zero"})
    tm = None
    if u_spec.get("kind", "zero") == "trig_divfree":
        tm = TrigModes(u_spec["seed"], u_spec["modes"], u_spec["amplitude"],
                       u_spec.get("kmax", 2), u_spec.get("decay", 0.05))
        _check_wavelength(grid, tm.kmax_norm, "manufactured u")
    elif u_spec.get("kind", "zero") != "zero":
        raise ConfigurationError(f"unsupported u kind {u_spec.get('kind')!r}")

    params = {"bump": {"center": c, "radius": R, "amplitude": a, "direction": e.tolist()},
              "u": u_spec}
    meta = _meta("manufactured_linear_triple", params, grid,
                 "v=a*psi(x)*exp(-t)*e, f=dt v + u.grad v - lap v")

    def v_fn(X, Y, Z, t):
        psi, _, _ = _bump(X, Y, Z, c, R)
        return (a * math.exp(-t) * psi)[..., None] * e

    def f_fn(X, Y, Z, t):
        psi, g, lap = _bump(X, Y, Z, c, R)
        adv = 0.0
        if tm is not None:
            u = tm.velocity(X, Y, Z, t)
            adv = u[..., 0] * g[0] + u[..., 1] * g[1] + u[..., 2] * g[2]
        return (a * math.exp(-t) * (-psi + adv - lap))[..., None] * e

    v = VectorField(grid, _sample(grid, v_fn, 3), meta)
    if tm is None:
        u = VectorField(grid, np.zeros(grid.shape + (3,)), meta)
    else:
        u = VectorField(grid, _sample(grid, tm.velocity, 3), meta)
    f = VectorField(grid, _sample(grid, f_fn, 3), meta)
    return v, u, f


def generate(spec: GeneratorSpec) -> Generated:
    """Dispatch on ``spec.kind``."""
    if spec.grid is None:
        raise ConfigurationError("generator spec has no grid")
    g, pr = spec.grid, spec.params
    if spec.kind == "zero":
        return Generated(*gen_zero(g))
    if spec.kind == "constant":
        return Generated(*gen_constant(pr.get("value", (1.0, 0.0, 0.0)), g))
    if spec.kind == "linear_strain":
        return Generated(*gen_linear_strain(pr.get("rate", 1.0), g))
    if spec.kind == "shear_heat":
        return Generated(*gen_shear_heat(pr.get("amplitude", 1.0), pr.get("wavenumber", 1.0), g))
    if spec.kind == "trig_divfree":
        v, p = gen_trig_divfree(pr.get("seed", 0), pr.get("modes", 6), pr.get("amplitude", 1.0), g,
                                pr.get("kmax", 2), pr.get("decay", 0.05),
                                pr.get("with_pressure", True))
        return Generated(v, p)
    if spec.kind == "near_singular":
        return Generated(gen_near_singular(pr.get("delta", 0.05), g, pr.get("center", (0.0, 0.0, 0.0))))
    v, u, f = gen_manufactured_triple(pr.get("bump", {"radius": 0.5}), pr.get("u"), g)
    return Generated(v, None, u, f)


def standard_corpus(delta: float = 0.1) -> list:
    """The audit corpus as ``(name, GeneratorSpec without grid)`` pairs.

    ``delta`` is the swirl mollification; the swirl carries no pressure.
    """
    return [
        ("constant", GeneratorSpec("constant", {"value": [1.0, 0.5, -0.25]})),
        ("linear_strain", GeneratorSpec("linear_strain", {"rate": 1.0})),
        ("shear_heat", GeneratorSpec("shear_heat", {"amplitude": 1.0, "wavenumber": 1.0})),
        ("trig", GeneratorSpec("trig_divfree", {"seed": 7, "modes": 6, "amplitude": 1.0})),
        ("near_singular", GeneratorSpec("near_singular", {"delta": float(delta)})),
    ]


def corpus_fields(grid: Grid4, delta: float = 0.1):
    """Yield ``(name, v, p)`` for the standard corpus on ``grid``, one field at a time."""
    for name, spec in standard_corpus(delta):
        out = generate(replace(spec, grid=grid))
        yield name, out.v, out.p
