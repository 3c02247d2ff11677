"""Scale-invariant functionals on parabolic cylinders and radius ladders.

For a cylinder Q(r) centred at (x0, t0)::

    A(r)  = ess sup_t (1/r)   int_B(r) |v|^2 dx
    E(r)  = (1/r)   int_Q(r) |grad v|^2
    C(r)  = (1/r^2) int_Q(r) |v|^3
    H(r)  = (1/r^3) int_Q(r) |v|^2
    D0(r) = (1/r^2) int_Q(r) |p - [p]_B(r)|^(3/2)     ([p] = ball mean per slice)
    E3(r) = (1/r)   int_Q(r) |d v / d x3|^2
    M(r)  = ||v||_{L_{s,l}(Q(r))}

All are invariant under v -> lam v(lam x, lam^2 t), p -> lam^2 p(lam x, lam^2 t)
(for M only when 3/s + 2/l = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, ResolutionError
from .fields import ParabolicCylinder, ScalarField, VectorField, slice_gradient
from .parallel import ordered_map
from .quadrature import (DEFAULT_RULE, BallStencil, CellWeightRule, TimeWindow,
                         norm_from_slices)

NAMES = ("A", "E", "C", "H", "D0", "E3", "M")
_NEEDS_GRAD = {"E", "E3"}


def is_critical(s: float, l: float, tol: float = 1e-12) -> bool:
    """Whether (s, l) is a scale-invariant pair, 3/s + 2/l = 1."""
    return abs(3.0 / s + 2.0 / l - 1.0) <= tol


def evaluate(v: VectorField, p: Optional[ScalarField], x0: Sequence[float], t0: float,
             radii: Sequence[float], rule: CellWeightRule = DEFAULT_RULE,
             which=("A", "E", "C", "H", "D0", "E3"), s: Optional[float] = None,
             l: Optional[float] = None) -> list:
    """Evaluate the requested functionals at every radius in one pass over time slices.

    Returns one dict per radius with the requested names plus ``"excluded"``
    (space-time measure of masked cells).
    """
    which = set(which)
    if "D0" in which and p is None:
        raise DomainError("D0 requires a pressure field")
    if "M" in which and (s is None or l is None):
        raise DomainError("M requires exponents s and l")
    if p is not None and p.grid != v.grid:
        raise DomainError(f"velocity grid {v.grid} and pressure grid {p.grid} differ")
    grid = v.grid
    x0 = tuple(float(c) for c in x0)
    plan = []
    for r in radii:
        cyl = ParabolicCylinder(x0, t0, r)
        grid.check_cylinder(cyl)
        st = BallStencil(grid, x0, r, rule, v.singular_points)
        win = TimeWindow(grid, cyl.t_start, t0)
        plan.append((float(r), st, win))
    if not plan:
        return []
    slices = sorted({k for _, _, win in plan for k in win.indices})

    def one(k):
        active = [j for j, (_, _, win) in enumerate(plan) if win.indices[0] <= k <= win.indices[-1]]
        big = max(active, key=lambda j: plan[j][0])
        wide, crop = plan[big][1].grad_box(grid)
        origin = tuple(sl.start for sl in wide)
        vb = v.samples[k][wide]
        sq = np.einsum("...i,...i->...", vb, vb)
        dens = {"sq": sq}
        if which & {"C", "M"}:
            spd = np.sqrt(sq)
            if "C" in which:
                dens["cube"] = sq * spd
            if "M" in which:
                dens["pow_s"] = spd ** s
        if which & _NEEDS_GRAD:
            grad = slice_gradient(vb, grid.spacing)
            if "E" in which:
                dens["grad"] = np.einsum("...ij,...ij->...", grad, grad)
            if "E3" in which:
                g3 = grad[..., :, 2]
                dens["grad3"] = np.einsum("...i,...i->...", g3, g3)
        pb = p.samples[k][wide] if "D0" in which else None
        out = {}
        for j in active:
            st = plan[j][1]
            rec = {}
            for name, arr in dens.items():
                rec[name], excl = st.integrate(arr, origin)
                if name == "sq":
                    rec["excluded"] = excl
            if pb is not None:
                ip, pexcl = st.integrate(pb, origin)
                live = st.volume - pexcl
                mean = ip / live if live > 0 else 0.0
                rec["dev"], _ = st.integrate(np.abs(pb - mean) ** 1.5, origin)
            out[j] = rec
        return out

    per_slice = dict(zip(slices, ordered_map(one, slices)))

    results = []
    for j, (r, st, win) in enumerate(plan):
        series = {}
        for k in win.indices:
            for name, val in per_slice[k][j].items():
                series.setdefault(name, []).append(val)
        res = {}
        if "A" in which:
            res["A"] = win.sup(series["sq"]) / r
        if "H" in which:
            res["H"] = win.integrate(series["sq"]) / r ** 3
        if "C" in which:
            res["C"] = win.integrate(series["cube"]) / r ** 2
        if "E" in which:
            res["E"] = win.integrate(series["grad"]) / r
        if "E3" in which:
            res["E3"] = win.integrate(series["grad3"]) / r
        if "D0" in which:
            res["D0"] = win.integrate(series["dev"]) / r ** 2
        if "M" in which:
            res["M"] = norm_from_slices(win, series["pow_s"], s, l)
        res["excluded"] = win.integrate(series["excluded"])
        results.append(res)
    return results


def _single(name, v, p, cyl, rule, **kw):
    return evaluate(v, p, cyl.x0, cyl.t0, [cyl.r], rule, which=(name,), **kw)[0][name]


def functional_A(v: VectorField, cyl: ParabolicCylinder, rule=DEFAULT_RULE) -> float:
    return _single("A", v, None, cyl, rule)


def functional_E(v: VectorField, cyl: ParabolicCylinder, rule=DEFAULT_RULE) -> float:
    return _single("E", v, None, cyl, rule)


def functional_C(v: VectorField, cyl: ParabolicCylinder, rule=DEFAULT_RULE) -> float:
    return _single("C", v, None, cyl, rule)


def functional_H(v: VectorField, cyl: ParabolicCylinder, rule=DEFAULT_RULE) -> float:
    return _single("H", v, None, cyl, rule)


def functional_E3(v: VectorField, cyl: ParabolicCylinder, rule=DEFAULT_RULE) -> float:
    return _single("E3", v, None, cyl, rule)


def functional_D0(p: ScalarField, cyl: ParabolicCylinder, rule=DEFAULT_RULE) -> float:
    """Pressure functional; the ball mean is subtracted slice by slice."""
    dummy = VectorField(p.grid, np.zeros(p.grid.shape + (3,)), p.metadata)
    return _single("D0", dummy, p, cyl, rule)


def functional_M(v: VectorField, cyl: ParabolicCylinder, s: float, l: float,
                 rule=DEFAULT_RULE) -> tuple:
    """Return ``(M_{s,l}(r), critical)``; ``l`` may be ``math.inf``."""
    if s < 3 or l < 2:
        raise DomainError(f"M_(s,l) needs s >= 3 and l >= 2, got s={s}, l={l}")
    return _single("M", v, None, cyl, rule, s=s, l=l), is_critical(s, l)


@dataclass
class LadderConfig:
    r0: float = 1.0
    theta: float = 1.0 / math.sqrt(2.0)
    count: int = 12
    s: Optional[float] = None
    l: Optional[float] = None
    rule: CellWeightRule = DEFAULT_RULE

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise DomainError(f"theta must lie in (0, 1), got {self.theta}")
        if self.count < 1:
            raise DomainError("ladder count must be positive")
        if not self.r0 > 0:
            raise DomainError("r0 must be positive")

    def radii(self) -> list:
        return [self.r0 * self.theta ** k for k in range(self.count)]

    def to_dict(self) -> dict:
        return {"r0": self.r0, "theta": self.theta, "count": self.count,
                "s": self.s, "l": _enc(self.l), "rule": self.rule.to_dict()}


def _enc(x):
    if x is None:
        return None
    return "inf" if math.isinf(x) else x


def _dec(x):
    if x is None:
        return None
    return math.inf if x == "inf" else float(x)


@dataclass
class FunctionalLadder:
    x0: tuple
    t0: float
    radii: list
    A: list = field(default_factory=list)
    E: list = field(default_factory=list)
    C: list = field(default_factory=list)
    H: list = field(default_factory=list)
    D0: list = field(default_factory=list)
    E3: list = field(default_factory=list)
    M: list = field(default_factory=list)
    excluded_volume: list = field(default_factory=list)
    s: Optional[float] = None
    l: Optional[float] = None
    warnings: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def values(self, name: str) -> list:
        return getattr(self, name)

    def at(self, i: int) -> dict:
        return {n: getattr(self, n)[i] for n in NAMES if getattr(self, n)}

    def to_json(self) -> dict:
        return {
            "schema": "ladder-v1",
            "center": {"x": list(self.x0), "t": self.t0},
            "radii": list(self.radii),
            **{n: list(getattr(self, n)) for n in NAMES},
            "M_exponents": None if self.s is None else {"s": self.s, "l": _enc(self.l)},
            "excluded_volume": list(self.excluded_volume),
            "warnings": list(self.warnings),
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, d: dict) -> "FunctionalLadder":
        ex = d.get("M_exponents") or {}
        return cls(tuple(d["center"]["x"]), d["center"]["t"], list(d["radii"]),
                   **{n: list(d.get(n, [])) for n in NAMES},
                   excluded_volume=list(d["excluded_volume"]), s=ex.get("s"),
                   l=_dec(ex.get("l")), warnings=list(d.get("warnings", [])),
                   provenance=d.get("provenance", {}))


def build_ladder(v: VectorField, p: Optional[ScalarField], x0: Sequence[float], t0: float,
                 config: Optional[LadderConfig] = None) -> FunctionalLadder:
    """Evaluate every functional on the geometric ladder r_k = r0 * theta^k.

    Radii below the resolution floor end the ladder early; the cut is recorded
    in ``warnings``.  The largest radius must be representable.
    """
    cfg = config or LadderConfig()
    grid = v.grid
    radii, warnings = [], []
    for k, r in enumerate(cfg.radii()):
        cyl = ParabolicCylinder(x0, t0, r)
        try:
            grid.check_cylinder(cyl)
            BallStencil(grid, x0, r, cfg.rule)
            TimeWindow(grid, cyl.t_start, t0)
        except ResolutionError as exc:
            if k == 0:
                raise
            warnings.append(f"ladder truncated before r_{k}={r!r}: {exc}")
            break
        radii.append(r)
    which = ["A", "E", "C", "H", "E3"]
    if p is not None:
        which.append("D0")
    else:
        warnings.append("no pressure field: D0 not evaluated")
    if cfg.s is not None:
        if cfg.l is None:
            raise DomainError("ladder exponent l missing")
        which.append("M")
    recs = evaluate(v, p, x0, t0, radii, cfg.rule, which=which, s=cfg.s, l=cfg.l)
    lad = FunctionalLadder(tuple(float(c) for c in x0), float(t0), radii, s=cfg.s, l=cfg.l,
                           warnings=warnings)
    for rec in recs:
        for n in which:
            getattr(lad, n).append(float(rec[n]))
        lad.excluded_volume.append(float(rec["excluded"]))
    lad.provenance = {"ladder": cfg.to_dict(), "grid": grid.to_dict(),
                      "velocity_meta": v.metadata,
                      "pressure_meta": None if p is None else p.metadata}
    return lad
