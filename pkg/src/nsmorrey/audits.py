"""Empirical audits of the a priori estimates for suitable weak solutions.

No universal constant is known numerically, so every audit reports both sides
of an inequality with the constant stripped off and the ratio
``implied_constant = lhs / rhs_core``.  Corpus summaries keep the maximum ratio
per inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError, DomainError
from .fields import ParabolicCylinder, ScalarField, VectorField, slice_gradient
from .functionals import FunctionalLadder, LadderConfig, build_ladder, evaluate
from .parallel import ordered_map
from .quadrature import DEFAULT_RULE, BallStencil, CellWeightRule, TimeWindow, mixed_norm

IDS = ("I21", "I22", "I23", "I24", "I25", "I26", "L21a", "L21b", "L21c",
       "LEI", "LL3_16", "LL3_17", "E18")


def implied_constant(lhs: float, rhs_core: float) -> float:
    if lhs <= 0.0:
        return 0.0
    if rhs_core <= 0.0:
        return math.inf
    return lhs / rhs_core


@dataclass
class InequalityAudit:
    inequality_id: str
    parameters: dict
    lhs: float
    rhs_core: float
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.inequality_id not in IDS:
            raise DomainError(f"unknown inequality id {self.inequality_id!r}")
        self.lhs = float(self.lhs)
        self.rhs_core = float(self.rhs_core)

    @property
    def implied_constant(self) -> float:
        return implied_constant(self.lhs, self.rhs_core)

    def to_json(self) -> dict:
        c = self.implied_constant
        return {"inequality_id": self.inequality_id, "parameters": self.parameters,
                "lhs": self.lhs, "rhs_core": self.rhs_core,
                "implied_constant": "inf" if math.isinf(c) else c, "extra": self.extra}


def _vals(v, p, center, radii, rule, which):
    x0, t0 = center
    return evaluate(v, p, x0, t0, radii, rule, which=which)


def _params(center, **kw):
    return {"center": {"x": [float(c) for c in center[0]], "t": float(center[1])}, **kw}


def _check_pair(r, rho):
    if not 0 < r <= rho:
        raise DomainError(f"need 0 < r <= rho, got r={r}, rho={rho}")


def _interp(lo, hi, center, r, rho):
    A, E = hi["A"], hi["E"]
    rhs = (rho / r) ** 3 * A ** 0.75 * E ** 0.75 + (r / rho) ** 3 * A ** 1.5
    return InequalityAudit("I21", _params(center, r=r, rho=rho), lo["C"], rhs)


def _energy(ident, half, full, center, R):
    lhs = half["A"] + half["E"]
    C, D0, A, E = full["C"], full["D0"], full["A"], full["E"]
    if ident == "I22":
        rhs = C ** (2 / 3) + C + C ** (1 / 3) * D0 ** (2 / 3)
    else:
        rhs = C ** (2 / 3) + C ** (1 / 3) * D0 ** (2 / 3) + A ** 0.5 * C ** (2 / 3) * E ** 0.5
    return InequalityAudit(ident, _params(center, R=R), lhs, rhs)


def _decay(variant, lo, hi, center, r, rho):
    q = rho / r
    base = q ** -2.5 * hi["D0"]
    if variant == 24:
        rhs = base + q ** 2 * hi["C"]
    elif variant == 25:
        rhs = base + q ** 2 * hi["A"] ** 0.5 * hi["E"]
    else:
        rhs = base + q ** 3 * hi["A"] ** 0.75 * hi["E"] ** 0.75
    return InequalityAudit(f"I{variant}", _params(center, r=r, rho=rho), lo["D0"], rhs)


def audit_interpolation(v: VectorField, center, r: float, rho: float,
                           rule: CellWeightRule = DEFAULT_RULE) -> InequalityAudit:
    """C(r) against (rho/r)^3 A^(3/4) E^(3/4)(rho) + (r/rho)^3 A^(3/2)(rho)."""
    _check_pair(r, rho)
    lo, hi = _vals(v, None, center, [r, rho], rule, ("A", "E", "C"))
    return _interp(lo, hi, center, r, rho)


def audit_energy_cubic(v, p, center, R: float, rule=DEFAULT_RULE) -> InequalityAudit:
    """A(R/2) + E(R/2) against C^(2/3) + C + C^(1/3) D0^(2/3), all at R."""
    half, full = _vals(v, p, center, [R / 2, R], rule, ("A", "E", "C", "D0"))
    return _energy("I22", half, full, center, R)


def audit_energy_mixed(v, p, center, R: float, rule=DEFAULT_RULE) -> InequalityAudit:
    """A(R/2) + E(R/2) against C^(2/3) + C^(1/3) D0^(2/3) + A^(1/2) C^(2/3) E^(1/2), all at R."""
    half, full = _vals(v, p, center, [R / 2, R], rule, ("A", "E", "C", "D0"))
    return _energy("I23", half, full, center, R)


def audit_pressure_decay(variant: int, v, p, center, r: float, rho: float,
                         rule=DEFAULT_RULE) -> InequalityAudit:
    """Pressure decay: D0(r) against (r/rho)^(5/2) D0(rho) + X, X chosen by ``variant``.

    24: (rho/r)^2 C(rho);  25: (rho/r)^2 A^(1/2) E(rho);  26: (rho/r)^3 A^(3/4) E^(3/4)(rho).
    """
    if variant not in (24, 25, 26):
        raise DomainError(f"pressure decay variant must be 24, 25 or 26, got {variant}")
    _check_pair(r, rho)
    lo, hi = _vals(v, p, center, [r, rho], rule, ("A", "E", "C", "D0"))
    return _decay(variant, lo, hi, center, r, rho)


def audit_scale_bootstrap(part: str, ladder: FunctionalLadder) -> list:
    """Bootstrapping bounds on a ladder whose first radius plays the role of 1.

    a) A^(3/2) + C + D0^2 <= d(E0) (r^(1/2)(A^(3/2)(1) + D0^2(1)) + 1),  r <= 1/4
    b) A + D0 + E <= c (r^2 D0(1) + C0 + C0^(2/3)),                      r <= 1/2
    c) C^(4/3) + D0 + E <= e(A0) (r^2 (D0(1) + E(1)) + 1),               r <= 1/2

    Radii are normalised by the ladder's first radius.  Premises E0, C0, A0
    are suprema over the ladder.
    """
    if part not in ("a", "b", "c"):
        raise DomainError(f"bootstrap part must be a, b or c, got {part!r}")
    if not ladder.D0:
        raise DomainError("bootstrap audits need the pressure functional D0 on the ladder")
    r1 = ladder.radii[0]
    cut = 0.25 if part == "a" else 0.5
    idx = [i for i, r in enumerate(ladder.radii) if r / r1 <= cut * (1 + 1e-12)]
    if not idx:
        raise DomainError(f"no ladder radius at or below {cut} x r0 for bootstrap part {part}")
    A, C, E, D0 = ladder.A, ladder.C, ladder.E, ladder.D0
    premise = {"a": ("E0", max(E)), "b": ("C0", max(C)), "c": ("A0", max(A))}[part]
    out = []
    for i in idx:
        rr = ladder.radii[i] / r1
        if part == "a":
            lhs = A[i] ** 1.5 + C[i] + D0[i] ** 2
            rhs = rr ** 0.5 * (A[0] ** 1.5 + D0[0] ** 2) + 1.0
        elif part == "b":
            c0 = premise[1]
            lhs = A[i] + D0[i] + E[i]
            rhs = rr ** 2 * D0[0] + c0 + c0 ** (2 / 3)
        else:
            lhs = C[i] ** (4 / 3) + D0[i] + E[i]
            rhs = rr ** 2 * (D0[0] + E[0]) + 1.0
        params = {"center": {"x": list(ladder.x0), "t": ladder.t0}, "r": ladder.radii[i],
                  "r_normalised": rr}
        out.append(InequalityAudit(f"L21{part}", params, lhs, rhs, {premise[0]: premise[1]}))
    return out


def summarize(audits: Sequence[InequalityAudit]) -> dict:
    """Maximum implied constant per inequality id."""
    out = {}
    for a in audits:
        c = a.implied_constant
        out[a.inequality_id] = max(out.get(a.inequality_id, 0.0), c)
    return out


SELECTIONS = ("21", "22", "23", "24", "25", "26", "L21a", "L21b", "L21c")
_NEEDS_PRESSURE = set(SELECTIONS) - {"21"}


def run_audits(v: VectorField, p: Optional[ScalarField], center, select=SELECTIONS,
               pairs=((0.5, 1.0), (0.25, 1.0)), R: float = 1.0,
               ladder_config: Optional[LadderConfig] = None,
               rule: CellWeightRule = DEFAULT_RULE) -> list:
    """The selected audits at one center, in selection order.

    All radii are evaluated in a single pass over the time slices.  Without
    pressure only the interpolation audit is possible; the others are skipped
    when ``p`` is None.
    """
    bad = [s for s in select if s not in SELECTIONS]
    if bad:
        raise DomainError(f"unknown audit selection {bad}; choose from {SELECTIONS}")
    todo = [s for s in select if p is not None or s not in _NEEDS_PRESSURE]
    for r, rho in pairs:
        _check_pair(r, rho)
    radii = set()
    if any(s in ("21", "24", "25", "26") for s in todo):
        radii.update(x for pair in pairs for x in pair)
    if any(s in ("22", "23") for s in todo):
        radii.update((R / 2, R))
    ladder = None
    if any(s.startswith("L21") for s in todo):
        ladder = build_ladder(v, p, center[0], center[1], ladder_config or LadderConfig(rule=rule))
    radii = sorted(radii)
    which = ("A", "E", "C") + (("D0",) if p is not None else ())
    tab = dict(zip(radii, _vals(v, p, center, radii, rule, which))) if radii else {}
    out = []
    for sel in todo:
        if sel == "21":
            out += [_interp(tab[r], tab[rho], center, r, rho) for r, rho in pairs]
        elif sel in ("22", "23"):
            out.append(_energy("I" + sel, tab[R / 2], tab[R], center, R))
        elif sel.startswith("L21"):
            out += audit_scale_bootstrap(sel[-1], ladder)
        else:
            out += [_decay(int(sel), tab[r], tab[rho], center, r, rho) for r, rho in pairs]
    return out


# -- local energy inequality -----------------------------------------------

@dataclass(frozen=True)
class Cutoff:
    """phi(x, t) = (1 - s)^3 tau(t), s = |x - c|^2 / R^2, supported in B(c, R).

    ``tau`` is 0 before ``t_on``, the C^1 smoothstep on [t_on, t_full] and 1
    afterwards.  The cylinder whose parabolic boundary phi must avoid is
    B(domain_center, domain_radius) x (domain_t0 - domain_radius^2, domain_t0).
    """

    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 0.7
    t_on: float = -0.95
    t_full: float = -0.8
    domain_center: tuple = (0.0, 0.0, 0.0)
    domain_radius: float = 1.0
    domain_t0: float = 0.0

    def tau(self, t):
        if t <= self.t_on:
            return 0.0, 0.0
        if t >= self.t_full:
            return 1.0, 0.0
        w = self.t_full - self.t_on
        s = (t - self.t_on) / w
        return 3 * s * s - 2 * s ** 3, (6 * s - 6 * s * s) / w

    def spatial(self, X, Y, Z):
        """(beta, grad beta, lap beta) of the spatial factor."""
        c, R = self.center, self.radius
        dx, dy, dz = X - c[0], Y - c[1], Z - c[2]
        s = (dx * dx + dy * dy + dz * dz) / (R * R)
        om = np.clip(1.0 - s, 0.0, None)
        g = -6.0 * om ** 2 / (R * R)
        lap = (-18.0 * om ** 2 + 24.0 * s * om) / (R * R)
        return om ** 3, (g * dx, g * dy, g * dz), lap

    def value(self, x, t) -> float:
        b, _, _ = self.spatial(np.asarray(x[0]), np.asarray(x[1]), np.asarray(x[2]))
        return float(b) * self.tau(t)[0]

    def scaled(self, lam: float) -> "Cutoff":
        """phi^lam(x, t) = phi(lam x, lam^2 t), on the correspondingly scaled domain."""
        return Cutoff(tuple(c / lam for c in self.center), self.radius / lam,
                      self.t_on / lam ** 2, self.t_full / lam ** 2,
                      tuple(c / lam for c in self.domain_center),
                      self.domain_radius / lam, self.domain_t0 / lam ** 2)

    def check_support(self, samples: int = 256) -> None:
        """Raise ContractError unless phi vanishes near the parabolic boundary."""
        dc, Rq, t0 = self.domain_center, self.domain_radius, self.domain_t0
        t_bot = t0 - Rq * Rq
        i = np.arange(samples) + 0.5
        zz = 1 - 2 * i / samples
        th = math.pi * (1 + 5 ** 0.5) * i
        rr = np.sqrt(1 - zz * zz)
        pts = np.stack([rr * np.cos(th), rr * np.sin(th), zz])
        times = np.linspace(t_bot, t0, 9)
        for frac in (1.0, 0.99):
            X, Y, Z = (dc[j] + frac * Rq * pts[j] for j in range(3))
            b, _, _ = self.spatial(X, Y, Z)
            for t in times:
                if (b * self.tau(t)[0] > 0).any():
                    raise ContractError("cutoff does not vanish near the lateral boundary")
        for t in (t_bot, t_bot + 1e-3 * Rq * Rq):
            if self.tau(t)[0] > 0:
                raise ContractError("cutoff does not vanish near the bottom of the cylinder")
        dist = math.dist(self.center, dc)
        if dist + self.radius >= Rq or self.t_on <= t_bot:
            raise ContractError("cutoff support reaches the parabolic boundary")


def local_energy_terms(v: VectorField, p: Optional[ScalarField], phi: Cutoff, t: float,
                       rule: CellWeightRule = DEFAULT_RULE) -> dict:
    """Both sides of the localized energy inequality at time ``t``.

    lhs = int phi |v|^2 (t) + 2 int_{t_start}^t int phi |grad v|^2
    rhs = int_{t_start}^t int |v|^2 (lap phi + d_t phi) + (v . grad phi)(|v|^2 + 2 p)
    """
    phi.check_support()
    grid = v.grid
    t_start = max(grid.trange[0], phi.domain_t0 - phi.domain_radius ** 2)
    if not t_start < t <= grid.trange[1] + 1e-12:
        raise DomainError(f"time {t} outside ({t_start}, {grid.trange[1]}]")
    # phi vanishes outside its ball, so integrate over a slightly larger one:
    # every cell cut by the support boundary is then a full cell and the
    # kink of lap(phi) there is handled by the (second-order) trapezoid rule.
    pad = 2.0 * max(grid.spacing)
    try:
        st = BallStencil(grid, phi.center, phi.radius + pad, rule, v.singular_points)
    except DomainError:
        st = BallStencil(grid, phi.center, phi.radius, rule, v.singular_points)
    win = TimeWindow(grid, t_start, t)
    wide, crop = st.grad_box(grid)
    origin = tuple(s.start for s in wide)
    Z, Y, X = np.meshgrid(grid.axis("z")[wide[0]], grid.axis("y")[wide[1]],
                          grid.axis("x")[wide[2]], indexing="ij")
    beta, gbeta, lbeta = phi.spatial(X, Y, Z)
    times = grid.times

    def one(k):
        tau, dtau = phi.tau(float(times[k]))
        vb = v.samples[k][wide]
        sq = np.einsum("...i,...i->...", vb, vb)
        mass = st.integrate(beta * tau * sq, origin)[0]
        if tau == 0.0 and dtau == 0.0:
            return mass, 0.0, 0.0
        grad = slice_gradient(vb, grid.spacing)
        g2 = np.einsum("...ij,...ij->...", grad, grad)
        diss = st.integrate(beta * tau * g2, origin)[0]
        vgphi = tau * (vb[..., 0] * gbeta[0] + vb[..., 1] * gbeta[1] + vb[..., 2] * gbeta[2])
        flux_d = sq * (tau * lbeta + dtau * beta) + vgphi * sq
        if p is not None:
            flux_d = flux_d + 2.0 * vgphi * p.samples[k][wide]
        flux = st.integrate(flux_d, origin)[0]
        return mass, diss, flux

    res = ordered_map(one, win.indices)
    mass = win.at([r[0] for r in res], "end")
    diss = win.integrate([r[1] for r in res])
    flux = win.integrate([r[2] for r in res])
    lhs = mass + 2.0 * diss
    return {"lhs": lhs, "rhs": flux, "residual": flux - lhs, "t": t, "t_start": t_start}


def local_energy_residual(v: VectorField, p: Optional[ScalarField], phi: Cutoff, t: float,
                          rule: CellWeightRule = DEFAULT_RULE) -> float:
    """RHS - LHS of the local energy inequality at ``t`` (>= 0 when it holds)."""
    return local_energy_terms(v, p, phi, t, rule)["residual"]


# -- linear problem (manufactured triples) ---------------------------------

def _div_stats(u: VectorField):
    worst_div, worst_grad = 0.0, 0.0
    for k in range(u.grid.nt):
        g = slice_gradient(u.samples[k], u.grid.spacing)
        div = (g[..., 0, 0] + g[..., 1, 1] + g[..., 2, 2])[1:-1, 1:-1, 1:-1]
        worst_div = max(worst_div, float(np.abs(div).max()))
        worst_grad = max(worst_grad, float(np.abs(g).max()))
    return worst_div, worst_grad


def audit_linear_energy(v: VectorField, u: VectorField, f: VectorField, t: float,
                       ball=((0.0, 0.0, 0.0), 1.0), rule: CellWeightRule = DEFAULT_RULE,
                       div_tol: float = 1e-2):
    """Audit the two energy-type estimates of the linear problem at time ``t``.

    Returns ``(audit_l16, audit_l17, relative_l18_residual)``.  The energy
    identity residual is
    ``1/2 d_t int|v|^2 + int|grad v|^2 - int f.v - 1/2 int |v|^2 div u``
    divided by the Dirichlet term ``int |grad v|^2``.
    """
    if not (u.grid == v.grid == f.grid):
        raise DomainError("v, u and f must share one grid")
    dres, gmax = _div_stats(u)
    if dres > div_tol * max(gmax, 1.0):
        raise ContractError(f"u is not divergence free: residual {dres:.3g}")
    grid = v.grid
    x0, R = ball
    st = BallStencil(grid, x0, R, rule)
    wide, crop = st.grad_box(grid)
    origin = tuple(s.start for s in wide)
    lo, hi = grid.trange
    if not lo <= t <= hi:
        raise DomainError(f"time {t} outside [{lo}, {hi}]")
    kc = min(int(math.floor((t - lo) / grid.dt)), grid.nt - 2)
    ks = list(range(max(0, kc - 2), min(grid.nt, kc + 4)))
    if len(ks) < 3:
        raise DomainError("need at least 3 time slices around t")

    def one(k):
        vb = v.samples[k][wide]
        ub = u.samples[k][wide]
        fb = f.samples[k][wide]
        sq = np.einsum("...i,...i->...", vb, vb)
        gv = slice_gradient(vb, grid.spacing)
        gu = slice_gradient(ub, grid.spacing)
        div = gu[..., 0, 0] + gu[..., 1, 1] + gu[..., 2, 2]
        w = sq ** 0.75
        gw = np.stack(np.gradient(w, *grid.spacing[::-1], edge_order=2), axis=-1)
        fn = np.sqrt(np.einsum("...i,...i->...", fb, fb))
        dens = {
            "vv": sq,
            "grad": np.einsum("...ij,...ij->...", gv, gv),
            "fv": np.einsum("...i,...i->...", fb, vb),
            "vdiv": sq * div,
            "f53": fn ** (5 / 3),
            "div52": np.abs(div) ** 2.5,
            "ww": w * w,
            "gradw": np.einsum("...i,...i->...", gw, gw),
        }
        return {n: st.integrate(a, origin)[0] for n, a in dens.items()}

    rows = ordered_map(one, ks)
    times = grid.times[ks]
    series = {n: np.array([r[n] for r in rows]) for n in rows[0]}

    def at(arr):
        return float(np.interp(t, times, arr))

    def ddt(arr):
        return at(np.gradient(arr, grid.dt, edge_order=2))

    I = {n: at(a) for n, a in series.items()}
    d_vv, d_ww = ddt(series["vv"]), ddt(series["ww"])
    params = {"t": t, "ball": {"x": list(x0), "r": R}}
    a16 = InequalityAudit("LL3_16", params, d_vv + I["grad"],
                          I["f53"] ** 0.5 + (I["f53"] + I["div52"]) * I["vv"],
                          {"dt_energy": d_vv, "dirichlet": I["grad"]})
    a17 = InequalityAudit("LL3_17", params, d_ww + I["gradw"],
                          I["f53"] * max(I["ww"], 0.0) ** (4 / 9) + I["div52"] * I["ww"],
                          {"dt_energy": d_ww, "dirichlet": I["gradw"]})
    resid = 0.5 * d_vv + I["grad"] - I["fv"] - 0.5 * I["vdiv"]
    if I["grad"] > 0:
        rel = resid / I["grad"]
    else:
        rel = 0.0 if resid == 0 else math.inf
    return a16, a17, rel


def linear_norm_report(v: VectorField, cyl: Optional[ParabolicCylinder] = None,
                       rule: CellWeightRule = DEFAULT_RULE) -> tuple:
    """(||v||_{L_{3,inf}(Q)}, ||v||_{L_5(Q)}) over ``cyl`` (default the unit cylinder)."""
    cyl = cyl or ParabolicCylinder((0.0, 0.0, 0.0), 0.0, 1.0)
    return mixed_norm(v, cyl, 3, math.inf, rule), mixed_norm(v, cyl, 5, 5, rule)
