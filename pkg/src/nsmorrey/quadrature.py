"""Quadrature over balls and parabolic cylinders.

Ball integrals use a cell rule: each grid cell contributes
``cell_volume * weight * (value at the cell centre)``, the centre value being
the trilinear interpolant, i.e. the mean of the 8 corner samples.  Summing
that over cells is the same as a dot product of node samples with node weights
(each node collects 1/8 of the weight of every adjacent cell), which is how it
is evaluated.  Time integrals integrate the piecewise-linear interpolant of
the slice values exactly (trapezoidal rule with partial end intervals).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, ResolutionError
from .fields import Grid4, ParabolicCylinder, ScalarField, VectorField
from .parallel import ordered_map

MIN_SPACINGS = 2.0
MIN_TIME_SLICES = 4


@dataclass(frozen=True)
class CellWeightRule:
    mode: str = "partial-cell"
    singular_exclusion_radius: float = 0.0

    def __post_init__(self):
        if self.mode not in ("partial-cell", "indicator"):
            raise DomainError(f"unknown cell weight mode {self.mode!r}")
        if self.singular_exclusion_radius < 0:
            raise DomainError("singular_exclusion_radius must be non-negative")

    def to_dict(self):
        return {"mode": self.mode, "singular_exclusion_radius": self.singular_exclusion_radius}


DEFAULT_RULE = CellWeightRule()


def spatial_floor(grid: Grid4) -> float:
    return MIN_SPACINGS * max(grid.spacing)


def time_floor(grid: Grid4) -> float:
    """Nominal smallest radius whose window (t0 - r^2, t0) spans 4 slices."""
    return math.sqrt((MIN_TIME_SLICES - 1) * grid.dt)


def resolution_floor(grid: Grid4) -> float:
    return max(spatial_floor(grid), time_floor(grid))


def _node_weights(cell_w: np.ndarray) -> np.ndarray:
    nz, ny, nx = cell_w.shape
    W = np.zeros((nz + 1, ny + 1, nx + 1))
    for dz in (0, 1):
        for dy in (0, 1):
            for dx in (0, 1):
                W[dz:dz + nz, dy:dy + ny, dx:dx + nx] += cell_w
    return W * 0.125


def _corner_mean(a: np.ndarray) -> np.ndarray:
    return 0.125 * (a[:-1, :-1, :-1] + a[:-1, :-1, 1:] + a[:-1, 1:, :-1] + a[:-1, 1:, 1:]
                    + a[1:, :-1, :-1] + a[1:, :-1, 1:] + a[1:, 1:, :-1] + a[1:, 1:, 1:])


class BallStencil:
    """Node weights for integrating over B(x0, r) on one grid."""

    def __init__(self, grid: Grid4, x0: Sequence[float], r: float,
                 rule: CellWeightRule = DEFAULT_RULE, singular_points=()):
        self.grid = grid
        self.x0 = tuple(float(c) for c in x0)
        self.r = float(r)
        self.rule = rule
        floor = spatial_floor(grid)
        if self.r < floor * (1 - 1e-12):
            raise ResolutionError(
                f"radius {self.r} below the spatial resolution floor {floor}", min_radius=floor)
        for label, c, (lo, hi) in zip("xyz", self.x0, grid.ranges):
            tol = 1e-12 * max(1.0, abs(lo), abs(hi))
            if c - self.r < lo - tol or c + self.r > hi + tol:
                raise DomainError(f"ball B({self.x0}, {self.r}) leaves the grid along {label}")

        hs = grid.spacing
        ns = (grid.nx, grid.ny, grid.nz)
        idx = []
        for c, (lo, _), h, n in zip(self.x0, grid.ranges, hs, ns):
            i0 = max(0, int(math.floor((c - self.r - lo) / h + 1e-9)))
            i1 = min(n - 1, int(math.ceil((c - self.r - lo) / h + 2 * self.r / h - 1e-9)))
            idx.append((i0, max(i1, i0 + 1)))
        (ix0, ix1), (iy0, iy1), (iz0, iz1) = idx
        self.box = (slice(iz0, iz1 + 1), slice(iy0, iy1 + 1), slice(ix0, ix1 + 1))

        xs = [np.linspace(lo, hi, n) for (lo, hi), n in zip(grid.ranges, ns)]
        x = xs[0][ix0:ix1 + 1] - self.x0[0]
        y = xs[1][iy0:iy1 + 1] - self.x0[1]
        z = xs[2][iz0:iz1 + 1] - self.x0[2]
        r2 = self.r * self.r
        if rule.mode == "partial-cell":
            d2 = z[:, None, None] ** 2 + y[None, :, None] ** 2 + x[None, None, :] ** 2
            cell_w = _corner_mean((d2 <= r2 * (1 + 1e-12)).astype(np.float64))
        else:
            xc, yc, zc = (0.5 * (a[1:] + a[:-1]) for a in (x, y, z))
            d2 = zc[:, None, None] ** 2 + yc[None, :, None] ** 2 + xc[None, None, :] ** 2
            cell_w = (d2 <= r2 * (1 + 1e-12)).astype(np.float64)

        self.excluded_cells = np.zeros(cell_w.shape, dtype=bool)
        rho = rule.singular_exclusion_radius
        if rho > 0 and singular_points:
            xc, yc, zc = (0.5 * (a[1:] + a[:-1]) for a in (x, y, z))
            for p in singular_points:
                q = [p[i] - self.x0[i] for i in range(3)]
                dd = ((zc[:, None, None] - q[2]) ** 2 + (yc[None, :, None] - q[1]) ** 2
                      + (xc[None, None, :] - q[0]) ** 2)
                self.excluded_cells |= dd <= rho * rho
        self.vol = grid.cell_volume
        self.cell_w = cell_w
        live = np.where(self.excluded_cells, 0.0, cell_w)
        self.static_excluded = self.vol * float(cell_w[self.excluded_cells].sum())
        self.node_w = _node_weights(live)
        self._live = live

    @property
    def volume(self) -> float:
        """Discrete measure of the ball (what integrating 1 returns)."""
        return self.vol * float(self.cell_w.sum())

    def integrate(self, values: np.ndarray, origin=(0, 0, 0)) -> tuple:
        """Return ``(integral, excluded_volume)`` for one spatial slice.

        ``values`` may be a sub-block of the grid whose first node has index
        ``origin`` (ordered z, y, x); it must contain the stencil box.
        """
        if origin == (0, 0, 0):
            sub = values[self.box]
        else:
            sub = values[tuple(slice(s.start - o, s.stop - o) for s, o in zip(self.box, origin))]
        if np.isfinite(sub).all():
            return self.vol * float(np.einsum("ijk,ijk->", self.node_w, sub)), self.static_excluded
        finite = np.isfinite(sub)
        ok = (finite[:-1, :-1, :-1] & finite[:-1, :-1, 1:] & finite[:-1, 1:, :-1] & finite[:-1, 1:, 1:]
              & finite[1:, :-1, :-1] & finite[1:, :-1, 1:] & finite[1:, 1:, :-1] & finite[1:, 1:, 1:])
        live = np.where(ok, self._live, 0.0)
        W = _node_weights(live)
        val = self.vol * float(np.einsum("ijk,ijk->", W, np.where(finite, sub, 0.0)))
        excluded = self.vol * float(self.cell_w.sum() - live.sum())
        return val, excluded

    def grad_box(self, grid: Grid4):
        """Sub-box widened by one node (clipped), and the crop back to ``box``.

        Differentiating on the widened box reproduces the full-grid gradient
        on ``box`` exactly.
        """
        ns = (grid.nz, grid.ny, grid.nx)
        wide, crop = [], []
        for s, n in zip(self.box, ns):
            a = max(0, s.start - 1)
            b = min(n, s.stop + 1)
            wide.append(slice(a, b))
            crop.append(slice(s.start - a, s.start - a + (s.stop - s.start)))
        return tuple(wide), tuple(crop)


class TimeWindow:
    """Exact integration / maximum of the piecewise-linear time interpolant on [a, b]."""

    def __init__(self, grid: Grid4, a: float, b: float, min_slices: int = MIN_TIME_SLICES):
        t_lo, t_hi = grid.trange
        dt = grid.dt
        tol = 1e-9 * dt
        if a < t_lo - tol or b > t_hi + tol:
            raise DomainError(f"time window ({a}, {b}) not in [{t_lo}, {t_hi}]")
        if not b > a:
            raise DomainError(f"empty time window ({a}, {b})")
        a = max(a, t_lo)
        b = min(b, t_hi)
        pa = (a - t_lo) / dt
        pb = (b - t_lo) / dt
        # snap endpoints that sit on a node up to rounding
        if abs(pa - round(pa)) < 1e-9:
            pa = float(round(pa))
        if abs(pb - round(pb)) < 1e-9:
            pb = float(round(pb))
        inside = int(math.floor(pb)) - int(math.ceil(pa)) + 1
        if inside < min_slices:
            floor = math.sqrt((min_slices - 1) * dt)
            raise ResolutionError(
                f"time window ({a}, {b}) holds {inside} slices, need {min_slices}",
                min_radius=floor)
        self.a, self.b = a, b
        k_lo = min(int(math.floor(pa)), grid.nt - 1)
        k_hi = max(int(math.ceil(pb)), k_lo + 1)
        self.indices = list(range(k_lo, k_hi + 1))
        w = np.zeros(len(self.indices))

        def lerp(p):
            k = max(min(int(math.floor(p)), k_hi - 1), k_lo)
            s = p - k
            return k - k_lo, s

        for k in range(k_lo, k_hi):
            alpha = max(pa, k)
            beta = min(pb, k + 1)
            if beta <= alpha:
                continue
            half = 0.5 * (beta - alpha) * dt
            for p in (alpha, beta):
                j, s = lerp(p)
                w[j] += half * (1.0 - s)
                w[j + 1] += half * s
        self.weights = w
        self._ends = [lerp(pa), lerp(pb)]
        self._interior = [k - k_lo for k in self.indices if pa < k < pb]

    def integrate(self, values: Sequence[float]) -> float:
        total = 0.0
        for w, g in zip(self.weights, values):
            total += w * g
        return total

    def sup(self, values: Sequence[float]) -> float:
        cands = [values[j] for j in self._interior]
        for j, s in self._ends:
            if s == 0.0:
                cands.append(values[j])
            elif s == 1.0:
                cands.append(values[j + 1])
            else:
                cands.append((1.0 - s) * values[j] + s * values[j + 1])
        return max(cands)

    def at(self, values: Sequence[float], which: str = "end") -> float:
        j, s = self._ends[1 if which == "end" else 0]
        if s == 0.0:
            return values[j]
        return (1.0 - s) * values[j] + s * values[j + 1]


def _as_values(f):
    if isinstance(f, (ScalarField, VectorField)):
        return f.grid, f.samples, f.singular_points
    grid, arr = f
    return grid, np.asarray(arr), ()


def integrate_ball(values: np.ndarray, grid: Grid4, x0, r: float,
                   rule: CellWeightRule = DEFAULT_RULE, singular_points=(),
                   return_excluded: bool = False):
    """Integral of one scalar slice ``(nz, ny, nx)`` over B(x0, r)."""
    st = BallStencil(grid, x0, r, rule, singular_points)
    val, excl = st.integrate(np.asarray(values, dtype=np.float64))
    return (val, excl) if return_excluded else val


def slice_integrals(f, cyl: ParabolicCylinder, rule: CellWeightRule = DEFAULT_RULE,
                    density: Optional[Callable] = None):
    """Ball integrals of ``density(slice)`` for the slices touching cylinder ``cyl``.

    Returns ``(window, values, excluded)``.
    """
    grid, arr, sing = _as_values(f)
    grid.check_cylinder(cyl)
    st = BallStencil(grid, cyl.x0, cyl.r, rule, sing)
    win = TimeWindow(grid, cyl.t_start, cyl.t0)

    def one(k):
        sl = arr[k]
        return st.integrate(density(sl) if density is not None else sl)

    res = ordered_map(one, win.indices)
    return win, [v for v, _ in res], [e for _, e in res]


def integrate_cylinder(f, cyl: ParabolicCylinder, rule: CellWeightRule = DEFAULT_RULE,
                       return_excluded: bool = False):
    """Space-time integral over Q(z0, r) of a scalar field (or ``(grid, array)``)."""
    win, vals, excl = slice_integrals(f, cyl, rule)
    total = win.integrate(vals)
    if return_excluded:
        return total, win.integrate(excl)
    return total


def ess_sup_in_time(f, cyl: ParabolicCylinder, reducer: Optional[Callable] = None,
                    rule: CellWeightRule = DEFAULT_RULE) -> float:
    """Max over the time window of ``reducer(slice, stencil)`` (default: ball integral)."""
    grid, arr, sing = _as_values(f)
    grid.check_cylinder(cyl)
    st = BallStencil(grid, cyl.x0, cyl.r, rule, sing)
    win = TimeWindow(grid, cyl.t_start, cyl.t0)
    if reducer is None:
        def reducer(sl, stencil):
            return stencil.integrate(sl)[0]
    vals = ordered_map(lambda k: reducer(arr[k], st), win.indices)
    return win.sup(vals)


def mixed_norm(v: VectorField, cyl: ParabolicCylinder, m: float, n: float,
               rule: CellWeightRule = DEFAULT_RULE) -> float:
    """||v||_{L_{m,n}(Q)} = (int (int |v|^m dx)^{n/m} dt)^{1/n}; ``n=inf`` takes the slice max."""
    if not m >= 1 or not n >= 1:
        raise DomainError(f"mixed norm exponents must be >= 1, got m={m}, n={n}")
    win, vals, _ = slice_integrals(v, cyl, rule, lambda sl: speed(sl) ** m)
    return norm_from_slices(win, vals, m, n)


def norm_from_slices(win: TimeWindow, vals, m: float, n: float) -> float:
    inner = [max(x, 0.0) ** (1.0 / m) for x in vals]
    if math.isinf(n):
        return win.sup(inner)
    return max(win.integrate([x ** n for x in inner]), 0.0) ** (1.0 / n)


def speed(sl: np.ndarray) -> np.ndarray:
    """|v| for a vector slice."""
    return np.sqrt(np.einsum("...i,...i->...", sl, sl))
