"""Discretised space-time fields on uniform Cartesian grids.

Samples are stored node-based with layout ``(t, z, y, x)`` row-major; vector
fields carry a trailing component axis of length 3 ordered ``(v1, v2, v3)``,
i.e. ``(x, y, z)`` components.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ContractError, DomainError

_EXTENT_RTOL = 1e-12


@dataclass(frozen=True)
class ParabolicCylinder:
    """Q(z0, r) = B(x0, r) x (t0 - r^2, t0)."""

    x0: tuple
    t0: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "r", float(self.r))
        if len(self.x0) != 3:
            raise DomainError("cylinder center must be a 3-vector")
        if not self.r > 0:
            raise DomainError(f"cylinder radius must be positive, got {self.r}")

    @property
    def t_start(self) -> float:
        return self.t0 - self.r * self.r

    def with_radius(self, r: float) -> "ParabolicCylinder":
        return ParabolicCylinder(self.x0, self.t0, r)


@dataclass(frozen=True)
class Grid4:
    nx: int
    ny: int
    nz: int
    nt: int
    xrange: tuple = (-1.0, 1.0)
    yrange: tuple = (-1.0, 1.0)
    zrange: tuple = (-1.0, 1.0)
    trange: tuple = (-1.0, 0.0)

    def __post_init__(self):
        for name in ("nx", "ny", "nz", "nt"):
            n = getattr(self, name)
            if int(n) != n or n < 2:
                raise ConfigurationError(f"{name} must be an integer >= 2, got {n}")
            object.__setattr__(self, name, int(n))
        for name in ("xrange", "yrange", "zrange", "trange"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not hi > lo:
                raise ConfigurationError(f"{name} must satisfy max > min, got ({lo}, {hi})")
            object.__setattr__(self, name, (lo, hi))

    @classmethod
    def cube(cls, n: int, nt: int, lo=-1.0, hi=1.0, t_min=-1.0, t_max=0.0) -> "Grid4":
        return cls(n, n, n, nt, (lo, hi), (lo, hi), (lo, hi), (t_min, t_max))

    @classmethod
    def for_cylinder(cls, cyl: ParabolicCylinder, n: int, nt: int) -> "Grid4":
        """Smallest box grid containing ``cyl``, with nodes on its faces."""
        x, y, z = cyl.x0
        r = cyl.r
        return cls(n, n, n, nt, (x - r, x + r), (y - r, y + r), (z - r, z + r),
                   (cyl.t_start, cyl.t0))

    @property
    def shape(self) -> tuple:
        return (self.nt, self.nz, self.ny, self.nx)

    @property
    def spatial_shape(self) -> tuple:
        return (self.nz, self.ny, self.nx)

    @property
    def ranges(self) -> tuple:
        """Spatial ranges ordered (x, y, z)."""
        return (self.xrange, self.yrange, self.zrange)

    @property
    def spacing(self) -> tuple:
        """(hx, hy, hz)."""
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in
                     zip(self.ranges, (self.nx, self.ny, self.nz)))

    @property
    def dt(self) -> float:
        return (self.trange[1] - self.trange[0]) / (self.nt - 1)

    @property
    def cell_volume(self) -> float:
        hx, hy, hz = self.spacing
        return hx * hy * hz

    def axis(self, name: str) -> np.ndarray:
        lo, hi = {"x": self.xrange, "y": self.yrange, "z": self.zrange, "t": self.trange}[name]
        n = {"x": self.nx, "y": self.ny, "z": self.nz, "t": self.nt}[name]
        return np.linspace(lo, hi, n)

    @property
    def times(self) -> np.ndarray:
        return self.axis("t")

    def mesh(self):
        """Spatial coordinate arrays ``(X, Y, Z)`` of shape ``(nz, ny, nx)``."""
        Z, Y, X = np.meshgrid(self.axis("z"), self.axis("y"), self.axis("x"), indexing="ij")
        return X, Y, Z

    def contains_cylinder(self, cyl: ParabolicCylinder) -> bool:
        try:
            self.check_cylinder(cyl)
        except DomainError:
            return False
        return True

    def check_cylinder(self, cyl: ParabolicCylinder) -> None:
        for label, c, (lo, hi) in zip("xyz", cyl.x0, self.ranges):
            tol = _EXTENT_RTOL * max(1.0, abs(lo), abs(hi))
            if c - cyl.r < lo - tol or c + cyl.r > hi + tol:
                raise DomainError(
                    f"ball B({cyl.x0}, {cyl.r}) leaves the grid along {label}: "
                    f"[{c - cyl.r}, {c + cyl.r}] not in [{lo}, {hi}]")
        lo, hi = self.trange
        tol = _EXTENT_RTOL * max(1.0, abs(lo), abs(hi))
        if cyl.t_start < lo - tol or cyl.t0 > hi + tol:
            raise DomainError(
                f"time window ({cyl.t_start}, {cyl.t0}) not in [{lo}, {hi}]")

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "nz": self.nz, "nt": self.nt,
                "xrange": list(self.xrange), "yrange": list(self.yrange),
                "zrange": list(self.zrange), "trange": list(self.trange)}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid4":
        return cls(d["nx"], d["ny"], d["nz"], d["nt"], tuple(d["xrange"]),
                   tuple(d["yrange"]), tuple(d["zrange"]), tuple(d["trange"]))


def parse_singular_points(metadata: str) -> tuple:
    """Singular locus declared in JSON metadata under the key ``"singular"``."""
    if not metadata.startswith("{"):
        return ()
    try:
        meta = json.loads(metadata)
    except ValueError:
        return ()
    pts = meta.get("singular", []) if isinstance(meta, dict) else []
    return tuple(tuple(float(c) for c in p) for p in pts)


@dataclass(frozen=True, eq=False)
class _Field:
    grid: Grid4
    samples: np.ndarray
    metadata: str = ""
    singular_points: tuple = field(init=False, default=())

    _ncomp = 0

    def __post_init__(self):
        expected = self.grid.shape + ((self._ncomp,) if self._ncomp else ())
        arr = np.ascontiguousarray(self.samples, dtype=np.float64)
        if arr.shape != expected:
            raise ConfigurationError(f"samples shape {arr.shape} does not match grid {expected}")
        if "\n" in self.metadata:
            raise ConfigurationError("metadata must be a single line")
        # read-only view: avoids duplicating large sample arrays
        arr = arr.view()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "singular_points", parse_singular_points(self.metadata))
        self._check_finite()

    def _check_finite(self):
        bad = ~np.isfinite(self.samples)
        if self._ncomp:
            bad = bad.any(axis=-1)
        if not bad.any():
            return
        if not self.singular_points:
            raise ContractError("non-finite samples in a field without a declared singular locus")
        X, Y, Z = self.grid.mesh()
        reach = float(np.sqrt(3.0)) * max(self.grid.spacing) * (1 + 1e-9)
        near = np.zeros(self.grid.spatial_shape, dtype=bool)
        for p in self.singular_points:
            near |= (X - p[0]) ** 2 + (Y - p[1]) ** 2 + (Z - p[2]) ** 2 <= reach * reach
        if (bad & ~near).any():
            raise ContractError("non-finite samples farther than one cell from the singular locus")

    @property
    def is_singular(self) -> bool:
        return bool(self.singular_points)

    def slice(self, k: int) -> np.ndarray:
        return self.samples[k]


@dataclass(frozen=True, eq=False)
class VectorField(_Field):
    """Velocity-like field; ``samples`` has shape ``(nt, nz, ny, nx, 3)``."""

    _ncomp = 3


@dataclass(frozen=True, eq=False)
class ScalarField(_Field):
    """Pressure-like field; ``samples`` has shape ``(nt, nz, ny, nx)``."""

    _ncomp = 0


# -- interpolation ---------------------------------------------------------

def _axis_weights(lo, hi, n, q, label):
    q = np.asarray(q, dtype=np.float64)
    tol = _EXTENT_RTOL * max(1.0, abs(lo), abs(hi))
    if np.any(q < lo - tol) or np.any(q > hi + tol):
        bad = q[(q < lo - tol) | (q > hi + tol)].ravel()[0]
        raise DomainError(f"coordinate {label}={bad} outside grid extent [{lo}, {hi}]")
    pos = (np.clip(q, lo, hi) - lo) / ((hi - lo) / (n - 1))
    i0 = np.clip(np.floor(pos).astype(np.int64), 0, n - 2)
    return i0, pos - i0


def _lerp_axis(arr, axis, i0, w):
    a = np.take(arr, i0, axis=axis)
    b = np.take(arr, i0 + 1, axis=axis)
    shape = [1] * arr.ndim
    shape[axis] = len(w)
    w = w.reshape(shape)
    return a * (1.0 - w) + b * w


def _interp_slice(sl, grid, xq, yq, zq):
    """Trilinear tensor-product interpolation of one spatial slice."""
    iz, wz = _axis_weights(*grid.zrange, grid.nz, zq, "z")
    iy, wy = _axis_weights(*grid.yrange, grid.ny, yq, "y")
    ix, wx = _axis_weights(*grid.xrange, grid.nx, xq, "x")
    out = _lerp_axis(sl, 0, iz, wz)
    out = _lerp_axis(out, 1, iy, wy)
    return _lerp_axis(out, 2, ix, wx)


def _time_slice(f: _Field, t: float) -> np.ndarray:
    g = f.grid
    (k,), (w,) = _axis_weights(*g.trange, g.nt, [t], "t")
    if w == 0.0:
        return f.samples[k]
    if w == 1.0:
        return f.samples[k + 1]
    return f.samples[k] * (1.0 - w) + f.samples[k + 1] * w


def sample_at(f: _Field, x: Sequence[float], t: float):
    """Quadrilinear interpolation of ``f`` at the space-time point ``(x, t)``."""
    g = f.grid
    sl = _time_slice(f, t)
    out = _interp_slice(sl, g, [x[0]], [x[1]], [x[2]])
    return out[0, 0, 0].copy() if f._ncomp else float(out[0, 0, 0])


# -- differential operators ------------------------------------------------

def slice_gradient(sl: np.ndarray, spacing) -> np.ndarray:
    """Gradient of one vector slice ``(nz, ny, nx, 3)``.

    Returns ``(nz, ny, nx, 3, 3)`` with ``[..., i, j] = d v_i / d x_j``.
    Second-order centred in the interior, second-order one-sided on faces.
    """
    hx, hy, hz = spacing
    if min(sl.shape[:3]) < 3:
        raise ConfigurationError("gradient needs at least 3 nodes per spatial axis")
    dz, dy, dx = np.gradient(sl, hz, hy, hx, axis=(0, 1, 2), edge_order=2)
    return np.stack([dx, dy, dz], axis=-1)


def gradient(v: VectorField) -> np.ndarray:
    """Spatial gradient tensor field, shape ``(nt, nz, ny, nx, 3, 3)``."""
    g = v.grid
    if min(g.nx, g.ny, g.nz) < 3:
        raise ConfigurationError("gradient needs nx, ny, nz >= 3")
    return np.stack([slice_gradient(v.samples[k], g.spacing) for k in range(g.nt)])


def divergence_residual(v: VectorField) -> float:
    """Max over interior nodes and all time slices of |div v|."""
    g = v.grid
    if min(g.nx, g.ny, g.nz) < 3:
        raise ConfigurationError("gradient needs nx, ny, nz >= 3")
    worst = 0.0
    for k in range(g.nt):
        grad = slice_gradient(v.samples[k], g.spacing)
        div = grad[1:-1, 1:-1, 1:-1, 0, 0] + grad[1:-1, 1:-1, 1:-1, 1, 1] + grad[1:-1, 1:-1, 1:-1, 2, 2]
        if np.isfinite(div).any():
            worst = max(worst, float(np.nanmax(np.abs(div))))
    return worst


# -- natural scaling -------------------------------------------------------

def _rescale_one(f: _Field, lam: float, power: int, out: Grid4) -> np.ndarray:
    ncomp = (f._ncomp,) if f._ncomp else ()
    res = np.empty(out.shape + ncomp)
    xq, yq, zq = (lam * out.axis(a) for a in "xyz")
    tq = lam * lam * out.times
    # validate every coordinate up front so the error names the axis
    for label, q, (lo, hi), n in zip("xyz", (xq, yq, zq), f.grid.ranges,
                                     (f.grid.nx, f.grid.ny, f.grid.nz)):
        _axis_weights(lo, hi, n, q, label)
    _axis_weights(*f.grid.trange, f.grid.nt, tq, "t")
    scale = lam ** power
    for k, t in enumerate(tq):
        res[k] = scale * _interp_slice(_time_slice(f, t), f.grid, xq, yq, zq)
    return res


def natural_rescale(v: VectorField, p: Optional[ScalarField], lam: float,
                    out_grid: Optional[Grid4] = None):
    """Return ``(v^lam, p^lam)`` sampled on ``out_grid`` (default: v's grid).

    ``v^lam(x, t) = lam v(lam x, lam^2 t)`` and ``p^lam = lam^2 p(lam x, lam^2 t)``,
    evaluated by quadrilinear interpolation of the inputs.
    """
    lam = float(lam)
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"lambda must lie in (0, 1], got {lam}")
    out = out_grid or v.grid
    vl = VectorField(out, _rescale_one(v, lam, 1, out), _rescaled_meta(v, lam))
    pl = None
    if p is not None:
        pl = ScalarField(out, _rescale_one(p, lam, 2, out), _rescaled_meta(p, lam))
    return vl, pl


def _rescaled_meta(f: _Field, lam: float) -> str:
    meta = {"rescaled_lambda": lam, "source": f.metadata}
    if f.singular_points:
        meta["singular"] = [[c / lam for c in pt] for pt in f.singular_points]
    return json.dumps(meta, sort_keys=True)
