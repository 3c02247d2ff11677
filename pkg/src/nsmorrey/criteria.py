"""Threshold verdicts for epsilon-regularity criteria evaluated on a radius ladder.

The small constants in these criteria exist but are not computable, so every
verdict takes them as user thresholds and only says whether the criterion
holds at those thresholds.  Limits as r -> 0 are replaced by the max/min over
the ``tail`` smallest ladder radii; fewer than three tail radii give an
``indeterminate`` verdict.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, ResolutionError
from .fields import ParabolicCylinder, ScalarField, VectorField
from .functionals import NAMES, FunctionalLadder, LadderConfig, build_ladder
from .parallel import ordered_map

CRITERIA = ("CKN_12", "LPS_13", "MAIN_14", "COR_15", "COR_16", "E3_17")
VERDICTS = ("satisfied", "not_satisfied", "indeterminate")
MIN_TAIL = 3

# thresholds each criterion reads
REQUIRED = {
    "CKN_12": ("eps0",),
    "LPS_13": ("eps_bar0",),
    "MAIN_14": ("M", "eps_M"),
    "COR_15": ("M", "eps_M"),
    "COR_16": ("zero_tol",),
    "E3_17": ("M", "eps_hat_M"),
}
_NEEDS_PRESSURE = {"MAIN_14", "COR_16"}
_NEEDS_TAIL = {"MAIN_14", "COR_15", "COR_16", "E3_17"}

SCAN_COLUMNS = ("center_x", "center_y", "center_z", "center_t", "score", "verdict")


@dataclass
class CriterionVerdict:
    criterion: str
    quantities: dict
    thresholds: dict
    verdict: str
    notes: list = field(default_factory=list)
    center: Optional[dict] = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise DomainError(f"unknown criterion {self.criterion!r}")
        if self.verdict not in VERDICTS:
            raise DomainError(f"unknown verdict {self.verdict!r}")

    def to_json(self) -> dict:
        return {"schema": "verdict-v1", "criterion": self.criterion, "center": self.center,
                "thresholds": dict(self.thresholds), "quantities": dict(self.quantities),
                "verdict": self.verdict, "notes": list(self.notes),
                "provenance": self.provenance}


def estimate_limits(ladder: FunctionalLadder, tail: int) -> dict:
    """Per functional: ``{"limsup": .., "liminf": .., "sup": ..}``.

    limsup/liminf are the max/min over the ``tail`` smallest radii; sup is
    the max over the whole ladder.  Functionals absent from the ladder are
    skipped.
    """
    n = len(ladder.radii)
    if tail < MIN_TAIL:
        raise DomainError(f"tail must be at least {MIN_TAIL}, got {tail}")
    if tail > n:
        raise DomainError(f"tail {tail} exceeds ladder length {n}")
    order = np.argsort(np.asarray(ladder.radii), kind="stable")
    tail_idx = order[:tail]
    out = {}
    for name in NAMES:
        vals = ladder.values(name)
        if not vals:
            continue
        arr = np.asarray(vals, dtype=np.float64)
        out[name] = {"limsup": float(arr[tail_idx].max()), "liminf": float(arr[tail_idx].min()),
                     "sup": float(arr.max())}
    return out


def compute_G_g(ladder: FunctionalLadder, tail: int) -> tuple:
    """``(G_est, g_est)``: min of the limsup of E, C, A and min of the liminf of E, C, A, H, D0.

    A ladder without pressure leaves D0 out of ``g_est``.
    """
    lim = estimate_limits(ladder, tail)
    G = min(lim[n]["limsup"] for n in ("E", "C", "A"))
    g = min(lim[n]["liminf"] for n in ("E", "C", "A", "H", "D0") if n in lim)
    return G, g


def _check_thresholds(criterion: str, thresholds: dict) -> dict:
    if criterion not in CRITERIA:
        raise DomainError(f"unknown criterion {criterion!r}; choose from {CRITERIA}")
    used = {}
    for key in REQUIRED[criterion]:
        if key not in thresholds:
            raise ConfigurationError(f"{criterion} needs threshold {key!r}")
        val = float(thresholds[key])
        if not val > 0:
            raise ConfigurationError(f"threshold {key} must be positive, got {val}")
        used[key] = val
    return used


def _sub_ladder(ladder: FunctionalLadder, keep: Sequence[int]) -> FunctionalLadder:
    pick = lambda xs: [xs[i] for i in keep] if xs else []
    return FunctionalLadder(ladder.x0, ladder.t0, pick(ladder.radii),
                            **{n: pick(ladder.values(n)) for n in NAMES},
                            excluded_volume=pick(ladder.excluded_volume), s=ladder.s,
                            l=ladder.l, warnings=list(ladder.warnings),
                            provenance=ladder.provenance)


def verdict_from_ladder(criterion: str, ladder: FunctionalLadder, thresholds: dict,
                        tail: int = MIN_TAIL, strict: bool = False) -> CriterionVerdict:
    """Apply ``criterion`` to an already evaluated ladder.

    ``strict`` (MAIN_14 only) first drops radii r >= r0 * min(1/4, (A^{3/2} + D0^2)^{-2}),
    the first-ladder-radius values standing in for the unit cylinder.
    """
    th = _check_thresholds(criterion, thresholds)
    if criterion in _NEEDS_PRESSURE and not ladder.D0:
        raise ConfigurationError(f"{criterion} needs D0, but no pressure field was supplied")
    notes = list(ladder.warnings)
    q = {}
    center = {"x": list(ladder.x0), "t": ladder.t0}

    def done(verdict):
        notes.append(f"ladder radii {len(ladder.radii)}, smallest {min(ladder.radii)!r}")
        return CriterionVerdict(criterion, q, th, verdict, notes, center,
                                {"ladder": ladder.to_json(), "tail": tail, "strict": strict})

    if criterion == "CKN_12":
        q["sup_E"] = float(max(ladder.E))
        return done("satisfied" if q["sup_E"] < th["eps0"] else "not_satisfied")
    if criterion == "LPS_13":
        if not ladder.M:
            raise ConfigurationError("LPS_13 needs ladder exponents s and l")
        if not math.isclose(3.0 / ladder.s + 2.0 / ladder.l, 1.0, abs_tol=1e-12):
            raise ConfigurationError(f"(s, l) = ({ladder.s}, {ladder.l}) is not critical")
        q["M_sl"] = float(max(ladder.M))
        q["s"], q["l"] = ladder.s, ("inf" if math.isinf(ladder.l) else ladder.l)
        notes.append("M_sl is the sup over ladder radii of M_{s,l}(r)")
        return done("satisfied" if q["M_sl"] < th["eps_bar0"] else "not_satisfied")

    lad = ladder
    if strict and criterion == "MAIN_14":
        i0 = int(np.argmax(ladder.radii))
        base = ladder.A[i0] ** 1.5 + ladder.D0[i0] ** 2
        cut = ladder.radii[i0] * min(0.25, base ** -2 if base > 0 else math.inf)
        keep = [i for i, r in enumerate(ladder.radii) if r < cut]
        q["strict_radius_cut"] = cut
        notes.append(f"strict mode: radii restricted to r < {cut!r}")
        lad = _sub_ladder(ladder, keep)
    n_tail = min(tail, len(lad.radii))
    q["tail_radii"] = n_tail
    if n_tail < MIN_TAIL:
        notes.append(f"only {n_tail} tail radii available; limits need {MIN_TAIL}")
        return done("indeterminate")
    lim = estimate_limits(lad, n_tail)
    for name, d in lim.items():
        for k, val in d.items():
            q[f"{k}_{name}"] = val
    notes.append(f"limits estimated over the {n_tail} smallest radii")

    if criterion == "COR_15":
        ok = q["limsup_E"] < th["M"] and q["liminf_E"] < th["eps_M"]
        return done("satisfied" if ok else "not_satisfied")
    G, g = compute_G_g(lad, n_tail)
    q["G_est"], q["g_est"] = G, g
    if criterion == "MAIN_14":
        ok = G < th["M"] and g < th["eps_M"]
    elif criterion == "COR_16":
        ok = math.isfinite(G) and g <= th["zero_tol"]
        notes.append("g = 0 is read as g_est <= zero_tol")
    else:
        ok = G < th["M"] and q["liminf_E3"] < th["eps_hat_M"]
    return done("satisfied" if ok else "not_satisfied")


def evaluate_criterion(criterion: str, v: VectorField, p: Optional[ScalarField], center,
                       config: Optional[LadderConfig] = None, thresholds: Optional[dict] = None,
                       tail: int = MIN_TAIL, strict: bool = False) -> CriterionVerdict:
    """Build the ladder at ``center = (x0, t0)`` and apply ``criterion``."""
    thresholds = thresholds or {}
    _check_thresholds(criterion, thresholds)
    if criterion in _NEEDS_PRESSURE and p is None:
        raise ConfigurationError(f"{criterion} needs a pressure field")
    cfg = config or LadderConfig()
    if criterion == "LPS_13" and cfg.s is None:
        cfg = LadderConfig(cfg.r0, cfg.theta, cfg.count, 5.0, 5.0, cfg.rule)
    x0, t0 = center
    ladder = build_ladder(v, p, x0, t0, cfg)
    return verdict_from_ladder(criterion, ladder, thresholds, tail, strict)


# -- scan ------------------------------------------------------------------

@dataclass(frozen=True)
class ScanRegion:
    """Axis-aligned box of centers: ``lo``/``hi`` are (x, y, z, t)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != 4 or len(self.hi) != 4:
            raise DomainError("scan region corners are (x, y, z, t)")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise DomainError("scan region has lo > hi")

    def centers(self, stride: float, t_stride: Optional[float] = None) -> list:
        if not stride > 0 or (t_stride is not None and not t_stride > 0):
            raise DomainError("scan strides must be positive")
        axes = []
        for i, (a, b) in enumerate(zip(self.lo, self.hi)):
            h = stride if i < 3 or t_stride is None else t_stride
            n = int(math.floor((b - a) / h + 1e-9)) + 1
            axes.append([a + k * h for k in range(n)])
        return [((x, y, z), t) for x, y, z, t in itertools.product(*axes)]


@dataclass
class ScanEntry:
    center: tuple
    verdict: CriterionVerdict
    score: float

    def row(self) -> dict:
        (x, y, z), t = self.center
        return dict(zip(SCAN_COLUMNS, (x, y, z, t, self.score, self.verdict.verdict)))


def scan_score(ladder: FunctionalLadder) -> float:
    """min over the ladder of C(r) + D0(r); D0 counts as 0 without pressure."""
    d0 = ladder.D0 or [0.0] * len(ladder.radii)
    return float(min(c + d for c, d in zip(ladder.C, d0)))


def rank(entries: Sequence[ScanEntry]) -> list:
    """Descending score, ties broken by center (x, y, z, t) ascending."""
    return sorted(entries, key=lambda e: (-e.score, *e.center[0], e.center[1]))


def scan(v: VectorField, p: Optional[ScalarField], centers, criterion: str = "CKN_12",
         thresholds: Optional[dict] = None, config: Optional[LadderConfig] = None,
         tail: int = MIN_TAIL) -> list:
    """Evaluate ``criterion`` and the singularity score at every center; return ranked entries.

    ``centers`` is a :class:`ScanRegion` paired with strides via
    ``region.centers(...)`` or any iterable of ``((x, y, z), t)``.  Centers
    whose largest cylinder is below the resolution floor are dropped; an empty
    result is an error.
    """
    thresholds = thresholds or {}
    _check_thresholds(criterion, thresholds)
    if criterion in _NEEDS_PRESSURE and p is None:
        raise ConfigurationError(f"{criterion} needs a pressure field")
    cfg = config or LadderConfig()
    centers = [(tuple(float(c) for c in x), float(t)) for x, t in centers]
    for x, t in centers:
        v.grid.check_cylinder(ParabolicCylinder(x, t, cfg.r0))

    def one(c):
        try:
            ladder = build_ladder(v, p, c[0], c[1], cfg)
        except ResolutionError:
            return None
        verdict = verdict_from_ladder(criterion, ladder, thresholds, tail)
        score = scan_score(ladder)
        if p is None:
            verdict.notes.append("score uses C only: no pressure field")
        return ScanEntry(c, verdict, score)

    entries = [e for e in ordered_map(one, centers) if e is not None]
    if not entries:
        raise DomainError("no scan center survives the resolution floor")
    return rank(entries)


def scan_csv(entries: Sequence[ScanEntry]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SCAN_COLUMNS, lineterminator="\n")
    w.writeheader()
    for e in entries:
        w.writerow({k: (repr(val) if isinstance(val, float) else val)
                    for k, val in e.row().items()})
    return buf.getvalue()
