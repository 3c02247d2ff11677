"""Command line entry point: ``nsmorrey <command> [--flags]``.

Exit codes: 0 success, 1 contract/domain/configuration error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from . import __version__
from .audits import (SELECTIONS, Cutoff, InequalityAudit, audit_linear_energy,
                     linear_norm_report, local_energy_terms, run_audits, summarize)
from .criteria import CRITERIA, ScanRegion, evaluate_criterion, scan, scan_csv
from .errors import ConfigurationError, DomainError, NSMorreyError
from .fields import Grid4, ParabolicCylinder, ScalarField, VectorField
from .functionals import NAMES, LadderConfig, build_ladder
from .generators import KINDS, GeneratorSpec, generate
from .quadrature import CellWeightRule
from .reports import merge_reports, read_json, validate, write_json, write_text
from .vsf import read_field, write_field

THRESHOLD_KEYS = ("eps0", "eps_bar0", "M", "eps_M", "eps_hat_M", "zero_tol")
THRESHOLD_FLAGS = {"eps0": "--eps0", "eps_bar0": "--eps-bar0", "M": "--big-m",
                   "eps_M": "--eps-m", "eps_hat_M": "--eps-hat-m", "zero_tol": "--zero-tol"}


@dataclass
class RunConfig:
    """Parameters shared by the compute commands; loadable from ``runconfig-v1`` JSON."""

    r0: float = 1.0
    theta: float = 1.0 / math.sqrt(2.0)
    count: int = 12
    tail: int = 3
    s: Optional[float] = None
    l: Optional[float] = None
    rule: str = "partial-cell"
    singular_exclusion: float = 0.0
    thresholds: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ConfigurationError(f"theta must lie in (0, 1), got {self.theta}")
        for k, val in self.thresholds.items():
            if k not in THRESHOLD_KEYS:
                raise ConfigurationError(f"unknown threshold {k!r}")
            if not float(val) > 0:
                raise ConfigurationError(f"threshold {k} must be positive, got {val}")

    @classmethod
    def from_json(cls, d: dict) -> "RunConfig":
        if d.get("schema") != "runconfig-v1":
            raise ConfigurationError("run config must carry schema 'runconfig-v1'")
        known = {k: d[k] for k in ("r0", "theta", "count", "tail", "s", "rule",
                                    "singular_exclusion", "thresholds") if k in d}
        if "l" in d:
            known["l"] = math.inf if d["l"] == "inf" else d["l"]
        return cls(**known)

    def ladder(self) -> LadderConfig:
        return LadderConfig(self.r0, self.theta, self.count, self.s, self.l, self.cell_rule())

    def cell_rule(self) -> CellWeightRule:
        return CellWeightRule(self.rule, self.singular_exclusion)


# -- argument helpers ------------------------------------------------------

def _floats(raw: str, n: Optional[int] = None) -> tuple:
    try:
        vals = tuple(float(x) for x in raw.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}")
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} numbers, got {raw!r}")
    return vals


def _vec3(raw: str) -> tuple:
    return _floats(raw, 3)


def _vec4(raw: str) -> tuple:
    return _floats(raw, 4)


def _exponent(raw: str) -> float:
    return math.inf if raw.strip().lower() in ("inf", "infinity") else float(raw)


def _pairs(raw: str) -> list:
    out = []
    for item in raw.split(","):
        try:
            r, rho = (float(x) for x in item.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"radius pairs look like 0.5:1,0.25:1, got {raw!r}")
        out.append((r, rho))
    return out


def _add_grid_flags(p):
    g = p.add_argument_group("grid")
    g.add_argument("--n", type=int, default=32, help="nodes per spatial axis")
    g.add_argument("--nt", type=int, default=33, help="time slices")
    g.add_argument("--lo", type=float, default=-1.0)
    g.add_argument("--hi", type=float, default=1.0)
    g.add_argument("--t-min", type=float, default=-1.0)
    g.add_argument("--t-max", type=float, default=0.0)


def _add_field_flags(p, pressure=True):
    p.add_argument("--velocity", required=True, help="VSF1 vector file")
    if pressure:
        p.add_argument("--pressure", help="VSF1 scalar file")


def _add_ladder_flags(p):
    g = p.add_argument_group("ladder")
    g.add_argument("--config", help="runconfig-v1 JSON; flags override its values")
    g.add_argument("--r0", type=float)
    g.add_argument("--theta", type=float)
    g.add_argument("--count", type=int)
    g.add_argument("--tail", type=int)
    g.add_argument("--s", type=_exponent, help="mixed-norm space exponent")
    g.add_argument("--l", type=_exponent, help="mixed-norm time exponent (inf allowed)")
    g.add_argument("--rule", choices=("partial-cell", "indicator"))
    g.add_argument("--singular-exclusion", type=float,
                   help="mask cells within this distance of declared singular points")


def _add_threshold_flags(p):
    g = p.add_argument_group("thresholds")
    for key in THRESHOLD_KEYS:
        g.add_argument(THRESHOLD_FLAGS[key], dest=key, type=float, help=f"threshold {key}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsmorrey",
                                 description="Scale-invariant functionals and regularity-criterion "
                                             "checks for sampled velocity/pressure fields.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write generator output as VSF1 files")
    g.add_argument("--spec", help="genspec-v1 JSON (overrides the inline flags)")
    g.add_argument("--kind", choices=KINDS)
    g.add_argument("--value", type=_vec3, help="constant velocity")
    g.add_argument("--rate", type=float, help="strain rate")
    g.add_argument("--amplitude", type=float)
    g.add_argument("--wavenumber", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--modes", type=int)
    g.add_argument("--kmax", type=int)
    g.add_argument("--decay", type=float)
    g.add_argument("--no-pressure", action="store_true")
    g.add_argument("--delta", type=float, help="mollification radius of the swirl")
    g.add_argument("--center", type=_vec3)
    g.add_argument("--bump-radius", type=float)
    g.add_argument("--u-seed", type=int, help="manufactured triple: trig advecting field seed")
    g.add_argument("--u-modes", type=int, default=4)
    g.add_argument("--u-amplitude", type=float, default=1.0)
    _add_grid_flags(g)
    g.add_argument("--out", required=True, help="output prefix; writes PREFIX.v.vsf etc.")

    e = sub.add_parser("eval", help="functional ladder at one center")
    _add_field_flags(e)
    e.add_argument("--center", type=_vec3, default=(0.0, 0.0, 0.0))
    e.add_argument("--t0", type=float, default=0.0)
    _add_ladder_flags(e)
    e.add_argument("--out", required=True, help="ladder JSON")
    e.add_argument("--csv", help="optional ladder CSV")

    a = sub.add_parser("audit", help="inequality audits")
    _add_field_flags(a)
    a.add_argument("--center", type=_vec3, default=(0.0, 0.0, 0.0))
    a.add_argument("--t0", type=float, default=0.0)
    a.add_argument("--ineq", default="21,22,23,24,25,26",
                   help="comma list from 21..26, L21a, L21b, L21c, LEI")
    a.add_argument("--pairs", type=_pairs, default=[(0.5, 1.0), (0.25, 1.0)],
                   help="(r, rho) pairs as r:rho,...")
    a.add_argument("--big-r", type=float, default=1.0, help="R for the energy audits")
    a.add_argument("--lei-times", type=_floats, default=(-0.75, -0.5, -0.25))
    _add_ladder_flags(a)
    a.add_argument("--out", required=True)

    s = sub.add_parser("scan", help="rank centers by the C + D0 score")
    _add_field_flags(s)
    s.add_argument("--lo", type=_vec4, required=True, help="x,y,z,t corner")
    s.add_argument("--hi", type=_vec4, required=True, help="x,y,z,t corner")
    s.add_argument("--stride", type=float, required=True)
    s.add_argument("--t-stride", type=float)
    s.add_argument("--criterion", choices=CRITERIA, default="CKN_12")
    _add_threshold_flags(s)
    _add_ladder_flags(s)
    s.add_argument("--out-csv", required=True)
    s.add_argument("--out-json", required=True)

    c = sub.add_parser("criterion", help="one criterion verdict at one center")
    _add_field_flags(c)
    c.add_argument("--center", type=_vec3, default=(0.0, 0.0, 0.0))
    c.add_argument("--t0", type=float, default=0.0)
    c.add_argument("--criterion", choices=CRITERIA, required=True)
    c.add_argument("--strict", action="store_true", help="MAIN_14: keep only radii below the small-data cut")
    _add_threshold_flags(c)
    _add_ladder_flags(c)
    c.add_argument("--out", required=True)

    v = sub.add_parser("verify-linear", help="audits for a manufactured linear triple")
    v.add_argument("--spec", help="genspec-v1 JSON of kind manufactured_linear_triple")
    v.add_argument("--velocity")
    v.add_argument("--advect", help="divergence-free transport field u")
    v.add_argument("--forcing", help="forcing f")
    v.add_argument("--t", type=float, default=-0.5)
    v.add_argument("--ball-center", type=_vec3, default=(0.0, 0.0, 0.0))
    v.add_argument("--ball-radius", type=float, default=1.0)
    v.add_argument("--out", required=True)

    r = sub.add_parser("report", help="merge JSON outputs into one summary")
    r.add_argument("--inputs", nargs="+", required=True)
    r.add_argument("--out", required=True)
    return ap


# -- helpers ---------------------------------------------------------------

def _check_output(path: str) -> None:
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise FileNotFoundError(f"output directory {parent} does not exist")


def _load_pair(args):
    v = read_field(args.velocity)
    if not isinstance(v, VectorField):
        raise ConfigurationError(f"{args.velocity} holds a scalar field, expected a vector field")
    p = None
    if getattr(args, "pressure", None):
        p = read_field(args.pressure)
        if not isinstance(p, ScalarField):
            raise ConfigurationError(f"{args.pressure} holds a vector field, expected a scalar field")
        if p.grid != v.grid:
            raise DomainError(f"grid mismatch: velocity {args.velocity} has {v.grid.to_dict()}, "
                              f"pressure {args.pressure} has {p.grid.to_dict()}")
    return v, p


def _run_config(args) -> RunConfig:
    cfg = RunConfig.from_json(read_json(args.config)) if getattr(args, "config", None) else RunConfig()
    over = {k: getattr(args, k) for k in ("r0", "theta", "count", "tail", "s", "l", "rule",
                                          "singular_exclusion")
            if getattr(args, k, None) is not None}
    th = dict(cfg.thresholds)
    th.update({k: getattr(args, k) for k in THRESHOLD_KEYS if getattr(args, k, None) is not None})
    return replace(cfg, thresholds=th, **over)


def _provenance(v, p, cfg: Optional[RunConfig] = None, **extra) -> dict:
    out = {"tool": f"nsmorrey {__version__}", "grid": v.grid.to_dict(),
           "velocity_meta": v.metadata, "pressure_meta": None if p is None else p.metadata}
    if cfg is not None:
        out["ladder"] = cfg.ladder().to_dict()
        out["thresholds"] = dict(cfg.thresholds)
        out["tail"] = cfg.tail
    out.update(extra)
    return out


def _spec_from_flags(args) -> GeneratorSpec:
    if args.spec:
        spec = GeneratorSpec.from_json(read_json(args.spec))
        if spec.grid is None:
            spec = replace(spec, grid=_grid_from_flags(args))
        return spec
    if not args.kind:
        raise ConfigurationError("gen needs --spec or --kind")
    params = {}
    for key in ("rate", "amplitude", "wavenumber", "seed", "modes", "kmax", "decay", "delta"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    if args.value is not None:
        params["value"] = list(args.value)
    if args.center is not None:
        params["center"] = list(args.center)
    if args.no_pressure:
        params["with_pressure"] = False
    if args.kind == "manufactured_linear_triple":
        bump = {"radius": args.bump_radius if args.bump_radius is not None else 0.5}
        if args.center is not None:
            bump["center"] = list(args.center)
        if args.amplitude is not None:
            bump["amplitude"] = args.amplitude
        params = {"bump": bump}
        if args.u_seed is not None:
            params["u"] = {"kind": "trig_divfree", "seed": args.u_seed, "modes": args.u_modes,
                           "amplitude": args.u_amplitude}
    return GeneratorSpec(args.kind, params, _grid_from_flags(args))


def _grid_from_flags(args) -> Grid4:
    return Grid4.cube(args.n, args.nt, args.lo, args.hi, args.t_min, args.t_max)


# -- commands --------------------------------------------------------------

def cmd_gen(args) -> int:
    spec = _spec_from_flags(args)
    validate(spec.to_json(), "genspec-v1")
    _check_output(args.out + ".v.vsf")
    out = generate(spec)
    for tag in ("v", "p", "u", "f"):
        fld = getattr(out, tag)
        if fld is not None:
            path = f"{args.out}.{tag}.vsf"
            write_field(path, fld)
            print(path)
    return 0


def cmd_eval(args) -> int:
    cfg = _run_config(args)
    _check_output(args.out)
    if args.csv:
        _check_output(args.csv)
    v, p = _load_pair(args)
    lad = build_ladder(v, p, args.center, args.t0, cfg.ladder())
    doc = lad.to_json()
    doc["provenance"] = _provenance(v, p, cfg)
    write_json(args.out, doc)
    if args.csv:
        cols = ["radius"] + [n for n in NAMES if lad.values(n)] + ["excluded_volume"]
        rows = [",".join(cols)]
        for i, r in enumerate(lad.radii):
            vals = [r] + [lad.values(n)[i] for n in cols[1:-1]] + [lad.excluded_volume[i]]
            rows.append(",".join(repr(float(x)) for x in vals))
        write_text(args.csv, "\n".join(rows) + "\n")
    return 0


def _audit_records(args, v, p, cfg: RunConfig) -> list:
    center = (args.center, args.t0)
    rule = cfg.cell_rule()
    wanted = [w.strip() for w in args.ineq.split(",") if w.strip()]
    allowed = set(SELECTIONS) | {"LEI"}
    bad = [w for w in wanted if w not in allowed]
    if bad:
        raise ConfigurationError(f"unknown inequality selection {bad}; choose from {sorted(allowed)}")
    if p is None and any(w not in ("21", "LEI") for w in wanted):
        raise ConfigurationError("the selected audits need a pressure field (--pressure)")
    recs = run_audits(v, p, center, [w for w in wanted if w != "LEI"], args.pairs, args.big_r,
                      cfg.ladder(), rule)
    if "LEI" in wanted:
        phi = Cutoff(center=tuple(args.center), domain_center=tuple(args.center),
                     domain_t0=args.t0)
        for t in args.lei_times:
            terms = local_energy_terms(v, p, phi, t, rule)
            recs.append(InequalityAudit("LEI", {"t": t, "cutoff": _cutoff_dict(phi)},
                                        terms["lhs"], terms["rhs"],
                                        {"residual": terms["residual"]}))
    return recs


def _cutoff_dict(phi: Cutoff) -> dict:
    return {"center": list(phi.center), "radius": phi.radius, "t_on": phi.t_on,
            "t_full": phi.t_full}


def cmd_audit(args) -> int:
    cfg = _run_config(args)
    _check_output(args.out)
    v, p = _load_pair(args)
    recs = _audit_records(args, v, p, cfg)
    doc = {"schema": "audit-v1", "audits": [r.to_json() for r in recs],
           "summary": summarize(recs),
           "provenance": _provenance(v, p, cfg, pairs=[list(x) for x in args.pairs],
                                     big_r=args.big_r)}
    write_json(args.out, doc)
    return 0


def cmd_scan(args) -> int:
    cfg = _run_config(args)
    _check_output(args.out_csv)
    _check_output(args.out_json)
    v, p = _load_pair(args)
    centers = ScanRegion(args.lo, args.hi).centers(args.stride, args.t_stride)
    entries = scan(v, p, centers, args.criterion, cfg.thresholds, cfg.ladder(), cfg.tail)
    write_text(args.out_csv, scan_csv(entries))
    doc = {"schema": "scan-v1", "criterion": args.criterion,
           "entries": [{"center": {"x": list(e.center[0]), "t": e.center[1]}, "score": e.score,
                        "verdict": _slim(e.verdict.to_json())} for e in entries],
           "provenance": _provenance(v, p, cfg, region={"lo": list(args.lo), "hi": list(args.hi)},
                                     stride=args.stride, t_stride=args.t_stride)}
    write_json(args.out_json, doc)
    return 0


def _slim(verdict: dict) -> dict:
    # scan rows share one ladder config; keep per-center ladders but drop repeated provenance
    lad = dict(verdict["provenance"]["ladder"])
    lad.pop("provenance", None)
    return {**verdict, "provenance": {**verdict["provenance"], "ladder": lad}}


def cmd_criterion(args) -> int:
    cfg = _run_config(args)
    _check_output(args.out)
    v, p = _load_pair(args)
    ver = evaluate_criterion(args.criterion, v, p, (args.center, args.t0), cfg.ladder(),
                             cfg.thresholds, cfg.tail, args.strict)
    doc = ver.to_json()
    doc["provenance"] = {**doc["provenance"], "run": _provenance(v, p, cfg)}
    write_json(args.out, doc)
    print(ver.verdict)
    return 0


def cmd_verify_linear(args) -> int:
    _check_output(args.out)
    if args.spec:
        spec = GeneratorSpec.from_json(read_json(args.spec))
        if spec.kind != "manufactured_linear_triple":
            raise ConfigurationError("verify-linear needs a manufactured_linear_triple spec")
        gen = generate(spec)
        v, u, f = gen.v, gen.u, gen.f
    else:
        if not (args.velocity and args.advect and args.forcing):
            raise ConfigurationError("verify-linear needs --spec or all of --velocity, --advect, --forcing")
        v, u, f = (read_field(x) for x in (args.velocity, args.advect, args.forcing))
        for name, fld in (("velocity", v), ("advect", u), ("forcing", f)):
            if not isinstance(fld, VectorField):
                raise ConfigurationError(f"--{name} must be a vector field")
        if not (v.grid == u.grid == f.grid):
            raise DomainError(f"grid mismatch: velocity {v.grid.to_dict()}, advect "
                              f"{u.grid.to_dict()}, forcing {f.grid.to_dict()}")
    a16, a17, rel = audit_linear_energy(v, u, f, args.t, (args.ball_center, args.ball_radius))
    dirichlet = a16.extra["dirichlet"]
    e18 = InequalityAudit("E18", {"t": args.t}, abs(rel) * dirichlet, dirichlet,
                          {"relative_residual": rel})
    g = v.grid
    span = g.trange[1] - g.trange[0]
    cyl = ParabolicCylinder(args.ball_center, g.trange[1], min(args.ball_radius, math.sqrt(span)))
    l3, l5 = linear_norm_report(v, cyl)
    recs = [a16, a17, e18]
    doc = {"schema": "audit-v1", "audits": [r.to_json() for r in recs], "summary": summarize(recs),
           "linear": {"energy_identity_relative_residual": rel, "L3_inf": l3, "L5": l5,
                      "norm_cylinder": {"x": list(cyl.x0), "t": cyl.t0, "r": cyl.r}},
           "provenance": {"tool": f"nsmorrey {__version__}", "grid": v.grid.to_dict(),
                          "velocity_meta": v.metadata, "advect_meta": u.metadata,
                          "ball": {"x": list(args.ball_center), "r": args.ball_radius}}}
    write_json(args.out, doc)
    return 0


def cmd_report(args) -> int:
    _check_output(args.out)
    docs = [(Path(p).name, read_json(p)) for p in args.inputs]
    write_json(args.out, merge_reports(docs))
    return 0


COMMANDS = {"gen": cmd_gen, "eval": cmd_eval, "audit": cmd_audit, "scan": cmd_scan,
            "criterion": cmd_criterion, "verify-linear": cmd_verify_linear,
            "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NSMorreyError as exc:
        print(f"nsmorrey {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"nsmorrey {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"nsmorrey {args.command}: I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
