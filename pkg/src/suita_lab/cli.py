"""``suita-lab``: command-line front end.

Scalar results and reports are printed (or written to ``--out``) as JSON;
traces, scans and sampled maps are CSV. Exit status is 0 on success, 2 on
invalid input and 3 on numerical failure, with a JSON error report.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bergman, extension, geometry, green, mapping, suita, variation
from .errors import DomainError, SuitaLabError
from .selftest import report_text, run_selftest

DEFAULT_GRID = 256


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"


def _point(pair) -> complex | None:
    return None if pair is None else complex(float(pair[0]), float(pair[1]))


def load_domain(text: str | None) -> geometry.DomainSpec:
    if text is None:
        raise DomainError("missing-domain", "--domain is required for this command")
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise DomainError("invalid-domain", f"cannot read {text[1:]}: {exc}") from exc
    return geometry.domain_from_json(text)


def _require(value, flag: str):
    if value is None:
        raise DomainError("missing-argument", f"{flag} is required for this command")
    return value


def _levels(args) -> list[float]:
    if args.s_geom is not None:
        lo, hi, n = args.s_geom
        if not float(n).is_integer():
            raise DomainError("invalid-level", "--s-geom N must be an integer")
        return variation.geometric_levels(float(lo), float(hi), int(n), include_base=True)
    return variation.geometric_levels(include_base=True)


def _sample_points(domain, centre: complex, n: int, seed: int) -> list[complex]:
    """Seeded points of ``domain`` visible from ``centre`` along straight segments."""
    rng = np.random.default_rng(seed)
    far = _extent(domain, centre)
    out = []
    for _ in range(200 * n):
        if len(out) == n:
            break
        z = centre + far * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        seg = centre + (z - centre) * np.linspace(0.0, 1.0, 32)
        if np.all(geometry.contains_array(domain, seg)):
            out.append(complex(z))
    return out


def _extent(domain, centre: complex) -> float:
    core, _, _ = geometry.split_punctures(domain)
    while isinstance(core, geometry.Sublevel) and geometry.as_disc(core) is None:
        core = core.base
    disc = geometry.as_disc(core)
    if disc is not None:
        return abs(disc.center - centre) + disc.radius
    return 1.0 + abs(centre)


def _default_scan_points(domain) -> list[complex]:
    core, _, _ = geometry.split_punctures(domain)
    disc = geometry.as_disc(core)
    if disc is not None:
        return [disc.center + disc.radius * f for f in (0.0, 0.3, 0.6)]
    if isinstance(core, geometry.Annulus):
        radii = (math.sqrt(core.q), 0.5 * (core.q + math.sqrt(core.q)), 0.5 * (1 + math.sqrt(core.q)))
        return [r * complex(math.cos(a), math.sin(a)) for r in radii for a in (0.0, math.pi / 3)]
    raise DomainError("missing-argument", "--point is required for this domain")


# --------------------------------------------------------------------------- #
# commands; each returns (json-able result, optional csv text)

def cmd_kernel(args):
    domain = load_domain(args.domain)
    z0 = _require(_point(args.z0), "--z0")
    t = _point(args.t)
    grid = geometry.build_quadrature(domain, args.grid, args.seed)
    method = args.method
    if method == "auto":
        method = bergman.default_method(domain)
    out = {}
    if method == "gram_numeric":
        basis = bergman.numeric_basis(domain, args.degree, args.degree, grid)
        est = bergman.kernel_numeric(basis, t if t is not None else z0, z0)
        if args.dump_gram:
            np.savetxt(args.dump_gram, basis.gram.view(float).reshape(basis.gram.shape[0], -1),
                       delimiter=",", fmt="%.17g")
        out.update({"rank": basis.rank, "condition": basis.condition})
    elif t is None:
        est = bergman.kernel_diag(domain, z0, method)
    else:
        est = bergman.kernel_offdiag(domain, t, z0, method)
    out.update({"K": est.value, "method": est.method, "error_estimate": est.error_estimate,
                "reproducing_residual": bergman.reproducing_residual(domain, z0, grid, method)})
    return out, None


def cmd_green(args):
    domain = load_domain(args.domain)
    z0 = _require(_point(args.z0), "--z0")
    z = _require(_point(args.t), "--t")
    for p in (z, z0):
        if not geometry.contains(domain, p):
            raise DomainError("not-in-domain", f"{p} is not in the domain")
    out = {"G": green.green_value(domain, z, z0)}
    core, pts, _ = geometry.split_punctures(domain)
    if not pts and (geometry.as_disc(core) is not None or isinstance(core, geometry.Annulus)):
        out["validation"] = green.validate_green(core, z0, args.tol if args.tol is not None else 1e-8)
    return out, None


def cmd_capacity(args):
    domain = load_domain(args.domain)
    z0 = _require(_point(args.z0), "--z0")
    cap = green.log_capacity(domain, z0)
    out = {"capacity": cap.value, "err": cap.extrapolation_error, "method": cap.method}
    disc = geometry.as_disc(domain)
    if disc is not None and disc.center == 0:
        out["analytic_capacity"] = suita.analytic_capacity_disc(disc.radius, z0)
    return out, None


def cmd_ratio(args):
    domain = load_domain(args.domain)
    z0 = _require(_point(args.z0), "--z0")
    rec = suita.suita_ratio(domain, z0, args.method, resolution=args.grid)
    out = rec.to_dict()
    try:
        out["curvature_residual"] = suita.curvature_residual(domain, z0)
    except SuitaLabError as exc:
        out["curvature_residual"] = None
        out["curvature_residual_error"] = exc.tag
    out["volume_bound"] = suita.volume_bound_check(domain, z0, geometry.build_quadrature(domain, args.grid, args.seed))
    return out, None


def cmd_scan(args):
    domain = load_domain(args.domain)
    pts = [_point(p) for p in args.point] if args.point else _default_scan_points(domain)
    records = suita.suita_scan(domain, pts, kernel_method=args.method)
    ratios = [r.ratio for r in records]
    summary = {"count": len(records), "min_ratio": min(ratios) if ratios else None,
               "max_ratio": max(ratios) if ratios else None}
    return summary, suita.records_to_csv(records)


def cmd_variation(args):
    base = load_domain(args.domain)
    z0 = _require(_point(args.z0), "--z0")
    tol = args.tol if args.tol is not None else 1e-3
    trace = variation.variation_trace(base, z0, _levels(args), args.method)
    out = {"convexity": variation.convexity_report(trace, tol),
           "monotone": variation.monotone_report(trace, tol),
           "harmonicity_residual": variation.harmonicity_residual(trace),
           "gaps": [p.re_tau for p in trace.samples if not p.ok]}
    t = _point(args.t)
    if t is not None:
        s = _require(args.s, "--s")
        out["key_lemma_residual"] = variation.key_lemma_residual(base, z0, t, s)
        out["pde_residual"] = variation.pde_residual(base, z0, t, s, args.h)
    if args.s is not None and geometry.as_disc(geometry.split_punctures(base)[0]) is not None:
        out["capacity_scaling"] = variation.capacity_scaling_check(base, z0, args.s)
    return out, trace.to_csv()


def cmd_extension(args):
    domain = load_domain(args.domain)
    z0 = _require(_point(args.z0), "--z0")
    closed = extension.minimal_extension_closed(domain, z0)
    grid = geometry.build_quadrature(domain, args.grid, args.seed)
    basis = bergman.numeric_basis(domain, args.degree, args.degree, grid)
    qp = extension.minimal_extension_numeric(basis, grid, z0, closed.value_at_pole.real)
    tol = args.tol if args.tol is not None else 1e-6
    return {"kernel_formula": closed.to_dict(), "constrained_qp": qp.to_dict(),
            "bound_check": extension.extension_bound_check(domain, z0, tol)}, None


def cmd_map(args):
    base = load_domain(args.domain)
    z0 = _require(_point(args.z0), "--z0")
    s = _require(args.s, "--s")
    sub = variation.sublevel_domain(base, z0, s)
    pts = [_point(p) for p in args.point] if args.point else _sample_points(sub, z0, args.samples, args.seed)
    smap = mapping.riemann_map_from_kernel(base, z0, s, pts)
    tol = args.tol if args.tol is not None else 1e-6
    out = {"validation": mapping.map_validation(smap, base, z0, s, tol),
           "derivative_at_pole": smap.derivative_at_pole, "radius": smap.radius,
           "kernel_method": smap.meta["kernel_method"]}
    disc = geometry.as_disc(base)
    if disc is not None and disc.center == 0:
        mob = mapping.local_uniformizer_disc(disc.radius, z0)
        out["mobius_sup_error"] = float(np.max(np.abs(smap.values - mob(smap.points)))) if pts else 0.0
    return out, smap.to_csv()


def cmd_selftest(args):
    report = run_selftest(args.seed)
    return report, None


COMMANDS = {
    "kernel": cmd_kernel,
    "green": cmd_green,
    "capacity": cmd_capacity,
    "ratio": cmd_ratio,
    "scan": cmd_scan,
    "variation": cmd_variation,
    "extension": cmd_extension,
    "map": cmd_map,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="suita-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--domain", help="domain JSON, or @path to a JSON file")
        p.add_argument("--z0", nargs=2, type=float, metavar=("RE", "IM"))
        p.add_argument("--t", nargs=2, type=float, metavar=("RE", "IM"))
        p.add_argument("--s", type=float, help="sublevel level (< 0)")
        p.add_argument("--s-geom", nargs=3, type=float, metavar=("MIN", "MAX", "N"),
                       help="geometric |s| grid; the base level 0 is appended")
        p.add_argument("--point", nargs=2, type=float, action="append", metavar=("RE", "IM"))
        p.add_argument("--grid", type=int, default=DEFAULT_GRID, help="quadrature resolution")
        p.add_argument("--degree", type=int, default=bergman.DEFAULT_DEGREE)
        p.add_argument("--samples", type=int, default=50, help="random map samples")
        p.add_argument("--method", default="auto", choices=("auto",) + bergman.METHODS)
        p.add_argument("--h", type=float, default=1e-3, help="finite-difference step in s")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float)
        p.add_argument("--out", help="output path (CSV commands also write PATH.json)")
        p.add_argument("--dump-gram", help="write the Gram matrix as CSV (re,im interleaved)")
    return parser


def _emit(args, result, table) -> None:
    if args.command == "selftest":
        text = report_text(result)
    else:
        text = dumps(result)
    if args.out:
        out = Path(args.out)
        if table is not None:
            out.write_text(table)
            Path(str(out) + ".json").write_text(text)
        else:
            out.write_text(text)
    else:
        if table is not None:
            sys.stdout.write(table)
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.grid < geometry.MIN_RESOLUTION:
            raise DomainError("invalid-resolution", f"--grid must be >= {geometry.MIN_RESOLUTION}")
        result, table = COMMANDS[args.command](args)
    except SuitaLabError as exc:
        sys.stdout.write(dumps({**exc.to_dict(), "exit_code": exc.exit_code}))
        return exc.exit_code
    _emit(args, result, table)
    if args.command == "selftest" and not result["pass"]:
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
