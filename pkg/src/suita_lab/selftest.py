"""Deterministic invariant suite behind ``suita-lab selftest``.

Each check records a value, a threshold and a relation; the report is plain
JSON with values rounded to 10 significant digits so repeated runs are
byte-identical. The suite stays at desk scale (about a minute).
"""

from __future__ import annotations

import json
import math

import numpy as np

from .bergman import kernel_diag, numeric_basis, reproducing_residual
from .extension import SQRT_PI, extension_bound_check, minimal_extension_closed, minimal_extension_numeric
from .geometry import Annulus, UnitDisc, build_quadrature, contains, puncture
from .green import annulus_log_capacity, log_capacity, validate_green
from .mapping import local_uniformizer_disc, map_validation, riemann_map_from_kernel
from .suita import analytic_capacity_disc, curvature_residual, suita_ratio, volume_bound_check
from .variation import (capacity_scaling_check, convexity_report, harmonicity_residual,
                        key_lemma_residual, monotone_report, pde_residual, sublevel_domain,
                        variation_trace)


def _round(v):
    if isinstance(v, bool) or v is None:
        return v
    return float(f"{float(v):.10g}")


class _Suite:
    def __init__(self):
        self.checks = []

    def check(self, name: str, value, relation: str, threshold):
        ok = {"<": value < threshold, ">": value > threshold, "<=": value <= threshold,
              ">=": value >= threshold}[relation]
        self.checks.append({"name": name, "value": _round(value), "relation": relation,
                            "threshold": _round(threshold), "pass": bool(ok)})

    def flag(self, name: str, ok: bool):
        self.checks.append({"name": name, "value": bool(ok), "relation": "is", "threshold": True,
                            "pass": bool(ok)})


def _disc_samples(rng, radius: float, centre: complex, n: int):
    r = radius * np.sqrt(rng.uniform(0.0, 0.81, n))
    return list(centre + r * np.exp(2j * np.pi * rng.uniform(size=n)))


def run_selftest(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    s = _Suite()
    disc, ann = UnitDisc(), Annulus(0.25)

    for z in (0, 0.3, 0.6, 0.3 + 0.4j):
        s.check(f"disc ratio closed z0={z}", abs(suita_ratio(disc, z).ratio - 1), "<", 1e-8)
    s.check("disc ratio numeric z0=0.3", abs(suita_ratio(disc, 0.3, "gram_numeric", resolution=256,
                                                          degree=16).ratio - 1), "<", 1e-3)

    rec = suita_ratio(ann, 0.5)
    num = kernel_diag(ann, 0.5, "gram_numeric").real
    s.check("annulus ratio > 1 (q=0.25, z0=0.5)", rec.ratio - 1, ">", 0.0)
    s.check("annulus curvature < -4", rec.curvature, "<", -4.0)
    s.check("annulus Laurent vs Gram kernel", abs(num - rec.K) / rec.K, "<", 1e-3)
    s.check("annulus probe vs image-product capacity",
            abs(rec.c - math.exp(annulus_log_capacity(0.25, 0.5))) / rec.c, "<", 1e-8)

    for z in (0, 0.2, 0.5j):
        s.check(f"disc curvature identity z={z}", curvature_residual(disc, z), "<", 1e-4)
    for z in (0.55, -0.5j):
        s.check(f"annulus curvature identity z={z}", curvature_residual(Annulus(0.3), z), "<", 1e-2)
    s.check("disc analytic capacity = capacity",
            abs(analytic_capacity_disc(1.0, 0.6) - log_capacity(disc, 0.6).value), "<", 1e-10)
    s.flag("disc Green validation", validate_green(disc, 0.3)["pass"])
    s.flag("annulus Green validation", validate_green(Annulus(0.3), 0.5, tol=1e-6)["pass"])
    s.check("volume bound at disc centre", abs(volume_bound_check(disc, 0)["K_times_volume"] - 1), "<", 1e-3)
    s.check("volume bound off centre", volume_bound_check(disc, 0.5)["K_times_volume"], ">", 1.0)

    s.check("reproducing residual disc", reproducing_residual(disc, 0.5), "<", 1e-3)
    s.check("reproducing residual annulus", reproducing_residual(Annulus(0.3), 0.55), "<", 1e-2)

    traces = {"disc": variation_trace(disc, 0.3), "annulus q=0.25": variation_trace(ann, 0.5),
              "annulus q=0.1": variation_trace(Annulus(0.1), math.sqrt(0.1))}
    for name, tr in traces.items():
        conv, mono = convexity_report(tr), monotone_report(tr)
        s.check(f"convexity {name}", conv["min_second_diff"], ">=", -1e-3)
        s.check(f"monotone {name}", mono["min_step"], ">=", -1e-3)
        s.check(f"bounded by base {name}", mono["bound_gap"], "<=", 1e-3)
        s.check(f"tail slope {name}", abs(conv["slope_tail"] + 2), "<", 0.05)
    s.check("harmonicity disc trace", harmonicity_residual(traces["disc"]), "<", 1e-6)
    s.check("harmonicity fails annulus q=0.1 trace", harmonicity_residual(traces["annulus q=0.1"]), ">", 1e-3)

    for t, lvl in ((0.2, -1.0), (0.35, -0.5)):
        s.check(f"kernel level identity disc t={t} s={lvl}", key_lemma_residual(disc, 0.3, t, lvl), "<", 1e-6)
        s.check(f"pde disc t={t} s={lvl}", pde_residual(disc, 0.3, t, lvl, 1e-3), "<", 1e-4)
    s.check("capacity scaling disc", capacity_scaling_check(disc, 0.4, -0.5), "<", 1e-5)

    s.check("extension norm disc", abs(minimal_extension_closed(disc, 0.5).norm - SQRT_PI), "<", 1e-8)
    grid = build_quadrature(disc, 256)
    qp = minimal_extension_numeric(numeric_basis(disc, 16, 0, grid), grid, 0, 1.0)
    s.check("extension qp disc", abs(qp.norm - SQRT_PI), "<", 1e-3)
    rep = extension_bound_check(ann, 0.5)
    s.flag("extension bound annulus", rep["pass"] and rep["gap"] > 0)

    pts = [p for p in _disc_samples(rng, math.exp(-0.7), 0.0, 200)
           if contains(sublevel_domain(disc, 0.3, -0.7), p)][:20]
    smap = riemann_map_from_kernel(disc, 0.3, -0.7, pts)
    mob = local_uniformizer_disc(1.0, 0.3)
    s.check("map vs Mobius", float(np.max(np.abs(smap.values - mob(np.array(pts))))), "<", 1e-5)
    val = map_validation(smap, disc, 0.3, -0.7)
    s.check("map |log|f0| - G|", val["green_residual"], "<", 1e-5)
    s.check("map vs global kernel form", val["corollary_residual"], "<", 1e-6)
    s.flag("map derivative positive", val["derivative_ok"])

    gaps = [abs(suita_ratio(puncture(disc, [0.3], eps), 0.6, resolution=256).ratio - 1)
            for eps in (1e-2, 1e-3)]
    s.flag("puncture trend decreasing", gaps[1] < gaps[0])
    s.check("puncture eps=1e-3", gaps[1], "<", 1e-2)

    return {"seed": seed, "checks": s.checks, "n_checks": len(s.checks),
            "n_failed": sum(not c["pass"] for c in s.checks),
            "pass": all(c["pass"] for c in s.checks)}


def report_text(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
