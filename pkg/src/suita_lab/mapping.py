"""Green uniformizers of simply connected sublevels, rebuilt from the kernel.

On a simply connected sublevel ``X_s`` (``r = e^s``) the map ``f0`` with
``|f0| = e^G`` sends ``X_s`` onto the disc of radius ``r``, and its
differential is ``df0 = r sqrt(pi) K_s(t, z0) / sqrt(K_s(z0)) dt``.
Integrating that along straight segments from the pole recovers ``f0``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .bergman import default_method, kernel_diag, kernel_function
from .errors import DomainError, NumericalError
from .geometry import (Disc, DomainSpec, as_point, boundary_distance, contains, contains_array,
                       is_simply_connected, split_punctures)
from .green import MobiusUniformizer, green_array
from .variation import sublevel_domain

CSV_FIELDS = ("t_re", "t_im", "f0_re", "f0_im")
MAX_LEVELS = 18


def local_uniformizer_disc(R: float, z0) -> MobiusUniformizer:
    """``m(z) = R (z - z0) / (R^2 - conj(z0) z)``: ``m(z0) = 0``, ``m'(z0) > 0``, ``G = log|m|``.

    ``regular_factor`` gives the holomorphic ``f1`` with ``m = (z - z0) f1``.
    """
    z0 = as_point(z0)
    if not R > 0 or not abs(z0) < R:
        raise DomainError("not-in-disc", f"{z0} is not in the disc of radius {R}")
    return MobiusUniformizer(Disc(0j, float(R)), z0)


@dataclass(frozen=True)
class SampledMap:
    """Samples of ``f0`` and of its derivative ``df0`` at the requested points."""

    pole: complex
    radius: float
    level: float
    points: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    derivative_at_pole: complex
    integrand: Callable | None = field(default=None, repr=False, compare=False)
    meta: dict = field(default_factory=dict, compare=False)

    def rotated(self, angle: float) -> "SampledMap":
        """The same map composed with a rotation; used as a negative fixture."""
        u = complex(math.cos(angle), math.sin(angle))
        scaled = None if self.integrand is None else (lambda t, f=self.integrand: u * f(t))
        return replace(self, values=u * self.values, derivatives=u * self.derivatives,
                       derivative_at_pole=u * self.derivative_at_pole, integrand=scaled)

    def to_csv(self, stream=None) -> str:
        out = stream if stream is not None else io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for t, f in zip(self.points, self.values):
            writer.writerow([repr(float(t.real)), repr(float(t.imag)),
                             repr(float(f.real)), repr(float(f.imag))])
        return out.getvalue() if stream is None else ""


def integrate_segment(fun: Callable, a: complex, b: complex, tol: float = 1e-12) -> complex:
    """``int_a^b fun(t) dt`` along the segment: trapezoid sums with Richardson extrapolation."""
    if a == b:
        return 0j
    d = b - a
    ends = fun(np.array([a, b]))
    trap = [0.5 * d * (ends[0] + ends[1])]
    table = [trap[0]]
    n = 1
    for level in range(1, MAX_LEVELS + 1):
        mids = a + d * (np.arange(n) + 0.5) / n
        new = 0.5 * trap[-1] + 0.5 * d / n * np.sum(fun(mids))
        trap.append(new)
        n *= 2
        row = [new]
        for k in range(1, level + 1):
            row.append(row[k - 1] + (row[k - 1] - table[k - 1]) / (4**k - 1))
        if level >= 3 and abs(row[-1] - table[-1]) <= tol * max(1.0, abs(row[-1])):
            return complex(row[-1])
        table = row
    raise NumericalError("integration-unconverged", f"segment {a} -> {b} did not converge")


def integrate_polyline(fun: Callable, vertices, tol: float = 1e-12) -> complex:
    vs = [as_point(v) for v in vertices]
    return complex(sum(integrate_segment(fun, a, b, tol) for a, b in zip(vs, vs[1:])))


def _check_path(domain: DomainSpec, vertices, n: int = 256) -> None:
    vs = np.array([as_point(v) for v in vertices])
    s = np.linspace(0.0, 1.0, n)
    pts = np.concatenate([a + (b - a) * s for a, b in zip(vs[:-1], vs[1:])])
    if not np.all(contains_array(domain, pts)):
        raise DomainError("path-exits-domain", "an integration path leaves the sublevel")


def _integrand_route(sub: DomainSpec, kernel_method: str):
    # finite punctures do not change the kernel: integrate on the core's analytic route
    core, _, _ = split_punctures(sub)
    method = default_method(core) if kernel_method == "auto" else kernel_method
    if method == "gram_numeric":
        raise DomainError("route-unavailable", "path integration needs an analytic kernel route")
    return core, method


def riemann_map_from_kernel(base: DomainSpec, z0, s: float, sample_points,
                            tol: float = 1e-12, kernel_method: str = "auto") -> SampledMap:
    """Integrate ``df0`` from ``z0`` to each sample point.

    A sample point may be a complex number (straight segment from ``z0``) or
    a sequence of vertices, taken as a polyline starting at ``z0``.
    """
    z0 = as_point(z0)
    sub = sublevel_domain(base, z0, s)
    if not is_simply_connected(sub):
        raise DomainError("not-simply-connected", f"sublevel {s} is not simply connected")
    core, method = _integrand_route(sub, kernel_method)
    r = math.exp(s)
    k0 = kernel_diag(core, z0, method).real
    kfun = kernel_function(core, z0, method)
    factor = r * math.sqrt(math.pi) / math.sqrt(k0)

    def df0(t):
        return factor * kfun(np.atleast_1d(np.asarray(t, dtype=complex)))

    paths, ends = [], []
    for p in sample_points:
        if np.ndim(p) == 0:
            verts = [z0, as_point(p)]
        else:
            verts = [z0] + [as_point(v) for v in p]
        _check_path(sub, verts)
        paths.append(verts)
        ends.append(verts[-1])
    values = np.array([integrate_polyline(df0, v, tol) for v in paths], dtype=complex)
    ends = np.array(ends, dtype=complex)
    derivs = df0(ends) if len(ends) else np.zeros(0, dtype=complex)
    d0 = complex(df0(np.array([z0]))[0])
    rho = 0.5 * boundary_distance(sub, z0)
    loop = integrate_polyline(df0, [z0, z0 + rho, z0 + 1j * rho, z0 - rho, z0 - 1j * rho, z0 + rho, z0], tol)
    return SampledMap(z0, r, float(s), ends, values, derivs, d0, df0,
                      {"kernel_method": method, "loop_residual": abs(loop)})


def map_validation(smap: SampledMap, base: DomainSpec, z0, s: float, tol: float = 1e-6) -> dict:
    """Checks of a reconstructed ``f0``.

    ``green_residual``: ``max |log|f0(t)| - G(t, z0)|``; ``pole_value``:
    ``|f0|`` after a closed loop back to ``z0``; ``derivative_ok``:
    ``f0'(z0)`` real and positive; ``corollary_residual``: relative gap
    between ``df0`` and the global form ``sqrt(pi) K(t, z0) / sqrt(K(z0))``
    of the base domain, which vanishes in the equality case.
    """
    z0 = as_point(z0)
    pts, vals = smap.points, smap.values
    away = np.abs(pts - z0) > 1e-12
    if np.any(away):
        g = green_array(base, pts[away], z0)
        green_res = float(np.max(np.abs(np.log(np.abs(vals[away])) - g)))
    else:
        green_res = 0.0
    pole_value = 0.0
    if smap.integrand is not None:
        rho = 0.25 * boundary_distance(sublevel_domain(base, z0, s), z0)
        pole_value = abs(integrate_polyline(smap.integrand, [z0, z0 + rho, z0 + 1j * rho, z0]))
    d = smap.derivative_at_pole
    derivative_ok = bool(d.real > 0 and abs(d.imag) <= tol * abs(d))
    core, _, _ = split_punctures(base)
    method = default_method(core)
    k0 = kernel_diag(core, z0, method).real
    glob = math.sqrt(math.pi) * kernel_function(core, z0, method)(pts) / math.sqrt(k0)
    corollary = float(np.max(np.abs(smap.derivatives - glob) / np.abs(glob))) if len(pts) else 0.0
    max_mod = float(np.max(np.abs(vals))) if len(vals) else 0.0
    inside = bool(max_mod < smap.radius)
    return {
        "green_residual": green_res,
        "pole_value": pole_value,
        "derivative_at_pole": [d.real, d.imag],
        "derivative_ok": derivative_ok,
        "corollary_residual": corollary,
        "max_abs_f0": max_mod,
        "image_inside_radius": inside,
        "tol": tol,
        "pass": bool(green_res < tol and pole_value < tol and derivative_ok and inside),
    }
