"""Suita ratio ``pi K / c^2``, the curvature identity and related bounds."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bergman import kernel_diag
from .errors import DomainError
from .geometry import (Annulus, Disc, DomainSpec, QuadratureGrid, as_disc, as_point,
                       boundary_distance, build_quadrature, contains, split_punctures)
from .green import MobiusUniformizer, log_capacity
from .parallel import worker_count

CSV_FIELDS = ("z0_re", "z0_im", "K", "c", "ratio", "curvature", "method_K", "method_c")


@dataclass(frozen=True)
class SuitaRecord:
    """One evaluation of ``pi K(z0) / c(z0)^2``.

    ``curvature`` is the Gaussian curvature ``-4 pi K / c^2`` of the metric
    ``c^2 |dz|^2``; it equals -4 exactly where the ratio is 1.
    """

    z0: complex
    K: float
    c: float
    ratio: float
    curvature: float
    method_K: str
    method_c: str
    meta: dict = field(default_factory=dict, compare=False)

    def csv_row(self) -> dict:
        return {"z0_re": repr(self.z0.real), "z0_im": repr(self.z0.imag), "K": repr(self.K),
                "c": repr(self.c), "ratio": repr(self.ratio), "curvature": repr(self.curvature),
                "method_K": self.method_K, "method_c": self.method_c}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["z0"] = [self.z0.real, self.z0.imag]
        return d


def suita_ratio(domain: DomainSpec, z0, kernel_method: str = "auto",
                capacity_method: str = "auto", resolution: int | None = None,
                degree: int | None = None) -> SuitaRecord:
    z0 = as_point(z0)
    if not contains(domain, z0):
        raise DomainError("not-in-domain", f"{z0} is not in the domain")
    kwargs = {"degree": degree}
    if resolution is not None:
        kwargs["resolution"] = resolution
    k = kernel_diag(domain, z0, kernel_method, **kwargs)
    c = log_capacity(domain, z0, capacity_method)
    ratio = math.pi * k.real / c.value ** 2
    meta = {"K_error": k.error_estimate, "c_error": c.extrapolation_error,
            "K_condition": k.condition}
    return SuitaRecord(z0, k.real, c.value, ratio, -4.0 * ratio, k.method, c.method, meta)


def _log_c(domain: DomainSpec, pts) -> np.ndarray:
    # series routes where they exist, so finite differences see no probe noise
    core, _, _ = split_punctures(domain)
    method = "closed" if isinstance(core, Annulus) else "auto"
    return np.array([math.log(log_capacity(domain, p, method).value) for p in pts])


def _laplacian(domain: DomainSpec, z: complex, h: float) -> float:
    pts = [z + h, z - h, z + 1j * h, z - 1j * h, z]
    v = _log_c(domain, pts)
    return float((v[:4].sum() - 4 * v[4]) / (h * h))


def curvature_residual(domain: DomainSpec, z, h: float | None = None, detail: bool = False):
    """``|Delta log c / 4 - pi K| / (pi K)`` with a Richardson-improved 5-point Laplacian.

    The Laplacian is taken at half-widths ``h`` and ``h/2`` and combined to
    cancel the ``h^2`` term; their gap is returned as ``error_estimate``
    when ``detail`` is true.
    """
    z = as_point(z)
    if h is None:
        core, _, _ = split_punctures(domain)
        h = 1e-3 if as_disc(core) is not None else 1e-2
    if not h > 0:
        raise DomainError("invalid-step", "h must be positive")
    if not contains(domain, z) or boundary_distance(domain, z) <= h:
        raise DomainError("stencil-outside", f"stencil of half-width {h} leaves the domain")
    coarse, fine = _laplacian(domain, z, h), _laplacian(domain, z, h / 2)
    lap = (4 * fine - coarse) / 3
    pik = math.pi * kernel_diag(domain, z).real
    res = abs(lap / 4 - pik) / pik
    if detail:
        return {"residual": res, "laplacian_log_c": lap, "pi_K": pik,
                "error_estimate": abs(fine - coarse) / 4 / pik, "h": h}
    return res


def analytic_capacity_disc(R: float, z0) -> float:
    """``f'(z0)`` for the Ahlfors function of the disc ``|z| < R``.

    The extremal function is the normalised Mobius map
    ``R (z - z0) / (R^2 - conj(z0) z)``, whose derivative at ``z0`` is
    ``R / (R^2 - |z0|^2)``.
    """
    z0 = as_point(z0)
    if not R > 0 or not abs(z0) < R:
        raise DomainError("not-in-disc", f"{z0} is not in the disc of radius {R}")
    d = MobiusUniformizer(Disc(0j, float(R)), z0).derivative(z0)
    return float(abs(d))


def volume_bound_check(domain: DomainSpec, z0, grid: QuadratureGrid | None = None,
                       tol: float = 1e-3) -> dict:
    """``K(z0) * Vol`` against the lower bound 1 (attained on discs centred at ``z0``)."""
    z0 = as_point(z0)
    if grid is None:
        grid = build_quadrature(domain, 256)
    vol = float(np.sum(grid.weights))
    k = kernel_diag(domain, z0)
    product = k.real * vol
    core, pts, _ = split_punctures(domain)
    disc = as_disc(core)
    centred = disc is not None and abs(disc.center - z0) <= 1e-12 * disc.radius
    return {"K": k.real, "volume": vol, "K_times_volume": product,
            "pass": bool(product >= 1 - tol), "equality_expected": bool(centred),
            "equality": bool(abs(product - 1) < tol), "tol": tol}


def suita_scan(domain: DomainSpec, points, workers: int | None = None, **kwargs) -> list[SuitaRecord]:
    """``suita_ratio`` over ``points``, in input order."""
    pts = [as_point(p) for p in points]
    if not pts:
        return []
    n = worker_count(workers)
    if n <= 1 or len(pts) == 1:
        return [suita_ratio(domain, p, **kwargs) for p in pts]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda p: suita_ratio(domain, p, **kwargs), pts))


def records_to_csv(records, stream=None) -> str:
    out = stream if stream is not None else io.StringIO()
    writer = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec.csv_row())
    return out.getvalue() if stream is None else ""
