"""Green functions, logarithmic capacity and Green uniformizers.

Discs use the Mobius closed form.  The annulus ``q < |z| < 1`` uses the
reflection (image) product

    P(x) = (1 - x) * prod_{k>=1} (1 - q^{2k} x)(1 - q^{2k} / x),

which satisfies ``P(1/x) = -P(x)/x`` and ``P(q^2 x) = -P(x)/x``.  With
``beta = log|w| / log q`` the Green function with pole ``w`` is

    G(z, w) = log|P(z/w)| - log|P(z conj(w))| + log|w| - beta * log|z|,

which vanishes on both circles and has a single logarithmic pole at ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, NumericalError
from .geometry import (Annulus, Disc, DomainSpec, Punctured, Sublevel, UnitDisc,
                       as_disc, as_point, boundary_distance, contains, flatten_sublevel,
                       split_punctures)

SERIES_TOL = 1e-16
MAX_IMAGE_PAIRS = 200
POLE_EPS = 1e-13


# --------------------------------------------------------------------------- #
# annulus image products

def image_pairs(q: float, tol: float = SERIES_TOL) -> int:
    """Number of image pairs needed so the last term is below ``tol / 10``.

    Arguments of the factors satisfy ``q^2 < |x| < q^-2``, so the k-th pair is
    bounded by ``q^(2k-2)``.
    """
    k = 1 + int(math.ceil(math.log(tol / 10.0) / (2.0 * math.log(q)))) + 1
    if k > MAX_IMAGE_PAIRS:
        raise NumericalError("series-diverged",
                             f"image series for q={q} needs {k} > {MAX_IMAGE_PAIRS} pairs")
    return max(k, 1)


def _powers(q: float, n: int) -> np.ndarray:
    return q ** (2.0 * np.arange(1, n + 1))


def log_ptilde(x, q: float, n: int):
    """``log P(x) - log(1 - x)`` as a sum of principal logs."""
    x = np.asarray(x, dtype=complex)[..., None]
    qk = _powers(q, n)
    return np.sum(np.log(1.0 - qk * x) + np.log(1.0 - qk / x), axis=-1)


def dlog_ptilde(x, q: float, n: int):
    x = np.asarray(x, dtype=complex)[..., None]
    qk = _powers(q, n)
    return np.sum(-qk / (1.0 - qk * x) + qk / (x * (x - qk)), axis=-1)


def log_p(x, q: float, n: int):
    x = np.asarray(x, dtype=complex)
    return np.log(1.0 - x) + log_ptilde(x, q, n)


def dlog_p(x, q: float, n: int):
    x = np.asarray(x, dtype=complex)
    return -1.0 / (1.0 - x) + dlog_ptilde(x, q, n)


def _annulus_green(q: float, z: np.ndarray, w: complex) -> np.ndarray:
    n = image_pairs(q)
    beta = math.log(abs(w)) / math.log(q)
    g = (np.log(np.abs(1.0 - z / w)) + log_ptilde(z / w, q, n).real
         - log_p(z * np.conj(w), q, n).real)
    return g + math.log(abs(w)) - beta * np.log(np.abs(z))


def _annulus_green_dz(q: float, z: np.ndarray, w: complex) -> np.ndarray:
    """``2 dG/dz``, the derivative of the holomorphic completion of G."""
    n = image_pairs(q)
    beta = math.log(abs(w)) / math.log(q)
    return (dlog_p(z / w, q, n) / w - np.conj(w) * dlog_p(z * np.conj(w), q, n) - beta / z)


def annulus_log_capacity(q: float, w: complex) -> float:
    """Closed-form ``log c(w)`` on the annulus (the regular part of G at its pole)."""
    n = image_pairs(q)
    lw = math.log(abs(w))
    reg = log_ptilde(1.0 + 0j, q, n).real - log_p(abs(w) ** 2 + 0j, q, n).real
    return float(reg - lw * lw / math.log(q))


# --------------------------------------------------------------------------- #
# Green function dispatch

def _disc_green(disc: Disc, z: np.ndarray, z0: complex) -> np.ndarray:
    R = disc.radius
    u = z - disc.center
    u0 = z0 - disc.center
    return np.log(np.abs(R * (u - u0))) - np.log(np.abs(R * R - np.conj(u0) * u))


def green_array(domain: DomainSpec, z, z0: complex) -> np.ndarray:
    """Vectorised ``G(z, z0)``; no membership checks."""
    z = np.asarray(z, dtype=complex)
    if isinstance(domain, Punctured):
        return green_array(domain.base, z, z0)
    if isinstance(domain, Sublevel):
        if z0 == domain.pole:
            return green_array(domain.base, z, z0) - domain.level
        disc = as_disc(domain)
        if disc is None:
            raise DomainError("unsupported-pole",
                              "Green function of an annulus sublevel is only known at its own pole")
        return _disc_green(disc, z, z0)
    disc = as_disc(domain)
    if disc is not None:
        return _disc_green(disc, z, z0)
    if isinstance(domain, Annulus):
        return _annulus_green(domain.q, z, z0)
    raise DomainError("unsupported-domain", repr(domain))


def green_value(domain: DomainSpec, z, z0) -> float:
    z, z0 = as_point(z), as_point(z0)
    if abs(z - z0) < POLE_EPS:
        raise NumericalError("pole-collision", f"|z - z0| = {abs(z - z0):.3g}")
    return float(green_array(domain, np.array([z]), z0)[0])


def green_dz(domain: DomainSpec, z, z0: complex) -> np.ndarray:
    """``2 dG/dz`` (so that ``dG = Re(green_dz * dz)``)."""
    z = np.asarray(z, dtype=complex)
    core, _, _ = split_punctures(domain)
    disc = as_disc(core)
    if disc is not None:
        f = uniformizer(disc, z0)
        return f.log_derivative(z)
    if isinstance(core, Annulus):
        return _annulus_green_dz(core.q, z, z0)
    if isinstance(core, Sublevel):
        flat = flatten_sublevel(core)
        if z0 != flat.pole:
            raise DomainError("unsupported-pole", "annulus sublevel Green function needs its own pole")
        return _annulus_green_dz(flat.base.q, z, z0)
    raise DomainError("unsupported-domain", repr(domain))


def critical_level(annulus: Annulus, z0: complex) -> float:
    """Value of G(., z0) at its saddle point.

    By symmetry the saddle lies on the ray through the hole opposite ``z0``;
    sublevels below this value are simply connected, above it doubly connected.
    """
    u = z0 / abs(z0)
    res = minimize_scalar(lambda t: float(_annulus_green(annulus.q, np.array([-t * u]), z0)[0]),
                          bounds=(annulus.q, 1.0), method="bounded",
                          options={"xatol": 1e-13})
    return float(res.fun)


def saddle_point(annulus: Annulus, z0: complex) -> complex:
    u = z0 / abs(z0)
    res = minimize_scalar(lambda t: float(_annulus_green(annulus.q, np.array([-t * u]), z0)[0]),
                          bounds=(annulus.q, 1.0), method="bounded",
                          options={"xatol": 1e-13})
    return complex(-res.x * u)


# --------------------------------------------------------------------------- #
# capacity

@dataclass(frozen=True)
class CapacityValue:
    value: float
    extrapolation_error: float = 0.0
    probe_radii: tuple = ()
    method: str = "closed_form"
    meta: dict = field(default_factory=dict, compare=False)


def _probe_capacity(domain: DomainSpec, z0: complex, h: float | None = None,
                    tol: float = 1e-8) -> CapacityValue:
    """Angular-average probes of G - log|z - z0| plus Richardson extrapolation.

    The regular part is harmonic, so an 8-point circle average is exact up to
    Fourier modes of order 8: the error behaves like ``rho^8 + O(rho^16)``.
    """
    if h is None:
        h = 0.25 * boundary_distance(domain, z0)
    radii = tuple(h * 2.0 ** -k for k in range(3))
    theta = 2 * np.pi * np.arange(8) / 8
    est = []
    for rho in radii:
        g = green_array(domain, z0 + rho * np.exp(1j * theta), z0)
        est.append(float(np.mean(g)) - math.log(rho))
    r1 = [(2.0**8 * est[k + 1] - est[k]) / (2.0**8 - 1.0) for k in range(2)]
    r2 = (2.0**16 * r1[1] - r1[0]) / (2.0**16 - 1.0)
    err = abs(r2 - r1[1])
    if err > tol * max(1.0, abs(r2)):
        raise NumericalError("extrapolation-unstable",
                             f"Richardson estimates differ by {err:.3g}")
    value = math.exp(r2)
    return CapacityValue(value, value * err, radii, "probe")


def log_capacity(domain: DomainSpec, z0, method: str = "auto") -> CapacityValue:
    """Logarithmic capacity ``c(z0) = exp lim (G(z, z0) - log|z - z0|)``.

    ``method="auto"`` uses closed forms on discs, angular probes on the
    annulus, and the shift rule ``c_s = c * exp(-s)`` on sublevels at their
    pole; ``"probe"`` forces numerical extraction from the Green function and
    ``"closed"`` forces the image-product closed form on annuli.
    """
    z0 = as_point(z0)
    if not contains(domain, z0):
        raise DomainError("not-in-domain", f"{z0} is not in the domain")
    if method == "probe":
        return _probe_capacity(domain, z0)
    if isinstance(domain, Punctured):
        return log_capacity(domain.base, z0, method)
    if isinstance(domain, Sublevel) and z0 == domain.pole:
        base = log_capacity(domain.base, z0, method)
        scale = math.exp(-domain.level)
        return CapacityValue(base.value * scale, base.extrapolation_error * scale,
                             base.probe_radii, base.method + "+shift")
    disc = as_disc(domain)
    if disc is not None:
        u0 = z0 - disc.center
        R = disc.radius
        return CapacityValue(R / (R * R - abs(u0) ** 2))
    if isinstance(domain, Annulus):
        if method == "closed":
            return CapacityValue(math.exp(annulus_log_capacity(domain.q, z0)), 0.0, (), "image_product")
        return _probe_capacity(domain, z0)
    raise DomainError("capacity-unavailable",
                      "capacity of an annulus sublevel is only available at its pole")


# --------------------------------------------------------------------------- #
# uniformizers: G(z, z0) = log|f0(z)|, f0(z0) = 0, f0'(z0) > 0

class MobiusUniformizer:
    """``m(z) = R (u - u0) / (R^2 - conj(u0) u)`` with ``u = z - center``."""

    def __init__(self, disc: Disc, z0: complex):
        self.disc = disc
        self.z0 = complex(z0)
        self.R = disc.radius
        self.u0 = self.z0 - disc.center

    def __call__(self, z):
        u = np.asarray(z, dtype=complex) - self.disc.center
        return self.R * (u - self.u0) / (self.R**2 - np.conj(self.u0) * u)

    def derivative(self, z):
        u = np.asarray(z, dtype=complex) - self.disc.center
        return self.R * (self.R**2 - abs(self.u0) ** 2) / (self.R**2 - np.conj(self.u0) * u) ** 2

    def log_derivative(self, z):
        return self.derivative(z) / self(z)

    def regular_factor(self, z):
        """``f1`` with ``f0(z) = (z - z0) exp(f1(z))``; ``Re f1 = G - log|z - z0|``."""
        u = np.asarray(z, dtype=complex) - self.disc.center
        return np.log(self.R / (self.R**2 - np.conj(self.u0) * u))

    def inverse(self, m):
        m = np.asarray(m, dtype=complex)
        R = self.R
        return self.disc.center + (m * R * R + R * self.u0) / (R + m * np.conj(self.u0))


class AnnulusUniformizer:
    """Holomorphic completion of the annulus Green function near its pole.

    ``f0(z) = (z - w) exp(g(z) - i Im g(w))`` with
    ``g = log Ptilde(z/w) - log P(z conj w) - beta Log z``; the branch of
    ``Log z`` is cut along the ray through the hole opposite ``w``, which the
    saddle of G lies on, so f0 is single valued on every simply connected
    sublevel below the critical level.
    """

    def __init__(self, annulus: Annulus, w: complex):
        self.q = annulus.q
        self.w = complex(w)
        self.n = image_pairs(self.q)
        self.beta = math.log(abs(w)) / math.log(self.q)
        self.u = self.w / abs(self.w)
        self._phase = 1j * self._g(np.array([self.w]))[0].imag

    def _log(self, z):
        return np.log(z * np.conj(self.u)) + 1j * np.angle(self.u)

    def _g(self, z):
        return (log_ptilde(z / self.w, self.q, self.n) - log_p(z * np.conj(self.w), self.q, self.n)
                - self.beta * self._log(z))

    def _dg(self, z):
        return (dlog_ptilde(z / self.w, self.q, self.n) / self.w
                - np.conj(self.w) * dlog_p(z * np.conj(self.w), self.q, self.n) - self.beta / z)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (z - self.w) * np.exp(self._g(z) - self._phase)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return np.exp(self._g(z) - self._phase) * (1.0 + (z - self.w) * self._dg(z))

    def log_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return 1.0 / (z - self.w) + self._dg(z)

    def regular_factor(self, z):
        return self._g(np.asarray(z, dtype=complex)) - self._phase

    def inverse(self, m, max_ratio: float = 1.05, iters: int = 60):
        """Solve ``f0(z) = m`` by Newton continuation along rays.

        ``m`` has shape (n_rays, n_radii) with moduli increasing along axis 1
        and a common argument per row.
        """
        m = np.asarray(m, dtype=complex)
        out = np.empty_like(m)
        c = abs(self.derivative(np.array([self.w]))[0])
        z = self.w + m[:, 0] / c
        prev = np.abs(m[:, 0])
        for k in range(m.shape[1]):
            target_mod = np.abs(m[:, k])
            phase = m[:, k] / target_mod
            n_sub = max(1, int(math.ceil(math.log(np.max(target_mod / prev)) / math.log(max_ratio))))
            for j in range(1, n_sub + 1):
                t = prev * (target_mod / prev) ** (j / n_sub) * phase
                z = self._newton(z, t, iters)
            out[:, k] = z
            prev = target_mod
        return out

    def _newton(self, z, target, iters):
        for _ in range(iters):
            step = np.log(self(z) / target) / self.log_derivative(z)
            z = z - step
            if np.max(np.abs(step)) < 1e-15:
                return z
        if np.max(np.abs(step)) > 1e-11:
            raise NumericalError("uniformizer-inverse", "Newton continuation did not converge")
        return z


def uniformizer(domain: DomainSpec, z0):
    """The map ``f0`` with ``G(., z0) = log|f0|``, ``f0(z0) = 0``, ``f0'(z0) > 0``."""
    z0 = as_point(z0)
    core, _, _ = split_punctures(domain)
    disc = as_disc(core)
    if disc is not None:
        return MobiusUniformizer(disc, z0)
    if isinstance(core, Annulus):
        return AnnulusUniformizer(core, z0)
    if isinstance(core, Sublevel):
        flat = flatten_sublevel(core)
        if z0 != flat.pole:
            raise DomainError("unsupported-pole", "annulus sublevel uniformizer needs its own pole")
        return AnnulusUniformizer(flat.base, z0)
    raise DomainError("unsupported-domain", repr(domain))


# --------------------------------------------------------------------------- #
# validation harness

def validate_green(domain: DomainSpec, z0, tol: float = 1e-8, n_samples: int = 64,
                   h: float = 1e-4) -> dict:
    """Boundary, harmonicity and symmetry residuals of G on a disc or annulus.

    The harmonicity residual is the discrete mean-value defect
    ``|mean of the 4 stencil neighbours - G(z)|`` (a 5-point Laplacian scaled
    by ``h^2 / 4``) at sample points away from the pole.
    """
    z0 = as_point(z0)
    disc = as_disc(domain)
    if disc is None and not isinstance(domain, Annulus):
        raise DomainError("unsupported-domain", "validate_green needs a disc or an annulus")
    theta = 2 * np.pi * (np.arange(n_samples) + 0.5) / n_samples
    e = np.exp(1j * theta)
    if disc is not None:
        boundary = disc.center + disc.radius * e
    else:
        boundary = np.concatenate([domain.q * e, e])
    bres = float(np.max(np.abs(green_array(domain, boundary, z0))))

    rng = np.random.default_rng(12345)
    if disc is not None:
        pts = disc.center + disc.radius * np.sqrt(rng.uniform(0.01, 0.81, 4 * n_samples)) \
            * np.exp(2j * np.pi * rng.uniform(size=4 * n_samples))
    else:
        r = rng.uniform(domain.q + 0.1 * (1 - domain.q), 1 - 0.1 * (1 - domain.q), 4 * n_samples)
        pts = r * np.exp(2j * np.pi * rng.uniform(size=4 * n_samples))
    pts = pts[np.abs(pts - z0) > 0.1][: n_samples]
    stencil = np.array([h, -h, 1j * h, -1j * h])
    nb = green_array(domain, (pts[:, None] + stencil).ravel(), z0).reshape(-1, 4)
    hres = float(np.max(np.abs(nb.mean(axis=1) - green_array(domain, pts, z0))))

    a, b = pts[: n_samples // 2], pts[n_samples // 2: 2 * (n_samples // 2)]
    keep = np.abs(a - b) > 1e-3
    sym = [abs(green_array(domain, np.array([x]), y)[0] - green_array(domain, np.array([y]), x)[0])
           for x, y in zip(a[keep], b[keep])]
    sres = float(max(sym)) if sym else 0.0
    return {
        "boundary_residual": bres,
        "harmonicity_residual": hres,
        "symmetry_residual": sres,
        "tol": tol,
        "pass": bool(max(bres, hres, sres) < tol),
    }
