"""Planar domains, membership and area quadrature.

Points are plain Python/numpy complex numbers in the global plane coordinate
``z``; every local coordinate used in the theory is identified with ``z``, so
a holomorphic 1-form ``f dz`` is stored as the function ``f`` and kernels are
the coefficients of ``dz (x) d(z-bar)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, NumericalError

DEFAULT_RESOLUTION = 256
MIN_RESOLUTION = 16


def as_point(z) -> complex:
    """Coerce ``z`` (complex, real, or a ``[re, im]`` pair) to a finite complex."""
    if isinstance(z, (list, tuple)):
        if len(z) != 2:
            raise DomainError("invalid-point", f"expected [re, im], got {z!r}")
        z = complex(float(z[0]), float(z[1]))
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError("invalid-point", f"non-finite point {z!r}")
    return z


@dataclass(frozen=True)
class UnitDisc:
    pass


@dataclass(frozen=True)
class Disc:
    center: complex = 0j
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.radius > 0:
            raise DomainError("invalid-domain", f"disc radius must be > 0, got {self.radius}")


@dataclass(frozen=True)
class Annulus:
    """The ring ``q < |z| < 1``."""

    q: float

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise DomainError("invalid-domain", f"annulus needs 0 < q < 1, got {self.q}")


@dataclass(frozen=True)
class Sublevel:
    """The set ``{z in base : G_base(z, pole) < level}``."""

    base: "DomainSpec"
    pole: complex
    level: float

    def __post_init__(self):
        object.__setattr__(self, "pole", as_point(self.pole))
        if not self.level < 0:
            raise DomainError("invalid-level", f"sublevel needs level < 0, got {self.level}")
        if not contains(self.base, self.pole):
            raise DomainError("invalid-domain", "sublevel pole is not inside the base domain")


@dataclass(frozen=True)
class Punctured:
    """``base`` less a finite point set; each point carries an excised disk of radius ``excision_radius``."""

    base: "DomainSpec"
    punctures: tuple = ()
    excision_radius: float = 0.0

    def __post_init__(self):
        pts = tuple(as_point(p) for p in self.punctures)
        object.__setattr__(self, "punctures", pts)
        _check_punctures(self.base, pts, float(self.excision_radius))


DomainSpec = Union[UnitDisc, Disc, Annulus, Sublevel, Punctured]


# --------------------------------------------------------------------------- #
# structural helpers

def as_disc(domain: DomainSpec) -> Disc | None:
    """Return the Euclidean disc equal to ``domain`` when it is one.

    Discs, and Green sublevels of discs (Mobius images of round discs), are
    recognised; anything punctured or annulus-based returns ``None``.
    """
    if isinstance(domain, UnitDisc):
        return Disc(0j, 1.0)
    if isinstance(domain, Disc):
        return domain
    if isinstance(domain, Sublevel):
        base = as_disc(domain.base)
        if base is None:
            return None
        return mobius_sublevel_disc(base, domain.pole, domain.level)
    return None


def mobius_sublevel_disc(disc: Disc, pole: complex, level: float) -> Disc:
    """Centre and radius of ``{|m(z)| < e^level}`` for the disc's Mobius map ``m`` at ``pole``."""
    R = disc.radius
    a = (pole - disc.center) / R
    r = math.exp(level)
    denom = 1.0 - r * r * abs(a) ** 2
    center = a * (1.0 - r * r) / denom
    radius = r * (1.0 - abs(a) ** 2) / denom
    return Disc(disc.center + R * center, R * radius)


def split_punctures(domain: DomainSpec):
    """Split ``domain`` into (unpunctured core, punctures, excision radius).

    Punctures never change Green functions, so a sublevel of a punctured
    domain is the punctured sublevel of the core.
    """
    if isinstance(domain, Punctured):
        core, pts, eps = split_punctures(domain.base)
        eps = max(eps, domain.excision_radius) if pts else domain.excision_radius
        return core, pts + domain.punctures, eps
    if isinstance(domain, Sublevel):
        core, pts, eps = split_punctures(domain.base)
        if not pts:
            return domain, (), 0.0
        sub = Sublevel(core, domain.pole, domain.level)
        inside = tuple(p for p in pts if contains(sub, p))
        return sub, inside, eps
    return domain, (), 0.0


def flatten_sublevel(domain: Sublevel) -> Sublevel:
    """Collapse nested sublevels sharing a pole: ``{G - s1 < s2} = {G < s1 + s2}``."""
    base = domain.base
    if isinstance(base, Sublevel):
        inner = flatten_sublevel(base)
        if inner.pole == domain.pole:
            return Sublevel(inner.base, inner.pole, inner.level + domain.level)
        raise DomainError("unsupported-domain", "nested sublevels with different poles")
    return domain


def annulus_sublevel(domain: DomainSpec) -> Sublevel | None:
    """``domain`` as a flat ``Sublevel(Annulus, pole, level)`` if it is one (punctures ignored)."""
    core, _, _ = split_punctures(domain)
    if isinstance(core, Sublevel) and as_disc(core) is None:
        flat = flatten_sublevel(core)
        if isinstance(flat.base, Annulus):
            return flat
        raise DomainError("unsupported-domain", f"sublevel of {type(flat.base).__name__}")
    return None


def is_simply_connected(domain: DomainSpec) -> bool:
    """Topology of the unpunctured core (finite point sets are removable)."""
    core, _, _ = split_punctures(domain)
    if as_disc(core) is not None:
        return True
    if isinstance(core, Annulus):
        return False
    sub = annulus_sublevel(core)
    from .green import critical_level

    # ties at the critical level resolve to the doubly connected (superset) case
    return sub.level < critical_level(sub.base, sub.pole)


def hole_point(domain: DomainSpec) -> complex | None:
    """A point of the bounded complementary component, or None if simply connected."""
    if is_simply_connected(domain):
        return None
    return 0j


# --------------------------------------------------------------------------- #
# membership

def contains(domain: DomainSpec, z) -> bool:
    return bool(contains_array(domain, np.asarray([as_point(z)]))[0])


def contains_array(domain: DomainSpec, z: np.ndarray) -> np.ndarray:
    """Vectorised membership test."""
    z = np.asarray(z, dtype=complex)
    if isinstance(domain, UnitDisc):
        return np.abs(z) < 1.0
    if isinstance(domain, Disc):
        return np.abs(z - domain.center) < domain.radius
    if isinstance(domain, Annulus):
        r = np.abs(z)
        return (r > domain.q) & (r < 1.0)
    if isinstance(domain, Sublevel):
        from .green import green_array

        inside = contains_array(domain.base, z)
        out = np.zeros(z.shape, dtype=bool)
        ok = inside & (z != domain.pole)
        if np.any(ok):
            try:
                g = green_array(domain.base, z[ok], domain.pole)
            except NumericalError as exc:
                raise NumericalError("green-eval-failed", str(exc)) from exc
            out[ok] = g < domain.level
        out[inside & (z == domain.pole)] = True
        return out
    if isinstance(domain, Punctured):
        out = contains_array(domain.base, z)
        for p in domain.punctures:
            out &= np.abs(z - p) > domain.excision_radius
        return out
    raise DomainError("unsupported-domain", f"unknown domain {domain!r}")


def boundary_distance(domain: DomainSpec, z: complex) -> float:
    """Euclidean distance from ``z`` to the boundary (exact on discs/annuli, sampled otherwise)."""
    disc = as_disc(domain)
    if disc is not None:
        return disc.radius - abs(z - disc.center)
    if isinstance(domain, Annulus):
        return min(abs(z) - domain.q, 1.0 - abs(z))
    if isinstance(domain, Punctured):
        d = boundary_distance(domain.base, z)
        for p in domain.punctures:
            d = min(d, abs(z - p) - domain.excision_radius)
        return d
    # sublevel of an annulus: shrink a probe circle until every sample is inside
    theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    d = boundary_distance(domain.base, z)
    while d > 1e-12:
        if np.all(contains_array(domain, z + d * np.exp(1j * theta))):
            return d
        d *= 0.8
    return 0.0


def _check_punctures(base: DomainSpec, pts: tuple, eps: float) -> None:
    if eps < 0:
        raise DomainError("invalid-puncture", "excision radius must be >= 0")
    if not pts:
        return
    for i, p in enumerate(pts):
        if not contains(base, p):
            raise DomainError("invalid-puncture", f"puncture {p} is outside the domain")
        for q in pts[:i]:
            if p == q:
                raise DomainError("invalid-puncture", "punctures must be pairwise distinct")
    gaps = [boundary_distance(base, p) for p in pts]
    gaps += [abs(p - q) for i, p in enumerate(pts) for q in pts[:i]]
    if isinstance(base, Sublevel):
        gaps += [abs(p - base.pole) for p in pts]
    if not eps < 0.5 * min(gaps):
        raise DomainError("invalid-puncture", f"excision radius {eps} is too large")


def puncture(domain: DomainSpec, points: Sequence, eps: float) -> DomainSpec:
    """Remove a finite point set (with excision radius ``eps``) from ``domain``."""
    return Punctured(domain, tuple(as_point(p) for p in points), float(eps))


# --------------------------------------------------------------------------- #
# area and quadrature

def area(domain: DomainSpec) -> float:
    disc = as_disc(domain)
    if disc is not None:
        return math.pi * disc.radius**2
    if isinstance(domain, Annulus):
        return math.pi * (1.0 - domain.q**2)
    if isinstance(domain, Punctured):
        return area(domain.base) - len(domain.punctures) * math.pi * domain.excision_radius**2
    # no closed form: integrate 1 on a fine boundary-fitted grid
    return float(build_quadrature(domain, 512).weights.sum())


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    cell_scale: float
    seed: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.nodes)

    def integrate(self, values: np.ndarray) -> complex:
        return np.sum(self.weights * values)


def _gauss_interval(n: int, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    a = np.asarray(a)[..., None]
    b = np.asarray(b)[..., None]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _angles(n: int) -> np.ndarray:
    return 2 * np.pi * (np.arange(n) + 0.5) / n


def _polar_grid(center: complex, r_lo, r_hi, n_r: int, n_theta: int):
    theta = _angles(n_theta)
    r_lo = np.broadcast_to(np.asarray(r_lo, dtype=float), theta.shape)
    r_hi = np.broadcast_to(np.asarray(r_hi, dtype=float), theta.shape)
    r, wr = _gauss_interval(n_r, r_lo, r_hi)            # (n_theta, n_r)
    nodes = center + r * np.exp(1j * theta)[:, None]
    weights = wr * r * (2 * np.pi / n_theta)
    dr = np.max(np.diff(r, axis=1)) if n_r > 1 else float(np.max(r_hi - r_lo))
    scale = max(dr, float(np.max(r_hi)) * 2 * np.pi / n_theta)
    return nodes.ravel(), weights.ravel(), scale


def build_quadrature(domain: DomainSpec, resolution: int = DEFAULT_RESOLUTION, seed: int = 0) -> QuadratureGrid:
    """Area quadrature on ``domain``.

    Discs (including Mobius-disc sublevels) and annuli get tensor polar grids:
    Gauss-Legendre in the radius, midpoint (periodic trapezoid) in the angle.
    Sublevels of an annulus get boundary-fitted grids: the pull-back of a
    polar grid under the Green uniformizer when simply connected, otherwise
    per-ray radial intervals between the two level curves. A disc with one
    puncture gets a star grid centred at the puncture, running from the
    excision radius out to the circle along each ray; other punctured
    domains reject the nodes within the excision radius.
    """
    if resolution < MIN_RESOLUTION:
        raise DomainError("invalid-resolution", f"resolution must be >= {MIN_RESOLUTION}")
    n_r = max(8, resolution // 2)
    core, pts, eps = split_punctures(domain)
    disc = as_disc(core)
    if disc is not None and len(pts) == 1 and disc.radius - abs(pts[0] - disc.center) > 2 * eps:
        nodes, weights, scale = _star_grid(disc, pts[0], eps, n_r, resolution)
        pts = ()
    elif disc is not None:
        nodes, weights, scale = _polar_grid(disc.center, 0.0, disc.radius, n_r, resolution)
    elif isinstance(core, Annulus):
        nodes, weights, scale = _polar_grid(0j, core.q, 1.0, n_r, resolution)
    else:
        sub = annulus_sublevel(core)
        if is_simply_connected(sub):
            nodes, weights, scale = _uniformizer_grid(sub, n_r, 2 * resolution)
        else:
            nodes, weights, scale = _ray_interval_grid(sub, n_r, 2 * resolution)
    if pts:
        keep = np.ones(nodes.shape, dtype=bool)
        for p in pts:
            keep &= np.abs(nodes - p) > eps
        nodes, weights = nodes[keep], weights[keep]
    if nodes.size == 0:
        raise DomainError("empty-domain", "no quadrature node lies inside the domain")
    return QuadratureGrid(nodes, weights, float(scale), int(seed), {"resolution": resolution})


def _star_grid(disc: Disc, p: complex, eps: float, n_r: int, n_theta: int):
    u = p - disc.center
    b = np.real(np.conj(u) * np.exp(1j * _angles(n_theta)))
    r_out = -b + np.sqrt(b * b + disc.radius ** 2 - abs(u) ** 2)
    return _polar_grid(p, eps, r_out, n_r, n_theta)


def _uniformizer_grid(sub: Sublevel, n_r: int, n_theta: int):
    from .green import uniformizer

    f0 = uniformizer(sub.base, sub.pole)
    r = math.exp(sub.level)
    w_nodes, w_weights, _ = _polar_grid(0j, 0.0, r, n_r, n_theta)
    w_nodes = w_nodes.reshape(n_theta, n_r)
    z = f0.inverse(w_nodes)
    # |dz/dw|^2 for the inverse map
    jac = np.abs(1.0 / f0.derivative(z)) ** 2
    weights = w_weights * jac.ravel()
    steps = np.concatenate([np.abs(np.diff(z, axis=0)).ravel(), np.abs(np.diff(z, axis=1)).ravel()])
    return z.ravel(), weights, float(steps.max())


def _ray_interval_grid(sub: Sublevel, n_r: int, n_theta: int, n_scan: int = 400):
    from .green import green_array

    q = sub.base.q
    theta = _angles(n_theta)
    rs = np.linspace(q, 1.0, n_scan + 2)[1:-1]
    zz = rs[None, :] * np.exp(1j * theta)[:, None]
    inside = green_array(sub.base, zz.ravel(), sub.pole).reshape(zz.shape) < sub.level
    first = np.argmax(inside, axis=1)
    last = n_scan - 1 - np.argmax(inside[:, ::-1], axis=1)
    if not np.all(inside.any(axis=1)):
        raise NumericalError("sublevel-not-radial", "a ray from the hole misses the sublevel")
    idx = np.arange(n_scan)
    if np.any(inside != ((idx[None, :] >= first[:, None]) & (idx[None, :] <= last[:, None]))):
        raise NumericalError("sublevel-not-radial", "a ray meets the sublevel in several intervals")

    def crossing(lo, hi):
        # lo/hi bracket a root of G - level along each ray
        g_lo = green_array(sub.base, lo * np.exp(1j * theta), sub.pole) - sub.level
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            g = green_array(sub.base, mid * np.exp(1j * theta), sub.pole) - sub.level
            same = np.sign(g) == np.sign(g_lo)
            lo = np.where(same, mid, lo)
            g_lo = np.where(same, g, g_lo)
            hi = np.where(same, hi, mid)
        return 0.5 * (lo + hi)

    lower = np.where(first > 0, rs[np.maximum(first - 1, 0)], q)
    r_in = crossing(lower, rs[first])
    upper = np.where(last < n_scan - 1, rs[np.minimum(last + 1, n_scan - 1)], 1.0)
    r_out = crossing(upper, rs[last])
    return _polar_grid(0j, r_in, r_out, n_r, n_theta)


# --------------------------------------------------------------------------- #
# JSON

def domain_to_dict(domain: DomainSpec) -> dict:
    def pt(z):
        return [float(z.real), float(z.imag)]

    if isinstance(domain, UnitDisc):
        return {"type": "unit_disc"}
    if isinstance(domain, Disc):
        return {"type": "disc", "center": pt(domain.center), "radius": domain.radius}
    if isinstance(domain, Annulus):
        return {"type": "annulus", "q": domain.q}
    if isinstance(domain, Sublevel):
        return {"type": "sublevel", "base": domain_to_dict(domain.base),
                "pole": pt(domain.pole), "level": domain.level}
    if isinstance(domain, Punctured):
        return {"type": "punctured", "base": domain_to_dict(domain.base),
                "punctures": [pt(p) for p in domain.punctures],
                "excision_radius": domain.excision_radius}
    raise DomainError("unsupported-domain", repr(domain))


def domain_from_dict(data: dict) -> DomainSpec:
    try:
        kind = data["type"]
        if kind == "unit_disc":
            return UnitDisc()
        if kind == "disc":
            return Disc(as_point(data.get("center", [0.0, 0.0])), float(data["radius"]))
        if kind == "annulus":
            return Annulus(float(data["q"]))
        if kind == "sublevel":
            return Sublevel(domain_from_dict(data["base"]), as_point(data["pole"]), float(data["level"]))
        if kind == "punctured":
            return puncture(domain_from_dict(data["base"]), data.get("punctures", []),
                            float(data.get("excision_radius", 0.0)))
    except (KeyError, TypeError) as exc:
        raise DomainError("invalid-domain", f"malformed domain JSON: {exc}") from exc
    raise DomainError("invalid-domain", f"unknown domain type {data.get('type')!r}")


def domain_from_json(text: str) -> DomainSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError("invalid-domain", f"domain is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise DomainError("invalid-domain", "domain JSON must be an object")
    return domain_from_dict(data)
