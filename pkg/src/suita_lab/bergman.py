"""Bergman kernels by closed form, Laurent series and Gram-matrix numerics.

The inner product is the plane area integral ``<f, g> = int f conj(g) dA``
(the ``(i/2) alpha ^ conj(beta)`` pairing of 1-forms in the global
coordinate), so the unit-disc kernel is ``1 / (pi (1 - t conj(z))^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericalError
from .geometry import (DEFAULT_RESOLUTION, Annulus, Disc, DomainSpec, QuadratureGrid, Sublevel,
                       annulus_sublevel, as_disc, as_point, build_quadrature, contains, hole_point, is_simply_connected,
                       split_punctures)

SPECTRUM_CUTOFF = 1e-10
DEFAULT_DEGREE = 16
MAX_DEGREE = 64
ADAPTIVE_TOL = 1e-9
METHODS = ("closed_form", "laurent_series", "conformal", "gram_numeric")


@dataclass(frozen=True)
class KernelEstimate:
    value: complex
    method: str
    error_estimate: float = 0.0
    condition: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def real(self) -> float:
        return float(self.value.real)


# --------------------------------------------------------------------------- #
# analytic routes

def disc_kernel(disc: Disc, t, z):
    R = disc.radius
    u = np.asarray(t, dtype=complex) - disc.center
    v = np.asarray(z, dtype=complex) - disc.center
    return R * R / (np.pi * (R * R - u * np.conj(v)) ** 2)


def annulus_norms(q: float, n: np.ndarray) -> np.ndarray:
    """``||z^n||^2`` on ``q < |z| < 1``."""
    n = np.asarray(n)
    out = np.empty(n.shape, dtype=float)
    m1 = n == -1
    out[m1] = 2 * np.pi * math.log(1 / q)
    k = n[~m1]
    out[~m1] = np.pi * (1 - q ** (2.0 * k + 2)) / (k + 1)
    return out


def annulus_kernel(q: float, t, z, rtol: float = 1e-17, max_terms: int = 20000):
    """Bilateral Laurent series ``sum_n (t conj z)^n / ||z^n||^2``.

    ``t`` may be an array. Returns ``(value, tail)`` where ``tail`` bounds the
    first omitted terms. Negative powers are rewritten in
    ``x = q^2 / (t conj z)`` to avoid overflow.
    """
    scalar = np.ndim(t) == 0
    y = np.atleast_1d(np.asarray(t, dtype=complex)) * np.conj(complex(z))
    x = q * q / y
    ay, ax = float(np.max(np.abs(y))), float(np.max(np.abs(x)))
    if not (ay < 1 and ax < 1):
        raise DomainError("not-in-domain", "annulus kernel needs both points inside the ring")
    n_pos = min(max_terms, int(math.log(rtol) / math.log(ay)) + 2 if ay > 0 else 2)
    n_neg = min(max_terms, int(math.log(rtol) / math.log(ax)) + 2 if ax > 0 else 2)
    n = np.arange(n_pos)
    m = np.arange(2, n_neg + 2)
    cp = (n + 1) / (np.pi * (1 - q ** (2.0 * n + 2)))
    cn = (m - 1) / (np.pi * q * q * (1 - q ** (2.0 * m - 2)))
    total = 1 / (y * 2 * np.pi * math.log(1 / q))
    for i in range(0, len(y), 4096):
        sl = slice(i, i + 4096)
        total[sl] += (y[sl, None] ** n) @ cp + (x[sl, None] ** m) @ cn
    tail = float((n_pos + 1) * ay ** n_pos + n_neg * ax ** (n_neg + 2) / q**2)
    # the kernel has zeros, so the tail is measured against the summed term sizes
    scale = 1 / (ay * 2 * np.pi * math.log(1 / q)) + (ay ** n) @ cp + (ax ** m) @ cn
    if tail > 1e-12 * float(scale):
        raise NumericalError("series-diverged", "Laurent series did not converge")
    return (complex(total[0]) if scalar else total), tail


# --------------------------------------------------------------------------- #
# Gram numerics

@dataclass
class BergmanBasis:
    """Monomials ``(z - a)^n`` (n >= 0) and ``(z - b)^-n`` (n >= 1) on a grid.

    Internally the functions are rescaled by ``scale_a^-n`` and ``scale_b^n``
    and the weighted Vandermonde matrix is orthonormalised by an SVD with a
    relative eigenvalue cutoff, which is the spectrum-regularised Gram solve.
    ``gram`` holds the unscaled Gram matrix ``<phi_k, phi_j>``.
    """

    center: complex
    hole_point: complex | None
    max_pos_degree: int
    max_neg_degree: int
    gram: np.ndarray
    spectrum_cutoff: float
    scale_a: float
    scale_b: float
    ortho: np.ndarray
    rank: int
    condition: float
    ortho_low: np.ndarray | None = None
    domain: DomainSpec | None = None
    grid_size: int = 0

    @property
    def size(self) -> int:
        return self.max_pos_degree + 1 + self.max_neg_degree

    def evaluate(self, z, scaled: bool = True) -> np.ndarray:
        """Basis values, shape ``(len(z), size)``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        pos = ((z - self.center) / self.scale_a)[:, None] ** np.arange(self.max_pos_degree + 1)
        cols = [pos]
        if self.max_neg_degree:
            cols.append((self.scale_b / (z - self.hole_point))[:, None]
                        ** np.arange(1, self.max_neg_degree + 1))
        out = np.hstack(cols)
        if not scaled:
            out = out * self._scales()
        return out

    def _scales(self) -> np.ndarray:
        s = [self.scale_a ** np.arange(self.max_pos_degree + 1.0)]
        if self.max_neg_degree:
            s.append(self.scale_b ** -np.arange(1.0, self.max_neg_degree + 1))
        return np.concatenate(s)

    def orthonormal_values(self, z, low: bool = False) -> np.ndarray:
        m = self.ortho_low if low else self.ortho
        phi = self.evaluate(z)
        if low:
            phi = phi[:, self._low_columns()]
        return phi @ m

    def _low_columns(self) -> np.ndarray:
        p_lo, n_lo = _reduced(self.max_pos_degree), _reduced(self.max_neg_degree)
        idx = list(range(p_lo + 1))
        idx += [self.max_pos_degree + k for k in range(1, n_lo + 1)]
        return np.array(idx)


def _reduced(n: int) -> int:
    return max(0, n - max(1, n // 4)) if n else 0


def orthonormalise(a: np.ndarray, cutoff: float):
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0):
        raise NumericalError("gram-singular", "a basis function vanishes on the grid")
    u, s, vh = np.linalg.svd(a / norms, full_matrices=False)
    lam = s**2
    if lam.size == 0 or lam[0] <= 0:
        raise NumericalError("gram-singular", "all Gram eigenvalues fall below the cutoff")
    keep = lam >= cutoff * lam[0]
    if not np.any(keep):
        raise NumericalError("gram-singular", "all Gram eigenvalues fall below the cutoff")
    m = (vh[keep].conj().T / s[keep]) / norms[:, None]
    return m, int(keep.sum()), float(lam[0] / lam[keep][-1])


def _expansion_data(domain: DomainSpec, nodes: np.ndarray):
    core, _, _ = split_punctures(domain)
    disc = as_disc(core)
    if disc is not None:
        return disc.center, None, disc.radius, 1.0
    if isinstance(core, Annulus):
        return 0j, 0j, 1.0, core.q
    b = hole_point(core)
    if b is None:
        a = core.pole if hasattr(core, "pole") else complex(np.mean(nodes))
        return a, None, float(np.max(np.abs(nodes - a))), 1.0
    return 0j, b, float(np.max(np.abs(nodes))), float(np.min(np.abs(nodes - b)))


def numeric_basis(domain: DomainSpec, max_pos: int = DEFAULT_DEGREE, max_neg: int = DEFAULT_DEGREE,
                  grid: QuadratureGrid | None = None, cutoff: float = SPECTRUM_CUTOFF) -> BergmanBasis:
    """Assemble the Gram data of the monomial basis on ``grid``.

    ``max_neg`` is ignored (set to 0) on simply connected domains, which have
    no hole point.
    """
    if grid is None:
        grid = build_quadrature(domain, DEFAULT_RESOLUTION)
    a, b, sa, sb = _expansion_data(domain, grid.nodes)
    if b is None:
        max_neg = 0
    basis = BergmanBasis(a, b, int(max_pos), int(max_neg), np.empty((0, 0)), cutoff, sa, sb,
                         np.empty((0, 0)), 0, 1.0, domain=domain, grid_size=len(grid))
    phi = basis.evaluate(grid.nodes)
    a_mat = np.sqrt(grid.weights)[:, None] * phi
    basis.ortho, basis.rank, basis.condition = orthonormalise(a_mat, cutoff)
    basis.ortho_low, _, _ = orthonormalise(a_mat[:, basis._low_columns()], cutoff)
    g = a_mat.conj().T @ a_mat
    scales = basis._scales()
    basis.gram = g * np.outer(scales, scales)
    if basis.condition > 1e12:
        raise NumericalError("ill-conditioned", f"post-cutoff condition {basis.condition:.3g}")
    return basis


def kernel_numeric(basis: BergmanBasis, t, z0) -> KernelEstimate:
    """Finite-dimensional projection kernel ``v(t)^T G^+ conj(v(z0))``."""
    t, z0 = as_point(t), as_point(z0)
    e = basis.orthonormal_values(np.array([t, z0]))
    value = complex(np.sum(e[0] * np.conj(e[1])))
    el = basis.orthonormal_values(np.array([t, z0]), low=True)
    low = complex(np.sum(el[0] * np.conj(el[1])))
    if t == z0:
        value = complex(value.real, 0.0)
    return KernelEstimate(value, "gram_numeric", abs(value - low), basis.condition,
                          {"rank": basis.rank, "max_pos": basis.max_pos_degree,
                           "max_neg": basis.max_neg_degree})


@lru_cache(maxsize=64)
def _cached_basis(domain, max_pos, max_neg, resolution):
    return numeric_basis(domain, max_pos, max_neg, build_quadrature(domain, resolution))


def adaptive_basis(domain: DomainSpec, z0: complex, resolution: int = DEFAULT_RESOLUTION,
                   degree: int = DEFAULT_DEGREE, tol: float = ADAPTIVE_TOL,
                   fixed: bool = False) -> BergmanBasis:
    """Basis whose degree is doubled until the diagonal error estimate at ``z0`` is below ``tol``.

    With ``fixed=True`` the basis of the given degree is returned as is.
    """
    if fixed:
        return _cached_basis(domain, degree, degree, resolution)
    while True:
        basis = _cached_basis(domain, degree, degree, resolution)
        est = kernel_numeric(basis, z0, z0)
        if est.error_estimate <= tol * abs(est.value) or 2 * degree > MAX_DEGREE:
            return basis
        degree *= 2


def _numeric_basis_for(domain, z0, resolution, degree):
    if degree is None:
        return adaptive_basis(domain, z0, resolution)
    return adaptive_basis(domain, z0, resolution, degree, fixed=True)


# --------------------------------------------------------------------------- #
# dispatch

def conformal_kernel(sub: Sublevel, t, z):
    """Kernel of a simply connected annulus sublevel through its uniformizer.

    ``f0 / r`` maps the sublevel onto the unit disc, so
    ``K_s(t, z) = f0'(t) conj(f0'(z)) / (pi r^2)``.
    """
    from .green import uniformizer

    f0 = uniformizer(sub.base, sub.pole)
    r2 = math.exp(2 * sub.level)
    return f0.derivative(t) * np.conj(f0.derivative(z)) / (np.pi * r2)


def default_method(domain: DomainSpec) -> str:
    core, pts, _ = split_punctures(domain)
    if pts:
        return "gram_numeric"
    if as_disc(core) is not None:
        return "closed_form"
    if isinstance(core, Annulus):
        return "laurent_series"
    if is_simply_connected(core):
        return "conformal"
    return "gram_numeric"


def _conformal_sublevel(core: DomainSpec) -> Sublevel:
    sub = annulus_sublevel(core)
    if sub is None or not is_simply_connected(sub):
        raise DomainError("route-unavailable", "conformal route needs a simply connected annulus sublevel")
    return sub


def kernel_offdiag(domain: DomainSpec, t, z0, method: str = "auto",
                   resolution: int = DEFAULT_RESOLUTION, degree: int | None = None) -> KernelEstimate:
    """``K(t, z0)``, the coefficient of ``dt (x) d(conj z0)``."""
    t, z0 = as_point(t), as_point(z0)
    for p in (t, z0):
        if not contains(domain, p):
            raise DomainError("not-in-domain", f"{p} is not in the domain")
    if method == "auto":
        method = default_method(domain)
    core, pts, _ = split_punctures(domain)
    if method == "closed_form":
        disc = as_disc(core)
        if disc is None:
            raise DomainError("route-unavailable", "closed form needs a disc")
        return KernelEstimate(complex(disc_kernel(disc, t, z0)), "closed_form")
    if method == "laurent_series":
        if not isinstance(core, Annulus):
            raise DomainError("route-unavailable", "Laurent series needs an annulus")
        value, tail = annulus_kernel(core.q, t, z0)
        return KernelEstimate(complex(value), "laurent_series", tail)
    if method == "conformal":
        sub = _conformal_sublevel(core)
        return KernelEstimate(complex(conformal_kernel(sub, t, z0)), "conformal")
    if method == "gram_numeric":
        basis = _numeric_basis_for(domain, z0, resolution, degree)
        return kernel_numeric(basis, t, z0)
    raise DomainError("unknown-method", method)


def kernel_diag(domain: DomainSpec, z0, method: str = "auto",
                resolution: int = DEFAULT_RESOLUTION, degree: int | None = None) -> KernelEstimate:
    """``K(z0)`` with ``K*(z0) = K(z0)|dz|^2``."""
    est = kernel_offdiag(domain, z0, z0, method, resolution, degree)
    value = est.value.real
    if not value > 0:
        raise NumericalError("gram-singular", f"non-positive diagonal kernel {value}")
    return KernelEstimate(complex(value, 0.0), est.method, est.error_estimate, est.condition, est.meta)


def kernel_function(domain: DomainSpec, z0, method: str = "auto",
                    resolution: int = DEFAULT_RESOLUTION, degree: int | None = None):
    """Vectorised ``t -> K(t, z0)`` for the chosen route."""
    z0 = as_point(z0)
    if method == "auto":
        method = default_method(domain)
    core, _, _ = split_punctures(domain)
    if method == "closed_form":
        disc = as_disc(core)
        return lambda t: disc_kernel(disc, t, z0)
    if method == "laurent_series":
        return lambda t: annulus_kernel(core.q, np.atleast_1d(t), z0)[0]
    if method == "conformal":
        sub = _conformal_sublevel(core)
        return lambda t: conformal_kernel(sub, np.atleast_1d(t), z0)
    basis = _numeric_basis_for(domain, z0, resolution, degree)
    e0 = np.conj(basis.orthonormal_values(np.array([z0]))[0])
    return lambda t: basis.orthonormal_values(np.atleast_1d(t)) @ e0


def reproducing_residual(domain: DomainSpec, z0, grid: QuadratureGrid | None = None,
                         method: str = "auto") -> float:
    """``|int |K(t, z0)|^2 dA(t) - K(z0)| / K(z0)`` on ``grid``."""
    z0 = as_point(z0)
    if grid is None:
        grid = build_quadrature(domain, 512)
    k = kernel_function(domain, z0, method)
    vals = k(grid.nodes)
    kz = kernel_diag(domain, z0, method).real
    return float(abs(np.sum(grid.weights * np.abs(vals) ** 2) - kz) / kz)
