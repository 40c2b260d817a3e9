"""Minimal-norm holomorphic forms with a prescribed value at the pole.

Among square-integrable ``F dz`` with ``F(z0) = c``, the least norm is
attained by ``c K(t, z0) / K(z0)`` and equals ``c / sqrt(K(z0))``; with
``c = c(z0)`` the norm is ``sqrt(pi / ratio)``, so it is ``<= sqrt(pi)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bergman import BergmanBasis, orthonormalise, kernel_diag, kernel_function
from .errors import DomainError, NumericalError
from .geometry import DomainSpec, QuadratureGrid, as_point, contains
from .green import log_capacity
from .variation import domain_at_level, sublevel_domain

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class ExtensionSolution:
    """``coefficients`` are on the raw monomials of the basis (qp route only)."""

    norm: float
    value_at_pole: complex
    route: str
    coefficients: np.ndarray | None = None
    evaluator: Callable | None = field(default=None, repr=False, compare=False)
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, t):
        if self.evaluator is None:
            raise DomainError("route-unavailable", "solution carries no evaluator")
        return self.evaluator(np.atleast_1d(np.asarray(t, dtype=complex)))

    def to_dict(self, with_coefficients: bool = True) -> dict:
        d = {"norm": self.norm, "value_at_pole": [self.value_at_pole.real, self.value_at_pole.imag],
             "route": self.route}
        if with_coefficients and self.coefficients is not None:
            d["coefficients"] = [[float(c.real), float(c.imag)] for c in self.coefficients]
        return d

    def to_json(self, with_coefficients: bool = True) -> str:
        return json.dumps(self.to_dict(with_coefficients), indent=2)


def minimal_extension_closed(domain: DomainSpec, z0, kernel_method: str = "auto") -> ExtensionSolution:
    """``h(t) = c(z0) K(t, z0) / K(z0)`` with norm ``c(z0) / sqrt(K(z0))``."""
    z0 = as_point(z0)
    if not contains(domain, z0):
        raise DomainError("not-in-domain", f"{z0} is not in the domain")
    c = log_capacity(domain, z0).value
    k = kernel_diag(domain, z0, kernel_method)
    kfun = kernel_function(domain, z0, k.method)
    scale = c / k.real
    return ExtensionSolution(c / math.sqrt(k.real), complex(c), "kernel_formula", None,
                             lambda t: scale * kfun(t), {"K": k.real, "c": c, "kernel_method": k.method})


def minimal_extension_numeric(basis: BergmanBasis, grid: QuadratureGrid, z0, c_target: float,
                              cutoff: float | None = None) -> ExtensionSolution:
    """Least-norm combination of basis functions with value ``c_target`` at ``z0``.

    The Gram matrix on ``grid`` is regularised by dropping eigen-directions
    below a relative cutoff; in the remaining orthonormal coordinates the
    constrained minimiser is the scaled conjugate of the evaluation vector.
    """
    z0 = as_point(z0)
    if c_target < 0:
        raise DomainError("invalid-target", "c_target must be >= 0")
    cutoff = basis.spectrum_cutoff if cutoff is None else cutoff
    a_mat = np.sqrt(grid.weights)[:, None] * basis.evaluate(grid.nodes)
    m, rank, cond = orthonormalise(a_mat, cutoff)
    scales = basis._scales()
    e0 = (basis.evaluate(np.array([z0])) @ m)[0]
    k_n = float(np.sum(np.abs(e0) ** 2))
    if not k_n > 0 or k_n < 1e-300:
        raise NumericalError("constraint-infeasible", "all basis evaluations at z0 vanish")
    coeff_scaled = m @ (c_target * np.conj(e0) / k_n)
    norm = float(np.linalg.norm(a_mat @ coeff_scaled))
    value = complex((basis.evaluate(np.array([z0])) @ coeff_scaled)[0])

    def evaluate(t):
        return basis.evaluate(t) @ coeff_scaled

    return ExtensionSolution(norm, value, "constrained_qp", coeff_scaled / scales, evaluate,
                             {"rank": rank, "condition": cond, "K_numeric": k_n,
                              "norm_from_kernel": c_target / math.sqrt(k_n)})


def uniqueness_certificate(solution: ExtensionSolution, basis: BergmanBasis, grid: QuadratureGrid,
                           z0, n_directions: int = 8, step: float = 1e-2, seed: int = 0) -> dict:
    """Perturb the qp minimiser along random directions that keep ``F(z0)`` fixed.

    Every admissible perturbation must raise the norm; this is a local,
    finite-dimensional certificate of uniqueness.
    """
    if solution.coefficients is None:
        raise DomainError("route-unavailable", "certificate needs the qp route")
    z0 = as_point(z0)
    rng = np.random.default_rng(seed)
    scales = basis._scales()
    a_mat = np.sqrt(grid.weights)[:, None] * basis.evaluate(grid.nodes)
    v = basis.evaluate(np.array([z0]))[0]
    base = solution.coefficients * scales
    base_norm = float(np.linalg.norm(a_mat @ base))
    gains = []
    for _ in range(n_directions):
        d = rng.standard_normal(v.size) + 1j * rng.standard_normal(v.size)
        d -= v.conj() * (v @ d) / np.vdot(v, v).real
        d *= step / np.linalg.norm(a_mat @ d)
        gains.append(float(np.linalg.norm(a_mat @ (base + d)) - base_norm))
    return {"base_norm": base_norm, "min_gain": min(gains), "gains": gains,
            "pass": bool(min(gains) > 0)}


def extension_bound_check(domain: DomainSpec, z0, tol: float = 1e-6,
                          kernel_method: str = "auto") -> dict:
    sol = minimal_extension_closed(domain, z0, kernel_method)
    return {"norm": sol.norm, "bound": SQRT_PI, "pass": bool(sol.norm <= SQRT_PI + tol),
            "equality": bool(abs(sol.norm - SQRT_PI) < tol), "gap": SQRT_PI - sol.norm,
            "value_at_pole": sol.value_at_pole.real, "tol": tol,
            "kernel_method": sol.meta["kernel_method"]}


def tau_form(base: DomainSpec, z0, s: float, kernel_method: str = "auto"):
    """``t -> e^{2s} sqrt(pi) K_s(t, z0) / sqrt(K(z0))`` on the sublevel ``X_s``."""
    z0 = as_point(z0)
    k0 = kernel_diag(base, z0, kernel_method).real
    ks = kernel_function(domain_at_level(base, z0, s), z0, kernel_method)
    factor = math.exp(2 * s) * SQRT_PI / math.sqrt(k0)
    return lambda t: factor * ks(np.atleast_1d(np.asarray(t, dtype=complex)))


def level_derivative_form(base: DomainSpec, z0, s: float, h: float = 1e-3,
                          kernel_method: str = "auto"):
    """``-(1/2) dK_s(t, z0)/ds``, rescaled like ``tau_form``, by a centred difference.

    ``d/d conj(tau) = (1/2) d/ds`` because the family depends on ``Re tau``
    only; in the equality case this form coincides with ``tau_form``.
    """
    z0 = as_point(z0)
    if not h > 0 or s + h > 0:
        raise DomainError("invalid-step", f"need h > 0 and s + h <= 0 (s={s}, h={h})")
    k0 = kernel_diag(base, z0, kernel_method).real
    up = kernel_function(domain_at_level(base, z0, s + h), z0, kernel_method)
    dn = kernel_function(sublevel_domain(base, z0, s - h), z0, kernel_method)
    factor = math.exp(2 * s) * SQRT_PI / math.sqrt(k0)

    def form(t):
        t = np.atleast_1d(np.asarray(t, dtype=complex))
        return -0.5 * factor * (up(t) - dn(t)) / (2 * h)

    return form
