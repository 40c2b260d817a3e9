"""Green-sublevel families ``X_s = {G(., z0) < s}`` and their variational laws.

The family depends on ``Re tau`` only, so everything is parameterised by the
real level ``s <= 0``; harmonicity in ``tau`` becomes linearity in ``s``.
Second differences are divided differences on the (non-uniform) level grid,
i.e. finite-difference estimates of ``d^2 log K_s / ds^2``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bergman import kernel_diag, kernel_offdiag
from .errors import DomainError, SuitaLabError
from .geometry import DomainSpec, Sublevel, as_disc, as_point, contains
from .green import log_capacity
from .parallel import worker_count

DEFAULT_S_MIN = 0.05
DEFAULT_S_MAX = 3.0
DEFAULT_S_COUNT = 12
CSV_FIELDS = ("re_tau", "logK", "c_tau", "logK_plus_2tau", "method")


def geometric_levels(s_min: float = DEFAULT_S_MIN, s_max: float = DEFAULT_S_MAX,
                     n: int = DEFAULT_S_COUNT, include_base: bool = False) -> list[float]:
    """``n`` levels with ``|s|`` geometrically spaced in ``[s_min, s_max]``, ascending."""
    if not (0 < s_min <= s_max) or n < 1:
        raise DomainError("invalid-level", "need 0 < s_min <= s_max and n >= 1")
    levels = [-float(x) for x in np.geomspace(s_max, s_min, n)] if n > 1 else [-float(s_min)]
    return levels + [0.0] if include_base else levels


def sublevel_domain(base: DomainSpec, z0, s: float) -> DomainSpec:
    """``{z in base : G(z, z0) < s}``; ``as_disc`` recognises it when ``base`` is a disc."""
    if not s < 0:
        raise DomainError("invalid-level", f"sublevel needs s < 0, got {s}")
    return Sublevel(base, as_point(z0), float(s))


def domain_at_level(base: DomainSpec, z0: complex, s: float) -> DomainSpec:
    return base if s == 0 else sublevel_domain(base, z0, s)


@dataclass(frozen=True)
class TraceSample:
    re_tau: float
    logK: float
    c_tau: float
    logK_plus_2tau: float
    kernel_method: str
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class VariationTrace:
    """``log K_s(z0)`` and ``c_s(z0)`` along the sublevel family.

    ``base_logK`` and ``base_c`` are the values of the full domain (s = 0),
    kept even when 0 is not among the sampled levels. Failed samples stay in
    the trace with ``error`` set and NaN values.
    """

    pole: complex
    samples: tuple
    base_logK: float
    base_c: float
    meta: dict = field(default_factory=dict, compare=False)

    def valid(self) -> list[TraceSample]:
        return [p for p in self.samples if p.ok]

    def columns(self):
        good = self.valid()
        return (np.array([p.re_tau for p in good]), np.array([p.logK for p in good]),
                np.array([p.logK_plus_2tau for p in good]))

    def to_csv(self, stream=None) -> str:
        out = stream if stream is not None else io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for p in self.samples:
            writer.writerow([repr(p.re_tau), repr(p.logK), repr(p.c_tau), repr(p.logK_plus_2tau),
                             p.kernel_method if p.ok else f"error:{p.error}"])
        return out.getvalue() if stream is None else ""


def _sample(base, z0, s, c0, kernel_method, resolution) -> TraceSample:
    c_tau = c0 * math.exp(-s)
    try:
        kwargs = {} if resolution is None else {"resolution": resolution}
        k = kernel_diag(domain_at_level(base, z0, s), z0, kernel_method, **kwargs)
    except SuitaLabError as exc:
        nan = float("nan")
        return TraceSample(s, nan, c_tau, nan, "none", exc.tag)
    logk = math.log(k.real)
    return TraceSample(s, logk, c_tau, logk + 2 * s, k.method)


def variation_trace(base: DomainSpec, z0, s_values=None, kernel_method: str = "auto",
                    resolution: int | None = None, workers: int | None = None) -> VariationTrace:
    """Sample ``K_s(z0)`` and ``c_s(z0) = c(z0) e^{-s}`` at each level.

    ``s_values`` defaults to the 12-level geometric grid followed by the base
    level 0; it must be strictly ascending and ``<= 0``.
    """
    z0 = as_point(z0)
    if s_values is None:
        s_values = geometric_levels(include_base=True)
    s_values = [float(s) for s in s_values]
    if any(s > 0 for s in s_values):
        raise DomainError("invalid-level", "levels must be <= 0")
    if any(b <= a for a, b in zip(s_values, s_values[1:])):
        raise DomainError("invalid-level", "levels must be strictly ascending")
    if not contains(base, z0):
        raise DomainError("not-in-domain", f"{z0} is not in the domain")
    c0 = log_capacity(base, z0).value
    kwargs = {} if resolution is None else {"resolution": resolution}
    base_logk = math.log(kernel_diag(base, z0, kernel_method, **kwargs).real)

    def run(s):
        return _sample(base, z0, s, c0, kernel_method, resolution)

    n = worker_count(workers)
    if n > 1 and len(s_values) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            samples = tuple(pool.map(run, s_values))
    else:
        samples = tuple(run(s) for s in s_values)
    return VariationTrace(z0, samples, base_logk, c0)


def second_differences(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Divided second differences ``2 [slope_right - slope_left] / (x_{i+1} - x_{i-1})``."""
    h1 = np.diff(x)[:-1]
    h2 = np.diff(x)[1:]
    left = (y[1:-1] - y[:-2]) / h1
    right = (y[2:] - y[1:-1]) / h2
    return 2 * (right - left) / (h1 + h2)


def tail_slope(trace: VariationTrace, count: int = 3) -> float:
    """Least-squares slope of ``log K`` over the ``count`` most negative levels."""
    s, logk, _ = trace.columns()
    if len(s) < 2:
        raise DomainError("insufficient-samples", "need at least 2 valid samples")
    return float(np.polyfit(s[:count], logk[:count], 1)[0])


def _need(trace: VariationTrace, n: int) -> None:
    if len(trace.valid()) < n:
        raise DomainError("insufficient-samples", f"need at least {n} valid samples")


def convexity_report(trace: VariationTrace, tol: float = 1e-3) -> dict:
    """Convexity of ``s -> log K_s(z0)``: every second difference ``>= -tol``."""
    _need(trace, 3)
    s, logk, _ = trace.columns()
    d2 = second_differences(s, logk)
    return {
        "min_second_diff": float(d2.min()),
        "max_abs_second_diff": float(np.abs(d2).max()),
        "max_second_diff": float(d2.max()),
        "strict_somewhere": bool(d2.max() > tol),
        "slope_tail": tail_slope(trace),
        "second_diffs": [float(v) for v in d2],
        "gaps": [p.re_tau for p in trace.samples if not p.ok],
        "tol": tol,
        "pass": bool(d2.min() >= -tol),
    }


def monotone_report(trace: VariationTrace, tol: float = 1e-3) -> dict:
    """``log K_s + 2 s`` is non-decreasing and bounded by ``log K`` of the full domain."""
    _need(trace, 2)
    s, logk, plus = trace.columns()
    steps = np.diff(plus)
    spread = float(plus.max() - plus.min())
    bound_gap = float(np.max(plus - trace.base_logK))
    nondecreasing = bool(steps.min() >= -tol)
    bounded = bool(bound_gap <= tol)
    return {
        "min_step": float(steps.min()),
        "max_step": float(steps.max()),
        "spread": spread,
        "terminal_gap": float(abs(plus[-1] - trace.base_logK)),
        "bound_gap": bound_gap,
        "regime": "harmonic/equality" if spread < tol else "strict",
        "nondecreasing": nondecreasing,
        "bounded_by_base": bounded,
        "min_second_diff": float(second_differences(s, logk).min()) if len(s) >= 3 else None,
        "max_abs_second_diff": float(np.abs(second_differences(s, logk)).max()) if len(s) >= 3 else None,
        "slope_tail": tail_slope(trace),
        "tol": tol,
        "pass": nondecreasing and bounded,
    }


def harmonicity_residual(trace: VariationTrace) -> float:
    """Largest ``|d^2 log K_s / ds^2|`` estimate; zero iff the trace is affine."""
    _need(trace, 3)
    s, logk, _ = trace.columns()
    return float(np.abs(second_differences(s, logk)).max())


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def key_lemma_residual(base: DomainSpec, z0, t, s: float, kernel_method: str = "auto") -> float:
    """``|K(t, z0) - K_s(t, z0) e^{2s}| / |K(t, z0)|``; zero in the equality case."""
    z0, t = as_point(z0), as_point(t)
    sub = sublevel_domain(base, z0, s)
    if not contains(sub, t):
        raise DomainError("t-outside-sublevel", f"{t} is not in the sublevel {s}")
    k = kernel_offdiag(base, t, z0, kernel_method).value
    ks = kernel_offdiag(sub, t, z0, kernel_method).value
    return float(abs(k - ks * math.exp(2 * s)) / abs(k))


def pde_residual(base: DomainSpec, z0, t, s: float, h: float, kernel_method: str = "auto") -> float:
    """Centred-difference check of ``d K_s(t, z0) / ds = -2 K_s(t, z0)``."""
    z0, t = as_point(z0), as_point(t)
    if not h > 0 or s + h > 0:
        raise DomainError("invalid-step", f"need h > 0 and s + h <= 0 (s={s}, h={h})")
    small = sublevel_domain(base, z0, s - h)
    if not contains(small, t):
        raise DomainError("t-outside-sublevel", f"{t} is not in the sublevel {s - h}")
    k_up = kernel_offdiag(domain_at_level(base, z0, s + h), t, z0, kernel_method).value
    k_dn = kernel_offdiag(small, t, z0, kernel_method).value
    k_mid = kernel_offdiag(sublevel_domain(base, z0, s), t, z0, kernel_method).value
    return float(abs((k_up - k_dn) / (2 * h) + 2 * k_mid) / abs(k_mid))


def capacity_scaling_check(base: DomainSpec, z0, s: float) -> float:
    """``|c_s(z0) - c(z0) e^{-s}| / c(z0)`` with ``c_s`` taken from the sublevel disc itself.

    The sublevel of a disc is a round disc; its capacity at ``z0`` is
    computed from that disc's own centre and radius, independently of the
    level-shift rule.
    """
    z0 = as_point(z0)
    sub = sublevel_domain(base, z0, s)
    disc = as_disc(sub)
    if disc is None:
        raise DomainError("route-unavailable", "independent sublevel capacity needs a disc base")
    c_sub = log_capacity(disc, z0).value
    c0 = log_capacity(base, z0).value
    return float(abs(c_sub - c0 * math.exp(-s)) / c0)
