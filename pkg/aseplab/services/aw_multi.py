"""Integrals against multi-time measures pi_{t_1..t_m} and kernel chains.

Two backends:

* nested: backward recursion through discretized kernels P_{t_i,t_{i+1}}(x, .)
  built at every node and atom of the outer rule;
* projection: the polynomial integrand is carried backwards in time by
  re-expanding it in the basis p_j(.; t) and using
  int p_j(y; t) P_{s,t}(x, dy) = p_j(x; s), leaving one integral against pi_{t_1}.
"""

import logging
import math
import threading
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg

from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError
from aseplab.models import Factor, KernelSpec, MultiAwSpec
from aseplab.services import aw_measure, qseries
from aseplab.services.aw_measure import DiscreteRule

logger = logging.getLogger(__name__)

BACKENDS = ("nested", "projection")


def _check_factors(times: Sequence[float], factors: Sequence[Factor]) -> None:
    if len(factors) != len(times):
        raise LabError(ErrorCode.DOMAIN, f"{len(factors)} factors for {len(times)} times")


def _point_rule(x: float, source: Optional[float]) -> DiscreteRule:
    return DiscreteRule(
        np.array([x]),
        np.array([1.0]),
        np.array([math.nan if source is None else source]),
    )


class KernelCache:
    """Discretized kernels keyed by (s, t, x) with x rounded to a fixed number of digits."""

    def __init__(self, A: float, B: float, q: float, digits: Optional[int] = None):
        self.A, self.B, self.q = A, B, q
        self.digits = settings.kernel_cache_digits if digits is None else digits
        self._rules: dict[tuple, DiscreteRule] = {}
        self._lock = threading.Lock()
        self.builds = 0

    def rule(self, s: float, t: float, x: float, source: float, degree: int) -> DiscreteRule:
        has_source = not math.isnan(source)
        key = (s, t, round(x, self.digits), round(source, self.digits) if has_source else None, degree)
        with self._lock:
            cached = self._rules.get(key)
        if cached is not None:
            return cached
        if s == t:
            rule = _point_rule(x, source if has_source else None)
        else:
            spec = KernelSpec(A=self.A, B=self.B, q=self.q, s=s, t=t, x=x, source=source if has_source else None)
            rule = aw_measure.discretize(aw_measure.transition_kernel(spec), degree)
        with self._lock:
            self._rules[key] = rule
            self.builds += 1
        return rule


def _nested(rule: DiscreteRule, level: int, times, factors, cache: KernelCache) -> float:
    values = factors[level](rule.points)
    if level == len(times) - 1:
        return float(rule.weights @ values)
    degree = max(2, sum(f.degree for f in factors[level + 1:]))
    inner = np.array(
        [
            _nested(cache.rule(times[level], times[level + 1], x, v, degree), level + 1, times, factors, cache)
            for x, v in zip(rule.points, rule.sources)
        ]
    )
    return float(rule.weights @ (values * inner))


def multi_integrate_nested(
    spec: MultiAwSpec, factors: Sequence[Factor], cache: Optional[KernelCache] = None
) -> float:
    """int prod g_i(x_i) pi_{t_1..t_m}(dx) by backward nested integration."""
    if spec.m > settings.nested_cap:
        raise LabError(ErrorCode.CAP_EXCEEDED, f"m={spec.m} exceeds the nested cap {settings.nested_cap}")
    _check_factors(spec.times, factors)
    cache = cache or KernelCache(spec.A, spec.B, spec.q)
    initial = aw_measure.pi_marginal(spec.A, spec.B, spec.C, spec.D, spec.q, spec.times[0])
    degree = max(2, sum(f.degree for f in factors))
    result = _nested(aw_measure.discretize(initial, degree), 0, spec.times, list(factors), cache)
    logger.debug(f"Nested integral over {spec.m} times used {cache.builds} kernel builds")
    return result


def _basis_matrix(spec_params: tuple, t: float, degree: int) -> np.ndarray:
    """Columns: monomial coefficients of p_0(.; t) .. p_degree(.; t)."""
    A, B, C, D, q = spec_params
    matrix = np.zeros((degree + 1, degree + 1))
    for j, coeffs in enumerate(qseries.p_monomial_coefficients(A, B, C, D, q, t, degree)):
        matrix[: coeffs.size, j] = coeffs
    diagonal = np.abs(np.diag(matrix))
    if np.any(diagonal < settings.singular_tol * max(1.0, diagonal.max())):
        raise LabError(ErrorCode.EXPANSION_SINGULAR, f"degenerate polynomial basis at t={t}")
    return matrix


def transport(poly: np.ndarray, spec_params: tuple, t_from: float, t_to: float) -> np.ndarray:
    """Coefficients of x -> int poly(y) P_{t_to, t_from}(x, dy)."""
    poly = np.atleast_1d(np.asarray(poly, dtype=float))
    if t_from == t_to:
        return poly
    degree = poly.size - 1
    expansion = linalg.solve_triangular(_basis_matrix(spec_params, t_from, degree), poly, lower=False)
    return _basis_matrix(spec_params, t_to, degree) @ expansion


def _backward_polynomial(spec_params: tuple, times, factors) -> np.ndarray:
    poly = np.asarray(factors[-1].coefficients, dtype=float)
    for i in range(len(times) - 2, -1, -1):
        poly = P.polymul(factors[i].coefficients, transport(poly, spec_params, times[i + 1], times[i]))
    return poly


def multi_integrate_projection(spec: MultiAwSpec, factors: Sequence[Factor]) -> float:
    """Same integral through the projection formula."""
    _check_factors(spec.times, factors)
    spec_params = (spec.A, spec.B, spec.C, spec.D, spec.q)
    poly = _backward_polynomial(spec_params, spec.times, list(factors))
    initial = aw_measure.pi_marginal(spec.A, spec.B, spec.C, spec.D, spec.q, spec.times[0])
    return aw_measure.integrate(initial, lambda x: P.polyval(x, poly))


def multi_integrate(spec: MultiAwSpec, factors: Sequence[Factor], backend: Optional[str] = None) -> float:
    backend = backend or settings.multi_backend
    if backend == "nested":
        return multi_integrate_nested(spec, factors)
    if backend == "projection":
        return multi_integrate_projection(spec, factors)
    raise LabError(ErrorCode.DOMAIN, f"unknown backend {backend!r}; expected one of {BACKENDS}")


def kernel_chain_integrate(
    spec: MultiAwSpec,
    start: float,
    start_time: float,
    factors: Sequence[Factor],
    source: Optional[float] = None,
    backend: Optional[str] = None,
    cache: Optional[KernelCache] = None,
) -> float:
    """int prod g_i(x_i) P_{t_0,t_1}(x_0, dx_1) ... P_{t_{m-1},t_m}(x_{m-1}, dx_m).

    The chain starts from the point ``start`` at ``start_time``; ``source`` is
    its generating value when it is an atom. C and D of ``spec`` only fix the
    polynomial basis of the projection backend.
    """
    _check_factors(spec.times, factors)
    if start_time > spec.times[0]:
        raise LabError(ErrorCode.DOMAIN, f"chain start time {start_time} is after t_1={spec.times[0]}")
    times = (start_time,) + tuple(spec.times)
    chain = [Factor(coefficients=(1.0,))] + list(factors)
    backend = backend or settings.multi_backend
    if backend == "nested":
        if spec.m > settings.nested_cap:
            raise LabError(ErrorCode.CAP_EXCEEDED, f"m={spec.m} exceeds the nested cap {settings.nested_cap}")
        cache = cache or KernelCache(spec.A, spec.B, spec.q)
        return _nested(_point_rule(start, source), 0, times, chain, cache)
    if backend == "projection":
        poly = _backward_polynomial((spec.A, spec.B, spec.C, spec.D, spec.q), times, chain)
        return float(P.polyval(start, poly))
    raise LabError(ErrorCode.DOMAIN, f"unknown backend {backend!r}; expected one of {BACKENDS}")


def power_factor(base: float, slope: float, power: int) -> Factor:
    """(base + slope x)^power as a polynomial factor."""
    return Factor(coefficients=tuple(P.polypow([base, slope], power)))
