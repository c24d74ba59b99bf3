"""Extended-precision q-series primitives.

q-Pochhammer symbols are evaluated with mpmath at the working precision
(``settings.precision_bits`` unless overridden with :func:`working_precision`).
Askey-Wilson polynomials are generated by their monic three-term recurrence
and rescaled to the standard normalization, whose norms are

    h_j = (1 - q^{j-1} abcd) (q, ab, ac, ad, bc, bd, cd)_j / ((1 - q^{2j-1} abcd) (abcd)_j).

The pair (c, d) enters only through c + d and cd, so conjugate pairs are
handled in real arithmetic.
"""

import logging
import math
from contextlib import contextmanager
from contextvars import ContextVar
from functools import lru_cache
from typing import Iterator, Optional, Union

import mpmath
import numpy as np
from numpy.polynomial import polynomial as P

from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError
from aseplab.models import AwPolyParams

logger = logging.getLogger(__name__)

_PRECISION: ContextVar[Optional[int]] = ContextVar("aseplab_precision", default=None)

Number = Union[float, int, complex, mpmath.mpf, mpmath.mpc]


def current_precision() -> int:
    """Working precision in bits for the current context."""
    return _PRECISION.get() or settings.precision_bits


@contextmanager
def working_precision(bits: int) -> Iterator[int]:
    """Raise or lower the working precision inside a block (context-local)."""
    if bits < 64:
        raise ValueError(f"precision_bits must be >= 64, got {bits}")
    token = _PRECISION.set(bits)
    try:
        yield bits
    finally:
        _PRECISION.reset(token)


def _check_q(q: float) -> None:
    if q >= 1:
        raise LabError(ErrorCode.NONCONVERGENT, f"q={q} is outside [0, 1)")
    if q < 0:
        raise LabError(ErrorCode.DOMAIN, f"q={q} is outside [0, 1)")


def qpoch_finite(z: Number, q: float, n: int) -> mpmath.mpf:
    """(z; q)_n = prod_{j<n} (1 - z q^j); 1 for n = 0."""
    if n < 0:
        raise LabError(ErrorCode.DOMAIN, f"n must be nonnegative, got {n}")
    if n == 0:
        return mpmath.mpf(1)
    with mpmath.workprec(current_precision()):
        z = mpmath.mpmathify(z)
        q = mpmath.mpf(q)
        result = mpmath.mpf(1)
        qj = mpmath.mpf(1)
        for _ in range(n):
            result *= 1 - z * qj
            qj *= q
        return +result


def truncation_index(z_abs: float, q: float, tol: Optional[float] = None) -> int:
    """Smallest N with |z| q^N <= tol (1 - q) / 2."""
    _check_q(q)
    tol = settings.series_tol if tol is None else tol
    threshold = tol * (1.0 - q) / 2.0
    if z_abs <= threshold:
        return 0
    if q == 0:
        return 1
    return max(1, math.ceil(math.log(threshold / z_abs) / math.log(q)))


def qpoch_infinite(z: Number, q: float, tol: Optional[float] = None) -> mpmath.mpf:
    """(z; q)_inf, truncated where the geometric tail is below tol."""
    _check_q(q)
    if q == 0:
        with mpmath.workprec(current_precision()):
            return 1 - mpmath.mpmathify(z)
    n = truncation_index(float(abs(z)), q, tol)
    return qpoch_finite(z, q, n)


def qpoch_infinite_array(z: np.ndarray, q: float, tol: Optional[float] = None) -> np.ndarray:
    """Double-precision (z; q)_inf for an array of complex arguments."""
    _check_q(q)
    z = np.asarray(z, dtype=complex)
    if z.size == 0:
        return np.ones_like(z)
    n = truncation_index(float(np.max(np.abs(z))), q, tol)
    if n == 0:
        return np.ones_like(z)
    powers = q ** np.arange(n, dtype=float)
    return np.prod(1.0 - z[..., None] * powers, axis=-1)


def pair_poch(u: Number, pair_sum: Number, pair_product: Number, q: float, n: int) -> mpmath.mpf:
    """(u c, u d; q)_n from c + d and cd."""
    with mpmath.workprec(current_precision()):
        u, s, p, q = (mpmath.mpmathify(v) for v in (u, pair_sum, pair_product, q))
        result = mpmath.mpf(1)
        qi = mpmath.mpf(1)
        for _ in range(n):
            result *= 1 - u * s * qi + u * u * p * qi * qi
            qi *= q
        return +result


def _guard(value, code: ErrorCode, what: str):
    if abs(value) < settings.singular_tol:
        raise LabError(code, f"{what} vanishes ({mpmath.nstr(value, 5)})")
    return value


def _recurrence(params: AwPolyParams, n_max: int, prec: int) -> tuple[tuple, tuple]:
    with mpmath.workprec(prec):
        q = mpmath.mpf(params.q)
        a = mpmath.mpf(params.a)
        b = mpmath.mpf(params.b)
        sig = mpmath.mpf(params.pair_sum)
        pi = mpmath.mpf(params.pair_product)
        T = b * pi
        S = a * T
        e1p = b + sig
        e2p = b * sig + pi

        def qp(k):
            return q ** k

        def pair(u, k):
            # (1 - u c q^k)(1 - u d q^k)
            return 1 - u * sig * qp(k) + u * u * pi * qp(2 * k)

        singular = ErrorCode.RECURRENCE_SINGULAR
        b_coef, c_coef = [], [mpmath.mpf(0)]
        for n in range(n_max):
            if n == 0:
                den = _guard(1 - S, singular, "1 - abcd")
                b_coef.append((a + e1p - a * e2p - T) / (2 * den))
            else:
                den = _guard((1 - S * qp(2 * n - 1)) * (1 - S * qp(2 * n)), singular, f"b_{n} denominator")
                num = (
                    T * qp(n - 1) - T * qp(2 * n - 1) - T * qp(2 * n) + a * T * T * qp(4 * n - 1)
                    + qp(n) * e1p - a * qp(2 * n) * e2p + a * a * qp(3 * n) * T
                    - a * T * e1p * qp(2 * n - 1) + a * a * T * e2p * qp(3 * n - 1)
                    - a ** 3 * T * T * qp(4 * n - 1)
                )
                c_den = _guard((1 - S * qp(2 * n - 2)) * (1 - S * qp(2 * n - 1)), singular, f"C_{n} denominator")
                c_term = a * (1 - qp(n)) * pair(b, n - 1) * (1 - pi * qp(n - 1)) / c_den
                b_coef.append((a + num / den - c_term) / 2)

                common = (1 - a * b * qp(n - 1)) * pair(a, n - 1) * (1 - qp(n)) * pair(b, n - 1) * (1 - pi * qp(n - 1))
                if n == 1:
                    den_c = _guard((1 - S) ** 2 * (1 - S * q), singular, "c_1 denominator")
                    c_coef.append(common / den_c / 4)
                else:
                    den_c = _guard(
                        (1 - S * qp(2 * n - 3)) * (1 - S * qp(2 * n - 2)) ** 2 * (1 - S * qp(2 * n - 1)),
                        singular,
                        f"c_{n} denominator",
                    )
                    c_coef.append(common * (1 - S * qp(n - 2)) / den_c / 4)
        return tuple(b_coef), tuple(c_coef)


@lru_cache(maxsize=4096)
def _recurrence_cached(params: AwPolyParams, n_max: int, prec: int):
    return _recurrence(params, n_max, prec)


def aw_recurrence_mp(params: AwPolyParams, n_max: int) -> tuple[tuple, tuple]:
    """Monic recurrence coefficients as mpf values at the working precision."""
    key = AwPolyParams(a=params.a, b=params.b, c=params.c, d=params.d, q=params.q, conjugate=params.conjugate)
    return _recurrence_cached(key, n_max, current_precision())


def aw_recurrence(params: AwPolyParams, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Monic recurrence P_{n+1} = (x - b_n) P_n - c_n P_{n-1}, n < n_max (c_0 = 0)."""
    b_coef, c_coef = aw_recurrence_mp(params, n_max)
    return np.array([float(v) for v in b_coef]), np.array([float(v) for v in c_coef])


def aw_leading_coefficient(j: int, params: AwPolyParams) -> mpmath.mpf:
    """2^j (abcd q^{j-1}; q)_j, the leading coefficient of w_j."""
    if j == 0:
        return mpmath.mpf(1)
    with mpmath.workprec(current_precision()):
        S = mpmath.mpf(params.a) * params.b * params.pair_product
        return mpmath.mpf(2) ** j * qpoch_finite(S * mpmath.mpf(params.q) ** (j - 1), params.q, j)


def aw_polynomial(j: int, x, params: AwPolyParams):
    """w_j(x; a, b, c, d); accepts scalars or arrays."""
    if j < 0:
        raise LabError(ErrorCode.DOMAIN, f"degree must be nonnegative, got {j}")
    x_arr = np.asarray(x, dtype=float)
    if j == 0:
        out = np.ones_like(x_arr)
    else:
        b_coef, c_coef = aw_recurrence(params, j)
        prev = np.zeros_like(x_arr)
        cur = np.ones_like(x_arr)
        for n in range(j):
            prev, cur = cur, (x_arr - b_coef[n]) * cur - c_coef[n] * prev
        out = float(aw_leading_coefficient(j, params)) * cur
    return float(out) if out.ndim == 0 else out


def aw_polynomials_mp(j_max: int, x, params: AwPolyParams) -> list:
    """w_0(x), ..., w_{j_max}(x) at one point, evaluated in mpmath at the working precision."""
    with mpmath.workprec(current_precision()):
        x = mpmath.mpmathify(x)
        values = [mpmath.mpf(1)]
        if j_max > 0:
            b_coef, c_coef = aw_recurrence_mp(params, j_max)
            prev, cur = mpmath.mpf(0), mpmath.mpf(1)
            for n in range(j_max):
                prev, cur = cur, (x - b_coef[n]) * cur - c_coef[n] * prev
                values.append(aw_leading_coefficient(n + 1, params) * cur)
        return values


def aw_monomial_coefficients(params: AwPolyParams, j_max: int) -> list[np.ndarray]:
    """Ascending monomial coefficients of w_0, ..., w_{j_max}."""
    b_coef, c_coef = aw_recurrence(params, j_max) if j_max > 0 else (np.zeros(0), np.zeros(1))
    monic = [np.array([1.0])]
    prev = np.array([0.0])
    for n in range(j_max):
        nxt = P.polysub(P.polysub(P.polymulx(monic[-1]), b_coef[n] * monic[-1]), c_coef[n] * prev)
        prev = monic[-1]
        monic.append(nxt)
    return [float(aw_leading_coefficient(j, params)) * coeffs for j, coeffs in enumerate(monic)]


def aw_norm_mp(j: int, params: AwPolyParams) -> mpmath.mpf:
    """Orthogonality norm of w_j against nu(dx; a, b, c, d)."""
    if j == 0:
        return mpmath.mpf(1)
    with mpmath.workprec(current_precision()):
        q = mpmath.mpf(params.q)
        a, b = mpmath.mpf(params.a), mpmath.mpf(params.b)
        sig, pi = mpmath.mpf(params.pair_sum), mpmath.mpf(params.pair_product)
        S = a * b * pi
        den = (1 - q ** (2 * j - 1) * S) * qpoch_finite(S, params.q, j)
        _guard(den, ErrorCode.DIVISION_BY_ZERO, f"norm denominator for j={j}")
        num = (
            (1 - q ** (j - 1) * S)
            * qpoch_finite(q, params.q, j)
            * qpoch_finite(a * b, params.q, j)
            * pair_poch(a, sig, pi, params.q, j)
            * pair_poch(b, sig, pi, params.q, j)
            * qpoch_finite(pi, params.q, j)
        )
        return num / den


def aw_norm(j: int, params: AwPolyParams) -> float:
    """aw_norm_mp as a float."""
    return float(aw_norm_mp(j, params))


def marginal_params(A: float, B: float, C: float, D: float, q: float, t: float) -> AwPolyParams:
    """Parameters (A sqrt t, B sqrt t, C / sqrt t, D / sqrt t) of pi_t."""
    root = math.sqrt(t)
    return AwPolyParams(a=A * root, b=B * root, c=C / root, d=D / root, q=q)


def p_scale(j: int, A: float, B: float, q: float, t: float) -> float:
    """t^{j/2} / (ABt; q)_j, turning w_j at time t into p_j(.; t)."""
    den = qpoch_finite(A * B * t, q, j)
    _guard(den, ErrorCode.EXPANSION_SINGULAR, f"(ABt; q)_{j} at t={t}")
    with mpmath.workprec(current_precision()):
        return float(mpmath.mpf(t) ** (mpmath.mpf(j) / 2) / den)


def p_polynomial(j: int, x, A: float, B: float, C: float, D: float, q: float, t: float):
    """Time-indexed polynomial p_j(x; t)."""
    params = marginal_params(A, B, C, D, q, t)
    return p_scale(j, A, B, q, t) * aw_polynomial(j, x, params)


def p_monomial_coefficients(A: float, B: float, C: float, D: float, q: float, t: float, j_max: int) -> list[np.ndarray]:
    params = marginal_params(A, B, C, D, q, t)
    return [p_scale(j, A, B, q, t) * coeffs for j, coeffs in enumerate(aw_monomial_coefficients(params, j_max))]
