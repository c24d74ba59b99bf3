"""Askey-Wilson signed measures: admissibility, construction and integration.

A measure nu(dx; a, b, c, d) is stored as its atom table plus the constant

    K = (q, ab, ac, ad, bc, bd, cd)_inf / (abcd)_inf

of the continuous part. With x = cos(theta) the continuous part reads

    f(x) dx = K / (2 pi) |(e^{2i theta})_inf / prod_e (e e^{i theta})_inf|^2 d theta,

so its sign is the sign of K and quadrature runs on theta in [0, pi].
"""

import logging
import math
from typing import Callable, NamedTuple, Optional

import mpmath
import numpy as np

from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError
from aseplab.models import (
    AdmissibilityReport,
    Atom,
    AwPolyParams,
    AwQuadruple,
    AwSignedMeasure,
    ConditionCheck,
    Generator,
    KernelSpec,
)
from aseplab.services import qseries
from aseplab.services.quadrature import QuadratureRule, adaptive_rule

logger = logging.getLogger(__name__)

SLOTS = ("a", "b", "c", "d")
# Range of l scanned by the resonance conditions
MAX_POWER = 60
# Hard stop for atom enumeration (|e| q^k >= 1 with q close to 1)
MAX_ATOMS_PER_GENERATOR = 500


class DiscreteRule(NamedTuple):
    """Signed point rule standing in for a measure in nested integration.

    ``sources`` holds the generating value v of each atom (x = (v + 1/v)/2) and
    NaN for quadrature nodes of the continuous part.
    """
    points: np.ndarray
    weights: np.ndarray
    sources: np.ndarray


# ---------------------------------------------------------------------------
# Admissibility
# ---------------------------------------------------------------------------


def _nearest_power(ratio: float, q: float) -> tuple[int, float]:
    """Nearest l with ratio ~ q^l and the relative margin |ratio q^{-l} - 1|."""
    if q == 0:
        return 0, abs(ratio - 1.0)
    center = int(round(math.log(ratio) / math.log(q)))
    best_l, best_margin = center, math.inf
    for l in (center - 1, center, center + 1):
        if abs(l) > MAX_POWER:
            continue
        margin = abs(ratio * q ** (-l) - 1.0)
        if margin < best_margin:
            best_l, best_margin = l, margin
    return best_l, best_margin


def check_admissible(quadruple: AwPolyParams, tol: Optional[float] = None) -> AdmissibilityReport:
    """Report each admissibility condition with its margin to violation."""
    tol = settings.admissibility_tol if tol is None else tol
    warn_at = 10 * tol
    q = quadruple.q
    checks: list[ConditionCheck] = []

    # (1) ab < 1 and cd < 1; reality of a, b and of the pair is built into the type
    margin1 = min(1.0 - quadruple.a * quadruple.b, 1.0 - quadruple.pair_product)
    checks.append(ConditionCheck(condition=1, passed=margin1 > 0, margin=margin1, warning=0 < margin1 < warn_at))

    # (2) no two large parameters in ratio q^l
    large = {slot: value for slot, value in quadruple.real_values().items() if abs(value) >= 1}
    slots = list(large)
    for i, first in enumerate(slots):
        for second in slots[i + 1:]:
            ratio = large[second] / large[first]
            label = f"{second}/{first}"
            if ratio <= 0:
                checks.append(ConditionCheck(condition=2, passed=True, margin=math.inf, pair=label))
                continue
            l, margin = _nearest_power(ratio, q)
            checks.append(
                ConditionCheck(
                    condition=2,
                    passed=margin > tol,
                    margin=margin,
                    nearest_l=l,
                    pair=label,
                    warning=tol < margin < warn_at,
                )
            )

    # (3) q^l abcd != 1 for l >= 0
    S = quadruple.abcd
    if S <= 0:
        checks.append(ConditionCheck(condition=3, passed=True, margin=1.0 - S))
    elif S < 1 or q == 0:
        margin3 = abs(1.0 - S)
        checks.append(
            ConditionCheck(condition=3, passed=margin3 > tol, margin=margin3, nearest_l=0, warning=tol < margin3 < warn_at)
        )
    else:
        l, margin3 = _nearest_power(1.0 / S, q)
        l = max(l, 0)
        margin3 = abs(S * q ** l - 1.0)
        checks.append(
            ConditionCheck(condition=3, passed=margin3 > tol, margin=margin3, nearest_l=l, warning=tol < margin3 < warn_at)
        )

    report = AdmissibilityReport(conditions=checks)
    for check in report.warnings:
        logger.warning(f"Near-violation of condition ({check.condition}) margin={check.margin:.3g} for {quadruple}")
    return report


# ---------------------------------------------------------------------------
# Atoms and the continuous part
# ---------------------------------------------------------------------------


def _mp_values(params: AwPolyParams) -> dict[str, mpmath.mpc]:
    c, d = params.pair
    return {
        "a": mpmath.mpf(params.a),
        "b": mpmath.mpf(params.b),
        "c": mpmath.mpc(c.real, c.imag),
        "d": mpmath.mpc(d.real, d.imag),
    }


def _poch_product(args, q: float):
    result = mpmath.mpf(1)
    for z in args:
        result *= qseries.qpoch_infinite(z, q)
    return result


def atom_masses(e, others, q: float, k_max: int) -> list:
    """Masses p_0 .. p_{k_max} of the atoms generated by e."""
    f1, f2, f3 = others
    S = e * f1 * f2 * f3
    den = _poch_product((f1 / e, f2 / e, f3 / e, S), q)
    if abs(den) < settings.singular_tol:
        raise LabError(ErrorCode.DIVISION_BY_ZERO, f"atom mass denominator vanishes for generator {e}")
    p0 = _poch_product((e ** -2, f1 * f2, f1 * f3, f2 * f3), q) / den
    masses = [p0]
    for k in range(1, k_max + 1):
        qk = mpmath.mpf(q) ** k
        num = p0 * qk * (1 - e * e * qk * qk)
        num *= qseries.qpoch_finite(e * e, q, k)
        for f in others:
            num *= qseries.qpoch_finite(e * f, q, k)
        den_k = qseries.qpoch_finite(q, q, k) * (1 - e * e) * e ** k
        for l in range(1, k + 1):
            ql = mpmath.mpf(q) ** l
            den_k *= (f1 - ql * e) * (f2 - ql * e) * (f3 - ql * e)
        masses.append(num / den_k)
    return masses


def atom_entries(params: AwPolyParams) -> list[tuple[str, int, mpmath.mpf, mpmath.mpf]]:
    """(slot, k, e q^k, mass) for every atom, values and masses left at the working precision."""
    entries = []
    q = params.q
    with mpmath.workprec(qseries.current_precision()):
        values = _mp_values(params)
        for slot, real_value in params.real_values().items():
            if abs(real_value) < 1:
                continue
            k_max = 0
            if q > 0:
                while abs(real_value * q ** (k_max + 1)) >= 1 and k_max < MAX_ATOMS_PER_GENERATOR:
                    k_max += 1
            e = values[slot].real
            others = [values[s] for s in SLOTS if s != slot]
            for k, mass in enumerate(atom_masses(e, others, q, k_max)):
                entries.append((slot, k, e * mpmath.mpf(q) ** k, mpmath.re(mass)))
    return entries


def enumerate_atoms(params: AwPolyParams) -> list[Atom]:
    """All atoms generated by real parameters e with |e q^k| >= 1."""
    atoms: list[Atom] = []
    with mpmath.workprec(qseries.current_precision()):
        for slot, k, v, mass in atom_entries(params):
            atoms.append(
                Atom(location=float((v + 1 / v) / 2), mass=float(mass), generator=Generator(slot), k=k, value=float(v))
            )
    return atoms


def density_constant(params: AwPolyParams) -> float:
    """K = (q, ab, ac, ad, bc, bd, cd)_inf / (abcd)_inf."""
    q = params.q
    with mpmath.workprec(qseries.current_precision()):
        v = _mp_values(params)
        a, b, c, d = v["a"], v["b"], v["c"], v["d"]
        num = _poch_product((q, a * b, a * c, a * d, b * c, b * d, c * d), q)
        den = qseries.qpoch_infinite(a * b * c * d, q)
        if abs(den) < settings.singular_tol:
            raise LabError(ErrorCode.DIVISION_BY_ZERO, "(abcd)_inf vanishes")
        return float(mpmath.re(num / den))


def density_shape(params: AwPolyParams, theta: np.ndarray) -> np.ndarray:
    """|(e^{2i theta})_inf / prod_e (e e^{i theta})_inf|^2 on an array of angles."""
    z = np.exp(1j * np.asarray(theta, dtype=float))
    ratio = qseries.qpoch_infinite_array(z * z, params.q)
    for value in params.values():
        if value != 0:
            ratio = ratio / qseries.qpoch_infinite_array(value * z, params.q)
    return np.abs(ratio) ** 2


def _evaluate(g: Callable, x: np.ndarray) -> np.ndarray:
    values = np.asarray(g(x), dtype=float)
    if values.shape != np.shape(x):
        values = np.array([float(g(float(xi))) for xi in np.ravel(x)]).reshape(np.shape(x))
    return values


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _support_summary(atoms: list[Atom], has_continuous: bool) -> tuple[float, Optional[float]]:
    floor = settings.mass_floor
    points = sorted({atom.location for atom in atoms if abs(atom.mass) > floor}, reverse=True)
    if has_continuous:
        points = sorted(set(points) | {1.0}, reverse=True)
    if not points:
        raise LabError(ErrorCode.MASS_CHECK_FAILED, "measure has empty support")
    top = points[0]
    below = [p for p in points[1:] if p < top]
    second = below[0] if below else None
    if has_continuous and top <= 1.0:
        # the continuous part accumulates at the top point itself
        second = None
    return top, second


def build_measure(quadruple: AwPolyParams, tol: Optional[float] = None) -> AwSignedMeasure:
    """Atoms, continuous part and support summary of nu(dx; a, b, c, d)."""
    tol = settings.mass_tol if tol is None else tol
    report = check_admissible(quadruple)
    if not report.passed:
        failed = ", ".join(f"({c.condition}) margin={c.margin:.3g}" for c in report.failed())
        raise LabError(ErrorCode.INADMISSIBLE, f"parameters violate {failed}", {"report": report.model_dump()})
    quad = AwQuadruple(**{**quadruple.model_dump(include={"a", "b", "c", "d", "q", "conjugate"}), "admissibility": report})

    atoms = enumerate_atoms(quad)
    K = density_constant(quad)
    has_continuous = abs(K) > settings.mass_floor
    continuous_mass = 0.0
    if has_continuous:
        rule = adaptive_rule(lambda th: density_shape(quad, th), 0.0, math.pi, settings.quad_tol)
        continuous_mass = K / (2 * math.pi) * float(rule.apply(density_shape(quad, rule.nodes)))
    top, second = _support_summary(atoms, has_continuous)

    measure = AwSignedMeasure(
        quadruple=quad,
        atoms=atoms,
        has_continuous=has_continuous,
        density_sign=int(np.sign(K)) if has_continuous else 0,
        density_constant=K if has_continuous else 0.0,
        continuous_mass=continuous_mass,
        support_top=top,
        support_second=second,
        tol=tol,
    )
    total = measure.total_mass
    scale = max(1.0, sum(abs(a.mass) for a in atoms) + abs(continuous_mass))
    if abs(total - 1.0) > tol * scale:
        raise LabError(
            ErrorCode.MASS_CHECK_FAILED,
            f"total mass {total!r} deviates from 1 (scale {scale:.3g})",
        )
    logger.debug(f"Built measure with {len(atoms)} atoms, K={K:.6g}, total={total:.15g}")
    return measure


def point_mass(x: float, source: Optional[float] = None) -> AwSignedMeasure:
    """delta_x, the s = t kernel."""
    return AwSignedMeasure(
        atoms=[Atom(location=x, mass=1.0, generator=Generator.POINT, value=source)],
        support_top=x,
    )


# ---------------------------------------------------------------------------
# Evaluation and integration
# ---------------------------------------------------------------------------


def density_at(measure: AwSignedMeasure, x: float, prec: Optional[int] = None) -> float:
    """Continuous density f(x) for |x| < 1, at the build precision or `prec` bits."""
    if abs(x) >= 1:
        raise LabError(ErrorCode.DOMAIN, f"density is defined on (-1, 1), got x={x}")
    if not measure.has_continuous or measure.quadruple is None:
        return 0.0
    params = measure.quadruple
    bits = prec or qseries.current_precision()
    with qseries.working_precision(bits), mpmath.workprec(bits):
        K = density_constant(params) if prec else mpmath.mpf(measure.density_constant)
        theta = mpmath.acos(x)
        z = mpmath.expj(theta)
        ratio = qseries.qpoch_infinite(z * z, params.q, settings.series_tol)
        for value in _mp_values(params).values():
            if value != 0:
                ratio /= qseries.qpoch_infinite(value * z, params.q, settings.series_tol)
        return float(K * abs(ratio) ** 2 / (2 * mpmath.pi * mpmath.sqrt(1 - mpmath.mpf(x) ** 2)))


def continuous_rule(measure: AwSignedMeasure, degree: int = 4, tol: Optional[float] = None) -> QuadratureRule:
    """Theta rule adapted to f(cos theta) cos^k(theta), k <= degree."""
    params = measure.quadruple
    powers = np.arange(degree + 1)[:, None]

    def moments(th):
        return density_shape(params, th) * np.cos(th)[None, :] ** powers

    return adaptive_rule(moments, 0.0, math.pi, tol)


def integrate(measure: AwSignedMeasure, g: Callable, tol: Optional[float] = None) -> float:
    """Sum over atoms of p g(y) plus the integral of f g over (-1, 1)."""
    total = 0.0
    if measure.atoms:
        locations = np.array([atom.location for atom in measure.atoms])
        masses = np.array([atom.mass for atom in measure.atoms])
        total += float(masses @ _evaluate(g, locations))
    if measure.has_continuous:
        params = measure.quadruple
        rule = adaptive_rule(lambda th: density_shape(params, th) * _evaluate(g, np.cos(th)), 0.0, math.pi, tol)
        values = density_shape(params, rule.nodes) * _evaluate(g, np.cos(rule.nodes))
        total += measure.density_constant / (2 * math.pi) * float(rule.apply(values))
    return total


def continuous_points(
    measure: AwSignedMeasure, degree: int = 4, tol: Optional[float] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Points x = cos(theta) and signed weights integrating the continuous part."""
    if not measure.has_continuous:
        return np.zeros(0), np.zeros(0)
    rule = continuous_rule(measure, degree, tol)
    scale = measure.density_constant / (2 * math.pi)
    return np.cos(rule.nodes), scale * rule.weights * density_shape(measure.quadruple, rule.nodes)


def discretize(measure: AwSignedMeasure, degree: int = 4, tol: Optional[float] = None) -> DiscreteRule:
    """Signed point rule: support atoms plus a theta rule for the continuous part."""
    floor = settings.mass_floor
    kept = [atom for atom in measure.atoms if abs(atom.mass) > floor]
    points = [atom.location for atom in kept]
    weights = [atom.mass for atom in kept]
    sources = [atom.value if atom.value is not None else math.nan for atom in kept]
    nodes, node_weights = continuous_points(measure, degree, tol)
    points.extend(nodes)
    weights.extend(node_weights)
    sources.extend([math.nan] * nodes.size)
    return DiscreteRule(np.array(points, dtype=float), np.array(weights, dtype=float), np.array(sources, dtype=float))


def total_variation(measure: AwSignedMeasure) -> float:
    """Sum of |atom masses| plus |continuous mass| (the density has one sign)."""
    if measure.has_continuous:
        theta = math.pi * (np.arange(50) + 0.5) / 50
        values = measure.density_constant * density_shape(measure.quadruple, theta)
        if not np.all(np.isfinite(values)):
            raise LabError(ErrorCode.SIGN_INCONSISTENT, "non-finite density samples")
        signs = set(np.sign(values[values != 0]).astype(int).tolist())
        if signs - {measure.density_sign}:
            raise LabError(ErrorCode.SIGN_INCONSISTENT, f"density signs {sorted(signs)} on (-1, 1)")
    return sum(abs(atom.mass) for atom in measure.atoms) + abs(measure.continuous_mass)


def in_support(measure: AwSignedMeasure, x: float, tol: float = 1e-10) -> bool:
    if measure.has_continuous and -1.0 - tol <= x <= 1.0 + tol:
        return True
    return any(
        abs(atom.location - x) <= tol * max(1.0, abs(x))
        for atom in measure.support_atoms(settings.mass_floor)
    )


def measure_support(measure: AwSignedMeasure) -> tuple[list[float], bool]:
    """Atom locations in the support (descending) and whether [-1, 1] belongs to it."""
    locations = sorted((atom.location for atom in measure.support_atoms(settings.mass_floor)), reverse=True)
    return locations, measure.has_continuous


def measure_to_dict(measure: AwSignedMeasure) -> dict:
    return measure.model_dump()


def measure_from_dict(data: dict) -> AwSignedMeasure:
    return AwSignedMeasure.model_validate(data)


# ---------------------------------------------------------------------------
# Time-indexed measures
# ---------------------------------------------------------------------------


def pi_marginal(A: float, B: float, C: float, D: float, q: float, t: float, tol: Optional[float] = None) -> AwSignedMeasure:
    """pi_t = nu(A sqrt t, B sqrt t, C / sqrt t, D / sqrt t)."""
    return build_measure(qseries.marginal_params(A, B, C, D, q, t), tol)


def kernel_quadruple(spec: KernelSpec) -> AwPolyParams:
    """(A sqrt t, B sqrt t, sqrt(s/t) v, sqrt(s/t) / v) with x = (v + 1/v)/2."""
    root_t = math.sqrt(spec.t)
    r = math.sqrt(spec.s / spec.t)
    a, b = spec.A * root_t, spec.B * root_t
    if spec.source is not None and not math.isnan(spec.source) and abs(spec.source) >= 1:
        return AwPolyParams(a=a, b=b, c=r * spec.source, d=r / spec.source, q=spec.q)
    x = spec.x
    if abs(x) <= 1:
        return AwPolyParams(a=a, b=b, c=r * x, d=r * math.sqrt(1.0 - x * x), q=spec.q, conjugate=True)
    v = x + math.copysign(math.sqrt(x * x - 1.0), x)
    return AwPolyParams(a=a, b=b, c=r * v, d=r / v, q=spec.q)


def transition_kernel(spec: KernelSpec, support: Optional[AwSignedMeasure] = None) -> AwSignedMeasure:
    """P_{s,t}(x, .); `support` (the measure at time s) is checked when given."""
    if support is not None and not in_support(support, spec.x):
        raise LabError(ErrorCode.X_NOT_IN_SUPPORT, f"x={spec.x} is not in the support at s={spec.s}")
    if spec.s == spec.t:
        return point_mass(spec.x, spec.source)
    return build_measure(kernel_quadruple(spec))
