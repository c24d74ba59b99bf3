"""Named checks binding each identity of the model to a residual and a threshold.

Every check is a function of one parameter point (a plain dict) that returns
a residual; a report PASSes when the residual is at most the threshold.
:data:`CLAIM_MANIFEST` lists the claims the suite covers and the checks that
test them.
"""

import itertools
import logging
import math
import time
from functools import partial
from typing import Callable, Iterable, NamedTuple, Optional, Union

import mpmath
import numpy as np

from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError
from aseplab.models import (
    AwPolyParams,
    BinaryMeasure,
    BoundaryParams,
    CheckReport,
    CheckStatus,
    Factor,
    GridSide,
    KernelSpec,
    MultiAwSpec,
    OpenAsepRates,
    Phase,
    Region,
    Statistic,
    Which,
)
from aseplab.services import asep_exact, asep_mc, aw_measure, aw_multi, limits, qseries

logger = logging.getLogger(__name__)


class SkipCheck(Exception):
    """The point lies outside the hypotheses of the checked identity."""


class CheckDefinition(NamedTuple):
    name: str
    func: Callable[[dict], float]
    threshold: float
    grid: tuple[dict, ...]


_REGISTRY: dict[str, CheckDefinition] = {}


def check(name: str, threshold: float, grid: Iterable[dict]):
    def register(func: Callable[[dict], float]) -> Callable[[dict], float]:
        _REGISTRY[name] = CheckDefinition(name, func, threshold, tuple(grid))
        return func

    return register


def check_names() -> list[str]:
    return sorted(_REGISTRY)


def default_grid(name: str) -> tuple[dict, ...]:
    return _lookup(name).grid


def _lookup(name: str) -> CheckDefinition:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise LabError(ErrorCode.UNKNOWN_CHECK, f"unknown check {name!r}; known: {', '.join(check_names())}") from None


# ---------------------------------------------------------------------------
# Point helpers
# ---------------------------------------------------------------------------


def _params(point: dict) -> BoundaryParams:
    return BoundaryParams(
        A=point["A"], B=point.get("B", 0.0), C=point["C"], D=point.get("D", 0.0), q=point.get("q", 0.0)
    )


def _quadruple(point: dict) -> AwPolyParams:
    return AwPolyParams(a=point["a"], b=point["b"], c=point["c"], d=point["d"], q=point.get("q", 0.0))


def _relative(value: float, reference: float) -> float:
    return abs(value - reference) / max(1.0, abs(reference))


def _support_points(measure) -> list[tuple[float, Optional[float]]]:
    points = [(atom.location, atom.value) for atom in measure.support_atoms(settings.mass_floor)]
    if measure.has_continuous:
        points.extend((x, None) for x in (-0.9, -0.4, 0.0, 0.4, 0.9))
    return points


# ---------------------------------------------------------------------------
# Askey-Wilson measures
# ---------------------------------------------------------------------------

QUADRUPLES = (
    {"a": 0.0, "b": 0.0, "c": 0.0, "d": 0.0, "q": 0.5},
    {"a": 0.5, "b": -0.5, "c": 0.4, "d": 0.0, "q": 0.5},
    {"a": 2.0, "b": 0.0, "c": 0.0, "d": 0.0, "q": 0.0},
    {"a": 2.0, "b": -0.5, "c": 0.3, "d": -0.2, "q": 0.5},
    {"a": 3.0, "b": 0.0, "c": 0.5, "d": 0.0, "q": 0.5},
    {"a": 2.0, "b": -0.5, "c": 1.5, "d": -0.2, "q": 0.3},
    {"a": -2.438, "b": 0.68, "c": -2.348, "d": 0.255, "q": 0.0},
    {"a": -2.544, "b": 0.441, "c": -2.747, "d": 0.359, "q": 0.5},
)
SAMPLED = {"samples": 200, "seed": 17}
SAMPLE_MARGIN = 0.05


def _well_separated(quad: AwPolyParams) -> bool:
    """Admissible, with every condition margin and every |e q^k| - 1 at least SAMPLE_MARGIN."""
    report = aw_measure.check_admissible(quad)
    if not report.passed or any(condition.margin < SAMPLE_MARGIN for condition in report.conditions):
        return False
    for value in quad.real_values().values():
        size = abs(value)
        while size >= 0.5:
            if abs(size - 1.0) < SAMPLE_MARGIN:
                return False
            if quad.q == 0:
                break
            size *= quad.q
    return True


def sampled_quadruples(count: int, seed: int = 0) -> list[AwPolyParams]:
    """Seeded random admissible quadruples with up to two atoms per large parameter."""
    rng = np.random.default_rng(seed)
    quadruples: list[AwPolyParams] = []
    attempts = 0
    while len(quadruples) < count and attempts < 50 * count:
        attempts += 1
        a, c = rng.uniform(-2.8, 2.8, 2)
        b, d = rng.uniform(-0.7, 0.7, 2)
        quad = AwPolyParams(a=float(a), b=float(b), c=float(c), d=float(d), q=float(rng.choice([0.0, 0.3, 0.5])))
        if _well_separated(quad):
            quadruples.append(quad)
    if len(quadruples) < count:
        raise LabError(ErrorCode.DOMAIN, f"only {len(quadruples)} of {count} sampled quadruples are admissible")
    return quadruples


def _measure_points(point: dict) -> list[AwPolyParams]:
    if "samples" in point:
        return sampled_quadruples(point["samples"], point.get("seed", 0))
    return [_quadruple(point)]


def _mass_residual(quad: AwPolyParams) -> float:
    measure = aw_measure.build_measure(quad)
    with mpmath.workprec(qseries.current_precision()):
        atoms = mpmath.fsum(mass for *_, mass in aw_measure.atom_entries(quad))
        return float(abs(atoms + measure.continuous_mass - 1))


@check("mass_one", 1e-8, (*QUADRUPLES, SAMPLED))
def check_mass_one(point: dict) -> float:
    return max(_mass_residual(quad) for quad in _measure_points(point))


def _orthogonality_residual(quad: AwPolyParams, j_max: int) -> float:
    """Largest |Gram - diag(h)| entry scaled by sqrt(max(1, |h_j|) max(1, |h_k|)).

    Atoms enter at the working precision; the continuous part has one sign and
    is summed in floats.
    """
    measure = aw_measure.build_measure(quad)
    size = j_max + 1
    nodes, node_weights = aw_measure.continuous_points(measure, degree=2 * j_max)
    values = np.array([np.asarray(qseries.aw_polynomial(j, nodes, quad), dtype=float) for j in range(size)])
    continuous = (values * node_weights) @ values.T if nodes.size else np.zeros((size, size))
    with mpmath.workprec(qseries.current_precision()):
        gram = mpmath.matrix(continuous.tolist())
        for _, _, v, mass in aw_measure.atom_entries(quad):
            w = qseries.aw_polynomials_mp(j_max, (v + 1 / v) / 2, quad)
            for j, k in itertools.product(range(size), repeat=2):
                gram[j, k] += mass * w[j] * w[k]
        norms = [qseries.aw_norm_mp(j, quad) for j in range(size)]
        worst = mpmath.mpf(0)
        for j, k in itertools.product(range(size), repeat=2):
            target = norms[j] if j == k else 0
            scale = mpmath.sqrt(max(1, abs(norms[j])) * max(1, abs(norms[k])))
            worst = max(worst, abs(gram[j, k] - target) / scale)
        return float(worst)


@check("orthogonality", 1e-8, (*({**quad, "j_max": 6} for quad in QUADRUPLES), {**SAMPLED, "j_max": 6}))
def check_orthogonality(point: dict) -> float:
    j_max = point.get("j_max", 6)
    return max(_orthogonality_residual(quad, j_max) for quad in _measure_points(point))


KERNEL_POINTS = (
    {"A": 2.5, "B": -0.3, "C": 0.5, "D": -0.2, "q": 0.5, "s": 1.02, "t": 1.07},
    {"A": 0.5, "B": 0.0, "C": 3.0, "D": 0.0, "q": 0.5, "s": 1.0, "t": 1.05},
    {"A": 0.6, "B": -0.4, "C": 0.8, "D": -0.1, "q": 0.0, "s": 1.01, "t": 1.09},
)


def _p_value(j: int, A: float, B: float, C: float, D: float, q: float, t: float, y):
    return qseries.p_polynomial(j, y, A, B, C, D, q, t)


@check("projection", 1e-8, ({**point, "j_max": 5} for point in KERNEL_POINTS))
def check_projection(point: dict) -> float:
    A, B, C, D, q = _params(point).as_tuple()
    s, t = point["s"], point["t"]
    worst = 0.0
    for x, source in _support_points(aw_measure.pi_marginal(A, B, C, D, q, s)):
        kernel = aw_measure.transition_kernel(KernelSpec(A=A, B=B, q=q, s=s, t=t, x=x, source=source))
        for j in range(point.get("j_max", 5) + 1):
            lhs = aw_measure.integrate(kernel, partial(_p_value, j, A, B, C, D, q, t))
            rhs = float(_p_value(j, A, B, C, D, q, s, x))
            worst = max(worst, _relative(lhs, rhs))
    return worst


@check("kernel_support", 0.0, KERNEL_POINTS)
def check_kernel_support(point: dict) -> float:
    A, B, C, D, q = _params(point).as_tuple()
    s, t = point["s"], point["t"]
    start = aw_measure.pi_marginal(A, B, C, D, q, s)
    end = aw_measure.pi_marginal(A, B, C, D, q, t)
    outside = 0
    for x, source in _support_points(start):
        kernel = aw_measure.transition_kernel(KernelSpec(A=A, B=B, q=q, s=s, t=t, x=x, source=source), support=start)
        outside += sum(
            not aw_measure.in_support(end, atom.location, 1e-9) for atom in kernel.support_atoms(settings.mass_tol)
        )
        outside += int(kernel.has_continuous and not end.has_continuous)
    return float(outside)


@check(
    "time_reversal",
    1e-8,
    (
        {"A": 0.5, "B": -0.2, "C": 0.4, "D": -0.1, "q": 0.5, "times": [1.0, 1.05], "seed": 11, "backend": "nested"},
        {"A": 1.5, "B": 0.0, "C": 0.3, "D": 0.0, "q": 0.5, "times": [1.0, 1.04], "seed": 12, "backend": "nested"},
        {"A": 0.5, "B": -0.2, "C": 0.4, "D": -0.1, "q": 0.5, "times": [1.0, 1.03, 1.08], "seed": 13, "backend": "projection"},
    ),
)
def check_time_reversal(point: dict) -> float:
    A, B, C, D, q = _params(point).as_tuple()
    spec = MultiAwSpec(A=A, B=B, C=C, D=D, q=q, times=tuple(point["times"]))
    dual = spec.reversed_dual()
    backend = point.get("backend", "nested")
    rng = np.random.default_rng(point.get("seed", 0))
    forward_cache = aw_multi.KernelCache(spec.A, spec.B, spec.q)
    backward_cache = aw_multi.KernelCache(dual.A, dual.B, dual.q)
    worst = 0.0
    for _ in range(point.get("functionals", 20)):
        factors = [Factor.affine(rng.uniform(0.5, 1.5), rng.uniform(-1.0, 1.0)) for _ in spec.times]
        if backend == "nested":
            forward = aw_multi.multi_integrate_nested(spec, factors, forward_cache)
            backward = aw_multi.multi_integrate_nested(dual, factors[::-1], backward_cache)
        else:
            forward = aw_multi.multi_integrate(spec, factors, backend)
            backward = aw_multi.multi_integrate(dual, factors[::-1], backend)
        worst = max(worst, _relative(forward, backward))
    return worst


@check(
    "kernel_tv_exponent",
    2.1,
    ({"A": 2.5, "B": 0.0, "C": 1.5, "D": 0.0, "q": 0.5, "s": 1.0, "k": 1},),
)
def check_kernel_tv_exponent(point: dict) -> float:
    """Minus the log-log slope of TV(P_{s,s+h}(x, .)) against h, x an atom of U_s."""
    A, B, _, _, q = _params(point).as_tuple()
    s = point["s"]
    source = A * math.sqrt(s) * q ** point.get("k", 1)
    if source <= 1.0:
        raise SkipCheck(f"A sqrt(s) q^k = {source} does not generate an atom")
    x = (source + 1.0 / source) / 2.0
    gaps = 2.0 ** -np.arange(3, 11)
    tvs = [
        aw_measure.total_variation(
            aw_measure.transition_kernel(KernelSpec(A=A, B=B, q=q, s=s, t=s + gap, x=x, source=source))
        )
        for gap in gaps
    ]
    slope = np.polyfit(np.log(gaps), np.log(tvs), 1)[0]
    return float(-slope)


RESONANT_D = tuple(-(2.0 ** l) / 5.4 for l in range(3))


@check(
    "atom_ratio",
    10.0,
    (
        {
            "A": 3.0, "B": -0.9, "C": 2.0, "q": 0.5,
            "far": [0.0, -0.1, -0.28, -0.55, -0.9],
            "near": [d + shift for d in RESONANT_D for shift in (-1e-3, 1e-3)],
        },
    ),
)
def check_atom_ratio(point: dict) -> float:
    """Largest near-resonant value of ||pi_1|| (1 - BD) / |pi_1({y_0})| over the largest far one."""
    A, B, C, q = point["A"], point["B"], point["C"], point["q"]

    def ratio(D: float) -> float:
        base = aw_measure.pi_marginal(A, B, C, D, q, 1.0)
        top = max(base.support_atoms(settings.mass_floor), key=lambda atom: atom.location)
        return aw_measure.total_variation(base) * (1.0 - B * D) / abs(top.mass)

    far = [ratio(D) for D in point["far"]]
    near = [ratio(D) for D in point["near"]]
    logger.debug(f"atom_ratio fitted constant {max(far + near):.4g}")
    return max(near) / max(far)


# ---------------------------------------------------------------------------
# Exact stationary measures
# ---------------------------------------------------------------------------

CELL_POINTS = (
    {"A": 3.0, "B": 0.0, "C": 0.6, "D": 0.0, "q": 0.5},  # HD shock
    {"A": 1.5, "B": -0.2, "C": 0.4, "D": 0.0, "q": 0.5},  # HD fan
    {"A": 0.5, "B": 0.0, "C": 1.5, "D": -0.3, "q": 0.5},  # LD fan
    {"A": 0.6, "B": 0.0, "C": 3.0, "D": 0.0, "q": 0.5},  # LD shock
)


@check(
    "characterization",
    1e-6,
    (
        *({**point, "n": 6, "m": 2, "backend": "projection"} for point in CELL_POINTS),
        {"A": 3.0, "B": 0.0, "C": 0.5, "D": 0.0, "q": 0.0, "n": 5, "m": 2, "backend": "projection"},
        {"A": 3.0, "B": 0.0, "C": 0.6, "D": 0.0, "q": 0.5, "n": 4, "m": 1, "backend": "nested"},
    ),
)
def check_characterization(point: dict) -> float:
    params = _params(point)
    n, m = point["n"], point["m"]
    backend = point.get("backend")
    grid = limits.node_grid(m, limits.epsilon_rule(params.A, params.B, params.C, params.q), GridSide.AT_OR_ABOVE_ONE)
    exact = asep_exact.marginal(asep_exact.stationary_from_params(n, params), Which.LAST, m)
    worst = 0.0
    for bits in itertools.product((0, 1), repeat=m):
        t = grid.selection(bits)
        identity = asep_exact.characterization_gf(params, n, t, backend)
        if not identity.applicability.applicable:
            raise SkipCheck(f"identity hypotheses fail: {identity.applicability.model_dump()}")
        lhs = asep_exact.generating_function(exact, t)
        worst = max(worst, abs(lhs - identity.value) / abs(lhs))
    return worst


@check(
    "particle_hole",
    1e-10,
    (
        {**CELL_POINTS[0], "n": 6},
        {**CELL_POINTS[2], "n": 8},
        {"A": 2.0, "B": -0.3, "C": 0.7, "D": -0.4, "q": 0.0, "n": 5},
    ),
)
def check_particle_hole(point: dict) -> float:
    params = _params(point)
    n = point["n"]
    mu = asep_exact.stationary_from_params(n, params)
    nu = asep_exact.stationary_from_params(n, params.dual())
    return float(np.max(np.abs(asep_exact.particle_hole_dual(mu).weights - nu.weights)))


@check("sandwich", 1e-12, ({"n": 6, "pairs": 20, "seed": 7},))
def check_sandwich(point: dict) -> float:
    """Largest violation of E'[prod t^tau] <= E''[prod t^tau] over random ordered rate pairs."""
    rng = np.random.default_rng(point.get("seed", 0))
    n = point["n"]
    worst = 0.0
    for _ in range(point.get("pairs", 20)):
        q = float(rng.uniform(0.0, 0.8))
        alpha = np.sort(rng.uniform(0.1, 2.0, 2))
        beta = np.sort(rng.uniform(0.1, 2.0, 2))
        gamma = np.sort(rng.uniform(0.0, 1.0, 2))
        delta = np.sort(rng.uniform(0.0, 1.0, 2))
        lower = OpenAsepRates(alpha=alpha[0], beta=beta[1], gamma=gamma[1], delta=delta[0], q=q)
        upper = OpenAsepRates(alpha=alpha[1], beta=beta[0], gamma=gamma[0], delta=delta[1], q=q)
        t = rng.choice([1.0, 1.2], size=n)
        difference = asep_exact.generating_function(
            asep_exact.stationary_measure(n, lower), t
        ) - asep_exact.generating_function(asep_exact.stationary_measure(n, upper), t)
        worst = max(worst, difference)
    return worst


@check(
    "continuity",
    1e-3,
    (
        {**CELL_POINTS[1], "n": 8},
        {"A": 0.5, "B": 0.0, "C": 0.5, "D": -0.5, "q": 0.0, "n": 6},
    ),
)
def check_continuity(point: dict) -> float:
    params = _params(point)
    shifted = params.model_copy(update={"D": params.D - 1e-6})
    n = point["n"]
    before = asep_exact.stationary_from_params(n, params)
    after = asep_exact.stationary_from_params(n, shifted)
    return float(np.max(np.abs(before.weights - after.weights)))


@check("reparameterization", 1e-12, ({"count": 50, "seed": 3},))
def check_reparameterization(point: dict) -> float:
    rng = np.random.default_rng(point.get("seed", 0))
    worst = abs(asep_exact.rates_to_boundary(OpenAsepRates(alpha=1.0, beta=0.25)).A - 3.0) / 3.0
    for _ in range(point.get("count", 50)):
        rates = OpenAsepRates(
            alpha=rng.uniform(0.05, 2.0),
            beta=rng.uniform(0.05, 2.0),
            gamma=rng.uniform(0.0, 1.0),
            delta=rng.uniform(0.0, 1.0),
            q=rng.uniform(0.0, 0.9),
        )
        back = asep_exact.boundary_to_rates(asep_exact.rates_to_boundary(rates))
        for field in ("alpha", "beta", "gamma", "delta"):
            worst = max(worst, _relative(getattr(back, field), getattr(rates, field)))
    return worst


PHASE_CASES = (
    (3.0, 0.5, Phase.HD, Region.SHOCK),
    (0.5, 0.5, Phase.MC, Region.FAN),
    (2.0, 0.5, Phase.HD, Region.BOUNDARY),
    (2.0, 0.4, Phase.HD, Region.FAN),
    (2.0, 0.75, Phase.HD, Region.SHOCK),
    (0.4, 2.0, Phase.LD, Region.FAN),
    (0.75, 2.0, Phase.LD, Region.SHOCK),
    (0.5, 3.0, Phase.LD, Region.SHOCK),
    (0.3, 2.0, Phase.LD, Region.FAN),
    (1.0, 0.4, Phase.BOUNDARY, Region.FAN),
    (2.0, 2.0, Phase.BOUNDARY, Region.SHOCK),
)


@check("phase_diagram", 0.0, ({"q": 0.5}, {"q": 0.0}))
def check_phase_diagram(point: dict) -> float:
    wrong = 0
    for A, C, phase, region in PHASE_CASES:
        info = asep_exact.classify_phase(A, C, point.get("q", 0.0))
        wrong += int(info.phase != phase or info.region != region)
        if info.theta is not None:
            wrong += int(not 0.0 < info.theta < 1.0)
    return float(wrong)


# ---------------------------------------------------------------------------
# Limits
# ---------------------------------------------------------------------------


@check(
    "bernoulli_iff",
    1e-9,
    (
        {"A": 2.0, "C": 0.5, "q": 0.5, "m": 2, "n_max": 10},
        {"A": 2.0, "C": 0.4, "q": 0.5, "m": 2},
        {"A": 2.0, "C": 0.75, "q": 0.5, "m": 2},
    ),
)
def check_bernoulli_iff(point: dict) -> float:
    """On AC = 1: distance of mu_n and lambda_m to Ber(A/(1+A)).

    Elsewhere 1e-13 over the distance of lambda_m to the product of its one-site
    marginals, which passes once that distance exceeds 1e-4.
    """
    params = _params(point)
    m = point.get("m", 2)
    lam = limits.lambda_measure(params, m)
    if asep_exact.region_of(params.A, params.C) == Region.BOUNDARY:
        rho = params.A / (1.0 + params.A)
        worst = limits.tv_distance(lam, limits.bernoulli_product(m, rho))
        for n in range(1, point.get("n_max", 10) + 1):
            mu = asep_exact.stationary_from_params(n, params)
            worst = max(worst, limits.tv_distance(mu, limits.bernoulli_product(n, rho)))
        return worst
    distance = limits.product_approximation_distance(lam)
    return 1e-13 / max(distance, 1e-300)


@check(
    "eta_limit",
    1e-8,
    (
        {**CELL_POINTS[0], "m": 2, "mode": "bernoulli"},
        {**CELL_POINTS[1], "m": 2, "mode": "bernoulli"},
        {**CELL_POINTS[3], "m": 2, "mode": "consistency"},
    ),
)
def check_eta_limit(point: dict) -> float:
    params = _params(point)
    m = point.get("m", 2)
    if point.get("mode") == "consistency":
        # eta_m is a last-m limit, so consistency drops the leftmost site
        larger = limits.eta_measure(params, m + 1)
        return limits.tv_distance(asep_exact.marginal(larger, Which.LAST, m), limits.eta_measure(params, m))
    if asep_exact.phase_of(params.A, params.C) != Phase.HD:
        raise SkipCheck("eta_m is a product measure only in the high density phase")
    rho = params.A / (1.0 + params.A)
    return limits.tv_distance(limits.eta_measure(params, m), limits.bernoulli_product(m, rho))


@check("lambda_consistency", 1e-8, ({**CELL_POINTS[0], "m": 2}, {**CELL_POINTS[1], "m": 2}))
def check_lambda_consistency(point: dict) -> float:
    params = _params(point)
    m = point.get("m", 2)
    larger = limits.lambda_measure(params, m + 1)
    return limits.tv_distance(asep_exact.marginal(larger, Which.FIRST, m), limits.lambda_measure(params, m))


@check("duality_bridge", 1e-8, ({**CELL_POINTS[0], "m": 2}, {**CELL_POINTS[1], "m": 2}))
def check_duality_bridge(point: dict) -> float:
    params = _params(point)
    m = point.get("m", 2)
    lam = limits.lambda_measure(params, m)
    eta = limits.eta_measure(params.dual(), m)
    return limits.tv_distance(lam, asep_exact.particle_hole_dual(eta))


def _decay_residual(point: dict) -> float:
    """max of: late two-step ratio over 1.2 theta^2, final tv over cap_constant * theta^n, 2 on any increase."""
    params = _params(point)
    result = limits.convergence_scan(params, point["n_list"], point.get("m", 2))
    tvs = [row.tv for row in result.rows]
    ratios = [later / earlier for earlier, later in zip(tvs[-3:], tvs[-2:]) if earlier > 0]
    residual = max(ratios, default=0.0) / (1.2 * result.theta ** 2)
    if "cap_constant" in point:
        cap = point["cap_constant"] * result.theta ** result.rows[-1].n
        residual = max(residual, tvs[-1] / cap)
    if any(later > earlier for earlier, later in zip(tvs, tvs[1:])):
        residual = max(residual, 2.0)
    return residual


@check(
    "ld_convergence",
    1.0,
    ({"A": 0.5, "B": 0.0, "C": 3.0, "D": 0.0, "q": 0.5, "m": 2, "n_list": [4, 6, 8, 10, 12], "cap_constant": 0.1},),
)
def check_ld_convergence(point: dict) -> float:
    return _decay_residual(point)


@check(
    "hd_convergence",
    1.0,
    ({"A": 3.0, "B": 0.0, "C": 0.6, "D": 0.0, "q": 0.5, "m": 2, "n_list": [4, 6, 8, 10, 12]},),
)
def check_hd_convergence(point: dict) -> float:
    return _decay_residual(point)


@check(
    "theta",
    1e-10,
    (
        {"A": 3.0, "C": 0.0, "q": 0.01, "expected": 0.75},
        {"A": 3.0, "C": 0.0, "q": 0.5, "expected": 25.0 / 32.0},
        {"A": 0.0, "C": 3.0, "q": 0.5, "expected": 25.0 / 32.0},
    ),
)
def check_theta(point: dict) -> float:
    return abs(limits.theta_from_support(_params(point)) - point["expected"])


@check(
    "budget",
    0.0,
    (
        {"theta": 0.5, "H": 1.0},
        {"theta": 0.5, "H": 10.0},
        {"theta": 0.75, "H": 1.0},
        {"theta": 0.75, "H": 10.0},
    ),
)
def check_budget(point: dict) -> float:
    """log10 of the sequence at n_max above -6, or +inf without a monotone tail."""
    report = limits.budget_report(point["theta"], point["H"], point.get("n_max", 10_000))
    if report.N is None:
        return math.inf
    return max(0.0, report.final_log10 + 6.0)


@check(
    "tv_atom_bound",
    1.0,
    ({**CELL_POINTS[0], "n": 12}, {**CELL_POINTS[3], "n": 12}),
)
def check_tv_atom_bound(point: dict) -> float:
    """theta^n ||pi_1|| / |pi_1({y_0})|; below 1 the quotient bound on the generating functions applies."""
    params = _params(point)
    A, B, C, D, q = params.as_tuple()
    base = aw_measure.pi_marginal(A, B, C, D, q, 1.0)
    top = max(base.support_atoms(settings.mass_floor), key=lambda atom: atom.location)
    theta = limits.theta_from_support(params)
    return theta ** point["n"] * aw_measure.total_variation(base) / abs(top.mass)


def _random_measure(rng: np.random.Generator, m: int) -> BinaryMeasure:
    return BinaryMeasure(m=m, weights=rng.dirichlet(np.full(2 ** m, 0.5)))


@check("gf_tv_bound", 1e-12, ({"m_max": 4, "pairs": 100, "seed": 5},))
def check_gf_tv_bound(point: dict) -> float:
    """Largest excess of tv over the generating-function bound, and the m = 1 worked example."""
    rng = np.random.default_rng(point.get("seed", 0))
    half = BinaryMeasure(m=1, weights=[0.5, 0.5])
    empty = BinaryMeasure(m=1, weights=[1.0, 0.0])
    worst = abs(limits.gf_tv_bound(half, empty, [(1.0, 2.0)]) - 0.75)
    for m in range(1, point.get("m_max", 4) + 1):
        for _ in range(point.get("pairs", 100)):
            mu, nu = _random_measure(rng, m), _random_measure(rng, m)
            lows = rng.uniform(0.1, 2.0, m)
            grid = [(float(lo), float(lo + gap)) for lo, gap in zip(lows, rng.uniform(0.1, 2.0, m))]
            worst = max(worst, limits.tv_distance(mu, nu) - limits.gf_tv_bound(mu, nu, grid))
    return worst


MC_POINTS = (
    {"A": 3.0, "B": 0.0, "C": 0.6, "D": 0.0, "q": 0.5},
    {"A": 0.5, "B": 0.0, "C": 0.5, "D": 0.0, "q": 0.0},
    {"A": 0.6, "B": -0.2, "C": 3.0, "D": -0.1, "q": 0.3},
)


@check("mc_crosscheck", 4.0, ({**point, "n": 6, "seed": 17 + i, "total_time": 20000.0} for i, point in enumerate(MC_POINTS)))
def check_mc_crosscheck(point: dict) -> float:
    """Largest |MC - exact| / stderr over the first-two-site word probabilities."""
    params = _params(point)
    n = point["n"]
    rates = asep_exact.boundary_to_rates(params)
    exact = asep_exact.marginal(asep_exact.stationary_measure(n, rates), Which.FIRST, 2)
    statistics = [Statistic(kind="word", word=exact.word(index)) for index in range(4)]
    estimates = asep_mc.simulate_estimates(n, rates, statistics, point.get("total_time"), seed=point.get("seed", 0))
    return max(
        abs(estimate.mean - exact.weights[index]) / max(estimate.stderr, 1e-12)
        for index, estimate in enumerate(estimates)
    )


# ---------------------------------------------------------------------------
# Manifest and runners
# ---------------------------------------------------------------------------

CLAIM_MANIFEST: dict[str, list[str]] = {
    "Askey-Wilson signed measures have total mass one": ["mass_one"],
    "Askey-Wilson polynomials are orthogonal with the stated norms": ["orthogonality"],
    "projection formula for the transition kernels": ["projection"],
    "transition kernels from U_s are supported on U_t": ["kernel_support"],
    "generating-function characterization of the stationary measure": ["characterization"],
    "time reversal of multi-time measures": ["time_reversal"],
    "particle-hole duality": ["particle_hole", "duality_bridge"],
    "stochastic sandwiching": ["sandwich"],
    "continuity in the parameters": ["continuity"],
    "rates and (A, B, C, D) are in bijection": ["reparameterization"],
    "phase diagram": ["phase_diagram"],
    "kernel total variation grows at most like (t - s)^-2": ["kernel_tv_exponent"],
    "total variation of pi_1 is controlled by its top atom": ["atom_ratio", "tv_atom_bound"],
    "limit is product Bernoulli iff AC = 1": ["bernoulli_iff"],
    "high density last-m limit is product Bernoulli": ["eta_limit"],
    "limit measures are consistent under marginals": ["lambda_consistency", "eta_limit"],
    "low density convergence at rate theta^n": ["ld_convergence"],
    "high density convergence at rate theta^n": ["hd_convergence"],
    "decay rate from the support of pi_1": ["theta"],
    "growth budget m_n = s n / log n": ["budget"],
    "total variation bounded by generating functions": ["gf_tv_bound"],
    "exact solver agrees with simulation": ["mc_crosscheck"],
}


def run_check(name: str, point: Optional[dict] = None) -> CheckReport:
    """Run one check; computation errors become FAIL reports, unmet hypotheses SKIPPED ones."""
    definition = _lookup(name)
    point = {**definition.grid[0], **point} if point else dict(definition.grid[0])
    threshold = point.get("threshold", definition.threshold)
    started = time.perf_counter()
    status, reason = None, None
    try:
        residual = float(definition.func(point))
    except SkipCheck as exc:
        residual, status, reason = math.nan, CheckStatus.SKIPPED, str(exc)
    except LabError as exc:
        residual, reason = math.inf, str(exc)
    if status is None:
        status = CheckStatus.PASS if residual <= threshold else CheckStatus.FAIL
    runtime = time.perf_counter() - started
    logger.debug(f"{name} at {point}: residual={residual:.3g} ({status.value}, {runtime:.2f}s)")
    return CheckReport(
        name=name, point=point, residual=residual, threshold=threshold, status=status, reason=reason, runtime=runtime
    )


def run_suite(selection: Union[str, Iterable[str]] = "ALL", seed: Optional[int] = None, jobs: int = 1) -> list[CheckReport]:
    """Every default grid point of the selected checks, sorted by check name."""
    from aseplab.services.job_manager import JobManager

    names = [selection] if isinstance(selection, str) else list(selection)
    if "ALL" in names:
        names = check_names()
    for name in names:
        _lookup(name)
    units = []
    for name in names:
        for index, point in enumerate(default_grid(name)):
            if seed is not None and "seed" in point:
                point = {**point, "seed": seed + index}
            units.append({"kind": "check", "name": name, "point": point})
    results = JobManager(jobs).run(units)
    reports = sorted((CheckReport(**result["report"]) for result in results), key=lambda report: report.name)
    passed = sum(report.status == CheckStatus.PASS for report in reports)
    failed = sum(report.status == CheckStatus.FAIL for report in reports)
    logger.info(f"Suite finished: {passed} passed, {failed} failed, {len(reports) - passed - failed} skipped")
    return reports
