"""Exact open ASEP: parameterizations, phases, generator solves and generating functions.

Configurations of the lattice {1..n} are integers; site i is bit i-1.
"""

import logging
import math
from typing import Optional, Sequence

import mpmath
import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as sparse_linalg

from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError
from aseplab.models import (
    Applicability,
    BinaryMeasure,
    BoundaryParams,
    Factor,
    GfIdentity,
    MeasureKind,
    MultiAwSpec,
    OpenAsepRates,
    Phase,
    PhaseInfo,
    Region,
    StationarySolution,
    Which,
)
from aseplab.services import aw_measure, aw_multi, qseries

logger = logging.getLogger(__name__)

PHASE_TOL = 1e-9
RESIDUAL_TOL = 1e-10
SIGMA2_MAX_N = 8


# ---------------------------------------------------------------------------
# Parameterizations and phases
# ---------------------------------------------------------------------------


def _phi_pair(x: float, y: float, q: float) -> tuple[float, float]:
    """(phi_+, phi_-) without cancellation; phi_+ * phi_- = -y / x."""
    u = 1.0 - q - x + y
    root = math.sqrt(u * u + 4.0 * x * y)
    if u >= 0:
        plus = (u + root) / (2.0 * x)
        minus = -y / (x * plus) if plus != 0 else 0.0
    else:
        minus = (u - root) / (2.0 * x)
        plus = -y / (x * minus)
    return plus, minus + 0.0


def rates_to_boundary(rates: OpenAsepRates) -> BoundaryParams:
    A, B = _phi_pair(rates.beta, rates.delta, rates.q)
    C, D = _phi_pair(rates.alpha, rates.gamma, rates.q)
    return BoundaryParams(A=A, B=B, C=C, D=D, q=rates.q)


def boundary_to_rates(params: BoundaryParams) -> OpenAsepRates:
    A, B, C, D, q = params.as_tuple()
    left = (1.0 + C) * (1.0 + D)
    right = (1.0 + A) * (1.0 + B)
    return OpenAsepRates(
        alpha=(1.0 - q) / left,
        beta=(1.0 - q) / right,
        gamma=-(1.0 - q) * C * D / left + 0.0,
        delta=-(1.0 - q) * A * B / right + 0.0,
        q=q,
    )


def _near(a: float, b: float, tol: float = PHASE_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def phase_of(A: float, C: float) -> Phase:
    top = max(A, C)
    if top > 1.0 and not _near(top, 1.0) and not _near(A, C):
        return Phase.HD if A > C else Phase.LD
    if top < 1.0 and not _near(top, 1.0):
        return Phase.MC
    return Phase.BOUNDARY


def region_of(A: float, C: float) -> Region:
    product = A * C
    if _near(product, 1.0):
        return Region.BOUNDARY
    return Region.SHOCK if product > 1.0 else Region.FAN


def classify_phase(A: float, C: float, q: float, B: float = 0.0, D: float = 0.0) -> PhaseInfo:
    """Phase and fan/shock region; theta and budget s for LD and HD."""
    phase, region = phase_of(A, C), region_of(A, C)
    theta = budget_s = None
    if phase in (Phase.LD, Phase.HD):
        from aseplab.services import limits

        theta = limits.theta_from_support(BoundaryParams(A=A, B=B, C=C, D=D, q=q))
        budget_s = limits.rate_budget(theta)
    return PhaseInfo(phase=phase, region=region, theta=theta, budget_s=budget_s)


# ---------------------------------------------------------------------------
# Generator and stationary solve
# ---------------------------------------------------------------------------


def build_generator(n: int, rates: OpenAsepRates) -> sparse.csr_matrix:
    """Generator Q on {0,1}^n (rows sum to zero)."""
    states = np.arange(2 ** n)
    rows, cols, vals = [], [], []

    def add(mask: np.ndarray, targets: np.ndarray, rate: float) -> None:
        if rate > 0 and mask.any():
            rows.append(states[mask])
            cols.append(targets[mask])
            vals.append(np.full(int(mask.sum()), rate))

    first, last = 1, 1 << (n - 1)
    add((states & first) == 0, states | first, rates.alpha)
    add((states & first) != 0, states & ~first, rates.gamma)
    add((states & last) != 0, states & ~last, rates.beta)
    add((states & last) == 0, states | last, rates.delta)
    for i in range(n - 1):
        here, there = 1 << i, 1 << (i + 1)
        swapped = states ^ (here | there)
        add(((states & here) != 0) & ((states & there) == 0), swapped, 1.0)
        add(((states & here) == 0) & ((states & there) != 0), swapped, rates.q)

    rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    off = sparse.coo_matrix((vals, (rows, cols)), shape=(states.size, states.size)).tocsr()
    exit_rates = np.asarray(off.sum(axis=1)).ravel()
    return (off - sparse.diags(exit_rates)).tocsr()


def _solve_extended(system: sparse.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    with mpmath.workprec(qseries.current_precision()):
        matrix = mpmath.matrix(system.toarray().tolist())
        solution = mpmath.lu_solve(matrix, mpmath.matrix(rhs.tolist()))
        return np.array([float(v) for v in solution])


def solve_stationary(n: int, rates: OpenAsepRates, extended: bool = False) -> StationarySolution:
    """Unique invariant law of the chain, with residual and uniqueness diagnostics."""
    if n < 1:
        raise LabError(ErrorCode.DOMAIN, f"n must be positive, got {n}")
    if n > settings.solver_cap:
        raise LabError(ErrorCode.CAP_EXCEEDED, f"n={n} exceeds the solver cap {settings.solver_cap}")
    Q = build_generator(n, rates)
    size = Q.shape[0]
    # left null space of Q with one balance equation traded for normalization
    system = Q.T.tolil()
    system[size - 1, :] = np.ones(size)
    system = system.tocsr()
    rhs = np.zeros(size)
    rhs[-1] = 1.0

    try:
        if extended and n <= settings.extended_solver_max:
            method = "mpmath-lu"
            pi = _solve_extended(system, rhs)
        elif n <= settings.dense_solver_max:
            method = "dense-lu"
            pi = linalg.lu_solve(linalg.lu_factor(system.toarray(), check_finite=True), rhs)
        else:
            method = "sparse-lu"
            pi = sparse_linalg.splu(system.tocsc()).solve(rhs)
    except (linalg.LinAlgError, RuntimeError, ZeroDivisionError) as exc:
        raise LabError(ErrorCode.SOLVE_FAILED, f"stationary solve for n={n} failed: {exc}") from exc
    if not np.all(np.isfinite(pi)):
        raise LabError(ErrorCode.SOLVE_FAILED, f"non-finite stationary vector for n={n}")

    residual = float(np.max(np.abs(Q.T @ pi)))
    scale = max(1.0, float(np.max(np.abs(Q.diagonal()))))
    if residual > RESIDUAL_TOL * scale:
        raise LabError(ErrorCode.SOLVE_FAILED, f"stationarity residual {residual:.3g} for n={n}")

    sigma2 = None
    if n <= SIGMA2_MAX_N:
        singular = np.sort(linalg.svdvals(Q.toarray()))
        sigma2 = float(singular[1]) if size > 1 else float(singular[0])
        if sigma2 <= settings.singular_tol * max(1.0, float(singular[-1])):
            raise LabError(ErrorCode.SOLVE_FAILED, f"null space of the generator is not one-dimensional (n={n})")

    if pi.min() < -RESIDUAL_TOL:
        raise LabError(ErrorCode.SOLVE_FAILED, f"negative stationary weight {pi.min():.3g} for n={n}")
    pi = np.clip(pi, 0.0, None)
    measure = BinaryMeasure(m=n, weights=pi / pi.sum())
    logger.info(f"Solved stationary measure n={n} via {method}, residual={residual:.2e}")
    return StationarySolution(measure=measure, residual=residual, sigma2=sigma2, method=method)


def stationary_measure(n: int, rates: OpenAsepRates) -> BinaryMeasure:
    return solve_stationary(n, rates).measure


def stationary_from_params(n: int, params: BoundaryParams) -> BinaryMeasure:
    return solve_stationary(n, boundary_to_rates(params)).measure


# ---------------------------------------------------------------------------
# Operations on measures over {0,1}^m
# ---------------------------------------------------------------------------


def marginal(measure: BinaryMeasure, which: Which, m: int) -> BinaryMeasure:
    """Law of sites 1..m (FIRST) or n-m+1..n (LAST)."""
    n = measure.m
    if not 1 <= m <= n:
        raise LabError(ErrorCode.DOMAIN, f"marginal size m={m} outside 1..{n}")
    if m == n:
        return measure
    if which == Which.FIRST:
        weights = measure.weights.reshape(2 ** (n - m), 2 ** m).sum(axis=0)
    else:
        weights = measure.weights.reshape(2 ** m, 2 ** (n - m)).sum(axis=1)
    return BinaryMeasure(m=m, weights=weights, kind=measure.kind)


def generating_function(measure: BinaryMeasure, t: Sequence[float]) -> float:
    """E[prod t_i^{tau_i}]."""
    if len(t) != measure.m:
        raise LabError(ErrorCode.DOMAIN, f"{len(t)} arguments for a measure on {measure.m} sites")
    values = measure.as_tensor()
    # the trailing axis is always the lowest remaining site
    for ti in t:
        values = values @ np.array([1.0, ti])
    return float(values)


def particle_hole_dual(measure: BinaryMeasure) -> BinaryMeasure:
    """tau_i -> 1 - tau_{n+1-i}."""
    dual = np.flip(measure.as_tensor()).transpose()
    return BinaryMeasure(m=measure.m, weights=dual.ravel(), kind=measure.kind)


def density_profile(measure: BinaryMeasure) -> np.ndarray:
    """P(tau_i = 1) for i = 1..m."""
    index = np.arange(measure.weights.size)
    return np.array([measure.weights[(index >> i) & 1 == 1].sum() for i in range(measure.m)])


def is_probability(weights: np.ndarray) -> bool:
    return bool(np.min(weights) >= -1e-12)


def as_binary(weights: np.ndarray, m: int) -> BinaryMeasure:
    kind = MeasureKind.PROBABILITY if is_probability(weights) else MeasureKind.SIGNED
    return BinaryMeasure(m=m, weights=weights, kind=kind)


# ---------------------------------------------------------------------------
# Askey-Wilson representation of the last-m generating function
# ---------------------------------------------------------------------------


def applicability(params: BoundaryParams, t: Sequence[float] = ()) -> Applicability:
    """Check q^l ABCD != 1, the A/C non-resonance and the t-interval."""
    from aseplab.services import limits

    A, B, C, D, q = params.as_tuple()
    abcd = A * B * C * D
    abcd_resonance = False
    if abcd > 0:
        l = 0 if q == 0 else max(0, round(-math.log(abcd) / math.log(q)))
        abcd_resonance = abs(q ** l * abcd - 1.0) <= settings.admissibility_tol
    ratio_resonance = False
    if A >= 1 and C >= 1:
        ratio = A / C
        if q == 0:
            ratio_resonance = abs(ratio - 1.0) <= settings.admissibility_tol
        else:
            l = round(math.log(ratio) / math.log(q))
            ratio_resonance = abs(ratio / q ** l - 1.0) <= settings.admissibility_tol
    try:
        epsilon = limits.epsilon_rule(A, B, C, q)
    except LabError:
        epsilon = None
    in_interval = epsilon is not None and all(1.0 <= ti < 1.0 + epsilon for ti in t)
    return Applicability(
        abcd_resonance=abcd_resonance,
        ratio_resonance=ratio_resonance,
        epsilon=epsilon,
        in_interval=in_interval,
    )


def characterization_gf(
    params: BoundaryParams, n: int, t: Sequence[float], backend: Optional[str] = None
) -> GfIdentity:
    """Askey-Wilson integral form of E[prod t_i^{tau_{n-m+i}}] under mu_n."""
    m = len(t)
    if not 1 <= m < n:
        raise LabError(ErrorCode.DOMAIN, f"need 1 <= m < n, got m={m}, n={n}")
    report = applicability(params, t)
    if not report.applicable:
        logger.warning(f"Identity hypotheses not met at {params.as_tuple()}, t={tuple(t)}: {report.model_dump()}")
    A, B, C, D, q = params.as_tuple()
    backend = backend or settings.multi_backend
    spec = MultiAwSpec(A=A, B=B, C=C, D=D, q=q, times=(1.0,) + tuple(t))
    factors = [aw_multi.power_factor(2.0, 2.0, n - m)] + [Factor.gf(ti) for ti in t]
    numerator = aw_multi.multi_integrate(spec, factors, backend)
    base = aw_measure.pi_marginal(A, B, C, D, q, 1.0)
    denominator = aw_measure.integrate(base, aw_multi.power_factor(2.0, 2.0, n))
    if denominator == 0:
        raise LabError(ErrorCode.DIVISION_BY_ZERO, f"normalizing integral vanishes for n={n}")
    return GfIdentity(
        value=numerator / denominator,
        numerator=numerator,
        denominator=denominator,
        backend=backend,
        applicability=report,
    )
