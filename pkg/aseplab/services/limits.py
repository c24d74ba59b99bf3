"""Boundary limits of open ASEP marginals and the total-variation toolkit.

The limit measures lambda_m and eta_m are known through generating functions
evaluated at ordered node tuples; :func:`measure_from_gf` turns 2^m such
evaluations into weights by per-site two-node interpolation.
"""

import logging
import math
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError
from aseplab.models import (
    BinaryMeasure,
    BoundaryParams,
    BudgetReport,
    ConvergenceRow,
    Factor,
    GridSide,
    MeasureKind,
    MultiAwSpec,
    NodeGrid,
    Phase,
    ScanResult,
    Which,
)
from aseplab.services import asep_exact, aw_measure, aw_multi, qseries

logger = logging.getLogger(__name__)

GfEvaluator = Callable[[tuple[float, ...]], float]
NodePairs = Union[NodeGrid, Sequence[tuple[float, float]]]


class LimitConstruction(NamedTuple):
    measure: BinaryMeasure
    grid: NodeGrid


# ---------------------------------------------------------------------------
# Product measures and distances
# ---------------------------------------------------------------------------


def bernoulli_product(m: int, rho: float) -> BinaryMeasure:
    if not 0.0 <= rho <= 1.0:
        raise LabError(ErrorCode.DOMAIN, f"density {rho} outside [0, 1]")
    weights = np.ones(1)
    for _ in range(m):
        weights = np.kron([1.0 - rho, rho], weights)
    return BinaryMeasure(m=m, weights=weights)


def tv_distance(mu: BinaryMeasure, nu: BinaryMeasure) -> float:
    if mu.m != nu.m:
        raise LabError(ErrorCode.DOMAIN, f"measures live on {mu.m} and {nu.m} sites")
    return 0.5 * float(np.abs(mu.weights - nu.weights).sum())


def product_approximation_distance(measure: BinaryMeasure) -> float:
    """TV distance to Ber_m(rho*), rho* the site-1 density of the measure itself."""
    rho = float(np.clip(asep_exact.density_profile(measure)[0], 0.0, 1.0))
    return tv_distance(measure, bernoulli_product(measure.m, rho))


def _per_site(tensor: np.ndarray, matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Apply matrices[i] to the axis of site i+1 (axes run tau_m .. tau_1)."""
    m = tensor.ndim
    for i, matrix in enumerate(matrices):
        axis = m - 1 - i
        tensor = np.moveaxis(np.tensordot(matrix, tensor, axes=([1], [axis])), 0, axis)
    return tensor


def _node_pairs(grid: NodePairs) -> list[tuple[float, float]]:
    pairs = list(grid.nodes if isinstance(grid, NodeGrid) else grid)
    for t0, t1 in pairs:
        if not 0.0 < t0 < t1:
            raise LabError(ErrorCode.DOMAIN, f"node pair ({t0}, {t1}) must satisfy 0 < t0 < t1")
    return pairs


def _vandermonde(pairs) -> list[np.ndarray]:
    # rows: node choice; columns: occupation
    return [np.array([[1.0, t0], [1.0, t1]]) for t0, t1 in pairs]


def gf_values(measure: BinaryMeasure, grid: NodePairs) -> np.ndarray:
    """Generating function at every node selection, flattened like the weights."""
    pairs = _node_pairs(grid)
    if len(pairs) != measure.m:
        raise LabError(ErrorCode.DOMAIN, f"{len(pairs)} node pairs for {measure.m} sites")
    return _per_site(measure.as_tensor(), _vandermonde(pairs)).ravel()


def gf_tv_bound(mu: BinaryMeasure, nu: BinaryMeasure, grid: NodePairs) -> float:
    """Upper bound on tv_distance(mu, nu) from generating-function differences on a node grid."""
    pairs = _node_pairs(grid)
    difference = np.abs(gf_values(mu, pairs) - gf_values(nu, pairs)).sum()
    factor = math.prod((1.0 + t1) / (t1 - t0) for t0, t1 in pairs)
    return 0.5 * factor * float(difference)


# ---------------------------------------------------------------------------
# Node grids and inversion
# ---------------------------------------------------------------------------


def epsilon_rule(A: float, B: float, C: float, q: float) -> float:
    """Half-width of the interval [1, 1 + eps) on which the identity holds, with safety factor."""
    bounds = [1.0 + settings.epsilon_cap]
    if q > 0:
        bounds.append(1.0 / q)
    if B != 0:
        bounds.append(1.0 / (B * B))
    if 0 < A < 1:
        bounds.append(1.0 / (A * A))
    upper = min(bounds)
    if A >= 1 and C >= 1:
        # avoid the points C q^l / A
        if q == 0:
            candidates = [C / A]
        else:
            exponent = math.log(A / C) / math.log(q)
            l = math.ceil(exponent) - 1
            candidates = [C * q ** l / A, C * q ** (l + 1) / A]
        for value in candidates:
            if abs(value - 1.0) <= settings.admissibility_tol:
                raise LabError(ErrorCode.PHASE, f"A/C={A / C} is a power of q={q}")
            if value > 1.0:
                upper = min(upper, value)
    epsilon = settings.epsilon_safety * (upper - 1.0)
    if epsilon <= 0:
        raise LabError(ErrorCode.DOMAIN, f"no admissible interval for A={A}, B={B}, C={C}, q={q}")
    return epsilon


def node_grid(m: int, epsilon: float, side: GridSide) -> NodeGrid:
    """Interleaved nodes: t_{i,v} = base + (2(i-1) + v + 1) eps / (2m + 1)."""
    base = 1.0 if side == GridSide.AT_OR_ABOVE_ONE else 1.0 - epsilon
    step = epsilon / (2 * m + 1)
    nodes = tuple((base + (2 * i + 1) * step, base + (2 * i + 2) * step) for i in range(m))
    return NodeGrid(m=m, epsilon=epsilon, side=side, nodes=nodes)


def measure_from_gf(evaluator: GfEvaluator, grid: NodeGrid) -> BinaryMeasure:
    """Weights of the measure whose generating function the evaluator computes."""
    m = grid.m
    values = np.empty(2 ** m)
    for index in range(2 ** m):
        values[index] = evaluator(grid.selection((index >> i) & 1 for i in range(m)))
    inverses = [np.array([[t1, -t0], [-1.0, 1.0]]) / (t1 - t0) for t0, t1 in grid.nodes]
    weights = _per_site(values.reshape((2,) * m), inverses).ravel()
    if weights.min() < -settings.negative_mass_tol:
        raise LabError(
            ErrorCode.NEGATIVE_MASS,
            f"recovered weight {weights.min():.3g} below -{settings.negative_mass_tol:g}",
            {"epsilon": grid.epsilon},
        )
    total = weights.sum()
    if abs(total - 1.0) > 1e-6:
        logger.warning(f"Recovered weights sum to {total!r} before renormalization")
    weights = np.clip(weights, 0.0, None)
    return BinaryMeasure(m=m, weights=weights / weights.sum(), kind=MeasureKind.PROBABILITY)


def _invert_with_retries(evaluator: GfEvaluator, m: int, epsilon: float, side: GridSide) -> LimitConstruction:
    bits = qseries.current_precision()
    for attempt in range(settings.gf_retries + 1):
        grid = node_grid(m, epsilon, side)
        try:
            with qseries.working_precision(bits):
                return LimitConstruction(measure_from_gf(evaluator, grid), grid)
        except LabError as exc:
            if exc.code != ErrorCode.NEGATIVE_MASS or attempt == settings.gf_retries:
                raise
            logger.warning(f"{exc}; retrying with eps={epsilon / 2:.3g}, {2 * bits} bits")
            epsilon, bits = epsilon / 2, 2 * bits
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# Limit measures
# ---------------------------------------------------------------------------


def _top_atom(params: BoundaryParams):
    A, B, C, D, q = params.as_tuple()
    base = aw_measure.pi_marginal(A, B, C, D, q, 1.0)
    atoms = sorted(base.support_atoms(settings.mass_floor), key=lambda atom: atom.location, reverse=True)
    if not atoms or atoms[0].location <= 1.0:
        raise LabError(ErrorCode.PHASE, f"no atom above 1 in the support at {params.as_tuple()}")
    return base, atoms


def eta_construction(params: BoundaryParams, m: int, backend: Optional[str] = None) -> LimitConstruction:
    A, B, C, D, q = params.as_tuple()
    if max(A, C) <= 1.0:
        raise LabError(ErrorCode.PHASE, f"eta_m needs max(A, C) > 1, got A={A}, C={C}")
    if asep_exact.applicability(params).ratio_resonance:
        raise LabError(ErrorCode.PHASE, f"A/C={A / C} is a power of q={q}")
    _, atoms = _top_atom(params)
    top = atoms[0]
    scale = 2.0 + 2.0 * top.location

    def evaluator(times: tuple[float, ...]) -> float:
        spec = MultiAwSpec(A=A, B=B, C=C, D=D, q=q, times=times)
        factors = [Factor.gf(t, scale) for t in times]
        return aw_multi.kernel_chain_integrate(spec, top.location, 1.0, factors, source=top.value, backend=backend)

    construction = _invert_with_retries(evaluator, m, epsilon_rule(A, B, C, q), GridSide.AT_OR_ABOVE_ONE)
    logger.info(f"Built eta_{m} at {params.as_tuple()} (eps={construction.grid.epsilon:.3g})")
    return construction


def eta_measure(params: BoundaryParams, m: int, backend: Optional[str] = None) -> BinaryMeasure:
    """Limit of the last-m marginals."""
    return eta_construction(params, m, backend).measure


def lambda_construction(params: BoundaryParams, m: int, backend: Optional[str] = None) -> LimitConstruction:
    A, B, C, D, q = params.as_tuple()
    if asep_exact.phase_of(A, C) != Phase.HD:
        raise LabError(ErrorCode.PHASE, f"lambda_m needs the high density phase, got A={A}, C={C}")
    if C >= 1 and q > 0:
        l = round(math.log(C / A) / math.log(q))
        if l >= 1 and abs(C / A / q ** l - 1.0) <= settings.admissibility_tol:
            raise LabError(ErrorCode.PHASE, f"C/A={C / A} is a power of q={q}")
    # the dual interval [1, 1 + eps') mapped through t -> 1/t
    dual_epsilon = epsilon_rule(C, D, A, q)
    epsilon = 1.0 - 1.0 / (1.0 + dual_epsilon)
    scale = (1.0 + A) ** 2 / A

    def evaluator(times: tuple[float, ...]) -> float:
        spec = MultiAwSpec(A=A, B=1.0 / A, C=C, D=D, q=q, times=times)
        return aw_multi.multi_integrate(spec, [Factor.gf(t, scale) for t in times], backend)

    construction = _invert_with_retries(evaluator, m, epsilon, GridSide.AT_OR_BELOW_ONE)
    logger.info(f"Built lambda_{m} at {params.as_tuple()} (eps={construction.grid.epsilon:.3g})")
    return construction


def lambda_measure(params: BoundaryParams, m: int, backend: Optional[str] = None) -> BinaryMeasure:
    """Limit of the first-m marginals in the high density phase."""
    return lambda_construction(params, m, backend).measure


# ---------------------------------------------------------------------------
# Decay rate and budget
# ---------------------------------------------------------------------------


def theta_from_support(params: BoundaryParams) -> float:
    """(1 + y0*) / (1 + y0) from the two largest support points of pi_1."""
    phase = asep_exact.phase_of(params.A, params.C)
    if phase not in (Phase.LD, Phase.HD):
        raise LabError(ErrorCode.PHASE, f"theta is defined in LD and HD, got {phase.value}")
    _, atoms = _top_atom(params)
    heavy = [atom for atom in atoms[1:] if abs(atom.mass) > settings.mass_tol]
    # y0* is floored at 1 whether or not the rest of the support is continuous
    second = max(1.0, heavy[0].location) if heavy else 1.0
    return (1.0 + second) / (1.0 + atoms[0].location)


def rate_budget(theta: float) -> float:
    """s = -ln(theta) / 3."""
    if not 0.0 < theta < 1.0:
        raise LabError(ErrorCode.DOMAIN, f"theta={theta} outside (0, 1)")
    return -math.log(theta) / 3.0


def budget_log10(theta: float, H: float, n: int, s: Optional[float] = None) -> float:
    """log10 of theta^n (H m_n)^{3 m_n} with m_n = floor(s n / ln n)."""
    s = rate_budget(theta) if s is None else s
    m = math.floor(s * n / math.log(n))
    value = n * math.log10(theta)
    if m > 0:
        value += 3 * m * math.log10(H * m)
    return value


def budget_report(theta: float, H: float, n_max: int = 10_000, target_log10: float = -6.0) -> BudgetReport:
    """Where the sequence starts to decrease (judged on block starts) and when it drops below target."""
    s = rate_budget(theta)
    ns = np.arange(2, n_max + 1)
    ms = np.floor(s * ns / np.log(ns)).astype(int)
    values = np.array([budget_log10(theta, H, int(n), s) for n in ns])
    starts = np.flatnonzero(np.r_[True, ms[1:] != ms[:-1]])
    block_values = values[starts]
    first = len(starts) - 1
    while first > 0 and block_values[first - 1] > block_values[first]:
        first -= 1
    N = int(ns[starts[first]]) if first < len(starts) - 1 or len(starts) == 1 else None
    below = np.flatnonzero(values < target_log10)
    below_at = None
    if below.size:
        # first n after which the sequence stays below target
        above = np.flatnonzero(values >= target_log10)
        later = below[below > above.max()] if above.size else below
        below_at = int(ns[later[0]]) if later.size else None
    return BudgetReport(
        theta=theta,
        H=H,
        s=s,
        N=N,
        n_max=n_max,
        final_log10=float(values[-1]),
        below_target_at=below_at,
    )


# ---------------------------------------------------------------------------
# Convergence experiments
# ---------------------------------------------------------------------------


def limit_target(params: BoundaryParams, m: int, which: Which, backend: Optional[str] = None):
    """Phase-appropriate limit of the FIRST or LAST m marginals, with its node grid if any."""
    phase = asep_exact.phase_of(params.A, params.C)
    if phase not in (Phase.LD, Phase.HD):
        raise LabError(ErrorCode.PHASE, f"convergence scans need LD or HD, got {phase.value}")
    if which == Which.LAST:
        construction = eta_construction(params, m, backend)
        return "eta", construction.measure, construction.grid
    if phase == Phase.LD:
        return "bernoulli", bernoulli_product(m, 1.0 / (1.0 + params.C)), None
    construction = lambda_construction(params, m, backend)
    return "lambda", construction.measure, construction.grid


def fit_H(rows: Sequence[tuple[int, float]], theta: float, m: int) -> float:
    """Smallest H with theta^n (H m)^{3m} >= tv for every (n, tv)."""
    candidates = [(tv / theta ** n) ** (1.0 / (3 * m)) / m for n, tv in rows if tv > 0]
    return max(candidates, default=0.0)


def convergence_scan(
    params: BoundaryParams,
    n_list: Sequence[int],
    m: int,
    which: Which = Which.FIRST,
    backend: Optional[str] = None,
    jobs: int = 1,
) -> ScanResult:
    """Distance of exact marginals to their limit over n_list."""
    from aseplab.services.job_manager import JobManager

    label, target, grid = limit_target(params, m, which, backend)
    theta = theta_from_support(params)
    units = [
        {"kind": "marginal", "params": params.model_dump(), "n": int(n), "m": m, "which": which.value}
        for n in sorted(n_list)
    ]
    results = JobManager(jobs).run(units)
    observed = []
    for unit, result in zip(units, results):
        marginal = BinaryMeasure(m=m, weights=result["weights"])
        observed.append((unit["n"], min(1.0, max(0.0, tv_distance(marginal, target)))))

    H = fit_H(observed, theta, m)
    rows = [
        ConvergenceRow(n=n, m=m, tv=tv, theta_pow=theta ** n, fitted_bound=theta ** n * (H * m) ** (3 * m))
        for n, tv in observed
    ]
    logger.info(f"Scanned {len(rows)} sizes against {label}_{m}: theta={theta:.6g}, H={H:.4g}")
    return ScanResult(
        params=params,
        rates=asep_exact.boundary_to_rates(params),
        phase=asep_exact.classify_phase(params.A, params.C, params.q, params.B, params.D),
        target=f"{label}_{m}",
        theta=theta,
        epsilon=grid.epsilon if grid else None,
        fitted_H=H,
        nodes=[list(pair) for pair in grid.nodes] if grid else None,
        rows=rows,
    )
