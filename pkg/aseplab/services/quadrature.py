"""Adaptive composite Gauss-Legendre quadrature on an interval."""

import logging
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import special

from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


class QuadratureRule(NamedTuple):
    nodes: np.ndarray
    weights: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values) @ self.weights


@lru_cache(maxsize=8)
def gauss_legendre(npt: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    x, w = special.roots_legendre(npt)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _panel(lo: float, hi: float, npt: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(npt)
    half = (hi - lo) / 2.0
    return half * x + (hi + lo) / 2.0, half * w


def adaptive_rule(
    func: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    tol: Optional[float] = None,
    npt: Optional[int] = None,
    max_depth: Optional[int] = None,
) -> QuadratureRule:
    """Composite rule on [lo, hi] adapted to ``func``.

    ``func`` maps an array of k nodes to values of shape (..., k); a panel is
    accepted when halving it changes every component by less than its share of
    ``tol`` (relative to the largest component of the whole integral).
    """
    tol = settings.quad_tol if tol is None else tol
    npt = npt or settings.gl_nodes
    max_depth = settings.quad_max_depth if max_depth is None else max_depth
    width = hi - lo

    def estimate(a, b):
        th, wt = _panel(a, b, npt)
        return np.asarray(func(th)) @ wt, th, wt

    whole, _, _ = estimate(lo, hi)
    scale = max(1.0, float(np.max(np.abs(whole))))
    nodes, weights = [], []
    stack = [(lo, hi, whole, 0)]
    while stack:
        a, b, coarse, depth = stack.pop()
        mid = (a + b) / 2.0
        left, lth, lwt = estimate(a, mid)
        right, rth, rwt = estimate(mid, b)
        err = float(np.max(np.abs(left + right - coarse)))
        allowed = max(tol * scale * (b - a) / width, 64 * _EPS * scale)
        if err <= allowed:
            nodes.extend((lth, rth))
            weights.extend((lwt, rwt))
        elif depth >= max_depth:
            raise LabError(
                ErrorCode.QUADRATURE_NONCONVERGED,
                f"panel [{a:.6g}, {b:.6g}] still off by {err:.3g} after {depth} bisections",
            )
        else:
            stack.append((mid, b, right, depth + 1))
            stack.append((a, mid, left, depth + 1))
    theta = np.concatenate(nodes)
    order = np.argsort(theta)
    rule = QuadratureRule(theta[order], np.concatenate(weights)[order])
    logger.debug(f"Adaptive rule on [{lo:.4g}, {hi:.4g}]: {len(nodes)} panels")
    return rule
