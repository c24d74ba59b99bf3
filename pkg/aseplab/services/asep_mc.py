"""Continuous-time Gillespie simulation of open ASEP with batch-means error bars."""

import logging
from typing import Optional, Sequence

import numpy as np

from aseplab.errors import ErrorCode, LabError
from aseplab.models import McEstimate, OpenAsepRates, Statistic
from aseplab.services.asep_exact import build_generator
from aseplab.settings_defaults import DEFAULT_RUN_CONFIG

logger = logging.getLogger(__name__)

_CHUNK = 4096


def default_burn_in(n: int, rates: OpenAsepRates) -> float:
    """20 n / (smallest positive boundary rate)."""
    boundary = [r for r in (rates.alpha, rates.beta, rates.gamma, rates.delta) if r > 0]
    return 20.0 * n / min(boundary)


def statistic_values(n: int, statistic: Statistic) -> np.ndarray:
    """Value of the statistic at every configuration."""
    states = np.arange(2 ** n)
    if statistic.kind == "site":
        if not 1 <= statistic.site <= n:
            raise LabError(ErrorCode.DOMAIN, f"site {statistic.site} outside 1..{n}")
        return ((states >> (statistic.site - 1)) & 1).astype(float)
    width = len(statistic.word)
    if width > n:
        raise LabError(ErrorCode.DOMAIN, f"word {statistic.word} longer than the lattice ({n})")
    pattern = sum(int(bit) << i for i, bit in enumerate(statistic.word))
    return ((states & ((1 << width) - 1)) == pattern).astype(float)


def occupation_times(
    n: int,
    rates: OpenAsepRates,
    total_time: float,
    burn_in: float,
    seed: int,
    batches: int,
) -> tuple[np.ndarray, int]:
    """Time spent in each configuration per batch window after burn-in, and the event count."""
    generator = build_generator(n, rates)
    generator.setdiag(0.0)
    generator.eliminate_zeros()
    indptr, targets, jump_rates = generator.indptr, generator.indices, generator.data
    cumulative = [np.cumsum(jump_rates[indptr[x]:indptr[x + 1]]) for x in range(2 ** n)]

    rng = np.random.default_rng(seed)
    window = (total_time - burn_in) / batches
    occupation = np.zeros((batches, 2 ** n))
    state, time, events = 0, 0.0, 0
    clocks, picks, used = rng.standard_exponential(_CHUNK), rng.random(_CHUNK), 0

    while time < total_time:
        if used == _CHUNK:
            clocks, picks, used = rng.standard_exponential(_CHUNK), rng.random(_CHUNK), 0
        cum = cumulative[state]
        leave = min(time + clocks[used] / cum[-1], total_time)
        start = max(time, burn_in)
        while start < leave:
            k = min(int((start - burn_in) / window), batches - 1)
            edge = burn_in + (k + 1) * window
            if edge <= start and k < batches - 1:
                k, edge = k + 1, edge + window
            stop = leave if k == batches - 1 else min(leave, edge)
            occupation[k, state] += stop - start
            start = stop
        if time >= burn_in:
            events += 1
        choice = int(np.searchsorted(cum, picks[used] * cum[-1], side="right"))
        state = int(targets[indptr[state] + min(choice, cum.size - 1)])
        time = leave
        used += 1
    return occupation, events


def simulate_estimates(
    n: int,
    rates: OpenAsepRates,
    statistics: Sequence[Statistic],
    total_time: Optional[float] = None,
    burn_in: Optional[float] = None,
    seed: int = 0,
    batches: Optional[int] = None,
) -> list[McEstimate]:
    """Time averages of several statistics along one trajectory."""
    total_time = DEFAULT_RUN_CONFIG["total_time"] if total_time is None else total_time
    burn_in = default_burn_in(n, rates) if burn_in is None else burn_in
    batches = batches or DEFAULT_RUN_CONFIG["batches"]
    if total_time <= burn_in:
        raise LabError(ErrorCode.DOMAIN, f"total_time={total_time} must exceed burn_in={burn_in}")

    occupation, events = occupation_times(n, rates, total_time, burn_in, seed, batches)
    per_batch = occupation / occupation.sum(axis=1, keepdims=True)
    estimates = []
    for statistic in statistics:
        means = per_batch @ statistic_values(n, statistic)
        estimates.append(
            McEstimate(
                label=statistic.label,
                mean=float(means.mean()),
                stderr=float(means.std(ddof=1) / np.sqrt(batches)),
                samples=max(events, 1),
                seed=seed,
                burn_in=burn_in,
                batches=batches,
            )
        )
    logger.info(f"Simulated n={n} for t={total_time:g} ({events} events after burn-in {burn_in:g})")
    return estimates


def simulate_estimate(
    n: int,
    rates: OpenAsepRates,
    statistic: Statistic,
    total_time: Optional[float] = None,
    burn_in: Optional[float] = None,
    seed: int = 0,
    batches: Optional[int] = None,
) -> McEstimate:
    return simulate_estimates(n, rates, [statistic], total_time, burn_in, seed, batches)[0]
