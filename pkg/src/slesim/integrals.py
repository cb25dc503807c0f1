"""Iterated integrals of the time-plus-driver lift of a sampled path.

Entries are indexed by words over {0, 1}: letter 0 integrates against dt,
letter 1 against dB, innermost letter first, so the entry for word w + (j,)
is the running integral of the entry for w against coordinate j.  Integrals
are taken over the piecewise-linear interpolation of the samples, i.e. in
the Stratonovich (geometric) sense; the level-2 Ito correction is exposed
as the ``ito2`` convention.  Each dt or dB leg uses the mean of the two
endpoint values of the integrand on every sub-interval, which is exact
whenever the integrand is linear there - in particular every entry up to
length 2 is exact for the piecewise-linear path, e.g. the (1, 1) entry
telescopes to B(t)^2 / 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .brownian import BrownianPath

__all__ = [
    "STRATONOVICH",
    "ITO_LEVEL2",
    "IteratedIntegralTable",
    "compute_table",
    "iterated_integral",
    "l2_scaling_samples",
    "l2_scaling_estimate",
    "derive_seed",
]

STRATONOVICH = "stratonovich"
ITO_LEVEL2 = "ito2"

_CONVENTIONS = (STRATONOVICH, ITO_LEVEL2)

# Table depth guard; memory and time are O(2^r * resolution).
LEVEL_CAP = 12


@dataclass
class IteratedIntegralTable:
    """All iterated integrals over [0, horizon] up to a word length."""

    horizon: float
    entries: dict = field(repr=False)
    resolution: int
    convention: str = STRATONOVICH

    def entry(self, word) -> float:
        return self.entries[tuple(word)]

    @property
    def depth(self) -> int:
        return max(len(w) for w in self.entries)


def _check_convention(convention: str) -> None:
    if convention not in _CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; "
                         f"expected one of {_CONVENTIONS}")


def _grid(path: BrownianPath, t: float, resolution) -> tuple[np.ndarray, np.ndarray]:
    """Sample grid of the path restricted to [0, t], optionally refined.

    Refinement resamples the piecewise-linear interpolation on the union of
    the knots and a uniform grid, which leaves the path itself unchanged
    and only sharpens the quadrature.
    """
    stop = path.index_of(t)
    times = path.times[: stop + 1]
    values = path.values[: stop + 1]
    if resolution is not None and resolution > stop:
        extra = np.linspace(0.0, t, int(resolution) + 1)
        grid = np.union1d(times, extra)
        return grid, np.interp(grid, times, values)
    return times, values


def compute_table(path: BrownianPath, t: float, r: int,
                  convention: str = STRATONOVICH,
                  resolution=None) -> IteratedIntegralTable:
    """All entries for words of length <= r over [0, t].

    Args:
        path: sampled driver; ``t`` must be one of its sample times.
        t: horizon, > 0.
        r: maximum word length, 0 <= r <= LEVEL_CAP.
        convention: ``stratonovich`` (default) or ``ito2`` (subtracts t/2
            from the (1, 1) entry; all other entries agree at level <= 2).
        resolution: optional minimum number of quadrature sub-intervals.

    Returns:
        IteratedIntegralTable with 2^(r+1) - 1 entries.
    """
    if r < 0 or r > LEVEL_CAP:
        raise ValueError(f"word length bound {r} outside [0, {LEVEL_CAP}]")
    if t <= 0.0:
        raise ValueError("horizon must be positive")
    _check_convention(convention)
    times, values = _grid(path, t, resolution)
    legs = (np.diff(times), np.diff(values))

    entries: dict = {(): 1.0}
    running = {(): np.ones(len(times))}
    for _ in range(r):
        nxt: dict = {}
        for w, fw in running.items():
            avg = 0.5 * (fw[:-1] + fw[1:])
            for j in (0, 1):
                out = np.empty(len(times))
                out[0] = 0.0
                np.cumsum(avg * legs[j], out=out[1:])
                wj = w + (j,)
                nxt[wj] = out
                entries[wj] = float(out[-1])
        running = nxt  # only the newest level feeds the next one

    if convention == ITO_LEVEL2 and r >= 2:
        entries[(1, 1)] -= 0.5 * t
    return IteratedIntegralTable(horizon=t, entries=entries,
                                 resolution=len(times) - 1,
                                 convention=convention)


def iterated_integral(path: BrownianPath, t: float, word,
                      convention: str = STRATONOVICH,
                      resolution=None) -> float:
    """Single entry without building the whole table (prefix chain only)."""
    word = tuple(word)
    if any(letter not in (0, 1) for letter in word):
        raise ValueError(f"word letters must be 0 or 1, got {word!r}")
    _check_convention(convention)
    times, values = _grid(path, t, resolution)
    legs = (np.diff(times), np.diff(values))
    fw = np.ones(len(times))
    for j in word:
        out = np.empty(len(times))
        out[0] = 0.0
        np.cumsum(0.5 * (fw[:-1] + fw[1:]) * legs[j], out=out[1:])
        fw = out
    value = float(fw[-1])
    if convention == ITO_LEVEL2 and word == (1, 1):
        value -= 0.5 * t
    return value


def derive_seed(seed: int, index: int) -> int:
    """Stable per-replica sub-seed; independent of evaluation order."""
    ss = np.random.SeedSequence((seed & ((1 << 64) - 1), int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


def l2_scaling_samples(word, t: float, replicas: int, resolution: int,
                       seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-replica entries at horizons t and 1, coupled by rescaling.

    Each replica draws one unit-horizon path and evaluates the word's entry
    on it and on its Brownian rescaling to horizon t, so the two samples
    come from the same underlying realization.
    """
    if t <= 0.0:
        raise ValueError("horizon must be positive")
    if replicas < 100:
        raise ValueError("need at least 100 replicas")
    at_t = np.empty(replicas)
    at_1 = np.empty(replicas)
    for i in range(replicas):
        path = BrownianPath.sample_uniform(1.0, resolution, derive_seed(seed, i))
        at_1[i] = iterated_integral(path, 1.0, word)
        scaled = path.rescale(1.0 / t)
        at_t[i] = iterated_integral(scaled, scaled.horizon, word)
    return at_t, at_1


def l2_scaling_estimate(word, t: float, replicas: int, resolution: int,
                        seed: int) -> tuple[float, float]:
    """Monte Carlo L^2 norms of a word's entry at horizons t and 1.

    The ratio estimates t^deg(word): the coupling in
    :func:`l2_scaling_samples` makes the exponent estimate exact up to
    rounding for the piecewise-linear lift.
    """
    at_t, at_1 = l2_scaling_samples(word, t, replicas, resolution, seed)
    return (sqrt(float(np.mean(np.square(at_t)))),
            sqrt(float(np.mean(np.square(at_1)))))
