"""Sampled Brownian driver with bridge refinement and exact bookkeeping.

A path is a strictly increasing time grid with one sample per knot and
B(0) = 0.  Intervals can be bisected after the fact: the midpoint sample is
drawn from the Brownian bridge conditioned on the two endpoints, so earlier
samples never move.  Every random draw is keyed by (seed, quantity drawn),
not by call order: the initial increments use one Philox stream, and each
midpoint uses a stream keyed by the bit pattern of its time.  Two runs that
bisect the same intervals in different orders therefore produce bitwise
identical samples.
"""

from __future__ import annotations

import bisect
import struct
from math import sqrt

import numpy as np

__all__ = ["BrownianPath", "philox_stream"]

_MASK64 = (1 << 64) - 1
# Tag for the initial-increment stream.  Midpoint streams are tagged with the
# float64 bit pattern of the midpoint time, which is never 0 for t > 0.
_TAG_INCREMENTS = 0


def philox_stream(seed: int, tag: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, tag), not by call order."""
    key = np.array([seed & _MASK64, tag & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


_stream = philox_stream


def _time_tag(t: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", t))[0]


class BrownianPath:
    """Piecewise-sampled Brownian motion on [0, T].

    Construct with :meth:`sample_uniform`, :meth:`zeros`,
    :meth:`from_samples`, or :meth:`from_csv`.
    """

    def __init__(self, times, values, seed: int, frozen: bool = False,
                 bridge_scale: float = 1.0):
        times = [float(t) for t in times]
        values = [float(v) for v in values]
        if len(times) != len(values):
            raise ValueError("times and values must have equal length")
        if len(times) < 1 or times[0] != 0.0 or values[0] != 0.0:
            raise ValueError("path must start at B(0) = 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        self._times = times
        self._values = values
        self.seed = int(seed)
        self._frozen = bool(frozen)
        self._bridge_scale = float(bridge_scale)
        self._cache: tuple[np.ndarray, np.ndarray] | None = None

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def sample_uniform(cls, T: float, n: int, seed: int) -> "BrownianPath":
        """Sample B on the uniform grid k*T/n, k = 0..n.

        Args:
            T: horizon, > 0.
            n: number of intervals, >= 1.
            seed: stream key; equal seeds give bitwise-equal paths.
        """
        if T <= 0.0:
            raise ValueError("horizon must be positive")
        if n < 1:
            raise ValueError("need at least one interval")
        # T * (k/n) puts the last knot at exactly T.
        inc = _stream(seed, _TAG_INCREMENTS).standard_normal(n) * sqrt(T / n)
        values = np.concatenate(([0.0], np.cumsum(inc)))
        times = [T * (k / n) for k in range(n + 1)]
        return cls(times, values, seed)

    @classmethod
    def zeros(cls, T: float, n: int) -> "BrownianPath":
        """The identically-zero driver; stays zero under refinement."""
        if T <= 0.0 or n < 1:
            raise ValueError("horizon must be positive and n >= 1")
        times = [T * (k / n) for k in range(n + 1)]
        return cls(times, [0.0] * (n + 1), seed=0, bridge_scale=0.0)

    @classmethod
    def from_samples(cls, times, values, seed: int = 0) -> "BrownianPath":
        """Wrap existing samples (validated) into a path."""
        return cls(times, values, seed)

    @classmethod
    def from_csv(cls, filename, seed: int = 0) -> "BrownianPath":
        """Load a path written by :meth:`to_csv` (header ``t,B``)."""
        times: list[float] = []
        values: list[float] = []
        with open(filename, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            if header != "t,B":
                raise ValueError(f"expected header 't,B', got {header!r}")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                a, b = line.split(",")
                times.append(float(a))
                values.append(float(b))
        return cls(times, values, seed)

    def to_csv(self, filename) -> None:
        """Write ``t,B`` rows at full (round-trip) precision."""
        with open(filename, "w", encoding="ascii") as fh:
            fh.write("t,B\n")
            for t, b in zip(self._times, self._values):
                fh.write(f"{t!r},{b!r}\n")

    # ------------------------------------------------------------------
    # accessors

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def horizon(self) -> float:
        return self._times[-1]

    @property
    def times(self) -> np.ndarray:
        self._refresh()
        return self._cache[0]

    @property
    def values(self) -> np.ndarray:
        self._refresh()
        return self._cache[1]

    def _refresh(self) -> None:
        if self._cache is None:
            self._cache = (np.array(self._times), np.array(self._values))

    def __len__(self) -> int:
        return len(self._times)

    @property
    def n_intervals(self) -> int:
        return len(self._times) - 1

    def sample(self, i: int) -> tuple[float, float]:
        """(time, value) of knot ``i``; supports negative indices."""
        return self._times[i], self._values[i]

    def index_of(self, t: float) -> int:
        """Index of sampled time ``t`` (exact match) or ValueError."""
        i = bisect.bisect_left(self._times, t)
        if i == len(self._times) or self._times[i] != t:
            raise ValueError(f"time {t!r} is not a sampled time")
        return i

    def value_at(self, t: float) -> float:
        return self._values[self.index_of(t)]

    def increment(self, s: float, t: float) -> float:
        """B(t) - B(s) for two sampled times."""
        return self.value_at(t) - self.value_at(s)

    # ------------------------------------------------------------------
    # mutation and derived paths

    def insert_midpoint(self, i: int) -> "BrownianPath":
        """Bisect interval ``i``, drawing the bridge midpoint; returns self.

        The draw is keyed by the midpoint time, so it does not depend on
        how many other intervals were bisected first.  Existing samples
        are untouched.
        """
        if self._frozen:
            raise ValueError("path is frozen")
        if not 0 <= i < self.n_intervals:
            raise IndexError(f"interval index {i} out of range")
        t0, t1 = self._times[i], self._times[i + 1]
        tm = 0.5 * (t0 + t1)
        if not t0 < tm < t1:
            raise ValueError(f"interval ({t0!r}, {t1!r}) cannot be bisected "
                             "in float64")
        mean = 0.5 * (self._values[i] + self._values[i + 1])
        sd = sqrt(0.25 * (t1 - t0)) * self._bridge_scale
        xi = float(_stream(self.seed, _time_tag(tm)).standard_normal()) if sd else 0.0
        self._times.insert(i + 1, tm)
        self._values.insert(i + 1, mean + sd * xi)
        self._cache = None
        return self

    def refine(self) -> "BrownianPath":
        """One full bisection pass: every interval gains its midpoint."""
        for i in reversed(range(self.n_intervals)):
            self.insert_midpoint(i)
        return self

    def rescale(self, c: float) -> "BrownianPath":
        """Brownian-scaled copy: times t/c, values B(t)/sqrt(c).

        For c > 0 the result is again a standard Brownian sample; horizon
        T becomes T/c.
        """
        if c <= 0.0:
            raise ValueError("scale must be positive")
        rc = sqrt(c)
        return BrownianPath([t / c for t in self._times],
                            [v / rc for v in self._values],
                            seed=self.seed, bridge_scale=self._bridge_scale)

    def freeze(self) -> "BrownianPath":
        """Immutable snapshot; later mutation of self does not leak in."""
        return BrownianPath(list(self._times), list(self._values),
                            seed=self.seed, frozen=True,
                            bridge_scale=self._bridge_scale)

    def copy(self) -> "BrownianPath":
        return BrownianPath(list(self._times), list(self._values),
                            seed=self.seed, frozen=False,
                            bridge_scale=self._bridge_scale)
