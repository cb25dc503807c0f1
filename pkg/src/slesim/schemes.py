"""One-step integrators for the backward radial SDE on the half plane.

Two equivalent parameterizations are supported:

    unit_noise    dZ = -(2/kappa) / Z dt + dB
    scaled_noise  dZ = -2 / Z dt + sqrt(kappa) dB

They are linked by Brownian scaling: stepping scaled_noise from z and
dividing by sqrt(kappa) equals stepping unit_noise from z / sqrt(kappa)
with the same increments.  Both split into two exactly solvable flows: the
drift flow z -> sqrt_h(z^2 - 4t) (for drift -2/z) and the noise flow
z -> z + sqrt(kappa) u.  The Strang composition of those flows collapses
to one closed form, ``nv_step``, which is measure preserving in the sense
that E[Z^2] moves exactly by (kappa - 4) h per step.

``taylor_step`` instead assembles the truncated stochastic Taylor sum
sum_I (V_I Id)(z) * X^I over words I, with the operator monomials from
:mod:`slesim.vfalgebra` and the integrals from :mod:`slesim.integrals`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import sqrt

from .brownian import BrownianPath
from .halfplane import sqrt_h
from .integrals import ITO_LEVEL2, STRATONOVICH, IteratedIntegralTable
from .vfalgebra import compose, deg, eval_term

__all__ = [
    "UNIT_NOISE",
    "SCALED_NOISE",
    "BY_LENGTH",
    "BY_DEGREE",
    "REFERENCE_RTOL",
    "SchemeConfig",
    "flow_drift",
    "flow_noise",
    "nv_step",
    "euler_step",
    "taylor_step",
    "reference_solve",
]

UNIT_NOISE = "unit_noise"
SCALED_NOISE = "scaled_noise"
BY_LENGTH = "by_length"
BY_DEGREE = "by_degree"

# Default relative tolerance for "doubling the substeps no longer moves the
# reference"; callers measuring a small error should tighten or rescale it
# to the size of the quantity they resolve.
REFERENCE_RTOL = 1e-8


@dataclass(frozen=True)
class SchemeConfig:
    """Which equation, truncation rule, and integral convention to use."""

    kappa: float
    convention: str = UNIT_NOISE
    taylor_truncation: str = BY_LENGTH
    integral_convention: str = STRATONOVICH

    def __post_init__(self):
        if self.kappa <= 0.0:
            raise ValueError("kappa must be positive")
        if self.convention not in (UNIT_NOISE, SCALED_NOISE):
            raise ValueError(f"unknown convention {self.convention!r}")
        if self.taylor_truncation not in (BY_LENGTH, BY_DEGREE):
            raise ValueError(f"unknown truncation {self.taylor_truncation!r}")
        if self.integral_convention not in (STRATONOVICH, ITO_LEVEL2):
            raise ValueError(
                f"unknown integral convention {self.integral_convention!r}")


def flow_drift(z, t):
    """Exact drift flow exp(t V0) z = sqrt_h(z^2 - 4t) for V0 = -2/z.

    Maps the closed upper half plane into itself and never lowers the
    imaginary part.  Accepts scalars or arrays.
    """
    if t < 0.0:
        raise ValueError("flow time must be nonnegative")
    return sqrt_h(z * z - 4.0 * t)


def flow_noise(z, u, kappa):
    """Exact noise flow z + sqrt(kappa) u (horizontal translation)."""
    if kappa < 0.0:
        raise ValueError("kappa must be nonnegative")
    return z + sqrt(kappa) * u


def nv_step(z, h, dB, kappa, convention: str = SCALED_NOISE):
    """Strang splitting step in closed form.

    For the default scaled_noise equation this is

        sqrt_h((sqrt_h(z^2 - 2h) + sqrt(kappa) dB)^2 - 2h),

    identical to flow_drift(h/2) then flow_noise(dB) then flow_drift(h/2);
    for unit_noise the drift strength is 2/kappa, giving

        sqrt_h((sqrt_h(z^2 - 2h/kappa) + dB)^2 - 2h/kappa).

    Accepts scalars or arrays for z and dB.
    """
    if h < 0.0:
        raise ValueError("step size must be nonnegative")
    if kappa < 0.0:
        raise ValueError("kappa must be nonnegative")
    if convention == SCALED_NOISE:
        c = 2.0 * h
        y = sqrt_h(z * z - c) + sqrt(kappa) * dB
    elif convention == UNIT_NOISE:
        if kappa == 0.0:
            raise ValueError("unit_noise requires kappa > 0")
        c = 2.0 * h / kappa
        y = sqrt_h(z * z - c) + dB
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return sqrt_h(y * y - c)


def euler_step(z, h, dB, cfg: SchemeConfig):
    """One Euler-Maruyama step; with constant diffusion this is also the
    Milstein step.  Has a pole at z = 0."""
    if h < 0.0:
        raise ValueError("step size must be nonnegative")
    if cfg.convention == UNIT_NOISE:
        return z - (2.0 / cfg.kappa) / z * h + dB
    return z - 2.0 / z * h + sqrt(cfg.kappa) * dB


def _truncation_words(r: int, rule: str):
    """Deterministic (lexicographic within length) word list for a cutoff."""
    if rule == BY_LENGTH:
        lengths = range(r + 1)
        keep = lambda w: True  # noqa: E731
    else:
        lengths = range(2 * r + 1)
        keep = lambda w: deg(w) <= r  # noqa: E731
    for n in lengths:
        for w in itertools.product((0, 1), repeat=n):
            if keep(w):
                yield w


def taylor_step(z, table: IteratedIntegralTable, r: int,
                cfg: SchemeConfig) -> complex:
    """Truncated stochastic Taylor approximation over one interval.

    Sums (V_I Id)(z) X^I_{0,t} over words I with length <= r (truncation
    ``by_length``, default) or deg(I) <= r (``by_degree``).  At r = 1 the
    by_length sum is exactly the Euler step on the interval's increment.

    Args:
        z: expansion point, im(z) >= 0 away from the pole at 0.
        table: integrals over the step interval, deep enough for the
            truncation (length r, or 2r for by_degree).
        r: truncation level, >= 0.
        cfg: supplies kappa, convention, truncation rule, and the integral
            convention, which must match the table's.
    """
    if r < 0:
        raise ValueError("truncation level must be nonnegative")
    if table.convention != cfg.integral_convention:
        raise ValueError(
            f"table was built as {table.convention!r} but the config "
            f"expects {cfg.integral_convention!r}")
    if cfg.convention == SCALED_NOISE:
        root = sqrt(cfg.kappa)
        return root * taylor_step(complex(z) / root, table, r,
                                  SchemeConfig(cfg.kappa, UNIT_NOISE,
                                               cfg.taylor_truncation,
                                               cfg.integral_convention))
    z = complex(z)
    total = 0j
    for word in _truncation_words(r, cfg.taylor_truncation):
        term = compose(word)
        if term.is_zero():
            continue
        try:
            entry = table.entries[word]
        except KeyError:
            raise ValueError(
                f"table depth {table.depth} too shallow for word {word}"
            ) from None
        total += eval_term(term, z, cfg.kappa) * entry
    return total


def reference_solve(z0, path: BrownianPath, t: float, substeps: int,
                    cfg: SchemeConfig) -> complex:
    """Fine-grid splitting solution used as ground truth.

    Steps ``nv_step`` across every sample interval of ``path`` inside
    [0, t]; the path must carry at least ``substeps`` intervals there.
    Convergence is the caller's check: refine the path (midpoint passes),
    solve again, and require the two answers to agree, by default to
    REFERENCE_RTOL relative.
    """
    stop = path.index_of(t)
    if stop < substeps:
        raise ValueError(
            f"path has {stop} intervals in [0, {t}], need >= {substeps}")
    times = path.times.tolist()
    values = path.values.tolist()
    z = complex(z0)
    for k in range(stop):
        z = nv_step(z, times[k + 1] - times[k], values[k + 1] - values[k],
                    cfg.kappa, cfg.convention)
    return z
