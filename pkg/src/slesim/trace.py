"""Adaptive trace generation by backward composition of slit maps.

The point of the trace at partition time t_k is

    z_k = f_0(f_1(... f_{k-1}(0) ...)),

where f_i is the closed-form splitting step over [t_i, t_{i+1}] driven by
the reversed increment B(t_i) - B(t_{i+1}).  A left-to-right sweep accepts
points while consecutive spatial gaps stay below the tolerance; a violating
interval is bisected through the driver's bridge midpoint and only the
affected suffix is recomputed, since accepted points to the left depend on
nothing to the right.  The refinement draws are keyed by midpoint time, so
tightening the tolerance reuses (not redraws) the coarser run's samples.

Once the partition is frozen, every point is an independent composition;
the final pass evaluates all of them, which costs sum_k k map applications,
and that count is reported in the stats.
"""

from __future__ import annotations

import cmath
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import sqrt

import numpy as np

from .brownian import BrownianPath
from .schemes import nv_step

__all__ = [
    "TraceRefinementError",
    "TraceResult",
    "slit_map",
    "build_trace",
    "render_svg",
    "write_trace_csv",
]


class TraceRefinementError(RuntimeError):
    """Gap condition unreachable within max_depth on some interval."""

    def __init__(self, interval: tuple[float, float], depth: int, gap: float):
        self.interval = interval
        self.depth = depth
        self.gap = gap
        super().__init__(
            f"interval ({interval[0]!r}, {interval[1]!r}) still has gap "
            f"{gap:.6g} after {depth} bisections")


@dataclass
class TraceResult:
    """Accepted trace points with the partition and build diagnostics."""

    points: list
    partition: np.ndarray
    tolerance: float
    kappa: float
    shift_applied: bool
    stats: dict

    def __len__(self) -> int:
        return len(self.points)


def slit_map(z, h, dB, kappa):
    """One backward slit map; identical formula to the splitting step.

    Composition runs backward in time, so callers feed the reversed
    increment dB = B(t_i) - B(t_{i+1}) for the interval [t_i, t_{i+1}].
    """
    return nv_step(z, h, dB, kappa)


def _eval_chain(j: int, tt: list, dd: list, cc: list) -> complex:
    # f_0 ... f_{j-1} applied to 0; rightmost (innermost) map first.
    # cc[i] = 2 h_i, dd[i] = sqrt(kappa) (B_i - B_{i+1}).
    z = 0j
    _sqrt = cmath.sqrt
    for i in range(j - 1, -1, -1):
        c = cc[i]
        s = _sqrt(z * z - c)
        if s.imag < 0.0 or (s.imag == 0.0 and s.real < 0.0):
            s = -s
        y = s + dd[i]
        s = _sqrt(y * y - c)
        if s.imag < 0.0 or (s.imag == 0.0 and s.real < 0.0):
            s = -s
        z = s
    return z


def build_trace(path: BrownianPath, T: float, kappa: float, n_init: int = 64,
                tolerance: float = 0.02, max_depth: int = 40,
                apply_shift: bool = False, threads: int = 1) -> TraceResult:
    """Adaptively refined trace of the driver on [0, T].

    Args:
        path: driver, mutated in place by bridge bisections; must carry T
            as a sample time and must not be frozen.  If its grid on
            [0, T] is coarser than n_init intervals it is pre-refined by
            midpoint passes.
        T: horizon, > 0.
        kappa: noise strength, >= 0 (0 gives the deterministic slit).
        n_init: minimum initial partition size, >= 1.
        tolerance: accepted spatial gap bound, > 0.
        max_depth: bisection budget per initial interval.
        apply_shift: translate all points by sqrt(kappa) B(T) (maps the
            picture to the coordinate frame anchored at the driver's
            endpoint).
        threads: worker bound for the final evaluation pass; any value
            produces identical results.

    Returns:
        TraceResult; points[0] is (0, 0) and every consecutive gap is
        below tolerance.

    Raises:
        TraceRefinementError: some interval cannot meet the gap bound
            within max_depth bisections.
    """
    if T <= 0.0:
        raise ValueError("horizon must be positive")
    if kappa < 0.0:
        raise ValueError("kappa must be nonnegative")
    if n_init < 1:
        raise ValueError("n_init must be >= 1")
    if tolerance <= 0.0:
        raise ValueError("tolerance must be positive")
    if max_depth < 0:
        raise ValueError("max_depth must be nonnegative")
    if path.frozen:
        raise ValueError("path is frozen; build_trace refines its driver")
    if path.horizon < T:
        raise ValueError(f"path horizon {path.horizon} is shorter than {T}")

    end = path.index_of(T)
    while end < n_init:
        for i in reversed(range(end)):
            path.insert_midpoint(i)
        end = path.index_of(T)

    sqkap = sqrt(kappa)
    tt = [path.sample(i)[0] for i in range(end + 1)]
    bb = [path.sample(i)[1] for i in range(end + 1)]
    cc = [2.0 * (b - a) for a, b in zip(tt, tt[1:])]
    dd = [sqkap * (a - b) for a, b in zip(bb, bb[1:])]

    zz = [0j]
    depth_seen = 0

    def refine_interval(i: int, depth: int) -> None:
        # pre: points 0..i accepted (len(zz) == i + 1)
        nonlocal depth_seen
        depth_seen = max(depth_seen, depth)
        z_r = _eval_chain(i + 1, tt, dd, cc)
        if abs(z_r - zz[i]) < tolerance:
            zz.append(z_r)
            return
        if depth >= max_depth:
            raise TraceRefinementError((tt[i], tt[i + 1]), depth,
                                       abs(z_r - zz[i]))
        path.insert_midpoint(i)
        tm, bm = path.sample(i + 1)
        tt.insert(i + 1, tm)
        bb.insert(i + 1, bm)
        cc[i] = 2.0 * (tm - tt[i])
        cc.insert(i + 1, 2.0 * (tt[i + 2] - tm))
        dd[i] = sqkap * (bb[i] - bm)
        dd.insert(i + 1, sqkap * (bm - bb[i + 2]))
        refine_interval(i, depth + 1)
        refine_interval(len(zz) - 1, depth + 1)

    while len(zz) < len(tt):
        refine_interval(len(zz) - 1, 0)

    # Final pass over the frozen partition: independent compositions.
    n_pts = len(tt) - 1
    evaluations = n_pts * (n_pts + 1) // 2

    def eval_range(lo: int, hi: int) -> list:
        return [_eval_chain(j, tt, dd, cc) for j in range(lo, hi)]

    if threads > 1 and n_pts > 1:
        bounds = np.linspace(1, n_pts + 1, min(threads, n_pts) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = pool.map(eval_range, bounds[:-1], bounds[1:])
        final = [0j]
        for chunk in chunks:
            final.extend(chunk)
    else:
        final = [0j] + eval_range(1, n_pts + 1)

    for k in range(1, n_pts + 1):
        if final[k] != zz[k]:
            raise RuntimeError("final evaluation disagrees with the sweep; "
                               "this is a bug")
        if abs(final[k] - final[k - 1]) >= tolerance:
            raise RuntimeError("gap bound violated after freeze; this is a bug")

    shift = sqkap * bb[-1] if apply_shift else 0.0
    points = [(t, z + shift) for t, z in zip(tt, final)]
    return TraceResult(points=points, partition=np.array(tt),
                       tolerance=tolerance, kappa=kappa,
                       shift_applied=bool(apply_shift),
                       stats={"refinement_depth_max": depth_seen,
                              "map_evaluations": evaluations})


def render_svg(result: TraceResult, width: int = 800, height: int = 600) -> str:
    """Standalone SVG of the trace polyline with the real axis drawn.

    Output is a deterministic function of the input (fixed formatting,
    no timestamps), so renders of equal traces are byte-identical.
    """
    if len(result.points) == 0:
        raise ValueError("empty trace")
    if width < 10 or height < 10:
        raise ValueError("canvas too small")
    xs = [z.real for _, z in result.points]
    ys = [z.imag for _, z in result.points]
    xmin, xmax = min(xs), max(xs)
    ymin, ymax = min(0.0, min(ys)), max(ys)
    pad = 0.05 * max(xmax - xmin, ymax - ymin, 1e-9)
    xmin, xmax = xmin - pad, xmax + pad
    ymin, ymax = ymin - pad, ymax + pad
    sx = (width - 20) / (xmax - xmin)
    sy = (height - 20) / (ymax - ymin)

    def to_px(x: float, y: float) -> str:
        return f"{10 + (x - xmin) * sx:.3f},{height - 10 - (y - ymin) * sy:.3f}"

    axis_y = f"{height - 10 - (0.0 - ymin) * sy:.3f}"
    pts = " ".join(to_px(x, y) for x, y in zip(xs, ys))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f'<line x1="0" y1="{axis_y}" x2="{width}" y2="{axis_y}" '
        f'stroke="#999999" stroke-width="1"/>\n'
        f'<polyline points="{pts}" fill="none" stroke="#1f4e8c" '
        f'stroke-width="1"/>\n'
        f"</svg>\n"
    )


def write_trace_csv(result: TraceResult, filename) -> None:
    """Write ``t,re,im`` rows at full (round-trip) precision."""
    with open(filename, "w", encoding="ascii") as fh:
        fh.write("t,re,im\n")
        for t, z in result.points:
            fh.write(f"{t!r},{z.real!r},{z.imag!r}\n")
