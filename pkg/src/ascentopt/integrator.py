"""Fixed-step midpoint Runge-Kutta integration on a breakpoint-aligned grid.

The shooting machinery needs the map from initial data to terminal state to
be smooth and deterministic, so the step size is fixed (no adaptivity) and
known discontinuity locations (the motor cutoff) are forced onto grid
nodes.  The scheme is the explicit midpoint method: second order, two rate
evaluations per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationFailed, ModelError, NonFiniteState


@dataclass(frozen=True)
class GridSpec:
    """Uniform-per-segment grid over span = (start, end).

    Segment boundaries are the span ends plus any interior breakpoints;
    n steps are split across segments proportionally to their lengths
    (at least one step per segment), so every breakpoint lands exactly
    on a node and each segment is stepped uniformly.
    """

    n: int
    span: tuple[float, float]
    breakpoints: tuple[float, ...] = field(default=())

    def __post_init__(self):
        a, b = self.span
        if not (math.isfinite(a) and math.isfinite(b) and b > a):
            raise ValueError(f"span must be finite with end > start, got {self.span}")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    def segments(self) -> list[float]:
        a, b = self.span
        inner = sorted({float(t) for t in self.breakpoints if a < t < b})
        return [a, *inner, b]

    def nodes(self) -> np.ndarray:
        """All grid nodes including both span ends and every breakpoint."""
        seg = self.segments()
        nseg = len(seg) - 1
        total = seg[-1] - seg[0]
        lengths = [seg[j + 1] - seg[j] for j in range(nseg)]
        n = max(self.n, nseg)
        # largest-remainder allocation, at least one step per segment
        raw = [length / total * n for length in lengths]
        counts = [max(1, int(c)) for c in raw]
        order = sorted(range(nseg), key=lambda j: raw[j] - int(raw[j]), reverse=True)
        i = 0
        while sum(counts) < n:
            counts[order[i % nseg]] += 1
            i += 1
        while sum(counts) > n:
            j = max(range(nseg), key=lambda j: counts[j])
            if counts[j] == 1:
                break
            counts[j] -= 1
        parts = [np.linspace(seg[j], seg[j + 1], counts[j] + 1)[:-1] for j in range(nseg)]
        return np.concatenate([*parts, [seg[-1]]])


def rk2_step(f, t: float, y: list[float], h: float) -> list[float]:
    """One explicit-midpoint step; y is a plain list of floats."""
    k1 = f(t, y)
    ym = [y[j] + 0.5 * h * k1[j] for j in range(len(y))]
    k2 = f(t + 0.5 * h, ym)
    return [y[j] + h * k2[j] for j in range(len(y))]


def integrate(f, y0, grid: GridSpec):
    """Integrate y' = f(t, y) over the aligned grid; returns (nodes, Y).

    f takes (t, y: sequence of floats) and returns a sequence of rates.
    Y has one row per node, the first being y0.  Model errors raised by f
    are re-raised as IntegrationFailed with the node index attached;
    non-finite states raise NonFiniteState.
    """
    ts = grid.nodes()
    t_list = ts.tolist()
    y = [float(v) for v in y0]
    k = len(y)
    out = np.empty((len(t_list), k))
    out[0] = y
    isfinite = math.isfinite
    for i in range(len(t_list) - 1):
        t = t_list[i]
        h = t_list[i + 1] - t
        try:
            y = rk2_step(f, t, y, h)
        except ModelError as exc:
            raise IntegrationFailed(node=i, t=t, cause=exc) from exc
        except (OverflowError, ValueError, ZeroDivisionError) as exc:
            # scalar math overflows instead of producing inf
            raise NonFiniteState(f"rate arithmetic failed ({exc})",
                                 node=i, t=t) from exc
        for v in y:
            if not isfinite(v):
                raise NonFiniteState(node=i + 1, t=t_list[i + 1])
        out[i + 1] = y
    return ts, out
