"""Landmark constants of a nonlinearity: zeros of the primitive straddling
the origin, the adjacent zeros of f beyond them (possibly infinite), the well
depth, the barrier level, and the end limits of the primitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .errors import HypothesisError
from .nonlinearity import INF, Nonlinearity, crit_exponent
from .numerics import aitken_limit, bisect_root, grid_min


@dataclass(frozen=True)
class Landmarks:
    """Structural constants extracted from one nonlinearity.

    ``F_zero_pos``/``F_zero_neg`` are the zeros of the primitive F adjacent
    to 0 (F < 0 strictly between them, away from 0).  ``f_zero_pos``/
    ``f_zero_neg`` are the first zeros of f beyond them, flagged +/-inf when
    f keeps its sign out to the search box edge.  ``well_depth`` is
    -min F > 0 on [F_zero_neg, F_zero_pos].  ``barrier`` is a level beyond
    F_zero_pos past which the virial density Q stays nonnegative on samples
    (or the midpoint toward a finite f_zero_pos).  ``end_limit_pos/neg`` are
    the limits of F toward the f zeros (extrapolated when infinite).
    """

    F_zero_neg: float
    F_zero_pos: float
    f_zero_neg: float
    f_zero_pos: float
    well_depth: float
    barrier: float
    crit_exp: float
    end_limit_pos: float
    end_limit_neg: float

    @property
    def shooting_interval(self) -> tuple[float, float]:
        return self.F_zero_pos, self.f_zero_pos

    def to_dict(self) -> dict:
        return asdict(self)


def _scan_F_root(nl: Nonlinearity, side: int, box_edge: float, n: int) -> float:
    """First zero of F on the given side of 0 (side = +1 or -1)."""
    edge = abs(box_edge)
    lo_mag = 1e-8 * edge
    ratio = (edge / lo_mag) ** (1.0 / n)
    prev = side * lo_mag
    Fp = nl.F(prev)
    if Fp >= 0.0:
        # retry even closer in before giving up
        for mag in (1e-12 * edge, 1e-14 * edge):
            prev = side * mag
            Fp = nl.F(prev)
            if Fp < 0.0:
                break
        else:
            raise HypothesisError(
                "primitive is not negative next to 0: the well-shape "
                "requirement fails on side %+d" % side)
    mag = lo_mag
    for _ in range(n):
        mag *= ratio
        cur = side * min(mag, edge)
        Fc = nl.F(cur)
        if Fc >= 0.0:
            root = bisect_root(nl.F, prev, cur, rtol=1e-13)
            return root
        prev, Fp = cur, Fc
    raise HypothesisError(
        "primitive never returns to zero on side %+d inside the search box; "
        "well-shape requirement (sign change of F) fails" % side)


def _scan_f_zero(nl: Nonlinearity, beta: float, side: int, box_edge: float,
                 n: int) -> float:
    """First zero of f strictly beyond ``beta`` on the given side, or
    +/-inf when f keeps one sign out to the box edge."""
    span = abs(box_edge) - abs(beta)
    if span <= 0.0:
        return side * INF
    off_lo = max(1e-9, 1e-9 * abs(beta))
    ratio = (span / off_lo) ** (1.0 / n)
    prev = beta + side * off_lo
    sign = math.copysign(1.0, side)  # f has sign of the side beyond beta
    off = off_lo
    for _ in range(n):
        off *= ratio
        cur = beta + side * min(off, span)
        fc = nl.f(cur)
        if fc == 0.0 or math.copysign(1.0, fc) != sign:
            return bisect_root(nl.f, prev, cur, rtol=1e-13)
        prev = cur
    return side * INF


def _end_limit(nl: Nonlinearity, gamma: float, side: int, *,
               ladder_cap: float = 1e9) -> float:
    """Limit of F approaching gamma (finite) or +/-inf (extrapolated)."""
    if math.isfinite(gamma):
        return nl.F(gamma)
    dom = nl.domain[1] if side > 0 else nl.domain[0]
    cap = ladder_cap if not math.isfinite(dom) else abs(dom)
    vals = []
    mag = 100.0
    while mag <= cap:
        vals.append(nl.F(side * mag))
        mag *= 10.0
    if len(vals) >= 3:
        tail = vals[-3:]
        spread = max(tail) - min(tail)
        if spread > 0.25 * (abs(tail[-1]) + 1.0):
            return INF if vals[-1] > vals[0] else -INF
    if len(vals) >= 2 and abs(vals[-1]) > 10.0 * abs(vals[0]) + 1.0:
        return INF if vals[-1] > 0 else -INF
    return aitken_limit(vals)


def _barrier_side(nl: Nonlinearity, start: float, cap: float, n: int) -> float:
    """Smallest grid point t > start with Q(sign * s) >= 0 for all sampled
    s in [t, cap] (positive magnitudes; caller fixes the sign via nl.Q)."""
    lo = abs(start) * (1.0 + 1e-3)
    hi = max(cap, 2.0 * lo)
    ratio = (hi / lo) ** (1.0 / n)
    sgn = math.copysign(1.0, start)
    grid = [lo * ratio ** i for i in range(n + 1)]
    qvals = [nl.Q(sgn * g) for g in grid]
    idx = None
    for i in range(n, -1, -1):
        if qvals[i] < 0.0:
            break
        idx = i
    if idx is None:
        return hi  # no sampled threshold; checker will flag the tail condition
    return grid[idx]


def find_landmarks(nl: Nonlinearity,
                   search_box: tuple[float, float] | None = None,
                   *, barrier: float | None = None,
                   n_scan: int = 4096) -> Landmarks:
    """Locate the landmark constants of ``nl`` inside ``search_box``.

    Zeros of F are bracketed on a log-dense scan and bisected to 1e-13
    relative; zeros of f likewise.  The well depth comes from a global grid
    scan plus golden refinement.  ``barrier`` overrides the default barrier
    level.  Raises :class:`HypothesisError` when F has no sign change on a
    side (well-shape failure).
    """
    box = search_box or nl.search_box
    lo_edge, hi_edge = box
    if not (lo_edge < 0.0 < hi_edge):
        raise HypothesisError("search box must contain 0")

    b_pos = _scan_F_root(nl, +1, hi_edge, n_scan)
    b_neg = _scan_F_root(nl, -1, lo_edge, n_scan)
    g_pos = _scan_f_zero(nl, b_pos, +1, hi_edge, n_scan)
    g_neg = _scan_f_zero(nl, b_neg, -1, lo_edge, n_scan)

    _, fmin = grid_min(nl.F, b_neg, b_pos, n=2048)
    well_depth = -fmin
    if not well_depth > 0.0:
        raise HypothesisError("primitive well has nonpositive depth")

    if barrier is None:
        cands = []
        if math.isfinite(g_pos):
            cands.append(0.5 * (b_pos + g_pos))
        else:
            cands.append(_barrier_side(nl, b_pos, min(hi_edge, 1e6), 2048))
        if math.isfinite(g_neg):
            cands.append(0.5 * (abs(b_neg) + abs(g_neg)))
        else:
            cands.append(_barrier_side(nl, b_neg, min(-lo_edge, 1e6), 2048))
        barrier = max(cands)
        if math.isfinite(g_pos):
            barrier = min(barrier, g_pos * (1.0 - 1e-9))

    return Landmarks(
        F_zero_neg=b_neg,
        F_zero_pos=b_pos,
        f_zero_neg=g_neg,
        f_zero_pos=g_pos,
        well_depth=well_depth,
        barrier=barrier,
        crit_exp=crit_exponent(nl.m, nl.N),
        end_limit_pos=_end_limit(nl, g_pos, +1),
        end_limit_neg=_end_limit(nl, g_neg, -1),
    )


def bound_radius(nl: Nonlinearity, lm: Landmarks, alpha: float) -> float:
    """Amplitude bound C(alpha): the largest |s| with F(s) <= F(alpha)
    (clipped to the search box).  Along any trajectory started at alpha the
    solution magnitude never exceeds it (energy decay)."""
    level = nl.F(alpha)
    c_pos = alpha
    lo_edge = nl.search_box[0]
    neg_edge = lm.f_zero_neg if math.isfinite(lm.f_zero_neg) else lo_edge
    if lm.end_limit_neg <= level or nl.F(neg_edge) <= level:
        c_neg = abs(neg_edge)
    else:
        root = bisect_root(lambda s: nl.F(s) - level, lm.F_zero_neg, neg_edge,
                           rtol=1e-13)
        c_neg = abs(root)
    return max(c_pos, c_neg)
