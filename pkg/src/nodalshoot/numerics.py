"""Small deterministic numerical primitives shared across the package.

Everything here is plain bracketed/stack-based scalar numerics: no randomness,
no global state, bitwise-reproducible results for identical inputs.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

from .errors import BracketError, QuadratureError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def bisect_root(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    rtol: float = 1e-12,
    atol: float = 0.0,
    max_iter: int = 200,
) -> float:
    """Bracketed bisection for the boundary where ``fn`` changes sign.

    ``fn(lo)`` must be nonzero; ``fn(hi)`` may be zero or of opposite sign
    (a zero endpoint is treated as "other side", so on a flat plateau of
    zeros the returned point is the plateau edge nearest ``lo``).
    """
    flo = fn(lo)
    if flo == 0.0:
        return lo
    fhi = fn(hi)
    if flo * fhi > 0.0:
        raise BracketError(f"no sign change of function on [{lo!r}, {hi!r}]")
    s = math.copysign(1.0, flo)
    for _ in range(max_iter):
        if abs(hi - lo) <= atol + rtol * max(abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = fn(mid)
        if fm == 0.0 or math.copysign(1.0, fm) != s:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def golden_min(
    fn: Callable[[float], float],
    a: float,
    b: float,
    *,
    rtol: float = 1e-12,
    atol: float = 1e-300,
    max_iter: int = 400,
) -> tuple[float, float]:
    """Golden-section minimization of ``fn`` on [a, b] (assumes unimodal)."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(max_iter):
        if abs(b - a) <= atol + rtol * (abs(a) + abs(b)):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fn(x2)
    x = x1 if f1 <= f2 else x2
    return x, fn(x)


def grid_min(
    fn: Callable[[float], float],
    a: float,
    b: float,
    *,
    n: int = 2048,
    rtol: float = 1e-13,
) -> tuple[float, float]:
    """Global scan on an (n+1)-point grid followed by golden refinement
    around the best cell; robust for multimodal functions."""
    if not b > a:
        raise BracketError(f"empty minimization interval [{a!r}, {b!r}]")
    h = (b - a) / n
    best_i, best_v = 0, fn(a)
    for i in range(1, n + 1):
        v = fn(a + i * h)
        if v < best_v:
            best_i, best_v = i, v
    lo = a + max(best_i - 1, 0) * h
    hi = a + min(best_i + 1, n) * h
    return golden_min(fn, lo, hi, rtol=rtol)


def adaptive_simpson(
    fn: Callable[[float], float],
    a: float,
    b: float,
    *,
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-12,
    max_intervals: int = 1_000_000,
) -> float:
    """Adaptive bisected Simpson quadrature of ``fn`` over [a, b].

    The local acceptance test uses ``max(abs_tol, rel_tol * |I_coarse|)``
    distributed proportionally to subinterval length, so very large and very
    small integrals are both handled.  Raises :class:`QuadratureError` with
    the achieved error estimate when the subinterval cap is exhausted.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0

    fa, fb = fn(a), fn(b)
    mid = 0.5 * (a + b)
    fm = fn(mid)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    budget = max(abs_tol, rel_tol * abs(whole))

    # stack entries: (a, fa, m, fm, b, fb, S, tol)
    stack = [(a, fa, mid, fm, b, fb, whole, budget)]
    total = 0.0
    pending_err = 0.0
    used = 1
    while stack:
        xa, fxa, xm, fxm, xb, fxb, s_whole, tol = stack.pop()
        lm = 0.5 * (xa + xm)
        rm = 0.5 * (xm + xb)
        flm, frm = fn(lm), fn(rm)
        s_left = (xm - xa) / 6.0 * (fxa + 4.0 * flm + fxm)
        s_right = (xb - xm) / 6.0 * (fxm + 4.0 * frm + fxb)
        err = (s_left + s_right - s_whole) / 15.0
        if abs(err) <= tol or (xm - xa) <= 1e-15 * (abs(xa) + abs(xm)):
            total += s_left + s_right + err
            pending_err += abs(err)
            continue
        used += 2
        if used > max_intervals:
            raise QuadratureError(
                f"adaptive Simpson exceeded {max_intervals} subintervals on "
                f"[{a!r}, {b!r}]",
                achieved=pending_err + abs(err),
            )
        stack.append((xa, fxa, lm, flm, xm, fxm, s_left, 0.5 * tol))
        stack.append((xm, fxm, rm, frm, xb, fxb, s_right, 0.5 * tol))
    return sign * total


def aitken_limit(seq: Sequence[float], *, sweeps: int = 3) -> float:
    """Aitken delta-squared extrapolation of a convergent sequence.

    Exact (to roundoff) for sequences with geometrically decaying error,
    which is what geometric sampling ladders produce for power-law tails.
    """
    cur = list(seq)
    for _ in range(sweeps):
        if len(cur) < 3:
            break
        nxt = []
        for i in range(len(cur) - 2):
            d1 = cur[i + 1] - cur[i]
            d2 = cur[i + 2] - 2.0 * cur[i + 1] + cur[i]
            if d2 == 0.0 or not math.isfinite(d2):
                nxt.append(cur[i + 2])
            else:
                nxt.append(cur[i] - d1 * d1 / d2)
        cur = nxt
    return cur[-1] if cur else float("nan")


def fit_intercept(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares intercept of y against x (extrapolation to x = 0)."""
    n = len(x)
    if n == 0:
        return float("nan")
    if n == 1:
        return y[0]
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((xi - mx) ** 2 for xi in x)
    if sxx == 0.0:
        return my
    sxy = sum((xi - mx) * (yi - my) for xi, yi in zip(x, y))
    slope = sxy / sxx
    return my - slope * mx
