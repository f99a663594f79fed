"""Independent reference implementations used as oracles by the test suite.

The fixed-step classical RK4 here is deliberately written against the same
mathematical system as the adaptive integrator but shares none of its code:
plain numpy, fixed steps, sign-flip zero counting.  Agreement between the two
is the cross-integrator acceptance gate.
"""

from __future__ import annotations

import math

import numpy as np


def rk4_shoot(f_vec, m: float, N: float, r0: float, u0, v0, r_end: float,
              h: float):
    """Integrate u' = sgn(v)|v|^(1/(m-1)), v' = -((N-1)/r) v - f(u) from
    (r0, u0, v0) to r_end with fixed-step classical RK4, vectorized across a
    batch of start states.

    Returns (u_end, v_end, zero_counts) where zero_counts are sign flips of
    u between consecutive steps.
    """
    e = 1.0 / (m - 1.0)
    n1 = N - 1.0
    u = np.atleast_1d(np.asarray(u0, dtype=float)).copy()
    v = np.atleast_1d(np.asarray(v0, dtype=float)).copy()
    steps = int(round((r_end - r0) / h))
    h = (r_end - r0) / steps

    def rhs(r, uu, vv):
        du = np.sign(vv) * np.abs(vv) ** e
        dv = -n1 / r * vv - f_vec(uu)
        return du, dv

    sign_prev = np.sign(u)
    counts = np.zeros(u.shape, dtype=int)
    for i in range(steps):
        r = r0 + i * h
        k1u, k1v = rhs(r, u, v)
        k2u, k2v = rhs(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v)
        k3u, k3v = rhs(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v)
        k4u, k4v = rhs(r + h, u + h * k3u, v + h * k3v)
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        s = np.sign(u)
        flips = (s != 0) & (sign_prev != 0) & (s != sign_prev)
        counts += flips
        sign_prev = np.where(s != 0, s, sign_prev)
    return u, v, counts


def rk4_zero_count(nl, alpha: float, r_end: float, h: float,
                   r_start: float = 1e-6) -> int:
    """Zero count of the shooting trajectory via the fixed-step oracle,
    using the same closed-form series handoff at ``r_start``."""
    from nodalshoot.integrator import series_start

    st = series_start(nl, alpha, r_start)
    _, _, counts = rk4_shoot(nl.f_vec, nl.m, nl.N, st.r,
                             np.array([st.u]), np.array([st.v]), r_end, h)
    return int(counts[0])


def simpson_reference(fn, a: float, b: float, n: int = 4096) -> float:
    """Plain composite Simpson with n panels (independent of the adaptive
    quadrature under test)."""
    if n % 2:
        n += 1
    xs = np.linspace(a, b, n + 1)
    ys = np.array([fn(x) for x in xs])
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((b - a) / (3.0 * n) * np.dot(w, ys))
