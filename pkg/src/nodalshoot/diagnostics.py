"""Trajectory-level verification helpers.

These recompute, from samples and dense output only, the structural
identities every valid trajectory must satisfy: energy decay, the virial
balance (the Pohozaev-type identity), and the conservative form of the
radial equation itself.  The solver uses them to validate accepted bound
states; the test suite uses them as acceptance checks.
"""

from __future__ import annotations

import math

from .integrator import ShootState, Trajectory, energy, pohozaev
from .nonlinearity import Nonlinearity


def max_energy_increment(nl: Nonlinearity, tr: Trajectory) -> float:
    """Largest scaled increase of the energy between consecutive samples;
    nonpositive (up to tolerance) along correct trajectories."""
    worst = -math.inf
    prev = energy(nl, tr.state(0))
    for i in range(1, len(tr)):
        cur = energy(nl, tr.state(i))
        inc = (cur - prev) / (1.0 + abs(prev))
        if inc > worst:
            worst = inc
        prev = cur
    return worst


def energy_step_residual(nl: Nonlinearity, tr: Trajectory) -> float:
    """Per-sample-interval defect between the energy change and the Simpson
    quadrature of its exact derivative -((N-1)/r)|u'|^m, scaled by 1+|I|.

    The midpoint comes from the dense interpolant, so the dominant weight of
    the quadrature sits at the interval midpoint.
    """
    m, N = nl.m, nl.N
    mc = m / (m - 1.0)

    def iprime(st: ShootState) -> float:
        return -(N - 1.0) / st.r * abs(st.v) ** mc

    worst = 0.0
    prev_st = tr.state(0)
    prev_I = energy(nl, prev_st)
    prev_d = iprime(prev_st)
    for i in range(1, len(tr)):
        st = tr.state(i)
        cur_I = energy(nl, st)
        cur_d = iprime(st)
        h = st.r - prev_st.r
        mid = tr.interpolate(prev_st.r + 0.5 * h)
        quad = h / 6.0 * (prev_d + 4.0 * iprime(mid) + cur_d)
        res = abs((cur_I - prev_I) - quad) / (1.0 + abs(cur_I))
        if res > worst:
            worst = res
        prev_st, prev_I, prev_d = st, cur_I, cur_d
    return worst


def pohozaev_residual(nl: Nonlinearity, tr: Trajectory) -> float:
    """Largest scaled defect |E(r_i) - int_0^{r_i} t^(N-1) Q(u) dt| along the
    samples, with the integral accumulated by per-interval Simpson (dense
    midpoints) and the analytic leading-order seed below the first sample."""
    m, N = nl.m, nl.N

    def g(st: ShootState) -> float:
        return st.r ** (N - 1.0) * nl.Q(st.u)

    st0 = tr.state(0)
    acc = nl.Q(tr.alpha) * st0.r ** N / N  # u ~ alpha below the series start
    worst = abs(pohozaev(nl, st0) - acc) / (1.0 + abs(pohozaev(nl, st0)))
    prev_st = st0
    prev_g = g(st0)
    for i in range(1, len(tr)):
        st = tr.state(i)
        cur_g = g(st)
        h = st.r - prev_st.r
        # composite Simpson, 4 dense panels per sample interval: keeps the
        # accumulated absolute error below the identity tolerance even where
        # the weighted energy itself has cancelled to ~0 (the hover tail)
        gs = [prev_g]
        for j in range(1, 8):
            gs.append(g(tr.interpolate(prev_st.r + h * j / 8.0)))
        gs.append(cur_g)
        acc += h / 24.0 * (gs[0] + 4.0 * gs[1] + 2.0 * gs[2] + 4.0 * gs[3]
                           + 2.0 * gs[4] + 4.0 * gs[5] + 2.0 * gs[6]
                           + 4.0 * gs[7] + gs[8])
        E = pohozaev(nl, st)
        res = abs(E - acc) / (1.0 + abs(E))
        if res > worst:
            worst = res
        prev_st, prev_g = st, cur_g
    return worst


def equation_residual(nl: Nonlinearity, tr: Trajectory,
                      n_checkpoints: int = 100) -> float:
    """Conservative-form check (r^(N-1) v)' = -r^(N-1) f(u) by 4th-order
    centered finite differences of the flux on the dense output, at up to
    ``n_checkpoints`` step midpoints; returns the largest scaled residual
    |FD + r^(N-1) f(u)| / (r^(N-1) (1 + |f(u)|))."""
    N = nl.N
    steps = [s for s in tr.steps if s.r0 + s.h <= tr.r[-1] + 1e-12]
    if not steps:
        return 0.0
    take = max(1, len(steps) // n_checkpoints)
    worst = 0.0
    for s in steps[::take][:n_checkpoints]:
        rc = s.r0 + 0.5 * s.h
        # stencil must stay inside the step and well away from r = 0
        delta = min(1e-2 * rc, 0.125 * s.h)
        if delta <= 0.0:
            continue

        def w(rr: float) -> float:
            _, vv = s.eval(rr)
            return rr ** (N - 1.0) * vv

        fd = (-w(rc + 2.0 * delta) + 8.0 * w(rc + delta)
              - 8.0 * w(rc - delta) + w(rc - 2.0 * delta)) / (12.0 * delta)
        uc, _ = s.eval(rc)
        rn1 = rc ** (N - 1.0)
        fu = nl.eval_f(uc)
        res = abs(fd + rn1 * fu) / (rn1 * (1.0 + abs(fu)))
        if res > worst:
            worst = res
    return worst
