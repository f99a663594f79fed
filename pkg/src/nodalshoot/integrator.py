"""Adaptive integration of the radial quasilinear flow.

The second-order equation  (phi_m(u'))' + ((N-1)/r) phi_m(u') + f(u) = 0  is
integrated as the first-order system in (u, v) with v = phi_m(u'):

    u' = phi_{m'}(v)
    v' = -((N-1)/r) v - f(u)

v is the C^1 flux variable, so the formulation passes through simple zeros of
u' even for m > 2 where the inverse power map loses Lipschitz continuity at 0.
Stepping is an embedded Dormand-Prince 5(4) pair with PI step-size control and
a quartic dense interpolant; zero crossings of u and v are located on the
dense output by bisection and inserted as exact samples.  Integration starts
from a truncated series expansion at a small radius (the origin is a
coordinate singularity of the system, not of the solution).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, DegenerateStartError, SingularityError
from .nonlinearity import Nonlinearity

__all__ = [
    "ShootState", "IntegratorConfig", "Event", "DenseStep", "Trajectory",
    "phi", "uprime_of", "rhs", "series_start", "integrate", "energy",
    "pohozaev", "write_profile_csv", "read_profile_csv",
]

TERMINATIONS = ("reached_r_max", "double_zero", "flat_at_F_max",
                "converged_to_ell", "step_underflow")


def phi(p: float, x: float) -> float:
    """Odd power map sign(x) |x|^(p-1); phi(m, .) and phi(m', .) are inverses."""
    if x == 0.0:
        return 0.0
    return math.copysign(abs(x) ** (p - 1.0), x)


def uprime_of(m: float, v: float) -> float:
    """Recover u' from the flux v = phi_m(u')."""
    return phi(m / (m - 1.0), v)


@dataclass(frozen=True)
class ShootState:
    r: float
    u: float
    v: float


def rhs(nl: Nonlinearity, state: ShootState) -> tuple[float, float]:
    """(du/dr, dv/dr) at ``state``; raises at the r = 0 singularity."""
    if state.r <= 0.0:
        raise SingularityError("right-hand side is singular at r = 0; "
                               "start from series_start instead")
    mc = nl.m_conj
    du = phi(mc, state.v)
    dv = -(nl.N - 1.0) / state.r * state.v - nl.eval_f(state.u)
    return du, dv


def series_start(nl: Nonlinearity, alpha: float, r_start: float, *,
                 alpha_floor: float | None = None,
                 max_halvings: int = 200) -> ShootState:
    """Leading-order state at a small handoff radius.

    From r^(N-1) phi_m(u') = -int_0^r t^(N-1) f(u) dt the flux is exactly
    v = -f(alpha) r / N to leading order, and integrating once more gives
    u = alpha - (1/m') phi_{m'}(f(alpha)/N) r^{m'}.  ``r_start`` is halved
    until the displacement is small both absolutely and relative to the
    distance from ``alpha_floor`` (when given).
    """
    fa = nl.eval_f(alpha)
    if fa == 0.0:
        raise DegenerateStartError(
            f"f({alpha!r}) = 0: the constant solution u == alpha is the only "
            "continuation from this start value")
    mc = nl.m_conj
    coef = phi(mc, fa / nl.N) / mc
    budget = 1e-3 * (1.0 + abs(alpha))
    if alpha_floor is not None:
        budget = min(budget, 1e-3 * abs(alpha - alpha_floor))
    r0 = r_start
    for _ in range(max_halvings):
        if abs(coef) * r0 ** mc <= budget or r0 <= 5e-308:
            break
        r0 *= 0.5
    return ShootState(r=r0, u=alpha - coef * r0 ** mc, v=-fa * r0 / nl.N)


def energy(nl: Nonlinearity, state: ShootState) -> float:
    """Radial energy |u'|^m / m' + F(u); nonincreasing along trajectories."""
    mc = nl.m_conj
    return abs(state.v) ** mc / mc + nl.eval_F(state.u)


def pohozaev(nl: Nonlinearity, state: ShootState) -> float:
    """Virial-weighted energy m r^N I + (N - m) r^(N-1) v u, whose radial
    derivative is r^(N-1) Q(u)."""
    m, N = nl.m, nl.N
    rN1 = state.r ** (N - 1.0)
    return m * state.r * rN1 * energy(nl, state) + (N - m) * rN1 * state.v * state.u


# ----------------------------------------------------------------------------
# Dormand-Prince 5(4) tableau and dense-output coefficients
# ----------------------------------------------------------------------------

_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
# quartic interpolant: y(r0 + t h) = y0 + h * t*(P.1 + t*(P.2 + t*(P.3 + t*P.4)))
# with P.j = sum_i k_i P[i][j]
_P = (
    (1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0),
    (0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0),
    (0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0),
    (0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0),
    (0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0),
)


@dataclass
class IntegratorConfig:
    """Stepper knobs.  Unset fields resolve from ``r_max``:
    r_start -> 1e-6 max(1, r_max), min_step -> 1e-13 max(1, r_max),
    h_max -> r_max / 10."""

    r_max: float = 50.0
    r_start: float | None = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    min_step: float | None = None
    event_tol: float = 1e-12
    tol_flat: float = 1e-9
    h_max: float | None = None
    max_steps: int = 2_000_000
    alpha_floor: float | None = None

    def __post_init__(self):
        if not self.r_max > 0.0:
            raise ConfigError("r_max must be positive")
        for name in ("rel_tol", "abs_tol", "event_tol", "tol_flat"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.r_start is not None:
            if not 0.0 < self.r_start <= 1e-3 * self.r_max:
                raise ConfigError("r_start must satisfy 0 < r_start <= 1e-3 r_max")
        if self.min_step is not None and not self.min_step > 0.0:
            raise ConfigError("min_step must be positive")

    def resolved_r_start(self) -> float:
        return self.r_start if self.r_start is not None else 1e-6 * max(1.0, self.r_max)

    def resolved_min_step(self) -> float:
        return self.min_step if self.min_step is not None else 1e-13 * max(1.0, self.r_max)

    def resolved_h_max(self) -> float:
        return self.h_max if self.h_max is not None else self.r_max / 10.0

    def with_tightened(self, factor: float) -> "IntegratorConfig":
        return IntegratorConfig(
            r_max=self.r_max, r_start=self.r_start,
            rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor,
            min_step=self.min_step, event_tol=self.event_tol,
            tol_flat=self.tol_flat, h_max=self.h_max,
            max_steps=self.max_steps, alpha_floor=self.alpha_floor)


@dataclass(frozen=True)
class Event:
    kind: str  # "u" (zero of u) or "v" (zero of the flux / turning point)
    r: float
    u: float
    v: float


@dataclass
class DenseStep:
    r0: float
    h: float
    u0: float
    v0: float
    cu: tuple[float, float, float, float]
    cv: tuple[float, float, float, float]

    def eval(self, r: float) -> tuple[float, float]:
        t = (r - self.r0) / self.h
        cu, cv = self.cu, self.cv
        u = self.u0 + self.h * t * (cu[0] + t * (cu[1] + t * (cu[2] + t * cu[3])))
        v = self.v0 + self.h * t * (cv[0] + t * (cv[1] + t * (cv[2] + t * cv[3])))
        return u, v


@dataclass
class Trajectory:
    """Integration record: strictly increasing samples (events inserted),
    per-step dense coefficients, and the termination tag."""

    alpha: float
    m: float
    N: float
    r: list[float] = field(default_factory=list)
    u: list[float] = field(default_factory=list)
    v: list[float] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    steps: list[DenseStep] = field(default_factory=list)
    termination: str = "reached_r_max"

    def __len__(self) -> int:
        return len(self.r)

    def state(self, i: int) -> ShootState:
        return ShootState(self.r[i], self.u[i], self.v[i])

    @property
    def end(self) -> ShootState:
        return self.state(len(self.r) - 1)

    def uprime(self, i: int) -> float:
        return uprime_of(self.m, self.v[i])

    def interpolate(self, r: float) -> ShootState:
        """Dense-output state at radius r (clamped to the computed range)."""
        if not self.steps:
            return self.end
        r = min(max(r, self.r[0]), self.r[-1])
        lo, hi = 0, len(self.steps) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.steps[mid].r0 <= r:
                lo = mid
            else:
                hi = mid - 1
        step = self.steps[lo]
        u, v = step.eval(r)
        return ShootState(r, u, v)


def _initial_step(f, r0, y0, d0y, scale_u, scale_v, h_max, span):
    u0, v0 = y0
    du0, dv0 = d0y
    d0 = math.hypot(u0 / scale_u, v0 / scale_v)
    d1 = math.hypot(du0 / scale_u, dv0 / scale_v)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span, h_max)
    du1, dv1 = f(r0 + h0, u0 + h0 * du0, v0 + h0 * dv0)
    d2 = math.hypot((du1 - du0) / scale_u, (dv1 - dv0) / scale_v) / h0
    dm = max(d1, d2)
    h1 = (0.01 / dm) ** 0.2 if dm > 1e-15 else max(1e-6, h0 * 1e-3)
    return min(100.0 * h0, h1, span, h_max)


def _dense_root(step: DenseStep, comp: int, ta: float, tb: float,
                tol_r: float) -> float:
    """Bisect the dense polynomial component (0 = u, 1 = v) for its root in
    [ta, tb] (sign change assumed); returns the root in t units."""
    ga = step.eval(step.r0 + ta * step.h)[comp]
    if ga == 0.0:
        return ta
    s = math.copysign(1.0, ga)
    for _ in range(90):
        if (tb - ta) * step.h <= tol_r:
            break
        tm = 0.5 * (ta + tb)
        gm = step.eval(step.r0 + tm * step.h)[comp]
        if gm == 0.0 or math.copysign(1.0, gm) != s:
            tb = tm
        else:
            ta = tm
    return 0.5 * (ta + tb)


_N_EVENT_SCAN = 8


def integrate(nl: Nonlinearity, alpha: float, cfg: IntegratorConfig) -> Trajectory:
    """Integrate the shooting problem u(0) = alpha, u'(0) = 0 to ``r_max``
    or an earlier structural termination.

    Terminations: ``double_zero`` (|u| and |u'| below ``tol_flat``
    simultaneously), ``flat_at_F_max`` (turning point on a flat of f where
    the primitive has a relative maximum: continuation is not unique),
    ``converged_to_ell`` (trailing plateau at a zero of f),
    ``step_underflow`` (controller demanded a step below ``min_step``),
    ``reached_r_max`` otherwise.
    """
    m, N = nl.m, nl.N
    mc = nl.m_conj
    mc1 = mc - 1.0
    n1 = N - 1.0
    fn = nl.f if nl.domain == (-math.inf, math.inf) else nl.eval_f

    def deriv(r: float, u: float, v: float) -> tuple[float, float]:
        du = math.copysign(abs(v) ** mc1, v) if v != 0.0 else 0.0
        return du, -n1 / r * v - fn(u)

    start = series_start(nl, alpha, cfg.resolved_r_start(),
                         alpha_floor=cfg.alpha_floor)
    r_max = cfg.r_max
    min_step = cfg.resolved_min_step()
    h_max = cfg.resolved_h_max()
    tol_flat = cfg.tol_flat
    abs_tol, rel_tol = cfg.abs_tol, cfg.rel_tol

    tr = Trajectory(alpha=alpha, m=m, N=N)
    r, u, v = start.r, start.u, start.v
    tr.r.append(r)
    tr.u.append(u)
    tr.v.append(v)

    def uprime(vv: float) -> float:
        return math.copysign(abs(vv) ** mc1, vv) if vv != 0.0 else 0.0

    def flat_check(rr: float, uu: float, vv: float) -> str | None:
        up = uprime(vv)
        if abs(up) > tol_flat:
            return None
        if abs(uu) <= tol_flat:
            return "double_zero"
        fu = fn(uu)
        if abs(fu) <= tol_flat and abs(uu) > 10.0 * tol_flat:
            d = max(1e-8, 1e-6 * abs(uu))
            if fn(uu - d) >= 0.0 >= fn(uu + d) and fn(uu - d) > fn(uu + d):
                return "flat_at_F_max"
        return None

    term = flat_check(r, u, v)
    if term is not None:
        tr.termination = term
        return tr

    du0, dv0 = deriv(r, u, v)
    scale_u = abs_tol + rel_tol * abs(u)
    scale_v = abs_tol + rel_tol * abs(v)
    h = _initial_step(deriv, r, (u, v), (du0, dv0), scale_u, scale_v,
                      h_max, r_max - r)
    k1u, k1v = du0, dv0

    err_prev = 1e-4
    streak_count = 0
    streak_r0 = r
    rejects = 0

    for _ in range(cfg.max_steps):
        if r >= r_max * (1.0 - 1e-15):
            tr.termination = "reached_r_max"
            return tr
        h = min(h, r_max - r, h_max)
        if h < min_step:
            tr.termination = "step_underflow"
            return tr

        # Dormand-Prince stages (k1 from FSAL)
        k2u, k2v = deriv(r + _C2 * h, u + h * _A21 * k1u, v + h * _A21 * k1v)
        k3u, k3v = deriv(r + _C3 * h,
                         u + h * (_A31 * k1u + _A32 * k2u),
                         v + h * (_A31 * k1v + _A32 * k2v))
        k4u, k4v = deriv(r + _C4 * h,
                         u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u),
                         v + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v))
        k5u, k5v = deriv(r + _C5 * h,
                         u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u),
                         v + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v))
        k6u, k6v = deriv(r + h,
                         u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u
                                  + _A64 * k4u + _A65 * k5u),
                         v + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v
                                  + _A64 * k4v + _A65 * k5v))
        u1 = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
        v1 = v + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B5 * k5v + _B6 * k6v)
        r1 = r + h
        k7u, k7v = deriv(r1, u1, v1)

        eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u
                  + _E6 * k6u + _E7 * k7u)
        ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v
                  + _E6 * k6v + _E7 * k7v)
        scale_u = abs_tol + rel_tol * max(abs(u), abs(u1))
        scale_v = abs_tol + rel_tol * max(abs(v), abs(v1))
        err = math.sqrt(0.5 * ((eu / scale_u) ** 2 + (ev / scale_v) ** 2))

        if err > 1.0:
            rejects += 1
            h *= min(0.9, max(0.1, 0.9 * err ** -0.2))
            if rejects > 60:
                tr.termination = "step_underflow"
                return tr
            continue
        rejects = 0

        ku = (k1u, k2u, k3u, k4u, k5u, k6u, k7u)
        kv = (k1v, k2v, k3v, k4v, k5v, k6v, k7v)
        cu = tuple(sum(ku[i] * _P[i][j] for i in range(7)) for j in range(4))
        cv = tuple(sum(kv[i] * _P[i][j] for i in range(7)) for j in range(4))
        step = DenseStep(r0=r, h=h, u0=u, v0=v, cu=cu, cv=cv)
        tr.steps.append(step)

        # locate events (sign changes of u and v) inside the step
        roots: list[tuple[float, str]] = []
        tol_r = min(cfg.event_tol, 1e-15 * max(1.0, r1))
        prev_u, prev_v = u, v
        for i in range(1, _N_EVENT_SCAN + 1):
            t = i / _N_EVENT_SCAN
            uu, vv = (u1, v1) if i == _N_EVENT_SCAN else step.eval(r + t * h)
            t_prev = (i - 1) / _N_EVENT_SCAN
            if prev_u != 0.0 and (uu == 0.0 or (prev_u < 0.0) != (uu < 0.0)):
                roots.append((_dense_root(step, 0, t_prev, t, tol_r), "u"))
            if prev_v != 0.0 and (vv == 0.0 or (prev_v < 0.0) != (vv < 0.0)):
                roots.append((_dense_root(step, 1, t_prev, t, tol_r), "v"))
            prev_u, prev_v = uu, vv
        roots.sort()

        terminated = None
        for t_root, kind in roots:
            re = r + t_root * h
            if re <= tr.r[-1] + 1e-15 * max(1.0, re):
                continue
            ue, ve = step.eval(re)
            tr.r.append(re)
            tr.u.append(ue)
            tr.v.append(ve)
            tr.events.append(Event(kind=kind, r=re, u=ue, v=ve))
            terminated = flat_check(re, ue, ve)
            if terminated is not None:
                tr.termination = terminated
                return tr

        if r1 > tr.r[-1] + 1e-15 * max(1.0, r1):
            tr.r.append(r1)
            tr.u.append(u1)
            tr.v.append(v1)
        r, u, v = r1, u1, v1
        k1u, k1v = k7u, k7v

        term = flat_check(r, u, v)
        if term is not None:
            tr.termination = term
            return tr

        # trailing plateau at a zero of f -> the solution has converged
        up = uprime(v)
        if abs(up) <= tol_flat and abs(fn(u)) <= tol_flat:
            if streak_count == 0:
                streak_r0 = r
            streak_count += 1
            if streak_count >= 50 or (streak_count >= 3 and r - streak_r0 >= 1.0):
                tr.termination = "converged_to_ell"
                return tr
        else:
            streak_count = 0

        if err == 0.0:
            fac = 10.0
        else:
            fac = 0.9 * err ** -0.14 * err_prev ** 0.08
        h *= min(10.0, max(0.2, fac))
        err_prev = max(err, 1e-10)

    tr.termination = "step_underflow"
    return tr


# ----------------------------------------------------------------------------
# CSV export / import
# ----------------------------------------------------------------------------

_CSV_SCHEMA = "nodalshoot-profile-v1"


def write_profile_csv(path, nl: Nonlinearity, tr: Trajectory,
                      end_index: int | None = None) -> None:
    """Write r,u,uprime,v,I,E rows; metadata rides in a '#' header line."""
    n = len(tr) if end_index is None else end_index + 1
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {_CSV_SCHEMA} alpha={tr.alpha!r} m={tr.m!r} N={tr.N!r} "
                 f"termination={tr.termination}\n")
        fh.write("r,u,uprime,v,I,E\n")
        for i in range(n):
            st = tr.state(i)
            fh.write("%r,%r,%r,%r,%r,%r\n"
                     % (st.r, st.u, uprime_of(tr.m, st.v), st.v,
                        energy(nl, st), pohozaev(nl, st)))


def read_profile_csv(path) -> tuple[dict, Trajectory, list[list[float]]]:
    """Parse a profile CSV back into (metadata, Trajectory, raw columns).

    The returned trajectory has samples only (no dense steps or events);
    raw columns preserve the emitted I and E for round-trip checks.
    """
    meta: dict = {}
    cols: list[list[float]] = [[] for _ in range(6)]
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ConfigError(f"{path}: missing schema header")
        parts = header[1:].split()
        if not parts or parts[0] != _CSV_SCHEMA:
            raise ConfigError(f"{path}: unknown profile schema {parts[:1]}")
        for tok in parts[1:]:
            key, _, val = tok.partition("=")
            meta[key] = val if key == "termination" else float(val)
        names = fh.readline().strip()
        if names != "r,u,uprime,v,I,E":
            raise ConfigError(f"{path}: unexpected column set {names!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals = [float(x) for x in line.split(",")]
            for c, x in zip(cols, vals):
                c.append(x)
    tr = Trajectory(alpha=meta.get("alpha", math.nan), m=meta["m"], N=meta["N"],
                    r=cols[0], u=cols[1], v=cols[3],
                    termination=meta.get("termination", "reached_r_max"))
    return meta, tr, cols
