"""Sampled audit of the structural conditions a nonlinearity must satisfy
for the nodal construction to be guaranteed.

Every verdict is advisory: finite sampling cannot prove a limit, so statuses
are ``holds_on_samples`` / ``fails_on_samples`` / ``not_applicable``, each
with enough detail to re-evaluate the decisive inequality at the recorded
witness.  Condition names:

* ``continuity``            -- f continuous (refinement-stable jumps)
* ``well_shape``            -- F < 0 strictly between its two zeros, f
                               one-signed beyond them up to the adjacent
                               zeros of f
* ``matched_end_limits``    -- F approaches the same limit at both adjacent
                               f zeros (extrapolated when infinite)
* ``local_lipschitz``       -- f locally Lipschitz away from 0
* ``tail_q_pos/neg``        -- the virial density Q stays nonnegative beyond
                               the barrier level (sides with no finite f zero)
* ``oscillation_pos/neg``   -- the windowed product inf Q(s2) (s^(m-1)/f(s1))^(N/m)
                               grows without bound along a geometric ladder
* ``flux_bound_pos/neg``    -- f bounded by L0 (gamma - s)^(m-1) near a
                               finite f zero (empirical L0 reported)
* ``subcritical_growth``    -- limsup s f / F strictly below the critical
                               exponent (sufficient for the oscillation
                               conditions)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

from .landmarks import Landmarks
from .nonlinearity import INF, Nonlinearity
from .numerics import aitken_limit, fit_intercept

HOLDS = "holds_on_samples"
FAILS = "fails_on_samples"
NOT_APPLICABLE = "not_applicable"

CORE_CONDITIONS = ("continuity", "well_shape", "matched_end_limits",
                   "local_lipschitz")


@dataclass
class CheckerConfig:
    theta: float = 0.5             # window shrink factor, any value in (0,1)
    ladder_points: int = 24
    window_points: int = 33
    s_max: float = 1e10
    sign_samples: int = 2000
    osc_slope_floor: float = -0.25  # fitted d(log P)/d(log log s) below this
                                    # refutes divergence on samples
    sc_rel_margin: float = 0.05    # limsup must clear m* by this fraction
    limit_rel_tol: float = 1e-2
    lipschitz_exclude: float = 1e-3


@dataclass
class Verdict:
    status: str
    witness: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.status == FAILS


@dataclass
class HypothesisReport:
    conditions: dict[str, Verdict]
    theta: float
    sample_info: dict

    def holds(self, name: str) -> bool:
        return not self.conditions[name].failed

    @property
    def core_ok(self) -> bool:
        return all(self.holds(c) for c in CORE_CONDITIONS)

    def to_dict(self) -> dict:
        return {
            "schema": "nodalshoot-check-v1",
            "theta": self.theta,
            "sample_info": self.sample_info,
            "core_ok": self.core_ok,
            "conditions": {k: asdict(v) for k, v in self.conditions.items()},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_jsonable, **kw)


def _jsonable(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _ladder(start: float, stop: float, n: int) -> list[float]:
    if stop <= start:
        return [start]
    ratio = (stop / start) ** (1.0 / (n - 1))
    return [start * ratio ** i for i in range(n)]


# ----------------------------------------------------------------------------
# individual condition checks
# ----------------------------------------------------------------------------

def _check_continuity(nl: Nonlinearity, lm: Landmarks, cfg: CheckerConfig) -> Verdict:
    lo = max(nl.domain[0], nl.search_box[0])
    hi = min(nl.domain[1], nl.search_box[1])
    n = cfg.sign_samples
    xs = [lo + (hi - lo) * i / n for i in range(n + 1)]
    fs = [nl.f(x) for x in xs]
    suspects = []
    for i in range(n):
        scale = 1.0 + max(abs(fs[i]), abs(fs[i + 1]))
        if abs(fs[i + 1] - fs[i]) > 0.25 * scale:
            suspects.append(i)
    for i in suspects:
        a, b = xs[i], xs[i + 1]
        jump0 = abs(fs[i + 1] - fs[i])
        jump = jump0
        for _ in range(3):
            m_ = 64
            ys = [nl.f(a + (b - a) * j / m_) for j in range(m_ + 1)]
            jmax, jarg = 0.0, 0
            for j in range(m_):
                d = abs(ys[j + 1] - ys[j])
                if d > jmax:
                    jmax, jarg = d, j
            jump = jmax
            a, b = a + (b - a) * jarg / m_, a + (b - a) * (jarg + 1) / m_
        if jump > 0.125 * jump0:  # persistent jump under 64^3 refinement
            return Verdict(FAILS, witness=0.5 * (a + b),
                           details={"jump": jump, "coarse_jump": jump0})
    return Verdict(HOLDS, details={"samples": n + 1, "range": [lo, hi]})


def _check_well_shape(nl: Nonlinearity, lm: Landmarks, cfg: CheckerConfig) -> Verdict:
    tol = 1e-15 * (1.0 + lm.well_depth)
    for side, beta in ((+1, lm.F_zero_pos), (-1, lm.F_zero_neg)):
        for mag in _ladder(1e-6 * abs(beta), abs(beta) * (1.0 - 1e-9), 400):
            s = side * mag
            if nl.F(s) >= tol:
                return Verdict(FAILS, witness=s,
                               details={"F": nl.F(s), "expected": "< 0"})
    resid = max(abs(nl.F(lm.F_zero_pos)), abs(nl.F(lm.F_zero_neg)))
    if resid > 1e-10 * (1.0 + lm.well_depth):
        return Verdict(FAILS, witness=lm.F_zero_pos,
                       details={"F_zero_residual": resid})
    # f one-signed between the primitive zero and the adjacent f zero
    for side, beta, gamma in ((+1, lm.F_zero_pos, lm.f_zero_pos),
                              (-1, lm.F_zero_neg, lm.f_zero_neg)):
        edge = gamma if math.isfinite(gamma) else side * abs(
            nl.search_box[1] if side > 0 else nl.search_box[0])
        span = abs(edge - beta)
        if span <= 0.0:
            continue
        for off in _ladder(1e-8 * span, span * (1.0 - 1e-9), 400):
            s = beta + side * off
            if side * nl.f(s) <= 0.0:
                return Verdict(FAILS, witness=s,
                               details={"f": nl.f(s),
                                        "expected_sign": side})
    return Verdict(HOLDS, details={
        "F_zero_residual": resid,
        "F_zeros": [lm.F_zero_neg, lm.F_zero_pos]})


def _end_limit_samples(nl: Nonlinearity, lm: Landmarks, side: int,
                       cfg: CheckerConfig) -> tuple[float, list[float]]:
    gamma = lm.f_zero_pos if side > 0 else lm.f_zero_neg
    if math.isfinite(gamma):
        return nl.F(gamma), [nl.F(gamma)]
    vals = []
    mag = 100.0
    while mag <= max(cfg.s_max, 1e3):
        v = nl.F(side * mag)
        if not math.isfinite(v) or abs(v) > 1e250:
            return math.copysign(INF, v), vals
        vals.append(v)
        mag *= 10.0
    tail = vals[-3:]
    if len(tail) == 3 and (max(tail) - min(tail)) > 0.25 * (1.0 + abs(tail[-1])):
        return (INF if vals[-1] > vals[0] else -INF), vals
    return aitken_limit(vals), vals


def _check_end_limits(nl: Nonlinearity, lm: Landmarks, cfg: CheckerConfig) -> Verdict:
    lp, samples_p = _end_limit_samples(nl, lm, +1, cfg)
    ln, samples_n = _end_limit_samples(nl, lm, -1, cfg)
    details = {"limit_pos": lp, "limit_neg": ln}
    both_inf = math.isinf(lp) and math.isinf(ln) and lp == ln
    if both_inf:
        return Verdict(HOLDS, details=details)
    if math.isinf(lp) or math.isinf(ln):
        return Verdict(FAILS, details=details)
    if abs(lp - ln) <= cfg.limit_rel_tol * (1.0 + max(abs(lp), abs(ln))):
        return Verdict(HOLDS, details=details)
    return Verdict(FAILS, details=details)


def _check_lipschitz(nl: Nonlinearity, lm: Landmarks, cfg: CheckerConfig) -> Verdict:
    delta = cfg.lipschitz_exclude * lm.F_zero_pos
    hi = lm.f_zero_pos * (1.0 - 1e-6) if math.isfinite(lm.f_zero_pos) \
        else min(nl.search_box[1], 2.0 * lm.barrier + 10.0)
    lo = lm.f_zero_neg * (1.0 - 1e-6) if math.isfinite(lm.f_zero_neg) \
        else max(nl.search_box[0], -2.0 * lm.barrier - 10.0)
    segs = [(delta, hi), (lo, -delta)]
    worst = (0.0, None)
    for a, b in segs:
        if not b > a:
            continue
        h0 = (b - a) / 400.0
        sups = []
        for h in (h0, h0 / 8.0, h0 / 64.0):
            sup = 0.0
            arg = a
            n = int((b - a) / h)
            n = min(n, 3200)
            step = (b - a) / n
            for i in range(n):
                x = a + i * step
                q = abs(nl.f(x + h) - nl.f(x)) / h
                if q > sup:
                    sup, arg = q, x
            sups.append(sup)
        if sups[0] > 0.0 and sups[-1] / sups[0] > 3.0:
            return Verdict(FAILS, witness=arg,
                           details={"difference_quotients": sups})
        if sups[-1] > worst[0]:
            worst = (sups[-1], arg)
    return Verdict(HOLDS, details={"sup_quotient": worst[0],
                                   "at": worst[1]})


def _check_tail_q(nl: Nonlinearity, lm: Landmarks, cfg: CheckerConfig,
                  side: int) -> Verdict:
    gamma = lm.f_zero_pos if side > 0 else lm.f_zero_neg
    if math.isfinite(gamma):
        return Verdict(NOT_APPLICABLE,
                       details={"reason": "adjacent f zero is finite"})
    for mag in _ladder(lm.barrier, cfg.s_max, 4 * cfg.ladder_points):
        s = side * mag
        fv = nl.f(s)
        Fv = nl.F(s)
        if abs(Fv) > 1e250 or abs(fv) > 1e250:
            break
        q = nl.m * nl.N * Fv - (nl.N - nl.m) * s * fv
        if q < -1e-12 * (1.0 + abs(q)):
            return Verdict(FAILS, witness=s, details={"Q": q})
    return Verdict(HOLDS, details={"barrier": lm.barrier})


def _window_product(nl: Nonlinearity, s: float, theta: float, n: int) -> float | None:
    """log of inf over the window of Q(s2) (|s|^(m-2) s / f(s1))^(N/m);
    None when the product is nonpositive (Q dipping negative)."""
    m, N = nl.m, nl.N
    a, b = (theta * s, s) if s > 0 else (s, theta * s)
    pts = [a + (b - a) * i / (n - 1) for i in range(n)]
    qmin = min(nl.Q(w) for w in pts)
    if qmin <= 0.0:
        return None
    # (|s|^{m-2} s / f(s1))^{N/m} > 0 since sign f = sign s out here
    logc = [(m - 1.0) * math.log(abs(s)) - math.log(abs(nl.f(w))) for w in pts]
    return math.log(qmin) + (N / m) * min(logc)


def _check_oscillation(nl: Nonlinearity, lm: Landmarks, cfg: CheckerConfig,
                       side: int) -> Verdict:
    gamma = lm.f_zero_pos if side > 0 else lm.f_zero_neg
    if math.isfinite(gamma):
        return Verdict(NOT_APPLICABLE,
                       details={"reason": "adjacent f zero is finite"})
    s_lo = 1.05 * lm.barrier / cfg.theta
    mags = _ladder(s_lo, cfg.s_max, cfg.ladder_points)
    logp = []
    for mag in mags:
        s = side * mag
        if abs(nl.F(s)) > 1e250:
            break
        logp.append(_window_product(nl, s, cfg.theta, cfg.window_points))
    if any(p is None for p in logp):
        w = mags[logp.index(None)] * side
        return Verdict(FAILS, witness=w,
                       details={"reason": "windowed Q minimum nonpositive"})
    if len(logp) < 6:
        return Verdict(FAILS, witness=side * mags[0],
                       details={"reason": "ladder too short before overflow"})
    # trend test: fit log P against log log s on the tail half.  A clearly
    # negative slope means the products decay toward zero (divergence
    # refuted); a flat or growing trend is divergence as far as samples can
    # tell (finite sampling cannot separate a slowly growing power of log s
    # from a positive constant plus transient).
    half = len(logp) // 2
    xs = [math.log(math.log(m_)) for m_ in mags[half:len(logp)]]
    ys = logp[half:]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx if sxx else 0.0
    growth = ys[-1] - ys[0]
    details = {"tail_growth": growth, "loglog_slope": slope,
               "last_log_product": ys[-1], "theta": cfg.theta}
    if slope >= cfg.osc_slope_floor:
        return Verdict(HOLDS, details=details)
    return Verdict(FAILS, witness=side * mags[len(logp) - 1], details=details)


def _check_flux_bound(nl: Nonlinearity, lm: Landmarks, cfg: CheckerConfig,
                      side: int) -> Verdict:
    gamma = lm.f_zero_pos if side > 0 else lm.f_zero_neg
    if not math.isfinite(gamma):
        return Verdict(NOT_APPLICABLE,
                       details={"reason": "adjacent f zero is infinite"})
    start = side * lm.barrier
    if abs(start) >= abs(gamma):
        beta = lm.F_zero_pos if side > 0 else lm.F_zero_neg
        start = 0.5 * (beta + gamma)
    span0 = abs(gamma - start)
    ratios = []
    for i in range(44):
        gap = span0 * 2.0 ** (-i)
        if gap < 1e-12 * abs(gamma):
            break
        s = gamma - side * gap
        fv = side * nl.f(s)  # -f on the negative side
        ratios.append((s, fv / gap ** (nl.m - 1.0)))
    vals = [r for _, r in ratios]
    L0 = max(vals)
    mid = sorted(vals)[len(vals) // 2]
    if vals[-1] > 4.0 * max(mid, 1e-300):
        return Verdict(FAILS, witness=ratios[-1][0],
                       details={"ratio_divergence": [vals[0], mid, vals[-1]]})
    return Verdict(HOLDS, details={"L0": L0, "samples": len(vals)})


def _sc_side(nl: Nonlinearity, lm: Landmarks, cfg: CheckerConfig,
             side: int) -> dict:
    s_lo = max(10.0, 2.0 * lm.barrier)
    mags = _ladder(s_lo, cfg.s_max, 2 * cfg.ladder_points)
    pts = []
    for mag in mags:
        s = side * mag
        fv, Fv = nl.f(s), nl.F(s)
        if abs(Fv) > 1e250 or abs(fv) > 1e250:
            break
        pts.append((mag, s * fv, Fv))
    if not pts:
        return {"side": side, "signs_ok": False, "witness": None}
    sign_from = None
    for i in range(len(pts) - 1, -1, -1):
        if pts[i][1] < 0.0 or pts[i][2] < 0.0:
            break
        sign_from = i
    if sign_from is None:
        return {"side": side, "signs_ok": False, "witness": side * pts[-1][0]}
    tail = [(mag, sf / Fv) for mag, sf, Fv in pts[sign_from:] if Fv > 0.0]
    half = max(len(tail) // 2, len(tail) - 12)
    xs = [1.0 / math.log(mag) for mag, _ in tail[half:]]
    ys = [ratio for _, ratio in tail[half:]]
    return {"side": side, "signs_ok": True,
            "estimate": fit_intercept(xs, ys),
            "last_ratio": ys[-1] if ys else None,
            "witness": side * tail[-1][0] if tail else None}


def _check_subcritical(nl: Nonlinearity, lm: Landmarks, cfg: CheckerConfig) -> Verdict:
    sides = [_sc_side(nl, lm, cfg, +1), _sc_side(nl, lm, cfg, -1)]
    details: dict = {"m_star": lm.crit_exp,
                     "sides": [{k: v for k, v in s.items() if k != "side"}
                               for s in sides]}
    for s in sides:
        if not s["signs_ok"]:
            return Verdict(FAILS, witness=s["witness"],
                           details={**details,
                                    "reason": "sign prerequisites fail"})
    est = max(s["estimate"] for s in sides)
    details["limsup_estimate"] = est
    if math.isinf(lm.crit_exp):
        return Verdict(HOLDS, details=details)
    if est <= lm.crit_exp * (1.0 - cfg.sc_rel_margin):
        return Verdict(HOLDS, details=details)
    return Verdict(FAILS, witness=max(s["witness"] for s in sides),
                   details=details)


def check_hypotheses(nl: Nonlinearity, lm: Landmarks,
                     cfg: CheckerConfig | None = None) -> HypothesisReport:
    """Run every sampled structural check and collect the verdicts."""
    cfg = cfg or CheckerConfig()
    if not 0.0 < cfg.theta < 1.0:
        from .errors import ConfigError
        raise ConfigError("theta must lie strictly between 0 and 1")
    conditions = {
        "continuity": _check_continuity(nl, lm, cfg),
        "well_shape": _check_well_shape(nl, lm, cfg),
        "matched_end_limits": _check_end_limits(nl, lm, cfg),
        "local_lipschitz": _check_lipschitz(nl, lm, cfg),
        "tail_q_pos": _check_tail_q(nl, lm, cfg, +1),
        "tail_q_neg": _check_tail_q(nl, lm, cfg, -1),
        "oscillation_pos": _check_oscillation(nl, lm, cfg, +1),
        "oscillation_neg": _check_oscillation(nl, lm, cfg, -1),
        "flux_bound_pos": _check_flux_bound(nl, lm, cfg, +1),
        "flux_bound_neg": _check_flux_bound(nl, lm, cfg, -1),
        "subcritical_growth": _check_subcritical(nl, lm, cfg),
    }
    info = {"s_max": cfg.s_max, "ladder_points": cfg.ladder_points,
            "window_points": cfg.window_points,
            "sign_samples": cfg.sign_samples,
            "nonlinearity": nl.label(), "m": nl.m, "N": nl.N}
    return HypothesisReport(conditions=conditions, theta=cfg.theta,
                            sample_info=info)
