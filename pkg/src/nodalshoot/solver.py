"""Locating nodal bound states by sweep + bisection on the start value.

For a target of k sign changes the solver brackets the transition where the
(k+1)-th sign change is born -- below it trajectories freeze after k changes
(trapped), above it they cross again -- and bisects the start value down to
``tol_alpha``.  The boundary value launches the trajectory that hovers at a
simultaneous zero of u and u': the k-nodal bound state.  The emitted profile
is integrated with the hover threshold opened up to the tail tolerance, so it
terminates honestly in a ``double_zero`` with |u| and |u'| below that bound.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import diagnostics
from .classifier import (KIND_UNDECIDED, ClassLabel, EventTrace, Margins,
                         classify, extract_events)
from .errors import BracketNotFoundError, ConfigError
from .integrator import IntegratorConfig, Trajectory, energy, integrate, uprime_of
from .landmarks import Landmarks
from .nonlinearity import Nonlinearity

EQ_RESIDUAL_TOL = 1e-5
ENERGY_INCREMENT_TOL = 1e-8
POHOZAEV_TOL = 1e-6


@dataclass
class SolveConfig:
    r_max: float = 50.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    tol_flat: float = 1e-9
    event_tol: float = 1e-12
    tol_alpha: float = 1e-12
    max_iter: int = 256
    grid: int = 48
    alpha_min: float | None = None
    alpha_max: float | None = None
    tail_tol: float = 1e-4
    tail_I_tol: float = 1e-6
    escalations: int = 3
    workers: int = 1
    refine_rounds: int = 8
    bisect_tighten: float = 1e-2   # bisection + profile run this much tighter
                                   # than sweeps (one consistent family)

    def __post_init__(self):
        for name in ("tol_alpha", "tail_tol", "tail_I_tol", "rel_tol",
                     "abs_tol", "tol_flat"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.grid < 4:
            raise ConfigError("sweep grid needs at least 4 points")

    def integrator_config(self, alpha_floor: float | None = None,
                          *, tol_flat: float | None = None,
                          tighten: float = 1.0) -> IntegratorConfig:
        return IntegratorConfig(
            r_max=self.r_max, rel_tol=self.rel_tol * tighten,
            abs_tol=self.abs_tol * tighten, event_tol=self.event_tol,
            tol_flat=self.tol_flat if tol_flat is None else tol_flat,
            alpha_floor=alpha_floor)


@dataclass
class SweepPoint:
    alpha: float
    label: ClassLabel
    trace: EventTrace

    @property
    def zero_count(self) -> int:
        return self.label.k


@dataclass
class BisectionProblem:
    k: int
    lo: float
    hi: float
    tol_alpha: float
    max_iter: int
    lo_label: ClassLabel | None = None
    hi_label: ClassLabel | None = None


@dataclass
class BoundState:
    """Accepted k-nodal profile with its certificate data.

    ``trajectory`` is the emitted profile (terminating at the hover point);
    ``tail_norm`` = |u| and ``end_energy`` = I at its last sample.  The
    residuals dict carries the recomputed identity defects.  ``valid`` is
    False when any acceptance threshold failed (the state is still returned
    for inspection, never silently dropped)."""

    alpha_star: float
    k: int
    trajectory: Trajectory
    trace: EventTrace
    tail_norm: float
    end_energy: float
    bracket_lo: float
    bracket_hi: float
    bracket_width: float
    iterations: int
    escalations_used: int
    residuals: dict = field(default_factory=dict)
    valid: bool = True
    failures: list[str] = field(default_factory=list)

    def summary(self, nl: Nonlinearity) -> dict:
        return {
            "alpha_star": self.alpha_star,
            "k": self.k,
            "m": nl.m,
            "N": nl.N,
            "nonlinearity": nl.label(),
            "tail_norm": self.tail_norm,
            "end_energy": self.end_energy,
            "end_radius": self.trajectory.r[-1],
            "bracket_width": self.bracket_width,
            "bracket": [self.bracket_lo, self.bracket_hi],
            "iterations": self.iterations,
            "escalations": self.escalations_used,
            "residuals": dict(self.residuals),
            "zeros": [z.radius for z in self.trace.zeros],
            "valid": self.valid,
            "failures": list(self.failures),
        }


def classify_alpha(nl: Nonlinearity, lm: Landmarks, alpha: float,
                   icfg: IntegratorConfig,
                   margins: Margins | None = None) -> SweepPoint:
    tr = integrate(nl, alpha, icfg)
    trace = extract_events(tr, nl)
    return SweepPoint(alpha=alpha, label=classify(trace, lm, margins),
                      trace=trace)


def sweep(nl: Nonlinearity, lm: Landmarks, cfg: SolveConfig,
          alphas, margins: Margins | None = None) -> list[SweepPoint]:
    """Classify every start value in ``alphas`` (ordered output).

    Runs are independent; with ``cfg.workers > 1`` they are fanned out to a
    thread pool (the nonlinearity is shared read-only).
    """
    alphas = sorted(float(a) for a in alphas)
    icfg = cfg.integrator_config(alpha_floor=lm.F_zero_pos)

    def job(a: float) -> SweepPoint:
        return classify_alpha(nl, lm, a, icfg, margins)

    if cfg.workers > 1 and len(alphas) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(job, alphas))
    return [job(a) for a in alphas]


def bracket(points: list[SweepPoint], k: int) -> BisectionProblem:
    """First adjacent sweep pair whose verified sign-change counts step from
    <= k to >= k+1; brackets the birth of the (k+1)-th crossing."""
    pts = sorted(points, key=lambda p: p.alpha)
    for a, b in zip(pts, pts[1:]):
        if a.zero_count <= k and b.zero_count >= k + 1:
            return BisectionProblem(k=k, lo=a.alpha, hi=b.alpha,
                                    tol_alpha=0.0, max_iter=0,
                                    lo_label=a.label, hi_label=b.label)
    raise BracketNotFoundError(
        f"no sweep pair brackets the {k}->{k + 1} sign-change transition; "
        "widen the start-value range or refine the grid")


def _classify_with_escalation(nl, lm, alpha, cfg, margins):
    """Classify at the bisection tolerance family, tightening 10x further
    (up to cfg.escalations) while the label stays undecided.  Returns
    (point, escalations_used)."""
    used = 0
    tighten = cfg.bisect_tighten
    while True:
        icfg = cfg.integrator_config(alpha_floor=lm.F_zero_pos, tighten=tighten)
        pt = classify_alpha(nl, lm, alpha, icfg, margins)
        if pt.label.kind != KIND_UNDECIDED or used >= cfg.escalations:
            return pt, used
        used += 1
        tighten *= 0.1


def _profile_at(nl, lm, cfg, alpha, margins) -> tuple[Trajectory, EventTrace]:
    # hover threshold at half the tail tolerance: the emitted profile then
    # terminates in a double zero with |u|, |u'| <= tail_tol / 2.  Same
    # tolerance family as the bisection runs, so the bisected boundary and
    # the profile hover describe the same numerical flow.
    icfg = cfg.integrator_config(alpha_floor=lm.F_zero_pos,
                                 tol_flat=0.5 * cfg.tail_tol,
                                 tighten=cfg.bisect_tighten)
    tr = integrate(nl, alpha, icfg)
    return tr, extract_events(tr, nl)


def _validate(nl, cfg, k, tr, trace, margins) -> tuple[dict, list[str]]:
    failures: list[str] = []
    floor = (margins or Margins()).slope_floor(trace.max_abs_uprime)
    clear = sum(1 for z in trace.zeros if abs(z.slope) > floor)
    if clear != k:
        failures.append(f"profile has {clear} clear sign changes, expected {k}")
    tail_norm = abs(tr.u[-1])
    if tail_norm > cfg.tail_tol:
        failures.append(f"tail |u| = {tail_norm:.3e} above {cfg.tail_tol:.1e}")
    I_end = energy(nl, tr.end)
    if abs(I_end) > cfg.tail_I_tol:
        failures.append(f"tail energy {I_end:.3e} above {cfg.tail_I_tol:.1e}")
    residuals = {
        "energy_increment": diagnostics.max_energy_increment(nl, tr),
        "pohozaev": diagnostics.pohozaev_residual(nl, tr),
        "equation": diagnostics.equation_residual(nl, tr),
    }
    if residuals["energy_increment"] > ENERGY_INCREMENT_TOL:
        failures.append("energy not monotone within tolerance")
    if residuals["pohozaev"] > POHOZAEV_TOL:
        failures.append("virial identity residual above tolerance")
    if residuals["equation"] > EQ_RESIDUAL_TOL:
        failures.append("equation residual above tolerance")
    return residuals, failures


def bisect(nl: Nonlinearity, lm: Landmarks, cfg: SolveConfig,
           prob: BisectionProblem, margins: Margins | None = None) -> BoundState:
    """Bisect the bracket down to ``cfg.tol_alpha`` (deepening a few decades
    further if the emitted profile misses its tail thresholds) and return the
    bound state at the final crossing-side endpoint."""
    k = prob.k
    tol_alpha = prob.tol_alpha if prob.tol_alpha > 0.0 else cfg.tol_alpha
    max_iter = prob.max_iter if prob.max_iter > 0 else cfg.max_iter

    lo, hi = prob.lo, prob.hi
    if not lo < hi:
        raise ConfigError("bisection bracket must satisfy lo < hi")
    lo_pt, esc0 = _classify_with_escalation(nl, lm, lo, cfg, margins)
    hi_pt, esc1 = _classify_with_escalation(nl, lm, hi, cfg, margins)
    escalations = esc0 + esc1
    if lo_pt.zero_count > k:
        raise ConfigError(
            f"bracket lower end alpha={lo!r} shows {lo_pt.zero_count} sign "
            f"changes (> {k}); not a valid bracket")
    if hi_pt.zero_count < k + 1:
        raise ConfigError(
            f"bracket upper end alpha={hi!r} shows {hi_pt.zero_count} sign "
            f"changes (< {k + 1}); not a valid bracket")

    iterations = 0
    floor_width = 4.0 * math.ulp(hi)
    target = max(tol_alpha, floor_width)
    best: BoundState | None = None

    while True:
        while hi - lo > target and iterations < max_iter:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            pt, esc = _classify_with_escalation(nl, lm, mid, cfg, margins)
            escalations += esc
            iterations += 1
            if pt.zero_count >= k + 1:
                hi = mid
            else:
                lo = mid

        # profile at the crossing-side endpoint first; if its suppressed
        # crossing still carries too much slope (degenerate-operator case:
        # the miss shrinks only like width^(1/3)) the trapped-side endpoint
        # hovers into the same bound state and is used instead
        state = None
        for alpha_prof in (hi, lo):
            tr, trace = _profile_at(nl, lm, cfg, alpha_prof, margins)
            residuals, failures = _validate(nl, cfg, k, tr, trace, margins)
            cand = BoundState(
                alpha_star=alpha_prof, k=k, trajectory=tr, trace=trace,
                tail_norm=abs(tr.u[-1]), end_energy=energy(nl, tr.end),
                bracket_lo=lo, bracket_hi=hi, bracket_width=hi - lo,
                iterations=iterations, escalations_used=escalations,
                residuals=residuals, valid=not failures, failures=failures)
            if state is None:
                state = cand
            if cand.valid:
                return cand
        best = state
        if target <= floor_width * (1.0 + 1e-9) or iterations >= max_iter:
            return best
        target = max(target * 1e-2, floor_width)


def default_grid(lm: Landmarks, cfg: SolveConfig) -> list[float]:
    """Start-value grid inside the shooting interval; for an infinite upper
    f zero the box spans a few barrier lengths (grown on refinement)."""
    b = lm.F_zero_pos
    g = lm.f_zero_pos
    lo = cfg.alpha_min if cfg.alpha_min is not None else None
    hi = cfg.alpha_max if cfg.alpha_max is not None else None
    if math.isfinite(g):
        span = g - b
        lo = b + 1e-3 * span if lo is None else lo
        hi = g - 1e-3 * span if hi is None else hi
    else:
        lo = b * (1.0 + 1e-3) if lo is None else lo
        hi = max(4.0 * b, 2.0 * lm.barrier) if hi is None else hi
    if not (b <= lo < hi):
        raise ConfigError(f"start-value range [{lo!r}, {hi!r}] invalid")
    n = cfg.grid
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _refine_grid(lm: Landmarks, cfg: SolveConfig, points: list[SweepPoint],
                 k: int) -> list[float]:
    """Extra start values when the bracket was not found.

    When even the lowest grid point already shows more than k sign changes
    the staircase is compressed against the primitive zero: approach it
    geometrically.  When the highest grid point still shows at most k the
    bands sit higher: push toward a finite upper f zero geometrically, or
    double the box when it is infinite."""
    extra: list[float] = []
    n = max(8, cfg.grid // 2)
    b = lm.F_zero_pos
    g = lm.f_zero_pos
    first, last = points[0], points[-1]
    if first.zero_count > k:
        old_gap = first.alpha - b
        new_gap = max(old_gap * 1e-2, 64.0 * math.ulp(b))
        ratio = (old_gap / new_gap) ** (1.0 / n)
        extra.extend(b + new_gap * ratio ** i for i in range(n))
    if last.zero_count <= k:
        hi_old = last.alpha
        if math.isfinite(g):
            gap = (g - hi_old) * 1e-1
            new_hi = g - max(gap, 64.0 * math.ulp(g))
        else:
            new_hi = hi_old * 2.0
        extra.extend(hi_old + (new_hi - hi_old) * i / n for i in range(1, n + 1))
    if not extra:
        # both ends fine but counts disordered: subdivide everywhere
        extra.extend(0.5 * (a.alpha + c.alpha) for a, c in zip(points, points[1:]))
    return extra


def solve_k(nl: Nonlinearity, lm: Landmarks, k: int, cfg: SolveConfig,
            margins: Margins | None = None) -> BoundState:
    """Sweep, bracket the k -> k+1 transition, bisect, emit the k-nodal
    bound state.  Refines/expands the sweep grid a few rounds before giving
    up with :class:`BracketNotFoundError`."""
    if k < 0:
        raise ConfigError("k must be a nonnegative integer")
    grid = default_grid(lm, cfg)
    points = sweep(nl, lm, cfg, grid, margins)
    for round_idx in range(cfg.refine_rounds + 1):
        try:
            prob = bracket(points, k)
            break
        except BracketNotFoundError:
            if round_idx == cfg.refine_rounds:
                raise
            extra = _refine_grid(lm, cfg, points, k)
            points.extend(sweep(nl, lm, cfg, extra, margins))
            points.sort(key=lambda p: p.alpha)
    return bisect(nl, lm, cfg, prob, margins)
