"""Reduce a trajectory to its ladder of sign changes and turning points and
assign the shooting classification.

The classification of a start value alpha follows the trajectory's fate:

* ``crossed(k)``        -- the k-th sign change happened with clear slope and
                           the solution kept going (alpha may later acquire
                           more sign changes; k counts those observed),
* ``trapped(k+1)``      -- after k sign changes the solution turned strictly
                           inside the primitive well or its energy dropped
                           below zero: the sign is frozen forever,
* ``bound_candidate(k+1)`` -- the run ended in a simultaneous near-zero of u
                           and u' after k clean sign changes: the numerical
                           signature of a k-nodal bound state,
* ``undecided``         -- the run ended (radius budget) without any
                           certificate either way.

Trapped labels carry a re-verifiable certificate: either a turning point
with |u| strictly inside the well (where the energy equals F(u) < 0) or a
state with energy below ``-class_margin``.  Energy decays along trajectories,
so either certificate is permanent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import EventOrderError
from .integrator import ShootState, Trajectory, energy, uprime_of
from .landmarks import Landmarks
from .nonlinearity import Nonlinearity

KIND_CROSSED = "crossed"
KIND_TRAPPED = "trapped"
KIND_BOUND = "bound_candidate"
KIND_UNDECIDED = "undecided"


@dataclass(frozen=True)
class ZeroCrossing:
    index: int      # 1-based ladder index
    radius: float
    slope: float    # u' at the crossing (sign alternates, first negative)
    energy: float


@dataclass(frozen=True)
class Turning:
    lobe: int       # number of zero crossings before this turning
    radius: float
    value: float    # u at the turning (sign (-1)^lobe)
    energy: float


@dataclass
class EventTrace:
    """Ordered ladder of zero crossings and turning points of one trajectory."""

    alpha: float
    m: float
    N: float
    zeros: list[ZeroCrossing]
    turnings: list[Turning]            # one chosen turning per lobe
    nuisance: list[Turning]            # extra flux zeros inside a lobe
    terminal: str
    end_state: ShootState
    end_energy: float
    max_abs_uprime: float

    @property
    def I_at_events(self) -> list[float]:
        evs = [(z.radius, z.energy) for z in self.zeros]
        evs += [(t.radius, t.energy) for t in self.turnings]
        return [e for _, e in sorted(evs)]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "zeros": [[z.index, z.radius, z.slope] for z in self.zeros],
            "turnings": [[t.lobe, t.radius, t.value] for t in self.turnings],
            "terminal": self.terminal,
            "end_energy": self.end_energy,
        }


@dataclass(frozen=True)
class Margins:
    """Decision margins for classification.

    ``slope_rel`` scales the largest |u'| seen on the trajectory into the
    minimum slope for a countable sign change; ``class_margin`` (when None)
    defaults to 1e-10 (1 + well depth)."""

    slope_rel: float = 1e-6
    slope_abs: float = 0.0
    class_margin: float | None = None

    def slope_floor(self, max_abs_uprime: float) -> float:
        return max(self.slope_abs, self.slope_rel * max_abs_uprime)

    def energy_margin(self, lm: Landmarks) -> float:
        if self.class_margin is not None:
            return self.class_margin
        return 1e-10 * (1.0 + lm.well_depth)


@dataclass
class ClassLabel:
    kind: str
    index: int                 # the k in crossed(k)/trapped(k)/bound_candidate(k)
    k: int                     # verified sign changes
    evidence: dict = field(default_factory=dict)

    def __str__(self) -> str:
        if self.kind == KIND_UNDECIDED:
            return KIND_UNDECIDED
        return f"{self.kind}({self.index})"

    @property
    def zero_count(self) -> int:
        return self.k


def _scan_sample_events(tr: Trajectory) -> list[tuple[str, float, float, float]]:
    """Fallback event detection from raw samples (synthetic trajectories):
    linear-interpolated sign changes of u and of v."""
    out = []
    for comp, kind in ((tr.u, "u"), (tr.v, "v")):
        other = tr.v if kind == "u" else tr.u
        for i in range(len(tr.r) - 1):
            a, b = comp[i], comp[i + 1]
            if a == 0.0:
                continue
            if b == 0.0 or (a < 0.0) != (b < 0.0):
                w = a / (a - b) if a != b else 0.5
                r = tr.r[i] + w * (tr.r[i + 1] - tr.r[i])
                val = other[i] + w * (other[i + 1] - other[i])
                if kind == "u":
                    out.append((kind, r, 0.0, val))
                else:
                    out.append((kind, r, val, 0.0))
    out.sort(key=lambda e: e[1])
    return out


def extract_events(tr: Trajectory, nl: Nonlinearity) -> EventTrace:
    """Assemble the zero/turning ladder of a trajectory.

    Uses the integrator's recorded events when present, otherwise rescans the
    samples (so synthetic sample-only trajectories are accepted).  Within a
    completed lobe the *last* flux zero before the next sign change is the
    turning (it bounds the monotone run to the next crossing); earlier ones
    are kept as nuisance events.  In the final, unfinished lobe the *first*
    flux zero is the turning (the extreme value reached after the last
    crossing).  Raises :class:`EventOrderError` when two sign changes arrive
    with no flux zero between them.
    """
    if tr.events:
        raw = [(e.kind, e.r, e.u, e.v) for e in tr.events]
    else:
        raw = _scan_sample_events(tr)

    zeros: list[ZeroCrossing] = []
    turnings: list[Turning] = []
    nuisance: list[Turning] = []
    lobe_candidates: list[Turning] = []
    for kind, r, u, v in raw:
        if kind == "u":
            if zeros and not lobe_candidates:
                raise EventOrderError(
                    f"sign changes at r={zeros[-1].radius!r} and r={r!r} with "
                    "no turning between; event tolerance too loose")
            if lobe_candidates:
                turnings.append(lobe_candidates[-1])
                nuisance.extend(lobe_candidates[:-1])
                lobe_candidates = []
            st = ShootState(r, u, v)
            zeros.append(ZeroCrossing(index=len(zeros) + 1, radius=r,
                                      slope=uprime_of(tr.m, v),
                                      energy=energy(nl, st)))
        else:
            st = ShootState(r, u, v)
            lobe_candidates.append(Turning(lobe=len(zeros), radius=r, value=u,
                                           energy=energy(nl, st)))
    if lobe_candidates:
        turnings.append(lobe_candidates[0])
        nuisance.extend(lobe_candidates[1:])

    max_up = 0.0
    for v in tr.v:
        av = abs(v)
        if av > max_up:
            max_up = av
    max_up = max_up ** (tr.m / (tr.m - 1.0) - 1.0) if max_up > 0.0 else 0.0

    # alternation sanity: slopes alternate starting negative, turning values
    # carry the sign of their lobe
    for z in zeros:
        want = -1.0 if z.index % 2 == 1 else 1.0
        if z.slope != 0.0 and math.copysign(1.0, z.slope) != want:
            raise EventOrderError(
                f"sign change #{z.index} at r={z.radius!r} has slope "
                f"{z.slope!r}; expected sign {want:+.0f}")
    for t in turnings:
        want = 1.0 if t.lobe % 2 == 0 else -1.0
        if t.value != 0.0 and math.copysign(1.0, t.value) != want:
            raise EventOrderError(
                f"turning in lobe {t.lobe} at r={t.radius!r} has value "
                f"{t.value!r} of unexpected sign")

    end = tr.end
    return EventTrace(alpha=tr.alpha, m=tr.m, N=tr.N, zeros=zeros,
                      turnings=turnings, nuisance=nuisance,
                      terminal=tr.termination, end_state=end,
                      end_energy=energy(nl, end), max_abs_uprime=max_up)


def classify(trace: EventTrace, lm: Landmarks,
             margins: Margins | None = None) -> ClassLabel:
    """Assign the shooting classification to an event trace.

    Counts sign changes whose slope clears the margin (the count stops at the
    first sub-margin crossing: anything beyond a near-double zero is hover
    noise).  Certificates, in priority order: terminal double zero ->
    ``bound_candidate``; a turning strictly inside the well or energy below
    the margin after the last counted crossing -> ``trapped``; otherwise
    ``crossed`` when at least one clear crossing exists, else ``undecided``.
    """
    margins = margins or Margins()
    floor = margins.slope_floor(trace.max_abs_uprime)
    e_margin = margins.energy_margin(lm)
    barrier = min(lm.F_zero_pos, abs(lm.F_zero_neg))

    k = 0
    for z in trace.zeros:
        if abs(z.slope) > floor:
            k += 1
        else:
            break

    if trace.terminal == "double_zero":
        return ClassLabel(KIND_BOUND, k + 1, k, evidence={
            "double_zero_at": trace.end_state.r,
            "end_state": trace.end_state,
        })

    for t in trace.turnings:
        if t.lobe == k and abs(t.value) < barrier:
            return ClassLabel(KIND_TRAPPED, k + 1, k, evidence={
                "turned_inside_barrier_at": t.radius,
                "turning_value": t.value,
                "turning_energy": t.energy,
            })

    if trace.end_energy < -e_margin:
        radius = trace.end_state.r
        for e_r, e_I in sorted(
                [(z.radius, z.energy) for z in trace.zeros]
                + [(t.radius, t.energy) for t in trace.turnings]):
            if e_I < -e_margin:
                radius = e_r
                break
        return ClassLabel(KIND_TRAPPED, k + 1, k, evidence={
            "I_negative_at": radius,
            "end_energy": trace.end_energy,
            "end_state": trace.end_state,
        })

    if k >= 1:
        return ClassLabel(KIND_CROSSED, k, k, evidence={
            "last_clear_slope": trace.zeros[k - 1].slope,
            "terminal": trace.terminal,
        })

    return ClassLabel(KIND_UNDECIDED, 0, 0, evidence={
        "terminal": trace.terminal,
        "end_energy": trace.end_energy,
    })


def weighted_energy(nl: Nonlinearity, state: ShootState) -> float:
    """r^(m'(N-1)) I: nonincreasing wherever |u| stays inside the well, the
    workhorse of the trapped-side detection."""
    mc = nl.m_conj
    return state.r ** (mc * (nl.N - 1.0)) * energy(nl, state)


def nodal_threshold_radius(nl: Nonlinearity, lm: Landmarks,
                           barrier: float | None = None) -> float:
    """Radius threshold: a trajectory still beyond the barrier level at this
    radius (after a turning outside it) is guaranteed another sign change.

    Requires the primitive to be positive at +/- the barrier level."""
    from .errors import ConfigError

    b = lm.barrier if barrier is None else barrier
    Fp, Fn = nl.eval_F(b), nl.eval_F(-b)
    if not (Fp > 0.0 and Fn > 0.0):
        raise ConfigError(
            f"threshold radius undefined: F(+-{b!r}) = ({Fp!r}, {Fn!r}) "
            "must both be positive; raise the barrier level")
    mc = nl.m_conj
    fbar = lm.well_depth
    mx = max((fbar + Fp) ** (1.0 / mc) / Fp, (fbar + Fn) ** (1.0 / mc) / Fn)
    return (nl.N - 1.0) * mc ** (1.0 / mc) * b * mx
