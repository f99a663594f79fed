"""Nonlinearity definitions: the source term f, its primitive F, and the
weighted combination Q used by the oscillation estimates.

A nonlinearity is described piecewise by power/log terms (left-closed
branches).  The built-in catalog covers:

* ``double_power(p, q)`` -- f(s) = |s|^(p-2) s - |s|^(q-2) s
* ``g1``                 -- odd extension of  s^3 - sqrt(2 s)  on [0, 2],
                            8 - s on [2, 8], 0 beyond 8
* ``g2``                 -- 6 |s+1|^(-1/3) (s+1)^(-1) below -2,  s^3 - s on
                            [-2, 2],  8 - s on [2, 8],  0 beyond 8
* ``log_critical(lambda)`` -- s^3 - s in the core, critical-power tail
                            C |s|^(m*-2) s / (log|s|)^lambda beyond |s| = s0

The primitive F always satisfies F(0) = 0 exactly; it is assembled from
closed-form antiderivatives where available and adaptive quadrature with
anchor caching otherwise.
"""

from __future__ import annotations

import bisect as _bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .numerics import adaptive_simpson

INF = float("inf")


def conjugate_exponent(m: float) -> float:
    """m' = m / (m - 1)."""
    return m / (m - 1.0)


def crit_exponent(m: float, N: float) -> float:
    """Critical growth exponent N m / (N - m); +inf at the m = N edge."""
    if N == m:
        return INF
    return N * m / (N - m)


# ----------------------------------------------------------------------------
# piecewise machinery
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerTerm:
    """One additive term  coef * sgn? * |s - shift|^exponent * log(|s - shift|)^log_exponent.

    ``signed`` multiplies by sign(s - shift).  Terms with ``log_exponent = 0``
    and ``exponent != -1`` integrate in closed form.
    """

    coef: float
    exponent: float = 0.0
    shift: float = 0.0
    signed: bool = False
    log_exponent: float = 0.0

    def value(self, s: float) -> float:
        x = s - self.shift
        ax = abs(x)
        if ax == 0.0:
            if self.exponent < 0.0 or self.log_exponent != 0.0:
                raise DomainError(f"term singular at s = {s!r}")
            base = 1.0 if self.exponent == 0.0 else 0.0
        else:
            base = ax ** self.exponent
            if self.log_exponent != 0.0:
                base *= math.log(ax) ** self.log_exponent
        if self.signed and x < 0.0:
            base = -base
        return self.coef * base

    def value_vec(self, s: np.ndarray) -> np.ndarray:
        x = s - self.shift
        ax = np.abs(x)
        base = ax ** self.exponent
        if self.log_exponent != 0.0:
            base = base * np.log(ax) ** self.log_exponent
        if self.signed:
            base = base * np.sign(x)
        return self.coef * base

    @property
    def has_closed_antiderivative(self) -> bool:
        return self.log_exponent == 0.0 and self.exponent != -1.0

    def antiderivative(self, s: float) -> float:
        """Closed-form primitive (valid within one side of the shift point)."""
        if not self.has_closed_antiderivative:
            raise DomainError("term has no closed-form antiderivative")
        x = s - self.shift
        ax = abs(x)
        e1 = self.exponent + 1.0
        mag = 0.0 if ax == 0.0 else ax ** e1
        if self.signed:
            # d/ds |x|^{e+1}/(e+1) = sgn(x) |x|^e
            return self.coef * mag / e1
        # d/ds sgn(x) |x|^{e+1}/(e+1) = |x|^e
        return self.coef * math.copysign(mag, x) / e1


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    terms: tuple[PowerTerm, ...]

    def value(self, s: float) -> float:
        return sum(t.value(s) for t in self.terms)

    @property
    def has_closed_antiderivative(self) -> bool:
        return all(t.has_closed_antiderivative for t in self.terms)

    def antiderivative(self, s: float) -> float:
        return sum(t.antiderivative(s) for t in self.terms)


class PiecewiseSpec:
    """Left-closed piecewise definition: piece i applies on [lo_i, lo_{i+1})."""

    def __init__(self, pieces: Sequence[Piece]):
        pieces = sorted(pieces, key=lambda p: p.lo)
        for a, b in zip(pieces, pieces[1:]):
            if a.hi != b.lo:
                raise ConfigError("piecewise pieces must tile an interval")
        self.pieces = tuple(pieces)
        self.lo = pieces[0].lo
        self.hi = pieces[-1].hi
        self._edges = [p.lo for p in pieces[1:]]  # interior breakpoints

    def piece_index(self, s: float) -> int:
        return _bisect.bisect_right(self._edges, s)

    def value(self, s: float) -> float:
        if not (self.lo <= s < self.hi or s == self.hi == INF):
            if s == self.hi:  # closed right end of the overall domain
                return self.pieces[-1].value(s)
            raise DomainError(f"s = {s!r} outside piecewise domain")
        return self.pieces[self.piece_index(s)].value(s)

    def value_vec(self, s: np.ndarray) -> np.ndarray:
        out = np.empty_like(s, dtype=float)
        out.fill(np.nan)
        for i, p in enumerate(self.pieces):
            if i == 0:
                mask = s < p.hi
            elif i == len(self.pieces) - 1:
                mask = s >= p.lo
            else:
                mask = (s >= p.lo) & (s < p.hi)
            if np.any(mask):
                out[mask] = sum(t.value_vec(s[mask]) for t in p.terms)
        return out


class _Primitive:
    """F(s) = int_0^s f, assembled per piece, with quadrature anchor caching
    for pieces lacking closed-form antiderivatives."""

    def __init__(self, spec: PiecewiseSpec, f: Callable[[float], float],
                 abs_tol: float = 1e-12, rel_tol: float = 1e-12):
        self.spec = spec
        self.f = f
        self.abs_tol = abs_tol
        self.rel_tol = rel_tol
        self._base: dict[int, float] = {}  # piece index -> F at anchor point
        self._anchors: dict[int, list[tuple[float, float]]] = {}
        i0 = spec.piece_index(0.0)
        self._i0 = i0
        self._base[i0] = 0.0 - self._local(i0, 0.0)

    def _local(self, idx: int, s: float) -> float:
        """Antiderivative value within piece idx (arbitrary constant)."""
        piece = self.spec.pieces[idx]
        if piece.has_closed_antiderivative:
            return piece.antiderivative(s)
        anchors = self._anchors.setdefault(idx, [])
        if not anchors:
            ref = piece.lo if math.isfinite(piece.lo) else piece.hi
            if not math.isfinite(ref):
                raise ConfigError("quadrature piece needs a finite endpoint")
            anchors.append((ref, 0.0))
        pos = _bisect.bisect_left(anchors, (s, -INF))
        best = None
        for j in (pos - 1, pos):
            if 0 <= j < len(anchors):
                if best is None or abs(anchors[j][0] - s) < abs(best[0] - s):
                    best = anchors[j]
        a, va = best
        if a == s:
            return va
        val = va + adaptive_simpson(self.f, a, s, abs_tol=self.abs_tol,
                                    rel_tol=self.rel_tol)
        _bisect.insort(anchors, (s, val))
        return val

    def _piece_base(self, idx: int) -> float:
        if idx in self._base:
            return self._base[idx]
        # walk outward from the piece containing 0
        known = sorted(self._base)
        src = known[0] if idx < self._i0 else known[-1]
        step = 1 if idx > src else -1
        j = src
        while j != idx:
            edge = self.spec.pieces[j + 1].lo if step > 0 else self.spec.pieces[j].lo
            f_edge = self._base[j] + self._local(j, edge)
            nxt = j + step
            self._base[nxt] = f_edge - self._local(nxt, edge)
            j = nxt
        return self._base[idx]

    def value(self, s: float) -> float:
        if s == 0.0:
            return 0.0
        idx = self.spec.piece_index(s)
        return self._piece_base(idx) + self._local(idx, s)


# ----------------------------------------------------------------------------
# the Nonlinearity object
# ----------------------------------------------------------------------------

@dataclass
class Nonlinearity:
    """Source term f with primitive F (F(0) = 0) and metadata.

    Immutable after construction; safe to share across concurrent workers.
    """

    name: str
    m: float
    N: float
    f: Callable[[float], float]
    F: Callable[[float], float]
    f_vec: Callable[[np.ndarray], np.ndarray]
    domain: tuple[float, float] = (-INF, INF)
    search_box: tuple[float, float] = (-100.0, 100.0)
    has_closed_F: bool = True
    params: dict = field(default_factory=dict)
    pieces: PiecewiseSpec | None = None

    def __post_init__(self):
        if not self.m > 1.0:
            raise ConfigError(f"operator exponent must satisfy m > 1, got {self.m}")
        if not self.N >= self.m:
            raise ConfigError(f"dimension must satisfy N >= m, got N={self.N}, m={self.m}")
        lo, hi = self.search_box
        if not (lo < 0.0 < hi):
            raise ConfigError("search box must contain 0")

    # domain-guarded evaluation (hot paths may call .f directly when the
    # domain is all of R)
    def eval_f(self, s: float) -> float:
        lo, hi = self.domain
        if not (lo <= s <= hi):
            raise DomainError(f"s = {s!r} outside domain [{lo!r}, {hi!r}]")
        return self.f(s)

    def eval_F(self, s: float) -> float:
        lo, hi = self.domain
        if not (lo <= s <= hi):
            raise DomainError(f"s = {s!r} outside domain [{lo!r}, {hi!r}]")
        return self.F(s)

    def Q(self, s: float) -> float:
        """m N F(s) - (N - m) s f(s): the density driving the radial
        virial balance.  Collapses to m^2 F(s) at the m = N edge."""
        return self.m * self.N * self.eval_F(s) - (self.N - self.m) * s * self.eval_f(s)

    @property
    def m_conj(self) -> float:
        return conjugate_exponent(self.m)

    @property
    def crit_exp(self) -> float:
        return crit_exponent(self.m, self.N)

    def label(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{v:g}" for v in self.params.values())
        return f"{self.name}({inner})"


# ----------------------------------------------------------------------------
# catalog
# ----------------------------------------------------------------------------

def _double_power(m: float, N: float, p: float, q: float,
                  search_box: tuple[float, float]) -> Nonlinearity:
    if not (1.0 < q < p):
        raise ConfigError(f"double_power needs 1 < q < p, got p={p}, q={q}")
    pm1, qm1 = p - 1.0, q - 1.0

    def f(s: float) -> float:
        if s == 0.0:
            return 0.0
        mag = abs(s) ** pm1 - abs(s) ** qm1
        return mag if s > 0.0 else -mag

    def F(s: float) -> float:
        a = abs(s)
        return a ** p / p - a ** q / q

    def f_vec(s: np.ndarray) -> np.ndarray:
        a = np.abs(s)
        return np.sign(s) * (a ** pm1 - a ** qm1)

    spec = PiecewiseSpec([
        Piece(-INF, 0.0, (PowerTerm(1.0, pm1, signed=True),
                          PowerTerm(-1.0, qm1, signed=True))),
        Piece(0.0, INF, (PowerTerm(1.0, pm1, signed=True),
                         PowerTerm(-1.0, qm1, signed=True))),
    ])
    return Nonlinearity("double_power", m, N, f, F, f_vec,
                        search_box=search_box, params={"p": p, "q": q},
                        pieces=spec)


_SQRT2 = math.sqrt(2.0)
_TWOSQRT2_3 = 2.0 * _SQRT2 / 3.0


def _g1(m: float, N: float, search_box: tuple[float, float]) -> Nonlinearity:
    def core(x: float) -> float:
        if x < 2.0:
            return x * x * x - _SQRT2 * math.sqrt(x)
        if x < 8.0:
            return 8.0 - x
        return 0.0

    def f(s: float) -> float:
        return core(s) if s >= 0.0 else -core(-s)

    def core_F(x: float) -> float:
        if x < 2.0:
            return 0.25 * x ** 4 - _TWOSQRT2_3 * x ** 1.5
        if x < 8.0:
            return 8.0 * x - 0.5 * x * x - 38.0 / 3.0
        return 58.0 / 3.0

    def F(s: float) -> float:
        return core_F(abs(s))

    def f_vec(s: np.ndarray) -> np.ndarray:
        a = np.abs(s)
        out = np.zeros_like(a)
        inner = a < 2.0
        mid = (a >= 2.0) & (a < 8.0)
        out[inner] = a[inner] ** 3 - _SQRT2 * np.sqrt(a[inner])
        out[mid] = 8.0 - a[mid]
        return np.sign(s) * out

    spec = PiecewiseSpec([
        Piece(-INF, -8.0, (PowerTerm(0.0),)),
        Piece(-8.0, -2.0, (PowerTerm(-8.0), PowerTerm(-1.0, 1.0, signed=True))),
        Piece(-2.0, 0.0, (PowerTerm(1.0, 3.0, signed=True),
                          PowerTerm(_SQRT2, 0.5))),
        Piece(0.0, 2.0, (PowerTerm(1.0, 3.0, signed=True),
                         PowerTerm(-_SQRT2, 0.5))),
        Piece(2.0, 8.0, (PowerTerm(8.0), PowerTerm(-1.0, 1.0, signed=True))),
        Piece(8.0, INF, (PowerTerm(0.0),)),
    ])
    return Nonlinearity("g1", m, N, f, F, f_vec, search_box=search_box,
                        pieces=spec)


def _g2(m: float, N: float, search_box: tuple[float, float]) -> Nonlinearity:
    third = 1.0 / 3.0

    def f(s: float) -> float:
        if s < -2.0:
            return -6.0 * abs(s + 1.0) ** (-4.0 * third)
        if s < 2.0:
            return s * s * s - s
        if s < 8.0:
            return 8.0 - s
        return 0.0

    def F(s: float) -> float:
        if s < -2.0:
            return 2.0 + 18.0 * (1.0 - abs(s + 1.0) ** (-third))
        if s < 2.0:
            return 0.25 * s ** 4 - 0.5 * s * s
        if s < 8.0:
            return 8.0 * s - 0.5 * s * s - 12.0
        return 20.0

    def f_vec(s: np.ndarray) -> np.ndarray:
        out = np.zeros_like(s, dtype=float)
        left = s < -2.0
        core = (s >= -2.0) & (s < 2.0)
        lin = (s >= 2.0) & (s < 8.0)
        out[left] = -6.0 * np.abs(s[left] + 1.0) ** (-4.0 * third)
        sc = s[core]
        out[core] = sc ** 3 - sc
        out[lin] = 8.0 - s[lin]
        return out

    spec = PiecewiseSpec([
        Piece(-INF, -2.0, (PowerTerm(6.0, -4.0 * third, shift=-1.0, signed=True),)),
        Piece(-2.0, 2.0, (PowerTerm(1.0, 3.0, signed=True),
                          PowerTerm(-1.0, 1.0, signed=True))),
        Piece(2.0, 8.0, (PowerTerm(8.0), PowerTerm(-1.0, 1.0, signed=True))),
        Piece(8.0, INF, (PowerTerm(0.0),)),
    ])
    return Nonlinearity("g2", m, N, f, F, f_vec, search_box=search_box,
                        pieces=spec)


def _log_critical(m: float, N: float, lam: float, s0: float,
                  search_box: tuple[float, float]) -> Nonlinearity:
    if N <= m:
        raise ConfigError("log_critical requires N > m (finite critical exponent)")
    if lam <= 0.0:
        raise ConfigError("log_critical requires lambda > 0")
    if s0 <= max(2.0 * math.e, 2.0 * _SQRT2):
        raise ConfigError(f"log_critical core cutoff s0 = {s0} too small")
    ms = crit_exponent(m, N)
    # tail scaled for continuity with the cubic core at |s| = s0
    C = (s0 ** 3 - s0) * math.log(s0) ** lam / s0 ** (ms - 1.0)

    def f(s: float) -> float:
        a = abs(s)
        if a < s0:
            return s * s * s - s
        return math.copysign(C * a ** (ms - 1.0) / math.log(a) ** lam, s)

    def f_vec(s: np.ndarray) -> np.ndarray:
        a = np.abs(s)
        out = np.empty_like(a)
        core = a < s0
        out[core] = s[core] ** 3 - s[core]
        t = a[~core]
        out[~core] = np.sign(s[~core]) * C * t ** (ms - 1.0) / np.log(t) ** lam
        return out

    spec = PiecewiseSpec([
        Piece(-INF, -s0, (PowerTerm(C, ms - 1.0, signed=True, log_exponent=-lam),)),
        Piece(-s0, s0, (PowerTerm(1.0, 3.0, signed=True),
                        PowerTerm(-1.0, 1.0, signed=True))),
        Piece(s0, INF, (PowerTerm(C, ms - 1.0, signed=True, log_exponent=-lam),)),
    ])
    prim = _Primitive(spec, f)
    return Nonlinearity("log_critical", m, N, f, prim.value, f_vec,
                        search_box=search_box, has_closed_F=False,
                        params={"lambda": lam, "s0": s0}, pieces=spec)


def make_nonlinearity(name: str, m: float, N: float, *,
                      p: float | None = None, q: float | None = None,
                      lam: float | None = None, s0: float = 6.0,
                      search_box: tuple[float, float] | None = None) -> Nonlinearity:
    """Build a catalog nonlinearity by name.

    Accepts bare names (``"g2"``, ``"double_power"`` with p/q keywords) or
    parenthesized labels (``"double_power(4,2)"``, ``"log_critical(2)"``).
    """
    name = name.strip()
    if "(" in name:
        base, args = name.split("(", 1)
        args = args.rstrip(") ")
        vals = [float(a) for a in args.split(",") if a.strip()]
        name = base.strip()
        if name == "double_power" and len(vals) == 2:
            p, q = vals
        elif name == "log_critical" and len(vals) >= 1:
            lam = vals[0]
            if len(vals) > 1:
                s0 = vals[1]
        elif vals:
            raise ConfigError(f"unexpected arguments for catalog entry {name!r}")
    box = search_box or (-100.0, 100.0)
    if name == "double_power":
        if p is None or q is None:
            raise ConfigError("double_power requires exponents p and q")
        return _double_power(m, N, p, q, box)
    if name == "g1":
        return _g1(m, N, box)
    if name == "g2":
        return _g2(m, N, box)
    if name == "log_critical":
        if lam is None:
            raise ConfigError("log_critical requires the exponent lambda")
        return _log_critical(m, N, lam, s0, box)
    raise ConfigError(f"unknown catalog nonlinearity {name!r}")


def from_piecewise_config(cfg: dict, m: float, N: float) -> Nonlinearity:
    """Build a user-defined piecewise nonlinearity from a config mapping.

    Schema::

        {"breakpoints": [b0, b1, ..., bk],        # -inf/inf allowed as strings
         "pieces": [[{"coef": c, "exponent": e, "shift": a,
                      "signed": false, "log_exponent": 0}, ...], ...],
         "search_box": [lo, hi]}                  # optional

    ``pieces[i]`` applies on [breakpoints[i], breakpoints[i+1]) (left-closed).
    """
    def _num(v):
        if isinstance(v, str):
            return float(v)
        return float(v)

    bps = [_num(b) for b in cfg["breakpoints"]]
    raw_pieces = cfg["pieces"]
    if len(bps) != len(raw_pieces) + 1:
        raise ConfigError("need exactly len(pieces)+1 breakpoints")
    pieces = []
    for lo, hi, terms in zip(bps, bps[1:], raw_pieces):
        tt = tuple(PowerTerm(coef=float(t["coef"]),
                             exponent=float(t.get("exponent", 0.0)),
                             shift=float(t.get("shift", 0.0)),
                             signed=bool(t.get("signed", False)),
                             log_exponent=float(t.get("log_exponent", 0.0)))
                   for t in terms)
        pieces.append(Piece(lo, hi, tt))
    spec = PiecewiseSpec(pieces)
    prim = _Primitive(spec, spec.value)
    closed = all(p.has_closed_antiderivative for p in spec.pieces)
    box = tuple(cfg.get("search_box", (-100.0, 100.0)))

    def f_vec(s: np.ndarray) -> np.ndarray:
        return spec.value_vec(s)

    return Nonlinearity(str(cfg.get("name", "piecewise")), m, N,
                        spec.value, prim.value, f_vec,
                        domain=(spec.lo, spec.hi), search_box=box,
                        has_closed_F=closed, params={}, pieces=spec)
