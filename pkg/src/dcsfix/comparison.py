"""Piecewise-affine comparison functions and the properties they can have.

A :class:`PiecewiseFn` is a map ``[0, inf) -> [0, inf)`` given by
breakpoints ``0 = t_0 < t_1 < ... < t_k``, an explicit value at every
breakpoint and one affine law on every open gap ``(t_i, t_{i+1})`` (the last
gap is unbounded).  Because the laws are affine, every one-sided limit is
read off a single law, so membership tests that are stated with ``limsup``
reduce to finitely many exact rational inequalities.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from ._numbers import exact, fmt, is_exact

__all__ = [
    "Law",
    "PiecewiseFn",
    "Verdict",
    "PhiReport",
    "MatkowskiReport",
    "IterateTrace",
    "DEFAULT_PROBES",
    "affine",
    "one_sided_limits",
    "check_comparison",
    "check_phi_membership",
    "check_boyd_wong",
    "check_pasicki",
    "check_matkowski",
    "monotone_envelope",
    "max_combine",
    "iterate_to_zero",
    "envelope_bounds",
    "envelope_power_bound",
]

DEFAULT_PROBES = (Fraction(1, 1000), Fraction(1), Fraction(1000))

# iterates whose denominators outgrow this are rounded up onto a 2**-80 grid
_MAX_DENOMINATOR = 2**64
_GRID = 2**80


def _round_up(x: Fraction) -> Fraction:
    # upward rounding cannot push an orbit below a point it is decreasing to
    if x.denominator <= _MAX_DENOMINATOR:
        return x
    return Fraction(-((-x.numerator * _GRID) // x.denominator), _GRID)


@dataclass(frozen=True)
class Law:
    """The affine law ``slope * t + intercept``."""

    slope: Fraction
    intercept: Fraction

    def __call__(self, t):
        return self.slope * t + self.intercept

    def crossing(self, other: "Law") -> Optional[Fraction]:
        """Abscissa where the two lines meet, ``None`` when parallel."""
        if self.slope == other.slope:
            return None
        return (other.intercept - self.intercept) / (self.slope - other.slope)


class PiecewiseFn:
    """Exact piecewise-affine function on ``[0, inf)``.

    Parameters
    ----------
    breakpoints : sequence of numbers
        Strictly increasing, starting at 0.
    values : sequence of numbers
        ``values[i]`` is the function value at ``breakpoints[i]``.
    laws : sequence of (slope, intercept) pairs or :class:`Law`
        ``laws[i]`` applies on the open gap after ``breakpoints[i]``; the
        last one is the unbounded tail.

    Redundant breakpoints (same law on both sides, value continuous) are
    dropped, so two instances compare equal iff they are the same function.
    """

    __slots__ = ("breakpoints", "values", "laws", "_fb", "_fv", "_fl")

    def __init__(self, breakpoints: Sequence, values: Sequence, laws: Sequence):
        bps = [exact(b) for b in breakpoints]
        vals = [exact(v) for v in values]
        lws = [l if isinstance(l, Law) else Law(exact(l[0]), exact(l[1])) for l in laws]
        if not bps or bps[0] != 0:
            raise ValueError("breakpoints must start at 0")
        if len(vals) != len(bps) or len(lws) != len(bps):
            raise ValueError(
                f"need one value and one law per breakpoint: got {len(bps)} breakpoints, "
                f"{len(vals)} values, {len(lws)} laws"
            )
        for a, b in zip(bps, bps[1:]):
            if not a < b:
                raise ValueError(f"breakpoints not strictly increasing at {a}, {b}")
        for t, v in zip(bps, vals):
            if v < 0:
                raise ValueError(f"negative value {v} at t={t}")
        for i, law in enumerate(lws):
            if law(bps[i]) < 0:
                raise ValueError(f"law {i} is negative just right of t={bps[i]}")
            if i + 1 < len(bps):
                if law(bps[i + 1]) < 0:
                    raise ValueError(f"law {i} is negative just left of t={bps[i + 1]}")
            elif law.slope < 0:
                raise ValueError("tail slope is negative, the function would leave [0, inf)")

        # drop breakpoints that carry no information
        keep = [0]
        for i in range(1, len(bps)):
            j = keep[-1]
            if lws[j] == lws[i] and vals[i] == lws[i](bps[i]):
                continue
            keep.append(i)
        self.breakpoints = tuple(bps[i] for i in keep)
        self.values = tuple(vals[i] for i in keep)
        self.laws = tuple(lws[i] for i in keep)
        self._fb = [float(b) for b in self.breakpoints]
        self._fv = [float(v) for v in self.values]
        self._fl = [(float(l.slope), float(l.intercept)) for l in self.laws]

    # construction helpers -------------------------------------------------

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple], tail: tuple) -> "PiecewiseFn":
        """Build from ``(left_end, value_at_left_end, slope, intercept)`` rows.

        ``tail`` is ``(left_end, value, slope, intercept)`` as well; a value
        of ``None`` means "continuous from the right".
        """
        rows = list(pieces) + [tail]
        bps, vals, laws = [], [], []
        for left, value, slope, intercept in rows:
            law = Law(exact(slope), exact(intercept))
            left = exact(left)
            bps.append(left)
            vals.append(law(left) if value is None else exact(value))
            laws.append(law)
        return cls(bps, vals, laws)

    @property
    def tail(self) -> Law:
        return self.laws[-1]

    def __call__(self, t):
        return evaluate(self, t)

    def __eq__(self, other):
        if not isinstance(other, PiecewiseFn):
            return NotImplemented
        return (self.breakpoints, self.values, self.laws) == (
            other.breakpoints,
            other.values,
            other.laws,
        )

    def __hash__(self):
        return hash((self.breakpoints, self.values, self.laws))

    def __repr__(self):
        rows = ", ".join(
            f"[{t}]={v} then {l.slope}t+{l.intercept}"
            for t, v, l in zip(self.breakpoints, self.values, self.laws)
        )
        return f"PiecewiseFn({rows})"

    def gaps(self):
        """Yield ``(left, right, law)`` for each open gap; ``right`` is ``None`` for the tail."""
        n = len(self.breakpoints)
        for i in range(n):
            right = self.breakpoints[i + 1] if i + 1 < n else None
            yield self.breakpoints[i], right, self.laws[i]

    # serialization --------------------------------------------------------

    def to_json(self) -> dict:
        pieces = [
            {"at": fmt(v), "slope": fmt(l.slope), "intercept": fmt(l.intercept)}
            for v, l in zip(self.values[:-1], self.laws[:-1])
        ]
        tail = {"slope": fmt(self.tail.slope), "intercept": fmt(self.tail.intercept)}
        if self.values[-1] != self.tail(self.breakpoints[-1]):
            tail["at"] = fmt(self.values[-1])
        return {"breakpoints": [fmt(b) for b in self.breakpoints], "pieces": pieces, "tail": tail}

    @classmethod
    def from_json(cls, data: dict) -> "PiecewiseFn":
        """Inverse of :meth:`to_json`.

        ``pieces`` has one entry per breakpoint except the last; the tail
        law starts at the last breakpoint and may carry its own ``"at"``.
        """
        try:
            bps = [exact(b) for b in data["breakpoints"]]
            pieces = data.get("pieces", [])
            tail = data["tail"]
        except KeyError as exc:
            raise ValueError(f"function is missing key {exc.args[0]!r}") from None
        if len(pieces) != len(bps) - 1:
            raise ValueError(
                f"{len(bps)} breakpoints need {len(bps) - 1} pieces plus a tail, got {len(pieces)}"
            )
        rows = []
        for b, p in zip(bps, pieces):
            rows.append((b, p.get("at"), p["slope"], p["intercept"]))
        tail_row = (bps[-1], tail.get("at"), tail["slope"], tail["intercept"])
        return cls.from_pieces(rows, tail_row)


def affine(slope, intercept=0) -> PiecewiseFn:
    """A single affine law on the whole half-line."""
    law = Law(exact(slope), exact(intercept))
    return PiecewiseFn([0], [law.intercept], [law])


# -------------------------------------------------------------------------
# evaluation and limits


def evaluate(f: PiecewiseFn, t):
    """Value of ``f`` at ``t >= 0``; exact for rational ``t``, float otherwise."""
    if t < 0:
        raise ValueError(f"negative argument {t}")
    if is_exact(t):
        i = bisect_right(f.breakpoints, t) - 1
        if t == f.breakpoints[i]:
            return f.values[i]
        return f.laws[i](t)
    t = float(t)
    i = bisect_right(f._fb, t) - 1
    if t == f._fb[i]:
        return f._fv[i]
    a, b = f._fl[i]
    return a * t + b


def one_sided_limits(f: PiecewiseFn, r) -> tuple:
    """Exact ``(left_limit, right_limit)`` of ``f`` at ``r > 0``."""
    r = exact(r)
    if r <= 0:
        raise ValueError("one-sided limits are taken at r > 0")
    left = f.laws[bisect_left(f.breakpoints, r) - 1](r)
    right = f.laws[bisect_right(f.breakpoints, r) - 1](r)
    return left, right


def _right_limit_at(f: PiecewiseFn, i: int) -> Fraction:
    return f.laws[i](f.breakpoints[i])


def _left_limit_at(f: PiecewiseFn, i: int) -> Fraction:
    return f.laws[i - 1](f.breakpoints[i])


def _bad_point(law: Law, left, right, strict: bool, offset=0):
    """Point of the open gap where ``law(t) - t - offset`` breaks the sign rule.

    With ``strict`` the rule is ``< 0`` (so ``>= 0`` is a violation),
    otherwise ``<= 0``.  Returns ``None`` when the rule holds on the whole gap.
    """
    g0 = law(left) - left - offset
    gs = law.slope - 1
    bad_at_left = g0 >= 0 if strict else g0 > 0
    if gs == 0:
        if not bad_at_left:
            return None
        return left + 1 if right is None else (left + right) / 2
    z = left - g0 / gs
    if gs > 0:
        lo = max(left, z)
        if right is not None and lo >= right:
            return None
        return lo + 1 if right is None else (lo + right) / 2
    hi = z if right is None else min(z, right)
    if hi <= left:
        return None
    return (left + hi) / 2


# -------------------------------------------------------------------------
# property checks


@dataclass(frozen=True)
class Verdict:
    """A yes/no answer with the smallest counterexample found."""

    holds: bool
    witness: object = None
    detail: str = ""

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        out = {"holds": self.holds}
        if self.witness is not None:
            w = self.witness
            out["witness"] = [fmt(x) for x in w] if isinstance(w, tuple) else fmt(w)
        if self.detail:
            out["detail"] = self.detail
        return out


def check_comparison(f: PiecewiseFn) -> Verdict:
    """``f(0) = 0`` and ``f(t) < t`` for every ``t > 0``."""
    if f.values[0] != 0:
        return Verdict(False, Fraction(0), "f(0) != 0")
    for i, (left, right, law) in enumerate(f.gaps()):
        if i > 0 and f.values[i] >= left:
            return Verdict(False, left, f"f({left}) = {f.values[i]} is not below t")
        w = _bad_point(law, left, right, strict=True)
        if w is not None:
            return Verdict(False, w, f"f({w}) = {law(w)} is not below t")
    return Verdict(True)


@dataclass(frozen=True)
class PhiReport:
    is_comparison: bool
    left_limsup_ok: bool
    right_limsup_ok: bool
    plateau_ok: bool
    comparison_witness: object = None
    left_witness: object = None
    right_witness: object = None
    plateau_witness: object = None

    @property
    def verdict(self) -> bool:
        return self.is_comparison and self.left_limsup_ok and self.right_limsup_ok and self.plateau_ok

    def __bool__(self):
        return self.verdict

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "is_comparison": self.is_comparison,
            "left_limsup_ok": self.left_limsup_ok,
            "right_limsup_ok": self.right_limsup_ok,
            "plateau_ok": self.plateau_ok,
            "witnesses": {
                k: fmt(v)
                for k, v in (
                    ("comparison", self.comparison_witness),
                    ("left_limsup", self.left_witness),
                    ("right_limsup", self.right_witness),
                    ("plateau", self.plateau_witness),
                )
                if v is not None
            },
        }


def check_phi_membership(f: PiecewiseFn) -> PhiReport:
    """Decide membership in the class of comparison functions with

    * left limit ``< r`` at every ``r > 0``,
    * right limit ``<= r`` at every ``r > 0``,
    * ``f == s`` on some ``(s, s + eps)`` wherever the right limit equals ``s``.
    """
    comp = check_comparison(f)

    left_w = right_w = plateau_w = None
    for i, (left, right, law) in enumerate(f.gaps()):
        if i > 0:
            if left_w is None and _left_limit_at(f, i) >= left:
                left_w = left
            rl = _right_limit_at(f, i)
            if right_w is None and rl > left:
                right_w = left
            if plateau_w is None and rl == left and law.slope != 0:
                plateau_w = left
        # inside a gap both limits equal law(r)
        if left_w is None:
            left_w = _bad_point(law, left, right, strict=True)
        if right_w is None:
            right_w = _bad_point(law, left, right, strict=False)
        if plateau_w is None and law.slope != 0:
            if law.slope == 1 and law.intercept == 0:
                plateau_w = left + 1 if right is None else (left + right) / 2
            elif law.slope != 1:
                z = law.intercept / (1 - law.slope)
                if z > left and (right is None or z < right) and z > 0:
                    plateau_w = z
    return PhiReport(
        is_comparison=comp.holds,
        left_limsup_ok=left_w is None,
        right_limsup_ok=right_w is None,
        plateau_ok=plateau_w is None,
        comparison_witness=comp.witness,
        left_witness=left_w,
        right_witness=right_w,
        plateau_witness=plateau_w,
    )


def check_boyd_wong(f: PiecewiseFn) -> Verdict:
    """Right limit strictly below ``s`` at every ``s > 0``."""
    comp = check_comparison(f)
    if not comp:
        return Verdict(False, comp.witness, "not a comparison function")
    for i in range(1, len(f.breakpoints)):
        s = f.breakpoints[i]
        if _right_limit_at(f, i) >= s:
            return Verdict(False, s, f"right limit at {s} is {_right_limit_at(f, i)}")
    return Verdict(True)


def check_pasicki(f: PiecewiseFn) -> Verdict:
    """Every ``s > 0`` has a right neighbourhood ``(s, s + eps)`` where ``f <= s``."""
    comp = check_comparison(f)
    if not comp:
        return Verdict(False, comp.witness, "not a comparison function")
    # inside gaps law(s) < s already; only breakpoints can fail
    for i in range(1, len(f.breakpoints)):
        s = f.breakpoints[i]
        rl = _right_limit_at(f, i)
        if rl > s or (rl == s and f.laws[i].slope > 0):
            return Verdict(False, s, f"f rises above {s} right after it")
    return Verdict(True)


@dataclass(frozen=True)
class IterateTrace:
    values: tuple
    converged: bool

    @property
    def steps(self) -> int:
        return len(self.values) - 1

    def to_json(self) -> dict:
        return {"converged": self.converged, "steps": self.steps, "last": fmt(self.values[-1])}


def iterate_to_zero(f: PiecewiseFn, s, n_max: int = 10_000, tol=Fraction(1, 10**9)) -> IterateTrace:
    """Iterate ``f`` from ``s`` until the value drops to ``tol`` or below.

    Arithmetic stays exact while denominators are small; larger ones are
    rounded up onto a ``2**-80`` grid.  Running out of ``n_max`` steps only means
    decay was not observed, not that it fails.
    """
    s = exact(s)
    tol = exact(tol)
    if s <= 0:
        raise ValueError("iteration starts at s > 0")
    values = [s]
    x = s
    while x > tol and len(values) <= n_max:
        x = _round_up(evaluate(f, x))
        values.append(x)
    return IterateTrace(tuple(values), x <= tol)


def _monotone_witness(f: PiecewiseFn):
    if f.values[0] > _right_limit_at(f, 0):
        return Fraction(0)
    for i, (left, right, law) in enumerate(f.gaps()):
        if i > 0:
            if not _left_limit_at(f, i) <= f.values[i] <= _right_limit_at(f, i):
                return left
        if law.slope < 0:
            return left + 1 if right is None else (left + right) / 2
    return None


def _structural_probes(f: PiecewiseFn) -> list:
    # one point inside every gap catches orbits stuck above a touching breakpoint
    probes = []
    for left, right, _ in f.gaps():
        probes.append(left + 1 if right is None else (left + right) / 2)
    return probes


@dataclass(frozen=True)
class MatkowskiReport:
    is_comparison: bool
    monotone: bool
    monotone_witness: object
    probes: tuple
    traces: tuple
    undecided_iterate: bool

    @property
    def holds(self) -> bool:
        return self.is_comparison and self.monotone and not self.undecided_iterate

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        out = {
            "holds": self.holds,
            "is_comparison": self.is_comparison,
            "monotone": self.monotone,
            "iterate_check": "semi-decision",
            "undecided_iterate": self.undecided_iterate,
            "probes": [fmt(p) for p in self.probes],
        }
        if self.monotone_witness is not None:
            out["monotone_witness"] = fmt(self.monotone_witness)
        return out


def check_matkowski(
    f: PiecewiseFn,
    probes: Sequence = DEFAULT_PROBES,
    n_max: int = 10_000,
    tol=Fraction(1, 10**9),
    structural: bool = True,
) -> MatkowskiReport:
    """Monotone comparison function whose iterates vanish.

    Monotonicity is exact.  Vanishing iterates are probed at ``probes``
    and, when ``structural`` is set, at one point inside every gap of ``f``.
    A probe that does not reach ``tol`` within ``n_max`` steps makes the
    report ``undecided_iterate`` and the answer false.
    """
    if not probes:
        raise ValueError("probes must be nonempty")
    comp = check_comparison(f)
    mono_w = _monotone_witness(f)
    all_probes = [exact(p) for p in probes]
    if structural:
        all_probes += [p for p in _structural_probes(f) if p not in all_probes]
    traces = ()
    undecided = False
    if comp and mono_w is None:
        traces = tuple(iterate_to_zero(f, p, n_max, tol) for p in all_probes)
        undecided = not all(t.converged for t in traces)
    return MatkowskiReport(
        is_comparison=comp.holds,
        monotone=mono_w is None,
        monotone_witness=mono_w,
        probes=tuple(all_probes),
        traces=traces,
        undecided_iterate=undecided,
    )


# -------------------------------------------------------------------------
# constructions


def _const(c) -> Law:
    return Law(Fraction(0), c)


def monotone_envelope(f: PiecewiseFn) -> PiecewiseFn:
    """Running supremum ``t -> sup f((0, t])`` with value 0 at 0.

    Sweeps the gaps left to right keeping the supremum so far; a rising law
    that starts below it is flat until the crossing point and follows the
    law afterwards.
    """
    rows = []  # (left, value, law)
    best = Fraction(0)
    for i, (left, right, law) in enumerate(f.gaps()):
        if i > 0:
            best = max(best, f.values[i])
        at_left = Fraction(0) if i == 0 else best
        start = law(left)
        if law.slope <= 0:
            best = max(best, start)
            rows.append((left, at_left, _const(best)))
            continue
        if start >= best:
            rows.append((left, at_left, law))
        else:
            z = (best - law.intercept) / law.slope
            if right is not None and z >= right:
                rows.append((left, at_left, _const(best)))
            else:
                rows.append((left, at_left, _const(best)))
                rows.append((z, best, law))
        if right is not None:
            best = max(best, law(right))
    return PiecewiseFn([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows])


def _max2(f: PiecewiseFn, g: PiecewiseFn) -> PiecewiseFn:
    cuts = sorted(set(f.breakpoints) | set(g.breakpoints))
    rows = []
    for j, left in enumerate(cuts):
        right = cuts[j + 1] if j + 1 < len(cuts) else None
        lf = f.laws[bisect_right(f.breakpoints, left) - 1]
        lg = g.laws[bisect_right(g.breakpoints, left) - 1]
        value = max(evaluate(f, left), evaluate(g, left))
        z = lf.crossing(lg)
        if z is not None and z > left and (right is None or z < right):
            probe = (left + z) / 2
            first, second = (lf, lg) if lf(probe) >= lg(probe) else (lg, lf)
            rows.append((left, value, first))
            rows.append((z, lf(z), second))
        else:
            probe = left + 1 if right is None else (left + right) / 2
            rows.append((left, value, lf if lf(probe) >= lg(probe) else lg))
    return PiecewiseFn([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows])


def max_combine(fs: Sequence[PiecewiseFn], require_phi: bool = True) -> PiecewiseFn:
    """Exact pointwise maximum of ``fs``.

    With ``require_phi`` every input must pass :func:`check_phi_membership`.
    """
    fs = list(fs)
    if not fs:
        raise ValueError("max_combine needs at least one function")
    if require_phi:
        for k, f in enumerate(fs):
            if not check_phi_membership(f):
                raise ValueError(f"function #{k} is not in the class Phi")
    out = fs[0]
    for g in fs[1:]:
        out = _max2(out, g)
    return out


def envelope_bounds(envelope: PiecewiseFn, start, count: int) -> list:
    """``[start, envelope(start), ..., envelope^(count-1)(start)]``.

    Exact starts stay exact (rounded up once denominators get large, so the
    bounds never shrink through rounding); float starts stay float.
    """
    out = []
    x = start
    for _ in range(count):
        out.append(x)
        x = evaluate(envelope, x)
        if is_exact(x):
            x = _round_up(x)
    return out


def envelope_power_bound(envelope: PiecewiseFn, start, n: int) -> float:
    """``envelope`` applied ``n`` times to ``start``, as a float bound."""
    return float(envelope_bounds(envelope, start, n + 1)[-1])
