"""Distance spaces without built-in axioms and the checkers that classify them.

Two kinds of space are supported.  A :class:`FiniteDistanceSpace` holds an
explicit matrix and every check on it is exhaustive.  An
:class:`AnalyticDistanceSpace` holds an expression ``d(x, y)`` over an
interval or the real line; checks on it run on a seeded sample of points
and say so in their reports.

Orientation matters everywhere: ``d(a, x)`` is the distance *from* ``a``
*to* ``x``.  Balls collect ``y`` with ``d(y, x) < r`` and set distances are
``inf d(a, x)`` over ``a`` in the set.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from ._numbers import exact, fmt
from .comparison import Verdict
from .expr import Expr, parse_expression

__all__ = [
    "FiniteDistanceSpace",
    "AnalyticDistanceSpace",
    "Domain",
    "SamplerConfig",
    "AxiomReport",
    "JmsWitness",
    "CauchyVerdict",
    "EnumerationBoundExceeded",
    "classify_axioms",
    "ball",
    "set_distance",
    "closed_sets",
    "is_open",
    "check_w3",
    "jms_witness",
    "find_jms_pair",
    "check_jms_pair",
    "check_left_cauchy",
    "ENUMERATION_BOUND",
]

ENUMERATION_BOUND = 16


class EnumerationBoundExceeded(ValueError):
    pass


class FiniteDistanceSpace:
    """Labelled points with an explicit nonnegative distance matrix.

    No axioms are assumed: the diagonal may be nonzero, ``d`` may be
    asymmetric and the triangle inequality may fail.
    """

    kind = "finite"

    def __init__(self, points: Sequence, dmatrix: Sequence[Sequence]):
        labels = [str(p) for p in points]
        if len(set(labels)) != len(labels):
            raise ValueError("point labels must be unique")
        n = len(labels)
        if n == 0:
            raise ValueError("a space needs at least one point")
        rows = [list(r) for r in dmatrix]
        cols = {len(r) for r in rows}
        if len(rows) != n or cols != {n}:
            width = "/".join(str(c) for c in sorted(cols)) or "0"
            raise ValueError(f"dmatrix {len(rows)}×{width} does not match {n} points")
        d = tuple(tuple(exact(v) for v in r) for r in rows)
        for i, r in enumerate(d):
            for j, v in enumerate(r):
                if v < 0:
                    raise ValueError(f"negative distance d({labels[i]}, {labels[j]}) = {v}")
        self.points = tuple(labels)
        self.dmatrix = d
        self._index = {p: i for i, p in enumerate(labels)}

    @property
    def n(self) -> int:
        return len(self.points)

    def index(self, point) -> int:
        if isinstance(point, str):
            try:
                return self._index[point]
            except KeyError:
                raise KeyError(f"unknown point label {point!r}") from None
        if isinstance(point, int) and 0 <= point < self.n:
            return point
        raise KeyError(f"unknown point {point!r}")

    def distance(self, x, y) -> Fraction:
        return self.dmatrix[self.index(x)][self.index(y)]

    def distinct_values(self) -> list:
        return sorted({v for r in self.dmatrix for v in r})

    def to_json(self) -> dict:
        return {
            "type": "finite",
            "points": list(self.points),
            "d": [[fmt(v) for v in r] for r in self.dmatrix],
        }

    def __eq__(self, other):
        return (
            isinstance(other, FiniteDistanceSpace)
            and self.points == other.points
            and self.dmatrix == other.dmatrix
        )

    def __repr__(self):
        return f"FiniteDistanceSpace(n={self.n})"


@dataclass(frozen=True)
class Domain:
    """``kind`` is ``"interval"`` (with bounds ``a <= b``) or ``"real"``."""

    kind: str = "real"
    a: Optional[Fraction] = None
    b: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind not in ("interval", "real"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "interval":
            if self.a is None or self.b is None:
                raise ValueError("an interval needs both bounds")
            object.__setattr__(self, "a", exact(self.a))
            object.__setattr__(self, "b", exact(self.b))
            if self.a > self.b:
                raise ValueError("empty interval")

    def contains(self, x) -> bool:
        if self.kind == "real":
            return math.isfinite(x) if isinstance(x, float) else True
        return self.a <= x <= self.b

    def to_json(self) -> dict:
        if self.kind == "real":
            return {"kind": "real"}
        return {"kind": "interval", "a": fmt(self.a), "b": fmt(self.b)}


@dataclass(frozen=True)
class SamplerConfig:
    """How analytic spaces are turned into a finite point sample.

    The grid comes first, ordered simplest-first (small denominators, then
    small magnitude), followed by ``random_points`` seeded draws.  On the
    real line the sample lives in ``[-span, span]``.
    """

    seed: int = 0
    grid_points: int = 41
    random_points: int = 59
    span: Fraction = Fraction(10)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "grid_points": self.grid_points,
            "random_points": self.random_points,
            "span": fmt(exact(self.span)),
        }


def _simplicity(x: Fraction):
    return (x.denominator, abs(x), x < 0)


def sample_points(domain: Domain, config: SamplerConfig) -> list:
    if domain.kind == "real":
        lo, hi = -exact(config.span), exact(config.span)
    else:
        lo, hi = domain.a, domain.b
    grid = set()
    if lo == hi:
        grid.add(lo)
    else:
        steps = 1
        while True:
            level = {lo + (hi - lo) * Fraction(k, steps) for k in range(steps + 1)}
            if domain.kind == "real":
                # integers and halves read better than uniform cuts of [-span, span]
                level = {Fraction(k, steps) for k in range(int(lo * steps), int(hi * steps) + 1)}
            if len(grid | level) > config.grid_points and grid:
                break
            grid |= level
            steps *= 2
            if steps > 2**20:
                break
    ordered = sorted(grid, key=_simplicity)[: config.grid_points]
    rng = random.Random(config.seed)
    seen = set(ordered)
    extra = []
    scale = 2**20
    for _ in range(config.random_points * 4):
        if len(extra) >= config.random_points or lo == hi:
            break
        x = lo + (hi - lo) * Fraction(rng.randrange(scale + 1), scale)
        if x not in seen:
            seen.add(x)
            extra.append(x)
    return ordered + extra


class AnalyticDistanceSpace:
    """Distance given by an expression in ``x`` and ``y``.

    ``complete`` records the caller's assertion that left Cauchy sequences
    converge; it cannot be checked.
    """

    kind = "analytic"

    def __init__(self, dexpr, domain: Domain = Domain(), complete: bool = False, check_seed: int = 0):
        if isinstance(dexpr, str):
            dexpr = parse_expression(dexpr, {"x", "y"})
        if not set(dexpr.variables) <= {"x", "y"}:
            raise ValueError("a distance expression may only use x and y")
        self.dexpr: Expr = dexpr
        self.domain = domain
        self.complete = bool(complete)
        probe = sample_points(domain, SamplerConfig(seed=check_seed, grid_points=21, random_points=11))
        for x in probe:
            for y in probe:
                v = self.distance(x, y)
                if v < 0:
                    raise ValueError(f"distance is negative at x={x}, y={y}: {v}")

    def distance(self, x, y):
        return self.dexpr.evaluate({"x": x, "y": y})

    def sample(self, config: SamplerConfig) -> tuple:
        """Points of the sample and the exact finite space they span."""
        pts = sample_points(self.domain, config)
        d = [[self.distance(x, y) for y in pts] for x in pts]
        return pts, FiniteDistanceSpace([str(p) for p in pts], d)

    def to_json(self) -> dict:
        return {
            "type": "analytic",
            "domain": self.domain.to_json(),
            "d": self.dexpr.text,
            "complete": self.complete,
        }

    def __repr__(self):
        return f"AnalyticDistanceSpace({self.dexpr.text!r}, {self.domain})"


def _coverage(space, config):
    if space.kind == "finite":
        return "exhaustive"
    return {"sampled": config.to_json()}


def _finite_view(space, config: Optional[SamplerConfig]):
    """``(points, finite space)``; points are labels for finite spaces."""
    if space.kind == "finite":
        return list(space.points), space
    return space.sample(config or SamplerConfig())


# -------------------------------------------------------------------------
# axioms


TAXONOMY = (
    ("metric", ("a1", "a2", "a3")),
    ("quasi-metric", ("a1", "a3")),
    ("symmetric", ("a1", "a2")),
    ("pseudo-metric", ("a0", "a2", "a3")),
    ("pseudo quasi-metric", ("a0", "a3")),
)


@dataclass(frozen=True)
class AxiomReport:
    a0: Verdict
    a1: Verdict
    a2: Verdict
    a3: Verdict
    coverage: object

    @property
    def classes(self) -> frozenset:
        """Every class of the taxonomy whose axioms hold."""
        return frozenset(name for name, axioms in TAXONOMY if all(getattr(self, a).holds for a in axioms))

    @property
    def taxonomy(self) -> str:
        """Most specific class, or ``"none"``."""
        for name, _ in TAXONOMY:
            if name in self.classes:
                return name
        return "none"

    def to_json(self) -> dict:
        return {
            "taxonomy": self.taxonomy,
            "classes": sorted(self.classes),
            "axioms": {k: getattr(self, k).to_json() for k in ("a0", "a1", "a2", "a3")},
            "coverage": self.coverage,
        }


def classify_axioms(space, sampler: Optional[SamplerConfig] = None) -> AxiomReport:
    """Check A0 to A3 and place the space in the taxonomy.

    A0: ``d(x, y) = 0`` implies ``x = y``.  A1: ``d(x, y) = 0`` iff ``x = y``.
    A2: symmetry.  A3: ``d(x, y) <= d(x, z) + d(z, y)``.  Witnesses are
    lexicographically smallest in sample order.
    """
    sampler = sampler or SamplerConfig(grid_points=25, random_points=16)
    pts, fin = _finite_view(space, sampler)
    d = fin.dmatrix
    n = fin.n
    names = pts

    a0 = a1 = a2 = a3 = None
    for i in range(n):
        for j in range(n):
            v = d[i][j]
            if i != j and v == 0:
                if a0 is None:
                    a0 = (names[i], names[j])
                if a1 is None:
                    a1 = (names[i], names[j])
            if i == j and v != 0 and a1 is None:
                a1 = (names[i], names[j])
            if i < j and a2 is None and v != d[j][i]:
                a2 = (names[i], names[j])
    for i in range(n):
        row = d[i]
        for j in range(n):
            target = row[j]
            for k in range(n):
                if target > row[k] + d[k][j]:
                    a3 = (names[i], names[j], names[k])
                    break
            if a3:
                break
        if a3:
            break

    def verdict(w, text):
        return Verdict(w is None, w, "" if w is None else text)

    return AxiomReport(
        a0=verdict(a0, "zero distance between distinct points"),
        a1=verdict(a1, "zero pattern differs from the diagonal"),
        a2=verdict(a2, "d(x, y) != d(y, x)"),
        a3=verdict(a3, "d(x, y) > d(x, z) + d(z, y)"),
        coverage=_coverage(space, sampler),
    )


# -------------------------------------------------------------------------
# balls and the closed-set topology


@dataclass(frozen=True)
class AnalyticBall:
    space: AnalyticDistanceSpace
    center: object
    radius: object

    def __contains__(self, y) -> bool:
        return self.space.domain.contains(y) and self.space.distance(y, self.center) < self.radius

    def __call__(self, y) -> bool:
        return y in self


def ball(space, x, r):
    """``{y : d(y, x) < r}``; a frozenset of labels, or a membership predicate."""
    r = exact(r) if not isinstance(r, float) else r
    if r <= 0:
        raise ValueError("radius must be positive")
    if space.kind == "analytic":
        if not space.domain.contains(x):
            raise KeyError(f"centre {x} outside the domain")
        return AnalyticBall(space, x, r)
    c = space.index(x)
    return frozenset(space.points[i] for i in range(space.n) if space.dmatrix[i][c] < r)


def set_distance(space: FiniteDistanceSpace, A: Iterable, x):
    """``inf {d(a, x) : a in A}``; ``math.inf`` for the empty set."""
    c = space.index(x)
    values = [space.dmatrix[space.index(a)][c] for a in A]
    return min(values) if values else math.inf


def _zero_masks(space: FiniteDistanceSpace) -> list:
    # bit x of masks[a] is set when d(a, x) = 0
    return [sum(1 << x for x in range(space.n) if space.dmatrix[a][x] == 0) for a in range(space.n)]


def _check_bound(space, bound):
    if space.n > bound:
        raise EnumerationBoundExceeded(
            f"{space.n} points exceed the enumeration bound {bound} ({2 ** space.n} subsets)"
        )


def _closed_masks(space: FiniteDistanceSpace, bound: int) -> list:
    _check_bound(space, bound)
    n = space.n
    zero = _zero_masks(space)
    reach = [0] * (1 << n)
    closed = []
    for mask in range(1 << n):
        if mask:
            low = mask & -mask
            reach[mask] = reach[mask ^ low] | zero[low.bit_length() - 1]
        # closed: every x at zero set-distance from A lies in A
        if reach[mask] & ~mask == 0:
            closed.append(mask)
    return closed


def _mask_to_set(space, mask) -> frozenset:
    return frozenset(space.points[i] for i in range(space.n) if mask >> i & 1)


def _set_to_mask(space, points) -> int:
    mask = 0
    for p in points:
        mask |= 1 << space.index(p)
    return mask


def closed_sets(space: FiniteDistanceSpace, bound: int = ENUMERATION_BOUND) -> list:
    """All ``A`` such that ``d(A, x) = 0`` implies ``x`` in ``A``.

    Enumerates ``2**n`` subsets and refuses spaces above ``bound`` points.
    """
    return [_mask_to_set(space, m) for m in _closed_masks(space, bound)]


def is_open(space: FiniteDistanceSpace, U: Iterable, bound: int = ENUMERATION_BOUND) -> bool:
    _check_bound(space, bound)
    full = (1 << space.n) - 1
    complement = full & ~_set_to_mask(space, U)
    zero = _zero_masks(space)
    reach = 0
    for a in range(space.n):
        if complement >> a & 1:
            reach |= zero[a]
    return reach & ~complement == 0


def check_w3(space: FiniteDistanceSpace) -> Verdict:
    """Uniqueness of d-limits.

    On a finite space a d-convergent sequence is eventually at distance 0
    from its limit and has a constant subsequence, so W3 fails exactly when
    some ``a`` has ``d(a, y) = d(a, z) = 0`` for two distinct ``y, z``.
    """
    for a in range(space.n):
        zeros = [x for x in range(space.n) if space.dmatrix[a][x] == 0]
        if len(zeros) > 1:
            p = space.points
            return Verdict(False, (p[a], p[zeros[0]], p[zeros[1]]), "two d-limits for a constant sequence")
    return Verdict(True)


# -------------------------------------------------------------------------
# JMS


@dataclass(frozen=True)
class JmsWitness:
    """Ball-diameter bound ``R`` for radius ``r`` and the derived ``(delta, eta)``.

    ``proposed`` is the pair built from ``(r/2, R)``; ``delta`` and ``eta``
    are only set when that pair passed the exhaustive triple check, and
    ``violation`` holds the first failing triple ``(x, y, z)`` otherwise.
    """

    r: object
    R: object
    proposed: Optional[tuple]
    delta: object = None
    eta: object = None
    violation: Optional[tuple] = None
    coverage: object = "exhaustive"
    note: str = ""

    @property
    def verified(self) -> bool:
        return self.delta is not None

    def to_json(self) -> dict:
        out = {
            "r": fmt(self.r),
            "R": fmt(self.R),
            "verified": self.verified,
            "coverage": self.coverage,
        }
        if self.proposed is not None:
            out["proposed"] = {"delta": fmt(self.proposed[0]), "eta": fmt(self.proposed[1])}
        if self.verified:
            out["delta"] = fmt(self.delta)
            out["eta"] = fmt(self.eta)
        if self.violation is not None:
            out["violation"] = [fmt(v) for v in self.violation]
        if self.note:
            out["note"] = self.note
        return out


def _ball_radius_bound(fin: FiniteDistanceSpace, r) -> Fraction:
    d = fin.dmatrix
    R = Fraction(0)
    for c in range(fin.n):
        members = [y for y in range(fin.n) if d[y][c] < r]
        for a in members:
            for b in members:
                if d[a][b] > R:
                    R = d[a][b]
    return R


def check_jms_pair(space, delta, eta, sampler=None, both_directions: bool = False):
    """First triple ``(x, y, z)`` with ``d(x,z) + d(y,z) < delta`` but ``d(x,y) >= eta``.

    ``both_directions`` tests ``max(d(x,y), d(y,x)) < eta`` instead.
    Returns ``None`` when there is no such triple.
    """
    pts, fin = _finite_view(space, sampler)
    d = fin.dmatrix
    n = fin.n
    for x in range(n):
        for y in range(n):
            far = d[x][y] >= eta or (both_directions and d[y][x] >= eta)
            if not far:
                continue
            for z in range(n):
                if d[x][z] + d[y][z] < delta:
                    return (pts[x], pts[y], pts[z])
    return None


def jms_witness(space, r, eta_cap=None, sampler: Optional[SamplerConfig] = None) -> JmsWitness:
    """Compute ``R = max diam B(x, r)`` and test ``(delta, eta) = (r/2, R)``.

    When ``R = 0`` every ball is degenerate and ``eta`` becomes the smallest
    positive distance (1 if there is none), since ``eta`` must be positive.
    ``eta_cap`` bounds the acceptable ``R``; above it no pair is proposed.
    """
    r = exact(r)
    if r <= 0:
        raise ValueError("r must be positive")
    pts, fin = _finite_view(space, sampler)
    coverage = _coverage(space, sampler or SamplerConfig())
    R = _ball_radius_bound(fin, r)
    if eta_cap is not None and R > exact(eta_cap):
        return JmsWitness(r, R, None, coverage=coverage, note="R exceeds eta_cap")
    note = ""
    eta = R
    if R == 0:
        positive = [v for v in fin.distinct_values() if v > 0]
        eta = positive[0] if positive else Fraction(1)
        note = "degenerate balls: eta is the smallest positive distance"
    delta = r / 2
    violation = check_jms_pair(fin, delta, eta)
    if violation is not None:
        violation = tuple(pts[fin.index(v)] for v in violation)
        return JmsWitness(r, R, (delta, eta), violation=violation, coverage=coverage, note=note)
    return JmsWitness(r, R, (delta, eta), delta, eta, coverage=coverage, note=note)


def find_jms_pair(space: FiniteDistanceSpace) -> tuple:
    """Some ``(delta, eta, route)`` satisfying the triple condition.

    Tries the ball-diameter construction at every realized positive
    distance first; otherwise any ``eta`` above the largest distance works.
    """
    values = [v for v in space.distinct_values() if v > 0]
    for r in values:
        w = jms_witness(space, r)
        if w.verified:
            return w.delta, w.eta, f"ball diameters at r={r}"
    delta = values[0] / 2 if values else Fraction(1)
    eta = (values[-1] if values else Fraction(0)) + 1
    if check_jms_pair(space, delta, eta) is not None:  # pragma: no cover - eta exceeds every distance
        raise AssertionError("fallback JMS pair failed")
    return delta, eta, "eta above the largest distance"


# -------------------------------------------------------------------------
# left Cauchy traces


@dataclass(frozen=True)
class CauchyVerdict:
    observed: bool
    index: Optional[int]
    tail_sup: list = field(default_factory=list, repr=False)

    def __bool__(self):
        return self.observed

    def to_json(self) -> dict:
        return {"observed": self.observed, "index": self.index}


def check_left_cauchy(trace: Sequence, space, tol) -> CauchyVerdict:
    """Smallest ``N`` with ``d(x_n, x_m) <= tol`` for all recorded ``m > n >= N``.

    The tail must keep at least two terms, otherwise the verdict is "not
    observed within trace".  A one-term trace is trivially Cauchy.
    """
    if not trace:
        raise ValueError("empty trace")
    L = len(trace)
    if L == 1:
        return CauchyVerdict(True, 0, [0])
    dist = space.distance
    sup = [0] * L
    running = 0
    for n in range(L - 2, -1, -1):
        row = max(dist(trace[n], trace[m]) for m in range(n + 1, L))
        running = max(running, row)
        sup[n] = running
    for n in range(L - 1):
        if sup[n] <= tol:
            return CauchyVerdict(True, n, sup)
    return CauchyVerdict(False, None, sup)
