"""Derived distances that fold orbit displacements into ``d``.

``d*(x, y) = max(d(x, y), d(x, f(x)), d(y, f(y)))`` turns the extended
contraction into a plain nonlinear one; the orbit-max distance
``d_*(x, y) = max_{0<=k<=n} d(f^k(x), g^k(y))`` does the same for iterated
contractions.  Both are zero on the diagonal.  :func:`verify_inheritance`
checks that a derived space keeps the structure the fixed-point theorems
need: domination of ``d``, (W3), a (delta, eta) pair, and left Cauchy
sequences.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from ._numbers import fmt
from .comparison import Verdict
from .maps import SelfMap
from .spaces import (
    FiniteDistanceSpace,
    check_jms_pair,
    check_left_cauchy,
    check_w3,
    find_jms_pair,
)

__all__ = [
    "DerivedSpace",
    "InheritanceReport",
    "InheritanceViolation",
    "star_space",
    "orbit_max_space",
    "verify_inheritance",
    "orbit_traces",
]


class InheritanceViolation(AssertionError):
    def __init__(self, report: "InheritanceReport"):
        self.report = report
        failed = ", ".join(k for k, v in report.clauses.items() if not v.holds)
        super().__init__(f"derived space lost: {failed}")


@dataclass(frozen=True)
class DerivedSpace:
    base: FiniteDistanceSpace
    f: SelfMap
    kind: str
    space: FiniteDistanceSpace
    g: Optional[SelfMap] = None
    n: Optional[int] = None

    @property
    def matrix(self):
        return self.space.dmatrix

    def to_json(self) -> dict:
        out = self.space.to_json()
        prov = {"kind": self.kind, "map": self.f.to_json(), "base": self.base.to_json()}
        if self.kind == "orbit_max":
            prov["n"] = self.n
            if self.g is not None and self.g != self.f:
                prov["g"] = self.g.to_json()
        out["derived_from"] = prov
        return out


def _require_finite(space, f):
    if space.kind != "finite":
        raise ValueError("derived spaces are built from finite spaces")
    f.validate(space)


def star_space(space: FiniteDistanceSpace, f: SelfMap) -> DerivedSpace:
    _require_finite(space, f)
    d = space.dmatrix
    n = space.n
    m = [[0] * n for _ in range(n)]
    for x in range(n):
        for y in range(n):
            if x != y:
                m[x][y] = max(d[x][y], d[x][f(x)], d[y][f(y)])
    return DerivedSpace(space, f, "star", FiniteDistanceSpace(space.points, m))


def orbit_max_space(space: FiniteDistanceSpace, f: SelfMap, g: Optional[SelfMap] = None, n: int = 1) -> DerivedSpace:
    """``max_{0<=k<=n} d(f^k(x), g^k(y))`` off the diagonal; ``g`` defaults to ``f``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    _require_finite(space, f)
    g = g or f
    g.validate(space)
    d = space.dmatrix
    size = space.n
    m = [[0] * size for _ in range(size)]
    for x in range(size):
        for y in range(size):
            if x == y:
                continue
            a, b, best = x, y, d[x][y]
            for _ in range(n):
                a, b = f(a), g(b)
                best = max(best, d[a][b])
            m[x][y] = best
    return DerivedSpace(space, f, "orbit_max", FiniteDistanceSpace(space.points, m), g=g, n=n)


def orbit_traces(space: FiniteDistanceSpace, f: SelfMap, seed: int = 0, extra: int = 8) -> list:
    """Index sequences long enough to show their periodic tail twice.

    One Picard orbit from every point, plus ``extra`` seeded sequences made
    of a random prefix followed by two copies of a random cycle.
    """
    n = space.n
    length = 3 * n
    traces = []
    for x in range(n):
        t = [x]
        while len(t) < length:
            t.append(f(t[-1]))
        traces.append(t)
    rng = random.Random(seed)
    for _ in range(extra):
        prefix = [rng.randrange(n) for _ in range(rng.randint(0, n))]
        cycle = [rng.randrange(n) for _ in range(rng.randint(1, 3))]
        traces.append(prefix + cycle * 2)
    return traces


@dataclass
class InheritanceReport:
    clauses: dict
    info: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(v.holds for v in self.clauses.values())

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "clauses": {k: v.to_json() for k, v in self.clauses.items()},
            "info": self.info,
        }


def _domination(derived: DerivedSpace) -> Verdict:
    d, m, p = derived.base.dmatrix, derived.matrix, derived.space.points
    for x in range(len(p)):
        for y in range(len(p)):
            if x != y and m[x][y] < d[x][y]:
                return Verdict(False, (p[x], p[y]), f"derived {m[x][y]} < base {d[x][y]}")
    return Verdict(True)


def _w3_transfer(derived: DerivedSpace) -> Verdict:
    if not check_w3(derived.base):
        return Verdict(True, None, "base fails (W3); nothing to transfer")
    v = check_w3(derived.space)
    return Verdict(v.holds, v.witness, v.detail)


def _cauchy_transfer(derived: DerivedSpace, traces) -> Verdict:
    # tolerance 0 is exact here: a finite eventually periodic sequence is
    # left Cauchy iff every distance on its repeated tail is zero
    p = derived.space.points
    for t in traces:
        labels = [p[i] for i in t]
        top = check_left_cauchy(labels, derived.space, 0)
        if not top:
            continue
        low = check_left_cauchy(labels, derived.base, 0)
        if not low or low.index > top.index:
            return Verdict(False, tuple(labels), "left Cauchy for the derived distance only")
    return Verdict(True)


def verify_inheritance(derived: DerivedSpace, traces=None, seed: int = 0, strict: bool = False) -> InheritanceReport:
    """Check that the derived space keeps what the base space had.

    Clauses: ``domination`` (derived >= base off the diagonal),
    ``w3_transfer``, ``jms`` (a (delta, eta) pair found by a fresh search)
    and ``cauchy_transfer`` (left Cauchy for the derived distance implies
    left Cauchy for ``d`` on the given traces, by default
    :func:`orbit_traces`).  With ``strict`` a failing clause raises
    :class:`InheritanceViolation`.
    """
    if traces is None:
        traces = orbit_traces(derived.base, derived.f, seed)
    clauses = {
        "domination": _domination(derived),
        "w3_transfer": _w3_transfer(derived),
    }
    delta, eta, route = find_jms_pair(derived.space)
    clauses["jms"] = Verdict(True, None, f"delta={fmt(delta)}, eta={fmt(eta)} ({route})")
    clauses["cauchy_transfer"] = _cauchy_transfer(derived, traces)

    info = {"jms_pair": [fmt(delta), fmt(eta)], "traces": len(traces)}
    if derived.kind == "star":
        # the constant eta + 2 delta carried over from a base pair
        bd, be, _ = find_jms_pair(derived.base)
        lifted = check_jms_pair(derived.space, bd, be + 2 * bd)
        info["lifted_pair"] = {
            "delta": fmt(bd),
            "eta": fmt(be + 2 * bd),
            "holds": lifted is None,
        }
        if lifted is not None:
            info["lifted_pair"]["violation"] = list(lifted)
    report = InheritanceReport(clauses, info)
    if strict and not report.holds:
        raise InheritanceViolation(report)
    return report
