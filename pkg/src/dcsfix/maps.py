"""Self-maps of a distance space and verifiers for the contraction conditions.

Every verifier walks ordered pairs ``(x, y)`` and records the margin
``lhs - rhs`` of the inequality it tests.  On finite spaces all pairs are
visited; on analytic spaces the pairs of a seeded point sample are, and the
report carries the sampler settings.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from ._numbers import exact, fmt, leq
from .comparison import PiecewiseFn, Verdict, check_phi_membership, evaluate
from .expr import Expr, parse_expression
from .spaces import FiniteDistanceSpace, SamplerConfig, sample_points

__all__ = [
    "SelfMap",
    "HypothesisReport",
    "compose_power",
    "check_banach",
    "check_nonlinear_contraction",
    "check_extended_contraction",
    "check_iterated_contraction",
    "check_d_continuity",
    "pair_sample",
]

MAP_SAMPLER = SamplerConfig()


class SelfMap:
    """``f: X -> X`` as an index array (finite) or an expression in ``x``."""

    def __init__(self, image: Optional[Sequence[int]] = None, expr: Optional[Expr] = None):
        if (image is None) == (expr is None):
            raise ValueError("give exactly one of image or expr")
        self.image = tuple(int(i) for i in image) if image is not None else None
        self.expr = expr
        if expr is not None and not set(expr.variables) <= {"x"}:
            raise ValueError("a map expression may only use x")

    @classmethod
    def finite(cls, image: Sequence[int]) -> "SelfMap":
        return cls(image=image)

    @classmethod
    def analytic(cls, expr) -> "SelfMap":
        if isinstance(expr, str):
            expr = parse_expression(expr, {"x"})
        return cls(expr=expr)

    @property
    def kind(self) -> str:
        return "finite" if self.image is not None else "analytic"

    def __call__(self, x):
        if self.image is not None:
            return self.image[x]
        return self.expr.evaluate({"x": x})

    def iterate(self, x, k: int):
        for _ in range(k):
            x = self(x)
        return x

    def validate(self, space) -> None:
        """Raise ``ValueError`` unless ``f`` maps the space into itself."""
        if space.kind == "finite":
            if self.image is None:
                raise ValueError("finite spaces need an index-array map")
            if len(self.image) != space.n:
                raise ValueError(f"map has {len(self.image)} images for {space.n} points")
            bad = [i for i in self.image if not 0 <= i < space.n]
            if bad:
                raise ValueError(f"image index {bad[0]} out of range 0..{space.n - 1}")
            return
        if self.expr is None:
            raise ValueError("analytic spaces need an expression map")
        for x in sample_points(space.domain, SamplerConfig(grid_points=21, random_points=11)):
            y = self(x)
            if not space.domain.contains(y):
                raise ValueError(f"map sends {x} to {y}, outside the domain")

    def to_json(self) -> dict:
        if self.image is not None:
            return {"type": "finite", "image": list(self.image)}
        return {"type": "analytic", "f": self.expr.text}

    def __eq__(self, other):
        return isinstance(other, SelfMap) and (self.image, self.expr) == (other.image, other.expr)

    def __repr__(self):
        return f"SelfMap({self.image if self.image is not None else self.expr.text!r})"


def compose_power(f: SelfMap, l: int) -> SelfMap:
    """``f`` composed with itself ``l`` times."""
    if l < 1:
        raise ValueError("power must be at least 1")
    if f.image is not None:
        return SelfMap.finite([f.iterate(i, l) for i in range(len(f.image))])
    out = f.expr
    for _ in range(l - 1):
        out = f.expr.substitute("x", out)
    return SelfMap(expr=out)


@dataclass(frozen=True)
class HypothesisReport:
    name: str
    holds: bool
    worst_margin: object
    witness: Optional[tuple]
    coverage: object
    checked: int
    detail: str = ""

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "holds": self.holds,
            "worst_margin": fmt(self.worst_margin),
            "checked_pairs": self.checked,
            "coverage": self.coverage,
        }
        if self.witness is not None:
            out["witness"] = [fmt(w) for w in self.witness]
        if self.detail:
            out["detail"] = self.detail
        return out


def pair_sample(space, sampler: Optional[SamplerConfig] = None):
    """Points to pair up, their labels for witnesses, and the coverage tag."""
    if space.kind == "finite":
        return list(range(space.n)), list(space.points), "exhaustive"
    config = sampler or MAP_SAMPLER
    pts = sample_points(space.domain, config)
    return pts, pts, {"sampled": config.to_json(), "points": len(pts)}


def _distance_fn(space) -> Callable:
    if space.kind == "finite":
        d = space.dmatrix
        return lambda i, j: d[i][j]
    return space.distance


def _run(name, space, f: SelfMap, margin: Callable, sampler) -> HypothesisReport:
    f.validate(space)
    pts, labels, coverage = pair_sample(space, sampler)
    images = [f(x) for x in pts]
    worst = None
    witness = None
    count = 0
    for i, x in enumerate(pts):
        for j, y in enumerate(pts):
            m = margin(x, y, images[i], images[j])
            count += 1
            if worst is None or m > worst:
                worst = m
                witness = (labels[i], labels[j])
    holds = leq(worst, 0)
    return HypothesisReport(name, holds, worst, witness, coverage, count)


def _require_phi(phi: PiecewiseFn, require: bool, label: str) -> None:
    if check_phi_membership(phi):
        return
    message = f"{label} is not in the class Phi"
    if require:
        raise ValueError(message)
    warnings.warn(message + "; conclusions are not covered by the fixed-point theorems", stacklevel=3)


def check_banach(space, f: SelfMap, alpha, sampler=None) -> HypothesisReport:
    """``d(f(x), f(y)) <= alpha * d(x, y)`` with ``alpha`` in ``[0, 1)``."""
    alpha = exact(alpha)
    if not 0 <= alpha < 1:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    d = _distance_fn(space)
    return _run(
        f"banach(alpha={alpha})",
        space,
        f,
        lambda x, y, fx, fy: d(fx, fy) - alpha * d(x, y),
        sampler,
    )


def check_nonlinear_contraction(space, f: SelfMap, phi: PiecewiseFn, require_phi=True, sampler=None):
    """``d(f(x), f(y)) <= phi(d(x, y))``."""
    _require_phi(phi, require_phi, "phi")
    d = _distance_fn(space)
    return _run(
        "nonlinear",
        space,
        f,
        lambda x, y, fx, fy: d(fx, fy) - evaluate(phi, d(x, y)),
        sampler,
    )


def check_extended_contraction(space, f: SelfMap, phis: Sequence[PiecewiseFn], require_phi=True, sampler=None):
    """``d(f(x), f(y)) <= max(phi1(d(x, y)), phi2(d(x, f(x))), phi3(d(y, f(y))))``."""
    phis = list(phis)
    if len(phis) != 3:
        raise ValueError("the extended condition takes three functions")
    for k, p in enumerate(phis, 1):
        _require_phi(p, require_phi, f"phi{k}")
    p1, p2, p3 = phis
    d = _distance_fn(space)

    def margin(x, y, fx, fy):
        rhs = max(evaluate(p1, d(x, y)), evaluate(p2, d(x, fx)), evaluate(p3, d(y, fy)))
        return d(fx, fy) - rhs

    return _run("extended", space, f, margin, sampler)


def check_iterated_contraction(space, f: SelfMap, phi: PiecewiseFn, n: int, require_phi=True, sampler=None):
    """``d(f^{n+1}(x), f^{n+1}(y)) <= phi(max_{0<=i<=n} d(f^i(x), f^i(y)))``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    _require_phi(phi, require_phi, "phi")
    d = _distance_fn(space)

    def margin(x, y, fx, fy):
        inner = d(x, y)
        for _ in range(n):
            inner = max(inner, d(fx, fy))
            fx, fy = f(fx), f(fy)
        return d(fx, fy) - evaluate(phi, inner)

    return _run(f"iterated(n={n})", space, f, margin, sampler)


def check_d_continuity(space: FiniteDistanceSpace, f: SelfMap) -> Verdict:
    """Left sequential d-continuity on a finite space.

    ``d(x_n, x) -> 0`` means ``d(x_n, x) = 0`` eventually, so the condition
    reduces to ``d(a, x) = 0 => d(f(a), f(x)) = 0``.
    """
    if space.kind != "finite":
        raise ValueError("d-continuity is only decidable on finite spaces")
    f.validate(space)
    d = space.dmatrix
    for a in range(space.n):
        for x in range(space.n):
            if d[a][x] == 0 and d[f(a)][f(x)] != 0:
                return Verdict(False, (space.points[a], space.points[x]), "zero distance not preserved")
    return Verdict(True)
