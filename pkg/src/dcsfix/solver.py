"""Picard iteration with convergence certificates and brute-force oracles.

:func:`solve_fixed_point` checks the hypothesis of the chosen mode, runs
the orbit and cross-checks the answer: against the exhaustive fixed-point
set on finite spaces, and against a second start point on analytic ones.
:func:`power_map_reduction` does the same for ``f**l`` and then lifts the
fixed point back to ``f``.
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

from ._numbers import exact, fmt, leq
from .comparison import (
    PiecewiseFn,
    Verdict,
    affine,
    envelope_bounds,
    max_combine,
    monotone_envelope,
)
from .maps import (
    HypothesisReport,
    SelfMap,
    check_banach,
    check_d_continuity,
    check_extended_contraction,
    check_iterated_contraction,
    check_nonlinear_contraction,
    compose_power,
)
from .spaces import SamplerConfig, check_w3, classify_axioms

__all__ = [
    "Banach",
    "Nonlinear",
    "Extended",
    "Iterated",
    "Quasi",
    "SolveOptions",
    "OrbitReport",
    "FixedPointResult",
    "OracleMismatch",
    "picard_orbit",
    "brute_force_fixed_points",
    "solve_fixed_point",
    "power_map_reduction",
    "gap_decay_violations",
    "gaps_csv",
    "mode_from_name",
]

GAP_SLACK = 1e-12


class OracleMismatch(AssertionError):
    """The solver disagrees with the brute-force fixed-point set."""


# -------------------------------------------------------------------------
# modes


@dataclass(frozen=True)
class Banach:
    alpha: Fraction

    name = "banach"

    def check(self, space, f, sampler=None) -> HypothesisReport:
        return check_banach(space, f, self.alpha, sampler=sampler)

    def governing(self) -> Optional[PiecewiseFn]:
        return affine(exact(self.alpha))

    def to_json(self) -> dict:
        return {"name": self.name, "alpha": fmt(exact(self.alpha))}


@dataclass(frozen=True)
class Nonlinear:
    phi: PiecewiseFn

    name = "nonlinear"

    def check(self, space, f, sampler=None) -> HypothesisReport:
        return check_nonlinear_contraction(space, f, self.phi, sampler=sampler)

    def governing(self):
        return self.phi

    def to_json(self) -> dict:
        return {"name": self.name, "phi": self.phi.to_json()}


@dataclass(frozen=True)
class Extended:
    phis: tuple

    name = "extended"
    needs_continuity = True

    def check(self, space, f, sampler=None) -> HypothesisReport:
        return check_extended_contraction(space, f, self.phis, sampler=sampler)

    def governing(self):
        # a_{n+1} <= max(phi1, phi2)(a_n): the phi3 term cannot dominate
        return max_combine(list(self.phis), require_phi=False)

    def to_json(self) -> dict:
        return {"name": self.name, "phis": [p.to_json() for p in self.phis]}


@dataclass(frozen=True)
class Quasi(Extended):
    """The extended condition on a quasi-metric space."""

    name = "quasi"


@dataclass(frozen=True)
class Iterated:
    phi: PiecewiseFn
    n: int = 1

    name = "iterated"
    needs_continuity = True

    def check(self, space, f, sampler=None) -> HypothesisReport:
        return check_iterated_contraction(space, f, self.phi, self.n, sampler=sampler)

    def governing(self):
        # single-step gap decay only follows from the condition when n = 0
        return self.phi if self.n == 0 else None

    def to_json(self) -> dict:
        return {"name": self.name, "phi": self.phi.to_json(), "n": self.n}


def mode_from_name(name: str, functions: Sequence[PiecewiseFn] = (), alpha=None, n: int = 1):
    """Build a mode from its CLI name and positional functions."""
    fns = list(functions)
    if name == "banach":
        if alpha is None:
            raise ValueError("banach mode needs alpha")
        return Banach(exact(alpha))
    want = {"nonlinear": 1, "iterated": 1, "extended": 3, "quasi": 3}
    if name not in want:
        raise ValueError(f"unknown mode {name!r}; choose banach, nonlinear, extended, iterated or quasi")
    if len(fns) == 1 and want[name] == 3:
        fns = fns * 3
    if len(fns) != want[name]:
        raise ValueError(f"{name} mode takes {want[name]} function(s), got {len(fns)}")
    if name == "nonlinear":
        return Nonlinear(fns[0])
    if name == "iterated":
        return Iterated(fns[0], n)
    if name == "extended":
        return Extended(tuple(fns))
    return Quasi(tuple(fns))


# -------------------------------------------------------------------------
# orbits


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-9
    max_iter: int = 100_000
    window: int = 8
    seed: int = 0
    alternate: Optional[object] = None
    force: bool = False
    sampler: Optional[SamplerConfig] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


@dataclass
class OrbitReport:
    orbit: list
    forward_gaps: list
    backward_gaps: list
    converged: bool
    limit: Optional[object]
    stop_reason: str
    forward_residual: Optional[object] = None
    backward_residual: Optional[object] = None

    @property
    def iterations(self) -> int:
        return len(self.orbit) - 1

    def to_json(self, full: bool = False) -> dict:
        out = {
            "converged": self.converged,
            "limit": fmt(self.limit),
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "forward_residual": fmt(self.forward_residual),
            "backward_residual": fmt(self.backward_residual),
        }
        if full:
            out["orbit"] = [fmt(x) for x in self.orbit]
            out["forward_gaps"] = [fmt(a) for a in self.forward_gaps]
            out["backward_gaps"] = [fmt(c) for c in self.backward_gaps]
        return out


def gaps_csv(orbit: OrbitReport) -> str:
    """Gap trace as CSV with columns ``n, a_n, c_n``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "a_n", "c_n"])
    for n, (a, c) in enumerate(zip(orbit.forward_gaps, orbit.backward_gaps), 1):
        w.writerow([n, fmt(a), fmt(c)])
    return buf.getvalue()


def _finite_orbit(space, f: SelfMap, x0, opts: SolveOptions) -> OrbitReport:
    d = space.dmatrix
    labels = space.points
    x = space.index(x0)
    idx = [x]
    seen = {x: 0}
    a, c = [], []
    reason = "max_iter"
    while len(idx) - 1 < opts.max_iter:
        y = f(x)
        if y == x:
            reason = "exact_fixed_point"
            break
        a.append(d[x][y])
        c.append(d[y][x])
        idx.append(y)
        if y in seen:
            reason = "cycle"
            break
        seen[y] = len(idx) - 1
        x = y
    orbit = [labels[i] for i in idx]
    if reason == "exact_fixed_point":
        return OrbitReport(orbit, a, c, True, labels[x], reason, d[x][x], d[x][x])
    return OrbitReport(orbit, a, c, False, None, reason)


def _window_ok(orbit, dist, w, tol) -> bool:
    pts = orbit[-(w + 1):]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if dist(pts[i], pts[j]) > tol:
                return False
    return True


def _analytic_orbit(space, f: SelfMap, x0, opts: SolveOptions) -> OrbitReport:
    orbit = [float(x0)]
    a, c = [], []
    try:
        return _analytic_steps(space.distance, f, orbit, a, c, opts)
    except ArithmeticError:
        # f or d undefined at an iterate (division by zero, overflow)
        return OrbitReport(orbit, a, c, False, None, "non_finite")


def _analytic_steps(dist, f: SelfMap, orbit, a, c, opts: SolveOptions) -> OrbitReport:
    x = orbit[-1]
    tol, w = opts.tol, opts.window
    while True:
        y = f(x)
        if not math.isfinite(y):
            return OrbitReport(orbit, a, c, False, None, "non_finite")
        if y == x:
            return OrbitReport(orbit, a, c, True, x, "exact_fixed_point", dist(x, y), dist(y, x))
        if len(orbit) - 1 >= opts.max_iter:
            return OrbitReport(orbit, a, c, False, None, "max_iter")
        a.append(dist(x, y))
        c.append(dist(y, x))
        orbit.append(y)
        x = y
        if len(a) >= w and max(a[-w:]) <= tol and _window_ok(orbit, dist, w, tol):
            fx = f(x)
            forward = dist(x, fx)
            if math.isfinite(fx) and forward <= tol:
                return OrbitReport(orbit, a, c, True, x, "tolerance", forward, dist(fx, x))


def picard_orbit(space, f: SelfMap, x0, opts: Optional[SolveOptions] = None) -> OrbitReport:
    """Iterate ``f`` from ``x0`` and record both gap sequences.

    Finite spaces stop on an exact fixed point (or a revisited point, which
    means a cycle).  Analytic spaces run in floating point and stop once the
    last ``window`` forward gaps and all pairwise distances ``d(x_n, x_m)``,
    ``n < m``, inside the window are at most ``tol`` and the forward
    residual ``d(x, f(x))`` is too.
    """
    opts = opts or SolveOptions()
    if space.kind == "finite":
        return _finite_orbit(space, f, x0, opts)
    if not space.domain.contains(exact(x0)):
        raise ValueError(f"start point {x0} outside the domain")
    return _analytic_orbit(space, f, x0, opts)


def brute_force_fixed_points(space, f: SelfMap) -> frozenset:
    """Labels of every ``x`` with ``f(x) = x``."""
    if space.kind != "finite":
        raise ValueError("the fixed-point oracle needs a finite space")
    f.validate(space)
    return frozenset(space.points[i] for i in range(space.n) if f(i) == i)


def gap_decay_violations(orbit: OrbitReport, envelope: PiecewiseFn, slack: float = GAP_SLACK) -> list:
    """Indices ``n`` (1-based) where ``a_n > envelope^(n-1)(a_1) + slack``."""
    a = orbit.forward_gaps
    if not a:
        return []
    bounds = envelope_bounds(envelope, a[0], len(a))
    return [n for n, (gap, b) in enumerate(zip(a, bounds), 1) if not leq(gap, b) and float(gap) > float(b) + slack]


# -------------------------------------------------------------------------
# solving


@dataclass
class FixedPointResult:
    mode: str
    status: str
    hypothesis: Optional[HypothesisReport]
    orbit: Optional[OrbitReport] = None
    uniqueness: str = "unverified"
    fixed_point: Optional[object] = None
    preconditions: dict = field(default_factory=dict)
    oracle: Optional[frozenset] = None
    second_orbit: Optional[OrbitReport] = None
    gap_violations: Optional[list] = None
    notes: list = field(default_factory=list)
    power: Optional[dict] = None

    @property
    def solved(self) -> bool:
        return self.status == "solved"

    def to_json(self, full: bool = False) -> dict:
        out = {
            "mode": self.mode,
            "status": self.status,
            "fixed_point": fmt(self.fixed_point),
            "iterations": self.orbit.iterations if self.orbit else 0,
            "stop_reason": self.orbit.stop_reason if self.orbit else None,
            "hypothesis": self.hypothesis.to_json() if self.hypothesis is not None else None,
            "uniqueness": self.uniqueness,
            "preconditions": {k: v.to_json() for k, v in self.preconditions.items()},
        }
        if self.orbit is not None:
            out["orbit"] = self.orbit.to_json(full)
        if self.oracle is not None:
            out["oracle"] = sorted(self.oracle)
        if self.second_orbit is not None:
            out["second_orbit"] = self.second_orbit.to_json(full)
        if self.gap_violations is not None:
            out["gap_decay"] = {"violations": self.gap_violations}
        if self.notes:
            out["notes"] = list(self.notes)
        if self.power is not None:
            out["power"] = self.power
        return out


def _preconditions(space, f: SelfMap, mode, sampler) -> tuple:
    checks, notes = {}, []
    finite = space.kind == "finite"
    if isinstance(mode, Quasi):
        ax = classify_axioms(space, sampler)
        ok = ax.a1.holds and ax.a3.holds
        checks["quasi_metric"] = Verdict(ok, None if ok else (ax.a1.witness or ax.a3.witness), ax.taxonomy)
    elif finite:
        checks["w3"] = check_w3(space)
    if getattr(mode, "needs_continuity", False):
        if finite:
            checks["d_continuity"] = check_d_continuity(space, f)
        else:
            notes.append("left sequential d-continuity assumed (not checkable on analytic spaces)")
    if not finite and not space.complete:
        notes.append("completeness not asserted for this space")
    return checks, notes


def _alternate_start(space, opts: SolveOptions, x0):
    if opts.alternate is not None:
        return opts.alternate
    rng = random.Random(opts.seed)
    if space.domain.kind == "interval":
        lo, hi = float(space.domain.a), float(space.domain.b)
    else:
        lo, hi = -100.0, 100.0
    for _ in range(16):
        y = lo + (hi - lo) * rng.random()
        if y != float(x0):
            return y
    return hi


def _same_point(space, p, q, tol) -> bool:
    return space.distance(p, q) <= tol and space.distance(q, p) <= tol


def solve_fixed_point(space, f: SelfMap, mode, x0, opts: Optional[SolveOptions] = None) -> FixedPointResult:
    """Certify the mode's hypothesis, iterate, and cross-check the limit.

    Raises :class:`OracleMismatch` when a converged finite orbit lands on a
    point the oracle does not list, or when a verified hypothesis leaves
    more than one fixed point; both mean a bug, not a bad input.
    """
    opts = opts or SolveOptions()
    f.validate(space)
    hyp = mode.check(space, f, opts.sampler)
    checks, notes = _preconditions(space, f, mode, opts.sampler)
    certified = hyp.holds and all(v.holds for v in checks.values())
    result = FixedPointResult(mode.name, "hypothesis_failed", hyp, preconditions=checks, notes=notes)
    if not certified and not opts.force:
        return result

    orbit = picard_orbit(space, f, x0, opts)
    result.orbit = orbit
    if orbit.converged:
        result.fixed_point = orbit.limit
    env = mode.governing()
    if certified and env is not None:
        result.gap_violations = gap_decay_violations(orbit, monotone_envelope(env))

    if space.kind == "finite":
        oracle = brute_force_fixed_points(space, f)
        result.oracle = oracle
        if orbit.converged and orbit.limit not in oracle:
            raise OracleMismatch(f"orbit limit {orbit.limit} is not among the fixed points {sorted(oracle)}")
        if certified and len(oracle) != 1:
            raise OracleMismatch(f"hypothesis verified but the fixed-point set is {sorted(oracle)}")
        if orbit.converged and oracle == {orbit.limit}:
            result.uniqueness = "verified-by-oracle"
    elif orbit.converged:
        alt = _alternate_start(space, opts, x0)
        second = picard_orbit(space, f, alt, opts)
        result.second_orbit = second
        if second.converged and _same_point(space, orbit.limit, second.limit, 10 * opts.tol):
            result.uniqueness = "verified-by-contraction-argument"

    if not certified:
        result.status = "uncertified"
    elif orbit.converged:
        result.status = "solved"
    else:
        result.status = "diverged"
    return result


def power_map_reduction(space, f: SelfMap, l: int, mode, x0, opts: Optional[SolveOptions] = None) -> FixedPointResult:
    """Solve for ``f**l`` and lift the fixed point back to ``f``.

    The lift needs ``f(u) = u`` (finite) or both residuals ``d(u, f(u))``
    and ``d(f(u), u)`` at most ``tol`` (analytic), and the full ``f``-orbit
    from ``x0`` has to converge to ``u``.  On finite spaces ``f**l`` must
    have exactly one fixed point, otherwise the premise of the reduction
    fails and the status is ``lift_failure``.
    """
    opts = opts or SolveOptions()
    g = compose_power(f, l)
    info = {"l": l}
    if space.kind == "finite":
        fixed = brute_force_fixed_points(space, g)
        info["power_fixed_points"] = sorted(fixed)
        if len(fixed) != 1:
            info["lift"] = f"f^{l} has {len(fixed)} fixed points, expected exactly one"
            return FixedPointResult(mode.name, "lift_failure", None, power=info)

    res = solve_fixed_point(space, g, mode, x0, opts)
    res.power = info
    if not res.solved:
        return res
    u = res.fixed_point
    if space.kind == "finite":
        i = space.index(u)
        fixed_by_f = f(i) == i
        info["residual"] = [fmt(space.dmatrix[i][f(i)]), fmt(space.dmatrix[f(i)][i])]
    else:
        fu = f(u)
        forward, backward = space.distance(u, fu), space.distance(fu, u)
        info["residual"] = [fmt(forward), fmt(backward)]
        fixed_by_f = forward <= opts.tol and backward <= opts.tol
    if not fixed_by_f:
        info["lift"] = "the fixed point of the power is not fixed by f"
        res.status = "lift_failure"
        return res

    full = picard_orbit(space, f, x0, replace(opts, max_iter=max(opts.max_iter, 1) * l))
    info["f_orbit"] = full.to_json()
    if space.kind == "finite":
        reached = full.converged and full.limit == u
        sub = full.orbit[::l]
        power_orbit = res.orbit.orbit
        m = min(len(sub), len(power_orbit))
        info["subsampled_orbit_matches"] = sub[:m] == power_orbit[:m]
    else:
        reached = full.converged and _same_point(space, full.limit, u, 10 * opts.tol)
    if not reached:
        info["lift"] = "the f-orbit does not converge to the fixed point of the power"
        res.status = "lift_failure"
        return res
    info["lift"] = "ok"
    return res
