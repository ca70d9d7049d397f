"""Instance files: loading with full validation, and report helpers.

An instance is a JSON object::

    {
      "space": {"type": "finite", "points": [...], "d": [[...], ...]}
             | {"type": "analytic", "domain": {"kind": "real"}, "d": "abs(x-y)", "complete": true},
      "map": {"type": "finite", "image": [...]} | {"type": "analytic", "f": "x/2"},
      "functions": {"phi": {"breakpoints": [...], "pieces": [...], "tail": {...}}},
      "mode": {"name": "quasi", "functions": ["phi", "phi", "phi"], "alpha": "1/2", "n": 1},
      "options": {"x0": "1", "tol": 1e-9, "max_iter": 100000, "window": 8, "seed": 0}
    }

Only ``space`` is required; a bare space object is accepted as well.
Numbers may be JSON numbers, decimal strings or ``"p/q"`` strings.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .comparison import PiecewiseFn
from .expr import ParseError
from .maps import SelfMap
from .spaces import AnalyticDistanceSpace, Domain, FiniteDistanceSpace

__all__ = [
    "Instance",
    "InstanceError",
    "load_instance",
    "load_json",
    "parse_space",
    "parse_map",
    "parse_function",
    "canonical_hash",
    "MODE_ARITY",
]

MODE_ARITY = {"banach": 0, "nonlinear": 1, "iterated": 1, "extended": 3, "quasi": 3}


class InstanceError(ValueError):
    """Every problem found in an instance, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class Instance:
    space: object
    map: Optional[SelfMap] = None
    functions: dict = field(default_factory=dict)
    mode: Optional[dict] = None
    options: dict = field(default_factory=dict)
    sha256: str = ""

    def to_json(self) -> dict:
        out = {"space": self.space.to_json()}
        if self.map is not None:
            out["map"] = self.map.to_json()
        if self.functions:
            out["functions"] = {k: v.to_json() for k, v in self.functions.items()}
        if self.mode is not None:
            out["mode"] = self.mode
        if self.options:
            out["options"] = self.options
        return out


def canonical_hash(data) -> str:
    text = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_json(source: str):
    """Parse ``source`` as inline JSON when it looks like JSON, else read it as a path."""
    text = source.strip()
    if text.startswith("{") or text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InstanceError([f"inline JSON: {exc}"]) from None
    if not os.path.exists(source):
        raise InstanceError([f"{source}: no such file"])
    with open(source, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError([f"{source}: {exc}"]) from None


def _text(err: Exception) -> str:
    if isinstance(err, ParseError):
        return f"{err.message} at position {err.position} in {err.text!r}"
    return str(err)


def parse_space(data, where: str = "space"):
    if not isinstance(data, dict):
        raise ValueError(f"{where}: expected an object")
    kind = data.get("type")
    if kind == "finite":
        if "d" not in data:
            raise ValueError(f"{where}: finite space needs 'd'")
        d = data["d"]
        points = data.get("points", list(range(len(d))))
        return FiniteDistanceSpace(points, d)
    if kind == "analytic":
        if "d" not in data:
            raise ValueError(f"{where}: analytic space needs 'd'")
        dom = data.get("domain", {"kind": "real"})
        domain = Domain(dom.get("kind", "real"), dom.get("a"), dom.get("b"))
        return AnalyticDistanceSpace(data["d"], domain, bool(data.get("complete", False)))
    raise ValueError(f"{where}: unknown space type {kind!r}")


def parse_map(data, where: str = "map") -> SelfMap:
    if not isinstance(data, dict):
        raise ValueError(f"{where}: expected an object")
    kind = data.get("type")
    if kind == "finite":
        return SelfMap.finite(data["image"])
    if kind == "analytic":
        return SelfMap.analytic(data["f"])
    raise ValueError(f"{where}: unknown map type {kind!r}")


def parse_function(data) -> PiecewiseFn:
    return PiecewiseFn.from_json(data)


def load_instance(source) -> Instance:
    """Load and validate an instance from a path, inline JSON text or a dict.

    Raises :class:`InstanceError` listing every problem found.
    """
    data = source if isinstance(source, dict) else load_json(source)
    errors = []
    if not isinstance(data, dict):
        raise InstanceError(["instance: expected a JSON object"])
    if "type" in data and "space" not in data:
        data = {"space": data}
    known = {"space", "map", "functions", "mode", "options"}
    for key in sorted(set(data) - known):
        errors.append(f"instance: unknown key {key!r}")

    space = None
    if "space" not in data:
        errors.append("instance: missing 'space'")
    else:
        try:
            space = parse_space(data["space"])
        except (ValueError, TypeError, KeyError) as exc:
            errors.append(f"space: {_text(exc)}")

    fmap = None
    if "map" in data:
        try:
            fmap = parse_map(data["map"])
        except (ValueError, TypeError, KeyError) as exc:
            errors.append(f"map: {_text(exc)}")
        if fmap is not None and space is not None:
            try:
                fmap.validate(space)
            except (ValueError, ArithmeticError) as exc:
                errors.append(f"map: {_text(exc)}")
                fmap = None

    functions = {}
    raw_fns = data.get("functions", {})
    if not isinstance(raw_fns, dict):
        errors.append("functions: expected an object of named functions")
        raw_fns = {}
    for name, spec in raw_fns.items():
        try:
            functions[name] = parse_function(spec)
        except (ValueError, TypeError, KeyError) as exc:
            errors.append(f"functions.{name}: {_text(exc)}")

    mode = data.get("mode")
    if mode is not None:
        if not isinstance(mode, dict) or "name" not in mode:
            errors.append("mode: expected an object with a 'name'")
        else:
            name = mode["name"]
            if name not in MODE_ARITY:
                errors.append(f"mode: unknown mode {name!r}")
            refs = mode.get("functions", [])
            for ref in refs:
                if ref not in raw_fns:
                    errors.append(f"mode: undefined function {ref!r}")
            if name in MODE_ARITY and MODE_ARITY[name] and len(refs) not in (1, MODE_ARITY[name]):
                errors.append(f"mode: {name} takes {MODE_ARITY[name]} function(s), got {len(refs)}")
            if name == "banach" and "alpha" not in mode:
                errors.append("mode: banach needs 'alpha'")

    options = data.get("options", {})
    if not isinstance(options, dict):
        errors.append("options: expected an object")
        options = {}

    if errors:
        raise InstanceError(errors)
    return Instance(space, fmap, functions, mode, dict(options), canonical_hash(data))
