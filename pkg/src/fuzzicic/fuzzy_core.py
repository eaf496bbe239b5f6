"""Mamdani-style fuzzy inference: membership evaluation, rule firing,
clip/max aggregation and centre-of-gravity defuzzification.

Everything here is radio-agnostic and vectorised: crisp inputs may be scalars
or numpy arrays of any (common) shape, and every stage broadcasts over them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_GRID_POINTS = 201

SHAPES = {"trapezoid": 4, "triangle": 3, "left": 2, "right": 2}


class ConfigurationError(ValueError):
    """Raised for malformed membership functions, variables or rules."""


@dataclass(frozen=True)
class MembershipFunction:
    """Piecewise-linear membership function.

    ``shape`` is one of ``trapezoid`` (a, b, c, d), ``triangle`` (a, b, c),
    ``left`` (open-left shoulder, c, d) or ``right`` (open-right shoulder,
    a, b).
    """

    shape: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigurationError(f"unknown membership shape {self.shape!r}")
        params = tuple(float(p) for p in self.params)
        if len(params) != SHAPES[self.shape]:
            raise ConfigurationError(
                f"{self.shape} needs {SHAPES[self.shape]} breakpoints, got {len(params)}")
        if any(not np.isfinite(p) for p in params):
            raise ConfigurationError("breakpoints must be finite")
        if any(q < p for p, q in zip(params, params[1:])):
            raise ConfigurationError(f"breakpoints must be nondecreasing: {params}")
        object.__setattr__(self, "params", params)

    @property
    def breakpoints(self) -> tuple[float, float, float, float]:
        """Canonical (a, b, c, d); open shoulders use infinities."""
        p = self.params
        if self.shape == "trapezoid":
            return p
        if self.shape == "triangle":
            return (p[0], p[1], p[1], p[2])
        if self.shape == "left":
            return (-np.inf, -np.inf, p[0], p[1])
        return (p[0], p[1], np.inf, np.inf)

    def __call__(self, x):
        return evaluate_membership(self, x)

    def to_dict(self) -> dict:
        return {"shape": self.shape, "params": list(self.params)}


def _ramp(x, lo, hi):
    # 0 at/below lo, 1 at/above hi, linear between; a vertical edge when lo == hi
    if hi <= lo:
        return (x >= hi).astype(float)
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def evaluate_membership(mf: MembershipFunction, x):
    """Membership degree of ``x`` (scalar or array) in ``mf``."""
    x = np.asarray(x, dtype=float)
    a, b, c, d = mf.breakpoints
    up = np.ones_like(x) if np.isinf(a) else _ramp(x, a, b)
    down = np.ones_like(x) if np.isinf(d) else 1.0 - _ramp(x, c, d)
    if not np.isinf(d) and c == d:
        down = (x <= c).astype(float)
    mu = np.minimum(up, down)
    return mu if mu.ndim else float(mu)


@dataclass(frozen=True)
class LinguisticVariable:
    name: str
    universe: tuple[float, float]
    terms: tuple[tuple[str, MembershipFunction], ...]
    unit: str = ""

    def __post_init__(self):
        lo, hi = (float(u) for u in self.universe)
        if not hi > lo:
            raise ConfigurationError(f"{self.name}: empty universe {self.universe}")
        object.__setattr__(self, "universe", (lo, hi))
        labels = [t for t, _ in self.terms]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"{self.name}: duplicate term labels {labels}")
        if not labels:
            raise ConfigurationError(f"{self.name}: no terms")
        probe = np.linspace(lo, hi, 2001)
        cover = np.max([mf(probe) for _, mf in self.terms], axis=0)
        if np.any(cover <= 0.0):
            gap = probe[np.argmax(cover <= 0.0)]
            raise ConfigurationError(f"{self.name}: no term covers {gap:g} {self.unit}")

    @property
    def labels(self) -> list[str]:
        return [t for t, _ in self.terms]

    def term(self, label: str) -> MembershipFunction:
        for t, mf in self.terms:
            if t == label:
                return mf
        raise ConfigurationError(f"variable {self.name!r} has no term {label!r}")

    def clip(self, x):
        return np.clip(np.asarray(x, dtype=float), *self.universe)

    def degree(self, label: str, x):
        """Membership of the universe-clamped value ``x`` in term ``label``."""
        return evaluate_membership(self.term(label), self.clip(x))

    def grid(self, n: int = DEFAULT_GRID_POINTS) -> np.ndarray:
        return np.linspace(self.universe[0], self.universe[1], n)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "unit": self.unit,
            "universe": list(self.universe),
            "terms": [{"label": t, **mf.to_dict()} for t, mf in self.terms],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "LinguisticVariable":
        terms = tuple((t["label"], MembershipFunction(t["shape"], tuple(t["params"])))
                      for t in d["terms"])
        return cls(d["name"], tuple(d["universe"]), terms, d.get("unit", ""))


@dataclass(frozen=True)
class Antecedent:
    variable: str
    term: str
    negated: bool = False


@dataclass(frozen=True)
class Rule:
    combiner: str
    antecedents: tuple[Antecedent, ...]
    consequents: tuple[tuple[str, str], ...]
    label: str = ""

    def __post_init__(self):
        if self.combiner not in ("AND", "OR"):
            raise ConfigurationError(f"combiner must be AND or OR, got {self.combiner!r}")
        if not self.antecedents or not self.consequents:
            raise ConfigurationError(f"rule {self.label!r} needs antecedents and consequents")


@dataclass(frozen=True)
class FuzzyOutputSet:
    """Aggregated membership curve(s) of one output variable.

    ``values`` has shape ``batch + (len(grid),)``.
    """

    variable: str
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.grid.ndim != 1 or len(self.grid) < 2 or np.any(np.diff(self.grid) <= 0):
            raise ConfigurationError("output grid must be strictly increasing")
        if self.values.shape[-1] != len(self.grid):
            raise ConfigurationError("values do not match the grid")


def _lookup(variables: Mapping[str, LinguisticVariable], name: str) -> LinguisticVariable:
    try:
        return variables[name]
    except KeyError:
        raise ConfigurationError(f"unknown variable {name!r}") from None


def antecedent_degree(ant: Antecedent, inputs: Mapping, variables: Mapping):
    var = _lookup(variables, ant.variable)
    if ant.variable not in inputs:
        raise ConfigurationError(f"no crisp input for {ant.variable!r}")
    mu = var.degree(ant.term, inputs[ant.variable])
    return 1.0 - mu if ant.negated else mu


def fire_rule(rule: Rule, inputs: Mapping, variables: Mapping[str, LinguisticVariable]):
    """Activation of ``rule`` for crisp ``inputs`` (min for AND, max for OR)."""
    degrees = [antecedent_degree(a, inputs, variables) for a in rule.antecedents]
    combine = np.minimum if rule.combiner == "AND" else np.maximum
    out = degrees[0]
    for deg in degrees[1:]:
        out = combine(out, deg)
    return out


def aggregate(fired: Iterable[tuple[Rule, object]], output: LinguisticVariable,
              grid_points: int = DEFAULT_GRID_POINTS) -> FuzzyOutputSet:
    """Clip each consequent term at its rule activation and take the pointwise max."""
    grid = output.grid(grid_points)
    curves = {label: mf(grid) for label, mf in output.terms}
    # clip(curve, a1) max clip(curve, a2) == clip(curve, max(a1, a2)): merge per term first
    per_term: dict[str, np.ndarray] = {}
    for rule, act in fired:
        for var, label in rule.consequents:
            if var != output.name:
                continue
            if label not in curves:
                raise ConfigurationError(f"output {output.name!r} has no term {label!r}")
            act = np.asarray(act, dtype=float)
            per_term[label] = act if label not in per_term else np.maximum(per_term[label], act)
    if not per_term:
        return FuzzyOutputSet(output.name, grid, np.zeros_like(grid))
    values = None
    for label, act in per_term.items():
        clipped = np.minimum(curves[label], act[..., None])
        values = clipped if values is None else np.maximum(values, clipped)
    return FuzzyOutputSet(output.name, grid, values)


def defuzzify(fset: FuzzyOutputSet):
    """Centre of gravity by trapezoidal quadrature; an empty set maps to the midpoint."""
    x, mu = fset.grid, fset.values
    w = np.diff(x)
    area = 0.5 * ((mu[..., 1:] + mu[..., :-1]) * w).sum(axis=-1)
    xm = x * mu
    moment = 0.5 * ((xm[..., 1:] + xm[..., :-1]) * w).sum(axis=-1)
    mid = 0.5 * (x[0] + x[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        cog = np.where(area > 0.0, moment / np.where(area > 0.0, area, 1.0), mid)
    return cog if np.ndim(cog) else float(cog)


@dataclass(frozen=True)
class RuleBase:
    """Input/output vocabulary plus rules, validated at construction."""

    inputs: Mapping[str, LinguisticVariable]
    outputs: Mapping[str, LinguisticVariable]
    rules: tuple[Rule, ...]
    grid_points: int = DEFAULT_GRID_POINTS
    _curves: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.grid_points < 2:
            raise ConfigurationError("grid needs at least two points")
        for rule in self.rules:
            for a in rule.antecedents:
                _lookup(self.inputs, a.variable).term(a.term)
            for var, label in rule.consequents:
                _lookup(self.outputs, var).term(label)
        for name, var in self.outputs.items():
            grid = var.grid(self.grid_points)
            self._curves[name] = (grid, {t: mf(grid) for t, mf in var.terms})

    def infer(self, inputs: Mapping) -> dict[str, np.ndarray]:
        """Crisp score per output variable, broadcast over the input arrays."""
        cache: dict[tuple[str, str], np.ndarray] = {}

        def deg(a: Antecedent):
            key = (a.variable, a.term)
            if key not in cache:
                if a.variable not in inputs:
                    raise ConfigurationError(f"no crisp input for {a.variable!r}")
                cache[key] = np.asarray(self.inputs[a.variable].degree(a.term, inputs[a.variable]))
            mu = cache[key]
            return 1.0 - mu if a.negated else mu

        per_output: dict[str, dict[str, np.ndarray]] = {name: {} for name in self.outputs}
        for rule in self.rules:
            degrees = [deg(a) for a in rule.antecedents]
            act = degrees[0]
            combine = np.minimum if rule.combiner == "AND" else np.maximum
            for d in degrees[1:]:
                act = combine(act, d)
            for var, label in rule.consequents:
                terms = per_output[var]
                terms[label] = act if label not in terms else np.maximum(terms[label], act)

        shape = np.broadcast(*[np.asarray(v) for v in inputs.values()]).shape
        scores = {}
        for name, terms in per_output.items():
            grid, curves = self._curves[name]
            if not terms:
                scores[name] = np.full(shape, 0.5 * (grid[0] + grid[-1]))
                continue
            values = None
            for label, act in terms.items():
                act = np.broadcast_to(np.asarray(act, dtype=float), shape)
                clipped = np.minimum(curves[label], act[..., None])
                values = clipped if values is None else np.maximum(values, clipped)
            scores[name] = defuzzify(FuzzyOutputSet(name, grid, values))
        return scores

    def to_dict(self) -> dict:
        return {
            "grid_points": self.grid_points,
            "inputs": [v.to_dict() for v in self.inputs.values()],
            "outputs": [v.to_dict() for v in self.outputs.values()],
            "rules": [
                {
                    "label": r.label,
                    "combiner": r.combiner,
                    "if": [{"var": a.variable, "term": a.term, "not": a.negated}
                           for a in r.antecedents],
                    "then": [{"var": v, "term": t} for v, t in r.consequents],
                }
                for r in self.rules
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RuleBase":
        try:
            inputs = {v["name"]: LinguisticVariable.from_dict(v) for v in d["inputs"]}
            outputs = {v["name"]: LinguisticVariable.from_dict(v) for v in d["outputs"]}
            rules = tuple(
                Rule(
                    r["combiner"],
                    tuple(Antecedent(a["var"], a["term"], bool(a.get("not", False)))
                          for a in r["if"]),
                    tuple((c["var"], c["term"]) for c in r["then"]),
                    str(r.get("label", "")),
                )
                for r in d["rules"]
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed rulebase document: {exc}") from exc
        return cls(inputs, outputs, rules, int(d.get("grid_points", DEFAULT_GRID_POINTS)))


def load_rulebase(path: str | Path) -> RuleBase:
    with open(path) as fh:
        return RuleBase.from_dict(json.load(fh))


def save_rulebase(rb: RuleBase, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(rb.to_dict(), fh, indent=2)
        fh.write("\n")


def rules_by_label(rules: Sequence[Rule]) -> dict[str, Rule]:
    return {r.label: r for r in rules}
