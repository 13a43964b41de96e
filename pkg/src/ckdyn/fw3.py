"""Quadratic automorphisms of C^3 in Fornaess-Wu normal form.

Each of the five classes (two listed forms for classes 1 and 4) is a
template with named constants.  :func:`check_eligibility` evaluates the
printed parameter conditions under which the basin at infinity has the
``Z[1/2]`` fundamental group; the recurrence kind (orbit described by an
order-2 or an order-3 recurrence) is derived from the template's variable
dependencies rather than looked up.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ._numeric import complex_pair, parse_complex

HENON_REDUCIBLE = "HenonReducible"
ORDER3 = "Order3"

# free constants default to 0; p1, p2 are coefficient lists (constant term first)
# and P holds (p0, py, pz) for P(y, z) = p0 + py y + pz z
_TEMPLATE_PARAMS = {
    (1, 1): ("alpha", "b", "a", "gamma", "epsilon", "nu"),
    (1, 2): ("alpha", "a", "epsilon", "p1", "p2"),
    (2, 1): ("a", "P", "alpha", "beta", "b", "c"),
    (3, 1): ("alpha", "mu", "nu", "a", "delta", "epsilon", "rho"),
    (4, 1): ("alpha", "gamma", "gamma_prime", "a", "delta", "rho"),
    (4, 2): ("gamma", "a", "epsilon", "alpha", "nu", "delta"),
    (5, 1): ("alpha", "nu", "delta", "a", "beta", "gamma", "rho", "b"),
}
_POLY_LENGTHS = {"p1": 2, "p2": 3, "P": 3}

# (name, predicate on params) in printed order
_CONSTRAINTS = {
    (1, 1): (("a!=0", lambda p: p["a"] != 0), ("|a|<2", lambda p: abs(p["a"]) < 2),
             ("nu!=0", lambda p: p["nu"] != 0), ("alpha!=0", lambda p: p["alpha"] != 0)),
    (1, 2): (("a!=0", lambda p: p["a"] != 0), ("|a|<2", lambda p: abs(p["a"]) < 2),
             ("alpha!=0", lambda p: p["alpha"] != 0)),
    (2, 1): (("a!=0", lambda p: p["a"] != 0), ("alpha!=0", lambda p: p["alpha"] != 0),
             ("b!=0", lambda p: p["b"] != 0), ("|b|<2", lambda p: abs(p["b"]) < 2)),
    (3, 1): (("a!=0", lambda p: p["a"] != 0), ("|a|<2", lambda p: abs(p["a"]) < 2),
             ("alpha!=0", lambda p: p["alpha"] != 0)),
    (4, 1): (("a!=0", lambda p: p["a"] != 0), ("|a|<2", lambda p: abs(p["a"]) < 2),
             ("alpha!=0", lambda p: p["alpha"] != 0)),
    (4, 2): (("a!=0", lambda p: p["a"] != 0), ("|a|<2", lambda p: abs(p["a"]) < 2),
             ("alpha!=0", lambda p: p["alpha"] != 0)),
    (5, 1): (("a!=0", lambda p: p["a"] != 0), ("b!=0", lambda p: p["b"] != 0),
             ("|a|<2", lambda p: abs(p["a"]) < 2), ("alpha!=0", lambda p: p["alpha"] != 0)),
}

POLYNOMIAL_DEGREE_NOTE = ("class 1, second form: p1 has degree <= 1 and p2 degree <= 2 "
                          "(the second printed bound is read as a bound on p2)")


class UnknownTemplate(ValueError):
    pass


def constraint_names(class_id: int, variant: int = 1) -> tuple[str, ...]:
    return tuple(name for name, _ in _constraints(class_id, variant))


def _constraints(class_id, variant):
    try:
        return _CONSTRAINTS[(class_id, variant)]
    except KeyError:
        raise UnknownTemplate(f"no template for class {class_id}, variant {variant}") from None


@dataclass(frozen=True)
class FWClassSpec:
    class_id: int
    variant: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        key = (int(self.class_id), int(self.variant))
        if key not in _TEMPLATE_PARAMS:
            raise UnknownTemplate(f"no template for class {self.class_id}, variant {self.variant}")
        object.__setattr__(self, "class_id", key[0])
        object.__setattr__(self, "variant", key[1])
        names = _TEMPLATE_PARAMS[key]
        unknown = set(self.params) - set(names)
        if unknown:
            raise ValueError(f"parameters {sorted(unknown)} are not in the class {key[0]} "
                             f"variant {key[1]} template {names}")
        full = {}
        for name in names:
            if name in _POLY_LENGTHS:
                coeffs = [parse_complex(c) for c in self.params.get(name, [])]
                if len(coeffs) > _POLY_LENGTHS[name]:
                    raise ValueError(f"{name} takes at most {_POLY_LENGTHS[name]} coefficients")
                coeffs += [0j] * (_POLY_LENGTHS[name] - len(coeffs))
                full[name] = tuple(coeffs)
            else:
                full[name] = parse_complex(self.params.get(name, 0))
        object.__setattr__(self, "params", full)

    def __getitem__(self, name):
        return self.params[name]

    def to_dict(self) -> dict:
        def enc(v):
            return [complex_pair(c) for c in v] if isinstance(v, tuple) else complex_pair(v)
        return {"class": self.class_id, "variant": self.variant,
                "params": {k: enc(v) for k, v in self.params.items()}}

    @classmethod
    def from_dict(cls, data) -> FWClassSpec:
        return cls(int(data["class"]), int(data.get("variant", 1)), dict(data.get("params", {})))

    @classmethod
    def load(cls, path) -> FWClassSpec:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class EligibilityReport:
    eligible: bool
    failed_constraints: tuple
    recurrence: str
    recurrence_order: int
    note: str = ""

    def to_dict(self) -> dict:
        return {"eligible": self.eligible, "failed_constraints": list(self.failed_constraints),
                "recurrence": self.recurrence, "recurrence_order": self.recurrence_order,
                "note": self.note}


# -- the maps --------------------------------------------------------------------

def _forward(fw: FWClassSpec, p):
    x, y, z = p
    q = fw.params
    c, v = fw.class_id, fw.variant
    if (c, v) == (1, 1):
        return (q["alpha"] * x**2 + q["b"] * x + q["a"] * y + q["gamma"], x + q["epsilon"],
                q["nu"] * z)
    if (c, v) == (1, 2):
        p1, p2 = q["p1"], q["p2"]
        return (q["alpha"] * x**2 + q["a"] * y + (p1[0] + p1[1] * z) * x
                + p2[0] + p2[1] * z + p2[2] * z**2, q["epsilon"] + x, z)
    if c == 2:
        P = q["P"]
        return (q["a"] * x + P[0] + P[1] * y + P[2] * z,
                q["alpha"] * y**2 + q["beta"] * y + q["b"] * z + q["c"], y)
    if c == 3:
        return (q["alpha"] * x**2 + q["mu"] * x + q["nu"] * z + q["a"] * y + q["delta"],
                q["epsilon"] * x + z + q["rho"], x)
    if (c, v) == (4, 1):
        return (q["alpha"] * x**2 + q["gamma"] * x + q["gamma_prime"] * y + q["a"] * z
                + q["delta"], x + q["rho"], y)
    if (c, v) == (4, 2):
        return (q["gamma"] * y + q["a"] * z + q["epsilon"],
                q["alpha"] * y**2 + q["nu"] * y + x + q["delta"], y)
    return (q["alpha"] * x**2 + q["nu"] * x + q["delta"] + q["a"] * z,
            q["beta"] * x**2 + q["gamma"] * x + q["rho"] + q["b"] * y, x)


def _require(value, name):
    if value == 0:
        raise ZeroDivisionError(f"inverse needs {name} != 0")
    return value


def _inverse(fw: FWClassSpec, w):
    X, Y, Z = w
    q = fw.params
    c, v = fw.class_id, fw.variant
    if (c, v) == (1, 1):
        x = Y - q["epsilon"]
        z = Z / _require(q["nu"], "nu")
        y = (X - q["alpha"] * x**2 - q["b"] * x - q["gamma"]) / _require(q["a"], "a")
        return (x, y, z)
    if (c, v) == (1, 2):
        p1, p2 = q["p1"], q["p2"]
        x, z = Y - q["epsilon"], Z
        y = (X - q["alpha"] * x**2 - (p1[0] + p1[1] * z) * x
             - (p2[0] + p2[1] * z + p2[2] * z**2)) / _require(q["a"], "a")
        return (x, y, z)
    if c == 2:
        P = q["P"]
        y = Z
        z = (Y - q["alpha"] * y**2 - q["beta"] * y - q["c"]) / _require(q["b"], "b")
        x = (X - P[0] - P[1] * y - P[2] * z) / _require(q["a"], "a")
        return (x, y, z)
    if c == 3:
        x = Z
        z = Y - q["epsilon"] * x - q["rho"]
        y = (X - q["alpha"] * x**2 - q["mu"] * x - q["nu"] * z - q["delta"]) / _require(q["a"], "a")
        return (x, y, z)
    if (c, v) == (4, 1):
        x, y = Y - q["rho"], Z
        z = (X - q["alpha"] * x**2 - q["gamma"] * x - q["gamma_prime"] * y
             - q["delta"]) / _require(q["a"], "a")
        return (x, y, z)
    if (c, v) == (4, 2):
        y = Z
        x = Y - q["alpha"] * y**2 - q["nu"] * y - q["delta"]
        z = (X - q["gamma"] * y - q["epsilon"]) / _require(q["a"], "a")
        return (x, y, z)
    x = Z
    z = (X - q["alpha"] * x**2 - q["nu"] * x - q["delta"]) / _require(q["a"], "a")
    y = (Y - q["beta"] * x**2 - q["gamma"] * x - q["rho"]) / _require(q["b"], "b")
    return (x, y, z)


@dataclass(frozen=True)
class FWMap:
    """Forward map and its inverse for one normal-form automorphism."""

    fw: FWClassSpec
    forward: Callable = field(repr=False)
    inverse: Callable = field(repr=False)

    def __call__(self, p):
        return self.forward(p)


def to_map(fw: FWClassSpec) -> FWMap:
    return FWMap(fw, lambda p: _forward(fw, tuple(p)), lambda w: _inverse(fw, tuple(w)))


# -- structure ---------------------------------------------------------------------

def _generic(fw: FWClassSpec, rng: random.Random) -> FWClassSpec:
    """Same template with every constant replaced by a generic nonzero value."""
    def draw():
        return complex(rng.uniform(0.3, 0.9), rng.uniform(0.3, 0.9))
    params = {name: ([draw() for _ in range(_POLY_LENGTHS[name])] if name in _POLY_LENGTHS
                     else draw())
              for name in _TEMPLATE_PARAMS[(fw.class_id, fw.variant)]}
    return FWClassSpec(fw.class_id, fw.variant, params)


def _dependencies(fw: FWClassSpec, n_points: int = 3):
    """``deps[i]`` = inputs output ``i`` depends on; ``quadratic[i]`` = output ``i`` is nonlinear.

    Read off first and second differences of the template with generic
    constants, so the result is the template's structure and does not change
    when a particular constant happens to vanish.
    """
    rng = random.Random(12345)
    fw = _generic(fw, rng)
    deps = [set() for _ in range(3)]
    quadratic = [False] * 3
    for _ in range(n_points):
        p = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(3)]
        base = _forward(fw, p)
        for j in range(3):
            e = [0j] * 3
            e[j] = 1.0
            p1 = [a + b for a, b in zip(p, e)]
            p2 = [a + 2 * b for a, b in zip(p, e)]
            f1, f2 = _forward(fw, p1), _forward(fw, p2)
            for i in range(3):
                scale = 1 + abs(base[i]) + abs(f1[i]) + abs(f2[i])
                if abs(f1[i] - base[i]) > 1e-12 * scale:
                    deps[i].add(j)
                if abs(f2[i] - 2 * f1[i] + base[i]) > 1e-12 * scale:
                    quadratic[i] = True
    return deps, quadratic


def recurrence_order(fw: FWClassSpec) -> int:
    """Order of the shortest closed recurrence satisfied by one coordinate sequence.

    Coordinates updated from themselves alone (``z -> nu z``, ``z -> z``)
    evolve explicitly and act as parameters.  The order is the size of the
    smallest dependency-closed set of the remaining coordinates that
    contains a coordinate with a quadratic update.
    """
    deps, quadratic = _dependencies(fw)
    parameters = {i for i in range(3) if deps[i] <= {i} and not quadratic[i]}
    best = None
    for start in range(3):
        if not quadratic[start] or start in parameters:
            continue
        closed, todo = set(), [start]
        while todo:
            i = todo.pop()
            if i in closed:
                continue
            closed.add(i)
            todo.extend(j for j in deps[i] if j not in parameters)
        best = len(closed) if best is None else min(best, len(closed))
    return best


def check_eligibility(fw: FWClassSpec) -> EligibilityReport:
    failed = tuple(name for name, ok in _constraints(fw.class_id, fw.variant) if not ok(fw.params))
    order = recurrence_order(fw)
    kind = HENON_REDUCIBLE if order <= 2 else ORDER3
    note = POLYNOMIAL_DEGREE_NOTE if (fw.class_id, fw.variant) == (1, 2) else ""
    return EligibilityReport(not failed, failed, kind, order, note)


# -- basin witness -------------------------------------------------------------------

@dataclass(frozen=True)
class EscapeFraction:
    fraction: float
    escaped: int
    n_samples: int
    radius: float
    max_iter: int


def _shell_sample(rng: random.Random, radius: float):
    v = [complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(3)]
    norm = math.sqrt(sum(abs(c) ** 2 for c in v))
    return tuple(radius * c / norm for c in v)


def _escapes(f, p, max_iter: int, threshold: float = 1e150) -> bool:
    """The dominant coordinate passes ``threshold`` with its logarithm growing by a factor >= 1.5."""
    prev = math.log(max(abs(c) for c in p))
    for _ in range(max_iter):
        try:
            p = f(p)
            size = max(abs(c) for c in p)
        except OverflowError:
            return True
        if not math.isfinite(size):
            return True
        cur = math.log(size) if size > 0 else -math.inf
        if size > threshold:
            return prev > 0 and cur >= 1.5 * prev
        prev = cur
    return False


def attracting_fixed_point_check(fw: FWClassSpec, samples: int = 200, max_iter: int = 50,
                                 radius: float = 1e3, seed: int = 0) -> EscapeFraction:
    """Fraction of random points on the sphere of the given radius whose orbit escapes super-exponentially."""
    rng = random.Random(seed)
    f = to_map(fw).forward
    escaped = sum(_escapes(f, _shell_sample(rng, radius), max_iter) for _ in range(samples))
    return EscapeFraction(escaped / samples if samples else 0.0, escaped, samples, radius, max_iter)
