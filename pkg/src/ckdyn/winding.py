"""Winding invariant of closed curves in the basin U+.

A curve C in U+ is pushed forward by the least power H^n that puts every
sample in V+, and the integer winding number w of ``phi(H^n C)`` around 0 is
counted by accumulating principal argument increments.  The invariant is the
exact dyadic ``w / d^n``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath

from ._numeric import phase
from .automorphism import AutomorphismSpec, _coords, classify_point, escape_radius, forward, \
    in_V_plus, inverse
from .boettcher import phi


class CurveLeavesBasin(ValueError):
    """A sample of the curve did not escape within the iteration budget."""


class SamplingTooCoarse(ValueError):
    """An argument jump of at least pi/2 survived the maximal refinement depth."""


@dataclass(frozen=True, eq=True)
class DyadicLike:
    """Exact ``m / d^n`` kept normalized (``n == 0`` or ``d`` does not divide ``m``)."""

    m: int
    n: int
    d: int

    def __post_init__(self):
        m, n, d = int(self.m), int(self.n), int(self.d)
        if d < 2:
            raise ValueError("base d must be >= 2")
        if n < 0:
            m, n = m * d ** (-n), 0
        while n > 0 and m % d == 0:
            m //= d
            n -= 1
        if m == 0:
            n = 0
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)

    @classmethod
    def from_fraction(cls, value: Fraction, d: int) -> DyadicLike:
        value = Fraction(value)
        n = 0
        den = value.denominator
        while den % d == 0 and den > 1:
            den //= d
            n += 1
        if den != 1:
            raise ValueError(f"{value} is not of the form m/{d}^n")
        return cls(value.numerator * (d**n // value.denominator), n, d)

    def _check(self, other: DyadicLike):
        if self.d != other.d:
            raise ValueError("dyadics with different bases")

    def __add__(self, other: DyadicLike) -> DyadicLike:
        self._check(other)
        n = max(self.n, other.n)
        m = self.m * self.d ** (n - self.n) + other.m * other.d ** (n - other.n)
        return DyadicLike(m, n, self.d)

    def __neg__(self) -> DyadicLike:
        return DyadicLike(-self.m, self.n, self.d)

    def __sub__(self, other: DyadicLike) -> DyadicLike:
        return self + (-other)

    def scale_by_d(self) -> DyadicLike:
        return DyadicLike(self.m * self.d, self.n, self.d)

    def mod1(self) -> DyadicLike:
        """Representative in ``[0, 1)``."""
        return DyadicLike(self.m % self.d**self.n, self.n, self.d)

    def as_fraction(self) -> Fraction:
        return Fraction(self.m, self.d**self.n)

    def __float__(self) -> float:
        return self.m / self.d**self.n

    def __str__(self) -> str:
        return f"{self.m} / {self.d}^{self.n}"


@dataclass(frozen=True)
class ClosedCurve:
    """Samples of a closed loop; the last sample connects back to the first.

    ``parametrization`` (optional) maps ``t`` in ``[0, 1)`` to a point and
    must satisfy ``samples[i] == parametrization(i / len(samples))``.  It is
    used for exact refinement; without it new samples are interpolated
    linearly between neighbours.
    """

    samples: tuple
    description: str = ""
    parametrization: Callable[[float], tuple] | None = None

    def __post_init__(self):
        samples = tuple(tuple(p) for p in self.samples)
        if len(samples) < 3:
            raise ValueError("a closed curve needs at least 3 samples")
        if len({len(p) for p in samples}) != 1:
            raise ValueError("all samples must have the same dimension")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_parametrization(cls, f: Callable[[float], tuple], n_samples: int = 64,
                             description: str = "") -> ClosedCurve:
        return cls(tuple(f(i / n_samples) for i in range(n_samples)), description, f)

    def point_at(self, t: float) -> tuple:
        """Point at curve parameter ``t`` (sample index units scaled to ``[0, 1)``)."""
        if self.parametrization is not None:
            return tuple(self.parametrization(t % 1.0))
        n = len(self.samples)
        x = (t % 1.0) * n
        i = int(math.floor(x))
        s = x - i
        a, b = self.samples[i % n], self.samples[(i + 1) % n]
        return tuple((1 - s) * u + s * v for u, v in zip(a, b))

    def reversed(self) -> ClosedCurve:
        f = self.parametrization
        rev = None if f is None else (lambda t: f((-t) % 1.0))
        samples = (self.samples[0],) + tuple(reversed(self.samples[1:]))
        return ClosedCurve(samples, f"reversed({self.description})", rev)

    def image(self, spec: AutomorphismSpec, n: int) -> ClosedCurve:
        """``H^n`` of the curve (``n < 0`` uses the inverse)."""
        def push(p):
            for _ in range(abs(n)):
                p = forward(spec, p) if n > 0 else inverse(spec, p)
            return p
        f = self.parametrization
        param = None if f is None else (lambda t: push(f(t)))
        return ClosedCurve(tuple(push(p) for p in self.samples),
                           f"H^{n}({self.description})", param)


def circle_curve(spec: AutomorphismSpec, m: int = 1, radius: float | None = None,
                 n_samples: int = 64) -> ClosedCurve:
    """``m`` traversals of ``t -> (radius e^(2 pi i t), 0, ..., 0)``; default radius 2R."""
    radius = 2 * escape_radius(spec) if radius is None else radius
    zeros = (0j,) * (spec.k - 1)

    def f(t):
        if mpmath.mp.prec > 53:  # evaluated inside a high-precision winding computation
            return (radius * mpmath.expjpi(2 * m * mpmath.mpf(t)),) + tuple(
                mpmath.mpc(0) for _ in zeros)
        return (radius * cmath.exp(2j * math.pi * m * t),) + zeros
    n_samples = max(n_samples, 8 * abs(m), 3)
    return ClosedCurve.from_parametrization(f, n_samples, f"{m}*C0(r={radius})")


@dataclass(frozen=True)
class WindingResult:
    alpha: DyadicLike
    depth: int
    winding: int
    total_argument: float
    n_evaluations: int

    @property
    def integrality_defect(self) -> float:
        return abs(self.total_argument - 2 * math.pi * self.winding)


class _NeedDeeper(Exception):
    def __init__(self, steps):
        super().__init__(steps)
        self.steps = steps


def winding_details(spec: AutomorphismSpec, curve: ClosedCurve, max_iter: int = 60,
                    max_depth: int = 20, R: float | None = None,
                    dps: int | None = None) -> WindingResult:
    """Winding computation with its diagnostics.

    ``dps`` switches to mpmath at that many digits.  Parametrized curves are
    then re-sampled at full precision, which matters for deep preimages:
    pushing ``H^-n`` of a curve back out cancels about ``d^n`` digits.
    """
    R = escape_radius(spec) if R is None else R
    if dps is None:
        return _winding(spec, curve, max_iter, max_depth, R, list(curve.samples))
    with mpmath.workdps(dps):
        N = len(curve.samples)
        if curve.parametrization is not None:
            samples = [curve.point_at(i / N) for i in range(N)]
        else:
            samples = [tuple(mpmath.mpc(c) for c in p) for p in curve.samples]
        samples = [tuple(mpmath.mpc(c) for c in p) for p in samples]
        return _winding(spec, curve, max_iter, max_depth, R, samples)


def _winding(spec, curve, max_iter, max_depth, R, samples):
    def escape_steps(p):
        report = classify_point(spec, p, max_iter, R)
        if not report.escaped:
            raise CurveLeavesBasin(f"sample {p} did not escape within {max_iter} steps")
        return report.steps

    for p in samples:
        _coords(spec, p)
    depth = max(escape_steps(p) for p in samples)
    while True:
        try:
            return _wind_at_depth(spec, curve, samples, depth, max_depth, R, escape_steps)
        except _NeedDeeper as exc:
            depth = exc.steps


def _wind_at_depth(spec, curve, samples, depth, max_depth, R, escape_steps):
    evaluations = 0
    N = len(samples)
    mp = mpmath.mp.prec > 53 and any(isinstance(c, mpmath.mpc) for c in samples[0])

    def point(t):
        p = curve.point_at(t)
        return tuple(mpmath.mpc(c) for c in p) if mp else p

    def value(p):
        nonlocal evaluations
        z = p
        for _ in range(depth):
            z = forward(spec, z)
        if not in_V_plus(spec, z, R):
            raise _NeedDeeper(max(depth + 1, escape_steps(p)))
        evaluations += 1
        return phi(spec, z, tol=mpmath.mpf(10) ** (-mpmath.mp.dps) if mp else 1e-12).value

    def increments(t0, v0, t1, v1, level):
        delta = float(phase(v1 / v0))
        if abs(delta) < math.pi / 2:
            return delta
        if level >= max_depth:
            raise SamplingTooCoarse(
                f"argument jump {delta:.3g} between t={t0} and t={t1} after {max_depth} bisections")
        tm = 0.5 * (t0 + t1)
        vm = value(point(tm))
        return increments(t0, v0, tm, vm, level + 1) + increments(tm, vm, t1, v1, level + 1)

    values = [value(p) for p in samples]
    total = 0.0
    for i in range(N):
        total += increments(i / N, values[i], (i + 1) / N, values[(i + 1) % N], 0)
    w = round(total / (2 * math.pi))
    return WindingResult(DyadicLike(w, depth, spec.d), depth, w, total, evaluations)


def winding_alpha(spec: AutomorphismSpec, curve: ClosedCurve, max_iter: int = 60,
                  max_depth: int = 20, R: float | None = None,
                  dps: int | None = None) -> DyadicLike:
    """The invariant ``alpha(C) = w / d^n`` as an exact dyadic."""
    return winding_details(spec, curve, max_iter, max_depth, R, dps).alpha
