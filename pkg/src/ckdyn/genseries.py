"""Generalized formal series with exact rational exponents.

A :class:`GenSeries` is a finite sum of terms ``c(s) * x**(-p)`` where ``p`` is
an exact rational (the *stored exponent*, read in the ``x**-1`` convention so
that a larger ``p`` means a smaller term as ``x -> oo``) and ``c(s)`` is a
polynomial in the auxiliary variables ``s_1 .. s_m`` with complex
coefficients (:class:`PolyCoeff`).

Truncation is explicit.  A series carries an ``order``; every monomial whose
weight reaches the order is unknown and is never stored.  The weight of
``x**(-p) * s**a`` is ``p - s_weight * |a|``: with the default ``s_weight = 0``
this is plain truncation in the exponent of ``x``; a positive ``s_weight``
lets the ``s_i`` stand for quantities growing like ``x**s_weight``, which is
what keeps substitutions ``s_i -> s_i + shift(x)`` compatible with truncation.
"""

from __future__ import annotations

import cmath
import json
import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from fractions import Fraction
from numbers import Number, Rational

import mpmath

Exponent = int | Fraction
Monomial = tuple[int, ...]

DEFAULT_ZERO_TOL = 1e-12


class TruncationUnderflow(ValueError):
    """A substitution would lose terms below the requested truncation order."""


def as_exponent(value) -> Exponent:
    """Coerce ``value`` to an exact exponent (``int`` when integral)."""
    if isinstance(value, bool):
        raise TypeError("exponents must be rational numbers")
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else value
    if isinstance(value, Rational):
        return as_exponent(Fraction(value.numerator, value.denominator))
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return as_exponent(Fraction(int(value[0]), int(value[1])))
    if isinstance(value, str):
        return as_exponent(Fraction(value))
    raise TypeError(f"cannot use {value!r} as an exact exponent (floats are refused)")


def _norm(value) -> Exponent:
    if isinstance(value, Fraction) and value.denominator == 1:
        return value.numerator
    return value


class PolyCoeff(Mapping):
    """Immutable multivariate polynomial: exponent tuple -> complex coefficient."""

    __slots__ = ("_data", "_nvars")

    def __init__(self, data: Mapping[Monomial, complex] | None = None, nvars: int | None = None,
                 zero_tol: float = 0.0):
        items = {}
        for mono, coeff in (data or {}).items():
            mono = tuple(int(e) for e in mono)
            if any(e < 0 for e in mono):
                raise ValueError(f"negative exponent in monomial {mono}")
            if nvars is None:
                nvars = len(mono)
            elif len(mono) != nvars:
                raise ValueError(f"monomial {mono} does not have {nvars} variables")
            coeff = complex(coeff)
            if abs(coeff) > zero_tol:
                items[mono] = items.get(mono, 0) + coeff
        self._data = {m: c for m, c in items.items() if abs(c) > zero_tol}
        self._nvars = 0 if nvars is None else nvars

    @property
    def nvars(self) -> int:
        return self._nvars

    def __getitem__(self, mono: Monomial) -> complex:
        return self._data[tuple(mono)]

    def __iter__(self) -> Iterator[Monomial]:
        return iter(sorted(self._data))

    def __len__(self) -> int:
        return len(self._data)

    def __repr__(self) -> str:
        return f"PolyCoeff({dict(sorted(self._data.items()))!r})"

    def degree(self) -> int:
        return max((sum(m) for m in self._data), default=-1)

    def evaluate(self, s: Sequence) -> complex:
        total = 0
        for mono, coeff in self._data.items():
            term = coeff
            for si, e in zip(s, mono):
                if e:
                    term = term * si**e
            total = total + term
        return total

    def format(self, names: Sequence[str] | None = None) -> str:
        names = names or [f"s{i + 1}" for i in range(self._nvars)]
        parts = []
        for mono in self:
            coeff = self._data[mono]
            factors = [f"{n}^{e}" if e > 1 else n for n, e in zip(names, mono) if e]
            parts.append(_fmt_complex(coeff) + ("*" + "*".join(factors) if factors else ""))
        return " + ".join(parts) if parts else "0"


def _fmt_complex(c: complex) -> str:
    if c.imag == 0:
        return f"{c.real:.15g}"
    return f"({c.real:.15g}{c.imag:+.15g}j)"


class GenSeries:
    """Truncated generalized series ``sum c_{p,a} x**(-p) s**a``.

    Parameters
    ----------
    terms:
        Mapping ``stored exponent -> polynomial`` where a polynomial is either a
        :class:`PolyCoeff`, a ``{monomial: coeff}`` dict, or a plain number
        (constant polynomial).
    order:
        Truncation order; ``None`` means the series is exact (finite).
    nvars:
        Number of auxiliary ``s`` variables.
    s_weight:
        Weight of each ``s_i`` in the truncation filtration (see module docs).
    zero_tol:
        Absolute threshold below which coefficients are dropped.
    """

    __slots__ = ("_flat", "order", "nvars", "s_weight", "zero_tol")

    def __init__(self, terms: Mapping | None = None, order=None, nvars: int = 0,
                 s_weight=0, zero_tol: float = DEFAULT_ZERO_TOL):
        self.nvars = int(nvars)
        self.order = None if order is None else as_exponent(order)
        self.s_weight = as_exponent(s_weight)
        if self.s_weight < 0:
            raise ValueError("s_weight must be nonnegative")
        self.zero_tol = float(zero_tol)
        flat: dict[tuple[Exponent, Monomial], complex] = {}
        zero = (0,) * self.nvars
        for p, poly in (terms or {}).items():
            p = as_exponent(p)
            if isinstance(poly, Number):
                poly = {zero: poly}
            for mono, coeff in poly.items():
                mono = tuple(int(e) for e in mono)
                if len(mono) != self.nvars:
                    raise ValueError(f"monomial {mono} does not have {self.nvars} variables")
                key = (p, mono)
                flat[key] = flat.get(key, 0) + complex(coeff)
        self._flat = self._clean(flat)

    # -- construction helpers -------------------------------------------------
    @classmethod
    def _from_flat(cls, flat, order, nvars, s_weight, zero_tol) -> GenSeries:
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj.order = order
        obj.s_weight = s_weight
        obj.zero_tol = zero_tol
        obj._flat = obj._clean(flat)
        return obj

    def _like(self, flat, order=None, s_weight=None) -> GenSeries:
        return GenSeries._from_flat(flat, order, self.nvars,
                                    self.s_weight if s_weight is None else s_weight,
                                    self.zero_tol)

    @classmethod
    def monomial(cls, exp, coeff: complex = 1, mono: Monomial | None = None, nvars: int = 0,
                 **kwargs) -> GenSeries:
        mono = (0,) * nvars if mono is None else tuple(mono)
        return cls({as_exponent(exp): {mono: coeff}}, nvars=nvars, **kwargs)

    @classmethod
    def s_var(cls, i: int, nvars: int, **kwargs) -> GenSeries:
        """The series consisting of the single variable ``s_{i+1}``."""
        mono = tuple(1 if j == i else 0 for j in range(nvars))
        return cls({0: {mono: 1}}, nvars=nvars, **kwargs)

    @classmethod
    def zero(cls, nvars: int = 0, **kwargs) -> GenSeries:
        return cls({}, nvars=nvars, **kwargs)

    def _weight(self, p: Exponent, mono: Monomial) -> Exponent:
        return p - self.s_weight * sum(mono) if self.s_weight else p

    def _clean(self, flat):
        tol = self.zero_tol
        order = self.order
        out = {}
        for (p, mono), c in flat.items():
            if abs(c) <= tol:
                continue
            if order is not None and self._weight(p, mono) >= order:
                continue
            out[(_norm(p), mono)] = c
        return out

    # -- views ----------------------------------------------------------------
    @property
    def terms(self) -> dict[Exponent, PolyCoeff]:
        grouped: dict[Exponent, dict] = {}
        for (p, mono), c in self._flat.items():
            grouped.setdefault(p, {})[mono] = c
        return {p: PolyCoeff(grouped[p], nvars=self.nvars) for p in sorted(grouped)}

    def support(self) -> list[Exponent]:
        return sorted({p for p, _ in self._flat})

    def items(self) -> Iterator[tuple[Exponent, Monomial, complex]]:
        for (p, mono) in sorted(self._flat):
            yield p, mono, self._flat[(p, mono)]

    def coeff(self, p, mono: Monomial | None = None) -> complex:
        mono = (0,) * self.nvars if mono is None else tuple(mono)
        return self._flat.get((as_exponent(p), mono), 0j)

    def is_zero(self) -> bool:
        return not self._flat

    def __len__(self) -> int:
        return len(self._flat)

    def s_degree(self) -> int:
        return max((sum(m) for _, m in self._flat), default=-1)

    def valuation(self):
        """Least stored exponent; ``math.inf`` for the zero series."""
        return min((p for p, _ in self._flat), default=math.inf)

    def weighted_valuation(self):
        """Least weight ``p - s_weight*|a|`` over stored terms."""
        return min((self._weight(p, m) for p, m in self._flat), default=math.inf)

    def norm(self) -> float:
        """``exp(-valuation)``; ``inf`` when that overflows a float."""
        v = self.valuation()
        if v == math.inf:
            return 0.0
        try:
            return math.exp(-v)
        except OverflowError:
            return math.inf

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._flat.values()), default=0.0)

    # -- truncation management ------------------------------------------------
    def truncate(self, order) -> GenSeries:
        order = as_exponent(order)
        if self.order is not None and self.order < order:
            order = self.order
        return self._like(dict(self._flat), order=order)

    def with_s_weight(self, s_weight) -> GenSeries:
        """Re-express the truncation with a smaller (weaker) ``s`` weight."""
        s_weight = as_exponent(s_weight)
        if s_weight > self.s_weight and self.order is not None:
            raise ValueError("cannot strengthen the s-weight of a truncated series")
        return self._like(dict(self._flat), order=self.order, s_weight=s_weight)

    def _compatible(self, other: GenSeries):
        if self.nvars != other.nvars:
            raise ValueError("series have different numbers of s variables")
        if self.s_weight != other.s_weight:
            raise ValueError("series use different s weights; call with_s_weight first")

    # -- ring operations ------------------------------------------------------
    def __neg__(self) -> GenSeries:
        return self._like({k: -c for k, c in self._flat.items()}, order=self.order)

    def __add__(self, other) -> GenSeries:
        if isinstance(other, Number):
            other = GenSeries({0: other}, nvars=self.nvars, s_weight=self.s_weight,
                              zero_tol=self.zero_tol)
        if not isinstance(other, GenSeries):
            return NotImplemented
        self._compatible(other)
        flat = dict(self._flat)
        for k, c in other._flat.items():
            flat[k] = flat.get(k, 0) + c
        return self._like(flat, order=_min_order(self.order, other.order))

    __radd__ = __add__

    def __sub__(self, other) -> GenSeries:
        if isinstance(other, (Number, GenSeries)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other) -> GenSeries:
        return (-self) + other

    def scale(self, factor: complex) -> GenSeries:
        factor = complex(factor)
        return self._like({k: c * factor for k, c in self._flat.items()}, order=self.order)

    def __mul__(self, other) -> GenSeries:
        if isinstance(other, Number):
            return self.scale(other)
        if not isinstance(other, GenSeries):
            return NotImplemented
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other) -> GenSeries:
        if isinstance(other, Number):
            return self.scale(1 / complex(other))
        return NotImplemented

    def __pow__(self, n: int) -> GenSeries:
        return pow_(self, n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GenSeries):
            return NotImplemented
        return (self.nvars == other.nvars and self.order == other.order
                and self._flat.keys() == other._flat.keys()
                and all(self._flat[k] == other._flat[k] for k in self._flat))

    __hash__ = None

    def close_to(self, other: GenSeries, rtol: float = 1e-9, atol: float = 1e-12) -> bool:
        """Term-wise comparison on the range where both series are known."""
        order = _min_order(self.order, other.order)
        keys = set(self._flat) | set(other._flat)
        for key in keys:
            if order is not None and self._weight(*key) >= order:
                continue
            a = self._flat.get(key, 0)
            b = other._flat.get(key, 0)
            if abs(a - b) > atol + rtol * max(abs(a), abs(b)):
                return False
        return True

    # -- evaluation -----------------------------------------------------------
    def evaluate(self, x, s: Sequence = ()):
        """Numeric value at base variable ``x`` (principal powers for fractional exponents).

        Works with Python complex numbers and with mpmath numbers.
        """
        if len(s) != self.nvars:
            raise ValueError(f"expected {self.nvars} s values, got {len(s)}")
        mp = _is_mp(x) or any(_is_mp(si) for si in s)
        log_x = mpmath.log(x) if mp else (cmath.log(x) if any(
            isinstance(p, Fraction) for p, _ in self._flat) else None)
        total = 0
        powers: dict = {}
        for (p, mono), c in self._flat.items():
            xp = powers.get(p)
            if xp is None:
                if isinstance(p, int):
                    xp = x ** (-p)
                else:
                    xp = (mpmath.exp if mp else cmath.exp)(-p.numerator * log_x / p.denominator)
                powers[p] = xp
            term = (mpmath.mpc(c) if mp else c) * xp
            for si, e in zip(s, mono):
                if e:
                    term = term * si**e
            total = total + term
        return total

    # -- formatting / serialization ------------------------------------------
    def __str__(self) -> str:
        if not self._flat:
            body = "0"
        else:
            body = " + ".join(f"[{poly.format()}] * {_fmt_power(p)}"
                              for p, poly in self.terms.items())
        if self.order is not None:
            body += f" + O({_fmt_power(self.order)})"
        return body

    def __repr__(self) -> str:
        return f"GenSeries({self!s}, nvars={self.nvars})"

    def to_dict(self) -> dict:
        terms = []
        for p, poly in self.terms.items():
            frac = Fraction(p)
            terms.append({
                "exp": [frac.numerator, frac.denominator],
                "poly": [[list(m), [poly[m].real, poly[m].imag]] for m in poly],
            })
        out = {"terms": terms, "nvars": self.nvars}
        if self.order is not None:
            frac = Fraction(self.order)
            out["order"] = [frac.numerator, frac.denominator]
        else:
            out["order"] = None
        if self.s_weight:
            frac = Fraction(self.s_weight)
            out["s_weight"] = [frac.numerator, frac.denominator]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> GenSeries:
        nvars = int(data.get("nvars", 0))
        terms: dict = {}
        for term in data["terms"]:
            p = as_exponent(tuple(term["exp"]))
            poly = terms.setdefault(p, {})
            for mono, (re, im) in term["poly"]:
                if len(mono) != nvars:
                    nvars = len(mono)
                poly[tuple(mono)] = complex(re, im)
        order = data.get("order")
        s_weight = data.get("s_weight") or 0
        return cls(terms, order=None if order is None else as_exponent(tuple(order)),
                   nvars=nvars, s_weight=as_exponent(tuple(s_weight)) if s_weight else 0)

    @classmethod
    def from_json(cls, text: str) -> GenSeries:
        return cls.from_dict(json.loads(text))


def _fmt_power(p) -> str:
    """``u^(-p)`` written without a double sign when ``p`` is negative."""
    return f"u^({_fmt_exp(-p)})" if p < 0 else f"u^(-{_fmt_exp(p)})"


def _fmt_exp(p) -> str:
    frac = Fraction(p)
    return str(frac.numerator) if frac.denominator == 1 else f"{frac.numerator}/{frac.denominator}"


def _is_mp(x) -> bool:
    return isinstance(x, (mpmath.mpc, mpmath.mpf))


def _min_order(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


# -- module level operations ---------------------------------------------------

def valuation(f: GenSeries):
    return f.valuation()


def norm(f: GenSeries) -> float:
    return f.norm()


def add(f: GenSeries, g: GenSeries) -> GenSeries:
    return f + g


def mul(f: GenSeries, g: GenSeries, order=None) -> GenSeries:
    """Product, truncated at the order implied by the operands (or ``order`` if lower)."""
    f._compatible(g)
    if f.is_zero() or g.is_zero():
        result_order = _min_order(f.order, g.order)
        if f.is_zero() and f.order is not None and not g.is_zero():
            result_order = f.order + g.weighted_valuation()
        elif g.is_zero() and g.order is not None and not f.is_zero():
            result_order = g.order + f.weighted_valuation()
        if order is not None:
            result_order = _min_order(result_order, as_exponent(order))
        return f._like({}, order=result_order)
    candidates = []
    if f.order is not None:
        candidates.append(f.order + g.weighted_valuation())
    if g.order is not None:
        candidates.append(g.order + f.weighted_valuation())
    if order is not None:
        candidates.append(as_exponent(order))
    result_order = min(candidates) if candidates else None

    fa = sorted(((f._weight(p, m), p, m, c) for (p, m), c in f._flat.items()),
                key=lambda t: t[0])
    gb = sorted(((g._weight(p, m), p, m, c) for (p, m), c in g._flat.items()),
                key=lambda t: t[0])
    flat: dict = {}
    get = flat.get
    for wa, pa, ma, ca in fa:
        for wb, pb, mb, cb in gb:
            if result_order is not None and wa + wb >= result_order:
                break
            if ma:
                key = (pa + pb, tuple(x + y for x, y in zip(ma, mb)))
            else:
                key = (pa + pb, ())
            flat[key] = get(key, 0) + ca * cb
    return f._like(flat, order=result_order)


def pow_(f: GenSeries, n: int, order=None) -> GenSeries:
    """``f**n`` for a positive integer ``n``.

    Partial products are truncated at ``order`` minus the weight still to be
    multiplied in, so negative valuations of ``f`` cannot pull unknown terms
    into the requested range.
    """
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError("series powers need an integer exponent")
    if n <= 0:
        raise ValueError("series powers need a positive exponent")
    w = f.weighted_valuation()
    result = f
    for e in range(2, n + 1):
        cap = None
        if order is not None:
            cap = as_exponent(order) if w == math.inf else as_exponent(order) - (n - e) * w
        result = mul(result, f, order=cap)
    if order is not None:
        result = result.truncate(order)
    return result


def substitute_u_power(f: GenSeries, m: int, d: int) -> GenSeries:
    """Substitute ``x -> x**(d**m)``: every exponent and the order scale by ``d**m``.

    The ``s`` weight scales too, which keeps the truncation exact.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    factor = d**m
    flat = {(p * factor, mono): c for (p, mono), c in f._flat.items()}
    order = None if f.order is None else f.order * factor
    return GenSeries._from_flat(flat, order, f.nvars, f.s_weight * factor, f.zero_tol)


def map_s_variables(f: GenSeries, scalars: Sequence[complex], shifts: Sequence[GenSeries],
                    order=None) -> GenSeries:
    """Substitute ``s_i -> scalars[i] * (s_i + shifts[i])`` in every coefficient.

    ``shifts`` are series in the base variable (their own ``s`` dependence is
    allowed).  The substitution keeps ``f``'s truncation order as long as each
    shift is no larger than ``s_i`` in the weight filtration; otherwise terms
    beyond the order would leak into the known range and
    :class:`TruncationUnderflow` is raised.
    """
    n = f.nvars
    if len(scalars) != n or len(shifts) != n:
        raise ValueError(f"need {n} scalars and {n} shifts")
    sw = f.s_weight
    result_order = f.order
    if order is not None:
        result_order = _min_order(result_order, as_exponent(order))
    lifted = []
    for i, (lam, shift) in enumerate(zip(scalars, shifts)):
        if shift.nvars != n:
            raise ValueError("shift series must use the same s variables")
        shift = GenSeries._from_flat(dict(shift._flat), shift.order, n, sw, f.zero_tol)
        if f.order is not None:
            if not shift.is_zero() and shift.weighted_valuation() < -sw:
                raise TruncationUnderflow(
                    f"shift {i} has weight {shift.weighted_valuation()} below -s_weight={-sw}; "
                    "the truncated tail of the series would contaminate known terms")
            if shift.order is not None and any(sum(m) for _, m in f._flat):
                # each s_i factor can bring the shift's own truncation in
                result_order = _min_order(result_order, shift.order + _cofactor_weight(f, i))
        lifted.append((GenSeries.s_var(i, n, s_weight=sw, zero_tol=f.zero_tol) + shift)
                      .scale(lam))

    # powers only need to be known up to the order left after the lowest-weight base term
    base_floor = min((p for p, _ in f._flat), default=0)
    power_order = _shifted(result_order, -base_floor)
    # a partial product of degree e still gets multiplied by factors of weight >= -sw
    max_deg = max((sum(m) for _, m in f._flat), default=0)

    def cap(e: int):
        return _shifted(power_order, (max_deg - e) * sw)

    power_cache: dict[tuple[int, int], GenSeries] = {}

    def power(i: int, e: int) -> GenSeries:
        key = (i, e)
        if key not in power_cache:
            if e == 1:
                power_cache[key] = lifted[i].truncate(cap(1)) if power_order is not None \
                    else lifted[i]
            else:
                power_cache[key] = mul(power(i, e - 1), lifted[i], order=cap(e))
        return power_cache[key]

    zero = (0,) * n
    acc: dict = {}
    by_mono: dict[Monomial, dict] = {}
    for (p, mono), c in f._flat.items():
        by_mono.setdefault(mono, {})[(p, zero)] = c
    for mono, vpart in by_mono.items():
        base = GenSeries._from_flat(vpart, None, n, sw, f.zero_tol)
        if any(mono):
            prod = None
            deg = 0
            for i, e in enumerate(mono):
                if e:
                    deg += e
                    factor = power(i, e)
                    prod = factor if prod is None else mul(prod, factor, order=cap(deg))
            piece = mul(base, prod, order=result_order)
        else:
            piece = base
        for key, c in piece._flat.items():
            acc[key] = acc.get(key, 0) + c
    return GenSeries._from_flat(acc, result_order, n, sw, f.zero_tol)


def _shifted(order, delta):
    return None if order is None else order + delta


def _cofactor_weight(f: GenSeries, i: int):
    """Least weight of ``term / s_i`` over terms containing ``s_i`` (bounds shift-tail leakage)."""
    best = math.inf
    for (p, mono), _ in f._flat.items():
        if mono[i]:
            best = min(best, f._weight(p, mono) + f.s_weight)
    return best if best != math.inf else 0


def from_terms(pairs: Iterable[tuple], nvars: int = 0, **kwargs) -> GenSeries:
    """Build a series from ``(exponent, coeff[, monomial])`` tuples."""
    terms: dict = {}
    for item in pairs:
        p, c = item[0], item[1]
        mono = tuple(item[2]) if len(item) > 2 else (0,) * nvars
        poly = terms.setdefault(as_exponent(p), {})
        poly[mono] = poly.get(mono, 0) + c
    return GenSeries(terms, nvars=nvars, **kwargs)
