"""Model map, semiconjugacy series and class-(k, d) sequences.

Coordinates.  The model space is ``{|v| > 1} x C^(k-1)`` with

    omega(v, s) = (v^d, Lambda_i (s_i + S(v)))

where the ``Lambda_i`` solve ``d r^(k-1) + a_2 = 0`` and ``S`` is one shift
polynomial shared by all ``s`` components.  ``v`` is related to the
variable ``u`` of the asymptotic development by ``u = v^L`` with
``L = (d^(k-1) - 1) d^(k-2)`` for ``d >= 3`` and ``L = (2^(k-1) - 1) 2^(k-1)``
for ``d = 2``, which makes every exponent an integer.

Series.  ``g`` is a :class:`GenSeries` in ``v`` (stored exponents in the
``v^-1`` convention) with polynomial coefficients in ``s``.  The ``s_i`` are
given the weight ``c_S / d`` of the largest exponent of the shift once it is
pulled back one step; composing with ``omega`` then keeps a weight
truncation exact, and this weight is what ``q -> s`` turns the plain ``u``
valuation of the ``(u, q)`` picture into.  Valuations reported in "u units"
are the weighted ``v`` valuations divided by ``L``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from ._numeric import is_mp
from .automorphism import AutomorphismSpec, forward
from .genseries import GenSeries, map_s_variables, pow_, substitute_u_power
from .winding import DyadicLike


# -- roots and constants --------------------------------------------------------

@dataclass(frozen=True)
class LambdaRoots:
    """The ``k-1`` roots of ``d r^(k-1) + a_2 = 0`` sorted by principal argument."""

    roots: tuple

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


def lambda_roots(spec: AutomorphismSpec) -> LambdaRoots:
    n = spec.k - 1
    rho = -spec.alpha[0] / spec.d
    modulus = abs(rho) ** (1.0 / n)
    base = cmath.phase(rho)
    roots = [modulus * cmath.exp(1j * (base + 2 * math.pi * j) / n) for j in range(n)]
    # snap tiny real/imaginary parts so that closed-form roots print cleanly
    roots = [complex(0.0 if abs(r.real) < 1e-15 * modulus else r.real,
                     0.0 if abs(r.imag) < 1e-15 * modulus else r.imag) for r in roots]
    return LambdaRoots(tuple(sorted(roots, key=cmath.phase)))


def critical_exponent(spec: AutomorphismSpec) -> Fraction:
    """``(d-1) d^(k-1) / (d^(k-1) - 1)``: the size of the free error modes, in powers of ``u``."""
    d, k = spec.d, spec.k
    return Fraction((d - 1) * d ** (k - 1), d ** (k - 1) - 1)


@dataclass(frozen=True)
class ModelConstants:
    """Integer exponents of the model map in the ``v`` variable."""

    L: int                  # u = v^L; leading exponent of g0
    P: int                  # prefactor exponent of the s block in g0
    c_S: int                # leading exponent of the shift S
    l_exponents: dict       # l -> exponent of the a_l term of S
    sigma: Fraction         # weight of every s_i


def model_constants(spec: AutomorphismSpec) -> ModelConstants:
    d, k = spec.d, spec.k
    if d >= 3:
        c_S = (d**k - 1) * d ** (k - 2)
        L = (d ** (k - 1) - 1) * d ** (k - 2)
        P = (1 - d) * d ** (2 * k - 3)
        el = {l: -d ** (l - 3) + d ** (l + k - 4) + (d - 1) * d ** (k - 2) for l in range(3, k + 1)}
    else:
        c_S = (2**k - 1) * 2 ** (k - 1)
        L = (2 ** (k - 1) - 1) * 2 ** (k - 1)
        P = -(2 ** (2 * k - 2))
        el = {l: -2 ** (l - 2) + 2 ** (l + k - 3) + 2 ** (k - 1) for l in range(3, k + 1)}
    return ModelConstants(L, P, c_S, el, Fraction(c_S, d))


# -- the model map ---------------------------------------------------------------

@dataclass(frozen=True)
class ModelPoint:
    v: complex
    s: tuple

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(self.s))
        if not abs(self.v) > 1:
            raise ValueError(f"model points need |v| > 1, got |v| = {abs(self.v)}")


@dataclass(frozen=True)
class OmegaMap:
    spec: AutomorphismSpec
    lambdas: LambdaRoots
    variant: str                # "GeneralD" or "DEquals2"
    shift_series: GenSeries     # S(v), exact, no s dependence
    constants: ModelConstants = field(repr=False)

    @property
    def nvars(self) -> int:
        return self.spec.k - 1


def build_omega(spec: AutomorphismSpec) -> OmegaMap:
    k, d = spec.k, spec.d
    c = model_constants(spec)
    n = k - 1
    terms: dict = {-c.c_S: Fraction(1, k - 1)}
    for l, e in c.l_exponents.items():
        terms[-e] = terms.get(-e, 0) - spec.a(l) / (d * (k - 1))
    if d == 2 and k >= 3:
        terms[-1] = terms.get(-1, 0) + spec.a(3) * spec.a(k) / (4 * (k - 1))
    shift = GenSeries({p: complex(v) for p, v in terms.items()}, nvars=n)
    return OmegaMap(spec, lambda_roots(spec), "DEquals2" if d == 2 else "GeneralD", shift, c)


def shift_value(omega: OmegaMap, v):
    """``S(v)``."""
    return omega.shift_series.evaluate(v, (0,) * omega.nvars)


def omega_apply(omega: OmegaMap, p: ModelPoint) -> ModelPoint:
    shift = shift_value(omega, p.v)
    return ModelPoint(p.v ** omega.spec.d,
                      tuple(lam * (si + shift) for lam, si in zip(omega.lambdas, p.s)))


def omega_iterate(omega: OmegaMap, p: ModelPoint, n: int) -> ModelPoint:
    for _ in range(n):
        p = omega_apply(omega, p)
    return p


# -- the series g ----------------------------------------------------------------

def g0_series(spec: AutomorphismSpec, order=None) -> GenSeries:
    """``v^L + v^P (s_1 + ... + s_(k-1) - sum_l (a_l / d) v^(e_l) [+ (a_3 a_k / 4) v])``."""
    k, d = spec.k, spec.d
    c = model_constants(spec)
    n = k - 1
    zero = (0,) * n
    terms: dict = {-c.L: {zero: 1}}
    s_block = {}
    for i in range(n):
        s_block[tuple(1 if j == i else 0 for j in range(n))] = 1
    terms.setdefault(-c.P, {}).update(s_block)
    for l, e in c.l_exponents.items():
        poly = terms.setdefault(-(c.P + e), {})
        poly[zero] = poly.get(zero, 0) - spec.a(l) / d
    if d == 2 and k >= 3:
        poly = terms.setdefault(-(c.P + 1), {})
        poly[zero] = poly.get(zero, 0) + spec.a(3) * spec.a(k) / 4
    return GenSeries(terms, order=order, nvars=n, s_weight=c.sigma)


def compose_omega(omega: OmegaMap, h: GenSeries, order=None) -> GenSeries:
    """``h o omega``, known up to weight ``order`` (default: as far as ``h`` allows)."""
    d = omega.spec.d
    sigma = omega.constants.sigma
    if h.s_weight != sigma:
        raise ValueError("series must carry the model s-weight; build it with g0_series")
    if order is not None:
        need = Fraction(order) / d
        if h.order is None or h.order > need:
            h = h.truncate(need)
    hv = substitute_u_power(h, 1, d)
    shift = GenSeries(omega.shift_series.terms, nvars=omega.nvars, s_weight=hv.s_weight)
    result = map_s_variables(hv, list(omega.lambdas), [shift] * omega.nvars)
    result = result.with_s_weight(sigma)
    if result.order is None and order is None:
        return result
    return result.truncate(order if order is not None else result.order)


def _minimal_order(omega: OmegaMap) -> Fraction:
    return critical_exponent(omega.spec) * omega.constants.L


def _chain(omega: OmegaMap, g: GenSeries, order) -> dict:
    """``{m: g o omega^m}`` for ``m = 0..k`` at the orders one step of the iteration needs."""
    k, d = omega.spec.k, omega.spec.d
    w0 = g.weighted_valuation()
    if w0 == math.inf:
        w0 = 0
    req = {m: Fraction(order) for m in range(1, k + 1)}
    req[k - 1] = max(req[k - 1], Fraction(order) - (d - 1) * w0 * d ** (k - 1))
    for m in range(k - 1, 0, -1):
        req[m] = max(req[m], req[m + 1] / d)
    chain = {0: g}
    for m in range(1, k + 1):
        chain[m] = compose_omega(omega, chain[m - 1], req[m])
    return chain


def apply_T(omega: OmegaMap, g: GenSeries, order) -> GenSeries:
    """One step ``(1/a_2)[g o w^k - (g o w^(k-1))^d - a_3 g o w - ... - a_k g o w^(k-2)]``."""
    spec = omega.spec
    k, d = spec.k, spec.d
    chain = _chain(omega, g, order)
    total = chain[k] - pow_(chain[k - 1], d, order=order)
    for j in range(3, k + 1):
        if spec.a(j):
            total = total - chain[j - 2].truncate(order).scale(spec.a(j))
    return total.scale(1 / spec.a(2)).truncate(order)


def iterate_g_history(spec: AutomorphismSpec, g: GenSeries | None, omega: OmegaMap,
                      steps: int, order) -> list[GenSeries]:
    """``[g_0, g_1, ..., g_steps]`` at working order ``order`` (weighted ``v`` units)."""
    order = Fraction(order)
    if order <= _minimal_order(omega):
        raise ValueError(
            f"order {order} must exceed crit*L = {_minimal_order(omega)}; below it one "
            "iteration step cannot keep the truncation order")
    g = g0_series(spec, order) if g is None else g.truncate(order)
    history = [g]
    for _ in range(steps):
        g = apply_T(omega, g, order)
        history.append(g)
    return history


def iterate_g(spec: AutomorphismSpec, g: GenSeries | None, omega: OmegaMap, steps: int,
              order) -> GenSeries:
    """``g_steps`` starting from ``g`` (``None`` means ``g0``)."""
    return iterate_g_history(spec, g, omega, steps, order)[-1]


@dataclass(frozen=True)
class ContractionReport:
    """Weighted valuations of the increments ``Delta_n = g_n - g_(n-1)`` in ``u`` units."""

    critical: Fraction
    valuations: tuple           # v(Delta_1), v(Delta_2), ...  (Fraction or inf)
    epsilon: Fraction           # certified from Delta_1: v(Delta_1) = crit + d*eps
    bounds: tuple               # crit + d^n eps
    plain_valuations: tuple     # unweighted v-exponent valuations / L, for comparison
    order: Fraction

    @property
    def strictly_increasing(self) -> bool:
        v = self.valuations
        return all(a < b for a, b in zip(v, v[1:]))

    @property
    def bound_holds(self) -> bool:
        return all(v >= b for v, b in zip(self.valuations, self.bounds))


def contraction_report(spec: AutomorphismSpec, steps: int, order) -> ContractionReport:
    omega = build_omega(spec)
    L = omega.constants.L
    history = iterate_g_history(spec, None, omega, steps, order)
    vals, plain = [], []
    for a, b in zip(history, history[1:]):
        delta = b - a
        w, p = delta.weighted_valuation(), delta.valuation()
        vals.append(Fraction(w) / L if w != math.inf else math.inf)
        plain.append(Fraction(p) / L if p != math.inf else math.inf)
    crit = critical_exponent(spec)
    eps = (vals[0] - crit) / spec.d if vals and vals[0] != math.inf else Fraction(0)
    bounds = tuple(crit + spec.d ** (n + 1) * eps for n in range(len(vals)))
    return ContractionReport(crit, tuple(vals), eps, bounds, tuple(plain), Fraction(order) / L)


def certified_order(spec: AutomorphismSpec, steps: int, probe_order=None) -> Fraction:
    """Weighted ``v`` order up to which ``g_steps`` is certified by the contraction bound.

    ``v(Delta_n) >= crit + d^n eps`` with ``eps`` read off ``Delta_1``; ``g_steps``
    then agrees with the limit below ``crit + d^(steps+1) eps`` (``u`` units).
    """
    omega = build_omega(spec)
    L = omega.constants.L
    probe = Fraction(probe_order) if probe_order is not None else 4 * _minimal_order(omega)
    rep = contraction_report(spec, 1, probe)
    if rep.valuations[0] == math.inf:
        return probe
    if rep.epsilon <= 0:
        raise ValueError(
            f"first increment has u-valuation {rep.valuations[0]}, not above the critical "
            f"{rep.critical}: the iteration is not certified to contract for this map")
    return (rep.critical + spec.d ** (steps + 1) * rep.epsilon) * L


def stable_order(spec: AutomorphismSpec, steps: int, probe_order) -> Fraction:
    """Weighted ``v`` order below which ``g_steps`` no longer changes.

    It is the valuation of the next increment ``Delta_(steps+1)`` computed at
    ``probe_order`` (capped there).  Since the increment valuations increase
    strictly, no later step touches the terms below it.
    """
    omega = build_omega(spec)
    history = iterate_g_history(spec, None, omega, steps + 1, probe_order)
    w = (history[-1] - history[-2]).weighted_valuation()
    return Fraction(probe_order) if w == math.inf else min(Fraction(w), Fraction(probe_order))


# -- the stacked map G ---------------------------------------------------------------

def assemble_G(g: GenSeries, omega: OmegaMap, order=None) -> list[GenSeries]:
    """``[g o w^(k-1), g, g o w, ..., g o w^(k-2)]``.

    The first component is carried to the higher order that ``H o G`` needs
    for its ``d``-th power.
    """
    spec = omega.spec
    k, d = spec.k, spec.d
    order = g.order if order is None else Fraction(order)
    chain = _chain(omega, g, order)
    return [chain[k - 1]] + [chain[m].truncate(order) for m in range(0, k - 1)]


def apply_H_series(spec: AutomorphismSpec, G: Sequence[GenSeries], order) -> list[GenSeries]:
    G = list(G)
    head = pow_(G[0], spec.d, order=order)
    for j in range(2, spec.k + 1):
        if spec.a(j):
            head = head + G[j - 1].truncate(order).scale(spec.a(j))
    return [head.truncate(order)] + [x.truncate(order) for x in G[2:]] + [G[0].truncate(order)]


@dataclass(frozen=True)
class SeriesResidual:
    component: int
    valuation: object           # weighted v-valuation of the residual (inf when it cancels)
    order: Fraction
    n_terms_checked: int
    max_relative: float         # max |residual| / max |coeff of H o G at that exponent|

    @property
    def cancels(self) -> bool:
        return self.valuation == math.inf or self.valuation >= self.order


def verify_conjugacy_series(G: Sequence[GenSeries], omega: OmegaMap, spec: AutomorphismSpec,
                            order) -> list[SeriesResidual]:
    """Componentwise ``G o w - H o G`` below ``order``."""
    order = Fraction(order)
    left = [compose_omega(omega, x, order) for x in G]
    right = apply_H_series(spec, G, order)
    report = []
    for i, (a, b) in enumerate(zip(left, right), start=1):
        diff = a - b
        scale: dict = {}
        for p, _, c in list(b.items()) + list(a.items()):
            scale[p] = max(scale.get(p, 0.0), abs(c))
        rel = 0.0
        for p, _, c in diff.items():
            ref = scale.get(p, 0.0)
            rel = max(rel, abs(c) / ref if ref else math.inf)
        known = {(p, m) for p, m, _ in a.items()} | {(p, m) for p, m, _ in b.items()}
        report.append(SeriesResidual(i, diff.weighted_valuation(), order, len(known), rel))
    return report


def support_exponents(G: Sequence[GenSeries], order) -> list:
    """Distinct exponents stored below ``order`` across the components of ``G``."""
    out = set()
    for x in G:
        for p, m, _ in x.items():
            if p - x.s_weight * sum(m) < order:
                out.add(p)
    return sorted(out)


@dataclass(frozen=True)
class NumericResidual:
    max_relative: float         # max ||G(w p) - H(G p)|| / ||H(G p)|| (max norms)
    per_component: tuple        # max |residual_i| / |H(G p)_i| for each component
    n_samples: int


def sample_model_points(omega: OmegaMap, n: int, vmin: float = 4.0, vmax: float | None = None,
                        K: float = 1.0, rng=None) -> list[ModelPoint]:
    """Random points with ``vmin <= |v| <= vmax`` and ``|s_i| <= K |v|^L``."""
    import random
    rng = rng or random.Random(0)
    vmax = 1.5 * vmin if vmax is None else vmax
    L = omega.constants.L
    pts = []
    for _ in range(n):
        r = rng.uniform(vmin, vmax)
        v = cmath.rect(r, rng.uniform(-math.pi, math.pi))
        bound = K * r**L
        s = tuple(cmath.rect(bound * rng.random(), rng.uniform(-math.pi, math.pi))
                  for _ in range(omega.nvars))
        pts.append(ModelPoint(v, s))
    return pts


def verify_conjugacy_numeric(G: Sequence[GenSeries], omega: OmegaMap, spec: AutomorphismSpec,
                             samples: Sequence[ModelPoint], vmin: float = 1.0,
                             K: float | None = None, dps: int = 30) -> NumericResidual:
    """Evaluate the truncated ``G`` on samples.

    The evaluation runs in mpmath because ``G_1 o omega`` grows like
    ``|v|^(L d^k)`` and overflows doubles.  The series coefficients are
    doubles, so the first component cannot cancel below about 1e-16 of its
    own size.
    """
    L = omega.constants.L
    worst = 0.0
    per = [0.0] * spec.k
    with mpmath.workdps(dps):
        for p in samples:
            if abs(p.v) < vmin:
                raise ValueError(f"sample with |v| = {abs(p.v)} below the domain bound {vmin}")
            if K is not None and any(abs(si) > K * abs(p.v) ** L for si in p.s):
                raise ValueError("sample outside |s_i| <= K |v|^L")
            v = mpmath.mpc(p.v)
            s = tuple(mpmath.mpc(x) for x in p.s)
            q = omega_apply(omega, ModelPoint(v, s))
            at_p = [x.evaluate(v, s) for x in G]
            at_q = [x.evaluate(q.v, q.s) for x in G]
            image = forward(spec, at_p)
            res = [a - b for a, b in zip(at_q, image)]
            worst = max(worst, float(max(abs(x) for x in res) / max(abs(x) for x in image)))
            for i, (r, b) in enumerate(zip(res, image)):
                per[i] = max(per[i], float(abs(r) / abs(b)))
    return NumericResidual(worst, tuple(per), len(samples))


# -- deck transformations ---------------------------------------------------------------

def _root_of_unity_level(v, v_prime, d: int, max_level: int = 40, tol: float = 1e-9) -> int:
    ratio = v_prime / v
    if abs(abs(ratio) - 1) > tol:
        raise ValueError("v'/v is not a root of unity")
    theta = float(mpmath.arg(ratio) if is_mp(ratio) else cmath.phase(ratio)) / (2 * math.pi)
    for n in range(max_level + 1):
        x = theta * d**n
        if abs(x - round(x)) < tol * d**n:
            return n
    raise ValueError(f"v'/v is not a d^n-th root of unity for n <= {max_level}")


def deck_delta(omega: OmegaMap, v, v_prime, i: int, n: int | None = None):
    """``Delta_i(v, v') = sum_(m<n) Lambda_i^(-m) (S(v^(d^m)) - S(v'^(d^m)))``.

    ``n`` is the least level with ``(v'/v)^(d^n) = 1``; it is detected
    numerically when not given.  The sum cancels heavily (its terms reach
    ``|v|^(c_S d^(n-1))``), so it is evaluated in mpmath with enough digits
    for the largest term and returned in the input's type.
    """
    d = omega.spec.d
    if n is None:
        n = _root_of_unity_level(v, v_prime, d)
    if n == 0:
        return 0 * v
    mp_in = is_mp(v) or is_mp(v_prime)
    top = omega.constants.c_S * d ** (n - 1) * max(math.log10(float(abs(v))), 0.0)
    with mpmath.workdps(max(mpmath.mp.dps, 15) + int(top) + 20):
        lam = mpmath.mpc(omega.lambdas[i])
        a, b = mpmath.mpc(v), mpmath.mpc(v_prime)
        total = mpmath.mpc(0)
        weight = mpmath.mpf(1)
        for _ in range(n):
            total += weight * (shift_value(omega, a) - shift_value(omega, b))
            a, b = a**d, b**d
            weight = weight / lam
    if mp_in:
        return +total
    return complex(total)


def _unit(theta: DyadicLike, like):
    frac = theta.as_fraction()
    if is_mp(like):
        return mpmath.expjpi(2 * mpmath.mpf(frac.numerator) / frac.denominator)
    return cmath.exp(2j * math.pi * frac.numerator / frac.denominator)


def deck_action(theta: DyadicLike, p: ModelPoint, omega: OmegaMap) -> ModelPoint:
    """``(v e^(2 pi i theta), s_i + Delta_i(v, v e^(2 pi i theta)))`` for ``theta`` in ``Z[1/d]/Z``."""
    if theta.d != omega.spec.d:
        raise ValueError(f"theta must be a {omega.spec.d}-adic rational")
    theta = theta.mod1()
    if theta.m == 0:
        return p
    v2 = p.v * _unit(theta, p.v)
    s2 = tuple(si + deck_delta(omega, p.v, v2, i, n=theta.n) for i, si in enumerate(p.s))
    return ModelPoint(v2, s2)


# -- class (k, d) sequences ------------------------------------------------------------

@dataclass(frozen=True)
class SeqWindow:
    """``values[i] = z_(1, n0 + i)``."""

    values: tuple
    spec: AutomorphismSpec
    n0: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) < self.spec.k + 1:
            raise ValueError(f"a window needs at least k+1 = {self.spec.k + 1} values")

    @property
    def n1(self) -> int:
        return self.n0 + len(self.values) - 1

    def __getitem__(self, n: int):
        return self.values[n - self.n0]


def orbit_window(spec: AutomorphismSpec, seed, length: int, dps: int | None = None) -> SeqWindow:
    """First coordinates of ``H^n(seed)`` for ``n = 0..length-1`` (mpmath when ``dps``)."""
    z = tuple(seed)
    if dps is not None:
        z = tuple(mpmath.mpc(c) for c in z)
    vals = []
    for _ in range(length):
        vals.append(z[0])
        z = forward(spec, z)
    return SeqWindow(tuple(vals), spec, 0)


class WindowTooShort(ValueError):
    pass


def refine_once(spec: AutomorphismSpec, w: SeqWindow) -> SeqWindow:
    """``zeta_n = (1/a_2)(z_(n+k) - z_(n+k-1)^d - a_3 z_(n+1) - ... - a_k z_(n+k-2))``."""
    k, d = spec.k, spec.d
    z = w.values
    if len(z) < 2 * k + 1:
        raise WindowTooShort(f"window of {len(z)} values cannot be refined (needs {2 * k + 1})")
    out = []
    for i in range(len(z) - k):
        acc = z[i + k] - z[i + k - 1] ** d
        for j in range(3, k + 1):
            if spec.a(j):
                acc = acc - spec.a(j) * z[i + j - 2]
        out.append(acc / spec.a(2))
    return SeqWindow(tuple(out), spec, w.n0)


def refine_to_class(spec: AutomorphismSpec, w: SeqWindow, iterations: int) -> SeqWindow:
    for _ in range(iterations):
        w = refine_once(spec, w)
    return w


def j_distance(a: SeqWindow, b: SeqWindow, n0: int | None = None) -> float:
    """``sup_(n >= n0) |a_n - b_n| |a_n|^c`` over the common indices, ``c`` the critical exponent."""
    spec = a.spec
    c = critical_exponent(spec)
    lo = max(a.n0, b.n0, a.n0 if n0 is None else n0)
    hi = min(a.n1, b.n1)
    if hi < lo:
        raise ValueError("windows do not overlap beyond n0")
    best = 0.0
    for n in range(lo, hi + 1):
        x, y = a[n], b[n]
        if is_mp(x) or is_mp(y):
            val = abs(x - y) * mpmath.power(abs(x), mpmath.mpf(c.numerator) / c.denominator)
        else:
            val = abs(x - y) * abs(x) ** float(c)
        best = max(best, float(val))
    return best


def asymptotic_z1n(spec: AutomorphismSpec, U, q: Sequence, j_terms: int, n: int):
    """The development of ``z_(1,n)`` in ``U_n = U^(d^n)`` with ``Q_j = Lambda_j^n q_j``.

    ``U`` is the Böttcher value of the seed; powers of ``U_n`` are taken on the
    branch ``log U_n = d^n Log U`` so the family is consistent along the
    orbit.  Evaluation is in mpmath at the ambient precision.
    """
    if not abs(U) > 1:
        raise ValueError("the development needs |U| > 1")
    d, k = spec.d, spec.k
    U = mpmath.mpc(U)
    log_un = mpmath.log(U) * d**n
    one = mpmath.mpf(1)
    lead = one * (d - 1) * d ** (k - 1) / (1 - d ** (k - 1))
    ratio = -mpmath.mpc(spec.a(2)) / d
    shrink = one / d ** (k - 1)

    def series(exponent, coeff):
        total = 0
        for j in range(j_terms):
            total += coeff * ratio**j * mpmath.exp(log_un * exponent * shrink**j)
        return total

    bracket = series(one * (1 - d**k) / (1 - d ** (k - 1)), 1)
    for l in range(3, k + 1):
        if spec.a(l):
            e = (one * d ** (l - k - 1) - d ** (l - 2) - (d - 1)) / (1 - d ** (k - 1))
            bracket -= series(e, mpmath.mpc(spec.a(l)) / d)
    if d == 2 and k >= 3 and spec.a(3) * spec.a(k):
        e = -one / ((1 - 2 ** (k - 1)) * 2 ** (k - 1))
        bracket += series(e, mpmath.mpc(spec.a(3) * spec.a(k)) / 4)
    lams = lambda_roots(spec)
    Q = sum(mpmath.mpc(lam) ** n * mpmath.mpc(qj) for lam, qj in zip(lams, q))
    return mpmath.exp(log_un * lead) * (bracket + Q)


def fit_q(spec: AutomorphismSpec, U, window: SeqWindow, steps: Sequence[int], j_terms: int):
    """Solve for the ``k-1`` free parameters ``q`` from ``k-1`` early steps of a window."""
    d, k = spec.d, spec.k
    steps = list(steps)
    if len(steps) != k - 1:
        raise ValueError(f"need exactly k-1 = {k - 1} steps to fit q")
    lams = lambda_roots(spec)
    one = mpmath.mpf(1)
    lead = one * (d - 1) * d ** (k - 1) / (1 - d ** (k - 1))
    A = mpmath.matrix(k - 1, k - 1)
    rhs = mpmath.matrix(k - 1, 1)
    zero_q = [0] * (k - 1)
    for r, n in enumerate(steps):
        base = asymptotic_z1n(spec, U, zero_q, j_terms, n)
        scale = mpmath.exp(mpmath.log(mpmath.mpc(U)) * d**n * lead)
        for c_, lam in enumerate(lams):
            A[r, c_] = mpmath.mpc(lam) ** n
        rhs[r] = (window[n] - base) / scale
    sol = mpmath.lu_solve(A, rhs)
    return [sol[i] for i in range(k - 1)]
