"""Böttcher coordinate of H on the escape region V+.

On V+ the first coordinate of H(z) is ``z_1^d * exp(beta(z))`` with
``beta = Log(1 + (a_2 z_2 + ... + a_k z_k) / z_1^d)``; telescoping gives

    phi(z) = z_1 * exp(sum_{j >= 0} beta(H^j z) / d^(j+1)),

which satisfies ``phi(H(z)) = phi(z)^d`` and ``phi(z) ~ z_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath

from ._numeric import cexp, clog, is_mp
from .automorphism import AutomorphismSpec, _coords, escape_radius, forward, in_V_plus

DEFAULT_TOL = 1e-12
TERM_CAP = 64
# past this modulus of z_1 the remaining beta terms are far below double precision
_NEGLIGIBLE_BEYOND = 1e150


class NotInEscapeRegion(ValueError):
    """The point is outside V+."""


class PhiNotConverged(RuntimeError):
    """The telescoping series did not reach the tolerance within the term cap."""


@dataclass(frozen=True)
class PhiResult:
    value: complex
    terms_used: int
    last_increment: float
    converged: bool = True


def correction(spec: AutomorphismSpec, z) -> complex:
    """``(a_2 z_2 + ... + a_k z_k) / z_1^d``."""
    num = 0
    for a, zj in zip(spec.alpha, z[1:]):
        if a:
            num = num + a * zj
    return num / z[0] ** spec.d


def beta(spec: AutomorphismSpec, p, R: float | None = None):
    """Principal ``Log(1 + correction)``; requires ``p`` in V+."""
    z = _coords(spec, p)
    if not in_V_plus(spec, z, R):
        raise NotInEscapeRegion(f"{z} is not in V+")
    return clog(1 + correction(spec, z))


def beta_argument_bound(spec: AutomorphismSpec, R: float | None = None) -> float:
    """``sum|a_j| / R^(d-1)``, a strict bound for ``|correction|`` on V+ (at most 1/2)."""
    R = escape_radius(spec) if R is None else R
    return sum(abs(a) for a in spec.alpha) / R ** (spec.d - 1)


def beta_bound(spec: AutomorphismSpec, R: float | None = None) -> float:
    """``-log(1 - x)`` with ``x = beta_argument_bound``; bounds ``|beta|`` on V+ (at most log 2)."""
    return -math.log1p(-beta_argument_bound(spec, R))


def phi(spec: AutomorphismSpec, p, tol: float = DEFAULT_TOL, max_terms: int = TERM_CAP,
        R: float | None = None) -> PhiResult:
    """Böttcher coordinate of ``p`` in V+.

    Python complex input is evaluated in double precision; mpmath input keeps
    the working precision of ``mpmath.mp`` and never takes the large-modulus
    shortcut.
    """
    z = _coords(spec, p)
    if not in_V_plus(spec, z, R):
        raise NotInEscapeRegion(f"{z} is not in V+")
    mp = any(is_mp(c) for c in z)
    z1 = z[0]
    d = spec.d
    total = 0
    weight = 1
    increment = math.inf
    for n in range(1, max_terms + 1):
        weight = weight / d if not mp else weight / mpmath.mpf(d)
        increment_value = clog(1 + correction(spec, z)) * weight
        total = total + increment_value
        increment = abs(increment_value)
        if increment < tol and n > 1:
            return PhiResult(z1 * cexp(total), n, float(increment), True)
        if not mp and abs(z[0]) > _NEGLIGIBLE_BEYOND:
            # every later term is bounded by sum|a| |z_1|^(1-d) / d^n, far below tol
            return PhiResult(z1 * cexp(total), n, float(increment), True)
        z = forward(spec, z)
    raise PhiNotConverged(f"phi did not converge in {max_terms} terms "
                          f"(last increment {float(increment)})")


def phi_n(spec: AutomorphismSpec, p, n: int):
    """The partial product ``z_1 exp(sum_{j < n} beta(H^j z) / d^(j+1))`` (no V+ check past step 0)."""
    z = _coords(spec, p)
    z1 = z[0]
    total = 0
    weight = 1
    for _ in range(n):
        weight = weight / spec.d
        total = total + clog(1 + correction(spec, z)) * weight
        z = forward(spec, z)
    return z1 * cexp(total)


def functional_equation_residual(spec: AutomorphismSpec, p, tol: float = DEFAULT_TOL) -> float:
    """``|phi(H p) - phi(p)^d| / |phi(p)|^d``."""
    a = phi(spec, p, tol).value
    b = phi(spec, forward(spec, p), tol).value
    target = a ** spec.d
    return float(abs(b - target) / abs(target))


@dataclass(frozen=True)
class EstimationRow:
    n: int
    z1n: complex
    U_power: complex
    error_ratio: float


def first_estimation_exponent(spec: AutomorphismSpec):
    """``d^(-k+j-1) + 1 - d`` with ``j`` the largest index of a nonzero coefficient."""
    j = spec.top_index
    return mpmath.mpf(spec.d) ** (-spec.k + j - 1) + 1 - spec.d


def check_first_estimation(spec: AutomorphismSpec, p, n_max: int,
                           dps: int | None = None) -> list[EstimationRow]:
    """Table of ``(n, z_{1,n}, U^(d^n), |z_{1,n} - U^(d^n)| / |U^(d^n)|^e)``.

    In double precision the table stops at the last ``n`` where the predicted
    error is still resolvable relative to ``|U^(d^n)|`` (or representable at
    all).  With ``dps`` the computation runs in mpmath with ``dps`` guard
    digits on top of the precision the largest row needs, so the table always
    reaches ``n_max``.
    """
    expo = first_estimation_exponent(spec)
    rows = []
    z = _coords(spec, p)
    U = phi(spec, z).value
    if dps is None:
        log_u = clog(U)
        for n in range(n_max + 1):
            try:
                Un = cexp(log_u * spec.d**n)
                scale = abs(Un) ** float(expo)
                ratio = abs(z[0] - Un) / scale
            except OverflowError:
                break
            if not (math.isfinite(abs(Un)) and math.isfinite(ratio)):
                break
            if scale < 1e-11 * abs(Un):
                break  # the error sits below double-precision resolution
            rows.append(EstimationRow(n, complex(z[0]), complex(Un), float(ratio)))
            z = forward(spec, z)
        return rows
    digits = math.log10(abs(U)) * spec.d**n_max * float(1 - expo)
    with mpmath.workdps(int(digits) + dps):
        z = tuple(mpmath.mpc(c) for c in z)
        U = phi(spec, z, tol=mpmath.mpf(10) ** (-mpmath.mp.dps)).value
        log_u = mpmath.log(U)
        for n in range(n_max + 1):
            Un = mpmath.exp(log_u * spec.d**n)
            ratio = abs(z[0] - Un) / abs(Un) ** expo
            rows.append(EstimationRow(n, _to_complex(z[0]), _to_complex(Un), float(ratio)))
            z = forward(spec, z)
    return rows


def _to_complex(x) -> complex:
    try:
        return complex(x)
    except OverflowError:
        return complex(math.inf, 0)
