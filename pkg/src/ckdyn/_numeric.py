"""Small helpers letting the numeric code accept Python complex or mpmath values."""

from __future__ import annotations

import cmath
import math

import mpmath


def is_mp(x) -> bool:
    return isinstance(x, (mpmath.mpc, mpmath.mpf))


def any_mp(values) -> bool:
    return any(is_mp(x) for x in values)


def isfinite(x) -> bool:
    if is_mp(x):
        return bool(mpmath.isfinite(x))
    return cmath.isfinite(complex(x))


def clog(x):
    return mpmath.log(x) if is_mp(x) else cmath.log(x)


def cexp(x):
    return mpmath.exp(x) if is_mp(x) else cmath.exp(x)


def phase(x):
    return mpmath.arg(x) if is_mp(x) else cmath.phase(x)


def log_abs(x) -> float:
    """``log|x|`` without overflowing for huge mpmath values."""
    if is_mp(x):
        return float(mpmath.log(abs(x)))
    return math.log(abs(x))


def parse_complex(value) -> complex:
    """Accept ``[re, im]``, ``"re,im"``, Python numbers and complex strings."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"expected [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        text = value.strip()
        if "," in text:
            re_part, im_part = text.split(",", 1)
            return complex(float(re_part), float(im_part))
        return complex(text.replace(" ", ""))
    return complex(value)


def complex_pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]
