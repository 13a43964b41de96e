"""The automorphism family

    H(z_1, ..., z_k) = (z_1^d + a_2 z_2 + ... + a_k z_k, z_3, ..., z_k, z_1)

with its inverse, orbits, the escape region V+ and escape classification.

Every map here works on plain tuples of Python complex numbers and equally
on mpmath numbers, which the high-precision checks rely on.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ._numeric import complex_pair, isfinite, parse_complex


class DimensionMismatch(ValueError):
    """A point does not have the dimension of the map."""


@dataclass(frozen=True)
class AutomorphismSpec:
    """Dimension ``k``, degree ``d`` and coefficients ``alpha = (a_2, ..., a_k)``."""

    k: int
    d: int
    alpha: tuple[complex, ...]

    def __post_init__(self):
        alpha = tuple(complex(a) for a in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"k must be an integer >= 2, got {self.k}")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d}")
        if len(alpha) != self.k - 1:
            raise ValueError(f"alpha needs k-1 = {self.k - 1} entries, got {len(alpha)}")
        if alpha[0] == 0:
            raise ValueError("alpha_2 must be nonzero")
        if not abs(alpha[0]) < self.d:
            raise ValueError(f"|alpha_2| must be < d = {self.d}, got {abs(alpha[0])}")

    def a(self, j: int) -> complex:
        """Coefficient ``a_j`` for ``2 <= j <= k``."""
        return self.alpha[j - 2]

    @property
    def top_index(self) -> int:
        """Largest ``j`` with ``a_j != 0`` (``a_2`` is never zero)."""
        return max(j for j in range(2, self.k + 1) if self.a(j) != 0)

    def to_dict(self) -> dict:
        return {"k": self.k, "d": self.d, "alpha": [complex_pair(a) for a in self.alpha]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> AutomorphismSpec:
        return cls(int(data["k"]), int(data["d"]),
                   tuple(parse_complex(a) for a in data["alpha"]))

    @classmethod
    def from_json(cls, text: str) -> AutomorphismSpec:
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> AutomorphismSpec:
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class CPoint:
    """A point of C^k."""

    coords: tuple

    def __post_init__(self):
        coords = tuple(self.coords)
        if not all(isfinite(c) for c in coords):
            raise ValueError(f"non-finite coordinate in {coords}")
        object.__setattr__(self, "coords", coords)

    def __len__(self):
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]


def _coords(spec: AutomorphismSpec, p) -> tuple:
    coords = tuple(p.coords if isinstance(p, CPoint) else p)
    if len(coords) != spec.k:
        raise DimensionMismatch(f"expected a point of C^{spec.k}, got {len(coords)} coordinates")
    return coords


def forward(spec: AutomorphismSpec, p) -> tuple:
    """``H(p)``."""
    z = _coords(spec, p)
    head = z[0] ** spec.d
    for j in range(2, spec.k + 1):
        a = spec.alpha[j - 2]
        if a:
            head = head + a * z[j - 1]
    return (head,) + z[2:] + (z[0],)


def inverse(spec: AutomorphismSpec, w) -> tuple:
    """``H^{-1}(w)``."""
    w = _coords(spec, w)
    z1 = w[-1]
    tail = w[1:-1]  # z_3 .. z_k
    rest = w[0] - z1 ** spec.d
    for j, zj in enumerate(tail, start=3):
        a = spec.alpha[j - 2]
        if a:
            rest = rest - a * zj
    z2 = rest / spec.alpha[0]
    return (z1, z2) + tail


@dataclass(frozen=True)
class Orbit:
    """``points[i] = H^(start_index + i)(seed)``; ``truncated`` flags an overflow stop."""

    points: tuple
    start_index: int = 0
    truncated: bool = False

    def __len__(self):
        return len(self.points)

    def first_coordinates(self) -> list:
        return [p[0] for p in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        k = len(self.points[0]) if self.points else 0
        header = ["step"]
        for i in range(1, k + 1):
            header += [f"re_{i}", f"im_{i}"]
        writer.writerow(header)
        for i, p in enumerate(self.points):
            row = [self.start_index + i]
            for c in p:
                c = complex(c)
                row += [repr(c.real), repr(c.imag)]
            writer.writerow(row)
        return buf.getvalue()


def iterate(spec: AutomorphismSpec, p, n: int) -> Orbit:
    """Orbit of ``|n| + 1`` points; negative ``n`` walks backwards with the inverse.

    Points are always stored in forward order, so for ``n < 0`` the orbit
    starts at ``H^n(p)`` with ``start_index = n`` and ends at ``p``.
    """
    step = forward if n >= 0 else inverse
    z = _coords(spec, p)
    points = [z]
    truncated = False
    for _ in range(abs(n)):
        try:
            z = step(spec, z)
        except (OverflowError, ZeroDivisionError):
            truncated = True
            break
        if not all(isfinite(c) for c in z):
            truncated = True
            break
        points.append(z)
    if n >= 0:
        return Orbit(tuple(points), 0, truncated)
    return Orbit(tuple(reversed(points)), -(len(points) - 1), truncated)


def escape_radius(spec: AutomorphismSpec) -> float:
    """``R = max(2, (2 sum|a_j|)^(1/(d-1)))``."""
    total = sum(abs(a) for a in spec.alpha)
    return max(2.0, (2.0 * total) ** (1.0 / (spec.d - 1)))


def in_V_plus(spec: AutomorphismSpec, p, R: float | None = None) -> bool:
    """``|z_1| > max(R, |z_2|, ..., |z_k|)``."""
    z = _coords(spec, p)
    R = escape_radius(spec) if R is None else R
    return abs(z[0]) > max([R] + [abs(c) for c in z[1:]])


@dataclass(frozen=True)
class EscapeReport:
    """``escaped`` with ``steps`` = least n such that H^n(p) is in V+, else undecided."""

    escaped: bool
    steps: int | None
    radius_used: float
    final_point: tuple

    @property
    def status(self) -> str:
        return f"Escaped({self.steps})" if self.escaped else "Undecided"


def classify_point(spec: AutomorphismSpec, p, max_iter: int = 200,
                   R: float | None = None) -> EscapeReport:
    R = escape_radius(spec) if R is None else R
    z = _coords(spec, p)
    for n in range(max_iter + 1):
        if in_V_plus(spec, z, R):
            return EscapeReport(True, n, R, z)
        if n == max_iter:
            break
        try:
            nz = forward(spec, z)
        except OverflowError:
            break
        if not all(isfinite(c) for c in nz):
            break
        z = nz
    return EscapeReport(False, None, R, z)


# -- blow-up factorization of the germ at the point at infinity ---------------

BLOWUP_INTERPRETATION = (
    "eta takes (zeta_2, ..., zeta_{k+1}) (the same k chart variables as F) and returns "
    "(zeta_3, ..., zeta_k, -(a_2 zeta_2 + ... + a_k zeta_k)/D, zeta_{k+1}); "
    "pi = pi_1 o ... o pi_{2d-1} acts on eta's output with pi_{2d-1} applied first. "
    "With t = zeta_{k+1} the (k-1)-th slot becomes (1 + w t^(d-1)) t^(d-1) = t^(d-1)/D, "
    "so the composition equals F identically."
)


@dataclass(frozen=True)
class BlowupReport:
    d: int
    k: int
    max_residual: float
    residuals: tuple
    n_samples: int
    interpretation: str = field(default=BLOWUP_INTERPRETATION)


def chart_map(spec: AutomorphismSpec, zeta: Sequence) -> tuple:
    """The map at infinity in the chart ``z_1 != 0``: ``F(zeta_2, ..., zeta_{k+1})``."""
    zeta = tuple(zeta)
    if len(zeta) != spec.k:
        raise DimensionMismatch(f"chart points have {spec.k} coordinates")
    t = zeta[-1]
    D = _chart_denominator(spec, zeta)
    td = t ** (spec.d - 1)
    return tuple(z * td / D for z in zeta[1:-1]) + (td / D, t ** spec.d / D)


def _chart_denominator(spec, zeta):
    t = zeta[-1]
    td = t ** (spec.d - 1)
    D = 1 + sum(a * z * td for a, z in zip(spec.alpha, zeta[:-1]))
    if abs(D) < 1e-12:
        raise ValueError(f"sample {zeta} lies on D = 0, outside the chart domain")
    return D


def eta(spec: AutomorphismSpec, zeta: Sequence) -> tuple:
    zeta = tuple(zeta)
    D = _chart_denominator(spec, zeta)
    w = -sum(a * z for a, z in zip(spec.alpha, zeta[:-1])) / D
    return tuple(zeta[1:-1]) + (w, zeta[-1])


def blowup_chart(j: int, d: int, u: Sequence) -> tuple:
    """The chart formula of the ``j``-th blow-up, ``1 <= j <= 2d-1``."""
    u = tuple(u)
    if j == 1:
        e = u[-2]
        return tuple(x * e for x in u[:-2]) + (e, u[-1] * e)
    if 2 <= j <= 2 * d - 1:
        shift = 1 if j == d + 1 else 0
        return u[:-2] + (u[-2] * u[-1] + shift, u[-1])
    raise ValueError(f"blow-up index must be in 1..{2 * d - 1}")


def blowup_composition(spec: AutomorphismSpec, zeta: Sequence) -> tuple:
    u = eta(spec, zeta)
    for j in range(2 * spec.d - 1, 0, -1):
        u = blowup_chart(j, spec.d, u)
    return u


def verify_blowup_factorization(d: int, k: int, alpha: Sequence, samples) -> BlowupReport:
    """Compare ``F`` with ``pi o eta`` on chart samples and report the residuals."""
    spec = AutomorphismSpec(k, d, tuple(alpha))
    residuals = []
    for zeta in samples:
        direct = chart_map(spec, zeta)
        composed = blowup_composition(spec, zeta)
        residuals.append(max(abs(a - b) for a, b in zip(direct, composed)))
    return BlowupReport(d, k, max(residuals, default=0.0), tuple(residuals), len(residuals))
