"""Heisenberg-picture algebra over quadrature operators.

Every observable in a linear optical network is a real linear combination of
the X and Y quadratures of a fixed set of initial ("basis") modes, plus a
classical displacement. :class:`QuadExpr` stores that combination sparsely and
:class:`ModeExpr` pairs the X and Y expressions of one optical mode.

Vacuum quadratures have unit variance, so a coherent state has
``Var(X) = Var(Y) = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

_SQRT2 = math.sqrt(2.0)

MINUS_FIRST = "minus_first"
PLUS_FIRST = "plus_first"


@dataclass(frozen=True, order=True)
class BasisId:
    """Identifier of one initial mode (``index`` unique within a network)."""

    index: int
    label: str

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"basis index must be non-negative, got {self.index}")
        if not self.label:
            raise ValueError("basis label must be non-empty")


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r}")


@dataclass(frozen=True, eq=True)
class QuadExpr:
    """Linear combination ``sum_k (cx_k X_k + cy_k Y_k) + mean`` of basis quadratures.

    ``terms`` maps a :class:`BasisId` to its ``(cx, cy)`` weight pair. A basis
    id absent from ``terms`` has zero weight. Instances are treated as
    immutable; arithmetic returns new expressions.
    """

    terms: Mapping[BasisId, Tuple[float, float]] = field(default_factory=dict)
    mean: float = 0.0

    def __post_init__(self):
        _check_finite(self.mean)
        for cx, cy in self.terms.values():
            _check_finite(cx, cy)

    @classmethod
    def zero(cls) -> "QuadExpr":
        return cls({}, 0.0)

    def coefficient(self, basis: BasisId) -> Tuple[float, float]:
        return self.terms.get(basis, (0.0, 0.0))

    def basis_ids(self) -> Tuple[BasisId, ...]:
        return tuple(sorted(self.terms))

    def _combine(self, other: "QuadExpr", sign: float) -> "QuadExpr":
        terms: Dict[BasisId, Tuple[float, float]] = dict(self.terms)
        for b, (cx, cy) in other.terms.items():
            ax, ay = terms.get(b, (0.0, 0.0))
            terms[b] = (ax + sign * cx, ay + sign * cy)
        return QuadExpr(terms, self.mean + sign * other.mean)

    def __add__(self, other: "QuadExpr") -> "QuadExpr":
        if not isinstance(other, QuadExpr):
            return NotImplemented
        return self._combine(other, 1.0)

    def __sub__(self, other: "QuadExpr") -> "QuadExpr":
        if not isinstance(other, QuadExpr):
            return NotImplemented
        return self._combine(other, -1.0)

    def __mul__(self, scale: float) -> "QuadExpr":
        if isinstance(scale, QuadExpr):
            return NotImplemented
        s = float(scale)
        _check_finite(s)
        terms = {b: (s * cx, s * cy) for b, (cx, cy) in self.terms.items()}
        return QuadExpr(terms, s * self.mean)

    __rmul__ = __mul__

    def __truediv__(self, scale: float) -> "QuadExpr":
        return self * (1.0 / float(scale))

    def __neg__(self) -> "QuadExpr":
        return self * -1.0

    def table(self) -> Dict[str, Tuple[float, float]]:
        """Coefficients keyed by basis label, convenient for comparisons."""
        return {b.label: c for b, c in sorted(self.terms.items())}


@dataclass(frozen=True)
class ModeExpr:
    """The ``(X, Y)`` quadrature pair of one optical mode."""

    x: QuadExpr
    y: QuadExpr

    def __add__(self, other: "ModeExpr") -> "ModeExpr":
        return ModeExpr(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "ModeExpr") -> "ModeExpr":
        return ModeExpr(self.x - other.x, self.y - other.y)

    def __mul__(self, scale: float) -> "ModeExpr":
        return ModeExpr(self.x * scale, self.y * scale)

    __rmul__ = __mul__

    def __truediv__(self, scale: float) -> "ModeExpr":
        return ModeExpr(self.x / scale, self.y / scale)

    @property
    def mean(self) -> complex:
        return complex(self.x.mean, self.y.mean)


@dataclass(frozen=True)
class NoiseModel:
    """Per-basis quadrature variances; unlisted basis modes are vacuum, ``(1, 1)``."""

    variances: Mapping[BasisId, Tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        for b, (vx, vy) in self.variances.items():
            if not (vx > 0 and vy > 0) or not (math.isfinite(vx) and math.isfinite(vy)):
                raise ValueError(f"variances for {b.label!r} must be finite and > 0, got {(vx, vy)}")

    def of(self, basis: BasisId) -> Tuple[float, float]:
        return self.variances.get(basis, (1.0, 1.0))


VACUUM = NoiseModel()


class Basis:
    """Allocator of initial modes for one network.

    Labels and indices are unique within a ``Basis``; indices are assigned in
    allocation order.
    """

    def __init__(self):
        self._ids: Dict[str, BasisId] = {}

    def __contains__(self, label: str) -> bool:
        return label in self._ids

    def __len__(self) -> int:
        return len(self._ids)

    def __getitem__(self, label: str) -> BasisId:
        return self._ids[label]

    @property
    def ids(self) -> Tuple[BasisId, ...]:
        return tuple(self._ids.values())

    def fresh_mode(self, label: str, mean: complex = 0.0) -> ModeExpr:
        """Allocate a new basis mode and return its identity quadratures.

        ``mean`` is the classical displacement, real part on X and imaginary
        part on Y; a nonzero mean with unit variances models a coherent input.
        """
        if label in self._ids:
            raise ValueError(f"duplicate basis label {label!r}")
        b = BasisId(len(self._ids), label)
        self._ids[label] = b
        mean = complex(mean)
        return ModeExpr(
            QuadExpr({b: (1.0, 0.0)}, mean.real),
            QuadExpr({b: (0.0, 1.0)}, mean.imag),
        )


def two_mode_squeeze(m1: ModeExpr, m2: ModeExpr, r: float) -> Tuple[ModeExpr, ModeExpr]:
    """Entangle two modes into an EPR pair with correlation parameter ``r``.

    For ``r > 0`` the pair approaches a joint eigenstate of ``X1 - X2`` and
    ``Y1 + Y2``; for ``r < 0`` of ``X1 + X2`` and ``Y1 - Y2``.
    """
    r = float(r)
    _check_finite(r)
    ep, em = math.exp(r), math.exp(-r)
    x1 = (m1.x * ep + m2.x * em) / _SQRT2
    y1 = (m1.y * em + m2.y * ep) / _SQRT2
    x2 = (m1.x * ep - m2.x * em) / _SQRT2
    y2 = (m1.y * em - m2.y * ep) / _SQRT2
    return ModeExpr(x1, y1), ModeExpr(x2, y2)


def beamsplit(m1: ModeExpr, m2: ModeExpr, convention: str = MINUS_FIRST) -> Tuple[ModeExpr, ModeExpr]:
    """Balanced beamsplitter.

    ``minus_first`` returns ``((m1 - m2)/√2, (m1 + m2)/√2)``; ``plus_first``
    returns the two ports in the opposite order.
    """
    diff = (m1 - m2) / _SQRT2
    total = (m1 + m2) / _SQRT2
    if convention == MINUS_FIRST:
        return diff, total
    if convention == PLUS_FIRST:
        return total, diff
    raise ValueError(f"unknown beamsplitter convention {convention!r}")


def add_scaled(target: ModeExpr, x_src: QuadExpr, y_src: QuadExpr, gain: float) -> ModeExpr:
    """Feedforward displacement ``target + √2·gain·(x_src + i y_src)``."""
    gain = float(gain)
    _check_finite(gain)
    k = _SQRT2 * gain
    return ModeExpr(target.x + x_src * k, target.y + y_src * k)


def covariance(e1: QuadExpr, e2: QuadExpr, noise: NoiseModel = VACUUM) -> float:
    """Symmetrised covariance of two expressions; means do not contribute."""
    total = 0.0
    for b, (cx, cy) in e1.terms.items():
        other = e2.terms.get(b)
        if other is None:
            continue
        vx, vy = noise.of(b)
        total += cx * other[0] * vx + cy * other[1] * vy
    return total


def variance(e: QuadExpr, noise: NoiseModel = VACUUM) -> float:
    total = 0.0
    for b, (cx, cy) in e.terms.items():
        vx, vy = noise.of(b)
        total += cx * cx * vx + cy * cy * vy
    return total


def commutator(e1: QuadExpr, e2: QuadExpr) -> float:
    """Coefficient ``c`` in ``[e1, e2] = c·[X⁰, Y⁰]`` (zero for jointly measurable pairs)."""
    total = 0.0
    for b, (a, bb) in e1.terms.items():
        other = e2.terms.get(b)
        if other is None:
            continue
        c, d = other
        total += a * d - bb * c
    return total


def commutation_coefficient(m: ModeExpr) -> float:
    """Equals 1 for every physically valid mode."""
    return commutator(m.x, m.y)

