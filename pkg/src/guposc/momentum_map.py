"""Generalized momentum map ``P(p) = arctan(sqrt(beta) p) / sqrt(beta)``.

Scalar/array forward and inverse maps, plus exact truncated power series
for ``P`` and ``P**2`` in powers of ``p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import DomainExceeded

DEFAULT_GUARD = 0.05


@dataclass(frozen=True)
class OscillatorParams:
    """Physical constants of one oscillator mode.

    Natural units ``hbar = mass = omega = 1`` are the defaults. ``beta = 0``
    is the undeformed oscillator and is fully supported.
    """

    hbar: float = 1.0
    mass: float = 1.0
    omega: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("hbar", "mass", "omega"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be a non-negative finite number, got {self.beta!r}")

    @property
    def sqrt_beta(self) -> float:
        return math.sqrt(self.beta)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    def with_beta(self, beta: float) -> "OscillatorParams":
        return OscillatorParams(self.hbar, self.mass, self.omega, beta)


def momentum_forward(p, params: OscillatorParams):
    """Map the deformed momentum ``p`` to the canonical momentum ``P``.

    Works elementwise on arrays. For ``beta = 0`` the input is returned
    unchanged (as float).
    """
    if params.beta == 0:
        return np.asarray(p, dtype=float) if np.ndim(p) else float(p)
    s = params.sqrt_beta
    out = np.arctan(s * np.asarray(p, dtype=float)) / s
    return out if np.ndim(p) else float(out)


def momentum_limit(params: OscillatorParams, guard: float = 0.0) -> float:
    """Largest ``|P|`` accepted by :func:`momentum_inverse` (``inf`` when undeformed)."""
    if params.beta == 0:
        return math.inf
    return (math.pi / 2) * (1 - guard) / params.sqrt_beta


def momentum_inverse(P, params: OscillatorParams, guard: float = DEFAULT_GUARD):
    """Map the canonical momentum ``P`` back to ``p = tan(sqrt(beta) P) / sqrt(beta)``.

    Raises
    ------
    DomainExceeded
        If ``|P| sqrt(beta) >= (pi/2)(1 - guard)`` for any element.
    """
    if not 0 <= guard < 1:
        raise ValueError(f"guard must lie in [0, 1), got {guard!r}")
    arr = np.asarray(P, dtype=float)
    if params.beta == 0:
        return arr if np.ndim(P) else float(arr)
    s = params.sqrt_beta
    limit = (math.pi / 2) * (1 - guard)
    worst = float(np.max(np.abs(arr))) * s if arr.size else 0.0
    if not worst < limit:
        raise DomainExceeded(
            f"momentum_map: |P|*sqrt(beta) = {worst:.6g} is outside the invertible "
            f"range (< {limit:.6g} with guard {guard})",
            source="momentum_map",
            value=worst,
            limit=limit,
        )
    out = np.tan(s * arr) / s
    return out if np.ndim(P) else float(out)


def exact_rational(x) -> Fraction:
    """Convert ``x`` to a Fraction, reading floats through their shortest decimal repr.

    ``0.01`` becomes ``1/100`` rather than the binary expansion of the double.
    """
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"cannot represent {x!r} exactly")
        return Fraction(repr(x))
    return Fraction(str(x))


@dataclass(frozen=True)
class PowerSeries:
    """Truncated univariate power series with exact rational coefficients.

    ``coefficients[k]`` multiplies ``p**k``; terms above ``max_order`` are dropped.
    """

    coefficients: tuple
    max_order: int

    def __post_init__(self):
        if self.max_order < 1:
            raise ValueError(f"max_order must be >= 1, got {self.max_order}")
        coeffs = tuple(Fraction(c) for c in self.coefficients[: self.max_order + 1])
        coeffs += (Fraction(0),) * (self.max_order + 1 - len(coeffs))
        object.__setattr__(self, "coefficients", coeffs)

    def __getitem__(self, power: int) -> Fraction:
        if 0 <= power <= self.max_order:
            return self.coefficients[power]
        return Fraction(0)

    def __mul__(self, other: "PowerSeries") -> "PowerSeries":
        order = min(self.max_order, other.max_order)
        out = [Fraction(0)] * (order + 1)
        for i, a in enumerate(self.coefficients[: order + 1]):
            if a == 0:
                continue
            for j in range(order + 1 - i):
                out[i + j] += a * other.coefficients[j]
        return PowerSeries(tuple(out), order)

    def nonzero(self) -> dict:
        """``{power: coefficient}`` for the nonzero terms."""
        return {k: c for k, c in enumerate(self.coefficients) if c != 0}

    def evaluate(self, x: float) -> float:
        # Horner in floating point; coefficients stay exact.
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * x + float(c)
        return acc


def _beta_fraction(params) -> Fraction:
    return exact_rational(params.beta)


def series_P(params: OscillatorParams, max_order: int) -> PowerSeries:
    """Series of ``P`` in ``p``: coefficient of ``p**(2r+1)`` is ``(-beta)**r / (2r+1)``."""
    if not isinstance(max_order, int) or max_order < 1 or max_order % 2 == 0:
        raise ValueError(f"series_P needs an odd max_order >= 1, got {max_order!r}")
    beta = _beta_fraction(params)
    coeffs = [Fraction(0)] * (max_order + 1)
    for r in range((max_order - 1) // 2 + 1):
        coeffs[2 * r + 1] = (-beta) ** r / (2 * r + 1)
    return PowerSeries(tuple(coeffs), max_order)


def series_P_squared(params: OscillatorParams, max_order: int) -> PowerSeries:
    """Series of ``P**2`` obtained by exactly squaring :func:`series_P`."""
    if not isinstance(max_order, int) or max_order < 2 or max_order % 2:
        raise ValueError(f"series_P_squared needs an even max_order >= 2, got {max_order!r}")
    # P is odd, so its terms up to order-1 determine P**2 through p**order.
    half = series_P(params, max_order - 1)
    padded = PowerSeries(half.coefficients, max_order)
    return padded * padded
