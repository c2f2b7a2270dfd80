"""Photon modes and coherent states.

Coherent-state amplitudes are built as a running product of the ratios
``alpha / sqrt(n)``, so no factorial is ever formed.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .fock import DenseOperator, FockState, build_ladder, build_number


@dataclass(frozen=True)
class ModeSpec:
    k: float
    polarization: int = 1
    occupancy: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValueError(f"optics: wavenumber k must be positive, got {self.k!r}")
        if self.polarization not in (1, 2):
            raise ValueError(f"optics: polarization must be 1 or 2, got {self.polarization!r}")
        if not isinstance(self.occupancy, (int, np.integer)) or self.occupancy < 0:
            raise ValueError(f"optics: occupancy must be a non-negative integer, got {self.occupancy!r}")


def mode_energy_terms(modes, hbar: float = 1.0, c: float = 1.0):
    """Per-mode contributions ``hbar c k (n + 1/2)``, in input order."""
    seen = set()
    terms = []
    for mode in modes:
        key = (mode.k, mode.polarization)
        if key in seen:
            raise ValueError(f"optics: duplicate mode k={mode.k}, polarization={mode.polarization}")
        seen.add(key)
        terms.append(hbar * c * mode.k * (mode.occupancy + 0.5))
    return terms


def mode_energy(modes, hbar: float = 1.0, c: float = 1.0) -> float:
    """Total energy of a set of distinct field modes, zero-point terms included."""
    return math.fsum(mode_energy_terms(modes, hbar, c))


def minimum_dim(alpha: complex) -> int:
    """Truncation needed for ``|alpha>``: ``ceil(|alpha|**2 + 8|alpha| + 16)``."""
    r = abs(alpha)
    return math.ceil(r * r + 8 * r + 16)


@dataclass(frozen=True)
class CoherentSpec:
    alpha: complex
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if not cmath.isfinite(self.alpha):
            raise ValueError("optics: alpha must be finite")
        need = minimum_dim(self.alpha)
        if self.dim < need:
            raise ValueError(
                f"optics: dim={self.dim} is too small for |alpha|={abs(self.alpha):.6g}; "
                f"the tail rule needs dim >= {need}"
            )

    @classmethod
    def auto(cls, alpha: complex) -> "CoherentSpec":
        return cls(alpha, minimum_dim(alpha))


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    ratios = np.empty(dim, dtype=complex)
    ratios[0] = cmath.exp(-0.5 * abs(alpha) ** 2)
    ratios[1:] = alpha / np.sqrt(np.arange(1, dim))
    return np.cumprod(ratios)


def coherent_state(spec: CoherentSpec) -> FockState:
    """Truncated coherent state ``|alpha>``."""
    return FockState(coherent_amplitudes(spec.alpha, spec.dim))


def poisson_pmf(mean: float, n: np.ndarray) -> np.ndarray:
    """Poisson probabilities through log-gamma, independent of the amplitude recursion."""
    n = np.asarray(n)
    if mean == 0:
        return (n == 0).astype(float)
    logs = -mean + n * math.log(mean) - np.array([math.lgamma(k + 1) for k in n.ravel()]).reshape(n.shape)
    return np.exp(logs)


def photon_statistics(spec: CoherentSpec):
    """Rows ``(n, P_n_numeric, P_n_analytic, abs_err)`` over the whole truncation."""
    numeric = np.abs(coherent_state(spec).amplitudes) ** 2
    n = np.arange(spec.dim)
    analytic = poisson_pmf(abs(spec.alpha) ** 2, n)
    return [(int(k), float(a), float(b), float(abs(a - b))) for k, a, b in zip(n, numeric, analytic)]


def number_moments(spec: CoherentSpec):
    """Mean and variance of ``N`` in ``|alpha>`` from the matrix representation."""
    state = coherent_state(spec)
    N = build_number(spec.dim)
    mean = state.expect(N).real
    second = state.expect(DenseOperator(N.entries @ N.entries)).real
    return mean, second - mean**2


def coherent_overlap(alpha: complex, beta_amp: complex) -> complex:
    """``<alpha|beta> = exp(-(|alpha|**2 + |beta|**2 - 2 conj(alpha) beta) / 2)``."""
    alpha, beta_amp = complex(alpha), complex(beta_amp)
    return cmath.exp(-0.5 * (abs(alpha) ** 2 + abs(beta_amp) ** 2 - 2 * alpha.conjugate() * beta_amp))


def quadrature_operator(dim: int, lambda_phase: float) -> DenseOperator:
    """``x_lambda = (a e^{-i lambda} + a_dag e^{i lambda}) / sqrt(2)``."""
    a, a_dag = build_ladder(dim)
    x = (a.entries * cmath.exp(-1j * lambda_phase) + a_dag.entries * cmath.exp(1j * lambda_phase)) / math.sqrt(2)
    return DenseOperator((x + x.conj().T) / 2, "x", hermitian=True)


@dataclass(frozen=True)
class QuadratureStats:
    mean: float
    second_moment: float
    variance: float


def quadrature_stats(spec: CoherentSpec, lambda_phase: float) -> QuadratureStats:
    state = coherent_state(spec)
    x = quadrature_operator(spec.dim, lambda_phase)
    mean = state.expect(x).real
    second = state.expect(DenseOperator(x.entries @ x.entries)).real
    return QuadratureStats(mean, second, second - mean**2)


def quadrature_second_moment(alpha: complex, lambda_phase: float) -> float:
    """Closed form ``(alpha**2 e^{-2i lambda} + conj(alpha)**2 e^{2i lambda} + 2|alpha|**2 + 1) / 2``."""
    alpha = complex(alpha)
    z = alpha**2 * cmath.exp(-2j * lambda_phase)
    return 0.5 * (z + z.conjugate() + 2 * abs(alpha) ** 2 + 1).real
