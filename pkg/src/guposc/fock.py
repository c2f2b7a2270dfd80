"""Truncated Fock-space operators for the deformed oscillator.

All operators are dense ``dim x dim`` complex matrices in the number basis
``|0>, ..., |dim-1>``. Identities that the infinite-dimensional algebra
satisfies hold here only on a leading block; the block sizes used by the
checks are

* ``[a, a_dag]``: leading ``dim-1`` block (last diagonal entry is ``-(dim-1)``)
* ``[q, P]``: leading ``dim-1`` block
* ``[q, p]``: leading ``dim-4`` block
* quadratic-form spectrum: lowest ``dim // 2`` levels
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy

from .errors import DomainExceeded
from .momentum_map import DEFAULT_GUARD, OscillatorParams

HERMITIAN_RTOL = 1e-12
NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Immutable dense matrix in the truncated number basis."""

    entries: np.ndarray
    label: str = ""
    hermitian: bool = False

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"{self.label or 'operator'}: entries must be square, got shape {m.shape}")
        if m.shape[0] < 2:
            raise ValueError(f"{self.label or 'operator'}: dim must be >= 2, got {m.shape[0]}")
        if not np.all(np.isfinite(m)):
            raise ValueError(f"{self.label or 'operator'}: entries contain NaN or Inf")
        if self.hermitian:
            scale = max(np.linalg.norm(m), 1.0)
            err = np.max(np.abs(m - m.conj().T))
            if err > HERMITIAN_RTOL * scale:
                raise ValueError(f"{self.label or 'operator'}: not Hermitian (max deviation {err:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> "DenseOperator":
        return DenseOperator(self.entries.conj().T, f"{self.label}^dag", self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, DenseOperator):
            return DenseOperator(self.entries @ other.entries, f"{self.label}{other.label}")
        if isinstance(other, FockState):
            return FockState(self.entries @ other.amplitudes, normalized=False)
        return NotImplemented

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.entries + other.entries, f"({self.label}+{other.label})")

    def __sub__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.entries - other.entries, f"({self.label}-{other.label})")

    def __mul__(self, scalar) -> "DenseOperator":
        return DenseOperator(scalar * self.entries, self.label)

    __rmul__ = __mul__

    @cached_property
    def eigh(self):
        """Eigenvalues (ascending) and eigenvectors; only for Hermitian operators."""
        if not self.hermitian:
            raise ValueError(f"{self.label}: eigh requires a Hermitian operator")
        w, v = np.linalg.eigh(self.entries)
        w.setflags(write=False)
        v.setflags(write=False)
        return w, v

    def block(self, size: int) -> np.ndarray:
        return self.entries[:size, :size]


@dataclass(frozen=True, eq=False)
class FockState:
    """State vector in the truncated number basis."""

    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("FockState amplitudes contain NaN or Inf")
        if self.normalized:
            norm = np.linalg.norm(v)
            if abs(norm - 1) > NORM_TOL:
                raise ValueError(f"FockState norm is {norm!r}, expected 1 within {NORM_TOL}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "FockState") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expect(self, op: DenseOperator) -> complex:
        return complex(np.vdot(self.amplitudes, op.entries @ self.amplitudes))


def _check_dim(dim):
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise ValueError(f"fock: dim must be an integer >= 2, got {dim!r}")
    return int(dim)


def basis_state(n: int, dim: int) -> FockState:
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise ValueError(f"fock: level {n} outside 0..{dim - 1}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1
    return FockState(v)


def random_state(dim: int, rng) -> FockState:
    """Complex-Gaussian amplitudes, normalized. ``rng`` is a seed or a numpy Generator."""
    rng = np.random.default_rng(rng)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return FockState(v / np.linalg.norm(v))


def commutator(x: DenseOperator, y: DenseOperator) -> DenseOperator:
    return DenseOperator(x.entries @ y.entries - y.entries @ x.entries, f"[{x.label},{y.label}]")


def build_ladder(dim: int):
    """Annihilation and creation matrices, ``a|n> = sqrt(n)|n-1>``.

    ``a_dag|dim-1> = 0`` is the truncation.
    """
    dim = _check_dim(dim)
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    return DenseOperator(a, "a"), DenseOperator(a.conj().T, "a_dag")


def build_number(dim: int) -> DenseOperator:
    """``N = diag(0, ..., dim-1)``, i.e. ``a_dag a`` without the rounding of ``sqrt(n)**2``."""
    dim = _check_dim(dim)
    return DenseOperator(np.diag(np.arange(dim, dtype=float)).astype(complex), "N", hermitian=True)


def exact_ladder(dim: int):
    """Symbolic ladder matrices with entries ``sqrt(n)`` held exactly.

    Floating-point ``sqrt(n)**2`` is not always ``n``, so identities such as
    ``[a, a_dag] = 1`` can only be checked with zero residual in exact arithmetic.
    """
    dim = _check_dim(dim)
    a = sympy.zeros(dim, dim)
    for n in range(1, dim):
        a[n - 1, n] = sympy.sqrt(n)
    return a, a.T


def exact_residual(m) -> float:
    """Largest absolute entry of a symbolic matrix (0.0 when it vanishes identically)."""
    return max((float(abs(x)) for x in m), default=0.0)


def build_qP(params: OscillatorParams, dim: int):
    """Position ``q`` and canonical momentum ``P`` from the ladder matrices."""
    a, a_dag = build_ladder(dim)
    hbar, m, w = params.hbar, params.mass, params.omega
    q = math.sqrt(hbar / (2 * m * w)) * (a.entries + a_dag.entries)
    P = 1j * math.sqrt(m * hbar * w / 2) * (a_dag.entries - a.entries)
    # symmetrize away roundoff so the Hermitian flag holds to machine precision
    q = (q + q.conj().T) / 2
    P = (P + P.conj().T) / 2
    return DenseOperator(q, "q", hermitian=True), DenseOperator(P, "P", hermitian=True)


def matrix_function(op: DenseOperator, func, label: str = "") -> DenseOperator:
    """Apply a scalar function to a Hermitian operator through its eigendecomposition.

    Each eigenvalue is mapped independently, so degenerate eigenvalues need no
    special handling.
    """
    w, v = op.eigh
    fw = np.asarray(func(w), dtype=float)
    m = (v * fw) @ v.conj().T
    m = (m + m.conj().T) / 2
    return DenseOperator(m, label or f"f({op.label})", hermitian=True)


def build_p_operator(params: OscillatorParams, dim: int, guard: float = DEFAULT_GUARD) -> DenseOperator:
    """Deformed momentum ``p = tan(sqrt(beta) P) / sqrt(beta)`` by functional calculus on ``P``.

    Raises
    ------
    DomainExceeded
        When some eigenvalue ``lam`` of ``P`` has ``|lam| sqrt(beta) > (pi/2)(1 - guard)``.
    """
    _, P = build_qP(params, dim)
    if params.beta == 0:
        return DenseOperator(P.entries, "p", hermitian=True)
    s = params.sqrt_beta
    w, _ = P.eigh
    limit = (math.pi / 2) * (1 - guard)
    worst = int(np.argmax(np.abs(w)))
    if abs(w[worst]) * s > limit:
        raise DomainExceeded(
            f"fock: eigenvalue {w[worst]:.6g} of P at dim={dim} gives |lambda|*sqrt(beta) = "
            f"{abs(w[worst]) * s:.6g} > {limit:.6g}; the truncation cannot represent p at beta={params.beta}",
            source="fock",
            value=float(w[worst]),
            limit=limit / s,
        )
    return matrix_function(P, lambda x: np.tan(s * x) / s, "p")


def build_hamiltonian(params: OscillatorParams, dim: int, form: str = "ladder") -> DenseOperator:
    """Oscillator Hamiltonian, either ``hbar omega (N + 1/2)`` or ``m w^2 q^2/2 + P^2/2m``.

    It depends on ``q`` and ``P`` only, so ``beta`` never enters.
    """
    dim = _check_dim(dim)
    if form == "ladder":
        n = np.arange(dim, dtype=float)
        return DenseOperator(np.diag(params.hbar * params.omega * (n + 0.5)).astype(complex), "H", hermitian=True)
    if form == "quadratic":
        q, P = build_qP(params, dim)
        m, w = params.mass, params.omega
        h = 0.5 * m * w**2 * (q.entries @ q.entries) + (P.entries @ P.entries) / (2 * m)
        return DenseOperator((h + h.conj().T) / 2, "H", hermitian=True)
    raise ValueError(f"fock: unknown Hamiltonian form {form!r} (expected 'ladder' or 'quadratic')")


def spectrum_table(params: OscillatorParams, dim: int, form: str = "quadratic", levels: int | None = None):
    """Rows ``(n, E_numeric, E_analytic, abs_err)`` for the lowest ``levels`` eigenvalues.

    ``levels`` defaults to ``dim // 2``, the block trusted under truncation.
    """
    levels = dim // 2 if levels is None else levels
    H = build_hamiltonian(params, dim, form)
    w, _ = H.eigh
    rows = []
    for n in range(levels):
        exact = params.hbar * params.omega * (n + 0.5)
        rows.append((n, float(w[n]), exact, abs(float(w[n]) - exact)))
    return rows


def ground_state_wavefunction(params: OscillatorParams, q_grid) -> np.ndarray:
    """Gaussian ground state ``(m w / pi hbar)**(1/4) exp(-m w q**2 / 2 hbar)`` on ``q_grid``."""
    q = np.asarray(q_grid, dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise ValueError("fock: q_grid must be a non-empty 1-D array")
    if not np.all(np.isfinite(q)):
        raise ValueError("fock: q_grid must be finite")
    if np.any(np.diff(q) < 0):
        raise ValueError("fock: q_grid must be sorted")
    mw = params.mass * params.omega / params.hbar
    return (mw / math.pi) ** 0.25 * np.exp(-0.5 * mw * q**2)


@dataclass(frozen=True)
class UncertaintyReport:
    dq: float
    dp: float
    rhs_bound: float
    satisfied: bool
    margin: float = field(default=0.0)


def _spread(state: FockState, op: DenseOperator) -> float:
    mean = state.expect(op).real
    second = state.expect(DenseOperator(op.entries @ op.entries)).real
    return math.sqrt(max(second - mean**2, 0.0))


def uncertainty_check(state: FockState, params: OscillatorParams, guard: float = DEFAULT_GUARD) -> UncertaintyReport:
    """Test ``dq dp >= hbar/2 (1 + beta dp**2)`` in ``state``.

    ``margin`` is ``dq*dp - rhs_bound``; the check passes for margin >= -1e-9.
    """
    if not state.normalized:
        raise ValueError("fock: uncertainty_check requires a normalized state")
    q, _ = build_qP(params, state.dim)
    p = build_p_operator(params, state.dim, guard)
    dq = _spread(state, q)
    dp = _spread(state, p)
    rhs = 0.5 * params.hbar * (1 + params.beta * dp**2)
    margin = dq * dp - rhs
    return UncertaintyReport(dq, dp, rhs, margin >= -1e-9, margin)
