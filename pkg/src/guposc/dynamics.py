"""Classical equations of motion in the deformed ``(q, p)`` and canonical ``(q, P)`` charts.

In the canonical chart the flow is the ordinary harmonic oscillator. In the
deformed chart::

    dq/dt = arctan(sqrt(beta) p) / (m sqrt(beta))
    dp/dt = -m omega**2 (1 + beta p**2) q
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .fock import DenseOperator, build_hamiltonian, build_ladder
from .momentum_map import DEFAULT_GUARD, OscillatorParams, momentum_forward, momentum_inverse

CHARTS = ("deformed", "canonical")
METHODS = ("rk4", "leapfrog")


def _check_chart(chart):
    if chart not in CHARTS:
        raise ValueError(f"dynamics: unknown chart {chart!r} (expected one of {CHARTS})")


@dataclass(frozen=True)
class PhasePoint:
    """A phase-space point; ``momentum`` is ``p`` or ``P`` depending on ``chart``."""

    chart: str
    q: float
    momentum: float

    def __post_init__(self):
        _check_chart(self.chart)
        if not (math.isfinite(self.q) and math.isfinite(self.momentum)):
            raise ValueError("dynamics: phase point coordinates must be finite")

    def to_canonical(self, params: OscillatorParams) -> "PhasePoint":
        if self.chart == "canonical":
            return self
        return PhasePoint("canonical", self.q, momentum_forward(self.momentum, params))

    def to_deformed(self, params: OscillatorParams, guard: float = DEFAULT_GUARD) -> "PhasePoint":
        if self.chart == "deformed":
            return self
        return PhasePoint("deformed", self.q, momentum_inverse(self.momentum, params, guard))

    def to_chart(self, chart: str, params: OscillatorParams) -> "PhasePoint":
        return self.to_canonical(params) if chart == "canonical" else self.to_deformed(params)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fixed-step samples of one orbit. Arrays share the length of ``times``."""

    params: OscillatorParams
    chart: str
    times: np.ndarray
    q: np.ndarray
    momentum: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        _check_chart(self.chart)
        n = len(self.times)
        if not (len(self.q) == len(self.momentum) == len(self.energies) == n):
            raise ValueError("dynamics: trajectory arrays must match the length of times")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("dynamics: trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def points(self):
        return [PhasePoint(self.chart, float(q), float(m)) for q, m in zip(self.q, self.momentum)]

    def canonical_momentum(self) -> np.ndarray:
        if self.chart == "canonical":
            return self.momentum
        return momentum_forward(self.momentum, self.params)


def energy(q, P, params: OscillatorParams):
    """``H = m omega**2 q**2 / 2 + P**2 / 2m`` (always in terms of the canonical momentum)."""
    m, w = params.mass, params.omega
    return 0.5 * m * w**2 * np.square(q) + np.square(P) / (2 * m)


def field_arrays(chart: str, params: OscillatorParams, q, mom):
    """Vectorized right-hand side: returns ``(dq/dt, dmom/dt)`` for array inputs."""
    m, w = params.mass, params.omega
    if chart == "canonical" or params.beta == 0:
        return mom / m, -m * w**2 * q
    s = params.sqrt_beta
    return np.arctan(s * mom) / (m * s), -m * w**2 * (1 + params.beta * np.square(mom)) * q


def vector_field(point: PhasePoint, params: OscillatorParams):
    """Time derivatives ``(dq/dt, dmom/dt)`` at ``point`` in its own chart."""
    dq, dm = field_arrays(point.chart, params, point.q, point.momentum)
    return float(dq), float(dm)


def rk4_steps(rhs, y0: np.ndarray, h: float, n: int) -> np.ndarray:
    """Classical RK4 with ``n`` fixed steps; returns all ``n + 1`` states stacked on axis 0."""
    out = np.empty((n + 1,) + y0.shape)
    y = np.array(y0, dtype=float)
    out[0] = y
    for i in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
    return out


def step_schedule(t_end: float, dt: float):
    """Number of steps and the actual step so that the last sample lands on ``t_end``."""
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dynamics: dt must be positive, got {dt!r}")
    if not (t_end > 0 and math.isfinite(t_end)):
        raise ValueError(f"dynamics: t_end must be positive, got {t_end!r}")
    n = max(1, round(t_end / dt))
    return n, t_end / n


def _leapfrog(params, q0, P0, h, n):
    # kick-drift-kick; the canonical force is linear in q
    m, w2 = params.mass, params.omega**2
    q = np.empty(n + 1)
    P = np.empty(n + 1)
    q[0], P[0] = q0, P0
    for i in range(n):
        Ph = P[i] - 0.5 * h * m * w2 * q[i]
        q[i + 1] = q[i] + h * Ph / m
        P[i + 1] = Ph - 0.5 * h * m * w2 * q[i + 1]
    return q, P


def integrate(start: PhasePoint, params: OscillatorParams, t_end: float, dt: float, method: str = "rk4") -> Trajectory:
    """Integrate from ``start`` to ``t_end`` with fixed steps of (about) ``dt``.

    The step is adjusted to ``t_end / round(t_end / dt)`` so the final sample
    is exactly at ``t_end``. Leapfrog is available only in the canonical chart.
    """
    if method not in METHODS:
        raise ValueError(f"dynamics: unknown method {method!r} (expected one of {METHODS})")
    if method == "leapfrog" and start.chart != "canonical":
        raise ValueError("dynamics: leapfrog requires the canonical chart; use rk4 for the deformed chart")
    n, h = step_schedule(t_end, dt)
    times = np.arange(n + 1) * h
    if method == "leapfrog":
        q, mom = _leapfrog(params, start.q, start.momentum, h, n)
    else:
        chart = start.chart

        def rhs(y):
            return np.array(field_arrays(chart, params, y[0], y[1]))

        ys = rk4_steps(rhs, np.array([start.q, start.momentum]), h, n)
        q, mom = ys[:, 0], ys[:, 1]
    P = mom if start.chart == "canonical" else momentum_forward(mom, params)
    return Trajectory(params, start.chart, times, q, mom, energy(q, P, params))


def energy_drift(traj: Trajectory) -> float:
    """Maximum relative deviation of the energy from its initial value."""
    e0 = traj.energies[0]
    return float(np.max(np.abs(traj.energies - e0)) / abs(e0))


def leapfrog_shadow_energy(traj: Trajectory) -> np.ndarray:
    """Modified energy exactly conserved by kick-drift-kick on the linear oscillator.

    ``H~ = P**2/2m + m omega**2 q**2 (1 - (omega h)**2 / 4) / 2``; its drift
    measures the secular (non-oscillatory) energy error.
    """
    if traj.chart != "canonical":
        raise ValueError("dynamics: shadow energy is defined for canonical-chart leapfrog runs")
    h = traj.times[1] - traj.times[0]
    m, w = traj.params.mass, traj.params.omega
    return traj.momentum**2 / (2 * m) + 0.5 * m * w**2 * traj.q**2 * (1 - (w * h) ** 2 / 4)


def zero_crossings(times, values) -> np.ndarray:
    """Upward zero crossings located by linear interpolation between samples."""
    v = np.asarray(values)
    t = np.asarray(times)
    idx = np.nonzero((v[:-1] < 0) & (v[1:] >= 0))[0]
    frac = -v[idx] / (v[idx + 1] - v[idx])
    return t[idx] + frac * (t[idx + 1] - t[idx])


def orbit_period(traj: Trajectory) -> float:
    """Mean spacing of upward zero crossings of ``q``."""
    crossings = zero_crossings(traj.times, traj.q)
    if len(crossings) < 2:
        raise ValueError("dynamics: need at least two upward zero crossings to measure a period")
    return float((crossings[-1] - crossings[0]) / (len(crossings) - 1))


def poisson_bracket(f, g, q: float, P: float, h: float = 1e-6) -> float:
    """``{f, g} = df/dq dg/dP - dg/dq df/dP`` by central differences in ``(q, P)``."""

    def d(fn, which):
        if which == 0:
            return (fn(q + h, P) - fn(q - h, P)) / (2 * h)
        return (fn(q, P + h) - fn(q, P - h)) / (2 * h)

    return d(f, 0) * d(g, 1) - d(g, 0) * d(f, 1)


def heisenberg_a_evolution(params: OscillatorParams, t: float) -> complex:
    """Phase ``exp(-i omega t)`` acquired by the annihilation operator."""
    return complex(np.exp(-1j * params.omega * t))


def evolve_annihilation(params: OscillatorParams, dim: int, t: float, form: str = "quadratic") -> DenseOperator:
    """``a(t) = exp(iHt/hbar) a exp(-iHt/hbar)`` by matrix exponentials in the truncated space."""
    a, _ = build_ladder(dim)
    H = build_hamiltonian(params, dim, form).entries
    U = expm(-1j * H * t / params.hbar)
    return DenseOperator(U.conj().T @ a.entries @ U, "a(t)")
