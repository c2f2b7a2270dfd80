"""Phase-space volume transport: tangent maps and finite ensembles.

The first variation ``J(t)`` of the flow obeys ``dJ/dt = A J`` with ``A`` the
Jacobian of the vector field. In the canonical chart ``trace A = 0`` and
``det J = 1``. In the deformed chart ``trace A = -2 m omega**2 beta p q``,
which integrates to ``det J(t) = (1 + beta p(t)**2) / (1 + beta p(0)**2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .dynamics import (
    PhasePoint,
    Trajectory,
    energy,
    field_arrays,
    rk4_steps,
    step_schedule,
    vector_field,
)
from .momentum_map import OscillatorParams, momentum_forward, momentum_inverse

FD_STEP = 1e-6


def jacobian_field(chart: str, params: OscillatorParams, q: float, mom: float) -> np.ndarray:
    """Analytic Jacobian ``d(dq/dt, dmom/dt) / d(q, mom)``."""
    m, w2, b = params.mass, params.omega**2, params.beta
    if chart == "canonical":
        return np.array([[0.0, 1 / m], [-m * w2, 0.0]])
    return np.array(
        [
            [0.0, 1 / (m * (1 + b * mom**2))],
            [-m * w2 * (1 + b * mom**2), -2 * m * w2 * b * mom * q],
        ]
    )


def divergence(chart: str, params: OscillatorParams, q, mom):
    """Closed-form ``trace A``; identically zero in the canonical chart."""
    if chart == "canonical":
        return np.zeros_like(np.asarray(q, dtype=float))
    return -2 * params.mass * params.omega**2 * params.beta * np.asarray(mom) * np.asarray(q)


def numerical_jacobian(point: PhasePoint, params: OscillatorParams, h: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of :func:`~guposc.dynamics.vector_field`."""
    J = np.empty((2, 2))
    for col, (dq, dm) in enumerate(((h, 0.0), (0.0, h))):
        plus = vector_field(PhasePoint(point.chart, point.q + dq, point.momentum + dm), params)
        minus = vector_field(PhasePoint(point.chart, point.q - dq, point.momentum - dm), params)
        J[:, col] = (np.array(plus) - np.array(minus)) / (2 * h)
    return J


@dataclass(frozen=True, eq=False)
class TangentFlow:
    base: Trajectory
    jacobians: np.ndarray  # shape (len(base.times), 2, 2)

    def __post_init__(self):
        if self.jacobians.shape != (len(self.base.times), 2, 2):
            raise ValueError("liouville: jacobians must have one 2x2 matrix per trajectory sample")

    @property
    def determinants(self) -> np.ndarray:
        return np.linalg.det(self.jacobians)

    def predicted_ratio(self) -> np.ndarray:
        """Closed-form ``det J`` for the base trajectory's chart."""
        if self.base.chart == "canonical":
            return np.ones(len(self.base.times))
        b = self.base.params.beta
        p = self.base.momentum
        return (1 + b * p**2) / (1 + b * p[0] ** 2)


def tangent_integrate(start: PhasePoint, params: OscillatorParams, t_end: float, dt: float) -> TangentFlow:
    """Co-integrate the orbit and its tangent map with fixed-step RK4, ``J(0) = I``."""
    chart = start.chart
    m, w2, b = params.mass, params.omega**2, params.beta

    def rhs(y):
        q, mom = y[0], y[1]
        dq, dm = field_arrays(chart, params, q, mom)
        if chart == "canonical":
            A = np.array([[0.0, 1 / m], [-m * w2, 0.0]])
        else:
            g = 1 + b * mom**2
            A = np.array([[0.0, 1 / (m * g)], [-m * w2 * g, -2 * m * w2 * b * mom * q]])
        dJ = A @ y[2:].reshape(2, 2)
        return np.concatenate(([dq, dm], dJ.ravel()))

    n, h = step_schedule(t_end, dt)
    y0 = np.array([start.q, start.momentum, 1.0, 0.0, 0.0, 1.0])
    ys = rk4_steps(rhs, y0, h, n)
    q, mom = ys[:, 0], ys[:, 1]
    P = mom if chart == "canonical" else momentum_forward(mom, params)
    base = Trajectory(params, chart, np.arange(n + 1) * h, q, mom, energy(q, P, params))
    return TangentFlow(base, ys[:, 2:].reshape(-1, 2, 2))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Uniformly weighted cloud of points, all in one chart."""

    seed: int
    chart: str
    q: np.ndarray
    momentum: np.ndarray

    def __post_init__(self):
        if len(self.q) != len(self.momentum):
            raise ValueError("liouville: ensemble coordinate arrays differ in length")

    def __len__(self):
        return len(self.q)

    @property
    def points(self):
        return [PhasePoint(self.chart, float(a), float(b)) for a, b in zip(self.q, self.momentum)]

    @property
    def center(self) -> PhasePoint:
        return PhasePoint(self.chart, float(np.mean(self.q)), float(np.mean(self.momentum)))


def disc_ensemble(center: PhasePoint, radius: float = 0.05, n_points: int = 128, seed: int = 0) -> Ensemble:
    """Seeded points filling a disc: a ring on the rim plus uniform interior samples.

    The rim ring makes the initial hull close to the disc itself.
    """
    if n_points < 64:
        raise ValueError(f"liouville: an ensemble needs at least 64 points, got {n_points}")
    if not 0 < radius <= 0.05:
        raise ValueError(f"liouville: disc radius must lie in (0, 0.05], got {radius}")
    rng = np.random.default_rng(seed)
    n_rim = n_points // 2
    theta = 2 * np.pi * np.arange(n_rim) / n_rim
    n_in = n_points - n_rim
    r = radius * np.sqrt(rng.uniform(0, 1, n_in))
    phi = rng.uniform(0, 2 * np.pi, n_in)
    dq = np.concatenate((radius * np.cos(theta), r * np.cos(phi)))
    dm = np.concatenate((radius * np.sin(theta), r * np.sin(phi)))
    return Ensemble(seed, center.chart, center.q + dq, center.momentum + dm)


def hull_area(x, y) -> float:
    try:
        return float(ConvexHull(np.column_stack((x, y))).volume)
    except QhullError as exc:
        raise ValueError("liouville: degenerate (collinear) ensemble has no hull area") from exc


@dataclass(frozen=True, eq=False)
class VolumeRecord:
    times: np.ndarray
    area_canonical: np.ndarray
    area_deformed: np.ndarray
    predicted_ratio: np.ndarray  # tangent-map det J at the disc center, deformed chart

    def ratio(self, chart: str) -> np.ndarray:
        area = self.area_canonical if chart == "canonical" else self.area_deformed
        return area / area[0]


def ensemble_volume(ensemble: Ensemble, params: OscillatorParams, t_end: float, dt: float, stride: int = 10) -> VolumeRecord:
    """Evolve every ensemble point and track convex-hull areas in both charts.

    Points are integrated in the ensemble's chart with RK4 and mapped into
    the other chart through the momentum map. The prediction is the
    deformed-chart ``det J`` of the tangent map started at the ensemble center.
    """
    if len(ensemble) < 64:
        raise ValueError(f"liouville: ensemble_volume needs >= 64 points, got {len(ensemble)}")
    if stride < 1:
        raise ValueError("liouville: stride must be >= 1")
    chart = ensemble.chart
    # reject degenerate clouds before spending time on the integration
    hull_area(ensemble.q, ensemble.momentum)

    def rhs(y):
        return np.array(field_arrays(chart, params, y[0], y[1]))

    n, h = step_schedule(t_end, dt)
    ys = rk4_steps(rhs, np.array([ensemble.q, ensemble.momentum], dtype=float), h, n)[::stride]
    times = (np.arange(n + 1) * h)[::stride]

    area_c = np.empty(len(times))
    area_d = np.empty(len(times))
    for i, (q, mom) in enumerate(ys):
        if chart == "canonical":
            P, p = mom, momentum_inverse(mom, params)
        else:
            P, p = momentum_forward(mom, params), mom
        area_c[i] = hull_area(q, P)
        area_d[i] = hull_area(q, p)

    center = ensemble.center.to_deformed(params)
    flow = tangent_integrate(center, params, t_end, dt)
    predicted = flow.determinants[::stride]
    return VolumeRecord(times, area_c, area_d, predicted)
