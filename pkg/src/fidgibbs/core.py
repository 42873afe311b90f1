"""Structural-equation machinery for conditional fiducial sampling.

A structural equation ties a one-dimensional statistic q to a primary
random variable gamma and one target parameter theta through
q = phi(gamma, theta).  Holding the observed q fixed and resampling gamma
from its unchanged density induces the conditional fiducial distribution
of theta; a draw is exactly: compute q, draw gamma, invert phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Tuple

import numpy as np

from .errors import DomainError, StructuralError
from .randvar import Dist, RngStream, sample

__all__ = [
    "StructuralEquation",
    "FiducialStatistic",
    "ConditionalFiducialSampler",
    "InjectivityReport",
    "check_injectivity",
    "WarningLog",
]


@dataclass(frozen=True)
class StructuralEquation:
    """The pair (primary r.v. density, map phi) with its inversion.

    phi(gamma, theta) evaluates the statistic; invert(q, gamma) recovers
    theta.  gamma_domain is the finite interval of gamma values the
    construction treats as possible (primary r.v.s with unbounded support
    use a central interval covering all but negligible mass); theta_domain
    is the parameter space.
    """

    gamma_dist: Dist
    phi: Callable[[float, float], float]
    invert: Callable[[float, float], float]
    theta_domain: Tuple[float, float]
    gamma_domain: Tuple[float, float]

    def __post_init__(self):
        if not self.gamma_domain[0] < self.gamma_domain[1]:
            raise DomainError(f"gamma_domain must be an interval, got {self.gamma_domain}")
        if not self.theta_domain[0] < self.theta_domain[1]:
            raise DomainError(f"theta_domain must be an interval, got {self.theta_domain}")


@dataclass(frozen=True)
class FiducialStatistic:
    """Named deterministic map from (data, fixed parameters) to a scalar."""

    name: str
    compute: Callable[[object, Mapping[str, float]], float]


class WarningLog:
    """Counts non-fatal sampling events (gamma redraws, extra truncation)."""

    def __init__(self):
        self.counts: dict[str, int] = {}

    def note(self, key: str, n: int = 1):
        self.counts[key] = self.counts.get(key, 0) + n

    def merged(self, other: "WarningLog") -> "WarningLog":
        out = WarningLog()
        for src in (self, other):
            for k, v in src.counts.items():
                out.note(k, v)
        return out

    def __repr__(self):
        return f"WarningLog({self.counts})"


@dataclass(frozen=True)
class ConditionalFiducialSampler:
    """Draws one parameter given the others by inverting a structural equation.

    equation_for builds the StructuralEquation for the current values of
    the remaining parameters (the equation's constants depend on them).
    When the drawn gamma admits no inversion, the draw is retried with a
    fresh gamma: this is the (rare) exclusion of extreme gamma values from
    the primary variable's domain, and every retry is counted in the
    warning log.
    """

    target_param: str
    statistic: FiducialStatistic
    equation_for: Callable[[object, Mapping[str, float]], StructuralEquation]
    check_at_start: bool = False
    max_redraws: int = 1000

    def equation(self, data, others: Mapping[str, float]) -> StructuralEquation:
        return self.equation_for(data, others)

    def draw(
        self,
        data,
        state: Mapping[str, float],
        rng: RngStream,
        warnings: Optional[WarningLog] = None,
    ) -> float:
        q = self.statistic.compute(data, state)
        eq = self.equation_for(data, state)
        lo, hi = eq.theta_domain
        for attempt in range(self.max_redraws + 1):
            gamma = sample(eq.gamma_dist, rng)
            try:
                theta = eq.invert(q, gamma)
            except StructuralError:
                if warnings is not None:
                    warnings.note(f"{self.target_param}.gamma_redraw")
                continue
            if not math.isfinite(theta) or not (lo < theta < hi):
                if warnings is not None:
                    warnings.note(f"{self.target_param}.gamma_redraw")
                continue
            return float(theta)
        raise StructuralError(
            f"no invertible gamma found for parameter '{self.target_param}' "
            f"after {self.max_redraws} redraws",
            statistic=self.statistic.name,
            statistic_value=q,
        )


@dataclass(frozen=True)
class InjectivityReport:
    """Numerical injectivity evidence for a structural equation at fixed q."""

    gamma_grid: np.ndarray
    theta_values: np.ndarray
    n_failed: int
    monotone: bool
    max_roundtrip_residual: float

    @property
    def injective(self) -> bool:
        return self.monotone and self.n_failed == 0

    def __repr__(self):
        return (f"InjectivityReport(monotone={self.monotone}, n_failed={self.n_failed}, "
                f"max_roundtrip_residual={self.max_roundtrip_residual:.3g})")


def check_injectivity(equation: StructuralEquation, q: float, grid_size: int = 33) -> InjectivityReport:
    """Probe gamma -> invert(q, gamma) for strict monotonicity on a grid.

    Strict monotonicity over the gamma domain is sufficient for the map to
    be injective.  Inversion failures on grid points are recorded (NaN in
    the value array), not raised; monotonicity is judged on the finite
    portion.  Also reports the worst |phi(gamma, theta) - q| round trip.
    """
    if grid_size < 16:
        raise DomainError(f"grid_size must be at least 16, got {grid_size}")
    grid = np.linspace(equation.gamma_domain[0], equation.gamma_domain[1], grid_size)
    thetas = np.full(grid_size, np.nan)
    residual = 0.0
    for i, g in enumerate(grid):
        try:
            th = equation.invert(q, float(g))
        except (StructuralError, DomainError):
            continue
        if not math.isfinite(th):
            continue
        thetas[i] = th
        back = equation.phi(float(g), th)
        if math.isfinite(back):
            residual = max(residual, abs(back - q))
        else:
            residual = math.inf
    finite = thetas[np.isfinite(thetas)]
    n_failed = int(grid_size - finite.size)
    if finite.size >= 2:
        diffs = np.diff(finite)
        monotone = bool(np.all(diffs > 0.0) or np.all(diffs < 0.0))
    else:
        monotone = False
    return InjectivityReport(
        gamma_grid=grid,
        theta_values=thetas,
        n_failed=n_failed,
        monotone=monotone,
        max_roundtrip_residual=float(residual),
    )
