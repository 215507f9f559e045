from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from blab.config.settings import BOUNDARY_TOL
from blab.errors import DomainViolationError

MIN_SEPARATION = 1e-9
MAX_INTERIOR_RADIUS = 0.95


def circle_points(n: int, radius: float = 1.0, phase: float = 0.0) -> np.ndarray:
    """n equispaced points on the circle of the given radius."""
    return radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + phase))


def polar_grid(radius: float, n_radial: int, n_angular: int) -> np.ndarray:
    """Centre plus ``n_radial`` rings (outermost at ``radius``) of ``n_angular`` points each."""
    rings = radius * np.arange(1, n_radial + 1) / n_radial
    angles = 2 * np.pi * np.arange(n_angular) / n_angular
    pts = (rings[:, None] * np.exp(1j * angles)[None, :]).ravel()
    return np.concatenate([[0j], pts])


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=complex).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BoundarySampleSet:
    """Finite set of distinct unimodular points, optionally carrying target values."""

    points: np.ndarray
    targets: np.ndarray | None = None

    def __post_init__(self):
        points = _frozen(self.points)
        if points.size and np.max(np.abs(np.abs(points) - 1.0)) > BOUNDARY_TOL:
            raise DomainViolationError("Boundary sample points must be unimodular to 1e-12.")
        if points.size > 1:
            gaps = np.abs(points[:, None] - points[None, :]) + np.eye(points.size) * 10
            if np.min(gaps) <= MIN_SEPARATION:
                raise DomainViolationError("Boundary sample points must be pairwise distinct.")
        object.__setattr__(self, "points", points)
        if self.targets is not None:
            targets = _frozen(self.targets)
            if targets.shape != points.shape:
                raise ValueError(
                    f"Expected {points.size} targets, got {targets.size}."
                )
            if not np.all(np.isfinite(targets)):
                raise ValueError("Targets must be finite.")
            object.__setattr__(self, "targets", targets)

    @classmethod
    def from_angles(cls, angles, targets=None) -> "BoundarySampleSet":
        return cls(points=np.exp(1j * np.asarray(angles, dtype=float)), targets=targets)

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def angles(self) -> np.ndarray:
        return np.angle(self.points)

    def with_targets(self, targets) -> "BoundarySampleSet":
        return BoundarySampleSet(points=self.points, targets=targets)

    def require_targets(self) -> np.ndarray:
        if self.targets is None:
            raise ValueError("This operation needs target values on K.")
        return self.targets

    def require_unimodular_targets(self) -> np.ndarray:
        targets = self.require_targets()
        if targets.size and np.max(np.abs(np.abs(targets) - 1.0)) > BOUNDARY_TOL:
            raise DomainViolationError("Targets must be unimodular to 1e-12.")
        return targets

    def require_ball_targets(self, tol: float = BOUNDARY_TOL) -> np.ndarray:
        targets = self.require_targets()
        if targets.size and np.max(np.abs(targets)) > 1.0 + tol:
            raise DomainViolationError("Targets must lie in the closed unit disc.")
        return targets

    def angular_distance(self, z: np.ndarray) -> np.ndarray:
        """Angular distance from each point of ``z`` to the nearest point of K."""
        if self.size == 0:
            return np.full(np.shape(z), np.inf)
        diff = np.angle(np.asarray(z, dtype=complex)[..., None] / self.points)
        return np.min(np.abs(diff), axis=-1)

    def min_separation(self) -> float:
        if self.size < 2:
            return 2 * np.pi
        a = np.angle(self.points[:, None] / self.points[None, :])
        return float(np.min(np.abs(a) + np.eye(self.size) * 10))


@dataclass(frozen=True)
class InteriorRegion:
    """Compact subset L of the disc: a closed disc of radius R or an explicit point list."""

    kind: Literal["disc", "points"] = "disc"
    radius: float = 0.5
    points: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    grid_density: int = 32

    def __post_init__(self):
        if self.kind not in ("disc", "points"):
            raise ValueError(f"Unsupported interior region kind: {self.kind}")
        points = _frozen(self.points)
        object.__setattr__(self, "points", points)
        if self.kind == "disc" and not 0.0 <= self.radius <= MAX_INTERIOR_RADIUS:
            raise DomainViolationError(
                f"Interior disc radius must lie in [0, {MAX_INTERIOR_RADIUS}], got {self.radius}"
            )
        if self.kind == "points" and points.size and np.max(np.abs(points)) > MAX_INTERIOR_RADIUS:
            raise DomainViolationError(f"Interior points must have modulus <= {MAX_INTERIOR_RADIUS}.")
        if self.grid_density < 2:
            raise ValueError("grid_density must be at least 2.")

    @classmethod
    def disc(cls, radius: float, grid_density: int = 32) -> "InteriorRegion":
        return cls(kind="disc", radius=radius, grid_density=grid_density)

    @classmethod
    def from_points(cls, points) -> "InteriorRegion":
        return cls(kind="points", radius=0.0, points=np.asarray(points, dtype=complex))

    @property
    def bound_radius(self) -> float:
        if self.kind == "disc":
            return float(self.radius)
        return float(np.max(np.abs(self.points))) if self.points.size else 0.0

    def grid(self, refine: int = 1) -> np.ndarray:
        """Construction grid; ``refine=2`` gives the twice-as-fine verification grid."""
        if self.kind == "points":
            return np.array(self.points)
        if self.radius == 0:
            return np.array([0j])
        d = self.grid_density * refine
        # The maximum of |f - B| over a closed disc is attained on its rim; keep rings for audit.
        return polar_grid(self.radius, max(2, d // 4), 2 * d)
