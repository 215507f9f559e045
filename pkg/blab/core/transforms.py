"""Harmonic analysis on a uniform boundary grid: Poisson extension and conjugates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from blab.errors import DomainViolationError
from blab.utils.iter_utils import chunked

POISSON_CHUNK = 512


@dataclass(frozen=True)
class BoundaryGrid:
    N: int = 4096

    def __post_init__(self):
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError(f"Grid size must be a power of two >= 8, got {self.N}")

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.N) / self.N

    @property
    def points(self) -> np.ndarray:
        return np.exp(1j * self.angles)


@dataclass(frozen=True)
class BoundaryFunction:
    grid: BoundaryGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values).ravel()
        if values.shape[0] != self.grid.N:
            raise ValueError(f"Expected {self.grid.N} samples, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Boundary samples must be finite (no NaN/Inf).")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: BoundaryGrid, func) -> "BoundaryFunction":
        return cls(grid=grid, values=func(grid.angles))

    @property
    def is_real(self) -> bool:
        if not np.iscomplexobj(self.values):
            return True
        scale = max(1.0, float(np.max(np.abs(self.values))))
        return float(np.max(np.abs(self.values.imag))) <= 1e-12 * scale

    def mean(self) -> complex | float:
        return self.values.mean()


def _require_real(u: BoundaryFunction) -> np.ndarray:
    if not u.is_real:
        raise ValueError("This transform expects real-valued boundary samples.")
    return np.real(u.values).astype(float)


def poisson_extend(u: BoundaryFunction, z):
    """Poisson integral of the boundary samples at interior point(s) ``z``.

    The trapezoidal kernel sum is normalised by its own total weight, so
    constants are reproduced exactly and the value is a convex combination
    of the samples (discrete maximum principle).

    Raises:
        DomainViolationError: If some |z| >= 1.
    """
    scalar = np.ndim(z) == 0
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    if zz.size and np.max(np.abs(zz)) >= 1.0:
        raise DomainViolationError("Poisson extension is only defined inside the open disc.")
    nodes = u.grid.points
    out = np.empty(zz.shape, dtype=complex if np.iscomplexobj(u.values) else float)
    flat_in = zz.ravel()
    flat_out = out.ravel()
    offset = 0
    for block in chunked(flat_in, POISSON_CHUNK):
        kernel = (1.0 - np.abs(block) ** 2)[:, None] / np.abs(nodes[None, :] - block[:, None]) ** 2
        flat_out[offset : offset + block.shape[0]] = (kernel @ u.values) / kernel.sum(axis=1)
        offset += block.shape[0]
    out = flat_out.reshape(zz.shape)
    return out[0].item() if scalar else out


def conjugate_multiplier(N: int) -> np.ndarray:
    """Fourier multiplier -i*sign(k); zero at k = 0 and at the Nyquist index."""
    k = np.fft.fftfreq(N, d=1.0 / N)
    mult = -1j * np.sign(k)
    mult[N // 2] = 0.0
    return mult


def harmonic_conjugate(u: BoundaryFunction) -> BoundaryFunction:
    """Discrete harmonic conjugate, normalised to vanish at the origin."""
    values = _require_real(u)
    spectrum = np.fft.fft(values) * conjugate_multiplier(u.grid.N)
    return BoundaryFunction(grid=u.grid, values=np.fft.ifft(spectrum).real)


def analytic_completion(u: BoundaryFunction) -> BoundaryFunction:
    """Boundary samples of the holomorphic function u + i*conj(u)."""
    values = _require_real(u)
    return BoundaryFunction(grid=u.grid, values=values + 1j * harmonic_conjugate(u).values)


def taylor_coefficients(f: BoundaryFunction) -> np.ndarray:
    """Coefficients a_0..a_{N/2} of the analytic part of the samples."""
    N = f.grid.N
    spectrum = np.fft.fft(f.values) / N
    return spectrum[: N // 2 + 1]


def holomorphic_eval(coeffs: np.ndarray, z):
    """Evaluate sum a_k z^k on the closed disc."""
    zz = np.asarray(z, dtype=complex)
    if zz.size and np.max(np.abs(zz)) > 1.0 + 1e-12:
        raise DomainViolationError("Holomorphic extension is evaluated on the closed disc only.")
    return npoly.polyval(zz, coeffs)


def cauchy_riemann_defect(func, points: np.ndarray, h: float = 1e-4) -> float:
    """max |d/d(conj z) func| at ``points``, by central differences with step h."""
    p = np.asarray(points, dtype=complex)
    fx = (func(p + h) - func(p - h)) / (2 * h)
    fy = (func(p + 1j * h) - func(p - 1j * h)) / (2 * h)
    return float(np.max(np.abs(0.5 * (fx + 1j * fy))))
