"""Peak functions and holomorphic extensions of boundary data on a finite set K.

The peak function h is assembled from two Herglotz bumps: u1 rises to ``cap``
at K and u2 drops from M to 1 there. Both have closed-form holomorphic
completions, so h is available in the whole closed disc, not only on the grid.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import nnls
from tqdm import tqdm

from blab.config.settings import SEED
from blab.core.blaschke import FiniteBlaschkeProduct, blaschke_factor, multiply
from blab.core.moebius import check_closed_disc
from blab.core.sampling import BoundarySampleSet
from blab.core.transforms import BoundaryFunction, BoundaryGrid, analytic_completion
from blab.errors import (
    DomainViolationError,
    InfeasibleSpecError,
    NonConvergenceError,
    PropertyViolationError,
)

logger = logging.getLogger(__name__)

CAP_CEILING = 1e300
RE_TOL = 1e-9
MIN_TARGET = 1e-6
INTERIOR_SAMPLES = 500
DELTA_START = 0.5
PARTITION_EPSILON = 0.1
PHASE_SWEEPS = 20
MIN_WIDTH = 1e-6


class ExtensionMethod(Enum):
    PEAK = "peak"
    HERGLOTZ = "herglotz"


def chord(angle: float) -> float:
    """Straight-line distance between two circle points ``angle`` radians apart."""
    return 2.0 * np.sin(angle / 2.0)


def choose_parameters(epsilon: float) -> tuple[int, float]:
    """Smallest n >= 2 with sin(pi/n) < epsilon and smallest M = 2**j with (M-1)**(1/n) > 2 + 2/epsilon.

    Raises:
        InfeasibleSpecError: If epsilon is outside (0, 1) or M overflows a double.
    """
    if not 0.0 < epsilon < 1.0:
        raise InfeasibleSpecError(f"epsilon must lie in (0, 1), got {epsilon}")
    n = 2
    # sin(pi/6) rounds to just below 0.5; the margin keeps the inequality strict.
    while np.sin(np.pi / n) + 1e-12 >= epsilon:
        n += 1
    threshold = 2.0 + 2.0 / epsilon
    j = max(1, int(n * np.log2(threshold)) - 1)
    while j <= 1023:
        M = 2.0**j
        if (M - 1.0) ** (1.0 / n) > threshold:
            return n, M
        j += 1
    raise InfeasibleSpecError(f"No double-precision M satisfies the plateau condition for epsilon={epsilon}")


def default_cap(M: float, n: int, epsilon: float) -> float:
    """cap large enough that cap**(-1/n) <= epsilon/20, capped at 1e300."""
    log_needed = n * np.log10(20.0 / epsilon)
    if log_needed >= np.log10(CAP_CEILING):
        return CAP_CEILING
    return float(min(max(1e6 * M, 10.0**log_needed), CAP_CEILING))


def default_radii(K: BoundarySampleSet) -> tuple[float, float]:
    U = min(np.pi / 8, K.min_separation() / 3)
    return U, U / 4


@dataclass(frozen=True)
class PeakSpec:
    K: BoundarySampleSet
    U_radius: float
    V_radius: float
    epsilon: float
    n: int
    M: float
    cap: float

    def __post_init__(self):
        if not 0.0 < self.V_radius < self.U_radius < np.pi / 4:
            raise InfeasibleSpecError(
                f"Need 0 < V_radius < U_radius < pi/4, got V={self.V_radius}, U={self.U_radius}"
            )
        if not 0.0 < self.epsilon < 1.0:
            raise InfeasibleSpecError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.n < 2 or not np.sin(np.pi / self.n) < self.epsilon:
            raise InfeasibleSpecError(f"sin(pi/{self.n}) is not below epsilon={self.epsilon}")
        root = (self.M - 1.0) ** (1.0 / self.n) if self.M > 1 else 0.0
        if root <= 2.0 or not 2.0 / (root - 2.0) < self.epsilon:
            raise InfeasibleSpecError(f"M={self.M:.3e} violates the plateau condition for n={self.n}")
        if self.cap < 10.0 * self.M:
            raise InfeasibleSpecError(f"cap={self.cap:.3e} must be at least 10*M={10 * self.M:.3e}")

    @classmethod
    def from_epsilon(
        cls,
        K: BoundarySampleSet,
        epsilon: float,
        U_radius: float | None = None,
        V_radius: float | None = None,
        cap: float | None = None,
    ) -> "PeakSpec":
        n, M = choose_parameters(epsilon)
        U = default_radii(K)[0] if U_radius is None else U_radius
        V = U / 4 if V_radius is None else V_radius
        return cls(
            K=K,
            U_radius=U,
            V_radius=V,
            epsilon=epsilon,
            n=n,
            M=M,
            cap=default_cap(M, n, epsilon) if cap is None else cap,
        )

    @property
    def dist(self) -> float:
        """Distance between the closed disc outside U and the V-arcs of the circle."""
        return chord(self.U_radius) - chord(self.V_radius)


@dataclass(frozen=True)
class PeakBumps:
    """Closed-form parameters of both bumps.

    u1 = 1 + c * sum P_{1-sigma1}(z conj(zeta_k)) and u2 = 1 + (M-1) Re Q with
    Q = (1 - sum T_k + shift)/(1 + shift), where T_k is the Poisson bump of
    width sigma2 normalised to peak value 1 at zeta_k.
    """

    points: np.ndarray
    M: float
    c: float = 0.0
    sigma1: float = 1.0
    kappa: float = 0.0
    sigma2: float = 1.0
    shift: float = 0.0

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def mean_u1(self) -> float:
        """Exact circle average of u1 (each Poisson kernel has mass 1)."""
        return 1.0 + self.c * self.size

    @property
    def mean_u2(self) -> float:
        return 1.0 + (self.M - 1.0) * (1.0 - self.size * self.kappa + self.shift) / (1.0 + self.shift)

    def g1(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.size == 0:
            return np.ones(z.shape, dtype=complex)
        zeta = self.points[None, :]
        zz = z.ravel()[:, None]
        herglotz = (zeta + (1.0 - self.sigma1) * zz) / ((zeta - zz) + self.sigma1 * zz)
        return (1.0 + self.c * herglotz.sum(axis=1)).reshape(z.shape)

    def g2(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.size == 0:
            return np.full(z.shape, self.M, dtype=complex)
        zeta = self.points[None, :]
        zz = z.ravel()[:, None]
        rho = 1.0 - self.sigma2
        denom = (zeta - zz) + self.sigma2 * zz
        bumps = self.kappa * (zeta + rho * zz) / denom
        complement = 2.0 * rho * (zeta - zz) / ((1.0 + rho) * denom)
        nearest = np.argmin(np.abs(zeta - zz), axis=1)
        rows = np.arange(zz.shape[0])
        others = np.where(np.arange(self.size)[None, :] == nearest[:, None], 0.0, bumps).sum(axis=1)
        Q = (complement[rows, nearest] - others + self.shift) / (1.0 + self.shift)
        # Re Q >= 0 holds exactly; clip rounding below zero.
        Q = np.maximum(Q.real, 0.0) + 1j * Q.imag
        return (1.0 + (self.M - 1.0) * Q).reshape(z.shape)

    def peak(self, z: np.ndarray, n: int) -> np.ndarray:
        """h = h1/(h1+h2) evaluated as 1/(1 + exp((log g2 - log g1)/n))."""
        return 1.0 / (1.0 + np.exp((np.log(self.g2(z)) - np.log(self.g1(z))) / n))


def bump_parameters(spec: PeakSpec) -> PeakBumps:
    """Bump widths and weights meeting both circle-average bounds.

    The excess mass is min(chord(U) V/(4U), dist/4): linear in V_radius for
    narrow V and always below dist/2.

    Raises:
        InfeasibleSpecError: If a bump is wider than the V-arcs.
    """
    points = spec.K.points
    J = points.size
    if J == 0:
        return PeakBumps(points=points, M=spec.M)
    excess = min(chord(spec.U_radius) * spec.V_radius / (4 * spec.U_radius), spec.dist / 4)
    if excess <= 0:
        raise InfeasibleSpecError("The U and V neighbourhoods leave no room for the bumps.")
    c = excess / J
    sigma1 = 2 * c / (spec.cap - 1.0 + c)
    kappa = excess / (J * (spec.M - 1.0))
    sigma2 = 2 * kappa / (1.0 + kappa)
    if sigma1 >= spec.V_radius or sigma2 >= spec.V_radius:
        raise InfeasibleSpecError(
            f"Bump widths ({sigma1:.3e}, {sigma2:.3e}) do not fit inside V_radius={spec.V_radius}"
        )
    shift = 0.0
    if J > 1:
        sep = spec.K.min_separation()
        shift = (J - 1) * sigma2**2 / (4 * (1.0 - sigma2) * np.sin(sep / 4) ** 2)
    return PeakBumps(points=points, M=spec.M, c=c, sigma1=sigma1, kappa=kappa, sigma2=sigma2, shift=shift)


def build_bump_u1(spec: PeakSpec, grid: BoundaryGrid) -> BoundaryFunction:
    """Samples of u1 = 1 + c * sum_k P(., zeta_k), the Poisson kernels having width sigma1.

    u1 >= 1 and reaches about ``cap`` at each point of K. Outside the V-arcs
    it is 1 only up to the Poisson tails, which add at most
    J * c * sigma1 / (2 sin(V/2)**2).
    """
    return BoundaryFunction(grid=grid, values=bump_parameters(spec).g1(grid.points).real)


def build_bump_u2(spec: PeakSpec, grid: BoundaryGrid) -> BoundaryFunction:
    """Samples of u2 = 1 + (M-1) Re Q, with values in [1, M].

    Outside the V-arcs u2 falls short of M by at most (M-1) * J * sigma2 / sin(V/2).
    At a point of K it is exactly 1 when K is a singleton; otherwise the
    tails of the other bumps and ``shift`` lift it above 1 by a relative
    amount of order sigma2.
    """
    return BoundaryFunction(grid=grid, values=bump_parameters(spec).g2(grid.points).real)


def nth_root_in_cone(g: BoundaryFunction, n: int) -> BoundaryFunction:
    """Principal n-th root of samples in the half-plane Re >= 1.

    Raises:
        DomainViolationError: If a sample has Re < 1 - 1e-9.
    """
    values = np.asarray(g.values, dtype=complex)
    if values.size and float(np.min(values.real)) < 1.0 - RE_TOL:
        raise DomainViolationError(
            f"nth_root_in_cone needs Re >= 1, got min Re = {float(np.min(values.real)):.12f}"
        )
    return BoundaryFunction(grid=g.grid, values=np.exp(np.log(values) / n))


def _resolved(width: float, N: int) -> bool:
    """Whether a Poisson bump of this width is captured by an N-point FFT."""
    return width > 0 and (1.0 - width) ** (N // 2) < 1e-16


@dataclass(frozen=True)
class PeakFunction:
    spec: PeakSpec
    boundary: BoundaryFunction
    bumps: PeakBumps
    diagnostics: dict = field(default_factory=dict)

    def __call__(self, z):
        check_closed_disc(z)
        zz = np.asarray(z, dtype=complex)
        values = self.bumps.peak(zz, self.spec.n)
        return complex(values) if np.ndim(z) == 0 else values


def _check(condition: bool, name: str, message: str) -> None:
    if not condition:
        raise PropertyViolationError(name, message)


def build_peak_function(spec: PeakSpec, grid: BoundaryGrid) -> PeakFunction:
    """Assemble h = h1/(h1 + h2) on the grid and verify its four peak properties.

    Raises:
        PropertyViolationError: Naming the first property that fails.
    """
    bumps = bump_parameters(spec)
    pts = grid.points
    if bumps.size == 0 or (_resolved(bumps.sigma1, grid.N) and _resolved(bumps.sigma2, grid.N)):
        g1 = analytic_completion(build_bump_u1(spec, grid)).values
        g2 = analytic_completion(build_bump_u2(spec, grid)).values
        completion = "fft"
    else:
        g1, g2 = bumps.g1(pts), bumps.g2(pts)
        completion = "closed"
    h1 = nth_root_in_cone(BoundaryFunction(grid=grid, values=g1), spec.n).values
    h2 = nth_root_in_cone(BoundaryFunction(grid=grid, values=g2), spec.n).values
    h = h1 / (h1 + h2)

    far = spec.K.angular_distance(pts) >= spec.U_radius
    at_K = bumps.peak(spec.K.points, spec.n)
    diagnostics = {
        "peak_defect": float(np.max(np.abs(at_K - 1.0))) if at_K.size else 0.0,
        "off_U_max": float(np.max(np.abs(h[far]))) if np.any(far) else 0.0,
        "im_max": float(np.max(np.abs(h.imag))),
        "re_min": float(np.min(h.real)),
        "modulus_max": float(np.max(np.abs(h))),
        "mean_u1": bumps.mean_u1,
        "mean_u2": bumps.mean_u2,
        "completion": completion,
    }
    _check(diagnostics["re_min"] >= -RE_TOL, "c", f"min Re h = {diagnostics['re_min']:.3e}")
    _check(diagnostics["im_max"] < spec.epsilon, "d", f"max |Im h| = {diagnostics['im_max']:.3e}")
    _check(diagnostics["off_U_max"] < spec.epsilon, "a", f"max |h| off U = {diagnostics['off_U_max']:.3e}")
    _check(
        diagnostics["peak_defect"] < spec.epsilon / 10,
        "b",
        f"peak defect {diagnostics['peak_defect']:.3e} >= epsilon/10",
    )
    _check(diagnostics["modulus_max"] <= 1.0 + RE_TOL, "modulus", f"max |h| = {diagnostics['modulus_max']:.3e}")
    logger.debug(f"Peak function for {bumps.size} points: {diagnostics}")
    return PeakFunction(spec=spec, boundary=BoundaryFunction(grid=grid, values=h), bumps=bumps, diagnostics=diagnostics)


@dataclass(frozen=True)
class BallExtension:
    """A holomorphic function on the closed disc extending data given on K."""

    method: ExtensionMethod
    evaluator: Callable
    boundary: BoundaryFunction
    diagnostics: dict = field(default_factory=dict)

    def __call__(self, z):
        check_closed_disc(z)
        zz = np.asarray(z, dtype=complex)
        values = self.evaluator(np.atleast_1d(zz)).reshape(zz.shape)
        return complex(values) if np.ndim(z) == 0 else values


def _interior_samples(count: int = INTERIOR_SAMPLES, seed: int = SEED) -> np.ndarray:
    rng = np.random.default_rng(seed)
    radius = 0.999 * np.sqrt(rng.uniform(size=count))
    return radius * np.exp(2j * np.pi * rng.uniform(size=count))


def _measure(evaluator, points, targets, grid, U, far_points=None, reference=None, seed: int = SEED) -> dict:
    """K residual, far-field residual against ``reference`` (default 1) and sup modulus."""
    pts = grid.points
    K = BoundarySampleSet(points=points)
    far = pts[K.angular_distance(pts) >= U]
    if far_points is not None:
        far = np.concatenate([far, np.asarray(far_points, dtype=complex).ravel()])
    ref = (lambda z: np.ones(z.shape, dtype=complex)) if reference is None else reference
    interior = _interior_samples(seed=seed)
    on_grid = evaluator(pts)
    return {
        "k_residual": float(np.max(np.abs(evaluator(points) - targets))) if points.size else 0.0,
        "far_max": float(np.max(np.abs(evaluator(far) - ref(far)))) if far.size else 0.0,
        "sup_modulus": float(max(np.max(np.abs(on_grid)), np.max(np.abs(evaluator(interior))))),
    }


def _passes(diag: dict, epsilon: float) -> bool:
    return diag["k_residual"] < epsilon and diag["far_max"] < epsilon and diag["sup_modulus"] <= 1.0 + RE_TOL


def _score(diag: dict) -> float:
    return max(diag["k_residual"], diag["far_max"])


def _singleton_peaks(K: BoundarySampleSet, spec: PeakSpec, grid: BoundaryGrid) -> list[PeakFunction]:
    n, M = choose_parameters(PARTITION_EPSILON)
    return [
        build_peak_function(
            PeakSpec(
                K=BoundarySampleSet(points=[z]),
                U_radius=spec.U_radius,
                V_radius=spec.V_radius,
                epsilon=PARTITION_EPSILON,
                n=n,
                M=M,
                cap=default_cap(M, n, PARTITION_EPSILON),
            ),
            grid,
        )
        for z in K.points
    ]


def _boundary_samples(K: BoundarySampleSet, grid: BoundaryGrid) -> np.ndarray:
    """Grid points plus K and points approaching K from both sides down to 1e-14."""
    if K.size == 0:
        return grid.points
    offsets = 10.0 ** -np.arange(1, 15)
    offsets = np.concatenate([-offsets, [0.0], offsets])
    near = (K.points[:, None] * np.exp(1j * offsets[None, :])).ravel()
    return np.concatenate([grid.points, near])


@dataclass(frozen=True)
class LogExtension:
    """Holomorphic F = sum_j c_j h_j / sum_k h_k - eta with Re F <= 0 on the closed disc.

    The h_j are singleton peak functions; the c_j solve F(z_j) + eta = log(phi_j)
    exactly, and eta is the smallest shift making the sampled Re F non-positive.
    Re F and Im F are harmonic, so both sampled bounds hold on the whole disc.
    """

    peaks: list[PeakFunction]
    coefficients: np.ndarray
    eta: float
    m: float

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if not self.peaks:
            return np.zeros(z.shape, dtype=complex)
        return _partition(self.peaks, z) @ self.coefficients - self.eta


def _partition(peaks: list[PeakFunction], z: np.ndarray) -> np.ndarray:
    H = np.stack([p.bumps.peak(z, p.spec.n) for p in peaks], axis=-1)
    return H / H.sum(axis=-1, keepdims=True)


def extend_logarithm(K: BoundarySampleSet, logs: np.ndarray, spec: PeakSpec, grid: BoundaryGrid) -> LogExtension:
    """Extend the values ``logs`` (Re <= 0) on K to F with Re F <= 0 and |Im F| <= m."""
    if K.size == 0:
        return LogExtension(peaks=[], coefficients=np.zeros(0, dtype=complex), eta=0.0, m=0.0)
    peaks = _singleton_peaks(K, spec, grid)
    coefficients = np.linalg.solve(_partition(peaks, K.points), logs.astype(complex))
    samples = _boundary_samples(K, grid)
    raw = _partition(peaks, samples) @ coefficients
    eta = max(0.0, float(np.max(raw.real))) + RE_TOL
    m = float(np.max(np.abs(raw.imag)))
    return LogExtension(peaks=peaks, coefficients=coefficients, eta=eta, m=m)


def _extend_peak(K, targets, spec: PeakSpec, epsilon, grid, delta, far_points, seed: int = SEED) -> BallExtension:
    if targets.size and np.min(np.abs(targets)) < MIN_TARGET:
        raise DomainViolationError(
            "Targets below 1e-6 in modulus have no logarithm; perturb them away from zero first."
        )
    logs = np.log(targets.astype(complex)) if targets.size else np.zeros(0, dtype=complex)
    logs = np.minimum(logs.real, 0.0) + 1j * logs.imag
    phi0 = extend_logarithm(K, logs, spec, grid)
    m = phi0.m
    best: BallExtension | None = None
    d = DELTA_START if delta is None else delta
    with tqdm(desc="Peak extension delta", unit="delta", leave=False) as progress:
        while True:
            try:
                n, M = choose_parameters(d)
                h = build_peak_function(
                    PeakSpec(
                        K=K,
                        U_radius=spec.U_radius,
                        V_radius=spec.V_radius,
                        epsilon=d,
                        n=n,
                        M=M,
                        cap=default_cap(M, n, d),
                    ),
                    grid,
                )
            except (InfeasibleSpecError, PropertyViolationError) as exc:
                if delta is not None:
                    raise
                logger.debug(f"Stopping delta search at {d:.3e}: {exc}")
                break

            def evaluator(z, h=h, d=d):
                z = np.asarray(z, dtype=complex)
                return np.exp(h.bumps.peak(z, h.spec.n) * phi0(z) - d * m)

            diag = _measure(evaluator, K.points, targets, grid, spec.U_radius, far_points, seed=seed)
            diag.update(
                delta_used=d,
                m_used=m,
                eta=phi0.eta,
                peak_defect=h.diagnostics["peak_defect"],
                off_U_max=h.diagnostics["off_U_max"],
                im_max=h.diagnostics["im_max"],
                re_min=h.diagnostics["re_min"],
            )
            ext = BallExtension(ExtensionMethod.PEAK, evaluator, BoundaryFunction(grid, evaluator(grid.points)), diag)
            if delta is not None or _passes(diag, epsilon):
                logger.debug(f"Peak extension accepted at delta={d:.3e}: {diag}")
                return ext
            if best is None or _score(diag) < _score(best.diagnostics):
                best = ext
            progress.update()
            d /= 2
    raise NonConvergenceError(
        f"Peak extension missed epsilon={epsilon:.3e} before the delta search hit double precision",
        best_error=_score(best.diagnostics) if best else np.inf,
        best=best,
    )


def _phase_zero(beta: float, width: float) -> complex:
    """Zero a' = 1 - width*e^{i chi} whose squared normalised factor takes the value e^{i beta} at 1."""
    chi = beta / 4
    for _ in range(8):
        chi = (beta + 2 * np.angle(1.0 - width * np.exp(1j * chi))) / 4
    return 1.0 - width * np.exp(1j * chi)


def _phase_factor(zeta: complex, beta: float, width: float) -> FiniteBlaschkeProduct:
    factor = blaschke_factor(zeta * _phase_zero(beta, width), normalized=True)
    return multiply(factor, factor)


def herglotz_candidate(points: np.ndarray, targets: np.ndarray, width: float) -> tuple[Callable, dict]:
    """g0 = B_phase * exp(F) with F = -sum alpha_k (zeta_k + rho z)/(zeta_k - rho z), rho = 1 - width.

    alpha >= 0 solves the modulus conditions by NNLS; B_phase is a product of
    squared normalised factors fixing the arguments, updated by Jacobi sweeps.
    """
    rho = 1.0 - width
    zeta = points
    denom = (zeta[:, None] - zeta[None, :]) + width * zeta[None, :]
    poisson = ((1.0 - rho**2) / np.abs(denom) ** 2).real
    log_modulus = np.minimum(np.log(np.abs(targets)), 0.0)
    alpha, nnls_residual = nnls(poisson, -log_modulus)

    def F(z):
        zz = np.asarray(z, dtype=complex).ravel()[:, None]
        terms = (zeta[None, :] + rho * zz) / ((zeta[None, :] - zz) + width * zz)
        return -(terms @ alpha)

    F_K = F(zeta)
    factors: list[FiniteBlaschkeProduct | None] = [None] * zeta.size
    for _ in range(PHASE_SWEEPS):
        values = [f(zeta) if f is not None else np.ones(zeta.size, dtype=complex) for f in factors]
        new = []
        for j in range(zeta.size):
            others = np.prod([values[k][j] for k in range(zeta.size) if k != j]) if zeta.size > 1 else 1.0
            beta = float(np.angle(targets[j] / (np.exp(F_K[j]) * others)))
            new.append(_phase_factor(zeta[j], beta, width) if abs(beta) > 1e-12 else None)
        factors = new
    phase = FiniteBlaschkeProduct(1 + 0j, ())
    for f in factors:
        if f is not None:
            phase = multiply(phase, f)

    def evaluator(z):
        z = np.asarray(z, dtype=complex)
        return (phase(z.ravel()) * np.exp(F(z))).reshape(z.shape)

    return evaluator, {"F": F, "alpha": alpha, "nnls_residual": float(nnls_residual), "phase_degree": phase.degree}


def _extend_herglotz(K, targets, spec: PeakSpec, epsilon, grid, far_points, seed: int = SEED) -> BallExtension:
    eta = epsilon / 4
    moduli = np.abs(targets)
    small = moduli < eta
    if np.any(small):
        logger.warning(f"Raising {int(np.sum(small))} target(s) below {eta:.3e} in modulus to {eta:.3e}")
    directions = np.where(moduli > 0, targets / np.where(moduli > 0, moduli, 1.0), 1.0)
    adjusted = np.where(small, eta * directions, targets)

    best: BallExtension | None = None
    width = min(0.05, spec.U_radius / 2)
    while width >= MIN_WIDTH:
        evaluator, extra = herglotz_candidate(K.points, adjusted, width)
        diag = _measure(evaluator, K.points, targets, grid, spec.U_radius, far_points, seed=seed)
        diag.update(
            width=width,
            clamped=int(np.sum(small)),
            nnls_residual=extra["nnls_residual"],
            phase_degree=extra["phase_degree"],
        )
        if _resolved(width, grid.N):
            # |B_phase| = 1 on the circle, so Re F is log|g0| there and its completion must be F.
            F_grid = extra["F"](grid.points)
            completion = analytic_completion(BoundaryFunction(grid, F_grid.real)).values
            diag["completion_defect"] = float(np.max(np.abs(completion - F_grid)))
        ext = BallExtension(ExtensionMethod.HERGLOTZ, evaluator, BoundaryFunction(grid, evaluator(grid.points)), diag)
        if _passes(diag, epsilon):
            logger.debug(f"Herglotz extension accepted at width {width:.3e}: {diag}")
            return ext
        if best is None or _score(diag) < _score(best.diagnostics):
            best = ext
        width /= 2
    raise NonConvergenceError(
        f"Herglotz extension missed epsilon={epsilon:.3e} down to width {MIN_WIDTH}",
        best_error=_score(best.diagnostics) if best else np.inf,
        best=best,
    )


def extend_unit_ball(
    K: BoundarySampleSet,
    spec: PeakSpec,
    grid: BoundaryGrid,
    method: ExtensionMethod = ExtensionMethod.PEAK,
    delta: float | None = None,
    far_points=None,
    epsilon: float | None = None,
    seed: int = SEED,
) -> BallExtension:
    """A holomorphic g with |g| <= 1, g close to the targets on K and close to 1 away from K.

    ``spec`` supplies the U/V geometry and, unless ``epsilon`` overrides it,
    the residual target.

    PEAK (default): phi0 = extend_logarithm(log(phi)) has Re <= 0 and
    |Im| <= m; g = exp(-delta*m) * exp(h*phi0) with h the peak function of K
    for cone parameter delta, so |g| <= 1. delta starts at 1/2 and halves
    until both residuals pass; pass ``delta`` to force one value (returned
    without acceptance).

    HERGLOTZ (opt-in): a smooth variant with wide features, see
    :func:`herglotz_candidate`; widths halve until both
    residuals pass. Extra far-field points (e.g. an interior set) may be
    passed as ``far_points``; ``seed`` fixes the interior points where the
    sup norm is sampled.
    """
    targets = K.require_ball_targets()
    target_eps = spec.epsilon if epsilon is None else epsilon
    if isinstance(method, str):
        method = ExtensionMethod(method)
    if method == ExtensionMethod.PEAK:
        return _extend_peak(K, targets, spec, target_eps, grid, delta, far_points, seed=seed)
    if method == ExtensionMethod.HERGLOTZ:
        return _extend_herglotz(K, targets, spec, target_eps, grid, far_points, seed=seed)
    raise ValueError(f"Unsupported extension method: {method}")


def extend_relative(
    K: BoundarySampleSet,
    f: FiniteBlaschkeProduct,
    spec: PeakSpec,
    grid: BoundaryGrid,
    method: ExtensionMethod = ExtensionMethod.PEAK,
    far_points=None,
    epsilon: float | None = None,
    seed: int = SEED,
) -> BallExtension:
    """g = f * g0 where g0 extends phi_j / f(z_j); close to f away from K."""
    targets = K.require_ball_targets()
    relative = targets / f(K.points) if K.size else targets
    g0 = extend_unit_ball(
        K.with_targets(relative), spec, grid, method=method, far_points=far_points, epsilon=epsilon, seed=seed
    )

    def evaluator(z):
        z = np.asarray(z, dtype=complex)
        return f(z) * g0.evaluator(z)

    diag = _measure(evaluator, K.points, targets, grid, spec.U_radius, far_points, reference=f, seed=seed)
    diag.update({k: v for k, v in g0.diagnostics.items() if k not in diag})
    diag["relative_far_max"] = g0.diagnostics["far_max"]
    return BallExtension(g0.method, evaluator, BoundaryFunction(grid, evaluator(grid.points)), diag)
