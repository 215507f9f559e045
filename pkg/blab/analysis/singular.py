"""Zero-free inner surrogates S = exp((B+1)/(B-1)) and their simultaneous approximation pipelines."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from blab.analysis.peak import ExtensionMethod
from blab.analysis.simultaneous import DiscPlan, finish_disc, prepare_disc, simultaneous_circle
from blab.config.settings import SEED
from blab.core.blaschke import FiniteBlaschkeProduct
from blab.core.moebius import check_closed_disc
from blab.core.sampling import BoundarySampleSet, InteriorRegion
from blab.core.transforms import BoundaryGrid
from blab.errors import DomainViolationError, NonConvergenceError, StageFailureError

logger = logging.getLogger(__name__)

PATH_STEPS = 64
PATH_REFINE = 4
ROUND_TRIP_TOL = 1e-8
ZERO_TOL = 1e-12
MIN_TARGET = 1e-6
SINGULAR_TOL = 1e-9
ON_CIRCLE = 1.0 - 1e-12
DEGENERATE_DISTANCE = 1e-6
MIN_DELTA = 1e-9


def cayley_exp(w):
    """w -> exp((w+1)/(w-1)), mapping the disc into the closed unit disc minus 0."""
    w = np.asarray(w, dtype=complex)
    return np.exp((w + 1.0) / (w - 1.0))


@dataclass(frozen=True)
class SingularInnerSurrogate:
    B: FiniteBlaschkeProduct
    err_K: float | None = None
    err_L: float | None = None
    r_used: float | None = None
    budget_log: list = field(default_factory=list)

    def __call__(self, z):
        return surrogate_eval(self, z)


def surrogate_eval(S: SingularInnerSurrogate, z):
    """exp((B(z)+1)/(B(z)-1)) on the closed disc.

    Raises:
        DomainViolationError: On the circle where B(z) is within 1e-9 of 1.
    """
    check_closed_disc(z)
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    values = S.B(zz)
    on_circle = np.abs(zz) >= ON_CIRCLE
    if np.any(on_circle & (np.abs(values - 1.0) < SINGULAR_TOL)):
        raise DomainViolationError("Evaluation point is a singular direction: B(z) = 1 on the circle.")
    out = cayley_exp(values)
    return complex(out[0]) if np.ndim(z) == 0 else out.reshape(np.shape(z))


def _cayley(log_values: np.ndarray) -> np.ndarray:
    return (log_values + 1.0) / (log_values - 1.0)


@dataclass(frozen=True)
class CayleyLog:
    """f0 = (log f + 1)/(log f - 1) with log f continued along rays from the origin."""

    f: Callable
    steps: int = PATH_STEPS

    def log(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        path = np.linspace(0.0, 1.0, self.steps + 1)[None, :] * z.ravel()[:, None]
        values = np.broadcast_to(np.asarray(self.f(path.ravel()), dtype=complex), path.ravel().shape)
        values = values.reshape(path.shape)
        if np.min(np.abs(values)) < ZERO_TOL:
            raise DomainViolationError("cayley_log needs a zero-free function; |f| < 1e-12 on a path.")
        phase = np.unwrap(np.angle(values), axis=1)[:, -1]
        return (np.log(np.abs(values[:, -1])) + 1j * phase).reshape(z.shape)

    def __call__(self, z):
        scalar = np.ndim(z) == 0
        out = _cayley(self.log(z))
        return complex(out[0]) if scalar else out.reshape(np.shape(z))


def cayley_log(f: Callable, grid) -> CayleyLog:
    """f0 with exp((f0+1)/(f0-1)) = f and |f0| <= 1, checked on ``grid``.

    The logarithm is continued along rays in PATH_STEPS steps and compared
    with a PATH_REFINE times finer continuation; a fast-winding f whose phase
    moves by more than pi between steps lands on a different branch there.

    Raises:
        DomainViolationError: If f vanishes or exceeds 1 in modulus on the grid.
        NonConvergenceError: If the round trip exp((f0+1)/(f0-1)) = f or the
            finer continuation misses by more than 1e-8.
    """
    grid = np.asarray(grid, dtype=complex)
    values = np.broadcast_to(np.asarray(f(grid), dtype=complex), grid.shape)
    if grid.size and np.min(np.abs(values)) < ZERO_TOL:
        raise DomainViolationError("cayley_log needs a zero-free function; |f| < 1e-12 on the grid.")
    if grid.size and np.max(np.abs(values)) > 1.0 + 1e-9:
        raise DomainViolationError("cayley_log needs |f| <= 1 on the grid.")
    f0 = CayleyLog(f)
    if grid.size:
        f0_grid = f0(grid)
        round_trip = float(np.max(np.abs(cayley_exp(f0_grid) - values)))
        branch = float(np.max(np.abs(CayleyLog(f, steps=PATH_STEPS * PATH_REFINE)(grid) - f0_grid)))
        logger.debug(f"cayley_log on {grid.size} points: round trip {round_trip:.3e}, branch defect {branch:.3e}")
        if max(round_trip, branch) > ROUND_TRIP_TOL:
            raise NonConvergenceError(
                f"cayley_log is unstable on the grid: round trip {round_trip:.3e}, branch defect {branch:.3e}",
                best_error=max(round_trip, branch),
                best=f0,
            )
    return f0


def _continuity_delta(values: np.ndarray, epsilon: float) -> tuple[float, float]:
    """delta0 = half the distance of ``values`` to 1; delta halves from delta0 until
    delta * sup|E'| over the delta-discs around ``values`` is below epsilon/2.

    Raises:
        DomainViolationError: If ``values`` come within 1e-6 of 1.
    """
    distance = float(np.min(np.abs(values - 1.0))) if values.size else 1.0
    if distance < DEGENERATE_DISTANCE:
        raise DomainViolationError(
            f"Targets come within {distance:.3e} of the essential singularity at 1."
        )
    delta0 = distance / 2
    if values.size == 0:
        return delta0, delta0 / 2
    angles = np.exp(2j * np.pi * np.arange(16) / 16)
    delta = delta0
    while delta > MIN_DELTA:
        offsets = np.concatenate([[0j], 0.5 * delta * angles, delta * angles])
        hull = (values[:, None] + offsets[None, :]).ravel()
        slope = float(np.max(np.abs(cayley_exp(hull) * (-2.0) / (hull - 1.0) ** 2)))
        if delta * slope < epsilon / 2:
            return delta0, delta
        delta /= 2
    raise DomainViolationError("The exponential Cayley map is too steep near the targets for this epsilon.")


def _transformed_targets(targets: np.ndarray) -> np.ndarray:
    logs = np.log(targets.astype(complex))
    logs = np.minimum(logs.real, 0.0) + 1j * logs.imag
    return _cayley(logs)


def _verify(S: SingularInnerSurrogate, K, targets, f, L, epsilon, r=None) -> tuple[float, float]:
    points = K.points if r is None else r * K.points
    err_K = float(np.max(np.abs(surrogate_eval(S, points) - targets))) if K.size else 0.0
    check = L.grid(refine=2)
    f_vals = np.broadcast_to(np.asarray(f(check), dtype=complex), check.shape)
    err_L = float(np.max(np.abs(surrogate_eval(S, check) - f_vals))) if check.size else 0.0
    return err_K, err_L


def simultaneous_singular_circle(
    K: BoundarySampleSet, f: Callable, L: InteriorRegion, epsilon: float, seed: int = SEED
) -> SingularInnerSurrogate:
    """S close to the unimodular targets on K and to the zero-free f on L."""
    targets = K.require_unimodular_targets()
    f0 = cayley_log(f, L.grid(refine=2))
    phi0 = _transformed_targets(targets)
    phi0 = phi0 / np.abs(phi0) if phi0.size else phi0
    reference = np.concatenate([phi0, f0(L.grid(refine=2))])
    delta0, delta = _continuity_delta(reference, epsilon)
    logger.debug(f"Singular circle: delta0={delta0:.3e}, delta={delta:.3e}")
    inner = simultaneous_circle(K.with_targets(phi0), f0, L, delta, seed=seed)
    log = list(inner.budget_log) + [("cayley continuity", epsilon, delta)]
    S = SingularInnerSurrogate(B=inner.B)
    err_K, err_L = _verify(S, K, targets, f, L, epsilon)
    log += [("singular K", epsilon, err_K), ("singular L", epsilon, err_L)]
    if not (err_K < epsilon and err_L < epsilon):
        raise StageFailureError("singular-circle", f"err_K={err_K:.3e}, err_L={err_L:.3e}", log)
    logger.info(f"singular circle pipeline: degree {inner.B.degree}")
    return SingularInnerSurrogate(B=inner.B, err_K=err_K, err_L=err_L, budget_log=log)


def simultaneous_singular_disc(
    K: BoundarySampleSet,
    f: Callable,
    L: InteriorRegion,
    epsilon: float,
    method: ExtensionMethod = ExtensionMethod.PEAK,
    grid: BoundaryGrid | None = None,
    seed: int = SEED,
) -> tuple[float, Callable[[float | None], SingularInnerSurrogate]]:
    """r0 and a builder r -> S whose dilate S_r is close to the targets on K and S to f on L.

    Raises:
        DomainViolationError: If a target has modulus below 1e-6.
    """
    targets = K.require_ball_targets()
    if targets.size and np.min(np.abs(targets)) < MIN_TARGET:
        raise DomainViolationError("Targets below 1e-6 in modulus cannot be reached by a zero-free dilate.")
    f0 = cayley_log(f, L.grid(refine=2))
    phi0 = _transformed_targets(targets)
    reference = np.concatenate([phi0, f0(L.grid(refine=2))])
    _, delta = _continuity_delta(reference, epsilon)
    plan: DiscPlan = prepare_disc(K.with_targets(phi0), f0, L, delta, method=method, grid=grid, seed=seed)

    def build(r: float | None = None) -> SingularInnerSurrogate:
        inner = finish_disc(plan, r)
        S = SingularInnerSurrogate(B=inner.B)
        err_K, err_L = _verify(S, K, targets, f, L, epsilon, r=inner.r_used)
        log = list(inner.budget_log) + [("singular K", epsilon, err_K), ("singular L", epsilon, err_L)]
        if not (err_K < epsilon and err_L < epsilon):
            raise StageFailureError("singular-disc", f"err_K={err_K:.3e}, err_L={err_L:.3e}", log)
        logger.info(f"singular disc pipeline: r={inner.r_used:.12f}, degree {inner.B.degree}")
        return SingularInnerSurrogate(B=inner.B, err_K=err_K, err_L=err_L, r_used=inner.r_used, budget_log=log)

    return plan.r0, build
