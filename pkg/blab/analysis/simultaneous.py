"""Simultaneous approximation on a boundary set K and an interior set L by one Blaschke product."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from blab.analysis.approx import caratheodory_approximate, fisher_interpolate
from blab.analysis.peak import BallExtension, ExtensionMethod, PeakSpec, extend_relative
from blab.config.settings import DISC_BUDGET_K, DISC_BUDGET_L, GRID_N, SEED
from blab.core.blaschke import (
    FiniteBlaschkeProduct,
    compose_moebius_after,
    evaluate_dilate,
    multiply,
    prepend_zero_at_origin,
)
from blab.core.moebius import MoebiusAutomorphism
from blab.core.sampling import BoundarySampleSet, InteriorRegion
from blab.core.transforms import BoundaryGrid
from blab.errors import BlabError, DomainViolationError, NonConvergenceError, StageFailureError

logger = logging.getLogger(__name__)

ANCHOR_TOL = 1e-10
W_LIMIT = 1.0 - 1e-6
RADIAL_STEPS = 40
# Shape parameters for the extension geometry only; residual targets are passed separately.
GEOMETRY_EPSILON = 0.5


@dataclass
class SimultaneousResult:
    B: FiniteBlaschkeProduct
    err_K: float
    err_L: float
    r0: float | None = None
    r_used: float | None = None
    w_used: float | None = None
    budget_log: list[tuple[str, float, float]] = field(default_factory=list)

    @property
    def degree(self) -> int:
        return self.B.degree


def _sample(f: Callable, z: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(f(z), dtype=complex), z.shape)


def _interior_error(B: FiniteBlaschkeProduct, f: Callable, L: InteriorRegion) -> float:
    check = L.grid(refine=2)
    return float(np.max(np.abs(B(check) - _sample(f, check)))) if check.size else 0.0


def _moebius_w(values: np.ndarray, w: float) -> np.ndarray:
    return (values - w) / (1.0 - w * values)


def w_schedule():
    k = 2
    while 1.0 - 2.0**-k <= W_LIMIT:
        yield 1.0 - 2.0**-k
        k += 1


def simul_unimodular_one(
    K: BoundarySampleSet,
    L: InteriorRegion,
    epsilon: float,
    epsilon_K: float | None = None,
    seed: int = SEED,
) -> SimultaneousResult:
    """B close to the unimodular targets on K and close to 1 on L.

    For w = 1 - 2**-k the targets psi_j = phi_w(phi_j)/z_j are interpolated to
    (1-w)**2 by a Blaschke product B0; the candidate phi_{-w}(z B0) has value
    w at the origin and is within (1+w)(1-w) of phi on K. w advances until
    both measured errors pass.

    Raises:
        StageFailureError: If the w schedule is exhausted.
    """
    targets = K.require_unimodular_targets()
    eps_K = epsilon if epsilon_K is None else epsilon_K
    log: list[tuple[str, float, float]] = []
    best: SimultaneousResult | None = None
    for w in tqdm(list(w_schedule()), desc="w schedule", unit="w", leave=False):
        psi = _moebius_w(targets, w) / K.points
        psi = psi / np.abs(psi)
        tol = (1.0 - w) ** 2
        try:
            B0 = fisher_interpolate(K.with_targets(psi), tol, seed=seed) if K.size else FiniteBlaschkeProduct()
        except NonConvergenceError as exc:
            log.append((f"fisher w={w:.6f}", tol, exc.best_error))
            logger.debug(f"Fisher failed at w={w:.6f}: {exc}")
            continue
        B = compose_moebius_after(MoebiusAutomorphism(w=-w), prepend_zero_at_origin(B0))
        anchor = abs(B(0j) - w)
        if anchor > ANCHOR_TOL:
            raise StageFailureError("prop-anchor", f"|B(0) - w| = {anchor:.3e} at w={w}", log)
        err_K = float(np.max(np.abs(B(K.points) - targets))) if K.size else 0.0
        err_L = _interior_error(B, lambda z: np.ones_like(z), L)
        log.append((f"w={w:.6f} K", eps_K, err_K))
        log.append((f"w={w:.6f} L", epsilon, err_L))
        result = SimultaneousResult(B=B, err_K=err_K, err_L=err_L, w_used=w, budget_log=log)
        if err_K < eps_K and err_L < epsilon:
            logger.info(f"unimodular-one pipeline: w={w:.6f}, degree {B.degree}")
            return result
        if best is None or max(err_K, err_L) < max(best.err_K, best.err_L):
            best = result
    raise StageFailureError(
        "prop-w-schedule", f"w schedule exhausted without meeting epsilon={epsilon:.3e}", log, partial=best
    )


def _staged(stage: str, log: list, call: Callable, *args, **kwargs):
    try:
        return call(*args, **kwargs)
    except StageFailureError as exc:
        raise StageFailureError(f"{stage}/{exc.stage}", str(exc), log + exc.budget_log, exc.partial) from exc
    except BlabError as exc:
        raise StageFailureError(stage, str(exc), log, getattr(exc, "best", None)) from exc


def simultaneous_circle(
    K: BoundarySampleSet, f: Callable, L: InteriorRegion, epsilon: float, seed: int = SEED
) -> SimultaneousResult:
    """B = B0 * B1 with B0 close to f on L and B1 close to phi/B0 on K and to 1 on L."""
    targets = K.require_unimodular_targets()
    log: list[tuple[str, float, float]] = []
    B0 = _staged("caratheodory", log, caratheodory_approximate, f, L, epsilon / 2)
    log.append(("caratheodory L", epsilon / 2, _interior_error(B0, f, L)))
    modified = targets / B0(K.points) if K.size else targets
    inner = _staged(
        "unimodular-one",
        log,
        simul_unimodular_one,
        K.with_targets(modified / np.abs(modified)),
        L,
        epsilon / 2,
        epsilon,
        seed=seed,
    )
    log.extend(inner.budget_log)
    B = multiply(B0, inner.B)
    err_K = float(np.max(np.abs(B(K.points) - targets))) if K.size else 0.0
    err_L = _interior_error(B, f, L)
    log.append(("final K", epsilon, err_K))
    log.append(("final L", epsilon, err_L))
    if not (err_K < epsilon and err_L < epsilon):
        raise StageFailureError("circle-final", f"err_K={err_K:.3e}, err_L={err_L:.3e}", log)
    logger.info(f"circle pipeline: degree {B.degree} = {B0.degree} + {inner.B.degree}")
    return SimultaneousResult(B=B, err_K=err_K, err_L=err_L, w_used=inner.w_used, budget_log=log)


def radial_defect(g: Callable, points: np.ndarray, t: float) -> float:
    """max_j |g((1-t) z_j) - g(z_j)|."""
    if points.size == 0:
        return 0.0
    return float(np.max(np.abs(_sample(g, (1.0 - t) * points) - _sample(g, points))))


def dilation_threshold(g: Callable, points: np.ndarray, budget: float) -> float:
    """r0 such that |g(r z_j) - g(z_j)| < budget/2 for every sampled r in (r0, 1).

    Radii 1 - 2**-k, k = 1..40, are checked from the outside in; r0 is the
    innermost radius below which a check failed.

    Raises:
        DomainViolationError: If even the closest radius misses the budget.
    """
    steps = [2.0**-k for k in range(RADIAL_STEPS, 0, -1)]
    t_star = None
    for t in steps:
        if radial_defect(g, points, t) < budget / 2:
            t_star = t
        else:
            break
    if t_star is None:
        raise DomainViolationError("No dilation radius keeps the extension within budget on K.")
    return 1.0 - t_star


@dataclass
class DiscPlan:
    """Everything in the disc pipeline that does not depend on the dilation radius."""

    K: BoundarySampleSet
    f: Callable
    L: InteriorRegion
    epsilon: float
    F: FiniteBlaschkeProduct
    g: BallExtension
    r0: float
    budget_log: list[tuple[str, float, float]] = field(default_factory=list)

    @property
    def default_radius(self) -> float:
        return (1.0 + self.r0) / 2.0


def _lift_small_targets(targets: np.ndarray, floor: float) -> np.ndarray:
    """Targets below ``floor`` in modulus moved radially (or along 1) to modulus ``floor``."""
    moduli = np.abs(targets)
    small = moduli < floor
    if not np.any(small):
        return targets
    logger.warning(f"Lifting {int(np.sum(small))} target(s) below {floor:.3e} in modulus for the peak extension")
    directions = np.where(moduli > 0, targets / np.where(moduli > 0, moduli, 1.0), 1.0)
    return np.where(small, floor * directions, targets)


def prepare_disc(
    K: BoundarySampleSet,
    f: Callable,
    L: InteriorRegion,
    epsilon: float,
    method: ExtensionMethod = ExtensionMethod.PEAK,
    grid: BoundaryGrid | None = None,
    seed: int = SEED,
) -> DiscPlan:
    """Replace f by a Blaschke product, extend the targets relative to it, compute r0.

    The peak extension needs a logarithm of every target, so targets smaller
    than a quarter of the extension budget are lifted to that modulus first
    and the lift is recorded in the budget log.
    """
    targets = K.require_ball_targets()
    grid = grid or BoundaryGrid(GRID_N)
    k_ext, k_dil, _ = (epsilon * share for share in DISC_BUDGET_K)
    l_ext, _ = (epsilon * share for share in DISC_BUDGET_L)
    log: list[tuple[str, float, float]] = []

    F = _staged("caratheodory-f", log, caratheodory_approximate, f, L, l_ext / 2)
    log.append(("replace f on L", l_ext / 2, _interior_error(F, f, L)))
    geometry = PeakSpec.from_epsilon(K, GEOMETRY_EPSILON)
    ext_eps = min(k_ext, l_ext / 2)
    extended = K
    if method == ExtensionMethod.PEAK and K.size:
        lifted = _lift_small_targets(targets, ext_eps / 4)
        log.append(("lift small targets", ext_eps / 4, float(np.max(np.abs(lifted - targets)))))
        extended = K.with_targets(lifted)
    g = _staged(
        "extension",
        log,
        extend_relative,
        extended,
        F,
        geometry,
        grid,
        method=method,
        far_points=L.grid(refine=2),
        epsilon=ext_eps,
        seed=seed,
    )
    log.append(("extension K", ext_eps, g.diagnostics["k_residual"]))
    log.append(("extension far", ext_eps, g.diagnostics["far_max"]))
    r0 = _staged(f"dilation ({method.value} extension)", log, dilation_threshold, g, K.points, k_dil)
    log.append(("dilation r0", k_dil, radial_defect(g, K.points, 1.0 - r0)))
    logger.info(f"Disc plan ready: r0={r0:.12f}, f replaced by degree {F.degree}")
    return DiscPlan(K=K, f=f, L=L, epsilon=epsilon, F=F, g=g, r0=r0, budget_log=log)


def finish_disc(plan: DiscPlan, r: float | None = None) -> SimultaneousResult:
    """Approximate g on L together with the dilated set rK and verify both errors.

    Raises:
        DomainViolationError: If ``r`` is not in (r0, 1).
        StageFailureError: If a sub-stage or the final checks fail.
    """
    r = plan.default_radius if r is None else r
    if not plan.r0 < r < 1.0:
        raise DomainViolationError(f"Dilation radius {r} must lie in (r0, 1) with r0={plan.r0:.12f}")
    epsilon = plan.epsilon
    targets = plan.K.require_ball_targets()
    _, _, k_fit = (epsilon * share for share in DISC_BUDGET_K)
    _, l_fit = (epsilon * share for share in DISC_BUDGET_L)
    log = list(plan.budget_log)
    nodes = r * plan.K.points
    B = _staged("caratheodory-g", log, caratheodory_approximate, plan.g, plan.L, l_fit, nodes=nodes)
    node_residual = float(np.max(np.abs(B(nodes) - plan.g(nodes)))) if nodes.size else 0.0
    log.append((f"interpolate rK r={r:.12f}", k_fit, node_residual))
    err_K = float(np.max(np.abs(evaluate_dilate(B, r, plan.K.points) - targets))) if plan.K.size else 0.0
    err_L = _interior_error(B, plan.f, plan.L)
    log.append(("final K", epsilon, err_K))
    log.append(("final L", epsilon, err_L))
    if not (err_K < epsilon and err_L < epsilon):
        raise StageFailureError("disc-final", f"err_K={err_K:.3e}, err_L={err_L:.3e} at r={r}", log)
    logger.info(f"disc pipeline: r={r:.12f}, degree {B.degree}")
    return SimultaneousResult(B=B, err_K=err_K, err_L=err_L, r0=plan.r0, r_used=r, budget_log=log)


def simultaneous_disc(
    K: BoundarySampleSet,
    f: Callable,
    L: InteriorRegion,
    epsilon: float,
    r: float | None = None,
    method: ExtensionMethod = ExtensionMethod.PEAK,
    grid: BoundaryGrid | None = None,
    seed: int = SEED,
) -> SimultaneousResult:
    """B whose dilate B_r is close to phi on K while B itself is close to f on L."""
    return finish_disc(prepare_disc(K, f, L, epsilon, method=method, grid=grid, seed=seed), r)


def radius_stability(plan: DiscPlan, radii) -> list[SimultaneousResult]:
    """One verified result per dilation radius, all sharing the same extension."""
    return [finish_disc(plan, r) for r in radii]
