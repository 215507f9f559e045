"""Truncated inductive Blaschke products whose dilates visit a list of boundary targets."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from tqdm import tqdm

from blab.analysis.peak import ExtensionMethod
from blab.analysis.simultaneous import DiscPlan, dilation_threshold, finish_disc, prepare_disc
from blab.config.settings import SEED, VERIFY_ANGULAR
from blab.core.blaschke import (
    FiniteBlaschkeProduct,
    blaschke_factor,
    compose_moebius_after,
    evaluate_dilate,
    multiply,
)
from blab.core.moebius import MoebiusAutomorphism, check_closed_disc
from blab.core.sampling import MAX_INTERIOR_RADIUS, BoundarySampleSet, InteriorRegion, circle_points
from blab.core.transforms import BoundaryGrid
from blab.errors import BlabError, DomainViolationError, StageFailureError

logger = logging.getLogger(__name__)

MAX_STAGES = 13
RADIUS_STEPS = 40
RADIUS_LIMIT = 1.0 - 1e-12
PICK_TOL = 1e-12
CERTIFICATE_SLACK = 1e-6
STAGE0_REGION = InteriorRegion.disc(0.25)
ZERO_CLEARANCE = 1e-9


class StageEngine(Enum):
    PICK = "pick"
    DISC = "disc"


@dataclass(frozen=True)
class RadiusSchedule:
    rho: tuple[float, ...]

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        if not rho:
            raise ValueError("A radius schedule needs at least one radius.")
        if any(not 0.0 < r < 1.0 for r in rho):
            raise ValueError("Schedule radii must lie in (0, 1).")
        if any(b <= a for a, b in zip(rho, rho[1:])):
            raise ValueError("Schedule radii must be strictly increasing.")
        object.__setattr__(self, "rho", rho)

    def after(self, lower: float) -> list[float]:
        return [r for r in self.rho if r > lower]


def stage_budgets(k: int) -> tuple[float, float]:
    """(boundary budget, convergence budget) of stage k."""
    return 1.0 / (2 * (k + 1)), 2.0**-k


def certified_bound(k: int, n_stages: int | None = None) -> float:
    """1/(k+1) plus the tail sum of 2**-j over the later stages (all of them when ``n_stages`` is None)."""
    if n_stages is None:
        return 1.0 / (k + 1) + 2.0**-k
    return 1.0 / (k + 1) + sum(2.0**-j for j in range(k + 1, n_stages))


@dataclass
class TruncatedUniversalProduct:
    K: BoundarySampleSet
    factors: list[FiniteBlaschkeProduct] = field(default_factory=list)
    radii: list[float] = field(default_factory=list)
    targets: list[np.ndarray] = field(default_factory=list)
    budgets: list[tuple[float, float]] = field(default_factory=list)
    certificates: list[dict] = field(default_factory=list)
    budget_log: list[tuple[str, float, float]] = field(default_factory=list)
    failed_stage: str | None = None

    @property
    def n_stages(self) -> int:
        return len(self.factors)

    @property
    def degree_ledger(self) -> list[int]:
        return [B.degree for B in self.factors]

    @property
    def degree(self) -> int:
        return sum(self.degree_ledger)

    def product(self, upto: int | None = None) -> FiniteBlaschkeProduct:
        upto = self.n_stages - 1 if upto is None else upto
        result = FiniteBlaschkeProduct()
        for B in self.factors[: upto + 1]:
            result = multiply(result, B)
        return result

    def __call__(self, z):
        check_closed_disc(z)
        return self.product()(z)


def evaluate_partial(T: TruncatedUniversalProduct, upto: int, r: float, z):
    """Product of the first ``upto + 1`` factors at r*z for a dilation radius r in (0, 1)."""
    if not 0 <= upto < T.n_stages:
        raise ValueError(f"upto must lie in [0, {T.n_stages - 1}], got {upto}")
    if not 0.0 < r < 1.0:
        raise DomainViolationError(f"Dilation radius must lie in (0, 1), got {r}")
    check_closed_disc(z)
    scalar = np.ndim(z) == 0
    zz = r * np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.ones(zz.shape, dtype=complex)
    for B in T.factors[: upto + 1]:
        out = out * B(zz)
    return complex(out[0]) if scalar else out


def rim_points(radius: float, K: BoundarySampleSet, density: int = VERIFY_ANGULAR) -> np.ndarray:
    """Circle of the given radius, sampled uniformly and densely in the directions of K."""
    uniform = circle_points(2 * density, radius=radius)
    if K.size == 0:
        return uniform
    width = max(1.0 - radius, 1e-9)
    offsets = width * np.linspace(-20.0, 20.0, 161)
    local = radius * np.exp(1j * (K.angles[:, None] + offsets[None, :])).ravel()
    return np.concatenate([uniform, local])


def conv_error(B: FiniteBlaschkeProduct, radius: float, K: BoundarySampleSet) -> float:
    """sup |B - 1| over the closed disc of the given radius, read off on its rim."""
    return float(np.max(np.abs(B(rim_points(radius, K)) - 1.0)))


def annulus_radius(P: FiniteBlaschkeProduct, K: BoundarySampleSet, budget: float) -> float:
    """R0 beyond the zeros of P such that |P(r z) - P(z)| < budget on K for every sampled r in [R0, 1).

    Raises:
        DomainViolationError: If even the outermost radius misses the budget.
    """
    R = P.max_zero_modulus if P.degree else 0.0
    threshold = dilation_threshold(P, K.points, 2 * budget) if K.size else 0.0
    return max(threshold, R + ZERO_CLEARANCE * (1.0 - R) if P.degree else 0.0)


def radius_candidates(base: float, schedule: RadiusSchedule | None) -> Iterator[float]:
    if schedule is not None:
        yield from schedule.after(base)
        return
    r = base + (1.0 - base) / 2
    for _ in range(RADIUS_STEPS):
        if r >= RADIUS_LIMIT:
            return
        yield r
        r = (1.0 + r) / 2


def _moebius(values, gamma):
    return (values - gamma) / (1.0 - np.conj(gamma) * values)


def pick_near_one(nodes: np.ndarray, values: np.ndarray) -> FiniteBlaschkeProduct:
    """Blaschke product of degree len(nodes) with B(nodes) = values and B close to 1 away from the nodes.

    Each Schur-Pick step uses a normalized factor, which tends to 1 away from its
    zero; the free unimodular constant left at the end is the one that makes
    the whole product equal 1 where every factor equals 1.

    Raises:
        DomainViolationError: If a value, original or reduced, leaves the open disc.
    """
    vals = np.array(values, dtype=complex)
    gammas: list[complex] = []
    far = 1.0 + 0j
    for j, a in enumerate(nodes):
        gamma = complex(vals[j])
        if abs(gamma) >= 1.0 - PICK_TOL:
            raise DomainViolationError(f"Pick value {gamma!r} at node {a!r} is not inside the disc.")
        gammas.append(gamma)
        far = complex(_moebius(far, gamma))
        rest = nodes[j + 1 :]
        if rest.size:
            vals[j + 1 :] = _moebius(vals[j + 1 :], gamma) / blaschke_factor(a, normalized=True)(rest)
    B = FiniteBlaschkeProduct(zeta=far / abs(far))
    for a, gamma in zip(reversed(nodes), reversed(gammas)):
        B = compose_moebius_after(MoebiusAutomorphism(w=-gamma), multiply(blaschke_factor(a, normalized=True), B))
    return B


def _stage_targets(phi: np.ndarray, P: FiniteBlaschkeProduct, K: BoundarySampleSet, margin: float) -> np.ndarray:
    """phi / P on K (|P| = 1 there), pulled back to modulus at most 1 - margin."""
    psi = phi * np.conj(P(K.points))
    moduli = np.abs(psi)
    limit = 1.0 - margin
    return np.where(moduli > limit, psi / np.maximum(moduli, 1e-300) * limit, psi)


def _pick_stage(K, psi, r):
    return pick_near_one(r * K.points, psi)


def _disc_stage(K, psi, r, previous_radius, epsilon, method, grid, plan_cache, seed=SEED):
    if previous_radius > MAX_INTERIOR_RADIUS:
        raise DomainViolationError(
            f"Previous radius {previous_radius:.6f} exceeds the interior region limit {MAX_INTERIOR_RADIUS}."
        )
    if "plan" not in plan_cache:
        L = InteriorRegion.disc(previous_radius)
        plan_cache["plan"] = prepare_disc(
            K.with_targets(psi), lambda z: np.ones_like(z), L, epsilon, method=method, grid=grid, seed=seed
        )
    plan: DiscPlan = plan_cache["plan"]
    if r <= plan.r0:
        raise DomainViolationError(f"Radius {r} is not beyond the extension's r0={plan.r0:.12f}")
    return finish_disc(plan, r).B


def _first_stage(K, phi0, schedule, method, grid, log, seed=SEED):
    epsilon, _ = stage_budgets(0)
    one = lambda z: np.ones_like(z)  # noqa: E731
    plan = prepare_disc(K.with_targets(phi0), one, STAGE0_REGION, epsilon, method=method, grid=grid, seed=seed)
    log.extend(plan.budget_log)
    candidates = [plan.default_radius] if schedule is None else schedule.after(plan.r0)
    last: BlabError | None = None
    for r in candidates:
        try:
            result = finish_disc(plan, r)
        except BlabError as exc:
            last = exc
            continue
        return result.B, r, result.err_K
    raise StageFailureError("stage-0", f"no radius in the schedule passed beyond r0={plan.r0:.12f}: {last}", log)


def build_universal(
    K: BoundarySampleSet,
    targets: list,
    schedule: RadiusSchedule | None = None,
    engine: StageEngine = StageEngine.PICK,
    method: ExtensionMethod = ExtensionMethod.PEAK,
    grid: BoundaryGrid | None = None,
    seed: int = SEED,
) -> TruncatedUniversalProduct:
    """Inductive product B(0) ... B(N) with prod_{j<=k} B(j) dilated by r_k within 1/(k+1) of the k-th target.

    Stage 0 runs the disc pipeline on the first target. Stage k targets
    phi_k / (B(0)...B(k-1)) on K with boundary budget 1/(2(k+1)) while keeping
    |B(k) - 1| < 2**-k on the closed disc of radius r_{k-1}; r_k lies beyond
    both r_{k-1} and the annulus radius R0 of the partial product.

    A failing stage ends the build; the partial product is returned with
    ``failed_stage`` set.
    """
    if not 1 <= len(targets) <= MAX_STAGES:
        raise ValueError(f"Between 1 and {MAX_STAGES} target vectors are supported, got {len(targets)}")
    phis = [np.broadcast_to(np.asarray(t, dtype=complex), (K.size,)).copy() for t in targets]
    for phi in phis:
        K.with_targets(phi).require_ball_targets()

    T = TruncatedUniversalProduct(K=K)
    try:
        B0, r0, err0 = _first_stage(K, phis[0], schedule, method, grid, T.budget_log, seed=seed)
    except BlabError as exc:
        T.failed_stage = f"stage-0: {exc}"
        logger.warning(f"Universal build stopped at stage 0: {exc}")
        return T
    T.factors.append(B0)
    T.radii.append(r0)
    T.targets.append(phis[0])
    T.budgets.append(stage_budgets(0))
    T.certificates.append({"k": 0, "r": r0, "R0": None, "boundary_error": err0, "conv_error": None, "degree": B0.degree})
    T.budget_log.append(("stage 0 K", stage_budgets(0)[0], err0))
    logger.info(f"stage 0 passed: r={r0:.12f}, degree {B0.degree}")

    for k in tqdm(range(1, len(phis)), desc="universal stages", unit="stage", leave=False):
        try:
            _run_stage(T, k, phis[k], schedule, engine, method, grid, seed=seed)
        except BlabError as exc:
            T.failed_stage = f"stage-{k}: {exc}"
            logger.warning(f"Universal build stopped at stage {k}: {exc}")
            break
    return T


def _run_stage(T, k, phi, schedule, engine, method, grid, seed=SEED) -> None:
    K = T.K
    boundary_budget, conv_budget = stage_budgets(k)
    P = T.product()
    previous = T.radii[-1]
    R0 = annulus_radius(P, K, boundary_budget / 2)
    psi = _stage_targets(phi, P, K, boundary_budget / 4)
    base = max(previous, R0)
    plan_cache: dict = {}
    best = (np.inf, np.inf)
    for r in radius_candidates(base, schedule):
        try:
            if engine is StageEngine.PICK:
                B = _pick_stage(K, psi, r)
            else:
                budget = min(boundary_budget / 2, conv_budget)
                B = _disc_stage(K, psi, r, previous, budget, method, grid, plan_cache, seed=seed)
        except BlabError as exc:
            logger.debug(f"stage {k}: r={r:.12f} rejected: {exc}")
            continue
        partial = multiply(P, B)
        boundary = float(np.max(np.abs(evaluate_dilate(partial, r, K.points) - phi))) if K.size else 0.0
        conv = conv_error(B, previous, K)
        logger.debug(f"stage {k}: r={r:.12f} boundary={boundary:.3e} conv={conv:.3e}")
        if boundary < 2 * boundary_budget and conv < conv_budget:
            T.factors.append(B)
            T.radii.append(r)
            T.targets.append(phi)
            T.budgets.append((boundary_budget, conv_budget))
            T.certificates.append(
                {"k": k, "r": r, "R0": R0, "boundary_error": boundary, "conv_error": conv, "degree": B.degree}
            )
            T.budget_log.append((f"stage {k} K", 2 * boundary_budget, boundary))
            T.budget_log.append((f"stage {k} conv", conv_budget, conv))
            logger.info(f"stage {k} passed: r={r:.12f}, R0={R0:.12f}, degree {B.degree}")
            return
        best = min(best, (boundary, conv))
    raise StageFailureError(
        f"stage-{k}",
        f"no radius beyond {base:.12f} met the budgets (best boundary={best[0]:.3e}, conv={best[1]:.3e})",
        T.budget_log,
        partial=T,
    )


def error_trace(T: TruncatedUniversalProduct) -> list[tuple[int, float, float]]:
    """(k, max_K |full product dilated by r_k - phi_k|, certified bound) for every stored stage."""
    trace = []
    last = T.n_stages - 1
    for k, (r, phi) in enumerate(zip(T.radii, T.targets)):
        values = evaluate_partial(T, last, r, T.K.points) if T.K.size else np.zeros(0, dtype=complex)
        measured = float(np.max(np.abs(values - phi))) if T.K.size else 0.0
        trace.append((k, measured, certified_bound(k)))
    return trace


def certificates_hold(T: TruncatedUniversalProduct) -> bool:
    return all(measured <= bound + CERTIFICATE_SLACK for _, measured, bound in error_trace(T))


def tail_bound(T: TruncatedUniversalProduct, m: int) -> tuple[float, float]:
    """(measured sup |prod_{k>m} B(k) - 1| on the disc of radius r_m, sum of 2**-k for m < k <= N)."""
    if not 0 <= m < T.n_stages:
        raise ValueError(f"m must lie in [0, {T.n_stages - 1}], got {m}")
    rim = rim_points(T.radii[m], T.K)
    tail = np.ones(rim.shape, dtype=complex)
    for B in T.factors[m + 1 :]:
        tail = tail * B(rim)
    bound = sum(2.0**-k for k in range(m + 1, T.n_stages))
    return float(np.max(np.abs(tail - 1.0))), bound


@dataclass
class MembershipReport:
    entries: list[tuple[int, float, float]]
    tol: float

    @property
    def passed(self) -> bool:
        return all(err <= self.tol for _, _, err in self.entries)


def check_membership(
    f: Callable, K: BoundarySampleSet, probes: list, schedule: RadiusSchedule, tol: float
) -> MembershipReport:
    """Per probe, the schedule radius minimizing max_K |f(r z) - phi| and that error."""
    entries = []
    for i, probe in enumerate(probes):
        phi = np.broadcast_to(np.asarray(probe, dtype=complex), (K.size,))
        best_r, best_err = schedule.rho[0], np.inf
        for r in schedule.rho:
            values = np.broadcast_to(np.asarray(f(r * K.points), dtype=complex), (K.size,))
            err = float(np.max(np.abs(values - phi))) if K.size else 0.0
            if err < best_err:
                best_r, best_err = r, err
        entries.append((i, best_r, best_err))
    report = MembershipReport(entries=entries, tol=tol)
    logger.info(f"Membership check over {len(probes)} probes: {'pass' if report.passed else 'fail'}")
    return report
