"""Carathéodory (interior) and Fisher (boundary) approximation by finite Blaschke products."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from tqdm import tqdm

from blab.config.settings import BOUNDARY_TOL, GRID_N, MAX_DEGREE, SEED
from blab.core.blaschke import (
    FiniteBlaschkeProduct,
    blaschke_factor,
    compose_moebius_after,
    multiply,
)
from blab.core.moebius import MoebiusAutomorphism
from blab.core.sampling import BoundarySampleSet, InteriorRegion, circle_points
from blab.errors import DomainViolationError, NonConvergenceError, RootFindingError
from blab.utils.roots import PolynomialRootFinder, newton_polish
from blab.utils.series import series_divide

logger = logging.getLogger(__name__)

UNIMODULAR_TOL = 1e-12
BALL_TOL = 1e-10
FIRST_DEPTH = 8
SAMPLE_RADII = (0.99, 0.98, 0.985, 0.975, 0.97, 0.965)
NODE_CLEARANCE = 1e-3
FISHER_RANDOM_CANDIDATES = 32
NULL_TOL = 1e-10
_PROBES = circle_points(64, phase=0.05)


@dataclass(frozen=True)
class SchurParameters:
    gammas: tuple[complex, ...]
    terminal: bool = False

    def __post_init__(self):
        gammas = tuple(complex(g) for g in self.gammas)
        moduli = [abs(g) for g in gammas]
        if any(m > 1.0 + BOUNDARY_TOL for m in moduli):
            raise DomainViolationError("Schur parameters must satisfy |gamma| <= 1.")
        body = moduli[:-1] if self.terminal else moduli
        if any(m >= 1.0 - UNIMODULAR_TOL for m in body):
            raise DomainViolationError("Only the terminal Schur parameter may be unimodular.")
        if self.terminal and (not gammas or abs(moduli[-1] - 1.0) > UNIMODULAR_TOL):
            raise DomainViolationError("A terminal parameter list must end on a unimodular value.")
        object.__setattr__(self, "gammas", gammas)

    def __len__(self) -> int:
        return len(self.gammas)

    @property
    def interior(self) -> tuple[complex, ...]:
        return self.gammas[:-1] if self.terminal else self.gammas


def schur_decompose(taylor, depth: int, clamp: bool = False) -> SchurParameters:
    """Schur parameters of a function in the closed unit ball from its Taylor coefficients.

    Each step removes one coefficient from the truncated series, so at most
    ``len(taylor)`` parameters are produced. With ``clamp`` a parameter whose
    modulus reaches 1 - 1e-12 (rounding noise included, up to 1 + 1e-6) is
    normalised and treated as terminal.

    Raises:
        DomainViolationError: If some |gamma_k| > 1 + 1e-10 (and not clamped).
    """
    c = np.asarray(taylor, dtype=complex).copy()
    gammas: list[complex] = []
    limit = 1.0 + (1e-6 if clamp else BALL_TOL)
    for k in range(depth):
        if c.size == 0:
            break
        gamma = complex(c[0])
        if abs(gamma) > limit:
            raise DomainViolationError(
                f"Input is not in the unit ball: |gamma_{k}| = {abs(gamma):.12f}"
            )
        if abs(gamma) >= 1.0 - UNIMODULAR_TOL:
            gammas.append(gamma / abs(gamma))
            return SchurParameters(tuple(gammas), terminal=True)
        gammas.append(gamma)
        num = c.copy()
        num[0] -= gamma
        den = -np.conj(gamma) * c
        den[0] += 1.0
        c = series_divide(num, den, c.size)[1:]
    return SchurParameters(tuple(gammas), terminal=False)


def _polish_polynomial_roots(ascending: np.ndarray) -> np.ndarray:
    coeffs = ascending[::-1]
    if coeffs.shape[0] < 2:
        return np.array([], dtype=complex)
    deriv = np.polyder(coeffs)
    roots = PolynomialRootFinder.solve(coeffs)
    return newton_polish(roots, lambda z: (np.polyval(coeffs, z), np.polyval(deriv, z)))


def _sample(f: Callable, z: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(f(z), dtype=complex), z.shape)


def _from_numerator(A: np.ndarray, D: np.ndarray) -> FiniteBlaschkeProduct:
    """Blaschke product A/D where D is the conjugate reciprocal of A."""
    A = np.trim_zeros(A, "b")
    if A.size <= 1:
        value = A[0] / D[0]
        return FiniteBlaschkeProduct.from_normalized(value, ())
    at_origin = int(np.argmax(A != 0))
    roots = np.concatenate([np.zeros(at_origin, dtype=complex), _polish_polynomial_roots(A[at_origin:])])
    moduli = np.abs(roots)
    if np.any(moduli >= 1.0 + 1e-9) or not np.all(np.isfinite(roots)):
        raise RootFindingError(
            f"Numerator has a root outside the disc (max modulus {float(np.max(moduli)):.12f})"
        )
    inside = 1.0 - 1e-15
    roots = np.where(moduli >= inside, roots / moduli * inside, roots)
    target = np.polynomial.polynomial.polyval(_PROBES, A) / np.polynomial.polynomial.polyval(_PROBES, D)
    base = FiniteBlaschkeProduct(1 + 0j, tuple(roots))(_PROBES)
    return FiniteBlaschkeProduct.from_normalized(np.mean(target / base), tuple(roots))


def blaschke_from_schur(params: SchurParameters, fill_degree: int = 0) -> FiniteBlaschkeProduct:
    """Inverse Schur recursion in numerator/denominator form.

    Unrolls f_k = (gamma_k + z f_{k+1}) / (1 + conj(gamma_k) z f_{k+1}) on
    polynomial pairs A/D: A' = zA + gamma D and D' = D + conj(gamma) zA.
    A non-terminal list is completed by the tail z**fill_degree.
    """
    if fill_degree < 0:
        raise ValueError("fill_degree must be non-negative.")
    if params.terminal:
        A = np.array([params.gammas[-1]], dtype=complex)
        D = np.array([1.0], dtype=complex)
    else:
        A = np.zeros(fill_degree + 1, dtype=complex)
        A[-1] = 1.0
        D = np.zeros(fill_degree + 1, dtype=complex)
        D[0] = 1.0
    for gamma in reversed(params.interior):
        zA = np.concatenate([[0j], A])
        Dp = np.concatenate([D, [0j]])
        A, D = zA + gamma * Dp, Dp + np.conj(gamma) * zA
    return _from_numerator(A, D)


def verify_ball_membership(f: Callable, grid) -> float:
    """sup |f| over ``grid``; the caller compares it with 1 + tolerance."""
    grid = np.asarray(grid, dtype=complex)
    if grid.size == 0:
        return 0.0
    return float(np.max(np.abs(np.asarray(f(grid), dtype=complex))))


def _sampling_radii(avoid: np.ndarray) -> tuple[float, float]:
    usable = [r for r in SAMPLE_RADII if np.all(np.abs(np.abs(avoid) - r) > NODE_CLEARANCE)]
    if len(usable) < 2:
        raise DomainViolationError("Interior nodes crowd every Taylor sampling radius.")
    return usable[0], usable[1]


def taylor_from_samples(f: Callable, count: int, avoid=()) -> np.ndarray:
    """First ``count`` Taylor coefficients of ``f`` by FFT on two circles.

    The leading aliasing term c_{k+N} r^N is eliminated between the radii.
    """
    r1, r2 = _sampling_radii(np.asarray(avoid, dtype=complex))
    N = max(GRID_N, 4 * count)
    estimates = []
    for r in (r1, r2):
        values = _sample(f, circle_points(N, radius=r))
        spectrum = np.fft.fft(values)[:count] / N
        estimates.append(spectrum / r ** np.arange(count))
    a1, a2 = r1**N, r2**N
    if a1 == a2:
        return estimates[0]
    return (a2 * estimates[0] - a1 * estimates[1]) / (a2 - a1)


def _pick_reduce(f: Callable, nodes: np.ndarray) -> tuple[Callable, list[complex]]:
    """Peel off exact interpolation at interior nodes (generalized Schur step)."""
    values: list[complex] = []
    current = f
    for z_k in nodes:
        gamma = complex(_sample(current, np.array([z_k]))[0])
        if abs(gamma) >= 1.0 - UNIMODULAR_TOL:
            raise DomainViolationError(
                f"Interpolation value {gamma!r} at node {z_k!r} is unimodular; only a constant fits."
            )
        values.append(gamma)

        def reduced(z, prev=current, a=gamma, w=z_k):
            z = np.asarray(z, dtype=complex)
            v = _sample(prev, z)
            return (v - a) / (1.0 - np.conj(a) * v) * (1.0 - np.conj(w) * z) / (z - w)

        current = reduced
    return current, values


def _pick_restore(B: FiniteBlaschkeProduct, nodes: np.ndarray, values: list[complex]) -> FiniteBlaschkeProduct:
    for z_k, gamma in zip(reversed(nodes), reversed(values)):
        B = compose_moebius_after(MoebiusAutomorphism(w=-gamma), multiply(blaschke_factor(z_k), B))
    return B


def _candidate(taylor, depth, nodes, values) -> FiniteBlaschkeProduct:
    params = schur_decompose(taylor[: depth + 1], depth, clamp=True)
    B = blaschke_from_schur(params, fill_degree=0)
    return _pick_restore(B, nodes, values) if nodes.size else B


def caratheodory_approximate(
    f: Callable,
    L: InteriorRegion,
    epsilon: float,
    nodes=None,
    max_degree: int = MAX_DEGREE,
) -> FiniteBlaschkeProduct:
    """A finite Blaschke product within ``epsilon`` of ``f`` on L.

    Schur depth doubles from 8 until the error on the twice-as-fine grid of L
    passes, then bisects back to the smallest passing depth. With ``nodes``
    the result also interpolates f exactly at those interior points.

    Raises:
        DomainViolationError: If |f| exceeds 1 on the L grid or a node is invalid.
        NonConvergenceError: If no depth up to ``max_degree`` passes.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive.")
    search = L.grid()
    check = L.grid(refine=2)
    sup = verify_ball_membership(f, check)
    if sup > 1.0 + 1e-9:
        raise DomainViolationError(f"sup |f| on L is {sup:.12f} > 1.")
    nodes = np.asarray([] if nodes is None else nodes, dtype=complex).ravel()
    if nodes.size and np.max(np.abs(nodes)) >= 1.0:
        raise DomainViolationError("Interpolation nodes must lie in the open disc.")

    target = _sample(f, check)
    f_reduced, values = _pick_reduce(f, nodes)
    taylor = taylor_from_samples(f_reduced, max_degree + 1, avoid=nodes)

    def error_of(depth: int) -> tuple[float, FiniteBlaschkeProduct]:
        B = _candidate(taylor, depth, nodes, values)
        return float(np.max(np.abs(B(check) - target))), B

    best: tuple[float, FiniteBlaschkeProduct | None] = (np.inf, None)
    lower, upper = 0, None
    depth = min(FIRST_DEPTH, max_degree)
    with tqdm(desc="Schur depth", unit="depth", leave=False) as bar:
        while True:
            err, B = error_of(depth)
            bar.update(1)
            logger.debug(f"Carathéodory depth {depth}: error {err:.3e} (degree {B.degree})")
            if err < best[0]:
                best = (err, B)
            if err < epsilon:
                upper = (depth, B)
                break
            lower = depth
            if depth >= max_degree:
                break
            depth = min(2 * depth, max_degree)
    if upper is None:
        raise NonConvergenceError(
            f"Carathéodory approximation missed epsilon={epsilon:.3e} up to depth {max_degree}",
            best_error=best[0],
            best=best[1],
        )
    hi, result = upper
    while hi - lower > 1:
        mid = (hi + lower) // 2
        err, B = error_of(mid)
        if err < epsilon:
            hi, result = mid, B
        else:
            lower = mid
    logger.info(f"Carathéodory: degree {result.degree} on {search.size}-point grid, epsilon {epsilon:.3e}")
    return result


def _real_system(points: np.ndarray, targets: np.ndarray, d: int) -> np.ndarray:
    """Real matrix of P(z_j) - phi_j z_j^d conj(P(z_j)) = 0 in the unknowns (Re p, Im p)."""
    V = np.vander(points, d + 1, increasing=True)
    c = (targets * points**d)[:, None]
    A1 = V - c * np.conj(V)
    A2 = 1j * (V + c * np.conj(V))
    complex_block = np.hstack([A1, A2])
    return np.vstack([complex_block.real, complex_block.imag])


def _null_space(M: np.ndarray) -> np.ndarray:
    _, s, vh = np.linalg.svd(M)
    scale = s[0] if s.size else 1.0
    rank = int(np.sum(s > NULL_TOL * max(scale, 1.0)))
    return vh[rank:].T


def _product_from_coefficients(p: np.ndarray) -> FiniteBlaschkeProduct | None:
    """P/P* as a Blaschke product, or None when P is not admissible."""
    d = p.shape[0] - 1
    if abs(p[-1]) <= 1e-8 * np.max(np.abs(p)):
        return None
    roots = _polish_polynomial_roots(p) if d else np.array([], dtype=complex)
    if roots.size and np.max(np.abs(roots)) >= 1.0 - 1e-12:
        return None
    lead = p[-1]
    return FiniteBlaschkeProduct.from_normalized(lead / np.conj(lead), tuple(roots))


def _residual(B: FiniteBlaschkeProduct, points, targets) -> float:
    return float(np.max(np.abs(B(points) - targets)))


def _refine(initial: FiniteBlaschkeProduct, points, targets) -> FiniteBlaschkeProduct:
    """Least-squares polish over (zeta, zeros) with zeros kept inside via tanh."""
    zeros = initial.zero_array
    rho = np.arctanh(np.clip(np.abs(zeros), 0.0, 1.0 - 1e-9))
    x0 = np.concatenate([[np.angle(initial.zeta)], rho, np.angle(zeros)])
    n = zeros.size

    def unpack(x):
        w = np.tanh(x[1 : 1 + n]) * np.exp(1j * x[1 + n :])
        return FiniteBlaschkeProduct(np.exp(1j * x[0]), tuple(w))

    def residuals(x):
        diff = unpack(x)(points) - targets
        return np.concatenate([diff.real, diff.imag])

    fit = least_squares(residuals, x0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    return unpack(fit.x)


def _reflect_outside(p: np.ndarray) -> FiniteBlaschkeProduct | None:
    if abs(p[-1]) <= 1e-8 * np.max(np.abs(p)) or p.shape[0] < 2:
        return None
    roots = _polish_polynomial_roots(p)
    moduli = np.abs(roots)
    roots = np.where(moduli > 1.0, 1.0 / np.conj(roots), roots)
    roots = np.where(np.abs(roots) >= 0.999, roots * 0.999 / np.abs(roots), roots)
    return FiniteBlaschkeProduct(1 + 0j, tuple(roots))


def fisher_interpolate(
    K: BoundarySampleSet,
    epsilon: float,
    max_degree: int | None = None,
    seed: int = SEED,
) -> FiniteBlaschkeProduct:
    """A finite Blaschke product B with max_j |B(z_j) - phi_j| < epsilon.

    Candidates are B = P/P* with P of degree d. The interpolation conditions
    are real-linear in the coefficients of P, so their null space is computed
    by SVD for d = 0, 1, 2, ...; a null vector is admissible when P has full
    degree and all its roots in the open disc. Among admissible candidates at
    the first successful degree the one with the smallest largest zero is
    returned. Otherwise the best reflected candidate is refined by least
    squares.

    Raises:
        NonConvergenceError: If neither stage reaches epsilon.
    """
    targets = K.require_unimodular_targets()
    points = K.points
    if K.size == 0:
        raise ValueError("fisher_interpolate needs at least one sample point.")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive.")
    J = K.size
    top = min(4 * J + 16, MAX_DEGREE) if max_degree is None else max_degree
    rng = np.random.default_rng(seed)
    fallback: tuple[int, FiniteBlaschkeProduct] | None = None

    for d in tqdm(range(top + 1), desc="Fisher degree", unit="deg", leave=False):
        basis = _null_space(_real_system(points, targets, d))
        if basis.shape[1] == 0:
            continue
        combos = [basis[:, i] for i in range(basis.shape[1])]
        # Null vectors closest to the pure leading term z^d keep the roots small.
        for lead in (d, 2 * d + 1):
            projected = basis @ basis[lead]
            if np.linalg.norm(projected) > NULL_TOL:
                combos.append(projected)
        combos += [basis @ rng.standard_normal(basis.shape[1]) for _ in range(FISHER_RANDOM_CANDIDATES)]
        admissible: list[tuple[float, FiniteBlaschkeProduct]] = []
        for x in combos:
            p = x[: d + 1] + 1j * x[d + 1 :]
            B = _product_from_coefficients(p)
            if B is None:
                if fallback is None or fallback[0] < d:
                    guess = _reflect_outside(p)
                    if guess is not None:
                        fallback = (d, guess)
                continue
            if _residual(B, points, targets) < epsilon:
                admissible.append((B.max_zero_modulus, B))
        if admissible:
            admissible.sort(key=lambda item: item[0])
            B = admissible[0][1]
            logger.info(f"Fisher: degree {B.degree} interpolant for {J} points")
            return B

    if fallback is None:
        raise NonConvergenceError(f"No Fisher candidate found up to degree {top}", best_error=np.inf)
    guess = fallback[1]
    guess = FiniteBlaschkeProduct.from_normalized(np.mean(targets / guess(points)), guess.zeros)
    refined = _refine(guess, points, targets)
    err = _residual(refined, points, targets)
    logger.debug(f"Fisher refinement from degree {guess.degree}: residual {err:.3e}")
    if err >= epsilon:
        raise NonConvergenceError(
            f"Fisher interpolation stalled at residual {err:.3e} >= {epsilon:.3e}",
            best_error=err,
            best=refined,
        )
    return refined


def fisher_grid_search(
    K: BoundarySampleSet, alpha_n: int = 512, w_n: int = 200, chunk: int = 2000
) -> tuple[float, FiniteBlaschkeProduct]:
    """Brute-force search over degree-1 products e^{ia}(z - w)/(1 - conj(w) z).

    Returns the smallest max residual on K and the product attaining it.
    """
    targets = K.require_unimodular_targets()
    points = K.points
    radii = np.arange(w_n) / w_n
    angles = 2 * np.pi * np.arange(w_n) / w_n
    ws = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
    rotations = np.exp(2j * np.pi * np.arange(alpha_n) / alpha_n)
    best_err, best_w, best_rot = np.inf, 0j, 1 + 0j
    for start in tqdm(range(0, ws.size, chunk), desc="Fisher oracle", unit="block", leave=False):
        w = ws[start : start + chunk]
        base = (points[None, :] - w[:, None]) / (1.0 - np.conj(w)[:, None] * points[None, :])
        err = np.max(np.abs(rotations[None, :, None] * base[:, None, :] - targets[None, None, :]), axis=2)
        i, j = np.unravel_index(np.argmin(err), err.shape)
        if err[i, j] < best_err:
            best_err, best_w, best_rot = float(err[i, j]), complex(w[i]), complex(rotations[j])
    return best_err, FiniteBlaschkeProduct(best_rot, (best_w,))
