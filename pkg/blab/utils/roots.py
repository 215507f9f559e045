import logging
from collections.abc import Callable
from enum import Enum

import numpy as np

from blab.errors import RootFindingError

logger = logging.getLogger(__name__)


class RootMethod(Enum):
    ABERTH = "aberth"
    DURAND_KERNER = "durand_kerner"


def _initial_guesses(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[0] - 1
    lead = coeffs[0]
    tail = abs(coeffs[-1] / lead)
    # Geometric mean of the root moduli, kept away from 0 so the guesses stay distinct.
    radius = min(max(tail ** (1.0 / n), 0.25), 2.0)
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    return radius * np.exp(1j * angles)


class PolynomialRootFinder:
    """Simultaneous-iteration root finders for dense complex polynomials.

    Coefficients follow the ``np.polyval`` convention (highest degree first).
    """

    @staticmethod
    def run_aberth(coeffs: np.ndarray, tol: float = 1e-14, max_iter: int = 500) -> np.ndarray:
        """Aberth–Ehrlich iteration: Newton correction deflated by the other iterates."""
        deriv = np.polyder(coeffs)
        z = _initial_guesses(coeffs)
        n = z.shape[0]
        off_diagonal = ~np.eye(n, dtype=bool)
        for it in range(max_iter):
            p = np.polyval(coeffs, z)
            dp = np.polyval(deriv, z)
            diff = z[:, None] - z[None, :]
            inv = np.zeros_like(diff)
            inv[off_diagonal] = 1.0 / diff[off_diagonal]
            repulsion = inv.sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(dp != 0, p / dp, 0.0)
                step = np.where(p != 0, ratio / (1.0 - ratio * repulsion), 0.0)
            step = np.nan_to_num(step)
            z = z - step
            if np.max(np.abs(step)) <= tol * (1.0 + np.max(np.abs(z))):
                logger.debug(f"Aberth converged after {it + 1} iterations (degree {n})")
                return z
        logger.debug(f"Aberth stopped at max_iter={max_iter} (degree {n})")
        return z

    @staticmethod
    def run_durand_kerner(coeffs: np.ndarray, tol: float = 1e-14, max_iter: int = 2000) -> np.ndarray:
        """Weierstrass–Durand–Kerner iteration on the monic polynomial."""
        monic = coeffs / coeffs[0]
        z = _initial_guesses(monic)
        n = z.shape[0]
        for it in range(max_iter):
            max_delta = 0.0
            # Gauss–Seidel sweep: each update uses the freshest iterates.
            for i in range(n):
                denom = np.prod(z[i] - np.delete(z, i))
                if denom == 0:
                    continue
                delta = np.polyval(monic, z[i]) / denom
                z[i] = z[i] - delta
                max_delta = max(max_delta, abs(delta))
            if max_delta <= tol * (1.0 + np.max(np.abs(z))):
                logger.debug(f"Durand–Kerner converged after {it + 1} sweeps (degree {n})")
                break
        return z

    @staticmethod
    def solve(
        coeffs,
        method: str | RootMethod = RootMethod.ABERTH,
        tol: float = 1e-14,
        max_iter: int | None = None,
    ) -> np.ndarray:
        """Roots of the polynomial with the given coefficients.

        Args:
            coeffs: Coefficients, highest degree first. Leading zeros are stripped.
            method (str | RootMethod): "aberth" or "durand_kerner".
            tol (float): Relative step tolerance for stopping.
            max_iter (int, optional): Iteration cap; method default when None.

        Returns:
            np.ndarray: Complex roots, sorted with ``np.sort_complex``.

        Raises:
            ValueError: For an unsupported method or an all-zero polynomial.
        """
        if isinstance(method, str):
            try:
                method = RootMethod(method)
            except ValueError:
                raise ValueError(f"Unsupported root finding method: {method}") from None
        arr = np.trim_zeros(np.asarray(coeffs, dtype=complex), "f")
        if arr.size == 0:
            raise ValueError("The zero polynomial has no well-defined roots.")
        n = arr.shape[0] - 1
        if n == 0:
            return np.array([], dtype=complex)
        if n == 1:
            return np.array([-arr[1] / arr[0]], dtype=complex)

        kwargs = {"tol": tol}
        if max_iter is not None:
            kwargs["max_iter"] = max_iter
        if method == RootMethod.ABERTH:
            roots = PolynomialRootFinder.run_aberth(arr, **kwargs)
        elif method == RootMethod.DURAND_KERNER:
            roots = PolynomialRootFinder.run_durand_kerner(arr, **kwargs)
        else:
            raise ValueError(f"Unsupported root finding method: {method}")
        return np.sort_complex(roots)


def newton_polish(
    roots: np.ndarray,
    evaluate: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    steps: int = 6,
) -> np.ndarray:
    """Refine roots with Newton steps, keeping a step only when it lowers |f|.

    ``evaluate`` returns ``(f(z), f'(z))`` for an array of points.
    """
    z = np.array(roots, dtype=complex)
    value, deriv = evaluate(z)
    for _ in range(steps):
        with np.errstate(divide="ignore", invalid="ignore"):
            candidate = z - np.where(deriv != 0, value / deriv, 0.0)
        candidate = np.where(np.isfinite(candidate), candidate, z)
        new_value, new_deriv = evaluate(candidate)
        better = np.abs(new_value) < np.abs(value)
        if not np.any(better):
            break
        z = np.where(better, candidate, z)
        value = np.where(better, new_value, value)
        deriv = np.where(better, new_deriv, deriv)
    return z


def require_residual(residual: float, tol: float, what: str) -> None:
    if not np.isfinite(residual) or residual > tol:
        raise RootFindingError(f"{what}: residual {residual:.3e} above tolerance {tol:.1e}")
