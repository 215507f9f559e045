"""Finite Blaschke products stored as a unimodular constant plus a zero list."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from blab.config.settings import BOUNDARY_TOL, ZERO_FLAG_TOL
from blab.core.moebius import MoebiusAutomorphism, check_closed_disc, moebius_apply_unchecked
from blab.errors import DomainViolationError, RootFindingError
from blab.utils.iter_utils import chunked
from blab.utils.roots import PolynomialRootFinder, RootMethod, newton_polish
from blab.utils.series import poly_from_roots_ascending, reciprocal_ascending, series_divide

logger = logging.getLogger(__name__)

EVAL_CHUNK = 8192
COMPOSE_RESIDUAL_TOL = 1e-8
# Roots found at modulus in [1, 1 + margin) are pulled back inside; beyond the margin it is an error.
ROOT_MARGIN = 1e-9
_PROBES = np.exp(2j * np.pi * (np.arange(32) + 0.25) / 32)


@dataclass(frozen=True)
class FiniteBlaschkeProduct:
    zeta: complex = 1 + 0j
    zeros: tuple[complex, ...] = ()

    def __post_init__(self):
        zeta = complex(self.zeta)
        if abs(abs(zeta) - 1.0) > BOUNDARY_TOL:
            raise DomainViolationError(f"Leading constant must be unimodular, got {zeta!r}")
        zeros = tuple(complex(w) for w in self.zeros)
        for w in zeros:
            if not abs(w) < 1.0:
                raise DomainViolationError(f"Blaschke zeros must lie in the open disc, got {w!r}")
        object.__setattr__(self, "zeta", zeta / abs(zeta))
        object.__setattr__(self, "zeros", zeros)

    @property
    def degree(self) -> int:
        return len(self.zeros)

    @property
    def zero_array(self) -> np.ndarray:
        return np.asarray(self.zeros, dtype=complex)

    @property
    def near_boundary_zeros(self) -> list[complex]:
        """Zeros within 1e-9 of the circle (accepted, reported in diagnostics)."""
        return [w for w in self.zeros if abs(w) >= 1.0 - ZERO_FLAG_TOL]

    @property
    def max_zero_modulus(self) -> float:
        return float(np.max(np.abs(self.zero_array))) if self.zeros else 0.0

    def __call__(self, z):
        return evaluate(self, z)

    @classmethod
    def from_normalized(cls, zeta: complex, zeros) -> "FiniteBlaschkeProduct":
        """Build from a computed constant, projecting it back onto the circle."""
        zeta = complex(zeta)
        return cls(zeta=zeta / abs(zeta), zeros=tuple(zeros))


def identity_product() -> FiniteBlaschkeProduct:
    return FiniteBlaschkeProduct(zeta=1 + 0j, zeros=(0j,))


def _evaluate_raw(B: FiniteBlaschkeProduct, z: np.ndarray) -> np.ndarray:
    if B.degree == 0:
        return np.full(z.shape, B.zeta, dtype=complex)
    w = B.zero_array
    flat = z.ravel()
    out = np.empty(flat.shape, dtype=complex)
    offset = 0
    for block in chunked(flat, EVAL_CHUNK):
        factors = (block[:, None] - w[None, :]) / (1.0 - np.conj(w)[None, :] * block[:, None])
        out[offset : offset + block.shape[0]] = B.zeta * np.prod(factors, axis=1)
        offset += block.shape[0]
    return out.reshape(z.shape)


def evaluate(B: FiniteBlaschkeProduct, z):
    """Evaluate B at a point or an array of points of the closed disc.

    Raises:
        DomainViolationError: If some |z| > 1 + 1e-12.
    """
    check_closed_disc(z)
    if np.ndim(z) == 0:
        return complex(_evaluate_raw(B, np.asarray([complex(z)]))[0])
    return _evaluate_raw(B, np.asarray(z, dtype=complex))


def evaluate_log_derivative(B: FiniteBlaschkeProduct, z) -> np.ndarray:
    """B'(z)/B(z) = sum (1 - |a|^2) / ((z - a)(1 - conj(a) z))."""
    z = np.asarray(z, dtype=complex)
    w = B.zero_array
    if B.degree == 0:
        return np.zeros(z.shape, dtype=complex)
    terms = (1.0 - np.abs(w) ** 2)[None, :] / (
        (z.ravel()[:, None] - w[None, :]) * (1.0 - np.conj(w)[None, :] * z.ravel()[:, None])
    )
    return terms.sum(axis=1).reshape(z.shape)


def boundary_derivative_bound(B: FiniteBlaschkeProduct) -> float:
    """Sup of |B'| on the circle: sum of the Poisson-type factor derivatives (1+|a|)/(1-|a|)."""
    if B.degree == 0:
        return 0.0
    r = np.abs(B.zero_array)
    return float(np.sum((1.0 + r) / (1.0 - r)))


def evaluate_dilate(B: FiniteBlaschkeProduct, r: float, z):
    """B(r z) for 0 < r < 1 and |z| <= 1."""
    if not 0.0 < r < 1.0:
        raise DomainViolationError(f"Dilation radius must lie in (0, 1), got {r!r}")
    check_closed_disc(z)
    return evaluate(B, r * np.asarray(z, dtype=complex) if np.ndim(z) else r * complex(z))


def multiply(B1: FiniteBlaschkeProduct, B2: FiniteBlaschkeProduct) -> FiniteBlaschkeProduct:
    return FiniteBlaschkeProduct.from_normalized(B1.zeta * B2.zeta, B1.zeros + B2.zeros)


def prepend_zero_at_origin(B: FiniteBlaschkeProduct) -> FiniteBlaschkeProduct:
    """The product z -> z * B(z)."""
    return FiniteBlaschkeProduct(zeta=B.zeta, zeros=(0j,) + B.zeros)


def blaschke_factor(a: complex, normalized: bool = False) -> FiniteBlaschkeProduct:
    """Single factor with zero ``a``.

    By default the factor is (z - a)/(1 - conj(a) z). With ``normalized`` the
    constant is chosen so that the factor tends to 1 far from ``a`` on the circle,
    i.e. its value at the origin is the positive number |a|.
    """
    if not normalized or a == 0:
        return FiniteBlaschkeProduct(zeta=1 + 0j, zeros=(complex(a),))
    u = a / abs(a)
    return FiniteBlaschkeProduct(zeta=-np.conj(u), zeros=(complex(a),))


def compose_moebius_after(
    m: MoebiusAutomorphism,
    B: FiniteBlaschkeProduct,
    method: str | RootMethod = RootMethod.ABERTH,
) -> FiniteBlaschkeProduct:
    """The finite Blaschke product m∘B.

    The zeros of m∘B solve B(z) = w, i.e. they are the roots of the numerator
    N = zeta_B * P - w * Q with P = prod (z - a_k) and Q = prod (1 - conj(a_k) z).
    N is expanded in coefficient form, solved by simultaneous iteration and
    Newton-polished in product form. The rotation is fitted on the circle.

    Raises:
        RootFindingError: If a root leaves the disc or the fitted product does
            not reproduce m∘B on the probe circle to 1e-8.
    """
    if m.w == 0:
        return FiniteBlaschkeProduct.from_normalized(m.zeta * B.zeta, B.zeros)
    if B.degree == 0:
        value = moebius_apply_unchecked(m, B.zeta)
        return FiniteBlaschkeProduct.from_normalized(value, ())

    a = B.zero_array
    P = poly_from_roots_ascending(a)
    Q = reciprocal_ascending(a)
    numerator = B.zeta * P - m.w * Q
    roots = PolynomialRootFinder.solve(numerator[::-1], method=method)

    def _numerator_and_derivative(z):
        diff = z[:, None] - a[None, :]
        recip = 1.0 - np.conj(a)[None, :] * z[:, None]
        p_val = np.prod(diff, axis=1)
        q_val = np.prod(recip, axis=1)
        value = B.zeta * p_val - m.w * q_val
        deriv = np.polyval(np.polyder(numerator[::-1]), z)
        return value, deriv

    roots = newton_polish(roots, _numerator_and_derivative)
    moduli = np.abs(roots)
    if np.any(moduli >= 1.0 + ROOT_MARGIN) or not np.all(np.isfinite(roots)):
        raise RootFindingError(
            f"compose_moebius_after: root outside the disc (max modulus {float(np.max(moduli)):.12f})"
        )
    inside = 1.0 - 1e-15
    roots = np.where(moduli >= inside, roots / moduli * inside, roots)

    target = moebius_apply_unchecked(m, _evaluate_raw(B, _PROBES))
    base = _evaluate_raw(FiniteBlaschkeProduct(1 + 0j, tuple(roots)), _PROBES)
    zeta = np.mean(target / base)
    result = FiniteBlaschkeProduct.from_normalized(zeta, tuple(roots))
    residual = float(np.max(np.abs(_evaluate_raw(result, _PROBES) - target)))
    if residual > COMPOSE_RESIDUAL_TOL * max(1, B.degree):
        raise RootFindingError(
            f"compose_moebius_after: residual {residual:.3e} on the probe circle (degree {B.degree})"
        )
    if result.near_boundary_zeros:
        logger.warning(f"compose_moebius_after produced {len(result.near_boundary_zeros)} near-boundary zeros")
    return result


def taylor_series(B: FiniteBlaschkeProduct, count: int) -> np.ndarray:
    """First ``count`` Taylor coefficients of B at the origin."""
    num = poly_from_roots_ascending(B.zeros, scale=B.zeta)
    den = reciprocal_ascending(B.zeros)
    return series_divide(num, den, count)


def sup_error(B: FiniteBlaschkeProduct, target: Callable | np.ndarray, domain) -> float:
    """max over ``domain`` of |B - target|; ``target`` is a callable or values on ``domain``."""
    domain = np.asarray(domain, dtype=complex)
    values = target(domain) if callable(target) else np.asarray(target, dtype=complex)
    return float(np.max(np.abs(evaluate(B, domain) - values))) if domain.size else 0.0
