from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from blab.config.settings import BOUNDARY_TOL
from blab.errors import DomainViolationError

# Poles closer to the circle than this are rejected, not clamped.
POLE_MARGIN = 1e-14


def check_closed_disc(z, what: str = "z") -> None:
    """Raise DomainViolationError if any entry of ``z`` has modulus > 1 + 1e-12."""
    modulus = np.abs(np.asarray(z))
    if modulus.size and float(np.max(modulus)) > 1.0 + BOUNDARY_TOL:
        raise DomainViolationError(
            f"{what} must lie in the closed unit disc, got modulus {float(np.max(modulus))!r}"
        )


@dataclass(frozen=True)
class MoebiusAutomorphism:
    """Disc automorphism z -> zeta * (z - w) / (1 - conj(w) z)."""

    w: complex = 0j
    zeta: complex = 1 + 0j

    def __post_init__(self):
        w = complex(self.w)
        zeta = complex(self.zeta)
        if abs(w) >= 1.0 - POLE_MARGIN:
            raise DomainViolationError(f"Automorphism parameter must satisfy |w| < 1, got {w!r}")
        if abs(abs(zeta) - 1.0) > BOUNDARY_TOL:
            raise DomainViolationError(f"Rotation factor must be unimodular, got {zeta!r}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "zeta", zeta)

    def __call__(self, z):
        return moebius_eval(self, z)

    @property
    def is_identity(self) -> bool:
        return self.w == 0 and self.zeta == 1


def _apply(m: MoebiusAutomorphism, z):
    return m.zeta * (z - m.w) / (1.0 - np.conj(m.w) * z)


def moebius_eval(m: MoebiusAutomorphism, z):
    """Evaluate ``m`` at a point or array of points in the closed disc.

    Args:
        m (MoebiusAutomorphism): The automorphism.
        z (complex | np.ndarray): Evaluation point(s), |z| <= 1 + 1e-12.

    Returns:
        complex | np.ndarray: zeta * (z - w) / (1 - conj(w) z), same shape as ``z``.

    Raises:
        DomainViolationError: If some |z| exceeds 1 + 1e-12.
    """
    check_closed_disc(z)
    if np.ndim(z) == 0:
        return complex(_apply(m, complex(z)))
    return _apply(m, np.asarray(z, dtype=complex))


def moebius_apply_unchecked(m: MoebiusAutomorphism, values):
    """Apply ``m`` to values already known to lie in the closed disc (no domain check)."""
    return _apply(m, values)


def moebius_inverse(m: MoebiusAutomorphism) -> MoebiusAutomorphism:
    # Solving y = zeta (z - w)/(1 - conj(w) z) for z gives parameter -zeta*w, rotation conj(zeta).
    return MoebiusAutomorphism(w=-m.zeta * m.w, zeta=np.conj(m.zeta))


def moebius_compose(outer: MoebiusAutomorphism, inner: MoebiusAutomorphism) -> MoebiusAutomorphism:
    """Return the automorphism outer∘inner in (w, zeta) normal form."""
    # outer∘inner maps w' = inner^{-1}(outer^{-1}(0)) to 0.
    w_new = moebius_eval(moebius_inverse(inner), moebius_eval(moebius_inverse(outer), 0j))
    # Rotation read off at a probe point on the far side of the new parameter.
    probe = -0.5 * w_new / abs(w_new) if abs(w_new) > 0 else 0.5 + 0j
    value = moebius_eval(outer, moebius_eval(inner, probe))
    zeta_new = value * (1.0 - np.conj(w_new) * probe) / (probe - w_new)
    zeta_new = zeta_new / abs(zeta_new)
    return MoebiusAutomorphism(w=w_new, zeta=zeta_new)


def moebius_lipschitz_bound(m: MoebiusAutomorphism) -> float:
    """Sup of |m'| over the closed disc, (1 + |w|) / (1 - |w|)."""
    r = abs(m.w)
    return (1.0 + r) / (1.0 - r)
