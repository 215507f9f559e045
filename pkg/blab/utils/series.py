import numpy as np


def series_divide(num: np.ndarray, den: np.ndarray, count: int) -> np.ndarray:
    """First ``count`` Taylor coefficients of num/den (ascending coefficient arrays).

    Raises:
        ZeroDivisionError: If den[0] == 0.
    """
    if den[0] == 0:
        raise ZeroDivisionError("Series division needs a non-zero constant term.")
    num = np.asarray(num, dtype=complex)
    den = np.asarray(den, dtype=complex)
    a = np.zeros(count, dtype=complex)
    a[: min(count, num.shape[0])] = num[:count]
    b = np.zeros(count, dtype=complex)
    b[: min(count, den.shape[0])] = den[:count]
    out = np.zeros(count, dtype=complex)
    for k in range(count):
        # c_k = (a_k - sum_{i<k} c_i b_{k-i}) / b_0
        acc = a[k] - np.dot(out[:k], b[k:0:-1]) if k else a[k]
        out[k] = acc / b[0]
    return out


def series_multiply(a: np.ndarray, b: np.ndarray, count: int) -> np.ndarray:
    return np.convolve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))[:count]


def poly_from_roots_ascending(roots, scale: complex = 1.0) -> np.ndarray:
    """Ascending coefficients of scale * prod (z - r)."""
    coeffs = np.array([scale], dtype=complex)
    for r in roots:
        coeffs = np.convolve(coeffs, np.array([-r, 1.0], dtype=complex))
    return coeffs


def reciprocal_ascending(roots) -> np.ndarray:
    """Ascending coefficients of prod (1 - conj(r) z)."""
    coeffs = np.array([1.0], dtype=complex)
    for r in roots:
        coeffs = np.convolve(coeffs, np.array([1.0, -np.conj(r)], dtype=complex))
    return coeffs
