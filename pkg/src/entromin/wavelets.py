"""Daubechies filters and periodized 2-D wavelet transforms.

The db1..db4 lowpass taps are computed by spectral factorization rather
than embedded as literals, then validated against the filter identities
(sum = sqrt(2), shift orthonormality) in the test suite.  Periodization
keeps every level exactly orthonormal on power-of-two sizes, which is what
makes the four-basis concatenation a tight frame.
"""

import numpy as np
from scipy.special import comb

from .backend import kernels
from .errors import ConfigError


def daubechies_taps(order: int) -> np.ndarray:
    """Lowpass decomposition taps for the extremal-phase Daubechies family.

    Spectral factorization: the halfband polynomial residue is rooted, the
    roots inside the unit circle are kept, and a Newton polish keeps the
    taps accurate to ~1e-15.
    """
    if not 1 <= order <= 10:
        raise ConfigError("order must be in 1..10")
    if order == 1:
        return np.array([1.0, 1.0]) / np.sqrt(2.0)
    # residue polynomial R(z) of degree 2*order-2, coefficient accumulation
    R = np.zeros(2 * order - 1)
    for k in range(order):
        base = np.array([1.0])
        for _ in range(2 * k):
            base = np.convolve(base, [1.0, -1.0])
        term = comb(order - 1 + k, k) * (-1.0) ** k * 4.0 ** (order - 1 - k) * base
        deg = order - 1 + k
        R[(2 * order - 2 - deg):(2 * order - 2 - deg) + 2 * k + 1] += term
    roots = np.roots(R)
    dR = np.polyder(R)
    for _ in range(3):
        roots = roots - np.polyval(R, roots) / np.polyval(dR, roots)
    inside = roots[np.abs(roots) < 1.0]
    h = np.array([1.0])
    for _ in range(order):
        h = np.convolve(h, [1.0, 1.0])
    for zi in inside:
        h = np.convolve(h, [1.0, -zi])
    h = np.real(h)
    h *= np.sqrt(2.0) / h.sum()
    return h


def qmf(h: np.ndarray) -> np.ndarray:
    """Highpass taps from lowpass taps by the quadrature mirror rule."""
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


def max_levels(side: int) -> int:
    """Deepest decomposition that keeps at least 4 samples per dimension."""
    return max(int(np.log2(side)) - 2, 1)


def _check_square_pow2(img):
    n = img.shape[0]
    if img.ndim != 2 or img.shape[1] != n:
        raise ConfigError(f"expected a square image, got shape {img.shape}")
    if n < 4 or n & (n - 1):
        raise ConfigError(f"side must be a power of two >= 4, got {n}")
    return n


def dwt2(img: np.ndarray, h: np.ndarray, g: np.ndarray, levels: int) -> np.ndarray:
    """Multi-level separable periodized analysis of a square image.

    Standard quadrant layout per level on the shrinking top-left block:
    approximation in the top-left, details alongside.
    """
    n = _check_square_pow2(img)
    if not 1 <= levels <= int(np.log2(n)):
        raise ConfigError(f"levels {levels} out of range for side {n}")
    out = np.array(img, dtype=np.float64, copy=True)
    for _ in range(levels):
        blk = np.ascontiguousarray(out[:n, :n])
        a, d = kernels.dwt_cols(blk, h, g)
        cols = np.vstack((a, d))
        a2, d2 = kernels.dwt_cols(np.ascontiguousarray(cols.T), h, g)
        out[:n, :n] = np.vstack((a2, d2)).T
        n //= 2
    return out


def idwt2(coef: np.ndarray, h: np.ndarray, g: np.ndarray, levels: int) -> np.ndarray:
    """Exact adjoint (= inverse, by orthonormality) of dwt2."""
    n = _check_square_pow2(coef)
    if not 1 <= levels <= int(np.log2(n)):
        raise ConfigError(f"levels {levels} out of range for side {n}")
    out = np.array(coef, dtype=np.float64, copy=True)
    sizes = [n >> k for k in range(levels)]
    for n in reversed(sizes):
        blk = out[:n, :n]
        half = n // 2
        rows = kernels.idwt_cols(
            np.ascontiguousarray(blk.T[:half]),
            np.ascontiguousarray(blk.T[half:]), h, g)
        cols = rows.T
        out[:n, :n] = kernels.idwt_cols(
            np.ascontiguousarray(cols[:half]),
            np.ascontiguousarray(cols[half:]), h, g)
    return out
