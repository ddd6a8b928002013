"""Dense complex matrix helpers shared by the device, surrogate and PTC layers.

Matrices are plain ``numpy`` arrays (``complex128`` / ``float64``) stored in
row-major (C) order.
"""

import numpy as np


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


def as_matrix(a, dtype=complex):
    """Validate and return ``a`` as a finite 2-D array."""
    a = np.asarray(a, dtype=dtype)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def cmatmul(a, b):
    """Complex matrix product ``a @ b``."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def rel_frob_distance(a, b):
    """Squared relative Frobenius distance ``||a - b||_F^2 / ||b||_F^2``.

    Works on complex or real inputs. Raises ``ZeroDivisionError`` when ``b``
    is all-zero.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    nb = _scaled_norm(b)
    if nb == 0:
        raise ZeroDivisionError("reference matrix is all-zero")
    return float((_scaled_norm(a - b) / nb) ** 2)


def _scaled_norm(x):
    # divide by the largest magnitude first so tiny or huge entries do not under/overflow
    mags = np.abs(x)
    top = mags.max()
    if top == 0 or not np.isfinite(top):
        return float(top)
    return float(top * np.sqrt(np.sum((mags / top) ** 2)))


def sigma_max(w, tol=1e-12, max_iter=10_000):
    """Largest singular value via power iteration on ``w^H w``."""
    w = as_matrix(w)
    gram = w.conj().T @ w
    # fixed pseudo-random start: an all-ones start misses e.g. [[1, -1], [1, -1]]
    start = np.random.default_rng(0).standard_normal((2, gram.shape[0]))
    v = (start[0] + 1j * start[1]) / np.linalg.norm(start)
    lam = 0.0
    for _ in range(max_iter):
        u = gram @ v
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 0.0
        v = u / norm
        new_lam = norm
        if abs(new_lam - lam) <= tol * max(new_lam, 1.0):
            lam = new_lam
            break
        lam = new_lam
    return float(np.sqrt(lam))


def passivity_excess(w):
    """``max(0, sigma_max(w) - 1)``; zero for passive (lossless or lossy) transfers."""
    return max(0.0, sigma_max(w) - 1.0)


def symmetry_error(w):
    """Relative distance of a square matrix from its (non-conjugate) transpose."""
    w = as_matrix(w)
    if w.shape[0] != w.shape[1]:
        raise DimensionError(f"symmetry needs a square matrix, got {w.shape}")
    return float(np.linalg.norm(w - w.T) / max(np.linalg.norm(w), np.finfo(float).tiny))


def random_unitary(k, rng):
    """Haar-ish random unitary from the QR of a complex Gaussian matrix."""
    z = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
