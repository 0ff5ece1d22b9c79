"""DCT-II/III transforms and the DCT-diagonalized generalized Sylvester solver.

The DCT-II used here is the non-orthogonal matrix

    C[i, j] = cos(i * (j + 1/2) * pi / n),   0 <= i, j < n,

and ``dct3`` is its exact inverse. Both are evaluated with
``scipy.fft`` (FFT based), never through dense matrices.

With Neumann boundaries ``L_n = D_n^T D_n`` satisfies
``C L_n C^{-1} = diag(s)`` with ``s[i] = 4 sin^2(pi i / 2n)``, so any system

    alpha X + rho * sum_a X x_a L = B

is solved by a forward DCT along the active modes, a pointwise division and
an inverse DCT.
"""
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .tensor_core import laplacian_apply


def dct2_axis(t, mode):
    """Unnormalized DCT-II along 1-based ``mode``."""
    t = np.asarray(t, dtype=np.float64)
    # scipy's unnormalized type-2 DCT carries an extra factor 2
    return 0.5 * scipy.fft.dct(t, type=2, axis=mode - 1)


def dct3_axis(t, mode):
    """Inverse of :func:`dct2_axis` along 1-based ``mode``."""
    t = np.asarray(t, dtype=np.float64)
    return scipy.fft.idct(2.0 * t, type=2, axis=mode - 1)


def dct2(t, modes=None):
    """DCT-II over several modes (all of them by default)."""
    t = np.asarray(t, dtype=np.float64)
    modes = range(1, t.ndim + 1) if modes is None else modes
    axes = [m - 1 for m in modes]
    if not axes:
        return t.copy()
    return scipy.fft.dctn(t, type=2, axes=axes) / 2.0 ** len(axes)


def dct3(t, modes=None):
    """Inverse of :func:`dct2` over the same modes."""
    t = np.asarray(t, dtype=np.float64)
    modes = range(1, t.ndim + 1) if modes is None else modes
    axes = [m - 1 for m in modes]
    if not axes:
        return t.copy()
    return scipy.fft.idctn(t * 2.0 ** len(axes), type=2, axes=axes)


def dct2_matrix(n):
    """Dense DCT-II matrix; test oracle only."""
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    return np.cos(i * (j + 0.5) * np.pi / n)


@dataclass(frozen=True)
class NeumannSpectrum:
    """Eigenvalues of ``L_n`` in DCT index order (``s[0] = 0``)."""

    n: int
    s: np.ndarray


def neumann_eigs(n):
    """Eigenvalues ``s[i] = 2 - 2 cos(pi i / n)`` of the Neumann Laplacian.

    This equals the quotient ``(cos(a) - cos(3a)) / cos(a)`` with
    ``a = pi i / 2n`` but has no removable singularity.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(n)
    s = 2.0 - 2.0 * np.cos(np.pi * i / n)
    s[0] = 0.0
    return NeumannSpectrum(n=n, s=s)


def neumann_eigs_quotient(n):
    """The cosine-quotient form of the eigenvalues (oracle only)."""
    a = np.pi * np.arange(n) / (2 * n)
    return (np.cos(a) - np.cos(3 * a)) / np.cos(a)


@dataclass(frozen=True)
class SylvesterWeights:
    """Coefficients of ``alpha X + rho * sum_{a in active_axes} X x_a L_a = B``."""

    alpha: float = 1.0
    rho: float = 1.0
    active_axes: tuple = (1, 2, 3)

    def __post_init__(self):
        if not self.alpha > 0:
            # alpha = 0 leaves the constant mode in the kernel of every Laplacian
            raise ValueError(f"singular Sylvester system: alpha={self.alpha}")
        if self.rho < 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        if any(a not in (1, 2, 3) for a in self.active_axes):
            raise ValueError(f"invalid active axes {self.active_axes}")
        object.__setattr__(self, "active_axes", tuple(sorted(set(self.active_axes))))


def sylvester_denominator(shape, w):
    """Pointwise divisor ``alpha + rho * sum_a s_a`` on the DCT grid."""
    den = np.full(shape, float(w.alpha))
    if w.rho == 0:
        return den
    for a in w.active_axes:
        if a > len(shape):
            continue
        s = neumann_eigs(shape[a - 1]).s
        bshape = [1] * len(shape)
        bshape[a - 1] = shape[a - 1]
        den = den + w.rho * s.reshape(bshape)
    return den


def solve_sylvester(b, w):
    """Solve ``alpha X + rho * sum_a X x_a L = B`` for ``X``.

    Parameters
    ----------
    b : ndarray
        Right-hand side, any order up to 3 (vectors and matrices are treated
        as cubes with trailing singleton modes).
    w : SylvesterWeights

    Returns
    -------
    ndarray
        Solution with the same shape as ``b``.
    """
    b = np.asarray(b, dtype=np.float64)
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side contains non-finite values")
    modes = [a for a in w.active_axes if a <= b.ndim and b.shape[a - 1] > 1]
    if w.rho == 0 or not modes:
        return b / w.alpha
    den = sylvester_denominator(b.shape, SylvesterWeights(w.alpha, w.rho, tuple(modes)))
    return dct3(dct2(b, modes) / den, modes)


def sylvester_apply(x, w):
    """Left-hand side operator ``alpha X + rho * sum_a X x_a L`` (matrix-free)."""
    x = np.asarray(x, dtype=np.float64)
    out = w.alpha * x
    for a in w.active_axes:
        if a <= x.ndim:
            out = out + w.rho * laplacian_apply(x, a)
    return out
