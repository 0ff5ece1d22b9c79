"""Comparison methods: local median/Wiener filters and three NMF algorithms.

NMF baselines work on a matrix ``M`` of shape (bands, pixels) whose columns
are observed spectra; use :func:`cube_to_pixels` / :func:`pixels_to_cube` to
move between cubes and that layout. Local filters use a 3x3x3 neighborhood
with replicate ("nearest") padding at the borders.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.ndimage
import scipy.optimize

from .admm import AdmmConfig
from .tensor_core import fold, unfold

EPS = 1e-12
_TINY_NORM = 1e-300


@dataclass
class FactorPair:
    """Nonnegative factors ``W`` (bands x k) and ``H`` (k x pixels)."""

    W: np.ndarray
    H: np.ndarray
    objective: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def product(self):
        return self.W @ self.H


def cube_to_pixels(cube):
    """Mode-3 unfolding: (m, n, o) cube -> (o, m*n) matrix of spectra."""
    return unfold(cube, 3)


def pixels_to_cube(mat, dims):
    return fold(mat, 3, dims)


def median3(y):
    """Median over each voxel's 3x3x3 neighborhood."""
    return scipy.ndimage.median_filter(np.asarray(y, dtype=np.float64), size=3, mode="nearest")


def local_moments(y):
    """Local mean and (population) variance over 3x3x3 neighborhoods."""
    y = np.asarray(y, dtype=np.float64)
    mean = scipy.ndimage.uniform_filter(y, size=3, mode="nearest")
    sq = scipy.ndimage.uniform_filter(y * y, size=3, mode="nearest")
    return mean, np.maximum(sq - mean * mean, 0.0)


def wiener3(y, sigma):
    """Adaptive Wiener filter with noise standard deviation ``sigma``.

    Each voxel ``x`` becomes ``r m_x + (1 - r) x`` with ``r = sigma^2 / var_x``
    when ``var_x >= sigma^2``, and the local mean ``m_x`` otherwise.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    y = np.asarray(y, dtype=np.float64)
    mean, var = local_moments(y)
    s2 = float(sigma) ** 2
    keep = var >= s2
    ratio = np.zeros_like(var)
    nz = keep & (var > 0)
    ratio[nz] = s2 / var[nz]
    return np.where(keep, ratio * mean + (1.0 - ratio) * y, mean)


def estimate_noise_sigma(y):
    """Robust noise level from spectral first differences (MAD estimator)."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] < 2:
        return 0.0
    d = np.diff(y, axis=-1).ravel() / np.sqrt(2.0)
    return float(np.median(np.abs(d - np.median(d))) / 0.6744897501960817)


def _check_nonneg(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {M.shape}")
    if np.any(M < 0):
        raise ValueError("input matrix has negative entries")
    return M


def lee_seung(M, k, iters=500, seed=0):
    """Multiplicative updates for ``min 1/2 ||M - W H||_F^2``, ``W, H >= 0``.

    ``FactorPair.objective`` holds the objective after every iteration
    (entry 0 is the initial value).
    """
    M = _check_nonneg(M)
    o, p = M.shape
    rng = np.random.default_rng(seed)
    scale = np.sqrt(max(M.mean(), 0.0) / k) if M.size else 0.0
    W = rng.uniform(size=(o, k)) * scale
    H = rng.uniform(size=(k, p)) * scale
    obj = [0.5 * float(np.sum((M - W @ H) ** 2))]
    for _ in range(iters):
        H *= (W.T @ M) / (W.T @ W @ H + EPS)
        W *= (M @ H.T) / (W @ (H @ H.T) + EPS)
        obj.append(0.5 * float(np.sum((M - W @ H) ** 2)))
    return FactorPair(W=W, H=H, objective=obj)


def spa(M, k):
    """Successive projection algorithm.

    Repeatedly picks the column of largest residual norm and projects all
    columns onto the orthogonal complement of it.

    Returns
    -------
    indices : list of int
        Selected columns, fewer than ``k`` if the residual vanishes first
        (a ``RuntimeWarning`` is issued).
    W : ndarray
        The selected original columns.
    """
    M = np.asarray(M, dtype=np.float64)
    if k > M.shape[1]:
        raise ValueError(f"k={k} exceeds the number of columns {M.shape[1]}")
    R = M.copy()
    norms = np.sum(R ** 2, axis=0)
    tol = 1e-24 * max(norms.max(initial=0.0), _TINY_NORM)
    indices = []
    for _ in range(k):
        j = int(np.argmax(norms))
        if norms[j] <= tol:
            warnings.warn(f"SPA stopped after {len(indices)} of {k} columns: "
                          "residual vanished", RuntimeWarning, stacklevel=2)
            break
        indices.append(j)
        u = R[:, j] / np.sqrt(norms[j])
        R -= np.outer(u, u @ R)
        norms = np.sum(R ** 2, axis=0)
        norms[indices] = 0.0
    return indices, M[:, indices].copy()


def nnls_abundances(M, W):
    """Per-column nonnegative least squares ``min_{h >= 0} ||M_j - W h||``."""
    M = np.asarray(M, dtype=np.float64)
    H = np.empty((W.shape[1], M.shape[1]))
    for j in range(M.shape[1]):
        H[:, j], _ = scipy.optimize.nnls(W, M[:, j])
    return H


def spa_unmix(M, k):
    """SPA endmembers followed by NNLS abundances."""
    _, W = spa(M, k)
    return FactorPair(W=W, H=nnls_abundances(M, W))


def admm_nmf(M, k, cfg=None):
    """Four-block ADMM for NMF.

    Splitting ``min 1/2 ||M - X1 Z2||^2 + chi_+(X2) + chi_+(Z1)`` subject to
    ``X1 = Z1``, ``X2 = Z2``. The X1 and Z2 updates are ridge least squares,
    X2 and Z1 are projections. Returns the nonnegative copies ``(Z1, X2)``;
    ``objective`` records ``1/2 ||M - Z1 X2||^2`` starting with the initial
    point and ``residuals`` the larger relative constraint residual per
    iteration. Stops early once that residual is below ``cfg.tol_primal`` and
    the relative change of ``(Z1, Z2)`` is below ``cfg.tol_dual``.
    """
    cfg = cfg or AdmmConfig()
    M = _check_nonneg(M)
    o, p = M.shape
    rho = cfg.rho
    rng = np.random.default_rng(cfg.seed)
    scale = np.sqrt(max(M.mean(), 0.0) / k) if M.size else 0.0
    X1 = rng.uniform(size=(o, k)) * scale
    Z2 = rng.uniform(size=(k, p)) * scale
    Z1, X2 = X1.copy(), Z2.copy()
    U1 = np.zeros_like(X1)
    U2 = np.zeros_like(Z2)
    eye = np.eye(k)
    obj = [0.5 * float(np.sum((M - Z1 @ X2) ** 2))]
    res = []
    for _ in range(cfg.max_iters):
        X1 = scipy.linalg.solve(Z2 @ Z2.T + rho * eye, (M @ Z2.T + rho * (Z1 - U1)).T,
                                assume_a="pos").T
        X2 = np.maximum(Z2 - U2, 0.0)
        Z1_prev, Z2_prev = Z1, Z2
        Z1 = np.maximum(X1 + U1, 0.0)
        Z2 = scipy.linalg.solve(X1.T @ X1 + rho * eye, X1.T @ M + rho * (X2 + U2),
                                assume_a="pos")
        r1 = X1 - Z1
        r2 = X2 - Z2
        U1 += r1
        U2 += r2
        obj.append(0.5 * float(np.sum((M - Z1 @ X2) ** 2)))
        rel = max(np.linalg.norm(r1) / max(np.linalg.norm(Z1), _TINY_NORM),
                  np.linalg.norm(r2) / max(np.linalg.norm(X2), _TINY_NORM))
        res.append(rel)
        change = max(np.linalg.norm(Z1 - Z1_prev) / max(np.linalg.norm(Z1), _TINY_NORM),
                     np.linalg.norm(Z2 - Z2_prev) / max(np.linalg.norm(Z2), _TINY_NORM))
        if rel <= cfg.tol_primal and change <= cfg.tol_dual:
            break
    return FactorPair(W=Z1, H=X2, objective=obj, residuals=res)
