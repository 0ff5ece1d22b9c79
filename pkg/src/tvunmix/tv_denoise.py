"""Anisotropic total-variation denoising by ADMM with Neumann boundaries.

Both solvers use the scaled ADMM form with constraints ``D x = z`` (one block
per differentiated mode). Each x-update is a DCT-diagonalized solve of

    x + rho * sum_a x x_a L_a = y + rho * sum_a (z_a - u_a) x_a D_a^T,

the z-updates are soft thresholds of ``x x_a D_a + u_a`` and the scaled
duals accumulate ``x x_a D_a - z_a``.

Residuals stored in :class:`SolveDiagnostics` are relative to ``||y||_F``:
primal ``||x D - z||`` and dual ``rho ||(z - z_prev) D^T||`` summed over
blocks in mode order.
"""
from dataclasses import dataclass, field

import numpy as np

from .admm import AdmmConfig, SolveDiagnostics
from .tensor_core import diff_adjoint, diff_apply
from .transforms import SylvesterWeights, solve_sylvester

__all__ = [
    "AdmmConfig",
    "SolveDiagnostics",
    "soft",
    "tv1d",
    "total_variation",
    "tv3d_denoise",
    "Tv3dState",
]

_TINY = 1e-300


def soft(x, tau):
    """Soft threshold ``sign(x) * max(|x| - tau, 0)``, elementwise."""
    if np.any(np.asarray(tau) < 0):
        raise ValueError("threshold must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    return out if out.ndim else float(out)


def tv1d(y, lam, cfg=None):
    """Solve ``min_x 1/2 ||y - x||^2 + lam ||D x||_1`` for a 1-D signal.

    Returns
    -------
    x : ndarray
    diag : SolveDiagnostics
    """
    cfg = cfg or AdmmConfig()
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size < 1:
        raise ValueError("signal must be non-empty")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    diag = SolveDiagnostics()
    # zero weight or a constant signal: the input is already the minimizer
    if lam == 0 or y.size < 2 or np.all(y == y[0]):
        diag.converged = True
        return y.copy(), diag

    rho = cfg.rho
    w = SylvesterWeights(alpha=1.0, rho=rho, active_axes=(1,))
    scale = max(np.linalg.norm(y), _TINY)
    z = np.zeros(y.size - 1)
    u = np.zeros_like(z)
    x = y.copy()
    for _ in range(cfg.max_iters):
        x = solve_sylvester(y + rho * diff_adjoint(z - u, 1), w)
        dx = diff_apply(x, 1)
        z_prev = z
        z = soft(dx + u, lam / rho)
        r = dx - z
        u = u + r
        primal = np.linalg.norm(r) / scale
        dual = rho * np.linalg.norm(diff_adjoint(z - z_prev, 1)) / scale
        obj = 0.5 * np.sum((y - x) ** 2) + lam * np.sum(np.abs(dx))
        diag.record(obj, primal, dual)
        if primal <= cfg.tol_primal and dual <= cfg.tol_dual:
            diag.converged = True
            break
    return x, diag


def total_variation(t, lambda_s=1.0, lambda_t=1.0):
    """Weighted anisotropic TV ``lambda_s (|t x1 D| + |t x2 D|) + lambda_t |t x3 D|``.

    Modes of length 1 contribute nothing.
    """
    t = np.asarray(t, dtype=np.float64)
    weights = (lambda_s, lambda_s, lambda_t)
    total = 0.0
    for mode in range(1, t.ndim + 1):
        if t.shape[mode - 1] >= 2 and weights[mode - 1] != 0:
            total += weights[mode - 1] * np.sum(np.abs(diff_apply(t, mode)))
    return float(total)


@dataclass
class Tv3dState:
    """Iterates of the 3-D TV solver; ``z`` and ``u`` are keyed by mode."""

    x: np.ndarray
    z: dict = field(default_factory=dict)
    u: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)


def _tv_blocks(shape, cfg):
    weights = {1: cfg.lambda_s, 2: cfg.lambda_s, 3: cfg.lambda_t}
    # zero-weight terms are dropped: their constraint is free at the optimum
    return {a: weights[a] for a in (1, 2, 3) if shape[a - 1] >= 2 and weights[a] > 0}


def tv3d_x_update(y, state, rho):
    """Exact minimizer of the augmented Lagrangian over ``x``."""
    b = y.copy()
    for a in state.weights:
        b += rho * diff_adjoint(state.z[a] - state.u[a], a)
    w = SylvesterWeights(alpha=1.0, rho=rho, active_axes=tuple(state.weights))
    return solve_sylvester(b, w)


def tv3d_z_update(state, rho):
    """Soft-threshold updates for every TV block, given the current ``x``."""
    return {a: soft(diff_apply(state.x, a) + state.u[a], lam / rho)
            for a, lam in state.weights.items()}


def tv3d_denoise(y, cfg=None, callback=None):
    """Spectral-spatial TV filter of a hyperspectral cube.

    Solves ``min_x 1/2 ||y - x||_F^2 + lambda_s (|x x1 D| + |x x2 D|)
    + lambda_t |x x3 D|`` with ``cfg.rho`` as ADMM penalty.

    Parameters
    ----------
    y : ndarray, shape (m, n, o)
    cfg : AdmmConfig
    callback : callable, optional
        Called as ``callback(iteration, state)`` after each iteration.

    Returns
    -------
    x : ndarray
    diag : SolveDiagnostics
    """
    cfg = cfg or AdmmConfig()
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 3:
        raise ValueError(f"expected a cube, got shape {y.shape}")
    diag = SolveDiagnostics()
    weights = _tv_blocks(y.shape, cfg)
    if not weights or np.all(y == y.flat[0]):
        diag.converged = True
        return y.copy(), diag

    rho = cfg.rho
    scale = max(np.linalg.norm(y), _TINY)
    state = Tv3dState(x=y.copy(), weights=weights)
    for a in weights:
        shp = list(y.shape)
        shp[a - 1] -= 1
        state.z[a] = np.zeros(shp)
        state.u[a] = np.zeros(shp)

    for it in range(cfg.max_iters):
        state.x = tv3d_x_update(y, state, rho)
        z_prev = state.z
        state.z = tv3d_z_update(state, rho)
        primal_sq = 0.0
        dual_vec = np.zeros_like(y)
        for a in weights:
            r = diff_apply(state.x, a) - state.z[a]
            state.u[a] = state.u[a] + r
            primal_sq += np.sum(r ** 2)
            dual_vec += diff_adjoint(state.z[a] - z_prev[a], a)
        primal = np.sqrt(primal_sq) / scale
        dual = rho * np.linalg.norm(dual_vec) / scale
        obj = 0.5 * np.sum((y - state.x) ** 2) + total_variation(
            state.x, cfg.lambda_s, cfg.lambda_t)
        diag.record(obj, primal, dual)
        if callback is not None:
            callback(it, state)
        if primal <= cfg.tol_primal and dual <= cfg.tol_dual:
            diag.converged = True
            break
    return state.x, diag
