"""TV-regularized NMF of a hyperspectral cube by ADMM.

Problem::

    min_{H >= 0, W >= 0}  1/2 ||M - H x3 W||_F^2
                          + lambda_s (||H x1 D_m||_1 + ||H x2 D_n||_1)
                          + lambda_t ||D_o W||_1

with ``M`` of shape (m, n, o), abundances ``H`` of shape (m, n, k) and
endmembers ``W`` of shape (o, k). The split uses master copies ``X0``
(abundances) and ``Z0`` (endmembers) and the seven constraints

    X1 = Z0,  X2 = D_o Z0,  X3 = Z0,
    Z1 = X0,  Z2 = X0 x1 D_m,  Z3 = X0 x2 D_n,  Z4 = X0.

Every constraint ``r_i = lhs_i - rhs_i`` enters its sub-problems as
``rho/2 ||r_i + U_i||^2`` and its scaled dual is updated by ``U_i += r_i``.
With that single convention the nine closed-form updates below are exact
minimizers; they coincide with the textbook formulas except for two
corrections noted inline (the X0 divisor and the Z0 system size).
"""
from dataclasses import dataclass, field, fields

import numpy as np
import scipy.linalg

from .admm import AdmmConfig, SolveDiagnostics
from .tensor_core import diff_adjoint
from .transforms import SylvesterWeights, solve_sylvester
from .tv_denoise import soft

_TINY = 1e-300


def _diff(t, mode):
    # forward difference that tolerates length-1 modes (empty result)
    return -np.diff(t, axis=mode - 1)


@dataclass
class UnmixState:
    """All primal and scaled dual blocks of the NMF-TV splitting."""

    X0: np.ndarray  # (m, n, k) abundance master copy
    X1: np.ndarray  # (o, k) endmembers in the fit term
    X2: np.ndarray  # (o-1, k) endmember differences
    X3: np.ndarray  # (o, k) nonnegative endmember copy
    Z0: np.ndarray  # (o, k) endmember master copy
    Z1: np.ndarray  # (m, n, k) abundances in the fit term
    Z2: np.ndarray  # (m-1, n, k)
    Z3: np.ndarray  # (m, n-1, k)
    Z4: np.ndarray  # (m, n, k) nonnegative abundance copy
    U1: np.ndarray
    U2: np.ndarray
    U3: np.ndarray
    U4: np.ndarray
    U5: np.ndarray
    U6: np.ndarray
    U7: np.ndarray

    @classmethod
    def from_factors(cls, W, H):
        """State consistent with factors ``W`` (o, k) and ``H`` (m, n, k), zero duals."""
        W = np.array(W, dtype=np.float64)
        H = np.array(H, dtype=np.float64)
        dW = _diff(W, 1)
        dH1, dH2 = _diff(H, 1), _diff(H, 2)
        return cls(
            X0=H.copy(), X1=W.copy(), X2=dW, X3=W.copy(), Z0=W.copy(),
            Z1=H.copy(), Z2=dH1, Z3=dH2, Z4=H.copy(),
            U1=np.zeros_like(W), U2=np.zeros_like(dW), U3=np.zeros_like(W),
            U4=np.zeros_like(H), U5=np.zeros_like(dH1), U6=np.zeros_like(dH2),
            U7=np.zeros_like(H),
        )

    def copy(self):
        return UnmixState(**{f.name: getattr(self, f.name).copy() for f in fields(self)})

    def shape_signature(self):
        return {f.name: getattr(self, f.name).shape for f in fields(self)}

    def constraint_residuals(self):
        """Absolute residual arrays ``r_1 .. r_7`` of the seven constraints."""
        return {
            "X1=Z0": self.X1 - self.Z0,
            "X2=DoZ0": self.X2 - _diff(self.Z0, 1),
            "X3=Z0": self.X3 - self.Z0,
            "Z1=X0": self.Z1 - self.X0,
            "Z2=X0x1Dm": self.Z2 - _diff(self.X0, 1),
            "Z3=X0x2Dn": self.Z3 - _diff(self.X0, 2),
            "Z4=X0": self.Z4 - self.X0,
        }

    def relative_residuals(self):
        """Constraint residual norms divided by the norm of their master copy."""
        w_scale = max(np.linalg.norm(self.Z0), _TINY)
        h_scale = max(np.linalg.norm(self.X0), _TINY)
        out = {}
        for i, (name, r) in enumerate(self.constraint_residuals().items()):
            out[name] = float(np.linalg.norm(r) / (w_scale if i < 3 else h_scale))
        return out


@dataclass
class UnmixResult:
    """Factors returned by :func:`unmix`.

    ``W`` is the nonnegative part of the endmember master copy, ``H`` the
    nonnegative abundance copy ``Z4``. ``terms`` holds the objective
    breakdown (fit, spatial TV, spectral TV) evaluated at ``(W, H)``.
    """

    W: np.ndarray
    H: np.ndarray
    diagnostics: SolveDiagnostics
    terms: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    state: UnmixState = None

    def reconstruction(self):
        return reconstruct(self.H, self.W)


def reconstruct(H, W):
    """Cube ``H x3 W`` of shape (m, n, o)."""
    return np.tensordot(H, W, axes=([2], [1]))


def objective_terms(M, H, W, lambda_s, lambda_t):
    """``fit``, ``spatial`` and ``spectral`` parts of the NMF-TV objective."""
    fit = 0.5 * float(np.sum((M - reconstruct(H, W)) ** 2))
    spatial = lambda_s * float(np.sum(np.abs(_diff(H, 1))) + np.sum(np.abs(_diff(H, 2))))
    spectral = lambda_t * float(np.sum(np.abs(_diff(W, 1))))
    return {"fit": fit, "spatial_tv": spatial, "spectral_tv": spectral,
            "total": fit + spatial + spectral}


def split_objective(M, state, lambda_s, lambda_t):
    """Objective of the split problem, evaluated on ``Z1, X1, Z2, Z3, X2``."""
    fit = 0.5 * np.sum((M - reconstruct(state.Z1, state.X1)) ** 2)
    tv = lambda_s * (np.sum(np.abs(state.Z2)) + np.sum(np.abs(state.Z3)))
    return float(fit + tv + lambda_t * np.sum(np.abs(state.X2)))


# --- the nine sub-problem updates, in solving order -------------------------

def update_X0(state, rho=None):
    """First sub-problem: ``2 X0 + X0 x1 L_m + X0 x2 L_n = B``.

    Every term of this sub-problem carries the factor rho/2, so rho cancels;
    the identity weight is 2 because two identity constraints (Z1, Z4) involve
    X0. The DCT divisor is therefore ``2 + s_i + s_j``.
    """
    b = (state.Z1 + state.U4
         + diff_adjoint(state.Z2 + state.U5, 1)
         + diff_adjoint(state.Z3 + state.U6, 2)
         + state.Z4 + state.U7)
    return solve_sylvester(b, SylvesterWeights(alpha=2.0, rho=1.0, active_axes=(1, 2)))


def update_X1(state, M, rho):
    """Ridge least squares ``(M3 Z1^T + rho (Z0 - U1)) (Z1 Z1^T + rho I)^-1``."""
    k = state.Z1.shape[2]
    gram = np.tensordot(state.Z1, state.Z1, axes=([0, 1], [0, 1])) + rho * np.eye(k)
    rhs = np.tensordot(M, state.Z1, axes=([0, 1], [0, 1])) + rho * (state.Z0 - state.U1)
    # gram is symmetric: X1 gram = rhs  <=>  gram X1^T = rhs^T
    return scipy.linalg.solve(gram, rhs.T, assume_a="pos").T


def update_X2(state, rho, lambda_t):
    return soft(_diff(state.Z0, 1) - state.U2, lambda_t / rho)


def update_X3(state):
    return np.maximum(state.Z0 - state.U3, 0.0)


def update_Z0(state, rho=None):
    """``(L_o + 2 I_o) Z0 = X1 + U1 + D_o^T (X2 + U2) + X3 + U3``.

    The system is o x o (one tridiagonal solve per endmember column), done by
    the 1-D DCT diagonalization.
    """
    b = (state.X1 + state.U1 + diff_adjoint(state.X2 + state.U2, 1)
         + state.X3 + state.U3)
    return solve_sylvester(b, SylvesterWeights(alpha=2.0, rho=1.0, active_axes=(1,)))


def update_Z1(state, M, rho):
    """``[M x3 X1^T + rho (X0 - U4)] x3 (X1^T X1 + rho I)^-1``.

    The k x k Gram matrix is factored once and applied to every pixel.
    """
    k = state.X1.shape[1]
    gram = state.X1.T @ state.X1 + rho * np.eye(k)
    rhs = np.tensordot(M, state.X1, axes=([2], [0])) + rho * (state.X0 - state.U4)
    cho = scipy.linalg.cho_factor(gram)
    flat = rhs.reshape(-1, k)
    return scipy.linalg.cho_solve(cho, flat.T).T.reshape(rhs.shape)


def update_Z2_Z3(state, rho, lambda_s):
    z2 = soft(_diff(state.X0, 1) - state.U5, lambda_s / rho)
    z3 = soft(_diff(state.X0, 2) - state.U6, lambda_s / rho)
    return z2, z3


def update_Z4(state, simplex=False):
    v = state.X0 - state.U7
    return project_simplex(v) if simplex else np.maximum(v, 0.0)


def update_duals(state):
    """Scaled dual ascent ``U_i += r_i`` for all seven constraints (in place)."""
    r = state.constraint_residuals()
    state.U1 = state.U1 + r["X1=Z0"]
    state.U2 = state.U2 + r["X2=DoZ0"]
    state.U3 = state.U3 + r["X3=Z0"]
    state.U4 = state.U4 + r["Z1=X0"]
    state.U5 = state.U5 + r["Z2=X0x1Dm"]
    state.U6 = state.U6 + r["Z3=X0x2Dn"]
    state.U7 = state.U7 + r["Z4=X0"]
    return r


def project_simplex(v):
    """Euclidean projection of every last-axis vector onto the probability simplex."""
    v = np.asarray(v, dtype=np.float64)
    k = v.shape[-1]
    flat = v.reshape(-1, k)
    srt = -np.sort(-flat, axis=1)
    css = np.cumsum(srt, axis=1) - 1.0
    ind = np.arange(1, k + 1)
    cond = srt - css / ind > 0
    r = k - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(flat.shape[0]), r - 1] / r
    return np.maximum(flat - theta[:, None], 0.0).reshape(v.shape)


def admm_step(state, M, cfg, simplex=False):
    """One full sweep: nine primal updates then the seven dual updates.

    Returns the previous Z-block (for dual residuals) and the residual arrays.
    """
    rho = cfg.rho
    z_prev = (state.Z0, state.Z1, state.Z2, state.Z3, state.Z4)
    state.X0 = update_X0(state, rho)
    state.X1 = update_X1(state, M, rho)
    state.X2 = update_X2(state, rho, cfg.lambda_t)
    state.X3 = update_X3(state)
    state.Z0 = update_Z0(state, rho)
    state.Z1 = update_Z1(state, M, rho)
    state.Z2, state.Z3 = update_Z2_Z3(state, rho, cfg.lambda_s)
    state.Z4 = update_Z4(state, simplex)
    r = update_duals(state)
    return z_prev, r


def _dual_residual(state, z_prev, rho):
    d0 = state.Z0 - z_prev[0]
    dual_w = rho * np.sqrt(2 * np.sum(d0 ** 2) + np.sum(_diff(d0, 1) ** 2))
    dual_h = rho * np.linalg.norm(
        (state.Z1 - z_prev[1]) + diff_adjoint(state.Z2 - z_prev[2], 1)
        + diff_adjoint(state.Z3 - z_prev[3], 2) + (state.Z4 - z_prev[4]))
    w_scale = max(rho * np.linalg.norm(state.Z0), _TINY)
    h_scale = max(rho * np.linalg.norm(state.X0), _TINY)
    return max(dual_w / w_scale, dual_h / h_scale)


def initial_factors(M, k, seed, simplex=False, pg_steps=20):
    """Seeded starting point ``(W, H)``.

    Endmember columns are uniform in [0, 1] scaled by the per-band mean of the
    data; abundances come from ``pg_steps`` projected-gradient steps on the
    nonnegative least-squares fit against that ``W``.
    """
    m, n, o = M.shape
    rng = np.random.default_rng(seed)
    band_mean = np.maximum(M.mean(axis=(0, 1)), 0.0)
    W = rng.uniform(size=(o, k)) * band_mean[:, None]
    pixels = M.reshape(-1, o)
    H = np.full((m * n, k), 1.0 / k)
    gram = W.T @ W
    lip = np.linalg.eigvalsh(gram)[-1]
    if lip > 0:
        corr = pixels @ W
        for _ in range(pg_steps):
            H = H - (H @ gram - corr) / lip
            H = project_simplex(H) if simplex else np.maximum(H, 0.0)
    return W, H.reshape(m, n, k)


def unmix(M, k, cfg=None, simplex_mode=False, init=None, callback=None):
    """NMF-TV unmixing of cube ``M`` into ``k`` endmembers.

    Parameters
    ----------
    M : ndarray, shape (m, n, o)
    k : int
    cfg : AdmmConfig
        ``lambda_s`` weights spatial TV of the abundances, ``lambda_t``
        spectral TV of the endmembers.
    simplex_mode : bool
        Project abundances onto the probability simplex instead of the
        nonnegative orthant in the Z4 update.
    init : (W, H), optional
        Starting factors; :func:`initial_factors` is used otherwise.
    callback : callable, optional
        ``callback(iteration, state)`` after each sweep.

    Notes
    -----
    Stops when every relative constraint residual is below ``cfg.tol_primal``
    and the relative Z-block change is below ``cfg.tol_dual``.
    """
    cfg = cfg or AdmmConfig()
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 3 or min(M.shape) < 1:
        raise ValueError(f"expected a non-empty cube, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("input cube contains NaN or infinite values")
    m, n, o = M.shape
    if int(k) != k or k < 1 or k > min(o, m * n):
        raise ValueError(f"k must be an integer in 1..{min(o, m * n)}, got {k}")
    k = int(k)

    W0, H0 = init if init is not None else initial_factors(M, k, cfg.seed, simplex_mode)
    state = UnmixState.from_factors(W0, H0)
    diag = SolveDiagnostics()
    for it in range(cfg.max_iters):
        z_prev, _ = admm_step(state, M, cfg, simplex_mode)
        primal = max(state.relative_residuals().values())
        dual = _dual_residual(state, z_prev, cfg.rho)
        diag.record(split_objective(M, state, cfg.lambda_s, cfg.lambda_t), primal, dual)
        if callback is not None:
            callback(it, state)
        if primal <= cfg.tol_primal and dual <= cfg.tol_dual:
            diag.converged = True
            break

    W = np.maximum(state.Z0, 0.0)
    H = state.Z4.copy()
    return UnmixResult(
        W=W, H=H, diagnostics=diag,
        terms=objective_terms(M, H, W, cfg.lambda_s, cfg.lambda_t),
        residuals=state.relative_residuals(), state=state,
    )
