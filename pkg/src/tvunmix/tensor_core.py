"""Order-3 tensor helpers: unfoldings, mode-n contractions, forward differences.

Cubes are plain ``numpy.ndarray`` objects of shape ``(m, n, o)``. Modes are
numbered 1, 2, 3 as in the usual tensor-algebra notation. Whenever a cube
has to be linearized (``vec``, cube files) the first index varies fastest,
i.e. Fortran order.

Unfoldings follow the Kolda-Bader convention: the mode-``k`` fibers become the
columns of ``T^(k)`` and the remaining indices enumerate columns with the
lower-numbered mode varying fastest.
"""
import numpy as np


def _check_mode(t, mode):
    if mode not in range(1, t.ndim + 1):
        raise ValueError(f"mode must be in 1..{t.ndim}, got {mode}")


def as_cube(t, name="cube"):
    """Return ``t`` as a float64 3-way array, raising on bad shapes."""
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ValueError(f"{name} must be 3-dimensional, got shape {t.shape}")
    if min(t.shape) < 1:
        raise ValueError(f"{name} has an empty dimension: {t.shape}")
    return t


def vec(a):
    """Column-major vectorization (first index fastest)."""
    return np.asarray(a).reshape(-1, order="F")


def unfold(t, mode):
    """Mode-``mode`` unfolding ``T^(mode)`` of a tensor.

    Parameters
    ----------
    t : ndarray
        Tensor of any order (order 3 for cubes).
    mode : int
        1-based mode.

    Returns
    -------
    ndarray
        Matrix of shape ``(t.shape[mode-1], prod(other dims))``.
    """
    t = np.asarray(t)
    _check_mode(t, mode)
    ax = mode - 1
    return np.reshape(np.moveaxis(t, ax, 0), (t.shape[ax], -1), order="F")


def fold(mat, mode, dims):
    """Inverse of :func:`unfold`."""
    mat = np.asarray(mat)
    dims = tuple(int(d) for d in dims)
    if mode not in range(1, len(dims) + 1):
        raise ValueError(f"mode must be in 1..{len(dims)}, got {mode}")
    ax = mode - 1
    rest = dims[:ax] + dims[ax + 1:]
    expected = (dims[ax], int(np.prod(rest, dtype=np.int64)))
    if mat.shape != expected:
        raise ValueError(
            f"cannot fold {mat.shape} matrix along mode {mode} into {dims}; "
            f"expected shape {expected}")
    full = np.reshape(mat, (dims[ax],) + rest, order="F")
    return np.moveaxis(full, 0, ax)


def contract(t, mode, a):
    """Mode-``mode`` contraction ``t x_mode a``.

    Satisfies ``unfold(contract(t, k, a), k) == a @ unfold(t, k)``. The product
    is computed with a single ``tensordot`` rather than explicit unfoldings,
    which gives the same numbers without copying the tensor.
    """
    t = np.asarray(t)
    a = np.asarray(a)
    _check_mode(t, mode)
    ax = mode - 1
    if a.ndim != 2 or a.shape[1] != t.shape[ax]:
        raise ValueError(
            f"matrix of shape {a.shape} does not conform with mode {mode} "
            f"of tensor with shape {t.shape}")
    out = np.tensordot(a, t, axes=([1], [ax]))
    return np.moveaxis(out, 0, ax)


def diff_matrix(n):
    """Materialized ``(n-1) x n`` forward-difference operator.

    Row ``i`` holds ``1`` at column ``i`` and ``-1`` at column ``i+1``.
    Only meant for oracles and small systems.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = np.zeros((n - 1, n))
    idx = np.arange(n - 1)
    d[idx, idx] = 1.0
    d[idx, idx + 1] = -1.0
    return d


def laplacian_matrix(n):
    """Materialized Neumann Laplacian ``L_n = D_n^T D_n``."""
    d = diff_matrix(n)
    return d.T @ d


def diff_apply(t, mode):
    """Matrix-free ``t x_mode D``: entries ``t_i - t_{i+1}`` along ``mode``."""
    t = np.asarray(t, dtype=np.float64)
    _check_mode(t, mode)
    if t.shape[mode - 1] < 2:
        raise ValueError(
            f"difference along mode {mode} needs length >= 2, got {t.shape}")
    return -np.diff(t, axis=mode - 1)


def diff_adjoint(z, mode):
    """Matrix-free ``z x_mode D^T``.

    The output is one longer than ``z`` along ``mode``. An empty input (length
    0 along ``mode``) maps to zeros of length 1.
    """
    z = np.asarray(z, dtype=np.float64)
    _check_mode(z, mode)
    ax = mode - 1
    pad_after = [(0, 0)] * z.ndim
    pad_before = [(0, 0)] * z.ndim
    pad_after[ax] = (0, 1)
    pad_before[ax] = (1, 0)
    return np.pad(z, pad_after) - np.pad(z, pad_before)


def laplacian_apply(t, mode):
    """Matrix-free ``t x_mode L`` with ``L = D^T D`` (zero for length 1)."""
    t = np.asarray(t, dtype=np.float64)
    if t.shape[mode - 1] < 2:
        return np.zeros_like(t)
    return diff_adjoint(diff_apply(t, mode), mode)


def kron(a, b):
    """Dense Kronecker product (oracle-grade)."""
    return np.kron(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def kron_sum(*mats):
    """Kronecker sum ``A + B + ...`` in the Kronecker sense.

    ``kron_sum(A, B) = A (x) I_n + I_m (x) B`` and three or more terms are
    grouped from the left: ``kron_sum(A, B, C) = kron_sum(kron_sum(A, B), C)``,
    which expands to ``A (x) I (x) I + I (x) B (x) I + I (x) I (x) C``.
    The operation is associative but not commutative; swapping factors gives a
    permutation-similar matrix.
    """
    if len(mats) < 2:
        raise ValueError("kron_sum needs at least two matrices")
    mats = [np.asarray(m, dtype=np.float64) for m in mats]
    for m in mats:
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"kron_sum requires square matrices, got {m.shape}")
    out = mats[0]
    for b in mats[1:]:
        out = np.kron(out, np.eye(b.shape[0])) + np.kron(np.eye(out.shape[0]), b)
    return out
