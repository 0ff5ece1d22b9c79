"""Sub-problem objectives of the NMF-TV splitting, written out directly.

Each ``f_*`` is the part of the augmented Lagrangian that depends on one
block, with the scaled duals entering as ``rho/2 ||r + U||^2``.
"""
import numpy as np

from tvunmix.nmf_tv import (
    project_simplex, reconstruct, update_X0, update_X1, update_X2, update_X3,
    update_Z0, update_Z1, update_Z2_Z3, update_Z4,
)
from tvunmix.tensor_core import contract, diff_matrix

RHO = 10.0


def dm(t, mode):
    return contract(t, mode, diff_matrix(t.shape[mode - 1]))


def f_x0(s, x0, rho=RHO):
    return rho / 2 * (np.sum((s.Z1 - x0 + s.U4) ** 2) + np.sum((s.Z2 - dm(x0, 1) + s.U5) ** 2)
                      + np.sum((s.Z3 - dm(x0, 2) + s.U6) ** 2) + np.sum((s.Z4 - x0 + s.U7) ** 2))


def f_x1(s, M, x1, rho=RHO):
    return (0.5 * np.sum((M - reconstruct(s.Z1, x1)) ** 2)
            + rho / 2 * np.sum((x1 - s.Z0 + s.U1) ** 2))


def f_x2(s, x2, lam, rho=RHO):
    return lam * np.abs(x2).sum() + rho / 2 * np.sum((x2 - dm(s.Z0, 1) + s.U2) ** 2)


def f_x3(s, x3, rho=RHO):
    return rho / 2 * np.sum((x3 - s.Z0 + s.U3) ** 2)


def f_z0(s, z0, rho=RHO):
    return rho / 2 * (np.sum((s.X1 - z0 + s.U1) ** 2) + np.sum((s.X2 - dm(z0, 1) + s.U2) ** 2)
                      + np.sum((s.X3 - z0 + s.U3) ** 2))


def f_z1(s, M, z1, rho=RHO):
    return (0.5 * np.sum((M - reconstruct(z1, s.X1)) ** 2)
            + rho / 2 * np.sum((z1 - s.X0 + s.U4) ** 2))


def f_z2(s, z2, lam, rho=RHO):
    return lam * np.abs(z2).sum() + rho / 2 * np.sum((z2 - dm(s.X0, 1) + s.U5) ** 2)


def f_z3(s, z3, lam, rho=RHO):
    return lam * np.abs(z3).sum() + rho / 2 * np.sum((z3 - dm(s.X0, 2) + s.U6) ** 2)


def f_z4(s, z4, rho=RHO):
    return rho / 2 * np.sum((z4 - s.X0 + s.U7) ** 2)


def beats_perturbations(f, x, rng, feasible=lambda v: v, count=64, size=1e-3):
    base = f(x)
    for _ in range(count):
        assert base <= f(feasible(x + size * rng.standard_normal(x.shape))) + 1e-12


def sweep_with_checks(s, M, rho, lambda_s, lambda_t, rng, simplex=False):
    """Run the nine updates in order on ``s``, checking each against perturbations.

    Returns the number of updates checked.
    """
    pos = lambda v: np.maximum(v, 0.0)
    s.X0 = update_X0(s, rho)
    beats_perturbations(lambda x: f_x0(s, x, rho), s.X0, rng)
    s.X1 = update_X1(s, M, rho)
    beats_perturbations(lambda x: f_x1(s, M, x, rho), s.X1, rng)
    s.X2 = update_X2(s, rho, lambda_t)
    beats_perturbations(lambda x: f_x2(s, x, lambda_t, rho), s.X2, rng)
    s.X3 = update_X3(s)
    beats_perturbations(lambda x: f_x3(s, x, rho), s.X3, rng, pos)
    s.Z0 = update_Z0(s, rho)
    beats_perturbations(lambda x: f_z0(s, x, rho), s.Z0, rng)
    s.Z1 = update_Z1(s, M, rho)
    beats_perturbations(lambda x: f_z1(s, M, x, rho), s.Z1, rng)
    s.Z2, s.Z3 = update_Z2_Z3(s, rho, lambda_s)
    beats_perturbations(lambda x: f_z2(s, x, lambda_s, rho), s.Z2, rng)
    beats_perturbations(lambda x: f_z3(s, x, lambda_s, rho), s.Z3, rng)
    s.Z4 = update_Z4(s, simplex)
    beats_perturbations(lambda x: f_z4(s, x, rho), s.Z4, rng,
                        project_simplex if simplex else pos)
    return 9
