"""Certification of the SU(2) dimensional-reduction dictionary.

A triple (A1, A2, phi) on M assembles into a block connection on the rank
r1 + r2 bundle over M x S^2 built from the degree-2 line on the sphere.  The
sphere is never discretized: every fiber-direction contribution enters through
closed-form facts about the invariant 1-form alpha,

    alpha wedge alpha^* = (i/2) sigma omega_S,   |alpha|^2 = 1/2,
    d alpha = 0 (covariantly),                   |omega_S|^2 = 1/sigma^2,

with the fiber metric sigma omega_S normalized to unit area.  The curvature
blocks are then

    (1,1):  F_1  -  (i/2) sigma (phi phi*) omega_S
    (1,2):  (D phi) tensor alpha
    (2,2):  F_2  +  [ (i/2) sigma (phi* phi) - 4 pi i I ] omega_S

and the pointwise identity  |F|^2_sigma = e_tau + c(tau)  is exact in the
fields, so its numerical residual is pure roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .fields import (
    TripleState,
    covariant_derivative,
    curvature,
    curvature_norm2_density,
    dbar_A,
    dbar_norm2_density,
    _frob2,
)
from .functional import ParameterSet, lambda_F, ymh_density, ymh_energy
from .geometry import GridForm


@dataclass
class ReducedCurvature:
    """Curvature blocks of the lifted connection, fiber parts held analytically.

    ``fiber_11`` and ``fiber_22`` are the omega_S coefficients of the diagonal
    blocks; ``mixed`` holds the full covariant derivative of phi entering the
    off-diagonal blocks with weight |alpha|^2 = 1/2.
    """

    sigma: float
    F1: GridForm
    F2: GridForm
    fiber_11: np.ndarray
    fiber_22: np.ndarray
    mixed: np.ndarray

    def norm2_density(self, geom) -> np.ndarray:
        """Pointwise |F|^2 in the sigma-weighted metric."""
        inv_s2 = 1.0 / self.sigma**2
        dens = np.real(curvature_norm2_density(self.F1, geom))
        dens = dens + np.real(curvature_norm2_density(self.F2, geom))
        dens = dens + inv_s2 * (_frob2(self.fiber_11) + _frob2(self.fiber_22))
        # two off-diagonal blocks, each |alpha|^2 = 1/2 of the 1-form norm
        dens = dens + np.real(
            (1.0 / geom.kahler_scale) * np.sum(_frob2(self.mixed), axis=0)
        )
        return dens

    def skewness_defect(self) -> float:
        d1 = np.max(np.abs(self.fiber_11 + np.conj(np.swapaxes(self.fiber_11, -1, -2))))
        d2 = np.max(np.abs(self.fiber_22 + np.conj(np.swapaxes(self.fiber_22, -1, -2))))
        return float(max(d1, d2))


def assemble_reduced_curvature(triple: TripleState, params: ParameterSet) -> ReducedCurvature:
    """Compute all curvature blocks of the lifted connection."""
    if not params.coupled:
        raise ShapeMismatch("reduced curvature needs coupled parameters")
    sigma = params.sigma
    phi = triple.phi.values
    phid = np.conj(np.swapaxes(phi, -1, -2))
    r2 = triple.phi.shape_hom[1]
    eye2 = np.eye(r2)
    F1 = curvature(triple.A1)
    F2 = curvature(triple.A2)
    fiber_11 = -0.5j * sigma * (phi @ phid)
    fiber_22 = 0.5j * sigma * (phid @ phi) - 4j * np.pi * eye2
    mixed = covariant_derivative(triple.phi, triple.A1, triple.A2)
    return ReducedCurvature(sigma, F1, F2, fiber_11, fiber_22, mixed)


def verify_density_identity(triple: TripleState, params: ParameterSet) -> float:
    """Max pointwise residual of |F|^2_sigma = e_tau + c(tau).

    Algebraic in the fields: the triple need not solve anything, and the
    residual is roundoff-scale whenever the constants are consistent.
    """
    geom = triple.geom
    blocks = assemble_reduced_curvature(triple, params)
    lhs = blocks.norm2_density(geom)
    rhs = np.real(ymh_density(triple, params)) + params.c_tau
    return float(np.max(np.abs(lhs - rhs)))


def verify_integral_identity(triple: TripleState, params: ParameterSet):
    """Lifted Yang-Mills energy against sigma * YMH + C(tau).

    Returns (lhs, rhs, relative gap).  The fiber contributes its volume sigma
    since the integrand is invariant along it.
    """
    geom = triple.geom
    blocks = assemble_reduced_curvature(triple, params)
    lhs = params.sigma * float(np.real(geom.quadrature(blocks.norm2_density(geom))))
    ymh = ymh_energy(triple, params).total
    rhs = params.sigma * ymh + params.big_C_tau
    gap = abs(lhs - rhs) / max(1.0, abs(lhs))
    return lhs, rhs, gap


def hym_equivalence_check(triple: TripleState, params: ParameterSet, tol: float = 1e-8) -> dict:
    """Coupled-vortex residuals against the reduced Hermitian-Yang-Mills residuals.

    The lifted connection is HYM with constant lambda = -(i/2) tau exactly
    when the triple is a coupled vortex; the contraction of the blocks gives

        (1,1): Lambda F_1 - (i/2) phi phi*         - lambda I
        (2,2): Lambda F_2 + (i/2) phi* phi - (4 pi i / sigma) I - lambda I
        (0,2): dbar phi  (weighted by |alpha| = 1/sqrt(2))

    and the diagonal residuals coincide with the vortex residuals identically,
    so each side is below tol iff the other is below sqrt(2) * tol.
    """
    geom = triple.geom
    sigma, tau = params.sigma, params.tau
    phi = triple.phi.values
    phid = np.conj(np.swapaxes(phi, -1, -2))
    r1, r2 = triple.phi.shape_hom
    eye1, eye2 = np.eye(r1), np.eye(r2)
    lam = -0.5j * tau

    lf1 = lambda_F(triple.A1)
    lf2 = lambda_F(triple.A2)
    H11 = lf1 - 0.5j * (phi @ phid) - lam * eye1
    H22 = lf2 + 0.5j * (phid @ phi) - (4j * np.pi / sigma) * eye2 - lam * eye2
    db = dbar_A(triple.A1, triple.phi, triple.A2)

    def l2(x):
        return float(np.sqrt(np.real(geom.quadrature(_frob2(x)))))

    dbar_norm = float(np.sqrt(np.real(geom.quadrature(dbar_norm2_density(db, geom)))))
    hym = {
        "block_11": l2(H11),
        "block_22": l2(H22),
        "integrability": dbar_norm / np.sqrt(2.0),
    }
    V1 = lf1 - 0.5j * (phi @ phid) + 0.5j * tau * eye1
    V2 = lf2 + 0.5j * (phid @ phi) + 0.5j * params.tau_prime * eye2
    vortex = {"vortex_1": l2(V1), "vortex_2": l2(V2), "dbar": dbar_norm}

    # topological cross-check of the HYM constant
    tr = np.trace(lf1, axis1=-2, axis2=-1) + np.trace(lf2, axis1=-2, axis2=-1)
    mean = complex(geom.quadrature(tr)) / geom.volume - 4j * np.pi * r2 / sigma
    lam_avg = mean / (r1 + r2)

    constant = float(np.sqrt(2.0))
    vortex_max = max(vortex.values())
    hym_max = max(hym.values())
    return {
        "lambda_analytic": complex(lam),
        "lambda_volume_average": lam_avg,
        "vortex_residuals": vortex,
        "hym_residuals": hym,
        "equivalence_constant": constant,
        "tol": tol,
        "vortex_ok": vortex_max <= tol,
        "hym_ok": hym_max <= constant * tol,
        "consistent": (vortex_max <= tol) == (hym_max <= constant * tol),
    }
