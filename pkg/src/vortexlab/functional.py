"""Yang-Mills-Higgs functionals, densities, gradients and derived constants.

Degree conventions.  A BundleSpec degree d enters the background curvature as
F_0 = -2 pi i (d / (r Vol)) omega I, whose contraction is -2 pi i m d/(r Vol).
The Kahler-degree obtained by tracing and integrating the curvature is then
m * d; every tau-formula below (Chern-Weil constraint, sigma, thresholds,
topological minima) uses that Kahler degree so the constraints actually hold
on the states the solvers build.  For m = 1 the two notions coincide.

The coupled constants, with hat(tau) = tau Vol / (4 pi) and D_i the Kahler
degrees:

    sigma    = 2 r2 Vol / ((r1 + r2) hat(tau) - D1 - D2)
    tau'     = (4 pi (D1 + D2)/Vol - tau r1) / r2
    c(tau)   = 16 pi^2 r2 / sigma^2 - (tau^2 r1 + tau'^2 r2) / 4
    C(tau)   = sigma c(tau) Vol

c(tau) carries first powers of the ranks: it must equal the zero-field value
of |F|^2_sigma - e_tau, and Frobenius norms give |I_r|^2 = r.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NonpositiveSigmaDenominator, ShapeMismatch
from .fields import (
    BundleSpec,
    ConnectionState,
    FieldState,
    PairState,
    TripleState,
    covariant_derivative,
    curvature,
    curvature_norm2_density,
    dbar_A,
    dbar_norm2_density,
    _frob2,
    _skew,
)
from .geometry import TorusGeometry, contract_lambda


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class ParameterSet:
    """tau and everything derived from it for a pair or a triple."""

    tau: float
    tau_hat: float
    vol: float
    complex_dim: int
    r1: int
    d1: int
    r2: int | None = None
    d2: int | None = None
    tau_prime: float | None = None
    sigma: float | None = None
    c_tau: float | None = None
    big_C_tau: float | None = None

    @property
    def coupled(self) -> bool:
        return self.r2 is not None

    @property
    def deg_omega1(self) -> float:
        return self.complex_dim * self.d1

    @property
    def deg_omega2(self) -> float:
        return self.complex_dim * self.d2 if self.coupled else 0.0

    def sigma_consistency(self) -> float:
        """|4 pi / sigma - (tau - tau')/2|: the two sigma characterizations."""
        if not self.coupled:
            return 0.0
        return abs(4.0 * np.pi / self.sigma - 0.5 * (self.tau - self.tau_prime))

    def chern_weil_gap(self) -> float:
        """Residual of tau r1 + tau' r2 = 4 pi (D1 + D2)/Vol."""
        if not self.coupled:
            return 0.0
        lhs = self.tau * self.r1 + self.tau_prime * self.r2
        rhs = 4.0 * np.pi * (self.deg_omega1 + self.deg_omega2) / self.vol
        return abs(lhs - rhs)

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "tau_hat": self.tau_hat,
            "tau_prime": self.tau_prime,
            "sigma": self.sigma,
            "c_tau": self.c_tau,
            "big_C_tau": self.big_C_tau,
            "vol": self.vol,
            "ranks": [self.r1, self.r2],
            "degrees": [self.d1, self.d2],
        }


def derive_parameters(bundles, tau: float, geom: TorusGeometry) -> ParameterSet:
    """Fill every tau-derived constant for one bundle or a (E1, E2) pair."""
    if isinstance(bundles, BundleSpec):
        bundles = (bundles,)
    bundles = tuple(bundles)
    vol = geom.volume
    m = geom.complex_dim
    tau_hat = tau * vol / (4.0 * np.pi)
    b1 = bundles[0]
    if len(bundles) == 1:
        return ParameterSet(tau, tau_hat, vol, m, b1.rank, b1.degree)
    b2 = bundles[1]
    D1, D2 = m * b1.degree, m * b2.degree
    denom = (b1.rank + b2.rank) * tau_hat - D1 - D2
    if denom <= 0:
        raise NonpositiveSigmaDenominator(
            f"(r1+r2)*tau_hat - deg1 - deg2 = {denom} <= 0: tau too small"
        )
    sigma = 2.0 * b2.rank * vol / denom
    tau_prime = (4.0 * np.pi * (D1 + D2) / vol - tau * b1.rank) / b2.rank
    c_tau = 16.0 * np.pi**2 * b2.rank / sigma**2 - 0.25 * (
        tau**2 * b1.rank + tau_prime**2 * b2.rank
    )
    big_C = sigma * c_tau * vol
    return ParameterSet(
        tau, tau_hat, vol, m, b1.rank, b1.degree, b2.rank, b2.degree,
        tau_prime, sigma, c_tau, big_C,
    )


# ---------------------------------------------------------------------------
# threshold classification


class Threshold(str, Enum):
    SOLVABLE = "Solvable"
    BOUNDARY = "Boundary"
    OBSTRUCTED = "Obstructed"


def check_threshold(bundle: BundleSpec, tau: float, geom: TorusGeometry) -> Threshold:
    """Classify tau against the existence threshold mu(E) <= tau Vol/(4 pi).

    The slope is taken in the Kahler-degree normalization (m * d / r).
    """
    mu = geom.complex_dim * bundle.degree / bundle.rank
    tau_hat = tau * geom.volume / (4.0 * np.pi)
    tol = 1e-12 * max(1.0, abs(tau_hat), abs(mu))
    if abs(mu - tau_hat) <= tol:
        return Threshold.BOUNDARY
    return Threshold.SOLVABLE if mu < tau_hat else Threshold.OBSTRUCTED


# ---------------------------------------------------------------------------
# energy densities


def _potential_matrices(state: FieldState, params: ParameterSet):
    phi = state.phi.values
    phh = phi @ np.conj(np.swapaxes(phi, -1, -2))
    if isinstance(state, TripleState):
        hph = np.conj(np.swapaxes(phi, -1, -2)) @ phi
        return phh, hph
    return phh, None


def density_terms(state: FieldState, params: ParameterSet) -> dict:
    """Pointwise nonnegative terms of the YMH action density."""
    geom = state.geom
    tau = params.tau
    eye1 = np.eye(state.phi.shape_hom[0])
    phh, hph = _potential_matrices(state, params)
    if isinstance(state, PairState):
        F = curvature(state.A)
        D = covariant_derivative(state.phi, state.A)
        pot = 0.25 * _frob2(phh - tau * eye1)
        return {
            "curvature": np.real(curvature_norm2_density(F, geom)) + np.zeros(geom.shape),
            "kinetic": np.real((1.0 / geom.kahler_scale) * np.sum(_frob2(D), axis=0)),
            "potential": np.real(pot),
        }
    if not params.coupled:
        raise ShapeMismatch("triple state needs coupled parameters (two bundles)")
    F1 = curvature(state.A1)
    F2 = curvature(state.A2)
    D = covariant_derivative(state.phi, state.A1, state.A2)
    eye2 = np.eye(state.phi.shape_hom[1])
    return {
        "curvature_1": np.real(curvature_norm2_density(F1, geom)) + np.zeros(geom.shape),
        "curvature_2": np.real(curvature_norm2_density(F2, geom)) + np.zeros(geom.shape),
        "kinetic": np.real((1.0 / geom.kahler_scale) * np.sum(_frob2(D), axis=0)),
        "potential_1": np.real(0.25 * _frob2(phh - tau * eye1)),
        "potential_2": np.real(0.25 * _frob2(hph + params.tau_prime * eye2)),
    }


def ymh_density(state: FieldState, params: ParameterSet) -> np.ndarray:
    """Pointwise YMH action density e_tau >= 0."""
    terms = density_terms(state, params)
    return sum(terms.values())


def lambda_F(A: ConnectionState) -> np.ndarray:
    """Contraction of the full curvature, a grid of skew-hermitian matrices."""
    return np.asarray(contract_lambda(curvature(A), A.geom))


def second_chern_charge(A: ConnectionState) -> float:
    """Ch2-type invariant from quadrature of Tr(F wedge F) against omega^{m-2}.

    Computed as -(1/8 pi^2) * integral(|F|^2 - |Lambda F|^2); identically zero
    for m = 1, and a topological invariant on integrable states.
    """
    geom = A.geom
    if geom.complex_dim == 1:
        return 0.0
    F = curvature(A)
    dens = np.real(curvature_norm2_density(F, geom)) - np.real(
        _frob2(contract_lambda(F, geom))
    )
    return float(-np.real(geom.quadrature(dens)) / (8.0 * np.pi**2))


@dataclass
class EnergyReport:
    total: float
    terms: dict
    topological_minimum: float
    defect: float

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "terms": self.terms,
            "topological_minimum": self.topological_minimum,
            "defect": self.defect,
        }


def topological_minimum(state: FieldState, params: ParameterSet) -> float:
    """Bogomolny bound: the value every solution attains.

    Pair:   2 pi tau D - 8 pi^2 Ch2(E);  triple adds 2 pi tau' D2 and the
    second bundle's Ch2.  D is the Kahler degree m * d.
    """
    two_pi = 2.0 * np.pi
    if isinstance(state, PairState):
        return two_pi * params.tau * params.deg_omega1 - 8.0 * np.pi**2 * second_chern_charge(state.A)
    ch2 = second_chern_charge(state.A1) + second_chern_charge(state.A2)
    return (
        two_pi * params.tau * params.deg_omega1
        + two_pi * params.tau_prime * params.deg_omega2
        - 8.0 * np.pi**2 * ch2
    )


def ymh_energy(state: FieldState, params: ParameterSet) -> EnergyReport:
    """Quadrature of the action density with a per-term breakdown."""
    geom = state.geom
    terms = density_terms(state, params)
    term_values = {k: float(np.real(geom.quadrature(v))) for k, v in terms.items()}
    total = float(sum(term_values.values()))
    minimum = topological_minimum(state, params)
    return EnergyReport(total, term_values, minimum, total - minimum)


# ---------------------------------------------------------------------------
# residual evaluation (the independent oracle used to certify solver output)


def vortex_residuals(state: FieldState, params: ParameterSet) -> dict:
    """L2 residual norms of the defining equations, evaluated from scratch."""
    geom = state.geom
    tau = params.tau
    out = {}
    if isinstance(state, PairState):
        db = dbar_A(state.A, state.phi)
        out["dbar"] = float(np.sqrt(np.real(geom.quadrature(dbar_norm2_density(db, geom)))))
        lf = lambda_F(state.A)
        phh, _ = _potential_matrices(state, params)
        eye = np.eye(state.phi.shape_hom[0])
        V = lf - 0.5j * phh + 0.5j * tau * eye
        out["vortex"] = float(np.sqrt(np.real(geom.quadrature(_frob2(V)))))
        return out
    db = dbar_A(state.A1, state.phi, state.A2)
    out["dbar"] = float(np.sqrt(np.real(geom.quadrature(dbar_norm2_density(db, geom)))))
    phh, hph = _potential_matrices(state, params)
    eye1 = np.eye(state.phi.shape_hom[0])
    eye2 = np.eye(state.phi.shape_hom[1])
    V1 = lambda_F(state.A1) - 0.5j * phh + 0.5j * tau * eye1
    V2 = lambda_F(state.A2) + 0.5j * hph + 0.5j * params.tau_prime * eye2
    out["vortex_1"] = float(np.sqrt(np.real(geom.quadrature(_frob2(V1)))))
    out["vortex_2"] = float(np.sqrt(np.real(geom.quadrature(_frob2(V2)))))
    return out


# ---------------------------------------------------------------------------
# Chern-Weil degree


def chern_weil_degree(A: ConnectionState, geom: TorusGeometry) -> float:
    """Degree from the trace of the contracted curvature.

    (i / (2 pi m)) * integral Tr(Lambda F) dv, normalized so the background of
    a degree-d bundle returns exactly d; periodic perturbations integrate to
    zero by Stokes.
    """
    lf = lambda_F(A)
    tr = np.trace(lf, axis1=-2, axis2=-1)
    val = 1j * geom.quadrature(tr) / (2.0 * np.pi * geom.complex_dim)
    return float(np.real(val))


# ---------------------------------------------------------------------------
# first variation


@dataclass
class YMHGradient:
    """L2 gradient with respect to (perturbations, phi).

    Pair gradients store ``a1`` only.  The pairing method implements the inner
    product the gradient is taken against: (1/scale) sum_mu on 1-forms, plain
    Frobenius on sections.
    """

    geom: TorusGeometry
    a1: np.ndarray
    phi: np.ndarray
    a2: np.ndarray | None = None

    def _ip_oneform(self, X, Y) -> float:
        dens = np.sum(np.real(np.sum(X * np.conj(Y), axis=(-2, -1))), axis=0)
        return float(np.real(self.geom.quadrature(dens))) / self.geom.kahler_scale

    def _ip_section(self, X, Y) -> float:
        dens = np.real(np.sum(X * np.conj(Y), axis=(-2, -1)))
        return float(np.real(self.geom.quadrature(dens)))

    def pairing(self, da1, dphi, da2=None) -> float:
        total = self._ip_oneform(self.a1, da1) + self._ip_section(self.phi, dphi)
        if self.a2 is not None and da2 is not None:
            total += self._ip_oneform(self.a2, da2)
        return total

    def norm(self) -> float:
        total = self._ip_oneform(self.a1, self.a1) + self._ip_section(self.phi, self.phi)
        if self.a2 is not None:
            total += self._ip_oneform(self.a2, self.a2)
        return float(np.sqrt(total))


def _coderivative_curvature(A: ConnectionState, F) -> np.ndarray:
    """(d_A^* F)_nu = -(1/s) sum_mu D_mu F_{mu nu} on the adjoint bundle."""
    geom = A.geom
    a = A.perturbation
    out = np.zeros_like(a)
    for nu in range(geom.real_dim):
        acc = 0.0
        for mu in range(geom.real_dim):
            if mu == nu:
                continue
            Fmn = F.component(mu, nu)
            Fmn = np.broadcast_to(Fmn, a[0].shape) if np.isscalar(Fmn) else Fmn
            acc = acc + geom.deriv(Fmn, mu) + a[mu] @ Fmn - Fmn @ a[mu]
        out[nu] = -acc / geom.kahler_scale
    return out


def _second_covariant(phi, A1, A2, D) -> np.ndarray:
    """sum_mu D_mu D_mu phi, reusing the first derivative stack D."""
    from .fields import twisted_deriv, background_potential_y

    geom = A1.geom
    acc = np.zeros_like(phi.values)
    for mu in range(geom.real_dim):
        v = D[mu]
        d = twisted_deriv(geom, v, mu, phi.flux)
        if mu % 2 == 1:
            k = mu // 2
            q = phi.flux[k]
            if q != 0.0:
                d = d + background_potential_y(geom, q, k)[..., None, None] * v
        d = d + A1.perturbation[mu] @ v
        if A2 is not None:
            d = d - v @ A2.perturbation[mu]
        acc = acc + d
    return acc


def ymh_gradient(state: FieldState, params: ParameterSet) -> YMHGradient:
    """First variation of the YMH functional; vanishes at (coupled) vortices."""
    geom = state.geom
    tau = params.tau
    phi = state.phi
    phiv = phi.values
    phid = np.conj(np.swapaxes(phiv, -1, -2))
    eye1 = np.eye(phi.shape_hom[0])
    if isinstance(state, PairState):
        A1, A2 = state.A, None
    else:
        A1, A2 = state.A1, state.A2
    D = covariant_derivative(phi, A1, A2)

    F1 = curvature(A1)
    Ga1 = 2.0 * _coderivative_curvature(A1, F1)
    for mu in range(geom.real_dim):
        Ga1[mu] += 2.0 * _skew(D[mu] @ phid)

    Gphi = -(2.0 / geom.kahler_scale) * _second_covariant(phi, A1, A2, D)
    Gphi = Gphi + (phiv @ phid - tau * eye1) @ phiv

    if A2 is None:
        return YMHGradient(geom, Ga1, Gphi)

    eye2 = np.eye(phi.shape_hom[1])
    F2 = curvature(A2)
    Ga2 = 2.0 * _coderivative_curvature(A2, F2)
    for mu in range(geom.real_dim):
        Ga2[mu] += -2.0 * _skew(phid @ D[mu])
    Gphi = Gphi + phiv @ (phid @ phiv + params.tau_prime * eye2)
    return YMHGradient(geom, Ga1, Gphi, Ga2)
