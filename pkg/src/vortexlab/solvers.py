"""Production of certified vortex and coupled-vortex solutions.

The abelian solver works in the metric picture: fix the background holomorphic
structure and a holomorphic section phi_0, write the unknown metric as
h_0 e^{2u}, and solve the semilinear scalar equation

    Lap u = W e^{2u} / 2 - tau / 2 + 2 pi m d / Vol,       W = |phi_0|^2,

by Newton iteration with spectrally preconditioned conjugate gradients.  The
scalar reduction is an internal device only: the returned unitary pair
(A_0 + du - dbar u, e^u phi_0) is certified by re-evaluating the original
equations and the energy identity from scratch.

Zero data for positive degree comes from the discrete dbar kernel of the
background connection (inverse iteration on the spectral normal operator),
never from closed-form special functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    Diverged,
    FieldTooLarge,
    IncompatibleTopology,
    ResidualTooLarge,
    SingularLinearization,
    ThresholdViolated,
)
from .fields import (
    BundleSpec,
    ConnectionState,
    FieldState,
    HiggsSection,
    PairState,
    TripleState,
    axis_flux,
    background_potential_y,
    connection_from_scalar,
    twisted_deriv,
    _frob2,
)
from .functional import (
    ParameterSet,
    Threshold,
    check_threshold,
    derive_parameters,
    lambda_F,
    vortex_residuals,
    ymh_energy,
    ymh_gradient,
)
from .geometry import TorusGeometry


@dataclass(frozen=True)
class SolveOptions:
    residual_tol: float = 1e-10
    max_iters: int = 60
    step0: float = 1.0
    armijo: float = 1e-4
    max_backtracks: int = 30
    amplitude_ceiling: float = 50.0
    energy_increase_limit: int = 5
    conditioning_floor: float = 1e-12
    cg_tol: float = 1e-13
    cg_maxiter: int = 2000
    precondition: bool = True

    def __post_init__(self):
        if self.residual_tol <= 0:
            raise ValueError("residual_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class VortexSolution:
    state: FieldState
    params: ParameterSet
    residuals: dict
    iterations: int
    certificate: dict
    status: str = "converged"
    trace: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# spectral linear algebra helpers


def _lap_multiplier(geom: TorusGeometry) -> np.ndarray:
    """Fourier symbol of the Laplace-Beltrami operator (negative semidefinite)."""
    k2 = np.zeros(geom.shape)
    for mu in range(geom.real_dim):
        k2 = k2 + np.broadcast_to(geom.wavenumber(mu) ** 2, geom.shape)
    return -k2 / geom.kahler_scale


def solve_poisson(geom: TorusGeometry, rhs: np.ndarray) -> np.ndarray:
    """Zero-mean solution of Lap u = rhs (the rhs mean is projected out).

    Trailing matrix axes, if any, are carried along componentwise.
    """
    grid_axes = tuple(range(geom.real_dim))
    extra = rhs.ndim - geom.real_dim
    sym = _lap_multiplier(geom)
    if extra:
        sym = sym.reshape(sym.shape + (1,) * extra)
    rhat = np.fft.fftn(rhs, axes=grid_axes)
    idx = (0,) * geom.real_dim
    rhat[idx] = 0.0
    sym_safe = np.where(sym == 0, 1.0, sym)
    uhat = np.where(sym == 0, 0.0, rhat / sym_safe)
    out = np.fft.ifftn(uhat, axes=grid_axes)
    return np.real(out) if np.isrealobj(rhs) else out


def _pcg(apply_A, b, apply_M, tol, maxiter):
    """Preconditioned conjugate gradients on a hermitian positive operator."""
    x = np.zeros_like(b)
    r = b.copy()
    z = apply_M(r)
    p = z.copy()
    rz = np.vdot(r, z).real
    bnorm = np.sqrt(np.vdot(b, b).real)
    if bnorm == 0:
        return x
    for _ in range(maxiter):
        Ap = apply_A(p)
        alpha = rz / np.vdot(p, Ap).real
        x += alpha * p
        r -= alpha * Ap
        if np.sqrt(np.vdot(r, r).real) <= tol * bnorm:
            break
        z = apply_M(r)
        rz_new = np.vdot(r, z).real
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x


# ---------------------------------------------------------------------------
# discrete dbar kernel (zero-data oracle)


def _dbar_scalar_ops(geom: TorusGeometry, flux):
    """Covariant D_zbar_k / D_z_k on plain scalar grids for the background."""
    pots = [background_potential_y(geom, flux[k], k) for k in range(geom.complex_dim)]

    def d_mu(v, mu):
        d = twisted_deriv(geom, v, mu, flux)
        if mu % 2 == 1 and flux[mu // 2] != 0.0:
            d = d + pots[mu // 2] * v
        return d

    def dzbar(v, k):
        return 0.5 * (d_mu(v, 2 * k) + 1j * d_mu(v, 2 * k + 1))

    def dz(v, k):
        return 0.5 * (d_mu(v, 2 * k) - 1j * d_mu(v, 2 * k + 1))

    return dzbar, dz


def _kernel_section_2d(geom: TorusGeometry, q: int, seed: int, tol: float) -> np.ndarray:
    """Lowest mode of the background dbar normal operator on an m = 1 torus.

    Inverse iteration with a spectrally preconditioned CG solve; the operator
    H = -D_z D_zbar is hermitian positive semidefinite with an O(q/L^2) gap
    over its q-dimensional kernel, so a mild shift converges in a few sweeps.
    """
    dzbar, dz = _dbar_scalar_ops(geom, (float(q),))
    s = geom.kahler_scale
    L = geom.periods[0]
    gap = 4.0 * np.pi * abs(q) / (s * L * L)
    shift = 1e-3 * gap

    def apply_H(v):
        return -dz(dzbar(v, 0), 0) + shift * v

    sym = 0.25 * (-_lap_multiplier(geom)) + 0.5 * gap

    def apply_M(r):
        return np.fft.ifftn(np.fft.fftn(r) / sym)

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(geom.shape) + 1j * rng.standard_normal(geom.shape)
    x /= np.sqrt(np.vdot(x, x).real)
    rayleigh = np.inf
    for _ in range(12):
        x = _pcg(apply_H, x, apply_M, tol=1e-12, maxiter=3000)
        x /= np.sqrt(np.vdot(x, x).real)
        Hx = apply_H(x) - shift * x
        new_r = np.vdot(x, Hx).real
        if abs(new_r) < tol**2 or abs(new_r - rayleigh) < 1e-3 * abs(rayleigh) + 1e-30:
            rayleigh = new_r
            break
        rayleigh = new_r
    return x


def dbar_kernel_section(bundle: BundleSpec, geom: TorusGeometry, seed: int = 0, tol: float = 1e-12) -> HiggsSection:
    """A numerically computed holomorphic section of a positive line bundle.

    For m = 2 the per-axis fluxes factor the problem: the section is an outer
    product of two 2D kernel elements, which is itself in the 4D kernel.
    """
    flux = axis_flux(bundle, geom)
    for q in flux:
        if abs(q - round(q)) > 1e-9:
            raise IncompatibleTopology(f"non-integral flux {flux} has no sections")
    qs = [int(round(q)) for q in flux]
    if geom.complex_dim == 1:
        vals = _kernel_section_2d(geom, qs[0], seed, tol)
    else:
        from .geometry import build_torus

        parts = []
        for k in range(2):
            if qs[k] == 0:
                parts.append(np.ones((geom.grid[k], geom.grid[k]), dtype=complex))
                continue
            sub = build_torus((geom.periods[k],), (geom.grid[k],), geom.kahler_scale)
            parts.append(_kernel_section_2d(sub, qs[k], seed + k, tol))
        vals = np.multiply.outer(parts[0], parts[1])
    norm2 = geom.quadrature(np.abs(vals) ** 2)
    vals = vals / np.sqrt(np.real(norm2))
    return HiggsSection(geom, vals[..., None, None], tuple(float(q) for q in qs))


# ---------------------------------------------------------------------------
# abelian vortex solver


def _newton_scalar(geom: TorusGeometry, weight: np.ndarray, const, opts: SolveOptions, u0=None):
    """Newton solve of Lap u - weight * e^{2u} + const = 0 for real periodic u.

    ``weight`` >= 0 and ``const`` may vary over the grid.  Raises the solver
    guards (amplitude ceiling, repeated residual increases, conditioning
    floor, iteration cap) as Diverged / SingularLinearization.
    """
    sym = -_lap_multiplier(geom)
    weight = np.broadcast_to(weight, geom.shape)
    const = np.broadcast_to(const, geom.shape)

    def residual(v):
        lap = np.real(np.fft.ifftn(-sym * np.fft.fftn(v)))
        return lap - weight * np.exp(2.0 * v) + const

    u = np.zeros(geom.shape) if u0 is None else np.asarray(u0, dtype=float).copy()
    if u.shape != geom.shape:
        u = np.full(geom.shape, float(u0))
    res = residual(u)
    res_norm = np.sqrt(np.real(geom.quadrature(res**2)))
    newton_tol = 0.01 * opts.residual_tol
    trace = [res_norm]
    iterations = 0
    increases = 0
    while res_norm > newton_tol:
        if iterations >= opts.max_iters:
            raise Diverged(f"Newton did not converge in {opts.max_iters} iterations")
        c = 2.0 * weight * np.exp(2.0 * u)
        cbar = float(np.mean(c))
        if cbar < opts.conditioning_floor:
            raise Diverged("linearization lost coercivity (mass collapsed)")

        def apply_A(v, c=c):
            return np.real(np.fft.ifftn(sym * np.fft.fftn(v))) + c * v

        def apply_M(r, cbar=cbar):
            return np.real(np.fft.ifftn(np.fft.fftn(r) / (sym + cbar)))

        delta = _pcg(apply_A, res, apply_M, tol=opts.cg_tol, maxiter=opts.cg_maxiter)
        step = opts.step0
        accepted = False
        for _ in range(opts.max_backtracks):
            cand = u + step * delta
            cand_res = residual(cand)
            cand_norm = np.sqrt(np.real(geom.quadrature(cand_res**2)))
            if cand_norm < res_norm:
                u, res, res_norm = cand, cand_res, cand_norm
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if res_norm <= opts.residual_tol:
                # stalled at the spectral roundoff floor of the residual
                # evaluation; the independent certification decides from here
                break
            raise SingularLinearization("Newton step failed to reduce the residual")
        if np.max(np.abs(u)) > opts.amplitude_ceiling:
            raise Diverged("conformal factor exceeded the amplitude ceiling")
        trace.append(res_norm)
        if len(trace) > 2 and trace[-1] > trace[-2]:
            increases += 1
            if increases >= opts.energy_increase_limit:
                raise Diverged("residual increased repeatedly")
        iterations += 1
    return u, iterations, trace


def _reference_section(bundle: BundleSpec, geom: TorusGeometry, zero_data, seed: int) -> HiggsSection:
    if isinstance(zero_data, HiggsSection):
        return zero_data
    if zero_data not in ("auto", "constant", "kernel"):
        raise ValueError(f"unknown zero_data {zero_data!r}")
    if bundle.degree == 0 and zero_data in ("auto", "constant"):
        vals = np.ones(geom.shape + (1, 1), dtype=complex)
        return HiggsSection(geom, vals, (0.0,) * geom.complex_dim)
    if bundle.degree < 0:
        raise ThresholdViolated("negative degree line bundles have no holomorphic sections")
    return dbar_kernel_section(bundle, geom, seed=seed)


def solve_abelian_vortex(
    bundle: BundleSpec,
    zero_data,
    tau: float,
    geom: TorusGeometry,
    opts: SolveOptions | None = None,
    force: bool = False,
    seed: int = 0,
) -> VortexSolution:
    """Newton solve of the scalar reduction, converted back to a unitary pair.

    ``zero_data`` is "auto" (constant section for degree 0, discrete dbar
    kernel otherwise), "constant", "kernel", or an explicit HiggsSection.
    ``force=True`` skips the threshold gate; below threshold the iteration is
    then expected to trip the divergence guards.
    """
    if bundle.rank != 1:
        raise ThresholdViolated("the scalar reduction needs a line bundle")
    opts = opts or SolveOptions()
    verdict = check_threshold(bundle, tau, geom)
    if verdict is not Threshold.SOLVABLE and not force:
        raise ThresholdViolated(f"threshold verdict {verdict.value} for tau={tau}")

    params = derive_parameters([bundle], tau, geom)
    phi0 = _reference_section(bundle, geom, zero_data, seed)
    W = np.sum(np.abs(phi0.values) ** 2, axis=(-2, -1))
    m, vol, d = geom.complex_dim, geom.volume, bundle.degree
    mass_target = tau * vol - 4.0 * np.pi * m * d
    const = tau / 2.0 - 2.0 * np.pi * m * d / vol

    intW = np.real(geom.quadrature(W))
    u0 = 0.5 * np.log(mass_target / intW) if mass_target > 0 else 0.0
    u, iterations, trace = _newton_scalar(geom, 0.5 * W, const, opts, u0=u0)

    A = connection_from_scalar(bundle, geom, u)
    phi = HiggsSection(geom, np.exp(u)[..., None, None] * phi0.values, phi0.flux)
    state = PairState(A, phi)

    residuals = vortex_residuals(state, params)
    report = ymh_energy(state, params)
    gap_rel = abs(report.defect) / max(1.0, abs(report.topological_minimum))
    certificate = {
        "energy": report.total,
        "terms": report.terms,
        "topological_minimum": report.topological_minimum,
        "defect": report.defect,
        "gap_rel": gap_rel,
        "residuals": residuals,
    }
    worst = max(residuals.values())
    if worst > opts.residual_tol:
        raise ResidualTooLarge(
            f"certified residual {worst:.3e} exceeds tolerance {opts.residual_tol:.1e}"
        )
    return VortexSolution(state, params, residuals, iterations, certificate, "converged", trace)


# ---------------------------------------------------------------------------
# gradient flow


def _precondition_gradient(grad, geom: TorusGeometry):
    """Apply (1 - Lap)^{-1} componentwise; SPD, so descent is preserved."""
    sym = 1.0 - _lap_multiplier(geom)
    grid_axes = tuple(range(geom.real_dim))

    def smooth(X):
        return np.fft.ifftn(np.fft.fftn(X, axes=grid_axes) / sym[..., None, None], axes=grid_axes)

    a1 = np.stack([smooth(grad.a1[mu]) for mu in range(geom.real_dim)])
    phi = smooth(grad.phi)
    a2 = None
    if grad.a2 is not None:
        a2 = np.stack([smooth(grad.a2[mu]) for mu in range(geom.real_dim)])
    return a1, phi, a2


def _shifted_state(state: FieldState, t: float, da1, dphi, da2=None) -> FieldState:
    if isinstance(state, PairState):
        A = ConnectionState(state.A.bundle, state.geom, state.A.perturbation + t * da1)
        phi = HiggsSection(state.geom, state.phi.values + t * dphi, state.phi.flux)
        return PairState(A, phi)
    A1 = ConnectionState(state.A1.bundle, state.geom, state.A1.perturbation + t * da1)
    A2 = ConnectionState(state.A2.bundle, state.geom, state.A2.perturbation + t * da2)
    phi = HiggsSection(state.geom, state.phi.values + t * dphi, state.phi.flux)
    return TripleState(A1, A2, phi)


def gradient_flow(state0: FieldState, params: ParameterSet, opts: SolveOptions | None = None) -> VortexSolution:
    """Backtracking descent on the YMH functional.

    Energy is nonincreasing at every accepted step.  Returns the final state
    with status "converged", "max_iters" or "diverged"; the energy trace is
    kept for inspection.
    """
    opts = opts or SolveOptions()
    geom = state0.geom
    state = state0
    energy = ymh_energy(state, params).total
    trace = [energy]
    scale = max(1.0, abs(energy))
    status = "max_iters"
    iterations = 0
    step = opts.step0
    for iterations in range(opts.max_iters):
        grad = ymh_gradient(state, params)
        gnorm = grad.norm()
        if gnorm <= opts.residual_tol * scale:
            status = "converged"
            break
        if opts.precondition:
            da1, dphi, da2 = _precondition_gradient(grad, geom)
        else:
            da1, dphi, da2 = grad.a1, grad.phi, grad.a2
        slope = grad.pairing(da1, dphi, da2)
        accepted = False
        for _ in range(opts.max_backtracks):
            cand = _shifted_state(state, -step, da1, dphi, da2)
            cand_energy = ymh_energy(cand, params).total
            if cand_energy <= energy - opts.armijo * step * slope:
                state, energy = cand, cand_energy
                trace.append(energy)
                accepted = True
                step = min(step * 2.0, opts.step0 * 64.0)
                break
            step *= 0.5
        if not accepted:
            status = "diverged"
            break
    else:
        iterations = opts.max_iters

    grad = ymh_gradient(state, params)
    residuals = vortex_residuals(state, params)
    residuals["gradient"] = grad.norm()
    report = ymh_energy(state, params)
    certificate = {
        "energy": report.total,
        "topological_minimum": report.topological_minimum,
        "defect": report.defect,
        "residuals": residuals,
    }
    return VortexSolution(state, params, residuals, iterations, certificate, status, trace)


# ---------------------------------------------------------------------------
# second connection and the coupled embedding


def solve_second_connection(
    vortex: PairState,
    tau_prime: float,
    geom: TorusGeometry,
    opts: SolveOptions | None = None,
    compat_tol: float = 1e-6,
) -> ConnectionState:
    """One spectral Poisson solve for the abelian connection on the trivial line.

    The equation Lambda F' = -(i/2)(|phi|^2 + tau') is solvable on a degree-0
    line bundle iff the right side integrates to zero; that Chern-Weil
    compatibility is checked before solving.
    """
    opts = opts or SolveOptions()
    p = np.sum(np.abs(vortex.phi.values) ** 2, axis=(-2, -1))
    mismatch = np.real(geom.quadrature(0.5 * p + 0.5 * tau_prime))
    scale = max(1.0, abs(tau_prime) * geom.volume)
    if abs(mismatch) > compat_tol * scale:
        raise IncompatibleTopology(
            f"integral of |phi|^2/2 + tau'/2 is {mismatch:.3e}, not 0: "
            "data cannot sit on a degree-0 line bundle"
        )
    line = BundleSpec(1, 0, "L")
    rhs = -0.5 * (p + tau_prime)
    v = solve_poisson(geom, rhs)
    A2 = connection_from_scalar(line, geom, v)
    lf = lambda_F(A2)[..., 0, 0]
    res = lf + 0.5j * p + 0.5j * tau_prime
    res_norm = float(np.sqrt(np.real(geom.quadrature(np.abs(res) ** 2))))
    if res_norm > opts.residual_tol + abs(mismatch):
        raise ResidualTooLarge(f"second-connection residual {res_norm:.3e}")
    return A2


def embed_vortex_as_coupled(vortex: VortexSolution, opts: SolveOptions | None = None) -> VortexSolution:
    """Lift a certified vortex on (E, h) to a coupled triple on (E, L).

    The lift is conformal, not literal: turning on the second connection
    changes the Hom(L, E) holomorphicity condition, so the pair is adjusted by
    complex gauges e^{alpha} on E and e^{beta} on L.  Their difference
    gamma = alpha - beta solves one more scalar equation of the same
    Kazdan-Warner type,

        Lap gamma = p e^{2 gamma} - (p - tau')/2,        p = |phi|^2,

    after which beta is a single Poisson solve (the second connection) and
    all three coupled residuals close to solver precision.  At degree zero
    gamma = beta = 0 and the triple is the literal (A, flat, phi).
    """
    opts = opts or SolveOptions()
    state = vortex.state
    if not isinstance(state, PairState):
        raise ResidualTooLarge("embedding expects a single-bundle vortex solution")
    if state.A.bundle.rank != 1:
        raise ResidualTooLarge("the conformal lift is implemented for line bundles")
    worst = max(v for k, v in vortex.residuals.items() if k != "gradient")
    if worst > 10.0 * opts.residual_tol:
        raise ResidualTooLarge(
            f"input residual {worst:.3e} too large: refusing to embed a non-solution"
        )
    geom = state.geom
    bundle = state.A.bundle
    line = BundleSpec(1, 0, "L")
    params = derive_parameters([bundle, line], vortex.params.tau, geom)
    tau_prime = params.tau_prime

    p = np.sum(np.abs(state.phi.values) ** 2, axis=(-2, -1))
    gamma, extra_iters, _ = _newton_scalar(geom, p, 0.5 * (p - tau_prime), opts, u0=0.0)
    p_adj = np.exp(2.0 * gamma) * p
    beta = solve_poisson(geom, -0.5 * (p_adj + tau_prime))
    alpha = beta + gamma

    a_adj = state.A.perturbation + connection_from_scalar(bundle, geom, alpha).perturbation
    A1 = ConnectionState(bundle, geom, a_adj)
    phi_adj = HiggsSection(
        geom, np.exp(gamma)[..., None, None] * state.phi.values, state.phi.flux
    )
    adjusted = PairState(A1, phi_adj)
    A2 = solve_second_connection(adjusted, tau_prime, geom, opts)
    triple = TripleState(A1, A2, phi_adj)

    residuals = vortex_residuals(triple, params)
    report = ymh_energy(triple, params)
    certificate = {
        "energy": report.total,
        "terms": report.terms,
        "topological_minimum": report.topological_minimum,
        "defect": report.defect,
        "residuals": residuals,
    }
    worst_out = max(residuals.values())
    if worst_out > opts.residual_tol:
        raise ResidualTooLarge(f"coupled residual {worst_out:.3e} after embedding")
    return VortexSolution(
        triple, params, residuals, vortex.iterations + extra_iters, certificate, "converged"
    )


# ---------------------------------------------------------------------------
# Coulomb gauge projection


def _coderivative_oneform(geom: TorusGeometry, a: np.ndarray) -> np.ndarray:
    out = 0.0
    for mu in range(geom.real_dim):
        out = out + geom.deriv(a[mu], mu)
    return -np.asarray(out) / geom.kahler_scale


def coulomb_project(a: np.ndarray, geom: TorusGeometry, opts: SolveOptions | None = None) -> np.ndarray:
    """Remove the exact part of a perturbation: d^*(result) = 0.

    Rank 1 is an exact Hodge projection mode by mode.  For higher rank a
    small-field iteration composes gauge transformations exp(chi); outside the
    smallness regime it refuses with FieldTooLarge.
    """
    opts = opts or SolveOptions()
    rank = a.shape[-1]
    grid_axes = tuple(range(1, 1 + geom.real_dim))
    if rank == 1:
        ahat = np.fft.fftn(a[..., 0, 0], axes=grid_axes)
        k2 = np.zeros(geom.shape)
        div = np.zeros(geom.shape, dtype=complex)
        ks = []
        for mu in range(geom.real_dim):
            k = np.broadcast_to(geom.wavenumber(mu), geom.shape)
            ks.append(k)
            k2 = k2 + k * k
            div = div + 1j * k * ahat[mu]
        k2_safe = np.where(k2 == 0, 1.0, k2)
        psi = np.where(k2 == 0, 0.0, -div / k2_safe)
        out = np.empty_like(a)
        for mu in range(geom.real_dim):
            comp = np.fft.ifftn(ahat[mu] - 1j * ks[mu] * psi, axes=tuple(range(geom.real_dim)))
            out[mu, ..., 0, 0] = 0.5 * (comp - np.conj(comp))
        return out

    sup = float(np.max(np.sqrt(_frob2(np.moveaxis(a, 0, -3)).sum(axis=-1))))
    if sup > 0.75:
        raise FieldTooLarge(f"perturbation sup norm {sup:.3f} outside the smallness regime")
    cur = a.copy()
    eye = np.eye(rank)
    chi = np.zeros(a.shape[1:], dtype=complex)
    for _ in range(opts.max_iters):
        r = _coderivative_oneform(geom, cur)
        rnorm = float(np.max(np.abs(r)))
        if rnorm <= opts.residual_tol:
            return cur
        eta = solve_poisson(geom, -r)
        chi = chi + eta
        g = np.broadcast_to(eye, chi.shape).astype(complex).copy()
        term = g.copy()
        for n in range(1, 18):
            term = term @ chi / n
            g = g + term
        gh = np.conj(np.swapaxes(g, -1, -2))
        cur = np.empty_like(a)
        for mu in range(geom.real_dim):
            cur[mu] = g @ a[mu] @ gh - geom.deriv(g, mu) @ gh
    raise FieldTooLarge("Coulomb iteration did not converge in the smallness regime")
