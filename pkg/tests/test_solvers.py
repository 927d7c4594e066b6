import numpy as np
import pytest

from vortexlab.errors import (
    Diverged,
    FieldTooLarge,
    IncompatibleTopology,
    ResidualTooLarge,
    ThresholdViolated,
)
from vortexlab.fields import (
    BundleSpec,
    ConnectionState,
    HiggsSection,
    PairState,
    curvature,
    curvature_norm2_density,
    random_state,
    smooth_field,
    zero_connection,
    _skew,
)
from vortexlab.functional import derive_parameters, vortex_residuals
from vortexlab.solvers import (
    SolveOptions,
    coulomb_project,
    dbar_kernel_section,
    embed_vortex_as_coupled,
    gradient_flow,
    solve_abelian_vortex,
    solve_second_connection,
    _coderivative_oneform,
)

FOUR_PI = 4 * np.pi


# ---------------------------------------------------------------------------
# the kernel oracle


def test_kernel_section_holomorphic(g64):
    from vortexlab.fields import dbar_A, dbar_norm2_density

    E = BundleSpec(1, 1)
    phi0 = dbar_kernel_section(E, g64, seed=0)
    A0 = zero_connection(E, g64)
    db = dbar_A(A0, phi0)
    res = np.sqrt(np.real(g64.quadrature(dbar_norm2_density(db, g64))))
    assert res < 1e-10
    # normalized and reproducible
    assert np.real(g64.quadrature(np.abs(phi0.values[..., 0, 0]) ** 2)) == pytest.approx(1.0, rel=1e-12)
    again = dbar_kernel_section(E, g64, seed=0)
    assert np.max(np.abs(np.abs(again.values) - np.abs(phi0.values))) < 1e-10


# ---------------------------------------------------------------------------
# abelian vortex solves


def test_degree_zero_constant_solution(g32, line0):
    tau = 2.5
    sol = solve_abelian_vortex(line0, "auto", tau, g32)
    assert max(sol.residuals.values()) < 1e-12
    p = np.abs(sol.state.phi.values[..., 0, 0]) ** 2
    assert np.max(np.abs(p - tau)) < 1e-12
    # u is the constant log sqrt(tau): flat connection
    assert np.max(np.abs(sol.state.A.perturbation)) < 1e-12


def test_degree_one_certified(g64, line1):
    tau = 1.1 * FOUR_PI
    sol = solve_abelian_vortex(line1, "auto", tau, g64)
    assert max(sol.residuals.values()) < 1e-8
    energy = sol.certificate["energy"]
    assert abs(energy - 2 * np.pi * tau) <= 1e-5 * 2 * np.pi * tau
    assert sol.certificate["defect"] >= -1e-9
    assert sol.certificate["gap_rel"] <= 1e-5


def test_below_threshold_forced_diverges(g32, line1):
    with pytest.raises(Diverged):
        solve_abelian_vortex(line1, "auto", 0.9 * FOUR_PI, g32, force=True)


def test_threshold_gate(g32, line1):
    with pytest.raises(ThresholdViolated):
        solve_abelian_vortex(line1, "auto", 0.9 * FOUR_PI, g32)


def test_threshold_dichotomy(g32, line1):
    ok = solve_abelian_vortex(line1, "auto", 1.05 * FOUR_PI, g32)
    assert max(ok.residuals.values()) < 1e-8
    with pytest.raises(Diverged):
        solve_abelian_vortex(line1, "auto", 0.95 * FOUR_PI, g32, force=True)


# ---------------------------------------------------------------------------
# gradient flow


def test_flow_terminates_at_solution(g32, line0):
    sol = solve_abelian_vortex(line0, "auto", 2.0, g32)
    opts = SolveOptions(residual_tol=1e-6, max_iters=10)
    out = gradient_flow(sol.state, sol.params, opts)
    assert out.status == "converged"
    assert out.iterations == 0


def test_flow_converges_near_constant(g32, line0):
    tau = 2.0
    params = derive_parameters([line0], tau, g32)
    rng = np.random.default_rng(5)
    vals = np.sqrt(tau) * (1.0 + 0.05 * smooth_field(rng, g32, 4.0))[..., None, None]
    a = 0.05 * np.stack([_skew(smooth_field(rng, g32, 4.0, (1, 1))) for _ in range(2)])
    st = PairState(ConnectionState(line0, g32, a), HiggsSection(g32, vals, (0.0,)))
    opts = SolveOptions(residual_tol=1e-8, max_iters=4000)
    out = gradient_flow(st, params, opts)
    assert out.status == "converged"
    p = np.abs(out.state.phi.values[..., 0, 0]) ** 2
    assert np.max(np.abs(p - tau)) < 1e-6
    # energy trace is nonincreasing at every accepted step
    trace = np.array(out.trace)
    assert np.all(np.diff(trace) <= 1e-12)


def test_flow_max_iters_flag(g32, line0):
    st = random_state(30, 4.0, g32, [line0], kind="pair")
    params = derive_parameters([line0], 3.0, g32)
    out = gradient_flow(st, params, SolveOptions(residual_tol=1e-12, max_iters=3))
    assert out.status in ("max_iters", "diverged")
    trace = np.array(out.trace)
    assert np.all(np.diff(trace) <= 1e-12)


# ---------------------------------------------------------------------------
# second connection and embedding


def test_second_connection_constant(g32, line0):
    tau = 2.5
    sol = solve_abelian_vortex(line0, "auto", tau, g32)
    A2 = solve_second_connection(sol.state, -tau, g32)
    assert np.max(np.abs(A2.perturbation)) < 1e-12


def test_second_connection_certified(g64, line1):
    tau = 1.1 * FOUR_PI
    sol = solve_abelian_vortex(line1, "auto", tau, g64)
    coup = embed_vortex_as_coupled(sol)
    p = np.sum(np.abs(coup.state.phi.values) ** 2, axis=(-2, -1))
    from vortexlab.functional import lambda_F

    lf = lambda_F(coup.state.A2)[..., 0, 0]
    res = lf + 0.5j * p + 0.5j * coup.params.tau_prime
    assert np.sqrt(np.real(g64.quadrature(np.abs(res) ** 2))) < 1e-10


def test_second_connection_rejects_scaled_phi(g64, line1):
    tau = 1.1 * FOUR_PI
    sol = solve_abelian_vortex(line1, "auto", tau, g64)
    params = derive_parameters([line1, BundleSpec(1, 0, "L")], tau, g64)
    scaled = PairState(
        sol.state.A,
        HiggsSection(g64, 2.0 * sol.state.phi.values, sol.state.phi.flux),
    )
    with pytest.raises(IncompatibleTopology):
        solve_second_connection(scaled, params.tau_prime, g64)


def test_embed_deg0_flat(g32, line0):
    sol = solve_abelian_vortex(line0, "auto", 2.5, g32)
    coup = embed_vortex_as_coupled(sol)
    assert np.max(np.abs(coup.state.A2.perturbation)) < 1e-12
    assert np.max(np.abs(coup.state.A1.perturbation)) < 1e-12
    assert max(coup.residuals.values()) < 1e-10


def test_embed_deg1_residuals(g64, line1):
    tau = 1.1 * FOUR_PI
    sol = solve_abelian_vortex(line1, "auto", tau, g64)
    coup = embed_vortex_as_coupled(sol)
    assert max(coup.residuals.values()) < 1e-10
    # a coupled vortex attains the coupled topological constant
    assert abs(coup.certificate["defect"]) <= 1e-6


def test_embed_refuses_non_solution(g32, line0):
    from vortexlab.solvers import VortexSolution

    st = random_state(13, 4.0, g32, [line0], kind="pair")
    params = derive_parameters([line0], 3.0, g32)
    fake = VortexSolution(st, params, vortex_residuals(st, params), 0, {})
    with pytest.raises(ResidualTooLarge):
        embed_vortex_as_coupled(fake)


# ---------------------------------------------------------------------------
# Coulomb projection


def _random_abelian_perturbation(geom, seed, amp=0.4):
    rng = np.random.default_rng(seed)
    return amp * np.stack(
        [_skew(smooth_field(rng, geom, 4.0, (1, 1))) for _ in range(geom.real_dim)]
    )


def test_coulomb_exact_form_killed(g32):
    rng = np.random.default_rng(21)
    xi = np.real(smooth_field(rng, g32, 4.0))
    a = np.zeros((2,) + g32.shape + (1, 1), dtype=complex)
    for mu in range(2):
        a[mu, ..., 0, 0] = 1j * g32.deriv(xi, mu)
    out = coulomb_project(a, g32)
    assert np.max(np.abs(out)) < 1e-10


def test_coulomb_projection_properties(g32, line0):
    a = _random_abelian_perturbation(g32, 23)
    out = coulomb_project(a, g32)
    div = _coderivative_oneform(g32, out)
    assert np.max(np.abs(div)) < 1e-10
    # curvature unchanged
    F_in = curvature(ConnectionState(line0, g32, a))
    F_out = curvature(ConnectionState(line0, g32, out))
    assert np.max(np.abs(F_in.component(0, 1) - F_out.component(0, 1))) < 1e-10
    # coclosed input is a fixed point; projection is idempotent
    again = coulomb_project(out, g32)
    assert np.max(np.abs(again - out)) < 1e-12


def test_coulomb_nonabelian_small_field(g32):
    rng = np.random.default_rng(25)
    a = 0.05 * np.stack([_skew(smooth_field(rng, g32, 4.0, (2, 2))) for _ in range(2)])
    out = coulomb_project(a, g32, SolveOptions(residual_tol=1e-10, max_iters=80))
    div = _coderivative_oneform(g32, out)
    assert np.max(np.abs(div)) < 1e-9
    # gauge-equivalent: curvature norm preserved
    E = BundleSpec(2, 0)
    d_in = curvature_norm2_density(curvature(ConnectionState(E, g32, a)), g32)
    d_out = curvature_norm2_density(curvature(ConnectionState(E, g32, out)), g32)
    assert np.real(g32.quadrature(d_in)) == pytest.approx(
        np.real(g32.quadrature(d_out)), rel=1e-10
    )


def test_coulomb_nonabelian_large_field_guard(g32):
    rng = np.random.default_rng(27)
    a = 3.0 * np.stack([_skew(smooth_field(rng, g32, 4.0, (2, 2))) for _ in range(2)])
    with pytest.raises(FieldTooLarge):
        coulomb_project(a, g32)
