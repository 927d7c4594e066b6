import numpy as np
import pytest

from vortexlab.errors import BundleMismatch, NonUnitaryGauge, TwistNotIntegral
from vortexlab.fields import (
    BundleSpec,
    ConnectionState,
    HiggsSection,
    PairState,
    covariant_derivative,
    curvature,
    dbar_A,
    gauge_apply,
    integrability_residual,
    project_integrable,
    random_state,
    random_unitary,
    smooth_field,
    twisted_deriv,
    zero_connection,
    _skew,
)
from vortexlab.functional import chern_weil_degree, derive_parameters, ymh_density, ymh_energy
from vortexlab.geometry import contract_lambda


# ---------------------------------------------------------------------------
# curvature


def test_background_curvature_contraction(g32):
    for rank, deg in [(1, 1), (2, 3), (3, -2)]:
        A = zero_connection(BundleSpec(rank, deg), g32)
        lam = np.asarray(contract_lambda(curvature(A), g32))
        expect = -2j * np.pi * g32.complex_dim * deg / (rank * g32.volume)
        assert np.max(np.abs(lam - expect * np.eye(rank))) < 1e-12


def test_pure_gauge_curvature_vanishes(g32, line0):
    rng = np.random.default_rng(3)
    xi = np.real(smooth_field(rng, g32, 4.0))
    a = np.zeros((2,) + g32.shape + (1, 1), dtype=complex)
    for mu in range(2):
        a[mu, ..., 0, 0] = 1j * g32.deriv(xi, mu)
    A = ConnectionState(line0, g32, a)
    F = curvature(A)
    assert np.max(np.abs(F.component(0, 1))) < 1e-10


def test_abelian_curvature_gauge_invariant(g32, line0):
    st = random_state(11, 4.0, g32, [line0], kind="pair")
    g = random_unitary(5, g32, 1)
    st2 = gauge_apply(g, None, st)
    F1 = curvature(st.A).component(0, 1)
    F2 = curvature(st2.A).component(0, 1)
    assert np.max(np.abs(F1 - F2)) < 1e-12


# ---------------------------------------------------------------------------
# covariant derivatives


def test_dbar_constant_section_flat(g32, line0):
    A = zero_connection(line0, g32)
    phi = HiggsSection(g32, np.ones(g32.shape + (1, 1), dtype=complex), (0.0,))
    db = dbar_A(A, phi)
    assert np.max(np.abs(db)) < 1e-14


def test_dbar_fourier_mode_analytic(g32, line0):
    # phi = exp(2 pi i (x + y)): dbar phi = (pi i)(1 + i) phi
    A = zero_connection(line0, g32)
    x = np.broadcast_to(g32.coordinate(0), g32.shape)
    y = np.broadcast_to(g32.coordinate(1), g32.shape)
    vals = np.exp(2j * np.pi * (x + y))[..., None, None]
    phi = HiggsSection(g32, vals, (0.0,))
    db = dbar_A(A, phi)
    expect = 0.5 * (2j * np.pi + 1j * 2j * np.pi) * vals
    assert np.max(np.abs(db[0] - expect)) < 1e-10


def test_covariant_leibniz_rule(g32):
    E = BundleSpec(2, 0)
    st = random_state(17, 4.0, g32, [E], kind="pair")
    rng = np.random.default_rng(23)
    f = smooth_field(rng, g32, 4.0)
    scaled = HiggsSection(g32, f[..., None, None] * st.phi.values, st.phi.flux)
    D_scaled = covariant_derivative(scaled, st.A)
    D_phi = covariant_derivative(st.phi, st.A)
    for mu in range(2):
        df = g32.deriv(f, mu)
        expect = df[..., None, None] * st.phi.values + f[..., None, None] * D_phi[mu]
        assert np.max(np.abs(D_scaled[mu] - expect)) < 1e-10


def _commutator_defect(geom, A1, A2, phi):
    D = covariant_derivative(phi, A1, A2)

    def cov(v, mu):
        d = twisted_deriv(geom, v, mu, phi.flux)
        if mu % 2 == 1:
            k = mu // 2
            q = phi.flux[k]
            if q != 0.0:
                from vortexlab.fields import background_potential_y

                d = d + background_potential_y(geom, q, k)[..., None, None] * v
        d = d + A1.perturbation[mu] @ v
        if A2 is not None:
            d = d - v @ A2.perturbation[mu]
        return d

    worst = 0.0
    F1 = curvature(A1)
    F2 = curvature(A2) if A2 is not None else None
    n = geom.real_dim
    for mu in range(n):
        for nu in range(mu + 1, n):
            comm = cov(D[nu], mu) - cov(D[mu], nu)
            expect = F1.component(mu, nu) @ phi.values
            if F2 is not None:
                expect = expect - phi.values @ F2.component(mu, nu)
            worst = max(worst, float(np.max(np.abs(comm - expect))))
    return worst


def test_commutator_identity_rank2(g32):
    st = random_state(22, 4.0, g32, [BundleSpec(2, 0)], kind="pair")
    assert _commutator_defect(g32, st.A, None, st.phi) < 1e-11


def test_commutator_identity_triple(g32):
    st = random_state(29, 4.0, g32, [BundleSpec(2, 0), BundleSpec(1, 0, "L")], kind="triple")
    assert _commutator_defect(g32, st.A1, st.A2, st.phi) < 1e-11


def test_commutator_identity_twisted_section(g64):
    """Background-twist audit: the commutator must see the degree-1 flux."""
    from vortexlab.solvers import dbar_kernel_section

    E = BundleSpec(1, 1)
    A = zero_connection(E, g64)
    carrier = dbar_kernel_section(E, g64, seed=0)
    rng = np.random.default_rng(31)
    f = smooth_field(rng, g64, 4.0)
    phi = HiggsSection(g64, f[..., None, None] * carrier.values, carrier.flux)
    assert _commutator_defect(g64, A, None, phi) < 1e-10


# ---------------------------------------------------------------------------
# gauge action


def test_gauge_identity_fixes_state(g32):
    st = random_state(41, 4.0, g32, [BundleSpec(2, 0)], kind="pair")
    eye = np.broadcast_to(np.eye(2), g32.shape + (2, 2)).astype(complex)
    st2 = gauge_apply(eye, None, st)
    assert np.max(np.abs(st2.A.perturbation - st.A.perturbation)) < 1e-14
    assert np.max(np.abs(st2.phi.values - st.phi.values)) < 1e-14


def test_constant_phase_leaves_density(g32, line0):
    st = random_state(43, 4.0, g32, [line0, BundleSpec(1, 0, "L")], kind="triple")
    params = derive_parameters([line0, BundleSpec(1, 0, "L")], 7.0, g32)
    phase1 = np.exp(0.7j) * np.broadcast_to(np.eye(1), g32.shape + (1, 1)).astype(complex)
    phase2 = np.exp(-0.3j) * np.broadcast_to(np.eye(1), g32.shape + (1, 1)).astype(complex)
    st2 = gauge_apply(phase1, phase2, st)
    d1 = ymh_density(st, params)
    d2 = ymh_density(st2, params)
    assert np.max(np.abs(d1 - d2)) < 1e-12


def test_random_gauge_energy_invariance(g32):
    E1, E2 = BundleSpec(2, 0), BundleSpec(1, 0, "L")
    st = random_state(3, 4.0, g32, [E1, E2], kind="triple")
    params = derive_parameters([E1, E2], 9.0, g32)
    g1 = random_unitary(11, g32, 2)
    g2 = random_unitary(12, g32, 1)
    e1 = ymh_energy(st, params).total
    e2 = ymh_energy(gauge_apply(g1, g2, st), params).total
    assert abs(e1 - e2) <= 1e-10 * abs(e1)


def test_gauge_group_action(g32):
    E = BundleSpec(2, 0)
    st = random_state(47, 4.0, g32, [E], kind="pair")
    g = random_unitary(13, g32, 2)
    h = random_unitary(14, g32, 2)
    once = gauge_apply(g @ h, None, st)
    twice = gauge_apply(g, None, gauge_apply(h, None, st))
    assert np.max(np.abs(once.A.perturbation - twice.A.perturbation)) < 1e-10
    assert np.max(np.abs(once.phi.values - twice.phi.values)) < 1e-10


def test_curvature_conjugation(g32):
    from vortexlab.fields import _transform_connection

    E = BundleSpec(2, 1)
    st_a = random_state(53, 4.0, g32, [BundleSpec(2, 0)], kind="pair")
    A = ConnectionState(E, g32, st_a.A.perturbation)
    g = random_unitary(15, g32, 2)
    gh = np.conj(np.swapaxes(g, -1, -2))
    F = curvature(A)
    F2 = curvature(_transform_connection(A, g))
    defect = np.max(np.abs(F2.component(0, 1) - g @ F.component(0, 1) @ gh))
    assert defect < 1e-10


def test_dbar_equivariance(g32):
    E = BundleSpec(2, 0)
    st = random_state(59, 4.0, g32, [E], kind="pair")
    g = random_unitary(16, g32, 2)
    st2 = gauge_apply(g, None, st)
    db = dbar_A(st.A, st.phi)
    db2 = dbar_A(st2.A, st2.phi)
    for k in range(g32.complex_dim):
        assert np.max(np.abs(db2[k] - g @ db[k])) < 1e-10


def test_nonunitary_gauge_rejected(g32):
    st = random_state(61, 4.0, g32, [BundleSpec(1, 0)], kind="pair")
    bad = 1.5 * np.broadcast_to(np.eye(1), g32.shape + (1, 1)).astype(complex)
    with pytest.raises(NonUnitaryGauge):
        gauge_apply(bad, None, st)


# ---------------------------------------------------------------------------
# random states


def test_random_state_deterministic(g32, line0):
    a = random_state(7, 4.0, g32, [line0], kind="pair")
    b = random_state(7, 4.0, g32, [line0], kind="pair")
    assert np.array_equal(a.A.perturbation, b.A.perturbation)
    assert np.array_equal(a.phi.values, b.phi.values)
    c = random_state(8, 4.0, g32, [line0], kind="pair")
    assert not np.array_equal(a.A.perturbation, c.A.perturbation)


def test_random_state_spectral_decay(g64, line0):
    st = random_state(9, 4.0, g64, [line0], kind="pair")
    spec = np.abs(np.fft.fftn(st.phi.values[..., 0, 0])) ** 2
    k = np.fft.fftfreq(64) * 64
    kx, ky = np.meshgrid(k, k, indexing="ij")
    kmag = np.sqrt(kx**2 + ky**2)
    top = spec[kmag >= 16].sum()
    assert top < 1e-6 * spec.sum()


def test_random_state_skew(g32):
    st = random_state(10, 4.0, g32, [BundleSpec(3, 0)], kind="pair")
    assert st.A.skewness_defect() < 1e-14


def test_random_m2_abelian_integrable(g8_4, line0):
    st = random_state(12, 4.0, g8_4, [line0], kind="pair")
    assert integrability_residual(st.A) < 1e-11


def test_project_integrable_m2(g8_4, line0):
    rng = np.random.default_rng(77)
    a = np.stack([_skew(smooth_field(rng, g8_4, 3.0, (1, 1))) for _ in range(4)])
    A = ConnectionState(line0, g8_4, a)
    assert integrability_residual(A) > 1e-4  # generic data is not integrable
    P = project_integrable(A)
    assert integrability_residual(P) < 1e-12
    # projection only removes the non-closed (0,1) content
    assert P.skewness_defect() < 1e-12


# ---------------------------------------------------------------------------
# twisted sections


def test_twist_integrality_guard(g32):
    with pytest.raises(TwistNotIntegral):
        HiggsSection(g32, np.ones(g32.shape + (1, 1), dtype=complex), (0.5,))


def test_cocycle_defect_integer(g32):
    phi = HiggsSection(g32, np.ones(g32.shape + (1, 1), dtype=complex), (3.0,))
    assert phi.cocycle_defect() < 1e-12


def test_section_flux_must_match_bundles(g32):
    A = zero_connection(BundleSpec(1, 1), g32)
    phi = HiggsSection(g32, np.ones(g32.shape + (1, 1), dtype=complex), (0.0,))
    with pytest.raises(BundleMismatch):
        PairState(A, phi)


def test_random_section_rejected_for_nonzero_flux(g32, line1):
    with pytest.raises(TwistNotIntegral):
        random_state(1, 4.0, g32, [line1], kind="pair")


# ---------------------------------------------------------------------------
# Chern-Weil integrality


@pytest.mark.parametrize("deg", [-2, 0, 1, 3])
def test_chern_weil_integrality_m1(g32, deg):
    bundle = BundleSpec(1, deg)
    base = random_state(deg + 100, 4.0, g32, [BundleSpec(1, 0)], kind="pair")
    A = ConnectionState(bundle, g32, base.A.perturbation)
    val = chern_weil_degree(A, g32)
    assert abs(val - deg) < 1e-8


def test_chern_weil_integrality_m2(g8_4):
    bundle = BundleSpec(1, 2)
    base = random_state(5, 4.0, g8_4, [BundleSpec(1, 0)], kind="pair")
    A = ConnectionState(bundle, g8_4, base.A.perturbation)
    assert abs(chern_weil_degree(A, g8_4) - 2) < 1e-8
