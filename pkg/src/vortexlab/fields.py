"""Hermitian bundles, unitary connections and Higgs fields on torus grids.

A bundle of rank r and degree d is realized as a fixed constant-curvature
background connection plus a periodic perturbation:

    F_0 = -2 pi i * (d / (r * Vol)) * omega * I_r.

The background potential is taken in the gauge A_0 = sum_k c_k x_k dy_k, so
sections are not plain periodic grids: crossing the fundamental domain in
x_k multiplies a section by exp(2 pi i q_k y_k / L_k), where q_k is the
per-axis flux integer.  A section is stored by its values on the fundamental
domain together with its flux tuple; derivatives remove the Bloch phase
exp(2 pi i q_k x_k y_k / L_k^2) before transforming, which keeps every
derivative spectrally accurate.

All pointwise matrix norms are Frobenius; 1-form and 2-form norms carry the
metric factors 1/scale and 1/scale^2 from the orthonormal coframe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BundleMismatch,
    NonUnitaryGauge,
    ShapeMismatch,
    TwistNotIntegral,
)
from .geometry import GridForm, TorusGeometry


# ---------------------------------------------------------------------------
# bundles


@dataclass(frozen=True)
class BundleSpec:
    """Topological type: rank and degree against the normalized Kahler volume."""

    rank: int
    degree: int
    label: str = "E"

    def __post_init__(self):
        if self.rank < 1:
            raise BundleMismatch(f"rank must be >= 1, got {self.rank}")

    @property
    def slope(self) -> float:
        return self.degree / self.rank


def axis_flux(bundle: BundleSpec, geom: TorusGeometry) -> tuple[float, ...]:
    """Per-complex-axis curvature flux of the scalar background.

    The background spreads the degree evenly over the axes; the flux through
    the k-th coordinate 2-cycle is d * s * L_k^2 / (rank * Vol).  It need not
    be an integer for rank > 1; sections are only supported when the net flux
    they carry is integral.
    """
    s = geom.kahler_scale
    return tuple(
        bundle.degree * s * L * L / (bundle.rank * geom.volume) for L in geom.periods
    )


# ---------------------------------------------------------------------------
# twisted spectral derivatives


def _with_matrix_axes(arr: np.ndarray, extra: int) -> np.ndarray:
    return arr.reshape(arr.shape + (1,) * extra) if extra else arr


def twisted_deriv(geom: TorusGeometry, values: np.ndarray, axis: int, flux) -> np.ndarray:
    """d/dx_axis of a section with the given per-axis flux tuple.

    For y-axes (and flux-free x-axes) this is the plain spectral derivative.
    For a fluxed x-axis the Bloch phase is removed first so the transformed
    field is exactly periodic.
    """
    k = axis // 2
    q = flux[k] if flux is not None else 0.0
    if axis % 2 == 1 or q == 0.0:
        return geom.deriv(values, axis)
    L = geom.axis_period[axis]
    extra = values.ndim - geom.real_dim
    x = _with_matrix_axes(geom.coordinate(axis), extra)
    y = _with_matrix_axes(geom.coordinate(axis + 1), extra)
    theta = 2.0 * np.pi * q * y / (L * L)
    phase = np.exp(1j * theta * x)
    psi = np.conj(phase) * values
    dpsi = geom.deriv(psi, axis)
    return phase * (dpsi + 1j * theta * psi)


def background_potential_y(geom: TorusGeometry, flux_k: float, k: int) -> np.ndarray:
    """Coefficient of dy_k in the background potential: -2 pi i q_k x_k / L_k^2."""
    L = geom.periods[k]
    x = geom.coordinate(2 * k)
    return -2j * np.pi * flux_k * x / (L * L)


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class ConnectionState:
    """Background constant-curvature connection plus a periodic perturbation.

    ``perturbation`` has shape (2m,) + grid_shape + (r, r) and must be
    pointwise skew-hermitian in the matrix axes.
    """

    bundle: BundleSpec
    geom: TorusGeometry
    perturbation: np.ndarray

    def __post_init__(self):
        r = self.bundle.rank
        want = (self.geom.real_dim,) + self.geom.shape + (r, r)
        if self.perturbation.shape != want:
            raise ShapeMismatch(
                f"perturbation shape {self.perturbation.shape}, expected {want}"
            )

    @property
    def rank(self) -> int:
        return self.bundle.rank

    def flux(self) -> tuple[float, ...]:
        return axis_flux(self.bundle, self.geom)

    def skewness_defect(self) -> float:
        a = self.perturbation
        return float(np.max(np.abs(a + np.conj(np.swapaxes(a, -1, -2)))))


def zero_connection(bundle: BundleSpec, geom: TorusGeometry) -> ConnectionState:
    r = bundle.rank
    a = np.zeros((geom.real_dim,) + geom.shape + (r, r), dtype=complex)
    return ConnectionState(bundle, geom, a)


def connection_from_scalar(bundle: BundleSpec, geom: TorusGeometry, u: np.ndarray) -> ConnectionState:
    """Abelian-type perturbation del(u) - delbar(u), tensored with the identity.

    Componentwise a_{x_k} = -i du/dy_k, a_{y_k} = +i du/dx_k; this is the
    unitary-gauge image of the conformal metric change h -> h e^{2u}.
    """
    r = bundle.rank
    eye = np.eye(r)
    a = np.zeros((geom.real_dim,) + geom.shape + (r, r), dtype=complex)
    for k in range(geom.complex_dim):
        ux = geom.deriv(u, 2 * k)
        uy = geom.deriv(u, 2 * k + 1)
        a[2 * k] = (-1j * uy)[..., None, None] * eye
        a[2 * k + 1] = (1j * ux)[..., None, None] * eye
    return ConnectionState(bundle, geom, a)


@dataclass(frozen=True)
class HiggsSection:
    """Grid of section values with twisted-periodicity flux data.

    ``values`` has shape grid_shape + (r1, r2); a section of a single bundle E
    is the r2 = 1 case (Hom from the trivial line).  ``flux`` is the per-axis
    flux tuple the section transforms under; it must be integral for the
    transition cocycle to close up.
    """

    geom: TorusGeometry
    values: np.ndarray
    flux: tuple[float, ...]

    def __post_init__(self):
        if self.values.ndim != self.geom.real_dim + 2:
            raise ShapeMismatch(
                f"section values need grid + (r1, r2) axes, got shape {self.values.shape}"
            )
        if self.values.shape[: self.geom.real_dim] != self.geom.shape:
            raise ShapeMismatch(
                f"section grid {self.values.shape[:self.geom.real_dim]} != {self.geom.shape}"
            )
        for q in self.flux:
            if abs(q - round(q)) > 1e-9:
                raise TwistNotIntegral(
                    f"section flux {self.flux} is not integral; no such bundle section"
                )

    def cocycle_defect(self) -> float:
        """|e^{2 pi i q} - 1| maximized over axes: plaquette transport check."""
        return max(abs(np.exp(2j * np.pi * q) - 1.0) for q in self.flux)

    @property
    def shape_hom(self) -> tuple[int, int]:
        return self.values.shape[-2:]


@dataclass(frozen=True)
class PairState:
    """Single-bundle configuration (A, phi)."""

    A: ConnectionState
    phi: HiggsSection

    def __post_init__(self):
        _check_section_fits(self.phi, self.A, None)

    @property
    def geom(self) -> TorusGeometry:
        return self.A.geom


@dataclass(frozen=True)
class TripleState:
    """Two-bundle configuration (A1, A2, phi) with phi in Hom(E2, E1)."""

    A1: ConnectionState
    A2: ConnectionState
    phi: HiggsSection

    def __post_init__(self):
        _check_section_fits(self.phi, self.A1, self.A2)

    @property
    def geom(self) -> TorusGeometry:
        return self.A1.geom


FieldState = PairState | TripleState


def _check_section_fits(phi: HiggsSection, A1: ConnectionState, A2: ConnectionState | None):
    r1, r2 = phi.shape_hom
    if r1 != A1.rank or r2 != (A2.rank if A2 is not None else 1):
        raise BundleMismatch(
            f"section shape {phi.shape_hom} does not fit ranks "
            f"({A1.rank}, {A2.rank if A2 is not None else 1})"
        )
    f1 = A1.flux()
    f2 = A2.flux() if A2 is not None else (0.0,) * A1.geom.complex_dim
    net = tuple(a - b for a, b in zip(f1, f2))
    if any(abs(a - b) > 1e-9 for a, b in zip(net, phi.flux)):
        raise BundleMismatch(
            f"section flux {phi.flux} != bundle net flux {net}"
        )


# ---------------------------------------------------------------------------
# curvature


def curvature(A: ConnectionState) -> GridForm:
    """Full curvature F = F_0 + d(a) + a wedge a as a GridForm.

    Components are grid + (r, r) arrays; the constant background enters only
    on the diagonal (x_k, y_k) pairs.
    """
    geom, r = A.geom, A.rank
    a = A.perturbation
    flux = A.flux()
    eye = np.eye(r)
    comps = {}
    for mu in range(geom.real_dim):
        for nu in range(mu + 1, geom.real_dim):
            f = geom.deriv(a[nu], mu) - geom.deriv(a[mu], nu)
            f = f + a[mu] @ a[nu] - a[nu] @ a[mu]
            if nu == mu + 1 and mu % 2 == 0:
                k = mu // 2
                L = geom.periods[k]
                f = f + (-2j * np.pi * flux[k] / (L * L)) * eye
            comps[(mu, nu)] = f
    return GridForm(comps, bidegree="11")


def integrability_residual(A: ConnectionState, F: GridForm | None = None) -> float:
    """L2 norm of the (0,2) curvature part; identically zero when m = 1."""
    geom = A.geom
    if geom.complex_dim == 1:
        return 0.0
    if F is None:
        F = curvature(A)
    f02 = (
        0.25 * F.component(0, 2)
        + 0.25j * F.component(0, 3)
        + 0.25j * F.component(1, 2)
        - 0.25 * F.component(1, 3)
    )
    s = geom.kahler_scale
    dens = (4.0 / s**2) * _frob2(f02)
    return float(np.sqrt(np.real(geom.quadrature(dens))))


def project_integrable(A: ConnectionState) -> ConnectionState:
    """Project an abelian m = 2 perturbation onto integrable connections.

    Removes the non-delbar-closed part of a^{0,1} mode by mode, then rebuilds
    the skew-hermitian real components.  Exact for rank 1; rank > 1 states are
    returned unchanged (their residual stays reported, never hidden).
    """
    geom = A.geom
    if geom.complex_dim == 1 or A.rank > 1:
        return A
    a = A.perturbation[..., 0, 0]
    az_bar = []
    for k in range(2):
        az_bar.append(0.5 * (a[2 * k] + 1j * a[2 * k + 1]))
    hat = [np.fft.fftn(c) for c in az_bar]
    zeta = []
    for k in range(2):
        kx = np.fft.fftfreq(geom.grid[k], d=geom.spacings[2 * k]) * 2 * np.pi
        ky = np.fft.fftfreq(geom.grid[k], d=geom.spacings[2 * k + 1]) * 2 * np.pi
        shape = [1] * geom.real_dim
        shape[2 * k] = len(kx)
        zx = kx.reshape(shape)
        shape = [1] * geom.real_dim
        shape[2 * k + 1] = len(ky)
        zy = ky.reshape(shape)
        zeta.append(zx + 1j * zy)
    z1 = np.broadcast_to(zeta[0], geom.shape)
    z2 = np.broadcast_to(zeta[1], geom.shape)
    norm2 = np.abs(z1) ** 2 + np.abs(z2) ** 2
    norm2_safe = np.where(norm2 == 0, 1.0, norm2)
    inner = hat[0] * np.conj(z1) + hat[1] * np.conj(z2)
    coeff = np.where(norm2 == 0, 0.0, inner / norm2_safe)
    new_hat = [coeff * z1, coeff * z2]
    # keep the harmonic (k = 0) part of each component untouched
    for h, nh in zip(hat, new_hat):
        idx = (0,) * geom.real_dim
        nh[idx] = h[idx]
    az_bar_new = [np.fft.ifftn(h) for h in new_hat]
    out = np.zeros_like(A.perturbation)
    for k in range(2):
        azb = az_bar_new[k]
        az = -np.conj(azb)
        out[2 * k, ..., 0, 0] = az + azb
        out[2 * k + 1, ..., 0, 0] = 1j * (az - azb)
    return ConnectionState(A.bundle, geom, out)


# ---------------------------------------------------------------------------
# covariant derivatives


def covariant_derivative(
    phi: HiggsSection, A1: ConnectionState, A2: ConnectionState | None = None
) -> np.ndarray:
    """Full covariant derivative D_mu phi, shape (2m,) + grid + (r1, r2).

    D phi = (twisted d)phi + A0_net phi + a1 phi - phi a2, where the net
    background potential matches the section's flux.
    """
    _check_section_fits(phi, A1, A2)
    geom = A1.geom
    v = phi.values
    out = np.empty((geom.real_dim,) + v.shape, dtype=complex)
    for mu in range(geom.real_dim):
        d = twisted_deriv(geom, v, mu, phi.flux)
        if mu % 2 == 1:
            k = mu // 2
            q = phi.flux[k]
            if q != 0.0:
                pot = background_potential_y(geom, q, k)
                d = d + pot[..., None, None] * v
        d = d + A1.perturbation[mu] @ v
        if A2 is not None:
            d = d - v @ A2.perturbation[mu]
        out[mu] = d
    return out


def dbar_A(A1: ConnectionState, phi: HiggsSection, A2: ConnectionState | None = None) -> np.ndarray:
    """(0,1) covariant derivative components D_{zbar_k} phi, shape (m,) + grid + (r1, r2).

    The squared pointwise norm of the (0,1)-form is (2/scale) * sum_k |..|^2.
    """
    D = covariant_derivative(phi, A1, A2)
    geom = A1.geom
    out = np.empty((geom.complex_dim,) + phi.values.shape, dtype=complex)
    for k in range(geom.complex_dim):
        out[k] = 0.5 * (D[2 * k] + 1j * D[2 * k + 1])
    return out


def dbar_norm2_density(dbar: np.ndarray, geom: TorusGeometry) -> np.ndarray:
    return (2.0 / geom.kahler_scale) * np.sum(_frob2(dbar), axis=0)


def oneform_norm2_density(D: np.ndarray, geom: TorusGeometry) -> np.ndarray:
    return (1.0 / geom.kahler_scale) * np.sum(_frob2(D), axis=0)


def curvature_norm2_density(F: GridForm, geom: TorusGeometry) -> np.ndarray:
    s2 = geom.kahler_scale**2
    total = 0.0
    for comp in F.comps.values():
        total = total + _frob2(np.asarray(comp))
    return np.asarray(total) / s2


def _frob2(X) -> np.ndarray:
    X = np.asarray(X)
    return np.sum(np.abs(X) ** 2, axis=(-2, -1))


# ---------------------------------------------------------------------------
# gauge action


def _check_unitary(g: np.ndarray, tol: float = 1e-10):
    gh = np.conj(np.swapaxes(g, -1, -2))
    eye = np.eye(g.shape[-1])
    defect = np.max(np.abs(g @ gh - eye))
    if defect > tol:
        raise NonUnitaryGauge(f"gauge field unitarity defect {defect:.3e} > {tol:.1e}")


def _transform_connection(A: ConnectionState, g: np.ndarray) -> ConnectionState:
    geom = A.geom
    gh = np.conj(np.swapaxes(g, -1, -2))
    a = A.perturbation
    out = np.empty_like(a)
    for mu in range(geom.real_dim):
        dg = geom.deriv(g, mu)
        out[mu] = g @ a[mu] @ gh - dg @ gh
    return ConnectionState(A.bundle, geom, out)


def gauge_apply(g1: np.ndarray, g2: np.ndarray | None, state: FieldState) -> FieldState:
    """Unitary gauge action: connections conjugate, phi -> g1 phi g2^{-1}.

    For a PairState only g1 acts: (A, phi) -> (g1(A), g1 phi).
    """
    _check_unitary(g1)
    if isinstance(state, PairState):
        A = _transform_connection(state.A, g1)
        phi = HiggsSection(state.geom, g1 @ state.phi.values, state.phi.flux)
        return PairState(A, phi)
    if g2 is None:
        raise ShapeMismatch("triple gauge action needs both g1 and g2")
    _check_unitary(g2)
    A1 = _transform_connection(state.A1, g1)
    A2 = _transform_connection(state.A2, g2)
    g2h = np.conj(np.swapaxes(g2, -1, -2))
    phi = HiggsSection(state.geom, g1 @ state.phi.values @ g2h, state.phi.flux)
    return TripleState(A1, A2, phi)


# ---------------------------------------------------------------------------
# reproducible random states


def smooth_field(
    rng: np.random.Generator,
    geom: TorusGeometry,
    decay: float,
    mat_shape=(),
    band_fraction: float = 1.0 / 8.0,
) -> np.ndarray:
    """Random smooth periodic complex field with power-law spectral decay.

    Fourier amplitudes scale as (1 + |k|)^(-decay) in integer-frequency units
    and are cut off beyond ``band_fraction`` of the resolution.  The cutoff
    keeps pointwise products of a few such fields exactly representable on the
    grid, which the 1e-10 algebra checks (gauge conjugation, commutators)
    rely on.
    """
    freqs = []
    for mu in range(geom.real_dim):
        n = geom.axis_points[mu]
        f = np.fft.fftfreq(n) * n
        shape = [1] * geom.real_dim
        shape[mu] = n
        freqs.append(f.reshape(shape))
    kmag = np.sqrt(sum(f**2 for f in freqs))
    kcut = max(1.0, band_fraction * min(geom.axis_points))
    envelope = (1.0 + kmag) ** (-decay) * (kmag <= kcut)
    shape = geom.shape + tuple(mat_shape)
    spec = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    extra = len(mat_shape)
    env = envelope.reshape(envelope.shape + (1,) * extra) if extra else envelope
    grid_axes = tuple(range(geom.real_dim))
    out = np.fft.ifftn(spec * env, axes=grid_axes)
    norm = np.max(np.abs(out))
    return out / norm if norm > 0 else out


def _skew(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X - np.conj(np.swapaxes(X, -1, -2)))


def random_state(
    seed: int,
    spectrum_decay: float,
    geom: TorusGeometry,
    bundles,
    kind: str = "pair",
    amplitude: float = 0.3,
) -> FieldState:
    """Reproducible smooth random state for property tests.

    Bundles with nonzero net section flux are not supported here (random
    sections would need a twisted carrier); property tests use degree-zero
    sections and exercise twists through solver-produced states instead.
    """
    if spectrum_decay <= 1:
        raise ValueError("spectrum_decay must exceed 1 for grid-resolved smoothness")
    rng = np.random.default_rng(seed)

    def rand_connection(bundle: BundleSpec) -> ConnectionState:
        r = bundle.rank
        a = np.empty((geom.real_dim,) + geom.shape + (r, r), dtype=complex)
        for mu in range(geom.real_dim):
            a[mu] = amplitude * _skew(smooth_field(rng, geom, spectrum_decay, (r, r)))
        A = ConnectionState(bundle, geom, a)
        if geom.complex_dim == 2 and r == 1:
            A = project_integrable(A)
        return A

    if kind == "pair":
        (b,) = tuple(bundles) if not isinstance(bundles, BundleSpec) else (bundles,)
        A = rand_connection(b)
        net = axis_flux(b, geom)
        if any(abs(q) > 1e-12 for q in net):
            raise TwistNotIntegral("random sections need zero net flux; use solver states")
        phi = HiggsSection(geom, smooth_field(rng, geom, spectrum_decay, (b.rank, 1)), net)
        return PairState(A, phi)
    if kind == "triple":
        b1, b2 = bundles
        A1 = rand_connection(b1)
        A2 = rand_connection(b2)
        net = tuple(a - c for a, c in zip(axis_flux(b1, geom), axis_flux(b2, geom)))
        if any(abs(q) > 1e-12 for q in net):
            raise TwistNotIntegral("random sections need zero net flux; use solver states")
        phi = HiggsSection(geom, smooth_field(rng, geom, spectrum_decay, (b1.rank, b2.rank)), net)
        return TripleState(A1, A2, phi)
    raise ValueError(f"unknown state kind {kind!r}")


def random_unitary(rng_or_seed, geom: TorusGeometry, rank: int, decay: float = 4.0, size: float = 0.5) -> np.ndarray:
    """Smooth pointwise-unitary gauge field exp(skew-hermitian random field).

    The generator field is band-limited hard (a few lowest modes) so that the
    exponential series stays spectrally resolved: its harmonics at the Nyquist
    frequency are suppressed like size^n / n! with n >= 16.
    """
    rng = (
        rng_or_seed
        if isinstance(rng_or_seed, np.random.Generator)
        else np.random.default_rng(rng_or_seed)
    )
    X = size * _skew(smooth_field(rng, geom, decay, (rank, rank), band_fraction=1.0 / 32.0))
    # exponentiate pointwise: X is skew-hermitian so the series stays unitary
    out = np.broadcast_to(np.eye(rank), X.shape).astype(complex).copy()
    term = out.copy()
    for n in range(1, 24):
        term = term @ X / n
        out = out + term
    return out
