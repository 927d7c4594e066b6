"""Flat complex tori with periodic grids and spectral calculus.

A torus C^m / Lambda with a rectangular lattice is discretized by a uniform
grid.  Complex coordinate z_k = x_k + i y_k lives on a square of side
``periods[k]`` in both real directions, sampled at ``grid[k]`` points per
direction.  Real axes are ordered (x_1, y_1, x_2, y_2, ...), so grid arrays
have shape (N_1, N_1, N_2, N_2, ...).

The Kahler form is fixed as omega = (i/2) * scale * sum_k dz^k wedge dzbar^k,
i.e. scale * sum_k dx_k wedge dy_k, and the contraction Lambda is normalized
by Lambda(omega) = m.  The induced flat metric is ds^2 = scale * sum (dx^2 +
dy^2); all pointwise norms of forms are taken against the orthonormal coframe
sqrt(scale) dx_mu.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import BidegreeMismatch, NonPositivePeriod, RadiusTooLarge, UnsupportedDimension


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TorusGeometry:
    """Immutable description of a discretized flat torus."""

    complex_dim: int
    periods: tuple[float, ...]
    grid: tuple[int, ...]
    kahler_scale: float = 1.0

    # -- derived, cached ---------------------------------------------------

    @cached_property
    def real_dim(self) -> int:
        return 2 * self.complex_dim

    @cached_property
    def shape(self) -> tuple[int, ...]:
        out = []
        for n in self.grid:
            out.extend([n, n])
        return tuple(out)

    @cached_property
    def axis_period(self) -> tuple[float, ...]:
        out = []
        for L in self.periods:
            out.extend([L, L])
        return tuple(out)

    @cached_property
    def axis_points(self) -> tuple[int, ...]:
        out = []
        for n in self.grid:
            out.extend([n, n])
        return tuple(out)

    @cached_property
    def spacings(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.axis_period, self.axis_points))

    @cached_property
    def volume(self) -> float:
        s = self.kahler_scale
        v = s**self.complex_dim
        for L in self.periods:
            v *= L * L
        return v

    @cached_property
    def cell_weight(self) -> float:
        w = self.kahler_scale**self.complex_dim
        for h in self.spacings:
            w *= h
        return w

    def coordinate(self, axis: int) -> np.ndarray:
        """1D coordinate values along a real axis, broadcastable to grid shape."""
        n = self.axis_points[axis]
        x = np.arange(n) * self.spacings[axis]
        shape = [1] * self.real_dim
        shape[axis] = n
        return x.reshape(shape)

    def wavenumber(self, axis: int) -> np.ndarray:
        """Angular wavenumbers along a real axis, broadcastable to grid shape."""
        n = self.axis_points[axis]
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=self.spacings[axis])
        shape = [1] * self.real_dim
        shape[axis] = n
        return k.reshape(shape)

    # -- calculus ----------------------------------------------------------

    def deriv(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Spectral d/dx_axis of a periodic grid field.

        Trailing (matrix) axes are carried along untouched.
        """
        k = self.wavenumber(axis)
        extra = values.ndim - self.real_dim
        if extra:
            k = k.reshape(k.shape + (1,) * extra)
        vhat = np.fft.fft(values, axis=axis)
        return np.fft.ifft(1j * k * vhat, axis=axis)

    def quadrature(self, density: np.ndarray):
        """Integral over the torus against the volume form dv.

        numpy's pairwise summation keeps the reduction order deterministic.
        """
        return self.cell_weight * np.sum(density)

    # -- local geometry ----------------------------------------------------

    def torus_distance2(self, center) -> np.ndarray:
        """Squared geodesic distance to ``center`` (metric units)."""
        d2 = np.zeros(self.shape)
        for mu in range(self.real_dim):
            L = self.axis_period[mu]
            delta = np.abs(self.coordinate(mu) - center[mu]) % L
            delta = np.minimum(delta, L - delta)
            d2 = d2 + delta**2
        return self.kahler_scale * d2

    @cached_property
    def injectivity_radius(self) -> float:
        return float(np.sqrt(self.kahler_scale) * min(self.periods) / 2.0)


def build_torus(periods, grid, kahler_scale: float = 1.0) -> TorusGeometry:
    """Construct a TorusGeometry, validating resolution and period data."""
    periods = tuple(float(p) for p in np.atleast_1d(periods))
    grid = tuple(int(n) for n in np.atleast_1d(grid))
    m = len(periods)
    if m not in (1, 2):
        raise UnsupportedDimension(f"complex dimension must be 1 or 2, got {m}")
    if len(grid) != m:
        raise UnsupportedDimension(
            f"grid must give one resolution per complex axis ({m}), got {len(grid)}"
        )
    if any(p <= 0 for p in periods):
        raise NonPositivePeriod(f"periods must be positive, got {periods}")
    if kahler_scale <= 0:
        raise NonPositivePeriod(f"kahler_scale must be positive, got {kahler_scale}")
    for n in grid:
        if n < 8 or not _is_power_of_two(n):
            raise ValueError(f"grid resolutions must be powers of two >= 8, got {n}")
    return TorusGeometry(m, periods, grid, float(kahler_scale))


# ---------------------------------------------------------------------------
# grid-valued forms


@dataclass
class GridScalar:
    """A complex scalar field sampled on the fundamental domain."""

    values: np.ndarray


@dataclass
class GridForm:
    """A 2-form stored by its antisymmetric real components F_{mu nu}, mu < nu.

    ``comps[(mu, nu)]`` holds the coefficient on dx^mu wedge dx^nu; entries may
    be scalars (constant forms) or grid arrays, possibly with trailing matrix
    axes.  ``bidegree`` records the component content: "11" for forms with
    complete (1,1) data (the only kind Lambda accepts).
    """

    comps: dict
    bidegree: str = "11"

    def component(self, mu: int, nu: int):
        if (mu, nu) in self.comps:
            return self.comps[(mu, nu)]
        if (nu, mu) in self.comps:
            c = self.comps[(nu, mu)]
            return -c if np.isscalar(c) else -np.asarray(c)
        return 0.0


def kahler_form(geom: TorusGeometry) -> GridForm:
    """The fixed Kahler form as a GridForm (constant components)."""
    s = geom.kahler_scale
    comps = {(2 * k, 2 * k + 1): s + 0j for k in range(geom.complex_dim)}
    return GridForm(comps, bidegree="11")


def contract_lambda(form: GridForm, geom: TorusGeometry):
    """Contraction with the Kahler form: Lambda F = (1/scale) sum_k F_{x_k y_k}.

    Normalized so that contract_lambda(kahler_form) == complex_dim, and linear
    in the form components.
    """
    if not isinstance(form, GridForm):
        raise BidegreeMismatch(f"contract_lambda needs a GridForm, got {type(form).__name__}")
    total = 0.0
    for k in range(geom.complex_dim):
        total = total + np.asarray(form.component(2 * k, 2 * k + 1))
    return total / geom.kahler_scale


def ball_mask(geom: TorusGeometry, center, radius: float) -> np.ndarray:
    """Sharp 0/1 indicator of the metric ball B_radius(center).

    The mask quadrature converges to the Euclidean ball volume at rate O(h);
    callers doing monotonicity checks must carry that slack themselves.
    """
    if radius >= geom.injectivity_radius:
        raise RadiusTooLarge(
            f"radius {radius} >= injectivity radius {geom.injectivity_radius}"
        )
    if radius <= 0:
        return np.zeros(geom.shape)
    d2 = geom.torus_distance2(center)
    return (d2 <= radius * radius).astype(float)
