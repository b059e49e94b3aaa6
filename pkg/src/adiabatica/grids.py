"""Uniform periodic grid, two-component wave functions and observables.

Components live on a periodic grid of N = 2^m points; momentum-space
quantities use the standard discrete Fourier ordering.  All norms and
expectation values are plain Riemann sums, which are spectrally accurate for
periodic decaying states.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .model import AdiabaticFrame

BARE = "bare"
ADIABATIC = "adiabatic"

_NORM_FLOOR = 1e-150


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [x_min, x_max) with a power-of-two point count."""

    npoints: int
    x_min: float
    x_max: float

    def __post_init__(self):
        n = self.npoints
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError("Grid.npoints must be a power of two >= 2")
        if not self.x_max > self.x_min:
            raise ValueError("Grid requires x_max > x_min")
        dx = (self.x_max - self.x_min) / n
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dk", 2.0 * np.pi / (n * dx))
        object.__setattr__(self, "x", self.x_min + dx * np.arange(n))
        object.__setattr__(self, "k", 2.0 * np.pi * sfft.fftfreq(n, d=dx))

    @property
    def k_max(self) -> float:
        """Largest representable momentum magnitude pi/dx."""
        return np.pi / self.dx

    def supports_momentum(self, p_needed: float) -> bool:
        return self.k_max > p_needed


@dataclass(eq=False)
class SpinorField:
    """Two complex components on a grid, tagged with the basis they refer to."""

    grid: Grid
    components: np.ndarray
    frame: str

    def __post_init__(self):
        arr = np.asarray(self.components, dtype=np.complex128)
        if arr.shape != (2, self.grid.npoints):
            raise ValueError("SpinorField.components must have shape (2, npoints)")
        if self.frame not in (BARE, ADIABATIC):
            raise ValueError(f"unknown frame tag {self.frame!r}")
        self.components = arr

    @property
    def upper(self):
        return self.components[0]

    @property
    def lower(self):
        return self.components[1]

    def copy(self) -> "SpinorField":
        return SpinorField(self.grid, self.components.copy(), self.frame)

    def norm_sq(self) -> float:
        """Total integral of |psi_upper|^2 + |psi_lower|^2."""
        return float(np.sum(np.abs(self.components) ** 2)) * self.grid.dx

    def norm(self) -> float:
        return np.sqrt(self.norm_sq())

    def component_norms_sq(self) -> np.ndarray:
        """Per-component populations, shape (2,)."""
        return np.sum(np.abs(self.components) ** 2, axis=1) * self.grid.dx


def gaussian_bare_state(grid: Grid, x0: float, p0: float, width: float,
                        edge_margin: float = 5.0) -> SpinorField:
    """Normalized Gaussian packet in the upper bare component.

    upper = (pi width^2)^(-1/4) exp(-(x - x0)^2 / 2 width^2) exp(i p0 x),
    lower = 0.  The packet must sit at least edge_margin * width from both
    domain edges, and the grid must resolve momenta up to p0 + 6 / width.
    """
    if width <= 0:
        raise ValueError("gaussian packet width must be > 0")
    if x0 - edge_margin * width < grid.x_min or x0 + edge_margin * width > grid.x_max:
        raise ValueError(
            f"packet at x0={x0} with width {width} sits closer than "
            f"{edge_margin} widths to a domain edge")
    p_needed = abs(p0) + 6.0 / width
    if not grid.supports_momentum(p_needed):
        raise ValueError(
            f"grid momentum cutoff {grid.k_max:.3g} does not cover p0 + 6/width "
            f"= {p_needed:.3g}; refine the grid")
    x = grid.x
    envelope = (np.pi * width**2) ** (-0.25) * np.exp(-((x - x0) ** 2) / (2.0 * width**2))
    upper = envelope * np.exp(1j * p0 * x)
    comps = np.zeros((2, grid.npoints), dtype=np.complex128)
    comps[0] = upper
    return SpinorField(grid, comps, BARE)


# ---------------------------------------------------------------------------
# Frame rotations
# ---------------------------------------------------------------------------

def _check_grids(field: SpinorField, frame: AdiabaticFrame):
    if field.grid != frame.grid:
        raise ValueError("field and adiabatic frame live on different grids")


def to_adiabatic(field: SpinorField, frame: AdiabaticFrame) -> SpinorField:
    """Rotate a bare-basis field into the adiabatic basis, pointwise."""
    if field.frame != BARE:
        raise ValueError("to_adiabatic expects a bare-frame field")
    _check_grids(field, frame)
    c, s = frame.cos_theta, frame.sin_theta
    up = c * field.upper + s * field.lower
    dn = -s * field.upper + c * field.lower
    return SpinorField(field.grid, np.stack([up, dn]), ADIABATIC)


def to_bare(field: SpinorField, frame: AdiabaticFrame) -> SpinorField:
    """Inverse rotation of to_adiabatic."""
    if field.frame != ADIABATIC:
        raise ValueError("to_bare expects an adiabatic-frame field")
    _check_grids(field, frame)
    c, s = frame.cos_theta, frame.sin_theta
    up = c * field.upper - s * field.lower
    dn = s * field.upper + c * field.lower
    return SpinorField(field.grid, np.stack([up, dn]), BARE)


# ---------------------------------------------------------------------------
# Expectation values (per component, each with its own normalized density)
# ---------------------------------------------------------------------------

def _rows(field: SpinorField, component: int | None) -> np.ndarray:
    if component is None:
        return field.components
    if component not in (0, 1):
        raise ValueError("component must be 0 (upper), 1 (lower) or None (both)")
    return field.components[component:component + 1]


def _norms_checked(rows: np.ndarray, dx: float) -> np.ndarray:
    norms = np.sum(np.abs(rows) ** 2, axis=1) * dx
    if np.any(norms <= _NORM_FLOOR):
        raise ValueError("expectation over a zero-population component")
    return norms


def _squeeze(values: np.ndarray, component: int | None):
    return values if component is None else values[0]


def expect_grid_values(field: SpinorField, values: np.ndarray,
                       component: int | None = None):
    """Average of a position-diagonal observable per component.

    Each component uses its own normalized density; shape (2,) for both
    components, a scalar when one is selected.  An exactly empty component
    is an error.
    """
    rows = _rows(field, component)
    norms = _norms_checked(rows, field.grid.dx)
    dens = np.abs(rows) ** 2
    out = (dens @ np.asarray(values, dtype=float)) * field.grid.dx / norms
    return _squeeze(out, component)


def expect_position(field: SpinorField, component: int | None = None):
    return expect_grid_values(field, field.grid.x, component)


def expect_momentum(field: SpinorField, component: int | None = None):
    rows = _rows(field, component)
    norms = _norms_checked(rows, field.grid.dx)
    spec = np.abs(sfft.fft(rows, axis=1)) ** 2
    # Parseval: sum |psi~|^2 / N = sum |psi|^2
    weights = spec * (field.grid.dx / field.grid.npoints)
    return _squeeze((weights @ field.grid.k) / norms, component)


def expect_momentum_sq(field: SpinorField, component: int | None = None):
    rows = _rows(field, component)
    norms = _norms_checked(rows, field.grid.dx)
    spec = np.abs(sfft.fft(rows, axis=1)) ** 2
    weights = spec * (field.grid.dx / field.grid.npoints)
    return _squeeze((weights @ field.grid.k**2) / norms, component)


def expect_slope_momentum(field: SpinorField, slope_values: np.ndarray,
                          component: int | None = None):
    """<f(x) p> per component with the operator product as written (f then p).

    Not symmetrized, so the result is complex in general; callers take the
    modulus where a real rate is needed.
    """
    rows = _rows(field, component)
    norms = _norms_checked(rows, field.grid.dx)
    p_psi = sfft.ifft(field.grid.k * sfft.fft(rows, axis=1), axis=1)
    integrand = np.conj(rows) * np.asarray(slope_values, dtype=float) * p_psi
    return _squeeze(np.sum(integrand, axis=1) * field.grid.dx / norms, component)


def expectation(field: SpinorField, observable: str,
                frame: AdiabaticFrame | None = None) -> np.ndarray:
    """Named-observable dispatcher; grid observables require the frame."""
    if observable == "x":
        return expect_position(field)
    if observable == "p":
        return expect_momentum(field)
    if observable == "p2":
        return expect_momentum_sq(field)
    if observable in ("coupling", "upper_potential", "lower_potential",
                      "angle_curvature", "slope_momentum"):
        if frame is None:
            raise ValueError(f"observable {observable!r} needs an AdiabaticFrame")
        if observable == "slope_momentum":
            return expect_slope_momentum(field, frame.theta_slope)
        table = {
            "coupling": frame.coupling,
            "upper_potential": frame.upper,
            "lower_potential": frame.lower,
            "angle_curvature": frame.theta_curvature,
        }[observable]
        return expect_grid_values(field, table)
    raise ValueError(f"unknown observable {observable!r}")


# ---------------------------------------------------------------------------
# Whole-state summaries (both components combined)
# ---------------------------------------------------------------------------

def mean_position(field: SpinorField) -> float:
    """<x> over the total density; invariant under pointwise frame rotations."""
    dens = np.sum(np.abs(field.components) ** 2, axis=0)
    total = np.sum(dens) * field.grid.dx
    if total <= _NORM_FLOOR:
        raise ValueError("mean_position of an empty field")
    return float(np.sum(dens * field.grid.x) * field.grid.dx / total)


def mean_momentum(field: SpinorField) -> float:
    spec = np.sum(np.abs(sfft.fft(field.components, axis=1)) ** 2, axis=0)
    total = np.sum(spec)
    if total <= _NORM_FLOOR:
        raise ValueError("mean_momentum of an empty field")
    return float(np.sum(spec * field.grid.k) / total)


def packet_width(field: SpinorField) -> float:
    """Width parameter sqrt(2 var(x)) of the total density.

    Matches the Gaussian convention where the initial value equals the width
    argument of gaussian_bare_state.
    """
    dens = np.sum(np.abs(field.components) ** 2, axis=0)
    total = np.sum(dens) * field.grid.dx
    if total <= _NORM_FLOOR:
        raise ValueError("packet_width of an empty field")
    x = field.grid.x
    mean = np.sum(dens * x) * field.grid.dx / total
    var = np.sum(dens * (x - mean) ** 2) * field.grid.dx / total
    return float(np.sqrt(2.0 * var))


def write_snapshot_csv(field: SpinorField, path) -> None:
    """Dump the field as rows of x, Re/Im of both components."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "re_upper", "im_upper", "re_lower", "im_lower"])
        for j in range(field.grid.npoints):
            up = field.components[0, j]
            dn = field.components[1, j]
            writer.writerow([repr(float(v)) for v in
                             (field.grid.x[j], up.real, up.imag, dn.real, dn.imag)])
