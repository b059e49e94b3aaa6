"""Two-channel model of a moving two-level emitter in a shaped field mode.

A single excitation block reduces the emitter-field problem to two coupled
channels with the position-dependent potential

    V(x) = [[eps_+, G(x)], [G(x), eps_-]],      G(x) = sqrt(n) * g(x),

where g(x) is the mode shape, n the photon index of the block and the
diagonal shifts eps_+- depend on the chosen rotating frame.  Diagonalizing
V(x) pointwise with the rotation

    U(x) = [[cos(theta), sin(theta)], [-sin(theta), cos(theta)]]

gives the adiabatic surfaces Delta_+-(x) and the mixing angle
tan(2*theta) = 2 G / (eps_+ - eps_-).  Everything here is a pure function
of (params, x); scaled units with hbar = 1 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

_SQRT2PI = math.sqrt(2.0 * math.pi)

#: Denominator floor below which adiabaticity ratios are reported as singular.
DEGENERACY_FLOOR = 1e-24


class DegeneratePointError(ValueError):
    """The mixing angle is undefined: zero coupling and zero level splitting."""


# ---------------------------------------------------------------------------
# Mode shapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianMode:
    """Bell-shaped coupling g(x) = A / (sqrt(2 pi) a) * exp(-x^2 / 2 a^2)."""

    amplitude: float
    width: float

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("GaussianMode.width must be > 0")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        a = self.width
        return self.amplitude / (_SQRT2PI * a) * np.exp(-(x * x) / (2.0 * a * a))

    def slope(self, x):
        x = np.asarray(x, dtype=float)
        return -(x / self.width**2) * self.value(x)

    def curvature(self, x):
        x = np.asarray(x, dtype=float)
        a2 = self.width**2
        return ((x * x) / (a2 * a2) - 1.0 / a2) * self.value(x)

    def length_scale(self):
        return self.width


@dataclass(frozen=True)
class StandingWaveMode:
    """Periodic coupling g(x) = A sin(q x); nodes at x = k pi / q."""

    amplitude: float
    wavenumber: float

    def __post_init__(self):
        if self.wavenumber <= 0:
            raise ValueError("StandingWaveMode.wavenumber must be > 0")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.sin(self.wavenumber * x)

    def slope(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * self.wavenumber * np.cos(self.wavenumber * x)

    def curvature(self, x):
        x = np.asarray(x, dtype=float)
        q = self.wavenumber
        return -self.amplitude * q * q * np.sin(q * x)

    def length_scale(self):
        return 1.0 / self.wavenumber


@dataclass(frozen=True)
class LinearMode:
    """Locally linear coupling g(x) = C x (model for the region around a node)."""

    gradient: float

    def value(self, x):
        return self.gradient * np.asarray(x, dtype=float)

    def slope(self, x):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, self.gradient, dtype=float)

    def curvature(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x, dtype=float)

    def length_scale(self):
        return None


@dataclass(frozen=True, eq=False)
class TabulatedMode:
    """Coupling sampled on a uniform periodic grid.

    Derivatives come from spectral differentiation of the samples; values at
    arbitrary x are linearly interpolated with periodic wrap-around.  Second
    class compared with the analytic shapes: no closed forms, and features
    must be well resolved by the sample spacing.
    """

    positions: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        val = np.asarray(self.samples, dtype=float)
        if pos.ndim != 1 or pos.size < 4:
            raise ValueError("TabulatedMode needs at least 4 sample positions")
        if val.shape != pos.shape:
            raise ValueError("TabulatedMode positions and samples must match in length")
        steps = np.diff(pos)
        if steps.min() <= 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("TabulatedMode positions must be uniformly increasing")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "samples", val)
        dx = float(steps[0])
        period = dx * pos.size
        k = 2.0 * np.pi * np.fft.fftfreq(pos.size, d=dx)
        spectrum = np.fft.fft(val)
        object.__setattr__(self, "_period", period)
        object.__setattr__(self, "_slope_samples", np.fft.ifft(1j * k * spectrum).real)
        object.__setattr__(self, "_curvature_samples", np.fft.ifft(-(k * k) * spectrum).real)

    def _interp(self, x, table):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.positions, table, period=self._period)

    def value(self, x):
        return self._interp(x, self.samples)

    def slope(self, x):
        return self._interp(x, self._slope_samples)

    def curvature(self, x):
        return self._interp(x, self._curvature_samples)

    def length_scale(self):
        return None


ModeShape = Union[GaussianMode, StandingWaveMode, LinearMode, TabulatedMode]


# ---------------------------------------------------------------------------
# Physical configuration
# ---------------------------------------------------------------------------

class FrameCase(Enum):
    """Which multiple of the excitation number was removed as a rotating frame.

    CASE1 rotates at the mode frequency, CASE2 at the emitter frequency; the
    level splitting eps_+ - eps_- equals the detuning in both cases, only the
    common offset differs.
    """

    CASE1 = "case1"
    CASE2 = "case2"


@dataclass(frozen=True)
class ModelParams:
    """Physical configuration of one excitation block.

    detuning is the emitter-mode frequency difference; photon_index labels
    the excitation block (n >= 1) and enters only through the effective
    coupling G = sqrt(n) g and the CASE2 offsets.
    """

    mode: ModeShape
    detuning: float
    photon_index: int = 1
    mass: float = 1.0
    frame_case: FrameCase = FrameCase.CASE1

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("ModelParams.mass must be > 0")
        if int(self.photon_index) != self.photon_index or self.photon_index < 1:
            raise ValueError("ModelParams.photon_index must be an integer >= 1")

    @property
    def level_shifts(self) -> tuple[float, float]:
        """Diagonal entries (eps_+, eps_-) of the bare potential."""
        d = self.detuning
        n = self.photon_index
        if self.frame_case is FrameCase.CASE1:
            return (0.5 * d, -0.5 * d)
        return (-d * (n - 1), -d * n)

    @property
    def level_splitting(self) -> float:
        """eps_+ - eps_- (equals the detuning in both frame cases)."""
        up, dn = self.level_shifts
        return up - dn

    @property
    def mean_shift(self) -> float:
        """(eps_+ + eps_-) / 2, the frame-dependent common offset."""
        up, dn = self.level_shifts
        return 0.5 * (up + dn)

    def coupling(self, x):
        """Effective coupling G(x) = sqrt(n) g(x)."""
        return math.sqrt(self.photon_index) * self.mode.value(x)

    def coupling_slope(self, x):
        return math.sqrt(self.photon_index) * self.mode.slope(x)

    def coupling_curvature(self, x):
        return math.sqrt(self.photon_index) * self.mode.curvature(x)


# ---------------------------------------------------------------------------
# Bare potential and adiabatic diagonalization
# ---------------------------------------------------------------------------

def bare_potential(params: ModelParams, x) -> np.ndarray:
    """Potential matrix [[eps_+, G], [G, eps_-]] at x.

    Scalar x gives a (2, 2) array; an array of shape s gives (s + (2, 2)).
    """
    up, dn = params.level_shifts
    g = params.coupling(x)
    out = np.zeros(np.shape(g) + (2, 2))
    out[..., 0, 0] = up
    out[..., 1, 1] = dn
    out[..., 0, 1] = g
    out[..., 1, 0] = g
    return out


def _theta_arrays(params: ModelParams, x):
    """Mixing angle and degeneracy mask without raising."""
    g2 = 2.0 * params.coupling(x)
    split = params.level_splitting
    theta = 0.5 * np.arctan2(g2, split)
    mask = (g2 == 0.0) & (split == 0.0)
    return theta, np.broadcast_to(mask, np.shape(theta))


def mixing_angle(params: ModelParams, x):
    """Continuous branch theta = atan2(2 G, eps_+ - eps_-) / 2 in (-pi/2, pi/2].

    Raises DegeneratePointError where both arguments vanish (the angle is
    undefined there); with this branch the rotation puts the upper surface in
    the first matrix slot everywhere.
    """
    theta, mask = _theta_arrays(params, x)
    if np.any(mask):
        raise DegeneratePointError(
            "mixing angle undefined: coupling and level splitting both vanish")
    return theta


def adiabatic_eigenvalues(params: ModelParams, x):
    """Adiabatic surfaces (Delta_+, Delta_-); Delta_+ >= Delta_- everywhere."""
    g = params.coupling(x)
    half = 0.5 * params.level_splitting
    root = np.hypot(half, g)
    mean = params.mean_shift
    return mean + root, mean - root


def adiabatic_gradient(params: ModelParams, x):
    """Spatial derivatives (dDelta_+/dx, dDelta_-/dx) of the surfaces.

    At exactly degenerate points the one-sided limits differ; the gradient is
    reported as 0 there.
    """
    g = params.coupling(x)
    dg = params.coupling_slope(x)
    half = 0.5 * params.level_splitting
    root = np.hypot(half, g)
    grad = np.divide(g * dg, root, out=np.zeros_like(np.asarray(root, dtype=float)),
                     where=root > 0.0)
    return grad, -grad


def large_detuning_potential(params: ModelParams, x):
    """Asymptotic level shift n g(x)^2 / detuning of the upper surface.

    Leading correction to Delta_+ - mean_shift - splitting/2 when the
    detuning dominates the coupling; rejects zero detuning.
    """
    if params.level_splitting == 0.0:
        raise ValueError("large_detuning_potential requires a nonzero detuning")
    g = params.mode.value(x)
    return g * g * params.photon_index / params.level_splitting


def mixing_angle_slope(params: ModelParams, x):
    """d(theta)/dx = split * sqrt(n) * g' / (split^2 + 4 n g^2)."""
    return _angle_slope_raw(params, x, raise_on_degenerate=True)


def _angle_slope_raw(params: ModelParams, x, raise_on_degenerate: bool):
    split = params.level_splitting
    g = params.mode.value(x)
    dg = params.mode.slope(x)
    n = params.photon_index
    den = split * split + 4.0 * n * g * g
    degenerate = den == 0.0
    if raise_on_degenerate and np.any(degenerate):
        raise DegeneratePointError(
            "angle slope undefined: coupling and level splitting both vanish")
    num = split * math.sqrt(n) * dg
    return np.divide(num, den, out=np.zeros_like(np.asarray(num, dtype=float)),
                     where=~degenerate)


def mixing_angle_curvature(params: ModelParams, x):
    """Exact x-derivative of mixing_angle_slope.

    split sqrt(n) [g'' (split^2 + 4 n g^2) - 8 n g g'^2] / (split^2 + 4 n g^2)^2
    """
    return _angle_curvature_raw(params, x, raise_on_degenerate=True)


def _angle_curvature_raw(params: ModelParams, x, raise_on_degenerate: bool):
    split = params.level_splitting
    g = params.mode.value(x)
    dg = params.mode.slope(x)
    d2g = params.mode.curvature(x)
    n = params.photon_index
    den = split * split + 4.0 * n * g * g
    degenerate = den == 0.0
    if raise_on_degenerate and np.any(degenerate):
        raise DegeneratePointError(
            "angle curvature undefined: coupling and level splitting both vanish")
    num = split * math.sqrt(n) * (d2g * den - 8.0 * n * g * dg * dg)
    return np.divide(num, den * den, out=np.zeros_like(np.asarray(num, dtype=float)),
                     where=~degenerate)


# ---------------------------------------------------------------------------
# Adiabatic frame sampled on a grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AdiabaticFrame:
    """Mixing angle, its derivatives and the adiabatic surfaces on a grid.

    degenerate marks grid points where the angle is undefined (possible only
    at exactly zero detuning on nodes of the coupling); the angle and its
    derivatives there are the analytic zero-detuning limits.
    """

    grid: "object"
    theta: np.ndarray
    theta_slope: np.ndarray
    theta_curvature: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    coupling: np.ndarray
    mean_shift: float
    degenerate: np.ndarray

    @property
    def cos_theta(self):
        return np.cos(self.theta)

    @property
    def sin_theta(self):
        return np.sin(self.theta)

    @property
    def splitting(self):
        return self.upper - self.lower


def adiabatic_frame(params: ModelParams, grid) -> AdiabaticFrame:
    """Evaluate the adiabatic diagonalization on every grid point."""
    x = grid.x
    theta, mask = _theta_arrays(params, x)
    upper, lower = adiabatic_eigenvalues(params, x)
    return AdiabaticFrame(
        grid=grid,
        theta=theta,
        theta_slope=_angle_slope_raw(params, x, raise_on_degenerate=False),
        theta_curvature=_angle_curvature_raw(params, x, raise_on_degenerate=False),
        upper=np.asarray(upper, dtype=float),
        lower=np.asarray(lower, dtype=float),
        coupling=np.asarray(params.coupling(x), dtype=float),
        mean_shift=params.mean_shift,
        degenerate=np.asarray(mask, dtype=bool),
    )
