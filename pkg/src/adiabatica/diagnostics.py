"""Adiabaticity diagnostics: pointwise criterion, packet-averaged parameter,
overlap fidelity and the special-case studies built on them.

The pointwise parameter treats the packet as a classical point with momentum
p0; the packet-averaged parameter evaluates the same ratio with expectation
values over the two independently propagated adiabatic channel packets,
weighted by their initial populations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .grids import (ADIABATIC, BARE, SpinorField, expect_grid_values,
                    expect_slope_momentum, to_adiabatic)
from .model import (DEGENERACY_FLOOR, AdiabaticFrame, LinearMode, ModelParams,
                    StandingWaveMode, _angle_curvature_raw, _angle_slope_raw)

#: Channels with smaller initial population are skipped in the averaged parameter.
WEIGHT_FLOOR = 1e-12
#: Averaged splittings below this are reported as a collapsed denominator.
SPLITTING_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# Pointwise (semiclassical) adiabaticity parameter
# ---------------------------------------------------------------------------

def local_adiabaticity(params: ModelParams, x, p0: float,
                       include_curvature: bool = False):
    """Pointwise adiabaticity parameter for a packet moving at momentum p0.

    |(p0/m) split sqrt(n) g' / (split^2 + 4 n g^2)^(3/2)|, optionally with the
    angle-curvature term added inside the modulus.  Evaluations where
    split^2 + 4 n g^2 < 1e-24 return inf (the singular points of the
    zero-detuning limit) instead of overflowing.
    """
    x = np.asarray(x, dtype=float)
    split = params.level_splitting
    n = params.photon_index
    g = np.asarray(params.mode.value(x), dtype=float)
    den_sq = split * split + 4.0 * n * g * g
    singular = den_sq < DEGENERACY_FLOOR
    safe = np.where(singular, 1.0, den_sq)
    rate = p0 / params.mass
    if include_curvature:
        slope = _angle_slope_raw(params, x, raise_on_degenerate=False)
        curv = _angle_curvature_raw(params, x, raise_on_degenerate=False)
        value = np.abs(2.0 * rate * slope + curv) / (2.0 * np.sqrt(safe))
    else:
        dg = np.asarray(params.mode.slope(x), dtype=float)
        value = np.abs(rate * split * math.sqrt(n) * dg) / safe**1.5
    out = np.where(singular, np.inf, value)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Packet-averaged adiabaticity parameter
# ---------------------------------------------------------------------------

@dataclass
class AdiabaticityParts:
    """Per-channel ingredients of the averaged adiabaticity parameter.

    Channels are ordered (upper, lower).  slope_averages holds the complex
    <2 (d theta/dx) p> averages, curvature_averages the real <d2 theta/dx2>,
    splittings the averaged surface separations.  Inactive channels (initial
    weight below WEIGHT_FLOOR) carry nan entries.
    """

    slope_averages: np.ndarray
    curvature_averages: np.ndarray
    splittings: np.ndarray
    weights: np.ndarray
    mass: float
    active: np.ndarray

    def channel_terms(self, include_curvature: bool = True) -> np.ndarray:
        """|<2 theta' p> (+ <theta''>)| / |<Delta_+> - <Delta_->| / 2m per channel."""
        terms = np.full(2, np.nan)
        for ch in range(2):
            if not self.active[ch]:
                continue
            den = abs(self.splittings[ch])
            if den < SPLITTING_FLOOR:
                raise ValueError(
                    "averaged surface splitting collapsed below "
                    f"{SPLITTING_FLOOR}; adiabaticity ratio undefined")
            num = self.slope_averages[ch]
            if include_curvature:
                num = num + self.curvature_averages[ch]
            terms[ch] = abs(num) / den / (2.0 * self.mass)
        return terms

    def total(self, include_curvature: bool = True) -> float:
        terms = self.channel_terms(include_curvature)
        value = 0.0
        for ch in range(2):
            if self.active[ch]:
                value += self.weights[ch] * terms[ch]
        return value


def adiabaticity_parts(reference: SpinorField, frame: AdiabaticFrame,
                       params: ModelParams, weights) -> AdiabaticityParts:
    """Channel averages entering the packet-averaged adiabaticity parameter."""
    if reference.frame != ADIABATIC:
        raise ValueError("adiabaticity averages need the adiabatic-frame channels")
    weights = np.asarray(weights, dtype=float)
    active = weights >= WEIGHT_FLOOR
    slope_avg = np.full(2, np.nan, dtype=np.complex128)
    curv_avg = np.full(2, np.nan)
    split_avg = np.full(2, np.nan)
    for ch in range(2):
        if active[ch]:
            slope_avg[ch] = 2.0 * expect_slope_momentum(reference,
                                                        frame.theta_slope, ch)
            curv_avg[ch] = expect_grid_values(reference, frame.theta_curvature, ch)
            split_avg[ch] = expect_grid_values(reference, frame.splitting, ch)
    return AdiabaticityParts(slope_avg, curv_avg, split_avg, weights,
                             params.mass, active)


def packet_adiabaticity(reference: SpinorField, frame: AdiabaticFrame,
                        params: ModelParams, weights,
                        include_curvature: bool = True) -> float:
    """Weighted, packet-averaged adiabaticity parameter at one instant."""
    return adiabaticity_parts(reference, frame, params, weights).total(include_curvature)


def initial_channel_weights(reference: SpinorField) -> np.ndarray:
    """Normalized initial channel populations (upper, lower)."""
    pops = reference.component_norms_sq()
    total = pops.sum()
    if total <= 0:
        raise ValueError("cannot take channel weights of an empty field")
    return pops / total


# ---------------------------------------------------------------------------
# Overlap fidelity
# ---------------------------------------------------------------------------

def fidelity(exact: SpinorField, reference: SpinorField,
             frame: AdiabaticFrame) -> complex:
    """Complex overlap of the adiabatic reference with the exact state.

    The exact state is rotated into the adiabatic basis first when it carries
    the bare tag; the spinor inner product sums both components.
    """
    if reference.frame != ADIABATIC:
        raise ValueError("fidelity reference must be an adiabatic-frame field")
    if exact.grid != reference.grid:
        raise ValueError("fidelity operands live on different grids")
    probe = to_adiabatic(exact, frame) if exact.frame == BARE else exact
    overlap = np.sum(np.conj(reference.components) * probe.components)
    return complex(overlap * exact.grid.dx)


# ---------------------------------------------------------------------------
# Trace containers
# ---------------------------------------------------------------------------

@dataclass
class FidelityTrace:
    """Complex overlap samples of one run, with an optional <x> abscissa."""

    times: np.ndarray
    overlaps: np.ndarray
    abscissa: np.ndarray | None = None

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.overlaps)


@dataclass
class AdiabaticityTrace:
    """Averaged-parameter samples with the per-channel breakdown."""

    times: np.ndarray
    values: np.ndarray
    upper_terms: np.ndarray
    lower_terms: np.ndarray
    weight_upper: float
    weight_lower: float
    includes_curvature: bool
    abscissa: np.ndarray | None = None


def fidelity_trace(record, abscissa: str = "measured") -> FidelityTrace:
    """Fidelity trace of a run record; abscissa 'measured' or 'kinematic'."""
    xs = _pick_abscissa(record, abscissa)
    return FidelityTrace(record.times.copy(), record.fidelity.copy(), xs)


def adiabaticity_trace(record, include_curvature: bool = True,
                       abscissa: str = "measured") -> AdiabaticityTrace:
    xs = _pick_abscissa(record, abscissa)
    values = record.adiabaticity if include_curvature else record.adiabaticity_plain
    terms = (record.adiabaticity_terms if include_curvature
             else record.adiabaticity_terms_plain)
    return AdiabaticityTrace(
        times=record.times.copy(), values=values.copy(),
        upper_terms=terms[0].copy(), lower_terms=terms[1].copy(),
        weight_upper=float(record.weights[0]), weight_lower=float(record.weights[1]),
        includes_curvature=include_curvature, abscissa=xs)


def _pick_abscissa(record, kind: str):
    if kind == "measured":
        return record.x_mean.copy()
    if kind == "kinematic":
        return record.x_kinematic.copy()
    raise ValueError("abscissa must be 'measured' or 'kinematic'")


# ---------------------------------------------------------------------------
# Maximum locus of the pointwise parameter
# ---------------------------------------------------------------------------

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def adiabaticity_max_locus(params: ModelParams, deltas, p0: float,
                           window: tuple[float, float] | None = None,
                           scan_points: int = 400) -> np.ndarray:
    """Positive-x location of the pointwise-parameter maximum per detuning.

    A grid scan over the window brackets the maximum and a golden-section
    refinement polishes it; returns rows (detuning, x_max).
    """
    if window is None:
        scale = params.mode.length_scale()
        if scale is None:
            raise ValueError("provide an explicit search window for this mode shape")
        window = (scale * 1e-3, 8.0 * scale)
    lo, hi = window
    if not hi > lo:
        raise ValueError("search window must satisfy x_hi > x_lo")
    xs = np.linspace(lo, hi, scan_points)
    out = np.empty((len(list(deltas)), 2))
    for i, delta in enumerate(deltas):
        local = replace(params, detuning=float(delta))
        vals = local_adiabaticity(local, xs, p0)
        peak = np.max(vals[np.isfinite(vals)], initial=0.0)
        if peak <= 0.0:
            raise ValueError("flat adiabaticity profile: nothing to maximize")
        j = int(np.argmax(vals))
        a = xs[max(j - 1, 0)]
        b = xs[min(j + 1, scan_points - 1)]
        tol = max(1e-10 * (hi - lo), 1e-12)
        x_best = _golden_max(lambda x: local_adiabaticity(local, x, p0), a, b, tol)
        out[i] = (delta, x_best)
    return out


# ---------------------------------------------------------------------------
# Area identity of the node-peak approximant
# ---------------------------------------------------------------------------

def lorentzian_peak_integral(params: ModelParams, p0: float,
                             window_halfwidths: float = 200.0) -> tuple[float, float]:
    """Quadrature vs closed form for the peak approximant around a coupling zero.

    The pointwise parameter near a linear zero of the coupling is
    amp / (1 + C^2 x^2)^(3/2) with C = 2 sqrt(n) g' / split evaluated at the
    zero; its integral is |p0 / (m split)| independent of C.  Returns
    (numeric, analytic).
    """
    split = params.level_splitting
    if split == 0.0:
        raise ValueError("peak integral needs a nonzero level splitting")
    n = params.photon_index
    mode = params.mode
    if isinstance(mode, LinearMode):
        slope0 = mode.gradient
    elif isinstance(mode, StandingWaveMode):
        slope0 = mode.amplitude * mode.wavenumber
    else:
        raise ValueError("peak integral is defined for linear or standing-wave modes")
    c = 2.0 * math.sqrt(n) * slope0 / split
    amp = abs(p0 * c / (2.0 * params.mass * split))
    analytic = abs(p0 / (params.mass * split))
    half_width = window_halfwidths / abs(c)
    tail = analytic * (1.0 - abs(c) * half_width / math.hypot(1.0, c * half_width))
    if tail > 0.01 * analytic:
        raise ValueError(
            f"integration window of {window_halfwidths} half-widths leaves a "
            f"{tail / analytic:.2%} tail; enlarge it")
    numeric, _ = quad(lambda x: amp / (1.0 + (c * x) ** 2) ** 1.5,
                      -half_width, half_width, limit=200)
    return float(numeric), float(analytic)


# ---------------------------------------------------------------------------
# Order-of-limits probe at a standing-wave node
# ---------------------------------------------------------------------------

@dataclass
class NodeLimitReport:
    """Two limit paths of the pointwise parameter near a coupling node.

    Fixing x off the node and shrinking the detuning sends the parameter to
    zero (fitted exponent ~ +1); sitting exactly on the node it diverges as
    the detuning shrinks (fitted exponent ~ -2).  The two iterated limits
    therefore disagree.
    """

    deltas: np.ndarray
    off_node_values: np.ndarray
    node_values: np.ndarray
    off_node_exponent: float
    node_exponent: float
    approach_offsets: np.ndarray
    approach_values: np.ndarray
    probe_delta: float
    off_node_position: float
    node_position: float

    @property
    def iterated_limit_ratio(self) -> float:
        """Node value over off-node value at the smallest probed detuning."""
        return float(self.node_values[-1] / self.off_node_values[-1])


def node_limit_probe(params: ModelParams, p0: float, deltas=None,
                     node_index: int = 0, off_node_fraction: float = 0.3,
                     approach_points: int = 12) -> NodeLimitReport:
    """Evaluate the pointwise parameter along the two limit orderings."""
    mode = params.mode
    if not isinstance(mode, StandingWaveMode):
        raise ValueError("the limit-ordering probe needs a standing-wave mode")
    if deltas is None:
        deltas = np.logspace(-2, -5, 13)
    deltas = np.asarray(sorted(deltas, reverse=True), dtype=float)
    q = mode.wavenumber
    node = node_index * math.pi / q
    off_x = node + off_node_fraction / q

    off_vals = np.empty_like(deltas)
    node_vals = np.empty_like(deltas)
    for i, delta in enumerate(deltas):
        local = replace(params, detuning=float(delta))
        off_vals[i] = local_adiabaticity(local, off_x, p0)
        node_vals[i] = local_adiabaticity(local, node, p0)

    off_fit = np.polyfit(np.log(deltas), np.log(off_vals), 1)
    node_fit = np.polyfit(np.log(deltas), np.log(node_vals), 1)

    probe_delta = float(deltas[-1])
    local = replace(params, detuning=probe_delta)
    offsets = (off_node_fraction / q) * 0.5 ** np.arange(approach_points)
    approach = np.asarray(
        [local_adiabaticity(local, node + off, p0) for off in offsets])

    return NodeLimitReport(
        deltas=deltas, off_node_values=off_vals, node_values=node_vals,
        off_node_exponent=float(off_fit[0]), node_exponent=float(node_fit[0]),
        approach_offsets=offsets, approach_values=approach,
        probe_delta=probe_delta, off_node_position=off_x, node_position=node)
