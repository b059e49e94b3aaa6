import numpy as np
import pytest

import adiabatica as ad


@pytest.fixture
def gaussian_params():
    """Gaussian mode A=1, a=50 at moderate detuning; the workhorse setup."""
    return ad.ModelParams(mode=ad.GaussianMode(1.0, 50.0), detuning=10.0)


@pytest.fixture
def standing_params():
    return ad.ModelParams(mode=ad.StandingWaveMode(1.0, 1.0), detuning=2.0)


@pytest.fixture
def small_grid():
    return ad.Grid(256, -40.0, 40.0)


def constant_mode(value, half_span=2000.0, points=64):
    """Tabulated mode with a constant coupling (spectral derivatives vanish)."""
    xs = np.linspace(-half_span, half_span, points, endpoint=False)
    return ad.TabulatedMode(xs, np.full(points, value))


def l2_distance(a: ad.SpinorField, b: ad.SpinorField) -> float:
    return float(np.sqrt(np.sum(np.abs(a.components - b.components) ** 2) * a.grid.dx))
