import numpy as np
import pytest

from cnse import spectral
from cnse.spectral import Grid, SpectralField


def random_solenoidal(grid, seed, amplitude=1.0, dealiased=True):
    """Seeded random real, mean-free, divergence-free field."""
    rng = np.random.default_rng(seed)
    values = amplitude * rng.standard_normal((3,) + grid.shape)
    c = spectral.fft_forward(values, grid)
    mask = grid.modes.dealias if dealiased else None
    c = spectral.project_coeffs(c, grid, mask)
    return SpectralField(grid, spectral.hermitian_coeffs(c, grid))


@pytest.fixture
def grid8():
    return Grid(8, 3)


@pytest.fixture
def grid16():
    return Grid(16, 3)


@pytest.fixture
def field16(grid16):
    return random_solenoidal(grid16, seed=7)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split("criterion ")[1]):
            terminalreporter.write_line(line)
