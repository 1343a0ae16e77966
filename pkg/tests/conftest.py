import numpy as np
import pytest

import eulerize as ez


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(scope="session")
def wilson_plug():
    """One checked Wilson plug shared across the session (JIT is paid once)."""
    return ez.gen_wilson_plug()


@pytest.fixture(scope="session")
def stream_plug():
    return ez.gen_stream_plug()


def random_scalar(grid, rng, scale=1.0):
    return ez.ScalarField0(grid, scale * rng.standard_normal((grid.n,) * 3))


def random_oneform(grid, rng, scale=1.0):
    return ez.OneForm(grid, scale * rng.standard_normal((3,) + (grid.n,) * 3))


def random_vector(grid, rng, scale=1.0, offset=(0.0, 0.0, 0.0)):
    vals = scale * rng.standard_normal((3,) + (grid.n,) * 3)
    vals += np.asarray(offset)[:, None, None, None]
    return ez.VectorField(grid, vals)


def bandlimited_scalar(grid, rng, kmax=2, amplitude=1.0):
    """Random trigonometric polynomial with frequencies <= kmax per axis."""
    x, y, z = grid.mesh()
    vals = np.zeros_like(x)
    for _ in range(4):
        kx, ky, kz = rng.integers(-kmax, kmax + 1, size=3)
        phase = rng.uniform(0, 2 * np.pi)
        vals += rng.normal() * np.cos(kx * x + ky * y + kz * z + phase)
    return ez.ScalarField0(grid, amplitude * vals)


def bandlimited_oneform(grid, rng, kmax=2, amplitude=1.0):
    comps = [bandlimited_scalar(grid, rng, kmax, amplitude).values for _ in range(3)]
    return ez.OneForm(grid, np.stack(comps))
