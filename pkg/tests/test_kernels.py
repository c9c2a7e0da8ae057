import os

import numpy as np
import pytest

from cnse import kernels
from cnse.calming import CalmingFunction
from cnse.nonlinear import NonlinearForm
from cnse.spectral import Grid
from cnse.timestepper import InitialSpec, SolverConfig, run

from conftest import random_solenoidal

BACKENDS = sorted(kernels.BACKENDS)


@pytest.fixture
def backend(request):
    before = kernels.backend_name()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(before)


def _values(seed, shape=(3, 6, 5, 4), scale=10.0):
    return scale * np.random.default_rng(seed).standard_normal(shape)


def test_compiled_backend_is_default_when_built():
    forced = os.environ.get("CNSE_KERNELS")
    if forced:
        assert kernels.backend_name() == forced
    elif "cython" in kernels.BACKENDS:
        assert kernels.backend_name() == "cython"
    else:
        assert kernels.backend_name() == "python"


@pytest.mark.parametrize("code", [1, 2, 3, 4])
@pytest.mark.parametrize("eps", [1.0, 0.1])
def test_calm_backends_agree(code, eps):
    u = _values(code)
    outs = []
    for name in BACKENDS:
        kernels.use_backend(name)
        outs.append(kernels.calm(code, eps, u))
    kernels.use_backend(BACKENDS[0])
    for o in outs[1:]:
        np.testing.assert_allclose(o, outs[0], rtol=1e-15, atol=0)


@pytest.mark.parametrize("backend", BACKENDS, indirect=True)
def test_pointwise_products(backend):
    a, b = _values(1), _values(2)
    np.testing.assert_allclose(kernels.lamb(a, b), np.cross(a, b, axis=0), rtol=1e-14, atol=1e-12)
    g = _values(3, (3, 3, 6, 5, 4))
    np.testing.assert_allclose(kernels.advect(a, g), np.einsum("j...,ij...->i...", a, g), rtol=1e-14, atol=1e-12)
    assert kernels.max_norm(a) == pytest.approx(np.sqrt((a ** 2).sum(axis=0)).max(), rel=1e-15)


@pytest.mark.parametrize("backend", BACKENDS, indirect=True)
def test_spectral_kernels_match_numpy(backend):
    g = Grid(8, 3)
    u = random_solenoidal(g, 5, dealiased=False)
    m = g.modes
    k = np.stack(np.broadcast_arrays(m.kx, m.ky, m.kz)).astype(float)
    c = u.coeffs
    curl = np.stack([1j * (k[1] * c[2] - k[2] * c[1]), 1j * (k[2] * c[0] - k[0] * c[2]), 1j * (k[0] * c[1] - k[1] * c[0])])
    np.testing.assert_allclose(kernels.curl(c, g), curl, rtol=1e-14, atol=1e-14)
    grad = 1j * k[None, :] * c[:, None]
    np.testing.assert_allclose(kernels.gradient(c, g), grad, rtol=1e-14, atol=1e-14)
    rnd = c + 1j * k * c[0]
    pr = kernels.project_masked(rnd, g, m.all_modes)
    assert np.abs((k * pr).sum(axis=0)).max() <= 1e-12 * np.abs(pr).max()


def test_runs_bitwise_identical_across_backends():
    cfg = SolverConfig(grid=Grid(16, 3), nu=0.5, nonlinear=NonlinearForm("advective", CalmingFunction("rational1", 0.3)),
                       t_end=0.05, dt=0.01, save_every=0.01, initial=InitialSpec("taylor_green", amplitude=3.0))
    texts = []
    before = kernels.backend_name()
    for name in BACKENDS:
        kernels.use_backend(name)
        texts.append(run(cfg).csv_text())
    kernels.use_backend(before)
    assert all(t == texts[0] for t in texts)
