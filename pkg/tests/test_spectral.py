import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnse import spectral
from cnse.errors import GridMismatchError
from cnse.spectral import Grid, PhysicalField, SpectralField

from conftest import random_solenoidal

BOX = (2 * math.pi) ** 3


def _mode_field(grid, k, vec):
    """Coefficient field with a single complex mode (and its conjugate partner implied)."""
    s = SpectralField.zeros(grid)
    kx, ky, kz = (k[0] % grid.n, k[1] % grid.n, k[2])
    s.coeffs[:, kx, ky, kz] = vec
    return s


@pytest.mark.parametrize("n, dims", [(8, 3), (16, 3), (16, 2)])
def test_grid_shapes(n, dims):
    g = Grid(n, dims)
    assert g.shape == (n, n, n if dims == 3 else 1)
    assert g.kshape == (n, n, n // 2 + 1 if dims == 3 else 1)
    assert g.lambda1 == 1.0


@pytest.mark.parametrize("n, dims", [(7, 3), (4, 3), (16, 1)])
def test_grid_rejects(n, dims):
    with pytest.raises(ValueError):
        Grid(n, dims)


def test_round_trip(grid16):
    rng = np.random.default_rng(0)
    p = PhysicalField(grid16, rng.standard_normal((3,) + grid16.shape))
    back = spectral.inverse_transform(spectral.forward_transform(p))
    assert np.max(np.abs(back.values - p.values)) <= 1e-13 * np.max(np.abs(p.values))


def test_single_mode_support(grid8):
    X, Y, Z = grid8.points()
    p = PhysicalField(grid8, np.stack([np.sin(X), 0 * X, 0 * X]))
    c = spectral.forward_transform(p).coeffs
    nz = np.argwhere(np.abs(c) > 1e-12)
    assert {tuple(i) for i in nz} == {(0, 1, 0, 0), (0, grid8.n - 1, 0, 0)}


def test_constant_has_only_mean(grid8):
    p = PhysicalField(grid8, np.full((3,) + grid8.shape, 2.5))
    s = spectral.forward_transform(p)
    assert np.count_nonzero(np.abs(s.coeffs) > 1e-12) == 3
    assert np.all(spectral.remove_mean(s).coeffs == 0)


def test_sin_x_e2_parseval(grid16):
    u = spectral.single_mode(grid16, (1, 0, 0), (0.0, 1.0, 0.0))
    assert spectral.norm_l2(u) ** 2 == pytest.approx(BOX / 2, rel=1e-13)
    assert spectral.norm_h1_semi(u) ** 2 == pytest.approx(BOX / 2, rel=1e-13)


def test_parseval_matches_quadrature(grid16):
    rng = np.random.default_rng(3)
    values = rng.standard_normal((3,) + grid16.shape)
    s = spectral.forward_transform(PhysicalField(grid16, values))
    quad = np.sum(values ** 2) * grid16.dx ** 3
    assert spectral.norm_l2(s) ** 2 == pytest.approx(quad, rel=1e-12)


def test_leray_single_mode(grid8):
    s = _mode_field(grid8, (1, 0, 0), (1.0, 1.0, 0.0))
    out = spectral.leray_project(s).coeffs[:, 1, 0, 0]
    np.testing.assert_allclose(out, [0.0, 1.0, 0.0], atol=1e-15)


def test_leray_kills_gradients(grid16):
    rng = np.random.default_rng(1)
    phi = spectral.fft_forward(rng.standard_normal(grid16.shape), grid16)
    k = grid16.modes
    g = SpectralField(grid16, np.stack([1j * k.kx * phi, 1j * k.ky * phi, 1j * k.kz * phi]))
    assert spectral.norm_l2(spectral.leray_project(g)) <= 1e-13 * spectral.norm_l2(g)


def test_leray_idempotent_orthogonal(grid16):
    rng = np.random.default_rng(2)
    v = spectral.remove_mean(spectral.forward_transform(PhysicalField(grid16, rng.standard_normal((3,) + grid16.shape))))
    p = spectral.leray_project(v)
    pp = spectral.leray_project(p)
    assert spectral.norm_l2(pp - p) <= 1e-14 * spectral.norm_l2(p)
    assert abs(spectral.inner_l2(p, v - p)) <= 1e-12 * spectral.norm_l2(v) ** 2
    assert spectral.divergence_residual(p) <= 1e-13


def test_stokes_multiplies_by_k2(grid8):
    s = _mode_field(grid8, (2, 1, 0), (-1.0, 2.0, 0.0))
    out = spectral.stokes_apply(s)
    np.testing.assert_allclose(out.coeffs, 5 * s.coeffs)
    unit = _mode_field(grid8, (1, 0, 0), (0.0, 1.0, 0.0))
    np.testing.assert_array_equal(spectral.stokes_apply(unit).coeffs, unit.coeffs)


def test_stokes_inner_is_enstrophy(field16):
    au = spectral.stokes_apply(field16)
    assert spectral.inner_l2(au, field16) == pytest.approx(spectral.norm_h1_semi(field16) ** 2, rel=1e-12)


def test_poincare_chain(field16):
    a, b, c = spectral.norm_l2(field16), spectral.norm_h1_semi(field16), spectral.norm_stokes(field16)
    assert a <= b <= c


def test_inner_matches_norm(field16):
    assert spectral.inner_l2(field16, field16) == pytest.approx(spectral.norm_l2(field16) ** 2, rel=1e-13)


def test_galerkin_cases(field16):
    g = field16.grid
    full = spectral.galerkin_truncate(field16, 3 * (g.n // 2) ** 2)
    np.testing.assert_array_equal(full.coeffs, field16.coeffs)
    assert spectral.norm_l2(spectral.galerkin_truncate(field16, 0.5)) == 0.0


def test_galerkin_six_modes(grid8):
    mask = spectral.galerkin_mask(grid8, 1.0)
    m = grid8.modes
    # count the full spectrum: interior kz planes stand for two modes each
    count = int(np.sum(mask * (m.weights > 0) * m.weights * (m.k2 > 0)))
    assert count == 6


def test_galerkin_tail_and_commute(field16):
    m = 6.0
    tail = field16 - spectral.galerkin_truncate(field16, m)
    assert spectral.norm_l2(tail) ** 2 <= spectral.norm_h1_semi(field16) ** 2 / m
    a = spectral.galerkin_truncate(spectral.stokes_apply(field16), m)
    b = spectral.stokes_apply(spectral.galerkin_truncate(field16, m))
    np.testing.assert_array_equal(a.coeffs, b.coeffs)


def test_dealias_partition(grid16):
    u = random_solenoidal(grid16, seed=4, dealiased=False)
    d = spectral.dealias(u)
    np.testing.assert_array_equal(spectral.dealias(d).coeffs, d.coeffs)
    kept = spectral.norm_l2(d) ** 2 + spectral.norm_l2(u - d) ** 2
    assert kept == pytest.approx(spectral.norm_l2(u) ** 2, rel=1e-13)


def test_grid_mismatch(grid8, grid16):
    with pytest.raises(GridMismatchError):
        spectral.inner_l2(SpectralField.zeros(grid8), SpectralField.zeros(grid16))


def test_resample_round_trip(field16):
    fine = spectral.resample(field16, Grid(32, 3))
    back = spectral.resample(fine, field16.grid)
    assert spectral.norm_l2(fine) == pytest.approx(spectral.norm_l2(field16), rel=1e-13)
    np.testing.assert_array_equal(back.coeffs, field16.coeffs)


@pytest.mark.parametrize("dims", [2, 3])
def test_checkpoint_round_trip(tmp_path, dims):
    g = Grid(8, dims)
    u = random_solenoidal(g, seed=11)
    path = tmp_path / "u.ckpt"
    spectral.write_checkpoint(path, u, 0.125)
    v, t = spectral.read_checkpoint(path)
    assert t == 0.125 and v.grid == g
    np.testing.assert_array_equal(v.coeffs, u.coeffs)
    raw = path.read_bytes()
    assert raw[:4] == b"CNSE"
    assert int.from_bytes(raw[4:8], "little") == 1


def test_checkpoint_rejects_bad_magic(tmp_path, grid8):
    path = tmp_path / "bad.ckpt"
    spectral.write_checkpoint(path, SpectralField.zeros(grid8), 0.0)
    path.write_bytes(b"XXXX" + path.read_bytes()[4:])
    with pytest.raises(ValueError):
        spectral.read_checkpoint(path)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_projection_properties_random(seed):
    g = Grid(8, 3)
    rng = np.random.default_rng(seed)
    v = spectral.remove_mean(spectral.forward_transform(PhysicalField(g, rng.standard_normal((3,) + g.shape))))
    p = spectral.leray_project(v)
    assert spectral.divergence_residual(p) <= 1e-13
    assert spectral.norm_l2(p) <= spectral.norm_l2(v) * (1 + 1e-14)
