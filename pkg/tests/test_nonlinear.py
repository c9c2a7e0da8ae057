import numpy as np
import pytest

from cnse import spectral
from cnse.calming import CalmingFunction, CalmingKind
from cnse.errors import NonFiniteError
from cnse.nonlinear import (
    Form, NonlinearForm, bilinear, energy_flux, eval_nonlinearity, resolution_consistency, trilinear_b,
)
from cnse.spectral import Grid, PhysicalField, SpectralField
from cnse.timestepper import taylor_green

from conftest import random_solenoidal

PARALLEL = [k for k in CalmingKind if k is not CalmingKind.ARCTAN]


def _omega_norm(u):
    return spectral.norm_l2(spectral.curl(u))


def _zeta_norm(nf, u):
    w = nf.calming.apply(spectral.inverse_transform(u).values)
    return np.sqrt(np.sum(w ** 2) * u.grid.dx ** 3)


@pytest.mark.parametrize("form", list(Form))
def test_zero_field(form, grid8):
    out = eval_nonlinearity(NonlinearForm(form, CalmingFunction("rational1", 0.1)), SpectralField.zeros(grid8))
    assert np.all(out.coeffs == 0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_identity_forms_agree(seed, grid16):
    u = random_solenoidal(grid16, seed)
    a = eval_nonlinearity(NonlinearForm("advective"), u)
    r = eval_nonlinearity(NonlinearForm("rotational"), u)
    assert spectral.norm_l2(a - r) <= 1e-11 * spectral.norm_l2(a)


def test_taylor_green_2d_advective_vanishes(grid16):
    u = taylor_green(grid16, 1.0, "2d")
    out = eval_nonlinearity(NonlinearForm("advective"), u)
    assert spectral.norm_l2(out) <= 1e-13 * spectral.norm_l2(u)


def test_output_solenoidal_mean_free(field16):
    out = eval_nonlinearity(NonlinearForm("advective", CalmingFunction("rational2", 0.5)), field16)
    assert spectral.divergence_residual(out) <= 1e-13
    assert np.all(out.coeffs[:, 0, 0, 0] == 0)


@pytest.mark.parametrize("seed", [3, 4])
def test_advective_skew_symmetry(seed, grid16):
    u = random_solenoidal(grid16, seed)
    v = random_solenoidal(grid16, seed + 100)
    b = trilinear_b(NonlinearForm("advective"), u, v, v)
    scale = spectral.norm_l2(u) * spectral.norm_h1_semi(v) * spectral.norm_l2(v)
    assert abs(b) <= 1e-11 * scale


@pytest.mark.parametrize("kind", PARALLEL)
@pytest.mark.parametrize("seed", [5, 6])
def test_rotational_parallel_flux_vanishes(kind, seed, grid16):
    u = random_solenoidal(grid16, seed, amplitude=3.0)
    nf = NonlinearForm("rotational", CalmingFunction(kind, 0.5))
    flux = energy_flux(nf, u)
    assert abs(flux) <= 1e-12 * _omega_norm(u) * _zeta_norm(nf, u) * spectral.norm_l2(u)


def test_rotational_arctan_flux_nonzero(field16):
    u = field16 * 3.0
    nf = NonlinearForm("rotational", CalmingFunction("arctan", 0.5))
    assert abs(energy_flux(nf, u)) > 1e-6 * _omega_norm(u) * _zeta_norm(nf, u) * spectral.norm_l2(u)


def test_advective_calmed_flux_nonzero(field16):
    u = field16 * 3.0
    nf = NonlinearForm("advective", CalmingFunction("rational1", 1.0))
    assert abs(energy_flux(nf, u)) > 1e-10 * _omega_norm(u) * _zeta_norm(nf, u) * spectral.norm_l2(u)


@pytest.mark.parametrize("form", list(Form))
def test_boundedness_proxy(form, field16):
    cal = CalmingFunction("rational1", 0.5)
    u = field16 * 3.0
    w = random_solenoidal(field16.grid, 99)
    b = trilinear_b(NonlinearForm(form, cal), u, u, w)
    assert abs(b) <= cal.linf_bound() * spectral.norm_h1_semi(u) * spectral.norm_l2(w)


def test_bilinear_matches_identity_eval(field16):
    a = bilinear("rotational", field16, field16)
    b = eval_nonlinearity(NonlinearForm("rotational"), field16)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)


def test_non_finite_reported(grid8):
    u = SpectralField.zeros(grid8)
    u.coeffs[0, 1, 0, 0] = np.inf
    with pytest.raises(NonFiniteError) as exc:
        eval_nonlinearity(NonlinearForm("rotational"), u)
    assert exc.value.index is not None


def test_resolution_consistency_small(field16):
    gap = resolution_consistency(NonlinearForm("rotational"), field16)
    assert gap <= 1e-12
    calmed = resolution_consistency(NonlinearForm("rotational", CalmingFunction("rational1", 1.0)), field16 * 3)
    assert 0 < calmed < 1


def test_label():
    assert NonlinearForm("advective").label == "advective/none"
    assert NonlinearForm("rotational", CalmingFunction("arctan", 0.1)).label.startswith("rotational/arctan")
