"""Pseudo-spectral evaluation of the (calmed) nonlinear terms.

Two forms are supported, with ``w = zeta(u)`` (or ``w = u`` uncalmed)::

    advective    B(w, u) = P[(w . grad) u]
    rotational   B(w, u) = P[(curl u) x w]

Products are formed on the collocation grid, transformed back, truncated
by the 2/3 rule and Leray-projected. ``zeta(u)`` is not band-limited, so
some aliasing survives the truncation; :func:`resolution_consistency`
measures it.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels, spectral
from .calming import CalmingFunction
from .errors import NonFiniteError
from .spectral import SpectralField


class Form(str, Enum):
    ADVECTIVE = "advective"
    ROTATIONAL = "rotational"


@dataclass(frozen=True)
class NonlinearForm:
    form: Form
    calming: CalmingFunction | None = None

    def __post_init__(self):
        object.__setattr__(self, "form", Form(self.form))

    @property
    def label(self):
        kind = "none" if self.calming is None else f"{self.calming.kind.value}(eps={self.calming.epsilon:g})"
        return f"{self.form.value}/{kind}"


def _first_nonfinite(a):
    bad = np.argwhere(~np.isfinite(a))
    return tuple(int(i) for i in bad[0]) if len(bad) else None


def _check_finite(a, what):
    if not np.isfinite(a).all():
        idx = _first_nonfinite(a)
        raise NonFiniteError(f"non-finite {what} at grid index {idx}", index=idx)


def _calm_values(calming, u):
    if calming is None:
        return u
    return kernels.calm(calming.kind.code, calming.epsilon, u)


def _product(form, w, v_coeffs, grid):
    """Physical-space product for B(w, v) before projection."""
    if form is Form.ROTATIONAL:
        omega = spectral.fft_inverse(spectral.curl_coeffs(v_coeffs, grid), grid)
        return kernels.lamb(omega, w)
    grad = spectral.fft_inverse(spectral.gradient_coeffs(v_coeffs, grid), grid)
    return kernels.advect(w, grad)


def _finish(prod, grid):
    c = spectral.project_coeffs(spectral.fft_forward(prod, grid), grid, grid.modes.dealias)
    return spectral.hermitian_coeffs(c, grid, inplace=True)


def evaluate(nf, u_coeffs, grid):
    """Core evaluation on raw coefficients.

    Returns ``(B_coeffs, max_abs_w)`` where ``max_abs_w`` is the largest
    pointwise |zeta(u)| on the grid (used for the a-priori bound check).
    """
    u = spectral.fft_inverse(u_coeffs, grid)
    _check_finite(u, "velocity")
    w = _calm_values(nf.calming, u)
    prod = _product(nf.form, w, u_coeffs, grid)
    _check_finite(prod, "nonlinear product")
    return _finish(prod, grid), kernels.max_norm(w)


def eval_nonlinearity(nf, u):
    """B(zeta(u), u) as a solenoidal, mean-free, dealiased SpectralField."""
    coeffs, _ = evaluate(nf, u.coeffs, u.grid)
    return SpectralField(u.grid, coeffs)


def bilinear(form, a, v):
    """B(a, v) for an arbitrary first slot ``a`` (SpectralField, used as given)."""
    spectral._check_grids(a, v)
    grid = v.grid
    w = spectral.fft_inverse(a.coeffs, grid)
    prod = _product(Form(form), w, v.coeffs, grid)
    _check_finite(prod, "nonlinear product")
    return SpectralField(grid, _finish(prod, grid))


def trilinear_b(nf, u, v, w):
    """b(zeta(u), v, w) = <B(zeta(u), v), w>."""
    spectral._check_grids(u, v)
    spectral._check_grids(u, w)
    grid = u.grid
    a = _calm_values(nf.calming, spectral.fft_inverse(u.coeffs, grid))
    prod = _product(nf.form, a, v.coeffs, grid)
    _check_finite(prod, "nonlinear product")
    return spectral.inner_coeffs(_finish(prod, grid), w.coeffs, grid)


def energy_flux(nf, u):
    """<B(zeta(u), u), u>; zero pointwise for rotational form with parallel calming."""
    return trilinear_b(nf, u, u, u)


def resolution_consistency(nf, u):
    """Relative gap between B evaluated at n and at 2n (restricted back to n).

    Measures the aliasing that survives the 2/3 truncation.
    """
    fine = spectral.Grid(2 * u.grid.n, u.grid.dims)
    coarse = eval_nonlinearity(nf, u)
    refined = eval_nonlinearity(nf, spectral.resample(u, fine))
    back = spectral.dealias(spectral.resample(refined, u.grid))
    ref = spectral.norm_l2(back)
    gap = spectral.norm_l2(coarse - back)
    return gap / ref if ref > 0 else gap
