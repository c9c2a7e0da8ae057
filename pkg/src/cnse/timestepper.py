"""Integrating-factor RK2 integration of the Galerkin system

    du/dt = -nu A u - P_m B(zeta(u), u) + P_m f

Diffusion is integrated exactly per mode (factor exp(-nu |k|^2 dt)); the
nonlinearity and forcing use Heun's two-stage rule in the integrating-factor
variables::

    u*      = E (u_n + dt N(u_n))
    u_{n+1} = E u_n + dt/2 (E N(u_n) + N(u*))

The state always lives inside the 2/3-dealiased set intersected with the
Galerkin ball |k|^2 <= m_cutoff.
"""
import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .diagnostics import TrajectoryRecord
from .errors import BlowUpError, CalmingBoundViolation, ConfigError, NonFiniteError
from .nonlinear import NonlinearForm, evaluate
from .spectral import Grid, SpectralField

log = logging.getLogger(__name__)

BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class ForcingSpec:
    """Time-independent body force. ``norm`` rescales the projected field."""

    kind: str = "zero"
    k: tuple = (1, 0, 0)
    amplitude: tuple = (0.0, 1.0, 0.0)
    norm: float | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "single_mode", "checkpoint"):
            raise ConfigError(f"unknown forcing kind {self.kind!r}", key="forcing.kind")
        if self.kind == "checkpoint" and not self.path:
            raise ConfigError("checkpoint forcing needs a path", key="forcing.path")


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "taylor_green"
    variant: str = "3d"
    amplitude: float = 1.0
    k_min: float = 1.0
    k_max: float = 4.0
    energy: float = 1.0
    seed: int | None = None
    norm: float | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("taylor_green", "random_band", "checkpoint"):
            raise ConfigError(f"unknown initial kind {self.kind!r}", key="initial.kind")
        if self.kind == "taylor_green" and self.variant not in ("2d", "3d"):
            raise ConfigError(f"taylor_green variant must be 2d or 3d, got {self.variant!r}", key="initial.variant")
        if self.kind == "random_band":
            if self.seed is None:
                raise ConfigError("random initial data requires an explicit seed", key="seed")
            if not 0 <= self.k_min <= self.k_max:
                raise ConfigError("need 0 <= k_min <= k_max", key="initial.k_min")
            if self.energy <= 0:
                raise ConfigError("energy must be positive", key="initial.energy")
        if self.kind == "checkpoint" and not self.path:
            raise ConfigError("checkpoint initial data needs a path", key="initial.path")


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid = field(default_factory=lambda: Grid(32, 3))
    nu: float = 0.5
    nonlinear: NonlinearForm = field(default_factory=lambda: NonlinearForm("rotational"))
    t_end: float = 1.0
    dt: float | str = 1e-3
    cfl: float = 0.5
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    save_every: float = 0.01
    m_cutoff: float | None = None
    linear_only: bool = False
    out_csv: str | None = None
    out_checkpoint: str | None = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ConfigError("viscosity must be positive", key="nu")
        if not self.t_end >= 0:
            raise ConfigError("t_end must be non-negative", key="t_end")
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ConfigError("dt must be positive or 'auto'", key="dt")
        if not 0 < self.cfl <= 1:
            raise ConfigError("cfl must lie in (0, 1]", key="cfl")
        if not self.save_every > 0 or (self.t_end > 0 and self.save_every > self.t_end):
            raise ConfigError("save_every must be positive and <= t_end", key="save_every")
        if self.m_cutoff is not None and not self.m_cutoff > 0:
            raise ConfigError("m_cutoff must be positive or none", key="m_cutoff")


# -- initial data and forcing -------------------------------------------------

def _finalize(c, grid, m_cutoff):
    c = spectral.project_coeffs(c, grid, grid.modes.dealias & spectral.galerkin_mask(grid, m_cutoff))
    return spectral.hermitian_coeffs(c, grid, inplace=True)


def _rescale(c, grid, norm):
    cur = math.sqrt(spectral.energy_coeffs(c, grid))
    if cur == 0:
        raise ConfigError("cannot rescale a zero field to a nonzero norm")
    return c * (norm / cur)


def taylor_green(grid, amplitude=1.0, variant="3d"):
    X, Y, Z = grid.points()
    if variant == "2d":
        zfac = 1.0
    elif grid.dims == 2:
        raise ConfigError("3d Taylor-Green needs a 3D grid", key="initial.variant")
    else:
        zfac = np.cos(Z)
    values = np.stack([
        amplitude * np.sin(X) * np.cos(Y) * zfac,
        -amplitude * np.cos(X) * np.sin(Y) * zfac,
        np.zeros(grid.shape),
    ])
    return spectral.forward_transform(spectral.PhysicalField(grid, values))


def random_band(grid, k_min, k_max, energy, seed):
    """Gaussian coefficients in the shell k_min <= |k| <= k_max, solenoidal, ||u||^2 = energy."""
    rng = np.random.default_rng(seed)
    shape = (3,) + grid.kshape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kk = np.sqrt(grid.modes.k2)
    c = c * ((kk >= k_min) & (kk <= k_max))
    c = _finalize(c, grid, None)
    return SpectralField(grid, _rescale(c, grid, math.sqrt(energy)))


def build_initial(cfg):
    spec, grid = cfg.initial, cfg.grid
    if spec.kind == "checkpoint":
        s, _ = spectral.read_checkpoint(spec.path)
        if s.grid != grid:
            raise ConfigError(f"checkpoint grid {s.grid} differs from config grid {grid}", key="initial.path")
        c = s.coeffs * (grid.modes.dealias & spectral.galerkin_mask(grid, cfg.m_cutoff))
        # stored states are already solenoidal; re-projecting would perturb the bits
        if spectral.divergence_residual(SpectralField(grid, c)) > 1e-13:
            c = spectral.project_coeffs(c, grid)
        c[:, 0, 0, 0] = 0.0
        c = spectral.hermitian_coeffs(c, grid)
    else:
        if spec.kind == "taylor_green":
            c = taylor_green(grid, spec.amplitude, spec.variant).coeffs
        else:
            c = random_band(grid, spec.k_min, spec.k_max, spec.energy, spec.seed).coeffs
        c = _finalize(c, grid, cfg.m_cutoff)
    if spec.norm is not None:
        c = _rescale(c, grid, spec.norm)
    return SpectralField(grid, c)


def build_forcing(cfg):
    """Projected, truncated, mean-free forcing coefficients (None when zero)."""
    spec, grid = cfg.forcing, cfg.grid
    if spec.kind == "zero":
        return None
    if spec.kind == "checkpoint":
        s, _ = spectral.read_checkpoint(spec.path)
        if s.grid != grid:
            raise ConfigError(f"forcing grid {s.grid} differs from config grid {grid}", key="forcing.path")
        c = s.coeffs
    else:
        c = spectral.single_mode(grid, spec.k, spec.amplitude).coeffs
    before = math.sqrt(spectral.energy_coeffs(c, grid))
    c = _finalize(c, grid, cfg.m_cutoff)
    if math.sqrt(spectral.energy_coeffs(c, grid)) <= 1e-12 * before:
        raise ConfigError("forcing vanishes after projection/truncation", key="forcing.amplitude")
    if spec.norm is not None:
        c = _rescale(c, grid, spec.norm)
    return c


# -- integrator ---------------------------------------------------------------

def resolve_dt(cfg, u0=None):
    """Time step and step count. ``auto`` uses cfl * dx / U with U = sup|zeta| when calmed."""
    if cfg.dt == "auto":
        calming = cfg.nonlinear.calming
        if calming is not None and not cfg.linear_only:
            speed = calming.linf_bound()
        else:
            if u0 is None:
                u0 = build_initial(cfg)
            speed = float(np.sqrt((spectral.inverse_transform(u0).values ** 2).sum(axis=0).max()))
        dt = cfg.save_every if speed == 0 else min(cfg.cfl * cfg.grid.dx / speed, cfg.save_every)
        if cfg.t_end == 0:
            return dt, 0
        nsteps = int(math.ceil(cfg.t_end / dt - 1e-9))
        return cfg.t_end / nsteps, nsteps
    dt = float(cfg.dt)
    return dt, int(math.ceil(cfg.t_end / dt - 1e-9)) if cfg.t_end > 0 else 0


class Integrator:
    """Precomputed per-mode factors for one configuration."""

    def __init__(self, cfg, dt):
        self.cfg = cfg
        self.grid = cfg.grid
        self.dt = dt
        self.mask = self.grid.modes.dealias & spectral.galerkin_mask(self.grid, cfg.m_cutoff)
        self.decay = np.exp(-cfg.nu * self.grid.modes.k2 * dt)
        self.forcing = build_forcing(cfg)
        calming = cfg.nonlinear.calming
        self.bound = None if calming is None else calming.linf_bound()

    def rhs(self, c, t):
        """N(u) = -P_m B(zeta(u), u) + P_m f, and the flux <B(zeta(u), u), u>."""
        grid = self.grid
        if self.cfg.linear_only:
            n = np.zeros_like(c)
            flux = 0.0
        else:
            try:
                b, wmax = evaluate(self.cfg.nonlinear, c, grid)
            except NonFiniteError as exc:
                raise BlowUpError(f"blow-up at t={t:.6g}: {exc}", time=t, index=exc.index) from exc
            if self.bound is not None and wmax > self.bound * (1.0 + BOUND_SLACK):
                raise CalmingBoundViolation(f"max|zeta(u)|={wmax!r} exceeds bound {self.bound!r} at t={t:.6g}")
            b = b * self.mask
            flux = spectral.inner_coeffs(b, c, grid)
            n = -b
        if self.forcing is not None:
            n = n + self.forcing
        return n, flux

    def advance(self, c, n0, t):
        dt, E = self.dt, self.decay
        c1 = E * (c + dt * n0)
        n1, _ = self.rhs(c1, t + dt)
        c_new = E * c + (0.5 * dt) * (E * n0 + n1)
        c_new = spectral.project_coeffs(c_new, self.grid, self.mask)
        c_new = spectral.hermitian_coeffs(c_new, self.grid, inplace=True)
        if not np.isfinite(c_new).all():
            raise BlowUpError(f"blow-up at t={t + dt:.6g}: non-finite state", time=t + dt)
        return c_new


@functools.lru_cache(maxsize=8)
def _integrator(cfg, dt):
    return Integrator(cfg, dt)


# blow-up is detected explicitly, so overflow warnings are noise
@np.errstate(over="ignore", invalid="ignore")
def step(state, t, cfg, dt=None):
    """Advance ``state`` by one step of size ``dt`` (default: resolved from cfg)."""
    if dt is None:
        dt, _ = resolve_dt(cfg, state)
    integ = _integrator(cfg, float(dt))
    n0, _ = integ.rhs(state.coeffs, t)
    return SpectralField(state.grid, integ.advance(state.coeffs, n0, t))


@np.errstate(over="ignore", invalid="ignore")
def run(cfg, keep_states=False, u0=None):
    """Integrate to ``t_end`` and return the sampled TrajectoryRecord.

    Samples are taken at the step boundaries nearest multiples of
    ``save_every`` and always at the final step. Deterministic for a fixed
    configuration and worker count.
    """
    grid = cfg.grid
    if u0 is None:
        u0 = build_initial(cfg)
    dt, nsteps = resolve_dt(cfg, u0)
    integ = Integrator(cfg, dt)
    stride = max(1, int(round(cfg.save_every / dt)))
    f = integ.forcing
    k2 = grid.modes.k2

    rec = TrajectoryRecord(states=[] if keep_states else None)
    rec.meta.update(
        nu=cfg.nu, dt=dt, nsteps=nsteps, label=cfg.nonlinear.label,
        forcing_constant=True,
        f_norm=0.0 if f is None else math.sqrt(spectral.energy_coeffs(f, grid)),
        u0_norm=math.sqrt(spectral.energy_coeffs(u0.coeffs, grid)),
    )

    def power(c):
        return 0.0 if f is None else spectral.inner_coeffs(f, c, grid)

    def sample(c, t, force_work, dissipation, flux, flux_work):
        a2 = (c.real ** 2 + c.imag ** 2).sum(axis=0)
        rec.append(
            t=t,
            energy=spectral.weighted_sum(a2, grid),
            grad_energy=spectral.weighted_sum(a2 * k2, grid),
            stokes_energy=spectral.weighted_sum(a2 * k2 * k2, grid),
            force_work=force_work,
            dissipation=dissipation,
            div_residual=spectral.divergence_residual(SpectralField(grid, c)),
            calming_flux=flux,
            flux_work=flux_work,
            state=SpectralField(grid, c.copy()),
        )

    c = u0.coeffs
    n0, flux = integ.rhs(c, 0.0)
    grad = spectral.energy_coeffs(c, grid, 1)
    pw = power(c)
    force_work = dissipation = flux_work = 0.0
    sample(c, 0.0, 0.0, 0.0, flux, 0.0)

    for i in range(1, nsteps + 1):
        t_prev = (i - 1) * dt
        t = i * dt
        c_new = integ.advance(c, n0, t_prev)
        n0, flux_new = integ.rhs(c_new, t)
        grad_new = spectral.energy_coeffs(c_new, grid, 1)
        pw_new = power(c_new)
        dissipation += cfg.nu * dt * (grad + grad_new)
        force_work += 0.5 * dt * (pw + pw_new)
        flux_work += 0.5 * dt * (flux + flux_new)
        c, grad, pw, flux = c_new, grad_new, pw_new, flux_new
        if i % stride == 0 or i == nsteps:
            sample(c, t, force_work, dissipation, flux, flux_work)

    if cfg.out_checkpoint:
        spectral.write_checkpoint(cfg.out_checkpoint, SpectralField(grid, c), nsteps * dt)
    if cfg.out_csv:
        rec.to_csv(cfg.out_csv)
    log.debug("run %s: %d steps of dt=%g", cfg.nonlinear.label, nsteps, dt)
    return rec
