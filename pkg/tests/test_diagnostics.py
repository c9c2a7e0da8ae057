import math

import numpy as np
import pytest

from cnse.calming import CalmingFunction
from cnse.diagnostics import (
    ExperimentReport, TrajectoryRecord, absorbing_ball_stats, absorbing_radius, absorbing_time,
    difference_norms, energy_residual, enstrophy_window_bound, fit_rate, grad_bound_window,
)
from cnse.errors import GridMismatchError
from cnse.nonlinear import NonlinearForm
from cnse.spectral import Grid
from cnse.timestepper import ForcingSpec, InitialSpec, SolverConfig, run

G = Grid(8, 3)


def _run(eps=None, amplitude=2.0, **kw):
    cal = None if eps is None else CalmingFunction("rational1", eps)
    base = dict(grid=G, nu=0.5, nonlinear=NonlinearForm("rotational", cal), t_end=0.1, dt=0.01,
                save_every=0.02, initial=InitialSpec("taylor_green", amplitude=amplitude))
    base.update(kw)
    return run(SolverConfig(**base), keep_states=True)


def test_rho0_t0_closed_forms():
    assert absorbing_radius(1.0, 1.0) == 2.0
    assert absorbing_time(1.0, 1.0) == math.log(2.0)
    assert absorbing_time(1.0, 3.0) == pytest.approx(math.log(10.0), rel=1e-15)
    assert enstrophy_window_bound(1.0, 1.0) == 3.0
    assert absorbing_radius(0.5, 0.0) == 1.0


def test_zero_data_zero_residual():
    rec = _run(eps=0.5, amplitude=0.0)
    assert np.all(energy_residual(rec) == 0.0)


def test_difference_norms_pseudometric():
    a, b, c = _run(0.5), _run(0.25), _run(0.1)
    assert difference_norms(a, a) == (0.0, 0.0, 0.0)
    ab, ba = difference_norms(a, b), difference_norms(b, a)
    assert ab == pytest.approx(ba, rel=1e-14)
    ac, bc = difference_norms(a, c), difference_norms(b, c)
    for i in range(3):
        assert ac[i] <= ab[i] + bc[i] + 1e-14


def test_difference_norms_mismatch():
    with pytest.raises(GridMismatchError):
        difference_norms(_run(0.5), _run(0.5, save_every=0.05))


def test_absorbing_ball_unforced():
    rec = _run(0.5, amplitude=0.1, t_end=2.0, dt=0.02, save_every=0.02)
    stats = absorbing_ball_stats(rec, 0.5, 0.0, R=math.sqrt(rec.energy[0]))
    assert stats.rho0 == 1.0
    assert stats.entered_at == 0.0 and stats.held
    assert stats.window_ok and stats.window_times.size > 0


def test_absorbing_ball_rejects_time_dependent_forcing():
    rec = TrajectoryRecord(meta={"forcing_constant": False})
    with pytest.raises(ValueError):
        absorbing_ball_stats(rec, 1.0, 1.0, 1.0)


def test_grad_window_pure_diffusion():
    rec = _run(0.5, linear_only=True)
    assert grad_bound_window(rec) == rec.t[-1]


def test_grad_window_finite_for_growing_gradients():
    rec = _run(None, amplitude=20.0, nu=0.01, t_end=1.0, dt=0.005, save_every=0.05, grid=Grid(16, 3))
    assert grad_bound_window(rec) < rec.t[-1]


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_fit_rate_exact_power(alpha):
    eps = [0.2, 0.1, 0.05, 0.025]
    fit = fit_rate(eps, [3.0 * e ** alpha for e in eps], floor=0.0)
    assert fit.slope == pytest.approx(alpha, rel=1e-12)
    assert fit.residual < 1e-12


def test_fit_rate_round_off_tail():
    fit = fit_rate([0.2, 0.1, 0.05], [1.0, 0.0, 0.0], floor=1e-12)
    assert fit.slope == math.inf
    fit = fit_rate([0.2, 0.1, 0.05, 0.025], [1.0, 0.5, 0.25, 1e-20], floor=1e-12)
    assert fit.slope == pytest.approx(1.0) and fit.used == 3
    assert math.isnan(fit_rate([0.2, 0.1], [0.0, 0.0], floor=1e-12).slope)


def test_trajectory_csv_round_trip(tmp_path):
    rec = _run(0.5)
    path = tmp_path / "t.csv"
    rec.to_csv(path)
    back = TrajectoryRecord.from_csv(path)
    assert back.csv_text() == rec.csv_text()
    assert path.read_text().splitlines()[0] == "t,energy,grad_energy,stokes_energy,force_work,dissipation,div_residual,calming_flux"


def test_report_serialisations_agree(tmp_path):
    rep = ExperimentReport("demo", params={"n": 8})
    rep.check("slope", 0.9, True, ">= 0.75")
    rep.check("monotone", 0, False, "nonincreasing")
    rep.add("aux", 1.5)
    assert not rep.passed and [r.param for r in rep.failures] == ["monotone"]
    rep.write(tmp_path)
    csv_lines = (tmp_path / "demo_report.csv").read_text().splitlines()
    assert csv_lines[0] == "experiment,param,value,tolerance,verdict"
    txt = (tmp_path / "demo_report.txt").read_text()
    for line in csv_lines[1:]:
        exp, param, value, tol, verdict = line.split(",")
        assert param in txt and verdict.upper() in txt and value in txt


def test_forced_run_energy_identity():
    f = ForcingSpec("single_mode", (0, 1, 0), (1.0, 0.0, 0.0), norm=1.0)
    coarse = _run(0.5, forcing=f, t_end=0.5, dt=0.01, save_every=0.05)
    fine = _run(0.5, forcing=f, t_end=0.5, dt=0.005, save_every=0.05)
    assert fine.force_work[-1] > 0
    ratio = np.abs(energy_residual(coarse)).max() / np.abs(energy_residual(fine)).max()
    assert 3.5 <= ratio <= 4.5
