"""Scalar functionals along and between trajectories, and report containers."""
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import spectral
from .errors import GridMismatchError

TRAJECTORY_COLUMNS = (
    "t", "energy", "grad_energy", "stokes_energy", "force_work",
    "dissipation", "div_residual", "calming_flux",
)
REPORT_COLUMNS = ("experiment", "param", "value", "tolerance", "verdict")


def _fmt(x):
    """Shortest repr that round-trips a float64."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


@dataclass
class TrajectoryRecord:
    """Append-only time series of diagnostics.

    ``energy`` is ||u||^2, ``dissipation`` the running 2 nu int ||grad u||^2,
    ``force_work`` the running int <f, u> and ``flux_work`` the running
    int <B(zeta(u), u), u>; all time integrals use the trapezoidal rule on
    every step, not only between samples. ``flux_work`` and ``states`` are
    kept in memory only and are not part of the CSV schema.
    """

    t: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    grad_energy: list = field(default_factory=list)
    stokes_energy: list = field(default_factory=list)
    force_work: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    div_residual: list = field(default_factory=list)
    calming_flux: list = field(default_factory=list)
    flux_work: list = field(default_factory=list)
    states: list | None = None
    meta: dict = field(default_factory=dict)

    def append(self, **values):
        for name in TRAJECTORY_COLUMNS + ("flux_work",):
            getattr(self, name).append(float(values.get(name, 0.0)))
        if self.states is not None and "state" in values:
            self.states.append(values["state"])

    def __len__(self):
        return len(self.t)

    def array(self, name):
        return np.asarray(getattr(self, name), dtype=np.float64)

    @property
    def times(self):
        return self.array("t")

    def csv_text(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in zip(*(getattr(self, c) for c in TRAJECTORY_COLUMNS)):
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="ascii") as fh:
            fh.write(self.csv_text())

    @classmethod
    def from_csv(cls, path):
        rec = cls()
        with open(path, newline="", encoding="ascii") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != TRAJECTORY_COLUMNS:
                raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
            for row in reader:
                rec.append(**{k: float(v) for k, v in row.items()})
        return rec


@dataclass
class ReportRow:
    experiment: str
    param: str
    value: object
    tolerance: str
    verdict: str


@dataclass
class ExperimentReport:
    """Per-experiment verification output.

    ``rows`` carry (experiment, param, value, tolerance, verdict); rows whose
    verdict is ``info`` are measurements without a pass/fail claim.
    ``tables`` hold plot-ready series keyed by file stem.
    """

    name: str
    params: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def add(self, param, value, tolerance="", verdict="info"):
        if isinstance(verdict, bool):
            verdict = "pass" if verdict else "fail"
        self.rows.append(ReportRow(self.name, param, value, tolerance, verdict))
        return verdict

    def check(self, param, value, ok, tolerance):
        return self.add(param, value, tolerance, bool(ok))

    @property
    def passed(self):
        return all(r.verdict != "fail" for r in self.rows)

    @property
    def failures(self):
        return [r for r in self.rows if r.verdict == "fail"]

    def csv_text(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in self.rows:
            writer.writerow([r.experiment, r.param, _fmt(r.value), r.tolerance, r.verdict])
        return buf.getvalue()

    def text(self):
        lines = [f"== {self.name} =="]
        for k, v in self.params.items():
            lines.append(f"  {k} = {_fmt(v)}")
        width = max([len(r.param) for r in self.rows] + [5])
        for r in self.rows:
            tol = f"  [{r.tolerance}]" if r.tolerance else ""
            lines.append(f"  {r.verdict.upper():7s} {r.param:<{width}}  {_fmt(r.value)}{tol}")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines) + "\n"

    def write(self, outdir):
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"{self.name}_report.csv").write_text(self.csv_text(), encoding="ascii")
        (outdir / f"{self.name}_report.txt").write_text(self.text(), encoding="utf-8")
        for stem, (header, rows) in self.tables.items():
            with open(outdir / f"{stem}.csv", "w", newline="", encoding="ascii") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([_fmt(v) for v in row])


# -- functionals ---------------------------------------------------------------

def energy_residual(tr):
    """R(t_i) = ||u(t_i)||^2 + 2 nu int ||grad u||^2 - ||u_0||^2 - 2 int <f, u>."""
    e = tr.array("energy")
    if e.size == 0:
        return e
    return e + tr.array("dissipation") - e[0] - 2.0 * tr.array("force_work")


def difference_norms(a, b):
    """(max_t ||a-b||, max_t ||grad(a-b)||, (int ||grad(a-b)||^2 dt)^(1/2)) over samples."""
    if a.states is None or b.states is None:
        raise ValueError("difference_norms needs records kept with states")
    ta, tb = a.times, b.times
    if ta.shape != tb.shape or not np.array_equal(ta, tb):
        raise GridMismatchError("records have different sample times")
    h = np.empty(len(ta))
    v = np.empty(len(ta))
    for i, (sa, sb) in enumerate(zip(a.states, b.states)):
        if sa.grid != sb.grid:
            raise GridMismatchError(f"grid mismatch at sample {i}")
        d = sa.coeffs - sb.coeffs
        h[i] = spectral.energy_coeffs(d, sa.grid)
        v[i] = spectral.energy_coeffs(d, sa.grid, 1)
    l2v = math.sqrt(float(trapezoid(v, ta))) if len(ta) > 1 else 0.0
    return math.sqrt(h.max()), math.sqrt(v.max()), l2v


@dataclass
class AbsorbingBallStats:
    rho0: float
    rho1: float
    t0: float
    entered_at: float | None
    held: bool
    window_enstrophy: np.ndarray
    window_times: np.ndarray

    @property
    def window_ok(self):
        return bool(np.all(self.window_enstrophy <= self.rho1))


def absorbing_radius(nu, f_norm, lambda1=1.0):
    return 1.0 + f_norm ** 2 / (nu * lambda1)


def absorbing_time(nu, R, lambda1=1.0):
    return math.log1p(R ** 2) / (nu * lambda1)


def enstrophy_window_bound(nu, f_norm, lambda1=1.0):
    return absorbing_radius(nu, f_norm, lambda1) / nu + f_norm ** 2 / (nu ** 2 * lambda1)


def absorbing_ball_stats(tr, nu, f_norm, R, lambda1=1.0):
    """Entry/hold of the energy ball of radius rho0 and unit-window enstrophy vs rho1.

    The window integral int_{t-1}^t ||grad u||^2 is read from differences of
    the running dissipation at samples t and t - 1 (both must be samples),
    for every sample t >= t0 + 1.
    """
    if not tr.meta.get("forcing_constant", True):
        raise ValueError("absorbing-ball statistics need time-independent forcing")
    rho0 = absorbing_radius(nu, f_norm, lambda1)
    rho1 = enstrophy_window_bound(nu, f_norm, lambda1)
    t0 = absorbing_time(nu, R, lambda1)
    t = tr.times
    e = tr.array("energy")
    inside = e < rho0
    entered_at = None
    held = False
    if inside.any():
        first = int(np.argmax(inside))
        entered_at = float(t[first])
        held = bool(inside[first:].all())
    diss = tr.array("dissipation")
    wt, we = [], []
    for i, ti in enumerate(t):
        if ti < t0 + 1.0 - 1e-12:
            continue
        j = np.flatnonzero(np.isclose(t, ti - 1.0, rtol=0.0, atol=1e-9))
        if j.size:
            wt.append(ti)
            we.append((diss[i] - diss[j[0]]) / (2.0 * nu))
    return AbsorbingBallStats(rho0, rho1, t0, entered_at, held, np.array(we), np.array(wt))


def grad_bound_window(tr):
    """Largest sample time t_max with ||grad u||^2 <= 2 ||grad u_0||^2 on [0, t_max]."""
    g = tr.array("grad_energy")
    t = tr.times
    if g.size == 0 or g[0] <= 0:
        raise ValueError("grad_bound_window needs a nonzero initial gradient")
    ok = g <= 2.0 * g[0]
    if ok.all():
        return float(t[-1])
    return float(t[int(np.argmin(ok)) - 1])


@dataclass
class RateFit:
    slope: float
    intercept: float
    residual: float
    used: int
    note: str = ""


def fit_rate(eps, errors, floor):
    """Least-squares slope of log(error) against log(eps).

    Points with error <= ``floor`` are round-off level and excluded. If
    exactly one point stays above the floor and every smaller eps sits at
    the floor, the error vanishes faster than any power and the slope is
    reported as +inf.
    """
    eps = np.asarray(eps, dtype=float)
    err = np.asarray(errors, dtype=float)
    keep = err > floor
    if keep.sum() >= 2:
        x, y = np.log(eps[keep]), np.log(err[keep])
        A = np.vstack([x, np.ones_like(x)]).T
        coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = float(np.sqrt(res[0] / keep.sum())) if res.size else 0.0
        note = "" if keep.all() else f"{int((~keep).sum())} round-off point(s) excluded"
        return RateFit(float(coef[0]), float(coef[1]), resid, int(keep.sum()), note)
    if keep.sum() == 1:
        above = eps[keep][0]
        if np.all(eps[~keep] < above):
            return RateFit(math.inf, math.nan, 0.0, 1, "error at round-off below the largest eps")
    return RateFit(math.nan, math.nan, math.nan, int(keep.sum()), "no error above round-off")
