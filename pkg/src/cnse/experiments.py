"""Experiments that check each analytical claim numerically.

Each ``cmd_*`` function takes an :class:`ExperimentSpec` and returns an
:class:`~cnse.diagnostics.ExperimentReport`; when ``spec.out`` is set the
report (CSV + text) and plot-ready tables are written there.
"""
import dataclasses
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import spectral
from .calming import CalmingFunction, CalmingKind
from .diagnostics import (
    ExperimentReport, absorbing_ball_stats, difference_norms, energy_residual,
    fit_rate, grad_bound_window,
)
from .errors import ConfigError
from .nonlinear import Form, NonlinearForm, resolution_consistency
from .timestepper import build_initial, run

log = logging.getLogger(__name__)

CALMCHECK_EPSILONS = (1.0, 0.1, 0.01)
LIPSCHITZ_SLACK = 1e-9
CONVERGENCE_SLACK = 1e-12
PARALLEL_TOL = 1e-12
# |q(r) x / r| is evaluated in floating point; saturated branches land within an ulp of the bound
BOUND_ULPS = 4
RATE_TOL = 0.25


@dataclass
class ExperimentSpec:
    command: str
    config: object  # cnse.config.Config
    out: Path | None = None

    @property
    def ladder(self):
        return self.config.floats("ladder")

    def validate_ladder(self, min_len=3, strict=True):
        lad = self.ladder
        if len(lad) < min_len:
            raise ConfigError(f"ladder needs at least {min_len} entries", key="ladder")
        if any(e <= 0 for e in lad):
            raise ConfigError("ladder entries must be positive", key="ladder")
        if strict and any(b >= a for a, b in zip(lad, lad[1:])):
            raise ConfigError("ladder must be strictly decreasing", key="ladder")
        return lad


def _finish(report, spec):
    if spec.out is not None:
        report.write(Path(spec.out))
    return report


# -- calming property suite ----------------------------------------------------

@dataclass
class PropertyResult:
    name: str
    passed: bool
    worst: float
    detail: str = ""


def _directions(rng, m):
    d = rng.standard_normal((3, m))
    return d / np.linalg.norm(d, axis=0)


def _radii(rng, eps, m):
    return 10.0 ** rng.uniform(-2.0, 4.0, m) / eps


def _samples(rng, eps, m):
    """Half uniform in the box [-1e6, 1e6]^3, half log-spread around 1/eps."""
    h = m // 2
    box = rng.uniform(-1e6, 1e6, (3, h))
    scaled = _directions(rng, m - h) * _radii(rng, eps, m - h)
    return np.concatenate([box, scaled], axis=1)


def _offender(x, i):
    return "x=(" + ", ".join(repr(float(v)) for v in x[:, i]) + ")"


def calming_property_suite(f, samples=100_000, seed=0):
    """Randomised check of the calming-function conditions for ``f``.

    ``f`` needs ``apply``, ``linf_bound``, ``convergence_exponents``,
    ``is_parallel`` and ``epsilon``. Returns a list of PropertyResult in
    the order lipschitz, linf_bound, convergence, parallelism,
    branch_continuity.
    """
    rng = np.random.default_rng(seed)
    eps = f.epsilon
    out = []

    # Lipschitz constant 1
    x = _samples(rng, eps, samples)
    near = x + _directions(rng, samples) * np.linalg.norm(x, axis=0) * 10.0 ** rng.uniform(-3, 0, samples)
    far = _samples(rng, eps, samples)
    y = np.where(rng.random(samples) < 0.5, near, far)
    lhs = np.linalg.norm(f.apply(x) - f.apply(y), axis=0)
    rhs = np.linalg.norm(x - y, axis=0)
    ratio = lhs / rhs
    i = int(np.argmax(ratio))
    out.append(PropertyResult("lipschitz", bool(np.all(lhs <= rhs * (1 + LIPSCHITZ_SLACK))), float(ratio[i]),
                              _offender(x, i)))

    # sup-norm bound
    x = _samples(rng, eps, samples)
    zx = f.apply(x)
    size = np.linalg.norm(zx, axis=0)
    bound = f.linf_bound()
    i = int(np.argmax(size))
    ceiling = bound * (1 + BOUND_ULPS * np.finfo(float).eps)
    out.append(PropertyResult("linf_bound", bool(np.all(size <= ceiling)), float(size[i] / bound), _offender(x, i)))

    # pointwise approximation of the identity
    C, alpha, beta = f.convergence_exponents()
    r = np.linalg.norm(x, axis=0)
    gap = np.linalg.norm(zx - x, axis=0)
    allowed = C * eps ** alpha * r ** beta
    ratio = gap / allowed
    i = int(np.argmax(ratio))
    out.append(PropertyResult("convergence", bool(np.all(gap <= allowed * (1 + CONVERGENCE_SLACK))),
                              float(ratio[i]), _offender(x, i)))

    # parallelism: holds for parallel kinds, a known counterexample otherwise
    if f.is_parallel():
        cross = np.linalg.norm(np.cross(zx, x, axis=0), axis=0)
        scale = r * size
        ratio = np.divide(cross, scale, out=np.zeros_like(cross), where=scale > 0)
        i = int(np.argmax(ratio))
        out.append(PropertyResult("parallelism", bool(np.all(cross <= PARALLEL_TOL * scale)), float(ratio[i]),
                                  _offender(x, i)))
    else:
        xc = np.array([1.0, 2.0, 0.0]) / eps
        zc = f.apply(xc)
        rel = float(np.linalg.norm(np.cross(zc, xc)) / (np.linalg.norm(zc) * np.linalg.norm(xc)))
        out.append(PropertyResult("parallelism", rel > 1e-3, rel,
                                  "not parallel (expected): counterexample x=(1,2,0)/eps"))

    # continuity across the branch radii 1/eps and 2/eps
    worst = 0.0
    ok = True
    for rb in (1.0 / eps, 2.0 / eps):
        for d in _directions(rng, 64).T:
            lo, hi = rb * (1 - 1e-9), rb * (1 + 1e-9)
            jump = np.linalg.norm(f.apply(d * hi) - f.apply(d * lo))
            worst = max(worst, jump / (hi - lo))
            ok &= jump <= (hi - lo) * (1 + 1e-6)
    detail = "radial jump / step at r=1/eps, 2/eps"
    if getattr(f, "kind", None) is CalmingKind.SMOOTH_TRUNC:
        # both adjacent branch formulas agree at each breakpoint
        left = [1.0 / eps, -0.5 * eps * (2.0 / eps - 2.0 / eps) ** 2 + 1.5 / eps]
        right = [-0.5 * eps * (1.0 / eps - 2.0 / eps) ** 2 + 1.5 / eps, 1.5 / eps]
        for a, b in zip(left, right):
            ok &= abs(a - b) <= 1e-12 * abs(a)
        detail += "; q branches agree at breakpoints"
    out.append(PropertyResult("branch_continuity", bool(ok), worst, detail))
    return out


def cmd_calmcheck(spec):
    samples = spec.config.int("samples")
    report = ExperimentReport("calmcheck", params={"samples": samples, "epsilons": CALMCHECK_EPSILONS})
    for kind in CalmingKind:
        for eps in CALMCHECK_EPSILONS:
            f = CalmingFunction(kind, eps)
            for res in calming_property_suite(f, samples=samples, seed=0):
                tol = {
                    "lipschitz": f"ratio <= 1 + {LIPSCHITZ_SLACK:g}",
                    "linf_bound": f"|zeta| <= {f.linf_bound()!r} (+{BOUND_ULPS} ulp)",
                    "convergence": f"ratio <= 1 + {CONVERGENCE_SLACK:g}",
                    "parallelism": f"|zeta x x| <= {PARALLEL_TOL:g} |x||zeta|" if f.is_parallel()
                    else "expected non-parallel",
                    "branch_continuity": "jump <= step",
                }[res.name]
                report.check(f"{kind.value}/eps={eps:g}/{res.name}", res.worst, res.passed, tol)
                if not res.passed:
                    log.error("calmcheck %s eps=%g %s failed at %s", kind.value, eps, res.name, res.detail)
                    report.notes.append(f"{kind.value} eps={eps:g} {res.name} failed at {res.detail}")
    return _finish(report, spec)


# -- solver experiments --------------------------------------------------------

def _with(cfg, **kw):
    return dataclasses.replace(cfg, out_csv=None, out_checkpoint=None, **kw)


def _calmed(cfg, form, kind, eps):
    cal = None if kind is None else CalmingFunction(kind, eps)
    return _with(cfg, nonlinear=NonlinearForm(form, cal))


def _kinds(conf, base):
    names = conf.strings("kinds")
    if names:
        return [CalmingKind(n) for n in names]
    if base.nonlinear.calming is None:
        raise ConfigError("experiment needs a calming kind", key="calming.kind")
    return [base.nonlinear.calming.kind]


def _forms(conf, base):
    names = conf.strings("forms")
    return [Form(n) for n in names] if names else [base.nonlinear.form]


def _write_trajectory(spec, rec, stem):
    if spec.out is not None:
        Path(spec.out).mkdir(parents=True, exist_ok=True)
        rec.to_csv(Path(spec.out) / f"{stem}.csv")


def cmd_run(spec):
    """Single simulation; returns the TrajectoryRecord (writes out.csv / out.checkpoint)."""
    cfg = spec.config.solver_config()
    out = Path(spec.out) if spec.out is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    csv_name = cfg.out_csv or ("trajectory.csv" if out is not None else None)
    resolve = (lambda p: str(out / p) if out is not None and p and not Path(p).is_absolute() else p)
    cfg = dataclasses.replace(cfg, out_csv=resolve(csv_name), out_checkpoint=resolve(cfg.out_checkpoint))
    return run(cfg)


def cmd_converge(spec):
    """Calmed solutions approach the NSE solution at rate eps^alpha in L^inf(V)."""
    conf = spec.config
    base = conf.solver_config()
    ladder = spec.validate_ladder()
    form = base.nonlinear.form
    report = ExperimentReport("converge", params={
        "form": form.value, "n": base.grid.n, "dims": base.grid.dims, "nu": base.nu,
        "t_end": base.t_end, "dt": base.dt, "save_every": base.save_every,
        "ladder": ",".join(f"{e:g}" for e in ladder),
    })
    ref = run(_calmed(base, form, None, None), keep_states=True)
    _write_trajectory(spec, ref, "converge_reference")
    window = grad_bound_window(ref)
    report.add("reference/grad_window_t_max", window, "empirical proxy for the NSE existence interval")
    report.check("reference/horizon_inside_window", base.t_end, base.t_end <= window + 1e-12, f"t_end <= {window!r}")
    floor = 1e-11 * math.sqrt(ref.array("grad_energy").max())
    u0 = build_initial(base)
    for kind in _kinds(conf, base):
        C, alpha, beta = CalmingFunction(kind, 1.0).convergence_exponents()
        errs = []
        rows = []
        for eps in ladder:
            rec = run(_calmed(base, form, kind, eps), keep_states=True)
            h, v, l2v = difference_norms(ref, rec)
            errs.append(v)
            rows.append((eps, h, v, l2v))
            report.add(f"{kind.value}/eps={eps:g}/linf_V", v)
        report.tables[f"converge_{kind.value}"] = (("epsilon", "linf_H", "linf_V", "l2_V"), rows)
        fit = fit_rate(ladder, errs, floor)
        if fit.note:
            report.notes.append(f"{kind.value}: {fit.note} (floor {floor:.3g})")
        if math.isnan(fit.slope):
            report.add(f"{kind.value}/slope", fit.slope, f">= {alpha - RATE_TOL:g}", "trivial")
        else:
            report.check(f"{kind.value}/slope", fit.slope, fit.slope >= alpha - RATE_TOL, f">= {alpha - RATE_TOL:g}")
        report.add(f"{kind.value}/fit_residual", fit.residual)
        for (e1, r1), (e2, r2) in zip(zip(ladder, errs), zip(ladder[1:], errs[1:])):
            if r1 > floor and r2 > floor:
                report.add(f"{kind.value}/local_slope({e1:g},{e2:g})", math.log(r1 / r2) / math.log(e1 / e2))
        mono = all(b <= a or b <= floor for a, b in zip(errs, errs[1:]))
        report.check(f"{kind.value}/monotone", int(mono), mono, "errors nonincreasing as eps decreases")
        alias = resolution_consistency(NonlinearForm(form, CalmingFunction(kind, ladder[0])), u0)
        report.add(f"{kind.value}/aliasing_gap_t0", alias, "relative n vs 2n gap of B at t=0, eps_max")
    return _finish(report, spec)


def cmd_cauchy(spec):
    """Consecutive ladder pairs (eps, eps/2) get closer in L^inf(H) and L^2(V)."""
    conf = spec.config
    base = conf.solver_config()
    ladder = spec.validate_ladder(min_len=2, strict=False)
    kind = _kinds(conf, base)[0]
    report = ExperimentReport("cauchy", params={
        "kind": kind.value, "n": base.grid.n, "nu": base.nu, "t_end": base.t_end,
        "ladder": ",".join(f"{e:g}" for e in ladder),
    })
    for form in _forms(conf, base):
        cache = {}
        for eps in ladder:
            if eps not in cache:
                cache[eps] = run(_calmed(base, form, kind, eps), keep_states=True)
        windows = [grad_bound_window(cache[e]) for e in ladder]
        report.add(f"{form.value}/grad_window_min", min(windows), "shared empirical window")
        pairs = []
        for a, b in zip(ladder, ladder[1:]):
            h, v, l2v = difference_norms(cache[a], cache[b])
            pairs.append((a, b, h, v, l2v))
            report.add(f"{form.value}/pair({a:g},{b:g})/linf_H", h)
            report.add(f"{form.value}/pair({a:g},{b:g})/l2_V", l2v)
        report.tables[f"cauchy_{form.value}"] = (("eps_a", "eps_b", "linf_H", "linf_V", "l2_V"), pairs)
        hs = [p[2] for p in pairs]
        vs = [p[4] for p in pairs]
        if all(x == 0 for x in hs + vs):
            report.add(f"{form.value}/cauchy_trend", 0, "strictly decreasing", "trivial")
            continue
        dec_h = all(b < a for a, b in zip(hs, hs[1:]))
        dec_v = all(b < a for a, b in zip(vs, vs[1:]))
        report.check(f"{form.value}/linf_H_decreasing", int(dec_h), dec_h, "strictly decreasing")
        report.check(f"{form.value}/l2_V_decreasing", int(dec_v), dec_v, "strictly decreasing")
    return _finish(report, spec)


ENERGY_RESIDUAL_TOL = 1e-6
RICHARDSON = (3.5, 4.5)
CONTRAST_FACTOR = 10.0
FLUX_MATCH = 0.05


def cmd_energy(spec):
    """Energy identity for the calmed rotational form; advective form as contrast."""
    conf = spec.config
    base = conf.solver_config()
    kind = _kinds(conf, base)[0]
    eps = base.nonlinear.calming.epsilon if base.nonlinear.calming else conf.float("calming.epsilon")
    cal = CalmingFunction(kind, eps)
    if base.dt == "auto":
        raise ConfigError("energy experiment needs an explicit dt", key="dt")
    dts = (float(base.dt), float(base.dt) / 2)
    report = ExperimentReport("energy", params={
        "kind": kind.value, "epsilon": eps, "n": base.grid.n, "nu": base.nu, "t_end": base.t_end,
        "dt": f"{dts[0]:g},{dts[1]:g}", "forcing": base.forcing.kind,
    })
    arms = {}
    for form in (Form.ROTATIONAL, Form.ADVECTIVE):
        for dt in dts:
            rec = run(_calmed(_with(base, dt=dt), form, kind, eps))
            _write_trajectory(spec, rec, f"energy_{form.value}_dt{dt:g}")
            arms[form, dt] = rec
    e0 = arms[Form.ROTATIONAL, dts[1]].energy[0]
    res = {k: float(np.abs(energy_residual(r)).max()) for k, r in arms.items()}
    for (form, dt), v in res.items():
        report.add(f"{form.value}/dt={dt:g}/max_residual", v)
    rot_c, rot_f = res[Form.ROTATIONAL, dts[0]], res[Form.ROTATIONAL, dts[1]]
    ratio = rot_c / rot_f if rot_f > 0 else math.inf
    report.tables["energy_residual"] = (
        ("form", "dt", "t", "residual", "minus_2_flux_work"),
        [(f.value, dt, t, R, -2 * fw)
         for (f, dt), r in arms.items()
         for t, R, fw in zip(r.t, energy_residual(r), r.flux_work)],
    )
    if cal.is_parallel():
        report.check("rotational/residual_fine", rot_f / e0 if e0 else 0.0, rot_f <= ENERGY_RESIDUAL_TOL * e0,
                     f"<= {ENERGY_RESIDUAL_TOL:g} ||u0||^2 (relative)")
        report.check("rotational/richardson_ratio", ratio, RICHARDSON[0] <= ratio <= RICHARDSON[1],
                     f"in [{RICHARDSON[0]}, {RICHARDSON[1]}]")
    else:
        report.add("rotational/richardson_ratio", ratio, "no O(dt^2) expected")
        report.add("rotational/condition4", "not satisfied", "parallelism fails", "flag")
        report.notes.append("condition 4 not satisfied: zeta is not parallel to u, the rotational flux does not vanish")
    adv = arms[Form.ADVECTIVE, dts[1]]
    adv_f = res[Form.ADVECTIVE, dts[1]]
    contrast = adv_f / rot_f if rot_f > 0 else math.inf
    report.check("advective/contrast", contrast, contrast >= CONTRAST_FACTOR, f">= {CONTRAST_FACTOR:g}x rotational")
    mismatch = float(np.abs(energy_residual(adv) + 2 * adv.array("flux_work")).max())
    rel = mismatch / adv_f if adv_f > 0 else math.inf
    report.check("advective/flux_match", rel, rel <= FLUX_MATCH, f"|R + 2 int flux| <= {FLUX_MATCH:g} max|R|")
    return _finish(report, spec)


def cmd_attractor(spec):
    """Entry into and persistence in the absorbing ball of radius rho0."""
    conf = spec.config
    base = conf.solver_config()
    cal = base.nonlinear.calming
    report = ExperimentReport("attractor", params={
        "form": base.nonlinear.form.value, "calming": base.nonlinear.label,
        "nu": base.nu, "t_end": base.t_end, "save_every": base.save_every,
    })
    if base.nonlinear.form is not Form.ROTATIONAL or cal is None or not cal.is_parallel():
        report.notes.append("absorbing-ball theorem assumes rotational form with parallel calming")
    rec = run(base)
    _write_trajectory(spec, rec, "attractor_trajectory")
    # prescribed norms take precedence so rho0 and t0 come out in closed form
    f_norm = base.forcing.norm if base.forcing.norm is not None else rec.meta["f_norm"]
    if base.forcing.kind == "zero":
        f_norm = 0.0
    R = conf.float("R", allow_none=True)
    if R is None:
        R = base.initial.norm if base.initial.norm is not None else rec.meta["u0_norm"]
    report.add("f_norm_measured", rec.meta["f_norm"])
    report.add("u0_norm_measured", rec.meta["u0_norm"])
    stats = absorbing_ball_stats(rec, base.nu, f_norm, R)
    report.add("f_norm", f_norm)
    report.add("R", R)
    report.add("rho0", stats.rho0, "1 + ||f||^2 / nu")
    report.add("t0", stats.t0, "ln(1 + R^2) / nu")
    report.add("rho1", stats.rho1, "rho0 / nu + ||f||^2 / nu^2")
    report.check("horizon", base.t_end, base.t_end >= 5 * stats.t0, f">= 5 t0 = {5 * stats.t0!r}")
    entered = stats.entered_at
    report.check("entered_at", math.nan if entered is None else entered,
                 entered is not None and entered <= stats.t0 + base.save_every + 1e-12,
                 f"<= t0 + save_every = {stats.t0 + base.save_every!r}")
    report.check("held", int(stats.held), stats.held, "energy < rho0 after entry")
    wmax = float(stats.window_enstrophy.max()) if stats.window_enstrophy.size else math.nan
    report.check("window_enstrophy_max", wmax, stats.window_enstrophy.size > 0 and stats.window_ok,
                 f"int_(t-1)^t ||grad u||^2 <= rho1 = {stats.rho1!r}")
    report.tables["attractor_window"] = (("t", "window_enstrophy"),
                                         list(zip(stats.window_times, stats.window_enstrophy)))
    return _finish(report, spec)


COMMANDS = {
    "calmcheck": cmd_calmcheck,
    "run": cmd_run,
    "converge": cmd_converge,
    "cauchy": cmd_cauchy,
    "energy": cmd_energy,
    "attractor": cmd_attractor,
}
