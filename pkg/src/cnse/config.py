"""Flat ``key = value`` configuration files with dotted keys.

Example::

    # Taylor-Green decay, calmed rotational form
    grid.n = 32
    nu = 0.5
    calming.kind = rational1
    calming.epsilon = 0.1
    form = rotational
    t_end = 1.0
    dt = 1e-3
    initial.kind = taylor_green

Lines starting with ``#`` are comments; unknown keys are rejected with the
offending key and line number. Vector values are comma separated.
"""
from dataclasses import dataclass

from .calming import make_calming
from .errors import ConfigError
from .nonlinear import Form, NonlinearForm
from .spectral import Grid
from .timestepper import ForcingSpec, InitialSpec, SolverConfig

DEFAULTS = {
    "grid.n": "32",
    "grid.dims": "3",
    "nu": "0.5",
    "calming.kind": "rational1",
    "calming.epsilon": "0.1",
    "form": "rotational",
    "t_end": "1.0",
    "dt": "1e-3",
    "cfl": "0.5",
    "save_every": "0.01",
    "m_cutoff": "none",
    "forcing.kind": "zero",
    "forcing.k": "1,0,0",
    "forcing.amplitude": "0,1,0",
    "forcing.norm": "none",
    "forcing.path": "",
    "initial.kind": "taylor_green",
    "initial.variant": "3d",
    "initial.amplitude": "1.0",
    "initial.k_min": "1",
    "initial.k_max": "4",
    "initial.energy": "1.0",
    "initial.norm": "none",
    "initial.path": "",
    "seed": "none",
    "out.csv": "",
    "out.checkpoint": "",
    # experiment-level keys
    "ladder": "0.2,0.1,0.05,0.025",
    "kinds": "",
    "forms": "",
    "R": "none",
    "samples": "100000",
}


@dataclass
class Entry:
    value: str
    line: int | None = None
    source: str = "default"


def parse_text(text, source="<config>"):
    """Parse config text into ``{key: Entry}``; only explicitly set keys are returned."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}: unknown key", key=key, line=lineno)
        if key in entries:
            raise ConfigError(f"{source}: duplicate key (first set on line {entries[key].line})", key=key, line=lineno)
        entries[key] = Entry(value, lineno, source)
    return entries


def load(path=None, overrides=()):
    """Defaults, then the file at ``path``, then ``--set key=value`` overrides."""
    values = {k: Entry(v) for k, v in DEFAULTS.items()}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_text(fh.read(), source=str(path)))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError("unknown override key", key=key)
        values[key] = Entry(value, None, "--set")
    return Config(values)


class Config:
    """Typed accessors over raw entries; conversion errors name key and line."""

    def __init__(self, entries):
        self.entries = entries

    def raw(self, key):
        return self.entries[key].value

    def _fail(self, key, why):
        e = self.entries[key]
        raise ConfigError(f"{why}: {e.value!r} ({e.source})", key=key, line=e.line)

    def is_none(self, key):
        return self.raw(key).lower() in ("none", "")

    def float(self, key, allow_none=False):
        if allow_none and self.is_none(key):
            return None
        try:
            return float(self.raw(key))
        except ValueError:
            self._fail(key, "expected a number")

    def int(self, key, allow_none=False):
        if allow_none and self.is_none(key):
            return None
        try:
            return int(self.raw(key))
        except ValueError:
            self._fail(key, "expected an integer")

    def floats(self, key):
        try:
            return tuple(float(v) for v in self.raw(key).split(",") if v.strip())
        except ValueError:
            self._fail(key, "expected comma-separated numbers")

    def strings(self, key):
        return tuple(v.strip().lower() for v in self.raw(key).split(",") if v.strip())

    def str(self, key):
        return self.raw(key).strip()

    def wrap(self, key, fn):
        try:
            return fn()
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            self._fail(key, str(exc))

    def solver_config(self, **replace):
        """Build a SolverConfig; keyword overrides replace whole fields (harness use)."""
        grid = self.wrap("grid.n", lambda: Grid(self.int("grid.n"), self.int("grid.dims")))
        calming = self.wrap("calming.kind", lambda: make_calming(self.str("calming.kind"), self.float("calming.epsilon")))
        form = self.wrap("form", lambda: Form(self.str("form").lower()))
        k = self.floats("forcing.k")
        amp = self.floats("forcing.amplitude")
        if len(k) != 3 or any(int(x) != x for x in k):
            self._fail("forcing.k", "expected an integer triple")
        if len(amp) != 3:
            self._fail("forcing.amplitude", "expected three components")
        forcing = ForcingSpec(
            kind=self.str("forcing.kind").lower(),
            k=tuple(int(x) for x in k),
            amplitude=amp,
            norm=self.float("forcing.norm", allow_none=True),
            path=self.str("forcing.path") or None,
        )
        initial = InitialSpec(
            kind=self.str("initial.kind").lower(),
            variant=self.str("initial.variant").lower(),
            amplitude=self.float("initial.amplitude"),
            k_min=self.float("initial.k_min"),
            k_max=self.float("initial.k_max"),
            energy=self.float("initial.energy"),
            seed=self.int("seed", allow_none=True),
            norm=self.float("initial.norm", allow_none=True),
            path=self.str("initial.path") or None,
        )
        dt = "auto" if self.str("dt").lower() == "auto" else self.float("dt")
        fields = dict(
            grid=grid,
            nu=self.float("nu"),
            nonlinear=NonlinearForm(form, calming),
            t_end=self.float("t_end"),
            dt=dt,
            cfl=self.float("cfl"),
            forcing=forcing,
            initial=initial,
            save_every=self.float("save_every"),
            m_cutoff=self.float("m_cutoff", allow_none=True),
            out_csv=self.str("out.csv") or None,
            out_checkpoint=self.str("out.checkpoint") or None,
        )
        fields.update(replace)
        try:
            return SolverConfig(**fields)
        except ConfigError as exc:
            if exc.key in self.entries and exc.line is None and self.entries[exc.key].line is not None:
                msg = str(exc).rsplit(" (key", 1)[0]
                raise ConfigError(msg, key=exc.key, line=self.entries[exc.key].line) from exc
            raise
