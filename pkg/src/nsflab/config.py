"""Run configuration: a flat sectioned key-value format and its validation.

Example::

    [grid]
    n = 64
    L = 6.283185307179586

    [coupling]
    c0 = 2.0
    term = amplitude=1.0 k=1 phases=0.0

    [initial]
    family = random
    seed = 3

    [solver]
    eps = 0.1
    T = 0.5

Lines are ``key = value``; ``#`` starts a comment.  ``term`` may repeat.
Lists are comma separated.  Errors are collected with their line numbers
and raised together as one :class:`ConfigError`.
"""

import inspect
import math
import re
from dataclasses import dataclass, field, replace

from . import coupling as cpl
from . import initial as init
from .errors import ConfigError, CouplingConfigError, NonPositiveCoupling
from .flow import SCHEMES, StepControl
from .grid import TorusGrid

MODES = ("projected", "ambient")
SECTIONS = ("grid", "coupling", "initial", "solver", "output")
_INT = re.compile(r"[+-]?\d+$")


@dataclass(frozen=True)
class InitialSpec:
    family: str = "equator"
    params: tuple = ()  # sorted (name, value) pairs
    scale: float = 1.0

    def kwargs(self):
        return dict(self.params)


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    csv: str = "diagnostics.csv"
    manifest: str = "manifest.json"
    snapshots: bool = True


@dataclass(frozen=True)
class RunConfig:
    grid: TorusGrid
    coupling: cpl.CouplingSpec
    initial: InitialSpec
    T: float
    eps: float = 0.0
    scheme: str = "rk4"
    dt: float = None
    cfl: float = 0.1
    sample_interval: int = 1
    kmax: int = 2
    mode: str = "projected"
    tube_radius: float = 0.5
    residuals: bool = False
    output: OutputSpec = field(default_factory=OutputSpec)

    def control(self):
        delta, eta = cpl.bounds(self.coupling, self.grid)
        if self.dt is not None:
            return StepControl(self.dt, 1.0, self.scheme)
        return StepControl.default(self.grid, eta, self.eps, self.cfl, self.scheme)

    def initial_field(self):
        u = init.build(self.grid, self.initial.family, **self.initial.kwargs())
        return self.initial.scale * u if self.mode == "ambient" else u

    def with_(self, **changes):
        return replace(self, **changes)


# -- value parsing -----------------------------------------------------------------


def _scalar(text):
    text = text.strip()
    if _INT.match(text):
        return int(text)
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return float(text)
    except ValueError:
        return text


def _value(text):
    if "," in text:
        return tuple(_scalar(p) for p in text.split(",") if p.strip())
    return _scalar(text)


def _number(v, what):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"{what} must be a number, got {v!r}")
    return float(v)


def _integer(v, what):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"{what} must be an integer, got {v!r}")
    return v


def _flag(v, what):
    if not isinstance(v, bool):
        raise ValueError(f"{what} must be true or false, got {v!r}")
    return v


def _numbers(v, what):
    items = v if isinstance(v, tuple) else (v,)
    return tuple(_number(x, what) for x in items)


def _integers(v, what):
    items = v if isinstance(v, tuple) else (v,)
    return tuple(_integer(x, what) for x in items)


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v) + ("," if len(v) == 1 else "")
    if isinstance(v, float):
        return repr(v)
    return str(v)


# -- reading ---------------------------------------------------------------------------


def _read_sections(text, errors):
    """{section: {key: (lineno, raw)}} plus the list of term lines."""
    sections = {name: {} for name in SECTIONS}
    terms = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in sections:
                errors.append((lineno, f"unknown section [{current}]"))
                current = "__skip__"
            continue
        if current is None:
            errors.append((lineno, "key outside of any section"))
            continue
        if current == "__skip__":
            continue
        if "=" not in line:
            errors.append((lineno, f"expected 'key = value', got {line!r}"))
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if current == "coupling" and key == "term":
            terms.append((lineno, value))
        elif key in sections[current]:
            errors.append((lineno, f"duplicate key {key!r} in [{current}]"))
        else:
            sections[current][key] = (lineno, value)
    return sections, terms


def _parse_term(lineno, text, errors):
    fields = {}
    for part in text.split():
        if "=" not in part:
            errors.append((lineno, f"term fields are name=value, got {part!r}"))
            return None
        k, v = part.split("=", 1)
        fields[k.strip()] = _value(v)
    unknown = set(fields) - {"amplitude", "k", "phases", "omega", "psi"}
    if unknown:
        errors.append((lineno, f"unknown term field(s) {sorted(unknown)}"))
        return None
    missing = {"amplitude", "k"} - set(fields)
    if missing:
        errors.append((lineno, f"term is missing {sorted(missing)}"))
        return None
    try:
        return cpl.CouplingTerm(
            _number(fields["amplitude"], "amplitude"),
            _integers(fields["k"], "k"),
            _numbers(fields["phases"], "phases") if "phases" in fields else (),
            _number(fields.get("omega", 0.0), "omega"),
            _number(fields.get("psi", 0.0), "psi"),
        )
    except ValueError as exc:
        errors.append((lineno, str(exc)))
        return None


class _Section:
    """Typed accessor recording errors against line numbers."""

    def __init__(self, name, entries, errors):
        self.name, self.entries, self.errors = name, dict(entries), errors
        self.seen = set()

    def line(self, key):
        return self.entries.get(key, (None, None))[0]

    def get(self, key, convert, default=None, required=False):
        self.seen.add(key)
        if key not in self.entries:
            if required:
                self.errors.append((None, f"missing required key {key!r} in [{self.name}]"))
            return default
        lineno, raw = self.entries[key]
        try:
            return convert(_value(raw), key)
        except ValueError as exc:
            self.errors.append((lineno, str(exc)))
            return default

    def check(self, ok, key, message):
        if not ok:
            self.errors.append((self.line(key), message))
        return ok

    def unknown(self, allowed=()):
        for key, (lineno, _) in self.entries.items():
            if key not in self.seen and key not in allowed:
                self.errors.append((lineno, f"unknown key {key!r} in [{self.name}]"))


def _family_params(family):
    sig = inspect.signature(init.FAMILIES[family])
    return [name for name in sig.parameters if name != "grid"]


def parse_config(text):
    """Parse and validate; raises ConfigError listing every problem found."""
    errors = []
    sections, term_lines = _read_sections(text, errors)
    sec = {name: _Section(name, sections[name], errors) for name in SECTIONS}

    g = sec["grid"]
    n = g.get("n", _integers, required=True)
    L = g.get("L", _numbers, (2.0 * math.pi,))
    g.unknown()
    grid = None
    if n is not None:
        if len(L) == 1:
            L = L * len(n)
        try:
            grid = TorusGrid(n, L)
        except ValueError as exc:
            errors.append((g.line("n"), str(exc)))

    c = sec["coupling"]
    c0 = c.get("c0", _number, 1.0)
    horizon = c.get("horizon", _number, 1.0)
    c.unknown()
    terms = [t for t in (_parse_term(ln, txt, errors) for ln, txt in term_lines)]
    spec = None
    positivity = False
    if c.check(horizon > 0, "horizon", f"horizon must be positive, got {horizon}") and None not in terms:
        spec = cpl.CouplingSpec(c0, tuple(terms), horizon)
        if grid is not None:
            bad = [ln for (ln, _), t in zip(term_lines, terms) if len(t.k) != grid.m]
            for ln in bad:
                errors.append((ln, f"term needs {grid.m} wave number(s)"))
            if not bad:
                try:
                    cpl.validate(spec, grid)
                except NonPositiveCoupling as exc:
                    idx = cpl.offending_term(spec, grid, 0.0 if spec.is_static else _argmin_time(spec, grid))
                    ln = term_lines[idx][0] if idx is not None else c.line("c0")
                    errors.append((ln, str(exc)))
                    positivity = True

    i = sec["initial"]
    family = i.get("family", lambda v, k: str(v), "equator")
    scale = i.get("scale", _number, 1.0)
    params = []
    if family not in init.FAMILIES:
        errors.append((i.line("family"), f"unknown family {family!r}; expected one of {sorted(init.FAMILIES)}"))
    else:
        for name in _family_params(family):
            if name in i.entries:
                params.append((name, i.get(name, lambda v, k: v)))
        i.unknown()
    initial = InitialSpec(family, tuple(sorted(params)), scale)

    s = sec["solver"]
    eps = s.get("eps", _number, 0.0)
    scheme = s.get("scheme", lambda v, k: str(v), "rk4")
    dt = s.get("dt", _number, None)
    cfl = s.get("cfl", _number, 0.1)
    T = s.get("T", _number, None, required=True)
    sample_interval = s.get("sample_interval", _integer, 1)
    kmax = s.get("kmax", _integer, 2)
    mode = s.get("mode", lambda v, k: str(v), "projected")
    tube_radius = s.get("tube_radius", _number, 0.5)
    residuals = s.get("residuals", _flag, False)
    s.unknown()
    s.check(0.0 <= eps < 1.0, "eps", f"eps must lie in [0, 1), got {eps}")
    s.check(scheme in SCHEMES, "scheme", f"scheme must be one of {SCHEMES}, got {scheme!r}")
    s.check(0.0 < cfl <= 1.0, "cfl", f"cfl must lie in (0, 1], got {cfl}")
    s.check(sample_interval >= 1, "sample_interval", "sample_interval must be >= 1")
    s.check(1 <= kmax <= 3, "kmax", f"kmax must lie in 1..3, got {kmax}")
    s.check(mode in MODES, "mode", f"mode must be one of {MODES}, got {mode!r}")
    s.check(tube_radius > 0, "tube_radius", f"tube_radius must be positive, got {tube_radius}")
    if T is not None:
        if s.check(T >= 0, "T", f"T must be non-negative, got {T}") and spec is not None:
            s.check(T <= spec.horizon, "T", f"T = {T} exceeds the coupling horizon {spec.horizon}")
    if dt is not None and s.check(dt > 0, "dt", f"dt must be positive, got {dt}"):
        if grid is not None and spec is not None and not positivity and 0 <= eps < 1:
            limit = StepControl.budget(grid, cpl.bounds(spec, grid)[1], eps)
            s.check(dt <= limit, "dt", f"dt = {dt} exceeds the stability budget {limit:.6g}")
    if mode == "ambient":
        i.check(1.0 <= scale < 1.0 + 0.5 * tube_radius, "scale",
                f"ambient scale must lie in [1, 1 + d/2) = [1, {1.0 + 0.5 * tube_radius}), got {scale}")
    else:
        i.check(scale == 1.0, "scale", "an off-sphere scale needs mode = ambient")

    o = sec["output"]
    output = OutputSpec(
        o.get("dir", lambda v, k: str(v), "out"),
        o.get("csv", lambda v, k: str(v), "diagnostics.csv"),
        o.get("manifest", lambda v, k: str(v), "manifest.json"),
        o.get("snapshots", _flag, True),
    )
    o.unknown()

    if errors:
        errors.sort(key=lambda e: (e[0] is None, e[0] or 0))
        raise (CouplingConfigError if positivity else ConfigError)(errors)
    if grid is not None and initial.family in init.FAMILIES:
        try:
            init.build(grid, initial.family, **initial.kwargs())
        except (TypeError, ValueError) as exc:
            raise ConfigError([(i.line("family"), f"initial data: {exc}")]) from None
    return RunConfig(grid, spec, initial, T, eps, scheme, dt, cfl, sample_interval, kmax, mode,
                     tube_radius, residuals, output)


def _argmin_time(spec, grid):
    return cpl._sampled_extrema(spec, grid)[2]


def to_text(cfg):
    """Canonical text form; ``parse_config(to_text(cfg)) == cfg``."""
    lines = ["[grid]", "n = " + ", ".join(map(str, cfg.grid.n)), "L = " + ", ".join(map(repr, cfg.grid.L)), ""]
    lines += ["[coupling]", f"c0 = {_format(cfg.coupling.c0)}", f"horizon = {_format(cfg.coupling.horizon)}"]
    for t in cfg.coupling.terms:
        lines.append(
            f"term = amplitude={_format(t.amplitude)} k={','.join(map(str, t.k))} "
            f"phases={','.join(repr(p) for p in t.phases)} omega={_format(t.omega)} psi={_format(t.psi)}"
        )
    lines += ["", "[initial]", f"family = {cfg.initial.family}", f"scale = {_format(cfg.initial.scale)}"]
    lines += [f"{k} = {_format(v)}" for k, v in cfg.initial.params]
    lines += ["", "[solver]"]
    for key in ("eps", "scheme", "dt", "cfl", "T", "sample_interval", "kmax", "mode", "tube_radius", "residuals"):
        v = getattr(cfg, key)
        if v is not None:
            lines.append(f"{key} = {_format(v)}")
    lines += ["", "[output]"]
    for key in ("dir", "csv", "manifest", "snapshots"):
        lines.append(f"{key} = {_format(getattr(cfg.output, key))}")
    return "\n".join(lines) + "\n"


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
