"""Command-line front end producing CSV tables.

Each run is described by an INI document with the sections [potential],
[solver] and [output]. Values are layered as built-in defaults, then the
``--config`` file, then command-line flags (``--nmax``, ``--family``,
``--solver``, ``--out`` and repeatable ``--param key=value``, where the key
may be qualified as ``section.key`` and defaults to [potential]).

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 partial results written.
"""

import argparse
import configparser
import io
import math
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import (DomainError, InadmissibleError, IsochronError, NotApplicableError, NumericalError,
                     ParameterError)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PARTIAL = 0, 2, 3, 4

COMMANDS = ("potential", "spectrum", "splitharm", "invert-i2", "mellin")
FAMILIES = ("harmonic", "family_i", "isotonic", "family_ii", "urabe", "split_harmonic")
SOLVERS = ("ebk", "wkb4", "exact", "all")


class ConfigError(ParameterError):
    """Invalid or unknown configuration entry."""


def _choice(options):
    def parse(text):
        text = str(text).strip()
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    return parse


def _positive_int(text):
    value = int(str(text).strip())
    if value < 0:
        raise ValueError("must be a non-negative integer")
    return value


def _float(text):
    value = float(str(text).strip())
    if math.isnan(value):
        raise ValueError("nan is not allowed")
    return value


SCHEMA = {
    "potential": {
        "family": _choice(FAMILIES),
        "omega": _float,
        "alpha": _float,
        "beta": _float,
        "xi": _float,
        "zeta": _float,
        "rho": _float,
        "i2": _choice(("constant", "algebraic", "appendix-c2", "zero", "table")),
        "i2_value": _float,
        "table": str,
    },
    "solver": {
        "nmax": _positive_int,
        "solver": _choice(SOLVERS),
        "x_max": _float,
        "rtol": _float,
        "atol": _float,
        "decay_margin": _float,
        "route": _choice(("u", "v")),
    },
    "output": {
        "path": str,
        "x_min": _float,
        "x_max": _float,
        "points": _positive_int,
        "mode": _choice(("levels", "sweep")),
        "level": _positive_int,
        "xi_min": _float,
        "xi_max": _float,
    },
}

DEFAULTS = {
    "potential": {"omega": 1.0},
    "solver": {"nmax": 20, "solver": "all", "rtol": 1e-12, "atol": 1e-12, "decay_margin": 30.0, "route": "u"},
    "output": {},
}

# parameters each family accepts in [potential]
FAMILY_KEYS = {
    "harmonic": {"omega"},
    "family_i": {"omega", "alpha", "beta"},
    "isotonic": {"omega", "beta"},
    "family_ii": {"omega", "xi", "alpha", "beta"},
    "urabe": {"omega", "zeta"},
    "split_harmonic": {"omega", "rho"},
}


def _format_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunConfig:
    command: str
    potential: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def section(self, name):
        return getattr(self, name)

    def to_text(self):
        """Canonical INI text: fixed section order, sorted keys, repr floats."""
        lines = [f"# command = {self.command}"]
        for name in SCHEMA:
            lines.append(f"[{name}]")
            for key in sorted(self.section(name)):
                lines.append(f"{key} = {_format_value(self.section(name)[key])}")
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, command, text):
        cfg = cls(command, {}, {}, {})
        _merge_ini(cfg, text, "<text>")
        return cfg


def _set(cfg, section, key, raw, origin):
    if section not in SCHEMA:
        raise ConfigError(f"{origin}: unknown section [{section}]")
    if key not in SCHEMA[section]:
        raise ConfigError(f"{origin}: unknown key '{key}' in [{section}]")
    try:
        cfg.section(section)[key] = SCHEMA[section][key](raw)
    except ValueError as exc:
        raise ConfigError(f"{origin}: bad value for {section}.{key}: {exc}") from None


def _merge_ini(cfg, text, origin):
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    for section in parser.sections():
        for key, raw in parser.items(section):
            _set(cfg, section, key, raw, origin)


def build_config(args):
    cfg = RunConfig(args.command, *(dict(DEFAULTS[s]) for s in SCHEMA))
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        _merge_ini(cfg, text, args.config)
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got '{item}'")
        key, raw = item.split("=", 1)
        section, _, name = key.strip().rpartition(".")
        _set(cfg, section or "potential", name, raw.strip(), "--param")
    if args.family is not None:
        _set(cfg, "potential", "family", args.family, "--family")
    if args.nmax is not None:
        _set(cfg, "solver", "nmax", args.nmax, "--nmax")
    if args.solver is not None:
        _set(cfg, "solver", "solver", args.solver, "--solver")
    if args.out is not None:
        cfg.output["path"] = args.out
    return cfg


# -- potential specs --------------------------------------------------------------------


def family_spec(potential):
    from . import potentials as pot

    family = potential.get("family")
    if family is None:
        raise ConfigError("[potential] needs a 'family'")
    extra = set(potential) - FAMILY_KEYS[family] - {"family"}
    if extra:
        raise ConfigError(f"family '{family}' does not take {', '.join(sorted(extra))}")
    kw = {k: v for k, v in potential.items() if k != "family"}
    try:
        if family == "harmonic":
            return pot.Harmonic(**kw)
        if family == "family_i":
            return pot.FamilyI(kw.get("alpha", 0.5), kw.get("beta", 1.0), kw.get("omega", 1.0))
        if family == "isotonic":
            return pot.Isotonic(kw.get("beta", 1.0), kw.get("omega", 1.0))
        if family == "family_ii":
            if "xi" not in kw:
                raise ConfigError("family_ii needs xi")
            return pot.FamilyII(kw["xi"], kw.get("alpha", 1.0), kw.get("beta", 1.0), kw.get("omega", 1.0))
        if family == "urabe":
            if "zeta" not in kw:
                raise ConfigError("urabe needs zeta")
            return pot.Urabe(kw["zeta"], kw.get("omega", 1.0))
        if "rho" not in kw:
            raise ConfigError("split_harmonic needs rho")
        return pot.SplitHarmonic(kw["rho"], kw.get("omega", 1.0))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# -- CSV -----------------------------------------------------------------------------------


def format_number(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return f"{value:.12g}"


class Table:
    def __init__(self, cfg, columns):
        self.cfg = cfg
        self.columns = list(columns)
        self.rows = []
        self.notes = []
        self.failures = 0

    def add(self, *values):
        self.rows.append(values)

    def render(self):
        out = io.StringIO()
        out.write(f"# isochron {__version__} {self.cfg.command}\n")
        for name in SCHEMA:
            items = self.cfg.section(name)
            if name == "output":
                items = {k: v for k, v in items.items() if k != "path"}
            if items:
                text = " ".join(f"{k}={_format_value(items[k])}" for k in sorted(items))
                out.write(f"# {name}: {text}\n")
        for note in self.notes:
            out.write(f"# {note}\n")
        out.write(",".join(self.columns) + "\n")
        for row in self.rows:
            out.write(",".join(format_number(v) for v in row) + "\n")
        return out.getvalue()


# -- commands ------------------------------------------------------------------------------


def cmd_potential(cfg):
    from .potentials import build_potential

    p = build_potential(family_spec(cfg.potential))
    out = cfg.output
    x = np.linspace(out.get("x_min", -5.0), out.get("x_max", 5.0), out.get("points", 101))
    lo, hi = p.domain
    inside = (x > lo) & (x < hi)
    table = Table(cfg, ["x", "V", "X", "S"])
    table.notes.append(f"domain: ({lo!r}, {hi!r})")
    clipped = int((~inside).sum())
    if clipped:
        msg = f"{clipped} grid points outside the domain ({lo:.12g}, {hi:.12g}) were dropped"
        table.notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    xs = x[inside]
    if xs.size:
        X = p.X_of_x(xs)
        V = 0.5 * p.omega**2 * X * X
        S = p.shear.eval(X)
        for row in zip(xs, V, X, S):
            table.add(*row)
    return table


def _shooting_config(cfg):
    from .eigen import ShootingConfig

    s = cfg.solver
    return ShootingConfig(x_max=s.get("x_max"), rtol=s["rtol"], atol=s["atol"], decay_margin=s["decay_margin"])


def cmd_spectrum(cfg):
    from .eigen import solve_spectrum
    from .errors import SolverError
    from .potentials import build_potential
    from .wkb import quantise

    n_max = cfg.solver["nmax"]
    if n_max > 200:
        raise ConfigError("nmax must not exceed 200")
    which = cfg.solver["solver"]
    p = build_potential(family_spec(cfg.potential))
    omega = p.omega
    levels = list(range(n_max + 1))
    table = Table(cfg, ["n", "E_EBK", "E_WKB4", "E_exact", "eps", "E^2.5*eps", "E^2*eps"])
    ebk = {n: None for n in levels}
    wkb4 = {n: None for n in levels}
    exact = {n: None for n in levels}

    if which in ("ebk", "all"):
        for r in quantise(p, n_max, order="EBK"):
            ebk[r.n] = r.energy
    if which in ("wkb4", "all"):
        route = cfg.solver["route"]
        try:
            for r in quantise(p, n_max, order="fourth", route=route):
                wkb4[r.n] = r.energy
        except (IsochronError, ValueError):
            for n in levels:
                try:
                    wkb4[n] = quantise(p, n_max, order="fourth", route=route, levels=[n])[0].energy
                except (IsochronError, ValueError) as exc:
                    table.notes.append(f"n={n} wkb4 failed: {exc}")
                    table.failures += 1
    if which in ("exact", "all"):
        scfg = _shooting_config(cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            try:
                for r in solve_spectrum(p, n_max, scfg):
                    exact[r.n] = r.energy
            except SolverError:
                for n in levels:
                    try:
                        exact[n] = solve_spectrum(p, n_max, scfg, levels=[n])[0].energy
                    except SolverError as exc:
                        table.notes.append(f"n={n} exact failed: {exc}")
                        table.failures += 1

    source = "exact" if which in ("exact", "all") else ("wkb4" if which == "wkb4" else "ebk")
    table.notes.append(f"eps = E_{source} - (n + 1/2) omega")
    best = {"exact": exact, "wkb4": wkb4, "ebk": ebk}[source]
    for n in levels:
        E = best[n]
        if E is None:
            eps = scaled52 = scaled2 = None
        else:
            eps = E - (n + 0.5) * omega
            scaled52, scaled2 = E**2.5 * eps, E**2 * eps
        table.add(n, ebk[n], wkb4[n], exact[n], eps, scaled52, scaled2)
    return table


def cmd_splitharm(cfg):
    from .splitharm import SplitHarmonicSpec, chi_asymptotic, exact_levels, levels_asymptotic

    pot, out = cfg.potential, cfg.output
    family = pot.get("family", "split_harmonic")
    if family != "split_harmonic":
        raise ConfigError("splitharm needs family = split_harmonic")
    extra = set(pot) - {"family", "rho", "omega"}
    if extra:
        raise ConfigError(f"splitharm does not take {', '.join(sorted(extra))}")
    omega = pot.get("omega", 1.0)
    mode = out.get("mode", "levels")
    if mode == "levels":
        if "rho" not in pot:
            raise ConfigError("level mode needs [potential] rho")
        spec = SplitHarmonicSpec(pot["rho"], omega)
        table = Table(cfg, ["n", "E_exact", "E_asymptotic", "chi"])
        if spec.mirrored:
            table.notes.append(f"rho folded to {spec.rho!r} (mirror image)")
        for r in exact_levels(spec, cfg.solver["nmax"]):
            if spec.rho > 0.0:
                asym = levels_asymptotic(r.n, spec.rho, omega, warn=False)
                chi = chi_asymptotic(r.n, spec.rho)
            else:
                asym = chi = None
            table.add(r.n, r.energy, asym, chi)
        return table
    n = out.get("level", 9)
    xi = np.linspace(out.get("xi_min", 0.0), out.get("xi_max", 0.9), out.get("points", 91))
    table = Table(cfg, ["xi", "rho", "E_exact", "E_asymptotic", "chi"])
    for value in xi:
        spec = SplitHarmonicSpec.from_xi(float(value), omega)
        E = exact_levels(spec, n)[n].energy
        if spec.rho > 0.0:
            asym = levels_asymptotic(n, spec.rho, omega, warn=False)
            chi = chi_asymptotic(n, spec.rho)
        else:
            asym = chi = None
        table.add(float(value), spec.rho, E, asym, chi)
    return table


def _table_i2(path):
    from scipy.interpolate import CubicSpline

    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read I2 table: {exc}") from None
    if data.shape[1] < 2 or data.shape[0] < 4:
        raise ConfigError("I2 table needs at least four rows of E,I2")
    order = np.argsort(data[:, 0])
    spline = CubicSpline(data[order, 0], data[order, 1])
    deriv = spline.derivative()
    return (lambda E: spline(E)), (lambda E: deriv(E)), float(data[order[-1], 0])


def cmd_invert_i2(cfg):
    from .abel import invert_i2_to_shear
    from .shear import algebraic_i2_shear, family_i_shear

    pot, out = cfg.potential, cfg.output
    extra = set(pot) - {"i2", "i2_value", "table", "omega", "family"}
    if extra:
        raise ConfigError(f"invert-i2 does not take {', '.join(sorted(extra))}")
    kind = pot.get("i2")
    if kind is None:
        raise ConfigError("[potential] needs i2 = constant | algebraic | zero | table")
    omega = pot.get("omega", 1.0)
    x_max = out.get("x_max", 10.0)
    expected = None
    di2 = None
    if kind == "constant":
        if "i2_value" not in pot:
            raise ConfigError("i2 = constant needs i2_value")
        value = pot["i2_value"]

        def i2(E):
            return np.full_like(np.asarray(E, dtype=float), value)

        di2 = lambda E: np.zeros_like(np.asarray(E, dtype=float))  # noqa: E731
        if value < 0:
            beta = math.sqrt(-8.0 * omega * value)
            iso = family_i_shear(1.0).scaled(beta)
            expected = iso.eval
    elif kind in ("algebraic", "appendix-c2"):
        def i2(E):
            return -(omega**8) / 6.0 / (omega**2 + 2.0 * np.asarray(E, dtype=float)) ** 4.5

        def di2(E):
            return 1.5 * omega**8 / (omega**2 + 2.0 * np.asarray(E, dtype=float)) ** 5.5

        expected = algebraic_i2_shear().eval
    elif kind == "zero":
        def i2(E):
            return np.zeros_like(np.asarray(E, dtype=float))

        di2 = i2
        expected = lambda X: np.zeros_like(np.asarray(X, dtype=float))  # noqa: E731
    else:
        if "table" not in pot:
            raise ConfigError("i2 = table needs a table path")
        i2, di2, e_top = _table_i2(pot["table"])
        if e_top < 0.5 * omega**2 * x_max**2:
            raise ConfigError(f"I2 table ends at E={e_top:g}; x_max={x_max:g} needs E up to "
                              f"{0.5 * omega**2 * x_max**2:g}")
    shear = invert_i2_to_shear(i2, omega, x_max=x_max, di2=di2)
    X = np.linspace(0.0, x_max, out.get("points", 101))
    S = shear.eval(X)
    if expected is None:
        table = Table(cfg, ["X", "S"])
        for row in zip(X, S):
            table.add(*row)
        return table
    S_exp = expected(X)
    table = Table(cfg, ["X", "S", "S_expected", "residual"])
    table.notes.append(f"max |residual| = {np.abs(S - S_exp).max():.3e}")
    for row in zip(X, S, S_exp, S - S_exp):
        table.add(*row)
    return table


def cmd_mellin(cfg):
    from .abel import OMEGA_REF, asymptotic_coefficients
    from .shear import family_ii_shear, harmonic_shear

    pot = cfg.potential
    family = pot.get("family")
    if family == "harmonic":
        shear = harmonic_shear()
    elif family == "family_ii":
        extra = set(pot) - {"family", "xi", "alpha", "omega"}
        if extra or "xi" not in pot:
            raise ConfigError("mellin needs family_ii with xi (and optionally alpha)")
        shear = family_ii_shear(pot["xi"], pot.get("alpha", 1.0))
    else:
        raise ConfigError("mellin needs family = family_ii or harmonic")
    omegas = [OMEGA_REF]
    requested = pot.get("omega")
    if requested is not None and requested != OMEGA_REF:
        omegas.append(requested)
    table = Table(cfg, ["omega", "M21", "M22", "M41"])
    for omega in omegas:
        m = asymptotic_coefficients(shear, omega)
        table.add(omega, m.m21, m.m22, m.m41)
    return table


HANDLERS = {
    "potential": cmd_potential,
    "spectrum": cmd_spectrum,
    "splitharm": cmd_splitharm,
    "invert-i2": cmd_invert_i2,
    "mellin": cmd_mellin,
}


def make_parser():
    parser = argparse.ArgumentParser(prog="isochron", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"isochron {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file with [potential], [solver], [output]")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--nmax", help="highest level index")
        p.add_argument("--family", help="potential family tag")
        p.add_argument("--param", action="append", metavar="KEY=VAL",
                       help="override a config key; KEY may be section.key (default section: potential)")
        p.add_argument("--solver", help="ebk | wkb4 | exact | all")
    return parser


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = build_config(args)
        table = HANDLERS[cfg.command](cfg)
    except (ConfigError, ParameterError, DomainError) as exc:
        print(f"isochron: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, InadmissibleError, NotApplicableError, IsochronError) as exc:
        print(f"isochron: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = table.render()
    path = cfg.output.get("path")
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_PARTIAL if table.failures else EXIT_OK
