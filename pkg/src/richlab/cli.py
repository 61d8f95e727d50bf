"""Command line harness: ``richlab {quad,ballistics,iontrap,shake,analyze}``.

Each subcommand runs a refinement sweep, writes the sweep and its diagnosis
as CSV into ``--output-dir`` and prints one verdict line per sweep. Every
parameter has a default, so a bare invocation reproduces the reference
experiment. A ``--config`` file of ``key = value`` lines supplies defaults
that explicit flags override.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys
from pathlib import Path

from .errors import DragTableFormatError, RichlabError, SweepFormatError
from .extrapolation import diagnose, richardson_estimate
from .sweepio import read_sweep, write_diagnosis, write_sweep, write_table

__all__ = ["main", "parse_tolerance", "build_parser", "EXIT_CODES"]

EXIT_CODES = {
    "ok": 0,
    "failure": 1,
    "usage": 2,
    "drag_table": 3,
    "output_dir": 4,
    "parse": 5,
    "config": 6,
}

QUAD_KMAX = {"exp": 19, "sqrt": 25}
METHOD_NAMES = ("rk1", "rk2", "rk3", "rk4")
SHELLS = ("G1", "G2", "G5", "G6", "G7", "G8")
SWITCHING = ("none", "g2", "g4")
SHAKE_TAUS = (1e-12, 1e-4)

_POW2 = re.compile(r"^\s*2\s*(?:\^|\*\*)\s*(-?\d+)\s*$")


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def parse_tolerance(text: str) -> float:
    """Parse ``2^-N`` (or ``2**-N``) exactly, otherwise as a decimal float."""
    m = _POW2.match(text)
    if m:
        return math.ldexp(1.0, int(m.group(1)))
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number or 2^-N literal: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"tolerance must be finite: {text!r}")
    return value


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _common(p):
    p.add_argument("--output-dir", default=".", help="directory for CSV artifacts (created if missing)")
    p.add_argument("--no-meta", action="store_true", help="omit timestamp comments for byte-identical reruns")
    p.add_argument("--config", metavar="PATH", help="key = value file with default settings")
    p.add_argument("--p", type=float, default=None, help="nominal order for the diagnosis")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="richlab", description="Richardson extrapolation experiment harness")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    q = sub.add_parser("quad", help="composite trapezoid rule sweeps")
    _common(q)
    q.add_argument("--integrand", choices=("exp", "sqrt", "all"), default="all")
    q.add_argument("--kmax", type=int, default=None, help="finest level (default 19 for exp, 25 for sqrt)")

    b = sub.add_parser("ballistics", help="maximum range sweeps for the D-20 shell")
    _common(b)
    b.add_argument("--method", choices=METHOD_NAMES, default="rk1")
    b.add_argument("--event-tol", type=parse_tolerance, default=math.ldexp(1.0, -53))
    b.add_argument("--tol-rel", type=parse_tolerance, default=math.ldexp(1.0, -53),
                   help="relative tolerance of the golden section search")
    b.add_argument("--kmin", type=int, default=1)
    b.add_argument("--kmax", type=int, default=12)
    b.add_argument("--shell", choices=SHELLS + ("all",), default="all")
    b.add_argument("--drag-dir", default=None, help="directory with G*.csv drag tables")
    b.add_argument("--jobs", type=_positive_int, default=1)

    i = sub.add_parser("iontrap", help="kinetic energy sweeps for the ion trap")
    _common(i)
    i.add_argument("--method", choices=METHOD_NAMES + ("all",), default="all")
    i.add_argument("--switching", choices=SWITCHING + ("all",), default="all")
    i.add_argument("--kmin", type=int, default=5)
    i.add_argument("--kmax", type=int, default=16)
    i.add_argument("--jobs", type=_positive_int, default=1)

    s = sub.add_parser("shake", help="SHAKE energy sweeps on a constrained bead chain")
    _common(s)
    s.add_argument("--tau", type=parse_tolerance, default=None, help="solver tolerance (default: 1e-12 and 1e-4)")
    s.add_argument("--kmin", type=int, default=0)
    s.add_argument("--kmax", type=int, default=9)
    s.add_argument("--t-end", type=float, default=4.0)
    s.add_argument("--n-min", type=_positive_int, default=32)

    a = sub.add_parser("analyze", help="diagnose a sweep CSV")
    _common(a)
    a.add_argument("--input", required=True, help="sweep CSV (k,h,A or n,h,<column>)")
    a.add_argument("--column", default="A", help="value column to analyse")
    return parser


def _read_config(path):
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("config", f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise CliError("config", f"{path}:{lineno}: expected key = value")
        key, value = (t.strip() for t in s.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser, argv):
    """Turn config file entries into subparser defaults, so flags still win."""
    pre, _ = parser.parse_known_args(argv)
    if not getattr(pre, "config", None):
        return
    values = _read_config(pre.config)
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = sub_action.choices[pre.subcommand]
    known = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, raw in values.items():
        action = known.get(key)
        if action is None or key in ("help", "config"):
            raise CliError("config", f"unknown config key {key!r} for {pre.subcommand}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            if action.choices is not None and raw not in action.choices:
                raise CliError("config", f"invalid value {raw!r} for {key}")
            try:
                defaults[key] = action.type(raw) if action.type else raw
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise CliError("config", f"invalid value {raw!r} for {key}: {exc}") from None
    sp.set_defaults(**defaults)


def _output_dir(path):
    d = Path(path)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError("output_dir", f"cannot create {d}: {exc.strerror}") from None
    if not d.is_dir() or not os.access(d, os.W_OK | os.X_OK):
        raise CliError("output_dir", f"output directory {d} is not writable")
    return d


def _emit(out, stem, sweep, diag, meta):
    write_sweep(sweep, out / f"{stem}_sweep.csv", meta)
    write_diagnosis(sweep, diag, out / f"{stem}_diag.csv", meta)
    print(f"{stem}: {diag.summary()}")


def _levels(kmin, kmax):
    if kmin > kmax:
        raise CliError("usage", f"kmin={kmin} exceeds kmax={kmax}")
    return range(kmin, kmax + 1)


def _cmd_quad(args, out, meta):
    from .quadrature import INTEGRANDS, refinement_sweep

    names = ("exp", "sqrt") if args.integrand == "all" else (args.integrand,)
    for name in names:
        kmax = QUAD_KMAX[name] if args.kmax is None else args.kmax
        sweep = refinement_sweep(INTEGRANDS[name], kmax)
        _emit(out, f"rint_{name}", sweep, diagnose(sweep, args.p), meta)


def _load_shells(args):
    from .ballistics import D20_DIAMETER, D20_MASS, D20_MUZZLE_SPEED, ShellSpec
    from .dragmodel import bundled_table, load_drag_table

    shells = SHELLS if args.shell == "all" else (args.shell,)
    specs = {}
    for name in shells:
        try:
            if args.drag_dir is not None:
                table = load_drag_table(Path(args.drag_dir) / f"{name}.csv", name)
            else:
                table = bundled_table(name)
        except OSError as exc:
            raise CliError("drag_table", f"cannot read drag table {name}: {exc.strerror}") from None
        except DragTableFormatError as exc:
            raise CliError("drag_table", f"drag table {name}: {exc}") from None
        specs[name] = ShellSpec(D20_MASS, D20_DIAMETER, D20_MUZZLE_SPEED, table)
    return specs


def _cmd_ballistics(args, out, meta):
    from .ballistics import maxrange_sweep
    from .integrators import get_method

    specs = _load_shells(args)
    ks = _levels(args.kmin, args.kmax)
    order = get_method(args.method).order
    rows = []
    for name, spec in specs.items():
        sweep = maxrange_sweep(spec, args.method, args.event_tol, ks, args.tol_rel, jobs=args.jobs)
        diag = diagnose(sweep, args.p)
        _emit(out, f"maxrange_{args.method}_{name}", sweep, diag, meta)
        a = sweep.as_dict()
        kf = ks[-1]
        est = richardson_estimate(a[kf], a[kf - 1], order) if kf - 1 in a else float("nan")
        rows.append((name, a[kf], est))
    h = math.ldexp(8.0, -ks[-1])
    comments = [f"maximum range at h={h!r} s, method {args.method}, event_tol={args.event_tol!r}"]
    write_table(("shell", "max_range_m", "error_estimate_m"), rows,
                out / f"maxrange_{args.method}_summary.csv", comments, meta)
    lines = [f"{'shell':<6} {'max range [m]':>14} {'error estimate [m]':>19}"]
    lines += [f"{n:<6} {r:>14.1f} {e:>19.3f}" for n, r, e in rows]
    text = "\n".join(lines) + "\n"
    with open(out / f"maxrange_{args.method}_summary.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    sys.stdout.write(text)


def _cmd_iontrap(args, out, meta):
    from .iontrap import default_system, kinetic_energy_sweep, switching_for

    system = default_system()
    methods = METHOD_NAMES if args.method == "all" else (args.method,)
    kinds = SWITCHING if args.switching == "all" else (args.switching,)
    ks = _levels(args.kmin, args.kmax)
    for kind in kinds:
        sf = switching_for(kind, system)
        for m in methods:
            sweep = kinetic_energy_sweep(system, sf, m, ks, jobs=args.jobs)
            _emit(out, f"iontrap_{m}_{kind}", sweep, diagnose(sweep, args.p), meta)


def _cmd_shake(args, out, meta):
    from .constrained_md import energy_sweep, quartic_chain

    system = quartic_chain()
    taus = SHAKE_TAUS if args.tau is None else (args.tau,)
    n_list = [args.n_min << k for k in _levels(args.kmin, args.kmax)]
    for tau in taus:
        kin, _, rows = energy_sweep(system, args.t_end, n_list, tau)
        stem = f"shake_tau{tau!r}"
        comments = [f"label: SHAKE bead chain, t_end={args.t_end!r}, tau={tau!r}"]
        write_table(("n", "h", "kinetic", "potential", "total", "residual_max"), rows,
                    out / f"{stem}_energies.csv", comments, meta)
        diag = diagnose(kin, args.p)
        write_diagnosis(kin, diag, out / f"{stem}_kinetic_diag.csv", meta)
        print(f"{stem}: {diag.summary()}")


def _cmd_analyze(args, out, meta):
    try:
        sweep = read_sweep(args.input, args.column)
    except OSError as exc:
        raise CliError("parse", f"cannot read {args.input}: {exc.strerror}") from None
    diag = diagnose(sweep, args.p)
    stem = Path(args.input).stem
    if stem.endswith("_sweep"):
        stem = stem[: -len("_sweep")]
    write_diagnosis(sweep, diag, out / f"{stem}_diag.csv", meta)
    print(diag.summary())


_COMMANDS = {
    "quad": _cmd_quad,
    "ballistics": _cmd_ballistics,
    "iontrap": _cmd_iontrap,
    "shake": _cmd_shake,
    "analyze": _cmd_analyze,
}


def _fail(code, message):
    message = " ".join(str(message).split())
    print(f"error: code={code} message={message}", file=sys.stderr)
    return EXIT_CODES[code]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        out = _output_dir(args.output_dir)
        _COMMANDS[args.subcommand](args, out, not args.no_meta)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CODES["usage"]
    except CliError as exc:
        return _fail(exc.code, exc)
    except SweepFormatError as exc:
        return _fail("parse", exc)
    except DragTableFormatError as exc:
        return _fail("drag_table", exc)
    except RichlabError as exc:
        return _fail("failure", f"{type(exc).__name__}: {exc}")
    except OSError as exc:
        return _fail("output_dir", f"{exc.filename}: {exc.strerror}")
    return EXIT_CODES["ok"]


if __name__ == "__main__":
    sys.exit(main())
