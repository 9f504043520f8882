"""Command-line entry point: ``gaptooth <subcommand> [flags]``.

Every subcommand also accepts ``--config FILE.toml``; keys are flag names with
dashes replaced by underscores, either at top level or in a table named after
the subcommand.  Flags given on the command line win over the file.

Exit status: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import sys

import numpy as np

from . import microsim, refmodel, spectra
from .errors import ConfigError, NumericalError
from .opcalc import expand_edge_derivative
from .ptbc import as_fraction, make_stencil

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

MAX_EXPAND_ORDER = 16

INITIAL_CONDITIONS = {
    "demo": microsim.burgers_demo_initial,
    "humps": lambda x: 0.5 * np.exp(-((x - 4.0) ** 2)) + 0.2 * np.exp(-4.0 * (x - 1.0) ** 2),
    "cos": np.cos,
    "zero": np.zeros_like,
    "const": np.ones_like,
}


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _ptbc_order(order: int) -> int:
    if order < 2 or order % 2:
        raise ConfigError(f"--order must be an even integer >= 2, got {order}")
    return order // 2


# -- subcommands --------------------------------------------------------------


def cmd_expand(args) -> int:
    K = args.order
    if not 1 <= K <= MAX_EXPAND_ORDER:
        raise ConfigError(f"--order must lie in 1..{MAX_EXPAND_ORDER}")
    series = {"+": expand_edge_derivative(+1, K), "-": expand_edge_derivative(-1, K)}
    if args.r is not None:
        series = {k: s.substitute(as_fraction(args.r)) for k, s in series.items()}
    with _open_out(args.output) as fh:
        if args.format == "json":
            out = {"r": None if args.r is None else str(as_fraction(args.r)),
                   "plus": series["+"].to_json(), "minus": series["-"].to_json()}
            json.dump(out, fh, indent=2)
            fh.write("\n")
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["edge", "delta_power", "has_mu", "r_power", "coeff", "value"])
            for edge, s in series.items():
                for k, has_mu, c in s.terms():
                    for i, q in enumerate(c.coeffs):
                        if q:
                            w.writerow([edge, k, int(has_mu), i, str(q), f"{float(q):.17g}"])
    return 0


def cmd_stencil(args) -> int:
    p = _ptbc_order(args.order)
    edges = {"plus": [1], "minus": [-1], "both": [-1, 1]}[args.edge]
    out = [make_stencil(p, args.r, s).to_json() for s in edges]
    with _open_out(args.output) as fh:
        json.dump(out[0] if len(out) == 1 else out, fh, indent=2)
        fh.write("\n")
    return 0


def cmd_spectrum(args) -> int:
    rows = []
    for m in args.patches:
        spec = spectra.patch_spectrum(m, args.npoints, args.r, args.order, args.dt,
                                      args.length, scheme=args.scheme)
        rows.append(spectra.table_row(spec))
        if args.csv:
            path = args.csv if len(args.patches) == 1 else _suffixed(args.csv, m)
            with _open_out(path) as fh:
                spec.write_csv(fh)
    print(spectra.format_table(rows))
    if args.table_csv:
        with _open_out(args.table_csv) as fh:
            spectra.write_table_csv(rows, fh)
    return 0


def _suffixed(path: str, m: int) -> str:
    stem, dot, ext = path.rpartition(".")
    return f"{stem}_m{m}.{ext}" if dot else f"{path}_m{m}"


def cmd_simulate(args) -> int:
    cfg = microsim.build_patch_config(args.length, args.patches, args.r, args.npoints)
    model = microsim.ModelSpec(args.model, c=args.c, strength=args.strength)
    stencils = None if args.order == 0 else \
        tuple(make_stencil(_ptbc_order(args.order), args.r, s) for s in (-1, 1))
    initial = args.initial or ("humps" if args.model == "burgers" else "cos")
    s0 = microsim.sample(cfg, INITIAL_CONDITIONS[initial])
    every = args.every or args.t_end
    times = np.arange(0.0, args.t_end + 0.5 * every, every)
    traj = microsim.integrate(s0, cfg, model, stencils, args.dt, args.t_end, args.scheme,
                              output_times=times, check_stability=not args.no_stability_check)
    with _open_out(args.output) as fh:
        microsim.write_trajectory_csv(traj, cfg, fh)
    return 0


def cmd_macro_eig(args) -> int:
    op = refmodel.macro_stencil(_ptbc_order(args.order), args.patches, args.a, args.b, args.c,
                                args.length / args.patches)
    lam = refmodel.macro_eigenvalues(op, args.method)
    with _open_out(args.output) as fh:
        refmodel.write_spectrum_csv(lam, fh)
    return 0


def cmd_convergence(args) -> int:
    H, err = spectra.slow_mode_errors(args.patches, args.npoints, args.r, args.order, args.dt,
                                      args.length)
    floor = None
    if args.floor_probe:
        floor = spectra.dt_floor(max(args.patches), args.npoints, args.r, args.order, args.dt,
                                 args.length)
    fitted = spectra.convergence_order(H, err, floor)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["m", "H", "error_lambda_2_3"])
    for m, h, e in zip(args.patches, H, err):
        w.writerow([m, f"{h:.12g}", f"{e:.6e}"])
    if floor is not None:
        print(f"# dt floor estimate: {floor:.3e}")
    print(f"# fitted order: {fitted:.3f}")
    return 0


# -- parser -------------------------------------------------------------------


def _geometry(p, patches_many=False, order_default=4):
    if patches_many:
        p.add_argument("--patches", "-m", type=int, nargs="+", default=[4, 8, 16, 32])
    else:
        p.add_argument("--patches", "-m", type=int, default=8)
    p.add_argument("--npoints", "-n", type=int, default=11, help="fine points per patch (odd)")
    p.add_argument("--r", type=float, default=0.1, help="patch half-width over grid spacing")
    p.add_argument("--order", type=int, default=order_default,
                   help="PtBC order: highest delta power kept (2, 4, 6, ...)")
    p.add_argument("--length", type=float, default=2 * math.pi)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaptooth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        p.add_argument("--config", help="TOML file of defaults")
        p.add_argument("--output", "-o", default=None)
        return p

    p = add("expand", cmd_expand, "series for the edge derivative operator")
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--r", type=str, default=None, help="substitute a numeric ratio, e.g. 1/10")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = add("stencil", cmd_stencil, "numeric patch boundary stencil")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--r", type=float, default=0.1)
    p.add_argument("--edge", choices=["plus", "minus", "both"], default="both")

    p = add("spectrum", cmd_spectrum, "growth rates of the one-step map")
    _geometry(p, patches_many=True)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--scheme", choices=microsim.SCHEMES, default="euler")
    p.add_argument("--csv", default=None, help="write the full spectrum CSV here")
    p.add_argument("--table-csv", default=None)

    p = add("simulate", cmd_simulate, "integrate the patch system")
    _geometry(p, order_default=6)
    p.add_argument("--model", choices=microsim.MODEL_KINDS, default="burgers")
    p.add_argument("--c", type=float, default=0.0, help="advection speed")
    p.add_argument("--strength", type=float, default=100.0, help="Burgers advection strength")
    p.add_argument("--initial", choices=sorted(INITIAL_CONDITIONS), default=None)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--t-end", type=float, default=0.1)
    p.add_argument("--every", type=float, default=0.025, help="output interval")
    p.add_argument("--scheme", choices=microsim.SCHEMES, default="euler")
    p.add_argument("--no-stability-check", action="store_true")

    p = add("macro-eig", cmd_macro_eig, "eigenvalues of the classical macroscale operator")
    p.add_argument("--patches", "-m", type=int, default=32)
    p.add_argument("--order", type=int, default=6, help="2, 4 or 6")
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--length", type=float, default=2 * math.pi)
    p.add_argument("--method", choices=["symbol", "dense"], default="symbol")

    p = add("convergence", cmd_convergence, "fitted order of the slow growth rates")
    _geometry(p, patches_many=True)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--floor-probe", action="store_true",
                   help="drop points below a dt-halving floor estimate")
    return parser


def _load_config(path: str, command: str, known: set[str]) -> dict:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    values = {k: v for k, v in data.items() if not isinstance(v, dict)}
    values.update(data.get(command, {}))
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    return values


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions} - {"help", "config", "func"}
        try:
            subparser.set_defaults(**_load_config(args.config, args.command, known))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return args.func(args)
    except ValueError as exc:
        print(f"gaptooth: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"gaptooth: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
