"""Command line interface: ``logkde {density,bw,simulate,plot,theory}``.

Every failure is reported on standard error as a single line
``E_<KIND>: message`` and the process exits with status 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .bandwidth import BandwidthSpec, bw_logG, estimate_sigma, nrd, nrd0
from .errors import ConfigError, DomainError, LogKDEError, ParseError
from .estimator import MIN_POSITIVE, EvaluationGrid, FftConfig, Sample, log_kde, naive_kde_direct
from .kernels import KERNEL_NAMES, parse_kernel
from .plotting import Overlay, PlotSpec, render_svg
from .simulate import load_config, run_study
from .theory import (
    amise,
    amise_min,
    h_star,
    lognormal_h_star,
    mse_approx,
    parse_target,
)

EXIT_ERROR = 2


@dataclass(frozen=True)
class ColumnSelector:
    source: str = "-"
    column: str = "1"
    delimiter: str = ","
    header: bool = True


def _open_text(source):
    if source == "-":
        return sys.stdin.read()
    try:
        with open(source, newline="", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {source}: {exc.strerror}") from None


def read_column(sel: ColumnSelector, positive=True) -> np.ndarray:
    """Read one numeric column; rows are numbered as lines in the file."""
    text = _open_text(sel.source)
    rows = list(csv.reader(io.StringIO(text), delimiter=sel.delimiter))
    start = 0
    idx = None
    if sel.header:
        if not rows:
            raise ParseError("input is empty")
        names = [c.strip() for c in rows[0]]
        if sel.column in names:
            idx = names.index(sel.column)
        start = 1
    if idx is None:
        try:
            idx = int(sel.column) - 1
        except ValueError:
            raise ParseError(f"no column named {sel.column!r}") from None
        if idx < 0:
            raise ParseError(f"column index must be >= 1, got {sel.column}")
    values, bad = [], []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        if idx >= len(row):
            raise ParseError(f"missing column {idx + 1}", row=lineno)
        cell = row[idx].strip()
        try:
            v = float(cell)
        except ValueError:
            raise ParseError(f"cannot parse {cell!r} as a number", row=lineno) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite value {cell!r}", row=lineno)
        if positive and v < MIN_POSITIVE:
            bad.append(lineno)
        values.append(v)
    if bad:
        listed = ", ".join(str(r) for r in bad[:10]) + (" ..." if len(bad) > 10 else "")
        raise DomainError(f"data must be strictly positive; {len(bad)} offending row(s): {listed}")
    if not values:
        raise ParseError("no data rows")
    return np.array(values)


def _fmt(v):
    return f"{v:.17g}"


def write_density_csv(estimate, bw_rule, fh):
    fh.write(f"# kernel={estimate.kernel.value}, bw={_fmt(estimate.bandwidth)}, bw_rule={bw_rule}, "
             f"n={estimate.n}, method={estimate.method}, estimator={estimate.estimator}\n")
    fh.write("x,density\n")
    for x, d in zip(estimate.grid.points, estimate.density):
        fh.write(f"{_fmt(x)},{_fmt(d)}\n")


def read_density_csv(path):
    """Return ``(x, density, provenance)`` from a file written by ``density``."""
    text = _open_text(path)
    meta = {}
    xs, ds = [], []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            for part in line[1:].split(","):
                if "=" in part:
                    k, v = part.split("=", 1)
                    meta[k.strip()] = v.strip()
            continue
        if not header_seen:
            if [c.strip() for c in line.split(",")] != ["x", "density"]:
                raise ParseError(f"{path}: expected header 'x,density'", row=lineno)
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"{path}: expected 2 fields", row=lineno)
        try:
            xs.append(float(parts[0]))
            ds.append(float(parts[1]))
        except ValueError:
            raise ParseError(f"{path}: non-numeric field", row=lineno) from None
    if not header_seen or not xs:
        raise ParseError(f"{path}: no density rows")
    return np.array(xs), np.array(ds), meta


def _selector(args):
    return ColumnSelector(args.input, args.column, args.delimiter, not args.no_header)


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)


def _grid_from_args(args, sample, h):
    if args.from_ is None and args.to is None:
        return EvaluationGrid.default_for(sample, h, args.n_points)
    if args.from_ is None or args.to is None:
        raise ConfigError("--from and --to must be given together", field="grid")
    return EvaluationGrid.span(args.from_, args.to, args.n_points)


def cmd_density(args):
    data = read_column(_selector(args))
    sample = Sample(data)
    kernel = parse_kernel(args.kernel)
    spec = BandwidthSpec.parse(args.bw)
    if args.estimator == "naive_kde":
        rules = {"nrd0": nrd0, "nrd": nrd}
        if spec.selector == "fixed":
            h = spec.value
        elif spec.selector in rules:
            h = rules[spec.selector](sample.values)
        else:
            raise ConfigError(f"naive_kde supports bw nrd0, nrd or fixed:<h>, not {spec}", field="bw")
        if args.from_ is not None and args.to is not None:
            grid = EvaluationGrid.span(args.from_, args.to, args.n_points, geometric=False)
        else:
            grid = None
        est = naive_kde_direct(sample, grid, kernel, h)
    else:
        h = spec.resolve(sample, kernel)
        grid = _grid_from_args(args, sample, h)
        est = log_kde(sample, grid, kernel, h, args.method, FftConfig(args.grid_size))
    buf = io.StringIO()
    write_density_csv(est, spec, buf)
    _emit(buf.getvalue(), args.out)
    if args.svg:
        label = f"{est.estimator} ({kernel.value}, h={est.bandwidth:.4g})"
        plot = PlotSpec([Overlay(est.x, est.density, label)], data=data, xlabel="x",
                        histogram_bins=_bins(args.bins))
        _emit(render_svg(plot), args.svg)


def cmd_bw(args):
    sample = Sample(read_column(_selector(args)))
    spec = BandwidthSpec.parse(args.bw)
    kernel = parse_kernel(args.kernel)
    if spec.selector == "logg":
        sigma = estimate_sigma(sample, args.sigma)
        h = bw_logG(sample, sigma)
        note = f" sigma={sigma.value:.6g} ({sigma.method})"
    else:
        h = spec.resolve(sample, kernel)
        note = ""
    sys.stdout.write(f"{h:.6g}\n")
    sys.stderr.write(f"# bw_rule={spec} kernel={kernel.value} n={sample.n}{note}\n")


def cmd_simulate(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    result = run_study(cfg)
    _emit(result.to_csv(), args.out)


def _bins(text):
    return "auto" if text in (None, "auto") else int(text)


def cmd_plot(args):
    overlays = []
    labels = list(args.label or [])
    for i, path in enumerate(args.densities):
        x, d, meta = read_density_csv(path)
        default = f"{meta.get('estimator', 'estimate')} ({meta.get('kernel', '?')}, {meta.get('bw_rule', '?')})"
        overlays.append(Overlay(x, d, labels[i] if i < len(labels) else default))
    if args.target:
        target = parse_target(args.target)
        lo = min(o.x.min() for o in overlays)
        hi = max(o.x.max() for o in overlays)
        xt = np.linspace(max(lo, MIN_POSITIVE), hi, 1024)
        overlays.append(Overlay(xt, target.f(xt), target.name, color="#1f5fbf", dash="6 3"))
    if not overlays:
        raise ConfigError("nothing to plot", field="densities")
    data = None
    if args.data:
        data = read_column(ColumnSelector(args.data, args.column, args.delimiter, not args.no_header))
    xlim = (args.xmin, args.xmax) if args.xmin is not None and args.xmax is not None else None
    ylim = (0.0, args.ymax) if args.ymax is not None else None
    spec = PlotSpec(overlays, args.width, args.height, _bins(args.bins), data, args.title,
                    xlim=xlim, ylim=ylim)
    _emit(render_svg(spec), args.out)


def cmd_theory(args):
    target = parse_target(args.target)
    kernel = parse_kernel(args.kernel)
    n = args.n
    hs = h_star(target, n, kernel)
    h = args.h if args.h is not None else hs
    rows = [("target", target.name), ("kernel", kernel.value), ("n", str(n))]
    for x in args.x:
        rep = mse_approx(target, x, h, n, kernel)
        rows += [("x", _fmt(rep.point)), ("h", _fmt(rep.h)), ("bias", _fmt(rep.bias)),
                 ("variance", _fmt(rep.variance)), ("mse", _fmt(rep.mse))]
    rows += [("h_star", _fmt(hs)), ("amise_at_h", _fmt(amise(target, h, n, kernel))),
             ("amise_min", _fmt(amise_min(target, n, kernel)))]
    if target.family == "lognormal" and kernel.value == "gaussian":
        rows.append(("lognormal_h_star", _fmt(lognormal_h_star(target.params[1], n))))
    buf = io.StringIO()
    buf.write("# order=leading (remainder terms dropped)\n")
    buf.write("quantity,value\n")
    for k, v in rows:
        buf.write(f"{k},{v}\n")
    _emit(buf.getvalue(), args.out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message.replace("\n", " "))


def _add_input(p):
    p.add_argument("input", nargs="?", default="-", help="CSV file, or - for standard input")
    p.add_argument("--column", default="1", help="column name or 1-based index (default 1)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-header", action="store_true", help="input has no header row")


def build_parser():
    kernels = ", ".join(KERNEL_NAMES)
    parser = _Parser(prog="logkde", description="Log-transformed kernel density estimation "
                                                "for positive data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("density", help="estimate a density and write x,density CSV")
    _add_input(p)
    p.add_argument("--kernel", default="gaussian", help=f"one of {kernels}")
    p.add_argument("--bw", default="nrd0", help="selector name or fixed:<h>")
    p.add_argument("--estimator", default="log_kde", choices=("log_kde", "naive_kde"))
    p.add_argument("--from", dest="from_", type=float)
    p.add_argument("--to", type=float)
    p.add_argument("--n-points", type=int, default=512)
    p.add_argument("--method", default="direct", choices=("direct", "fft"))
    p.add_argument("--grid-size", type=int, default=512, help="FFT grid size (power of two)")
    p.add_argument("--bins", default="auto", help="histogram bins for --svg (default Sturges)")
    p.add_argument("--svg", help="also write an SVG plot here")
    p.add_argument("--out", help="output CSV (default standard output)")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("bw", help="print a bandwidth")
    _add_input(p)
    p.add_argument("--bw", default="nrd0", help="nrd0, nrd, ucv, bcv, sj, logg, logcv")
    p.add_argument("--kernel", default="gaussian", help=f"one of {kernels}")
    p.add_argument("--sigma", default="sample_sd", choices=("sample_sd", "robust_iqr", "min_of_both"),
                   help="sigma estimate used by logg")
    p.set_defaults(func=cmd_bw)

    p = sub.add_parser("simulate", help="run a Monte Carlo MISE/MIAE study")
    p.add_argument("config", help="TOML study description")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--out", help="output CSV (default standard output)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="render density CSVs as SVG")
    p.add_argument("densities", nargs="*", help="CSV files written by 'density'")
    p.add_argument("--data", help="raw data CSV for a histogram")
    p.add_argument("--column", default="1")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--target", help="overlay a reference density, e.g. chisq(10)")
    p.add_argument("--label", action="append", help="legend label, once per density CSV")
    p.add_argument("--bins", default="auto")
    p.add_argument("--width", type=int, default=720)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--title")
    p.add_argument("--xmin", type=float)
    p.add_argument("--xmax", type=float)
    p.add_argument("--ymax", type=float)
    p.add_argument("--out", help="output SVG (default standard output)")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("theory", help="leading-order bias/variance/AMISE report")
    p.add_argument("--target", default="lognormal(0,1)")
    p.add_argument("--kernel", default="gaussian")
    p.add_argument("--x", type=float, action="append", help="evaluation point (repeatable)")
    p.add_argument("--h", type=float, help="bandwidth (default: AMISE-optimal)")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_theory)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "x", "unset") is None:
            args.x = [1.0]
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            args.func(args)
    except LogKDEError as exc:
        sys.stderr.write(f"{exc.code}: {_one_line(exc)}\n")
        return EXIT_ERROR
    except (OverflowError, FloatingPointError, ZeroDivisionError) as exc:
        sys.stderr.write(f"E_DOMAIN: {_one_line(exc)}\n")
        return EXIT_ERROR
    return 0


def _one_line(exc):
    return " ".join(str(exc).split())


def _show_warning(message, category, filename, lineno, file=None, line=None):
    sys.stderr.write(f"warning: {category.__name__}: {message}\n")


if __name__ == "__main__":
    sys.exit(main())
