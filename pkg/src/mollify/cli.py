"""Command-line front end.

Exit status: 0 on success, 2 when the inputs do not validate, 1 when a
numerical stage fails (budget, certification, ...).  Nothing is written
unless every input resolves first.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, approx, report
from .convolve import convolve_many, jump_value, sweep as run_sweep
from .errors import MollifyError, ValidationError
from .functions import Box, get_function
from .kernels import get_kernel, scale
from .poly import Polynomial
from .ratfun import RationalFunction


class Failure(click.ClickException):
    exit_code = 1


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise click.BadParameter(f"{what} must be comma-separated numbers, got {text!r}")
    if not vals:
        raise click.BadParameter(f"{what} is empty")
    return vals


def _interval(lo: float, hi: float) -> tuple[float, float]:
    if not lo < hi:
        raise click.BadParameter(f"invalid interval [{lo}, {hi}]")
    return lo, hi


def _outdir(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _guard(fn):
    """Map library errors onto exit codes."""

    def run(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            raise click.UsageError(str(exc))
        except MollifyError as exc:
            raise Failure(f"{type(exc).__name__}: {exc}")

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


@click.group()
@click.version_option(__version__, prog_name="mollify")
def main():
    """Mollifier experiments: sweeps, jump averages, certified polynomials."""


@main.command()
@click.option("--f", "fname", required=True, help="Catalog function or piecewise JSON.")
@click.option("--kernel", required=True, help="Kernel name, e.g. gauss, poisson, tensor(gauss,bump).")
@click.option("--t", "ts", default="0.2,0.1,0.05", show_default=True, help="Decreasing scales.")
@click.option("--box", nargs=2, type=float, default=(-2.0, 2.0), show_default=True)
@click.option("--grid", type=int, default=201, show_default=True, help="Grid points per axis.")
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--out", default=".", show_default=True, help="Output directory.")
@_guard
def sweep(fname, kernel, ts, box, grid, tol, out):
    """sup |f * phi_t - f| over a box for each t."""
    k = get_kernel(kernel)
    f = get_function(fname, k.dim)
    lo, hi = _interval(*box)
    K = Box.cube(lo, hi, k.dim)
    tlist = _floats(ts, "--t")
    rep = run_sweep(f, k, tlist, K, m=grid, tol=tol)
    d = _outdir(out)
    report.write_csv(d / "sweep.csv", report.SWEEP_COLUMNS, report.sweep_rows(rep))
    report.write_json(d / "sweep.json", {"f": f.name, "kernel": k.name, **report.sweep_dict(rep)})
    if k.dim == 1:
        xs = np.linspace(lo, hi, grid)
        for i, t in enumerate(tlist):
            vals = convolve_many(f, scale(k, t), xs, tol)
            report.write_plot(d / f"sweep_t{i}.dat", xs, vals)
    for t, e, b, n in report.sweep_rows(rep):
        click.echo(f"t={t:g}  sup_error={e:.6g}  tail_bound={b:.3g}  grid={n}")


@main.command()
@click.option("--f", "fname", default="step", show_default=True)
@click.option("--kernel", required=True)
@click.option("--t", "ts", default="0.1,0.01", show_default=True)
@click.option("--x", "x0", type=float, default=0.0, show_default=True, help="Jump location.")
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--out", default=".", show_default=True)
@_guard
def jump(fname, kernel, ts, x0, tol, out):
    """(f * phi_t)(x) at a jump against the mean of the one-sided limits."""
    k = get_kernel(kernel)
    f = get_function(fname, 1)
    tlist = _floats(ts, "--t")
    left, right = f.left_right(x0)
    mean = 0.5 * (left + right)
    rows = []
    for t in tlist:
        v = jump_value(f, scale(k, t), x0, tol)
        rows.append((t, v, mean, abs(v - mean)))
    d = _outdir(out)
    header = ("t", "value", "mean_of_limits", "deviation")
    report.write_csv(d / "jump.csv", header, rows)
    report.write_json(
        d / "jump.json",
        {"f": f.name, "kernel": k.name, "x": x0, "left": left, "right": right,
         "rows": [dict(zip(header, r)) for r in rows]},
    )
    for t, v, _, dev in rows:
        click.echo(f"t={t:g}  value={v:.12g}  |value - mean|={dev:.3g}")


def _poly_outputs(d: Path, stem: str, cp, target=None, grid: int = 2001):
    report.write_json(d / f"{stem}.json", report.polynomial_dict(cp))
    xs = np.linspace(*cp.interval, grid)
    report.write_plot(d / f"{stem}.dat", xs, cp(xs))
    if target is not None:
        report.write_plot(d / f"{stem}_target.dat", xs, target(xs))


@main.command()
@click.option("--kernel", default=None, help="Rational kernel to polynomialize (scaled by --t).")
@click.option("--t", "t", type=float, default=1.0, show_default=True)
@click.option("--num", default=None, help="Numerator coefficients, ascending, comma-separated.")
@click.option("--den", default=None, help="Denominator coefficients, ascending.")
@click.option("--interval", nargs=2, type=float, default=(-1.0, 1.0), show_default=True)
@click.option("--eps", type=float, default=1e-3, show_default=True)
@click.option("--method", type=click.Choice(approx.POLY_METHODS), default="auto", show_default=True)
@click.option("--out", default=".", show_default=True)
@_guard
def approximate(kernel, t, num, den, interval, eps, method, out):
    """Certified polynomial for a rational function on an interval."""
    if not eps > 0:
        raise click.BadParameter("--eps must be positive")
    ab = _interval(*interval)
    if kernel is not None:
        kt = scale(get_kernel(kernel), t)
        r = kt.rational
        if r is None:
            raise ValidationError(f"kernel {kt.name} is not rational")
    elif num is not None and den is not None:
        r = RationalFunction(Polynomial(_floats(num, "--num")), Polynomial(_floats(den, "--den")))
    else:
        raise click.UsageError("give --kernel or both --num and --den")
    cp = approx.rational_to_polynomial(r, ab, eps, method=method)
    _poly_outputs(_outdir(out), "approximate", cp, lambda x: np.real(r(x)))
    click.echo(f"degree={cp.degree}  bound={cp.bound:.3g}  measured={cp.measured_error:.3g}")


@main.command()
@click.option("--f", "fname", required=True)
@click.option("--interval", nargs=2, type=float, default=(-1.0, 1.0), show_default=True)
@click.option("--eps", type=float, default=0.1, show_default=True)
@click.option("--kernel", default=None, help="Rational kernel; default picks c/(1+x^2)^m.")
@click.option("--split", default=None, help="Budget fractions, e.g. 0.8,0.05,0.15.")
@click.option("--grid", type=int, default=10000, show_default=True, help="Final check grid.")
@click.option("--out", default=".", show_default=True)
@_guard
def weierstrass(fname, interval, eps, kernel, split, grid, out):
    """Polynomial within eps of f via mollify, Riemann sum, polynomialize."""
    if not eps > 0:
        raise click.BadParameter("--eps must be positive")
    ab = _interval(*interval)
    f = get_function(fname, 1)
    k = get_kernel(kernel) if kernel else None
    kw = {"split": tuple(_floats(split, "--split"))} if split else {}
    cp = approx.weierstrass(f, ab, eps, kernel=k, final_grid=grid, **kw)
    _poly_outputs(_outdir(out), "weierstrass", cp, f)
    for s in cp.meta["stages"]:
        click.echo(f"{s['stage']:>10}: measured {s['measured']:.3g} <= budget {s['budget']:.3g}")
    click.echo(f"degree={cp.degree}  measured_error={cp.measured_error:.4g}  ok={cp.meta['ok']}")
    if not cp.meta["ok"]:
        raise Failure("pipeline finished but a stage or the final check missed its budget")


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--suite", type=click.Choice(["convolve", "approx"]), multiple=True)
@click.option("--out", default=None, help="Also write verify.json here.")
def verify(seed, suite, out):
    """Run the convolve and approx property suites."""
    from .verify import run_checks

    checks = run_checks(seed, suites=list(suite) or None)
    for c in checks:
        click.echo(c.line())
    if out is not None:
        report.write_json(
            _outdir(out) / "verify.json",
            {"seed": seed, "checks": [{"suite": c.suite, "name": c.name, "ok": c.ok, "detail": c.detail}
                                      for c in checks]},
        )
    failed = sum(not c.ok for c in checks)
    click.echo(f"{len(checks) - failed}/{len(checks)} invariants hold")
    if failed:
        sys.exit(1)


if __name__ == "__main__":  # pragma: no cover
    main()
