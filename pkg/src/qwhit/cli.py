"""Command-line entry point ``qwhit``."""

import csv
import json
import os
import sys

import click
import numpy as np

from . import harness as H
from .errors import QwhitError
from .qdilog import ModularParameter, c_function, phi
from .whittaker import WhittakerOptions, sklyanin_m, whittaker


def parse_complex(text):
    """Accept ``1.5``, ``0.2+0.3i``, ``-0.1-2e-3j``, ``0.4i``."""
    s = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise click.BadParameter(f"cannot read {text!r} as a complex number") from None


def parse_csv(text, kind=float):
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected a comma-separated list, got {text!r}") from None


def parse_axis(text):
    try:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise click.BadParameter(f"expected start:stop:count, got {text!r}") from None


def _emit_complex(value, as_json, **extra):
    value = complex(value)
    if as_json:
        click.echo(json.dumps({**extra, "re": value.real, "im": value.imag}))
    else:
        click.echo(f"{value.real:.17g} {value.imag:.17g}")


class _Ctx:
    def __init__(self, cfg):
        self.cfg = cfg


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="key-value file with [qwhit] and [tolerances] sections")
@click.option("--threads", type=int, default=None, help="cap on worker threads (overrides QWHIT_THREADS)")
@click.pass_context
def main(ctx, config_path, threads):
    """Modular quantum dilogarithm, b-Whittaker functions and identity checks."""
    if threads is not None:
        os.environ["QWHIT_THREADS"] = str(threads)
    cfg = H.HarnessConfig.from_file(config_path) if config_path else H.HarnessConfig()
    ctx.obj = _Ctx(cfg)


def _fail(exc):
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    sys.exit(2)


@main.command("phi")
@click.option("--b", "b", type=float, required=True)
@click.option("--z", "z", required=True, help="complex argument, e.g. 0.2+0.1i")
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def phi_cmd(obj, b, z, tol, as_json):
    """Evaluate phi_b(z)."""
    zz = parse_complex(z)
    try:
        _emit_complex(phi(zz, ModularParameter(b), tol, obj.cfg.delta_pole), as_json, b=b, z=str(zz))
    except (QwhitError, ValueError) as exc:
        _fail(exc)


@main.command("cfun")
@click.option("--b", "b", type=float, required=True)
@click.option("--z", "z", required=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def cfun_cmd(obj, b, z, tol, as_json):
    """Evaluate the c-function c(z)."""
    zz = parse_complex(z)
    try:
        _emit_complex(c_function(zz, ModularParameter(b), tol, obj.cfg.delta_pole), as_json, b=b, z=str(zz))
    except (QwhitError, ValueError) as exc:
        _fail(exc)


@main.command("measure")
@click.option("--b", "b", type=float, required=True)
@click.option("--lambda", "lam", required=True, help="comma-separated spectral vector")
@click.option("--json", "as_json", is_flag=True)
def measure_cmd(b, lam, as_json):
    """Evaluate the Sklyanin measure m(lambda)."""
    _emit_complex(sklyanin_m(parse_csv(lam, parse_complex), ModularParameter(b)), as_json, b=b)


@main.command("whittaker")
@click.option("--b", "b", type=float, required=True)
@click.option("--n", "n", type=click.IntRange(1, 3), required=True)
@click.option("--lambda", "lam", required=True)
@click.option("--x", "x", required=True)
@click.option("--method", type=click.Choice(["givental", "mb"]), default="givental", show_default=True)
@click.option("--eps", default="auto", show_default=True, help="contour offset, or 'auto' for Im(c_b)/2")
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def whittaker_cmd(obj, b, n, lam, x, method, eps, tol, as_json):
    """Evaluate Psi^(n)_lambda(x)."""
    lam_v, x_v = parse_csv(lam, parse_complex), parse_csv(x, parse_complex)
    if len(lam_v) != n or len(x_v) != n:
        raise click.BadParameter(f"--lambda and --x need {n} entries each")
    epsilon = obj.cfg.epsilon if eps == "auto" else float(eps)
    opts = WhittakerOptions(epsilon=epsilon, tol=tol, method="mellin_barnes" if method == "mb" else "givental",
                            budget=obj.cfg.budget)
    try:
        _emit_complex(whittaker(lam_v, x_v, ModularParameter(b), opts), as_json, b=b, n=n)
    except (QwhitError, ValueError) as exc:
        _fail(exc)


def _print_reports(reports, as_json):
    if as_json:
        click.echo(H.reports_to_json(reports), nl=False)
    else:
        for r in reports:
            click.echo(r.summary())


@main.command("identity")
@click.argument("name")
@click.option("--b", "b", type=float, required=True)
@click.option("--trials", type=int, default=None, help="parameter draws per case (default: per-case)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tol", type=float, default=None, help="override the case tolerance")
@click.option("--json", "as_json", is_flag=True)
@click.option("--control/--no-control", default=False, help="also run the perturbed-parameter control")
@click.pass_obj
def identity_cmd(obj, name, b, trials, seed, tol, as_json, control):
    """Check a named identity (a family such as gustafson, or family:variant).

    Exit status 0 when every report passes.
    """
    try:
        cases = H.cases_for(name)
    except KeyError as exc:
        raise click.BadParameter(str(exc.args[0]), param_hint="NAME") from None
    if len(cases) > 1:
        cases = [c for c in cases if c.profile != "stretch"] or cases
    reports = []
    for case in cases:
        reports += H.run_case(case, b, trials, seed, obj.cfg, tol)
        if control and case.perturb is not None:
            reports += H.run_case(case, b, 1, seed, obj.cfg, tol, control=True)
    _print_reports(reports, as_json)
    sys.exit(0 if H.suite_ok(reports) else 1)


@main.command("suite")
@click.option("--profile", type=click.Choice(H.PROFILES), default="quick", show_default=True)
@click.option("--b-list", "b_list", default=None, help="comma-separated b values (profile default otherwise)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json", "json_path", type=click.Path(dir_okay=False, writable=True), default=None,
              help="write the JSON report here")
@click.option("--quiet", is_flag=True, help="only print the final tally")
@click.pass_obj
def suite_cmd(obj, profile, b_list, seed, json_path, quiet):
    """Run every identity of a profile; exit status 0 iff all pass.

    Soft cases are reported but do not affect the exit status.
    """
    bs = parse_csv(b_list) if b_list else None
    sink = None if quiet else (lambda r: click.echo(r.summary()))
    reports = H.run_suite(profile, seed, bs, sink, obj.cfg)
    if json_path:
        with open(json_path, "w") as fh:
            fh.write(H.reports_to_json(reports))
    bad = [r for r in reports if not r.ok]
    soft = sum(1 for r in reports if r.soft and not r.passed)
    click.echo(f"{len(reports) - len(bad)}/{len(reports)} ok, {len(bad)} failed, {soft} soft failures")
    sys.exit(0 if not bad else 1)


@main.command("scan")
@click.option("--b", "b", type=float, required=True)
@click.option("--n", "n", type=click.IntRange(2, 2), default=2, show_default=True)
@click.option("--lambda", "lam", required=True)
@click.option("--x-grid", "x_grid", required=True,
              help="start:stop:count for both axes, or two such specs separated by a comma")
@click.option("--out", "out", type=click.Path(dir_okay=False, writable=True), required=True)
@click.pass_obj
def scan_cmd(obj, b, n, lam, x_grid, out):
    """Tabulate Psi^(2)_lambda on a grid as CSV (x1, x2, re, im, abs)."""
    lam_v = parse_csv(lam)
    if len(lam_v) != n:
        raise click.BadParameter(f"--lambda needs {n} entries")
    specs = x_grid.split(",")
    if len(specs) not in (1, n):
        raise click.BadParameter("give one grid spec or one per axis", param_hint="--x-grid")
    ax1 = parse_axis(specs[0])
    ax2 = parse_axis(specs[-1])
    P = ModularParameter(b)
    opts = obj.cfg.whittaker_options()
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "re", "im", "abs"])
        for x1 in ax1:
            for x2 in ax2:
                v = whittaker(lam_v, [x1, x2], P, opts)
                w.writerow([f"{x1:.17g}", f"{x2:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}", f"{abs(v):.17g}"])
    click.echo(f"wrote {ax1.size * ax2.size} rows to {out}")


if __name__ == "__main__":
    main()
