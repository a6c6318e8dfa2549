"""``hecke`` command line: orbit generation and density experiments.

Exit codes: 0 on success, 2 on invalid input, 3 when a radius or work
budget is insufficient.
"""

from __future__ import annotations

import logging
import sys
from functools import wraps
from pathlib import Path

import click

from . import harness
from .errors import BudgetError, DomainError, InsufficientRadiusError
from .orbit import _as_fraction

EXIT_VALIDATION = 2
EXIT_BUDGET = 3


def _load_config(ctx: click.Context, _param, value):
    if value is None:
        return None
    try:
        flat = harness.read_config_file(value)
    except (OSError, DomainError) as exc:
        raise click.BadParameter(str(exc)) from exc
    if "format" in flat:
        flat["fmt"] = flat.pop("format")
    # Config values become defaults, so explicit flags still win.
    ctx.default_map = {name: dict(flat) for name in cli.commands}
    return value


def common_options(f):
    opts = [
        click.option("--q", "q", type=int, default=3, show_default=True, help="Hecke group index (>= 3)."),
        click.option("--radius", "radius", default=None, help="Single radius; overrides the sweep."),
        click.option(
            "--radius-sweep",
            "radius_sweep",
            default=",".join(str(r) for r in harness.DEFAULT_SWEEP),
            show_default=True,
            help="Comma-separated, strictly increasing radii.",
        ),
        click.option("--n", "n", default="auto", show_default=True, help="Comma-separated ring elements (e.g. 1,L,1+L) or 'auto'."),
        click.option("--n-bound", "n_bound", default="4", show_default=True, help="Bound on |n| when --n=auto."),
        click.option("--k", "k", type=int, default=2, show_default=True, help="Tuple length for 'tuples'."),
        click.option("--phi-mode", "phi_mode", type=click.Choice(["paper", "fundamental"]), default="paper", show_default=True),
        click.option("--refine-m", is_flag=True, help="Split pair counts by canonical orbit label m."),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True),
        click.option("--out", "out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Output file (default stdout)."),
        click.option("--cache-dir", "cache_dir", type=click.Path(file_okay=False, path_type=Path), default=None),
        click.option("--workers", "workers", type=int, default=1, show_default=True),
        click.option("--budget", "budget", type=int, default=2_000_000, show_default=True, help="Tuple budget for 'tuples'."),
        click.option("-v", "--verbose", count=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _build_config(kw) -> harness.ExperimentConfig:
    q = kw["q"]
    radii = (_as_fraction(kw["radius"]),) if kw.get("radius") else harness.parse_radii(kw["radius_sweep"])
    cfg = harness.ExperimentConfig(
        q=q,
        radii=radii,
        k=kw["k"],
        ns=harness.parse_ns(kw["n"], q) if q >= 3 else "auto",
        n_bound=_as_fraction(kw["n_bound"]),
        phi_mode=kw["phi_mode"],
        refine_m=kw["refine_m"],
        fmt=kw["fmt"],
        out=kw["out"],
        cache_dir=kw["cache_dir"],
        workers=kw["workers"],
        budget=kw["budget"],
    )
    return cfg.validate()


def _emit(cfg: harness.ExperimentConfig, text: str) -> None:
    if cfg.out is None:
        click.echo(text, nl=False)
        return
    try:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        cfg.out.write_text(text)
    except OSError as exc:
        raise DomainError(f"cannot write {cfg.out}: {exc}") from exc


def experiment(f):
    """Turn library errors into exit codes and build the config."""

    @common_options
    @wraps(f)
    def wrapper(**kw):
        logging.basicConfig(level=logging.WARNING - 10 * min(kw.pop("verbose"), 2), stream=sys.stderr, force=True)
        try:
            cfg = _build_config(kw)
            f(cfg, harness.OrbitCache(cfg.cache_dir))
        except (InsufficientRadiusError, BudgetError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_BUDGET)
        except (DomainError, ValueError, ZeroDivisionError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)

    return wrapper


@click.group()
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    callback=_load_config,
    is_eager=True,
    expose_value=False,
    help="key=value file mirroring the flags; flags override it.",
)
def cli():
    """Hecke group orbits and Siegel-Veech moment experiments."""


@cli.command()
@experiment
def gen(cfg, cache):
    """Generate V_q in B(0, R) and report its density."""
    rows = harness.run_gen(cfg, cache)
    for path in cache.written:
        click.echo(f"orbit cached at {path}", err=True)
    last = rows[-1]
    click.echo(
        f"q={cfg.q} R={last['R']} count={last['count']} density={last['density']:.6g} "
        f"vs 1/c(q): {last['ratio_inv_c']:.6g} vs lambda/c(q): {last['ratio_lambda_over_c']:.6g}",
        err=True,
    )
    _emit(cfg, harness.render(rows, harness.GEN_COLUMNS, cfg.fmt))


@cli.command()
@experiment
def pairs(cfg, cache):
    """Count_q(R, n)/R^2 against the predicted pair densities."""
    _emit(cfg, harness.render(harness.run_pairs(cfg, cache), harness.PAIR_COLUMNS, cfg.fmt))


@cli.command()
@experiment
def slopes(cfg, cache):
    """Slope-pair scatter (a/b, c/d) for pairs of determinant n."""
    _emit(cfg, harness.render(harness.run_slopes(cfg, cache), harness.SLOPE_COLUMNS, cfg.fmt))


@cli.command()
@experiment
def tuples(cfg, cache):
    """Census of k-tuple orbit classes in the ball of radius R."""
    try:
        rows, summary = harness.run_tuples(cfg, cache)
    except BudgetError as exc:
        partial = exc.partial
        if partial is not None:
            rows = [
                {"q": cfg.q, "R": str(cfg.r_max), "k": cfg.k, "class": partial.labels[key], "count": cnt}
                for key, cnt in sorted(partial.counts.items(), key=lambda kv: partial.labels[kv[0]])
            ]
            _emit(cfg, harness.render(rows, harness.TUPLE_COLUMNS, cfg.fmt))
        click.echo(f"PARTIAL: stopped after {exc.progress} tuples", err=True)
        raise
    click.echo(" ".join(f"{k}={v}" for k, v in summary.items()), err=True)
    _emit(cfg, harness.render(rows, harness.TUPLE_COLUMNS, cfg.fmt))
    if summary["criterion_failures"]:
        raise DomainError(f"{summary['criterion_failures']} tuples failed the membership criterion")


@cli.command()
@experiment
def phi(cfg, cache):
    """phi_q(n) in both windows (and the totient when q = 3)."""
    _emit(cfg, harness.render(harness.run_phi(cfg, cache), harness.PHI_COLUMNS, cfg.fmt))


@cli.command()
@experiment
def nq(cfg, cache):
    """Determinants n with |n| <= --n-bound admitting a window representative."""
    _emit(cfg, harness.render(harness.run_nq(cfg, cache), harness.NQ_COLUMNS, cfg.fmt))


def main():  # pragma: no cover
    cli()


if __name__ == "__main__":  # pragma: no cover
    main()
