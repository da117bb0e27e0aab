"""
Command-line interface for FeedbackGain.

Usage:
    feedbackgain exponent --M 3 --A 1 --sigma 0.1 --beta 0.3 --tau0 0.1
    feedbackgain optimize --M 3 --sigma 0.05 --grid-dump grid.csv
    feedbackgain simulate --config configs/example.toml --trials 100000 --out runs/sim
    feedbackgain sweep --config configs/example.toml --axis total_energy --values 8,12,16
    feedbackgain codegen --kind simplex --M 5 --energy 4 --out codes/
    feedbackgain validate-bounds --configs 50 --out runs/bounds
"""

import functools
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import List, Optional

import click
from pydantic import ValidationError

from src import __version__
from src.errors import FeedbackGainError, InsufficientDataError
from src.exponents.bounds import exponent_breakdown, exponent_zero_rate_limits
from src.exponents.optimizer import GridSpec, f1_lower
from src.geometry.codebook import gram_check, make_simplex, simplex_to_orthogonal
from src.geometry.packing import make_quasi_equidistant
from src.geometry.storage import write_codebook
from src.harness.config import load_run_config
from src.harness.results import write_json, write_manifest, write_table
from src.protocol.params import derive_params
from src.simulation.monte_carlo import run_monte_carlo, sweep as run_sweep
from src.simulation.statistics import fit_slope
from src.validation.ambiguity import VALIDATION_DEFAULTS, validate_bounds

logger = logging.getLogger(__name__)

BANNER = "=" * 60
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def _banner(title: str) -> None:
    click.echo("\n" + BANNER)
    click.echo(title)
    click.echo(BANNER + "\n")


def _floats(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    return [float(v) for v in text.split(',') if v.strip()]


def _ints(text: Optional[str]) -> Optional[List[int]]:
    values = _floats(text)
    return None if values is None else [int(v) for v in values]


def _beta_arg(text: Optional[str]):
    if text is None or text == 'auto':
        return text
    return float(text)


def handle_errors(func):
    """Map library errors to exit codes: 2 for bad input, 1 for I/O."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (FeedbackGainError, ValidationError) as e:
            logger.error("%s failed: %s", func.__name__, e)
            click.echo(f"[FAIL] {e}", err=True)
            sys.exit(2)
        except OSError as e:
            logger.error("%s failed: %s", func.__name__, e)
            click.echo(f"[FAIL] {e}", err=True)
            sys.exit(1)
    return wrapper


def scheme_options(func):
    """Scheme flags shared by exponent, optimize, simulate and sweep."""
    options = [
        click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
                     help='TOML run configuration'),
        click.option('--M', 'M', type=int, default=None, help='Number of messages'),
        click.option('--A', 'A', type=float, default=None, help='Per-symbol power'),
        click.option('--total-energy', type=float, default=None, help='Total energy nA'),
        click.option('--n', 'n', type=int, default=None, help='Block length (default 2M-2)'),
        click.option('--sigma', type=float, default=None, help='Feedback noise scale'),
        click.option('--beta', type=str, default=None, help="Energy split, or 'auto'"),
        click.option('--tau0', type=str, default=None, help="Switching threshold, or 'auto'"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def run_options(func):
    """Common run flags."""
    options = [
        click.option('--seed', type=int, default=None, help='64-bit master seed'),
        click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None,
                     help='Output directory'),
        click.option('--trials', type=int, default=None, help='Number of trials'),
        click.option('--threads', type=int, default=None, help='Worker threads'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _load(config_path, M, A, total_energy, n, sigma, beta, tau0, **run_overrides):
    """RunConfig with scheme flags applied over the config file."""
    cfg = load_run_config(Path(config_path) if config_path else None, **run_overrides)
    scheme_flags = {'M': M, 'A': A, 'total_energy': total_energy, 'n': n, 'sigma': sigma,
                    'beta': _beta_arg(beta), 'tau0': _beta_arg(tau0)}
    scheme_flags = {k: v for k, v in scheme_flags.items() if v is not None}
    if not scheme_flags:
        return cfg
    scheme = cfg.scheme.model_dump()
    # A flag for one power quantity replaces the file's other one
    if 'A' in scheme_flags:
        scheme['total_energy'] = None
    if 'total_energy' in scheme_flags:
        scheme['A'] = None
    scheme.update(scheme_flags)
    data = cfg.model_dump()
    data['scheme'] = scheme
    return type(cfg)(**data)


@click.group()
@click.version_option(__version__, prog_name='feedbackgain')
@click.option('--verbose', '-v', is_flag=True, help='Debug logging')
def cli(verbose: bool):
    """Zero-rate AWGN transmission with noisy passive feedback."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT)


@cli.command()
@scheme_options
@click.option('--finite-n', is_flag=True, help='Include finite-n corrections')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None)
@handle_errors
def exponent(config_path, M, A, total_energy, n, sigma, beta, tau0, finite_n, out_dir):
    """Evaluate B1, B2, B3 and the no-feedback exponent at one point."""
    cfg = _load(config_path, M, A, total_energy, n, sigma, beta, tau0)
    scheme = cfg.scheme
    n_used = scheme.resolved_n()
    A_used = scheme.resolved_total_energy() / n_used
    beta_v, tau0_v = scheme.beta, scheme.tau0
    if beta_v == 'auto' or tau0_v == 'auto':
        report = f1_lower(scheme.M, A_used, scheme.sigma)
        beta_v = report.best_beta if beta_v == 'auto' else beta_v
        tau0_v = report.best_tau0 if tau0_v == 'auto' else tau0_v

    p = derive_params(A_used, n_used, scheme.M, scheme.sigma, beta_v, tau0_v)
    bd = exponent_breakdown(p, finite_n=finite_n)
    limits = exponent_zero_rate_limits(A_used, scheme.sigma)

    _banner("ERROR EXPONENTS")
    click.echo(f"M={p.M}  A={p.A:.6g}  n={p.n}  sigma={p.sigma:g}  beta={p.beta:.6g}  tau0={p.tau0:.4g}\n")
    click.echo(f"  B1:          {bd.b1:.10f}")
    click.echo(f"  B2:          {bd.b2:.10f}")
    click.echo(f"  B3:          {bd.b3:.10f}")
    click.echo(f"  min(B):      {bd.min_b:.10f}")
    click.echo(f"  E(M,A):      {bd.e_nofb:.10f}")
    click.echo(f"  Gain:        {bd.gain:.6f}")
    if finite_n:
        click.echo(f"  min(B), n:   {bd.min_b_finite_n:.10f}")
    click.echo("\nZero-rate limits (M -> inf):")
    for key, value in limits.items():
        click.echo(f"  {key:<12} {value:.10f}")

    if out_dir:
        result = {**asdict(bd), 'gain': bd.gain, 'zero_rate_limits': limits}
        write_json(result, out_dir, 'exponent.json')
        write_manifest(out_dir, 'exponent', p.to_dict())


@cli.command()
@scheme_options
@click.option('--grid-dump', type=click.Path(dir_okay=False), default=None,
              help='Write the coarse grid to this CSV')
@click.option('--no-refine', is_flag=True, help='Skip the local zoom rounds')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None)
@handle_errors
def optimize(config_path, M, A, total_energy, n, sigma, beta, tau0, grid_dump, no_refine, out_dir):
    """Maximize min(B1, B2, B3) over beta and tau0."""
    cfg = _load(config_path, M, A, total_energy, n, sigma, None, None)
    scheme = cfg.scheme
    A_used = scheme.resolved_total_energy() / scheme.resolved_n()
    report = f1_lower(scheme.M, A_used, scheme.sigma, GridSpec(),
                      refine=not no_refine, keep_grid=grid_dump is not None)

    _banner("MAX-MIN OPTIMIZATION")
    for key, value in report.summary().items():
        click.echo(f"  {key:<18} {value}")
    tag = "[OK]" if report.gain > 1.0 else "[WARN]"
    click.echo(f"\n{tag} Gain over no feedback: {report.gain:.6f}")

    if grid_dump:
        path = Path(grid_dump)
        write_table(report.grid, path.parent, path.name)
    if out_dir:
        write_json(report.summary(), out_dir, 'optimize.json')
        write_manifest(out_dir, 'optimize', scheme.model_dump())


@cli.command()
@scheme_options
@run_options
@click.option('--mode', type=click.Choice(['FullBayes', 'NoFeedbackML', 'Genie']), default=None)
@click.option('--dump-transcripts', type=int, default=None, help='Keep the first k transcripts')
@click.option('--zero-noise', is_flag=True, help='All noise draws are zero')
@handle_errors
def simulate(config_path, M, A, total_energy, n, sigma, beta, tau0,
             seed, out_dir, trials, threads, mode, dump_transcripts, zero_noise):
    """Monte Carlo estimate of the decoding error probability."""
    cfg = _load(config_path, M, A, total_energy, n, sigma, beta, tau0,
                seed=seed, out_dir=out_dir, trials=trials, threads=threads,
                dump_transcripts=dump_transcripts, zero_noise=zero_noise or None)
    if mode is not None:
        cfg = cfg.model_copy(update={'decoder': cfg.decoder.model_copy(update={'mode': mode})})

    estimate = run_monte_carlo(cfg)

    _banner("MONTE CARLO ERROR ESTIMATE")
    click.echo(f"  Mode:        {cfg.decoder.mode}")
    click.echo(f"  Errors:      {estimate.errors:,} / {estimate.trials:,}")
    click.echo(f"  p_hat:       {estimate.p_hat:.6g}")
    click.echo(f"  95% CI:      [{estimate.ci_low:.6g}, {estimate.ci_high:.6g}]")
    click.echo(f"  -ln(p)/n:    {estimate.neg_log_p_per_symbol:.6g}")
    click.echo(f"  Seed:        {estimate.seed}")


@cli.command()
@scheme_options
@run_options
@click.option('--axis', type=click.Choice(['total_energy', 'sigma', 'M']), default=None)
@click.option('--values', type=str, default=None, help='Comma-separated grid')
@click.option('--mode', type=click.Choice(['FullBayes', 'NoFeedbackML', 'Genie']), default=None)
@handle_errors
def sweep(config_path, M, A, total_energy, n, sigma, beta, tau0,
          seed, out_dir, trials, threads, axis, values, mode):
    """Error-rate sweep over total energy, sigma or M."""
    cfg = _load(config_path, M, A, total_energy, n, sigma, beta, tau0,
                seed=seed, out_dir=out_dir, trials=trials, threads=threads)
    if axis is not None or values is not None:
        grid = cfg.sweep.model_dump() if cfg.sweep is not None else {}
        grid.update({k: v for k, v in {'axis': axis, 'values': _floats(values)}.items() if v is not None})
        data = cfg.model_dump()
        data['sweep'] = grid
        cfg = type(cfg)(**data)
    if mode is not None:
        cfg = cfg.model_copy(update={'decoder': cfg.decoder.model_copy(update={'mode': mode})})

    table = run_sweep(cfg)

    _banner(f"SWEEP OVER {cfg.sweep.axis.upper()}")
    click.echo(table.to_string(index=False))

    if cfg.sweep.axis == 'total_energy':
        try:
            fit = fit_slope(table)
        except InsufficientDataError as e:
            click.echo(f"\n[WARN] No slope fit: {e}")
        else:
            click.echo(f"\n[OK] Slope of -ln(p_hat) vs nA: {fit['slope']:.4f} +- {fit['stderr']:.4f}")
            if cfg.out_dir:
                write_json(fit, cfg.out_dir, 'slope.json')


@cli.command()
@click.option('--kind', type=click.Choice(['simplex', 'orthogonal', 'quasi']), default='simplex')
@click.option('--M', 'M', type=int, required=True, help='Number of codewords')
@click.option('--energy', type=float, default=1.0, help='Energy per codeword')
@click.option('--dim', type=int, default=None, help='Dimension (simplex default M-1, quasi required)')
@click.option('--rho', type=float, default=0.4, help='Cosine cap for quasi codes')
@click.option('--seed', type=int, default=0)
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), required=True)
@handle_errors
def codegen(kind, M, energy, dim, rho, seed, out_dir):
    """Generate a codebook and write it as CSV plus JSON header."""
    extra = {}
    if kind == 'quasi':
        if dim is None:
            raise click.UsageError("--dim is required for quasi codes")
        result = make_quasi_equidistant(dim, rho, M, seed)
        cb = result.codebook.scaled(energy)
        extra = {'rho': rho, 'seed': seed, 'target': result.target, 'achieved': result.achieved,
                 'floor': result.floor, 'candidates_tried': result.candidates_tried,
                 'complete': result.complete}
    elif kind == 'orthogonal':
        cb = simplex_to_orthogonal(make_simplex(M, energy * (M - 1) / M, max(dim or M, M)))
    else:
        cb = make_simplex(M, energy, dim if dim is not None else M - 1)

    report = gram_check(cb)
    csv_path, json_path = write_codebook(cb, Path(out_dir), stem=kind, extra=extra)
    write_manifest(out_dir, 'codegen', {'kind': kind, 'M': M, 'energy': energy, 'dim': cb.dim},
                   seed if kind == 'quasi' else None)

    _banner("CODEBOOK")
    click.echo(f"  Kind:        {cb.kind}")
    click.echo(f"  Codewords:   {cb.M} in dimension {cb.dim}")
    click.echo(f"  Max |cos|:   {report.max_abs_offdiag_cosine:.6f}")
    click.echo(f"  Equidistant: {report.is_equidistant}")
    click.echo(f"\n[OK] Wrote {csv_path} and {json_path}")


@cli.command('validate-bounds')
@click.option('--M', 'M_values', type=str, default='3,5', help='Comma-separated M values')
@click.option('--sigma', 'sigmas', type=str, default='0.1,0.5,1.0', help='Comma-separated sigmas')
@click.option('--configs', 'n_configs', type=int, default=VALIDATION_DEFAULTS['n_configs'])
@click.option('--total-energy', type=float, default=VALIDATION_DEFAULTS['total_energy'])
@click.option('--beta', type=float, default=VALIDATION_DEFAULTS['beta'])
@click.option('--tau0', type=float, default=VALIDATION_DEFAULTS['tau0'])
@click.option('--seed', type=int, default=0)
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None)
@click.option('--trials', type=int, default=VALIDATION_DEFAULTS['trials'])
@click.option('--threads', type=int, default=None)
@handle_errors
def validate_bounds_cmd(M_values, sigmas, n_configs, total_energy, beta, tau0,
                        seed, out_dir, trials, threads):
    """Check the p1/p3 caps against sampled feedback noise."""
    table = validate_bounds(_ints(M_values), _floats(sigmas), n_configs=n_configs, trials=trials,
                            total_energy=total_energy, beta=beta, tau0=tau0,
                            seed=seed, threads=threads)
    failures = table[~table['pass']]

    _banner("BOUND VALIDATION")
    click.echo(f"  Configurations: {len(table)}")
    click.echo(f"  Max p1_hat - bound1: {(table['p1_hat'] - table['bound1']).max():.4g}")
    click.echo(f"  Max p3_hat - bound3: {(table['p3_hat'] - table['bound3']).max():.4g}")

    if out_dir:
        write_table(table, out_dir, 'bounds.csv')
        write_manifest(out_dir, 'validate-bounds', {
            'M': _ints(M_values), 'sigma': _floats(sigmas), 'n_configs': n_configs,
            'trials': trials, 'total_energy': total_energy, 'beta': beta, 'tau0': tau0,
        }, seed)

    if len(failures):
        click.echo(f"\n[FAIL] {len(failures)} configurations exceed a cap")
        sys.exit(1)
    click.echo("\n[PASS] All configurations within the caps")


def main():
    cli()


if __name__ == '__main__':
    main()
