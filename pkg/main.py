#!/usr/bin/env python3
"""
Viscous Burgers boundary-layer study
Command-line entry point

Commands:
- profile: composite profile, derivatives and residual on a grid
- steady: Newton steady state against the composite
- spectrum: smallest eigenvalues of the linearized problem
- evolve: perturb along the principal mode and track the L2 deviation
- sweep: principal eigenvalues over a range of epsilons
- report: every stage plus the acceptance ledger (JSON)
"""
import argparse
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / 'src'))

import numpy as np

from asymptotics import CompositeProfile, stationary_residual
from core import BoundaryPair, Grid
from discretization import newton_solve_steady, resolution_rule
from errors import ConfigError, IncompatibleBoundaryError, NumericalError, PerturbationError
from evolution import run_decay_experiment
from report import build_report
from results_writer import (EVOLVE_HEADER, PROFILE_HEADER, SPECTRUM_HEADER, STEADY_HEADER,
                            ResultsWriter, sweep_header)
from settings import load_config, setup_logging, validate_config
from spectrum import linearized_spectrum, linearized_spectrum_from_state, metastability_sweep

logger = logging.getLogger('main')

COMMANDS = ('profile', 'steady', 'spectrum', 'evolve', 'sweep', 'report')
DEFAULT_CONFIG = Path(__file__).parent / 'config.yaml'


@dataclass
class RunConfig:
    """Validated settings for one command"""
    command: str
    alpha: float = 1.0
    k: float = 0.0
    eps: Union[float, List[float]] = 0.1
    n: Union[int, str] = 'auto'
    nu: float = 1e-3
    t_end: Union[float, str] = 'auto'
    dt: float = 0.01
    m: int = 4
    out_path: str = ''
    format: str = 'csv'
    jobs: int = 1
    allow_below_floor: bool = False
    source: str = 'composite'
    reference: str = 'steady'
    log_level: str = 'INFO'
    settings: dict = field(default_factory=dict, repr=False)

    def resolve_n(self, eps: float) -> int:
        """'auto' grid size via the resolution rule"""
        if self.n != 'auto':
            return int(self.n)
        grid = self.settings.get('grid', {})
        return resolution_rule(eps, grid.get('min_nodes', 401), grid.get('nodes_per_epsilon', 16))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop('settings')
        return d


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _auto_or(kind):
    def convert(text: str):
        if text == 'auto':
            return text
        try:
            return kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected 'auto' or {kind.__name__}, got {text!r}")
    return convert


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='main.py',
        description='Viscous Burgers boundary layer: asymptotics, steady states, spectra and decay'
    )
    parser.add_argument('command', choices=COMMANDS, help='Experiment to run')
    parser.add_argument('--alpha', type=float, help='Left boundary value (right is -alpha)')
    parser.add_argument('--k', type=float, help='Layer shift in the inner variable')
    parser.add_argument('--epsilon', type=float, help='Viscosity')
    parser.add_argument('--epsilons', type=_float_list, help='Comma-separated viscosities (sweep)')
    parser.add_argument('--n', type=_auto_or(int), help="Grid nodes or 'auto'")
    parser.add_argument('--nu', type=float, help='Perturbation amplitude')
    parser.add_argument('--t-end', dest='t_end', type=_auto_or(float), help="Final time or 'auto' (3/lambda_1)")
    parser.add_argument('--dt', type=float, help='Time step')
    parser.add_argument('--m', type=int, help='Number of eigenvalues')
    parser.add_argument('--out', dest='out_path', help='Output file (default results/<command>.<format>)')
    parser.add_argument('--format', choices=('csv', 'json'), help='Output format')
    parser.add_argument('--jobs', type=int, help='Worker threads for sweep rows')
    parser.add_argument('--config', help='YAML configuration file')
    parser.add_argument('--allow-below-floor', action='store_true', default=None,
                        help='Permit eps below the eigenvalue precision floor')
    parser.add_argument('--source', choices=('composite', 'steady'),
                        help='Equilibrium the spectrum is linearized around')
    parser.add_argument('--reference', choices=('steady', 'composite'),
                        help='Equilibrium deviations are measured against')
    parser.add_argument('--log-level', choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'))
    return parser


def _pick(cli_value, config_value):
    return config_value if cli_value is None else cli_value


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """
    Parse the command line into a validated RunConfig

    Command-line values override the YAML configuration, which overrides the built-in
    defaults. BURGERS_JOBS overrides --jobs.

    Raises:
        SystemExit: usage error (exit code 2)
        ConfigError: out-of-range values
    """
    args = build_parser().parse_args(argv)

    config_path = args.config
    if config_path is None and DEFAULT_CONFIG.exists():
        config_path = str(DEFAULT_CONFIG)
    settings = load_config(config_path)
    if not os.getenv('BURGERS_JOBS'):
        settings['jobs'] = _pick(args.jobs, settings['jobs'])

    problems = validate_config(settings)
    if problems:
        raise ConfigError('; '.join(problems))

    profile = settings['profile']
    spectrum = settings['spectrum']
    evolution = settings['evolution']
    fmt = _pick(args.format, settings['output']['format'])

    if args.command == 'sweep':
        eps = args.epsilons if args.epsilons is not None else (
            [args.epsilon] if args.epsilon is not None else list(settings['sweep']['epsilons']))
    else:
        eps = _pick(args.epsilon, profile['epsilon'])

    cfg = RunConfig(
        command=args.command,
        alpha=float(_pick(args.alpha, profile['alpha'])),
        k=float(_pick(args.k, profile['k'])),
        eps=eps,
        n=_pick(args.n, settings['grid']['n']),
        nu=float(_pick(args.nu, evolution['nu'])),
        t_end=_pick(args.t_end, evolution['t_end']),
        dt=float(_pick(args.dt, evolution['dt'])),
        m=int(_pick(args.m, spectrum['m'])),
        out_path=args.out_path or '',
        format='json' if args.command == 'report' else fmt,
        jobs=int(settings['jobs']),
        allow_below_floor=bool(_pick(args.allow_below_floor, spectrum['allow_below_floor'])),
        source=_pick(args.source, spectrum['source']),
        reference=_pick(args.reference, evolution['reference']),
        log_level=_pick(args.log_level, settings['logging']['level']).upper(),
        settings=settings,
    )
    if not cfg.out_path:
        cfg.out_path = f"results/{cfg.command}.{cfg.format}"
    settings['logging']['level'] = cfg.log_level
    _validate_run_config(cfg)
    return cfg


def _validate_run_config(cfg: RunConfig):
    errors = []
    eps_values = cfg.eps if isinstance(cfg.eps, list) else [cfg.eps]
    if not eps_values:
        errors.append("at least one epsilon is required")
    for eps in eps_values:
        if not np.isfinite(eps) or eps <= 0:
            errors.append(f"epsilon must be positive, got {eps}")
    if cfg.n != 'auto' and cfg.n < 3:
        errors.append(f"n must be 'auto' or >= 3, got {cfg.n}")
    if cfg.m < 1:
        errors.append(f"m must be >= 1, got {cfg.m}")
    if not np.isfinite(cfg.alpha) or not np.isfinite(cfg.k):
        errors.append("alpha and k must be finite")
    if not np.isfinite(cfg.nu):
        errors.append(f"nu must be finite, got {cfg.nu}")
    if not cfg.dt > 0:
        errors.append(f"dt must be positive, got {cfg.dt}")
    if cfg.t_end != 'auto' and not cfg.t_end > 0:
        errors.append(f"t_end must be 'auto' or positive, got {cfg.t_end}")
    if cfg.jobs < 1:
        errors.append(f"jobs must be >= 1, got {cfg.jobs}")
    if Path(cfg.out_path).is_dir():
        errors.append(f"output path {cfg.out_path} is a directory")
    if errors:
        raise ConfigError('; '.join(errors))


def _run_profile(cfg: RunConfig, writer: ResultsWriter):
    profile = CompositeProfile(cfg.alpha, cfg.k, cfg.eps)
    g = Grid(-1.0, 1.0, cfg.resolve_n(cfg.eps))
    x = g.x
    residual = stationary_residual(profile, g).values
    rows = zip(x, profile.value(x), profile.first_derivative(x), profile.second_derivative(x), residual)
    writer.write_table(PROFILE_HEADER, rows)


def _steady_state(cfg: RunConfig, eps: float):
    steady = cfg.settings['steady']
    profile = CompositeProfile(cfg.alpha, cfg.k, eps)
    g = Grid(-1.0, 1.0, cfg.resolve_n(eps))
    result = newton_solve_steady(eps, BoundaryPair(cfg.alpha, -cfg.alpha), profile.sample(g),
                                 tol=steady['tol'], max_iter=steady['max_iter'],
                                 max_halvings=steady['max_halvings'])
    return profile, g, result


def _run_steady(cfg: RunConfig, writer: ResultsWriter):
    profile, g, result = _steady_state(cfg, cfg.eps)
    composite = profile.value(g.x)
    u = result.u.values
    writer.write_table(STEADY_HEADER, zip(g.x, u, composite, u - composite))


def _run_spectrum(cfg: RunConfig, writer: ResultsWriter):
    if cfg.source == 'steady':
        _, _, steady = _steady_state(cfg, cfg.eps)
        result = linearized_spectrum_from_state(steady.u, cfg.eps, cfg.m,
                                                allow_below_floor=cfg.allow_below_floor)
    else:
        g = Grid(-1.0, 1.0, cfg.resolve_n(cfg.eps))
        result = linearized_spectrum(CompositeProfile(cfg.alpha, cfg.k, cfg.eps), g, cfg.m,
                                     allow_below_floor=cfg.allow_below_floor)
    rows = [(cfg.eps, j + 1, lam) for j, lam in enumerate(result.eigenvalues)]
    writer.write_table(SPECTRUM_HEADER, rows)


def _run_evolve(cfg: RunConfig, writer: ResultsWriter):
    evolution = cfg.settings['evolution']
    exp = run_decay_experiment(
        cfg.alpha, cfg.eps, nu=cfg.nu, n=cfg.resolve_n(cfg.eps), dt=cfg.dt,
        t_end=None if cfg.t_end == 'auto' else float(cfg.t_end),
        sample_every=evolution['sample_every'], reference=cfg.reference, k=cfg.k,
        allow_below_floor=cfg.allow_below_floor, step_tol=evolution['newton_tol'],
    )
    tr = exp.trajectory
    writer.write_table(EVOLVE_HEADER, zip(tr.times, tr.deviations))


def _run_sweep(cfg: RunConfig, writer: ResultsWriter):
    table = metastability_sweep(
        cfg.alpha, cfg.eps, g_rule=cfg.resolve_n,
        m=cfg.m, k=cfg.k, jobs=cfg.jobs, allow_below_floor=cfg.allow_below_floor,
    )
    header = sweep_header(cfg.m)
    if table.note:
        logger.warning(table.note)

    if cfg.format == 'json':
        writer.write_json({
            'columns': header,
            'rows': [{'eps': r.eps, 'n': r.n, 'eigenvalues': list(r.eigenvalues), 'status': r.status}
                     for r in table.rows],
            'fit': None if table.fit is None else {
                'slope': table.fit.slope,
                'intercept': table.fit.intercept,
                'r_squared': table.fit.r_squared,
            },
            'note': table.note,
        })
        return
    rows = [[r.eps] + (list(r.eigenvalues) if r.status == 'ok' else [''] * cfg.m)
            for r in table.rows]
    writer.write_table(header, rows)


def _run_report(cfg: RunConfig, writer: ResultsWriter) -> bool:
    evolution = dict(cfg.settings['evolution'])
    evolution.update({'nu': cfg.nu, 'dt': cfg.dt, 't_end': cfg.t_end, 'reference': cfg.reference})
    bundle = build_report(
        cfg.alpha, cfg.eps, k=cfg.k, n=None if cfg.n == 'auto' else int(cfg.n), m=cfg.m,
        sweep_eps=cfg.settings['sweep']['epsilons'], evolution=evolution, jobs=cfg.jobs,
        allow_below_floor=cfg.allow_below_floor,
    )
    writer.write_json(bundle.to_dict())
    return bundle.passed


HANDLERS = {
    'profile': _run_profile,
    'steady': _run_steady,
    'spectrum': _run_spectrum,
    'evolve': _run_evolve,
    'sweep': _run_sweep,
    'report': _run_report,
}


def run(cfg: RunConfig) -> int:
    """
    Execute one command

    Returns:
        int: 0 on success, 1 on numerical failure (or a failed report check),
             2 on configuration errors
    """
    setup_logging(cfg.settings or {'logging': {'level': cfg.log_level}})
    started = time.perf_counter()
    logger.info(f"Running {cfg.command}: alpha={cfg.alpha}, k={cfg.k}, eps={cfg.eps}, n={cfg.n}")

    try:
        writer = ResultsWriter(cfg.out_path, cfg.format)
        outcome = HANDLERS[cfg.command](cfg, writer)
        writer.write_meta(cfg.to_dict(), time.perf_counter() - started)
    except NumericalError as e:
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except (ConfigError, IncompatibleBoundaryError, PerturbationError) as e:
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2

    if outcome is False:
        logger.error("Report has failing checks")
        return 1
    logger.info(f"✓ {cfg.command} finished in {time.perf_counter() - started:.2f}s")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_args(argv)
    except ConfigError as e:
        print(f"Error: ConfigError: {e}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
