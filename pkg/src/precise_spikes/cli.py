"""
Command-line entry point.

    precise-spikes <kind> [--config PATH] [--seed N] [--runs N] [--out DIR] ...

Each run writes one CSV per table plus ``manifest.json`` into the output
directory. Settings resolve as: kind defaults < config file < flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, experiments
from .kernels import NeuronParams
from .neuron import ConfigurationError
from .plasticity import FILT, INST
from .tasks import TargetGenerationError, TaskConfig

log = logging.getLogger('precise_spikes')

OUT_ENV = 'PRECISE_SPIKES_OUT'

KINDS = ('kernels', 'dynamics', 'mapping', 'rate-sweep', 'classify',
         'capacity', 'multi-spike', 'verify-appendix')

# key -> type; lists are given as element type inside a list
SETTING_TYPES = {
    'seed': int, 'runs': int, 'jobs': int, 'out': str, 'rule': str,
    'n_inputs': int, 'patterns': int, 'classes': int, 'target_spikes': int,
    'precision_ms': float, 'epochs': int, 'eta': float, 'dt': float,
    'duration': float, 'targets': [float], 'eta_grid': [float],
    'p_grid': [int], 'precision_grid': [float], 'ns_grid': [int],
    'delta_t_grid': [float], 'delta_u_grid': [float], 't_ref': float,
    'bin_width': float, 'smooth': int,
    'eps0': float, 'tau_m': float, 'tau_s': float, 'theta': float,
    'u_reset': float, 'tau_q': float, 'rho0': float, 'delta_u': float,
}
PARAM_KEYS = ('eps0', 'tau_m', 'tau_s', 'theta', 'u_reset', 'tau_q', 'rho0',
              'delta_u')

COMMON = {'seed': 0, 'runs': 1, 'jobs': 1, 'rule': 'both', 'dt': 0.1,
          'duration': 200.0}

KIND_DEFAULTS = {
    'kernels': {},
    'dynamics': {'t_ref': 4.0},
    'mapping': {'n_inputs': 200, 'patterns': 1, 'classes': 1,
                'targets': list(experiments.MAPPING_TARGETS), 'epochs': 200,
                'runs': 10, 'bin_width': 2.0, 'smooth': 5},
    'rate-sweep': {'n_inputs': 200, 'patterns': 10, 'classes': 1,
                   'targets': [experiments.RATE_TARGET], 'epochs': 500,
                   'runs': 10, 'eta_grid': list(experiments.ETA_GRID)},
    'classify': {'n_inputs': 200, 'classes': 5, 'precision_ms': 1.0,
                 'epochs': 500, 'runs': 5, 'p_grid': list(experiments.P_GRID)},
    'capacity': {'n_inputs': 200, 'classes': 5, 'epochs': 500, 'runs': 5,
                 'p_grid': list(experiments.P_GRID),
                 'precision_grid': list(experiments.PRECISION_GRID)},
    'multi-spike': {'n_inputs': 200, 'patterns': 10, 'classes': 5,
                    'precision_ms': 1.0, 'epochs': 1000, 'runs': 5,
                    'ns_grid': list(experiments.NS_GRID)},
    'verify-appendix': {'t_ref': 4.0, 'dt': 0.01,
                        'delta_t_grid': list(experiments.DELTA_T_GRID),
                        'delta_u_grid': list(experiments.DELTA_U_GRID)},
}


def _coerce(key, value):
    kind = SETTING_TYPES.get(key)
    if kind is None:
        raise ConfigurationError('unknown setting %r' % key)
    try:
        if isinstance(kind, list):
            if isinstance(value, str):
                value = [v for v in value.split(',') if v.strip()]
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return [_scalar(kind[0], v) for v in value]
        return _scalar(kind, value)
    except (TypeError, ValueError):
        raise ConfigurationError('bad value %r for %r' % (value, key)) from None


def _scalar(kind, value):
    if kind is int:
        if isinstance(value, bool) or (isinstance(value, float)
                                       and not value.is_integer()):
            raise ValueError
        return int(value)
    if kind is float:
        if isinstance(value, bool):
            raise ValueError
        return float(value)
    return str(value)


def load_config(path) -> dict:
    """Read a flat TOML file of settings."""
    try:
        with open(path, 'rb') as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError('cannot read config %s: %s' % (path, exc))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError('invalid config %s: %s' % (path, exc))
    raw.pop('kind', None)
    return {k: _coerce(k, v) for k, v in raw.items()}


def build_parser():
    parser = argparse.ArgumentParser(
        prog='precise-spikes',
        description='INST/FILT supervised learning experiments for spiking '
                    'neurons; writes CSV tables and a JSON manifest.')
    parser.add_argument('--version', action='version', version=__version__)
    sub = parser.add_subparsers(dest='kind', required=True, metavar='KIND')
    for kind in KINDS:
        sp = sub.add_parser(kind, help='run the %s experiment' % kind)
        sp.add_argument('--config', metavar='PATH')
        sp.add_argument('--seed', type=int)
        sp.add_argument('--runs', type=int)
        sp.add_argument('--jobs', type=int)
        sp.add_argument('--out', metavar='DIR')
        sp.add_argument('--rule', choices=(INST, FILT, 'both'))
        sp.add_argument('--n-inputs', dest='n_inputs', type=int)
        sp.add_argument('--patterns', type=int)
        sp.add_argument('--classes', type=int)
        sp.add_argument('--target-spikes', dest='target_spikes', type=int)
        sp.add_argument('--precision-ms', dest='precision_ms', type=float)
        sp.add_argument('--epochs', type=int)
        sp.add_argument('--eta', type=float)
        sp.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                        help='any other setting, e.g. --set p_grid=5,10,15')
        sp.add_argument('-v', '--verbose', action='store_true')
    return parser


def resolve_settings(args) -> dict:
    settings = dict(COMMON)
    settings.update(KIND_DEFAULTS[args.kind])
    settings['out'] = os.environ.get(OUT_ENV, 'results/%s' % args.kind)
    if args.config:
        settings.update(load_config(args.config))
    for item in args.set:
        key, sep, value = item.partition('=')
        if not sep:
            raise ConfigurationError('--set expects KEY=VALUE, got %r' % item)
        settings[key.strip()] = _coerce(key.strip(), value.strip())
    for key in SETTING_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if settings['runs'] < 1 or settings['seed'] < 0 or settings['jobs'] < 1:
        raise ConfigurationError('runs and jobs must be >= 1, seed >= 0')
    if settings['rule'] not in (INST, FILT, 'both'):
        raise ConfigurationError('rule must be inst, filt or both')
    return settings


def neuron_params(settings) -> NeuronParams:
    changes = {k: settings[k] for k in PARAM_KEYS if k in settings}
    try:
        return NeuronParams().with_(**changes) if changes else NeuronParams()
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None


def task_config(settings, params) -> TaskConfig:
    targets = settings.get('targets')
    classes = settings.get('classes', 1)
    fixed = None
    if targets is not None:
        fixed = (tuple(targets),) * classes
    return TaskConfig(
        n_inputs=settings['n_inputs'],
        n_patterns=settings.get('patterns', classes),
        n_classes=classes,
        n_target_spikes=settings.get('target_spikes', 1),
        duration=settings['duration'],
        precision=settings.get('precision_ms', 1.0),
        epochs=settings['epochs'],
        eta=settings.get('eta'),
        dt=settings['dt'],
        seed=settings['seed'],
        fixed_targets=fixed,
        params=params)


def run_experiment(kind, settings) -> experiments.Result:
    p = neuron_params(settings)
    rules = (INST, FILT) if settings['rule'] == 'both' else (settings['rule'],)
    runs, jobs = settings['runs'], settings['jobs']
    if kind == 'kernels':
        return experiments.kernels(p)
    if kind == 'dynamics':
        return experiments.dynamics(p, settings['t_ref'])
    if kind == 'verify-appendix':
        return experiments.verify_appendix(
            p, settings['t_ref'], settings['delta_t_grid'],
            settings['delta_u_grid'], settings['duration'], settings['dt'])
    cfg = task_config(settings, p)
    if kind == 'mapping':
        return experiments.mapping(cfg, runs, rules, jobs,
                                   settings['bin_width'], settings['smooth'])
    if kind == 'rate-sweep':
        return experiments.rate_sweep(cfg, runs, rules, settings['eta_grid'],
                                      jobs)
    if kind == 'classify':
        return experiments.classification(cfg, runs, rules,
                                          settings['p_grid'], jobs)
    if kind == 'capacity':
        return experiments.capacity(cfg, runs, rules, settings['p_grid'],
                                    settings['precision_grid'], jobs)
    if kind == 'multi-spike':
        return experiments.multi_spike(cfg, runs, rules, settings['ns_grid'],
                                       jobs)
    raise ConfigurationError('unknown kind %r' % kind)


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, int)) and not isinstance(value, float):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return 'nan'
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return format(value, '.9g')


def write_table(path: Path, table) -> None:
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([format_value(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, 'item'):
        return obj.item()
    return obj


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    start = time.perf_counter()
    try:
        settings = resolve_settings(args)
        result = run_experiment(args.kind, settings)
    except TargetGenerationError as exc:
        print('error: target generation infeasible: %s' % exc, file=sys.stderr)
        return 3
    except ConfigurationError as exc:
        print('error: invalid configuration: %s' % exc, file=sys.stderr)
        return 2

    out = Path(settings['out'])
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for name, table in result.tables.items():
        write_table(out / ('%s.csv' % name), table)
        files.append('%s.csv' % name)
    manifest = {
        'kind': args.kind,
        'version': __version__,
        'seed': settings['seed'],
        'runs': settings['runs'],
        'settings': settings,
        'files': files,
        'summary': result.summary,
        'wall_time_s': round(time.perf_counter() - start, 3),
    }
    with open(out / 'manifest.json', 'w', encoding='utf-8') as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write('\n')
    log.info('wrote %s to %s', ', '.join(files), out)
    return 0


if __name__ == '__main__':
    sys.exit(main())
