"""
Flags, exit codes and run bookkeeping shared by the experiment commands.

Exit codes: 2 config error, 3 numerical error, 4 I/O error.
"""
import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError

from core.exceptions import SimulationError
from experiments.config import load_config
from experiments.models import ExperimentRun
from experiments.presets import PRESETS

logger = logging.getLogger('experiments')

CONFIG_ERROR = 2
NUMERICAL_ERROR = 3
IO_ERROR = 4


def describe_validation_error(exc):
    if hasattr(exc, 'error_dict'):
        return '; '.join(f'{key}: {" ".join(messages)}' for key, messages in sorted(exc.message_dict.items()))
    return ' '.join(exc.messages)


def describe_os_error(exc):
    if exc.filename:
        return f'{exc.filename}: {exc.strerror or exc}'
    return str(exc)


def start_run(kind, config):
    try:
        return ExperimentRun.objects.create(
            kind=kind,
            preset=config.preset,
            config_hash=config.config_hash,
            seed=str(config.seed),
            parameters=config.as_dict(),
        )
    except DatabaseError as exc:
        logger.warning('run not recorded (%s); is the database migrated?', exc)
        return None


def _finish(run, paths=None, error=None):
    if run is None:
        return
    try:
        if error is None:
            run.mark_completed(paths or [])
        else:
            run.mark_failed(error)
    except DatabaseError as exc:
        logger.warning('could not update run %s: %s', run.pk, exc)


class ExperimentCommand(BaseCommand):
    kind = None
    monte_carlo_flag = False

    def add_arguments(self, parser):
        parser.add_argument('--config', help='TOML or JSON experiment config')
        parser.add_argument('--preset', choices=sorted(PRESETS), help='named base config')
        parser.add_argument('--out', help='output directory')
        parser.add_argument('--seed', type=int, help='master random seed')
        parser.add_argument('--threads', type=int, help='worker threads, 0 = all cores')
        parser.add_argument('--symbols', type=int, help='Monte Carlo symbols per point')
        if self.monte_carlo_flag:
            parser.add_argument('--no-monte-carlo', action='store_true', help='analytic curves only')

    def overrides(self, options):
        simulation = {k: options[k] for k in ('seed', 'threads') if options.get(k) is not None}
        if options.get('symbols') is not None:
            simulation['symbols'] = options['symbols']
        if options.get('no_monte_carlo'):
            simulation['monte_carlo'] = False
        overrides = {'simulation': simulation}
        if options.get('out'):
            overrides['output'] = {'directory': options['out']}
        return overrides

    def load(self, options):
        try:
            return load_config(options.get('config'), options.get('preset'), self.overrides(options))
        except ValidationError as exc:
            raise CommandError(f'invalid config: {describe_validation_error(exc)}', returncode=CONFIG_ERROR)
        except OSError as exc:
            raise CommandError(describe_os_error(exc), returncode=IO_ERROR)

    def run(self, config):
        raise NotImplementedError

    def report(self, output):
        for path in output.paths:
            self.stdout.write(f'  {path}')

    def handle(self, *args, **options):
        config = self.load(options)
        run = start_run(self.kind, config)
        try:
            output = self.run(config)
        except SimulationError as exc:
            _finish(run, error=exc)
            raise CommandError(f'numerical error: {exc}', returncode=NUMERICAL_ERROR)
        except OSError as exc:
            _finish(run, error=exc)
            raise CommandError(describe_os_error(exc), returncode=IO_ERROR)
        _finish(run, paths=output.paths)
        self.stdout.write(self.style.SUCCESS(f'{self.kind} finished (config {config.config_hash[:12]}, seed {config.seed})'))
        self.report(output)
        return None
