#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Copyright (c) 2019-2022, Martin Chatterjee. All rights reserved.
# Licensed under MIT License (--> LICENSE.txt)
# -----------------------------------------------------------------------------

"""The 'esac' command line front end.

Subcommands:
    - detect     : multiple changepoint detection on a CSV file
    - estimate   : single changepoint estimation on a CSV file
    - intervals  : prints the seeded intervals as JSON lines
    - calibrate  : Monte Carlo calibration of the testing penalty
    - simulate   : runs simulation experiments from a JSON design
    - bench      : times the detector over a grid of (n, p)
    - init       : writes a sample .esac.config

Settings get collected from the command line, then from a config file
(JSON that may contain # comments), then from built-in defaults. Values
given on the command line always win.

Results are written as JSON to --output, or to STDOUT. Log messages go to
STDERR.

Exit codes:
    0 : success
    1 : any other error
    2 : unreadable input, invalid config or invalid arguments
    3 : calibrated penalty does not match the data or settings
    4 : a series has a zero noise level estimate

"""

import argparse
import json
import logging
import os
import sys
import time
import traceback

import numpy as np
import pandas

import esac
from esac import (
    ConfigMismatchError,
    DegenerateSeriesError,
    EsacError,
    ParseError,
    logger,
)
from esac import calibrate, detect, intervals, simulate
from esac.core_stats import analyticTable, buildMatrix, makeContext

CONFIG_NAME = '.esac.config'

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_MISMATCH = 3
EXIT_DEGENERATE = 4

DEFAULTS = {
    'alpha': 1.5,
    'k': 4,
    'variant': 'split',
    'n_eff': 'n4',
    'penalty': 'analytic',
    'epsilon': 0.01,
    'mc_n': 1000,
    'rule': 'tilde',
    'seed': 0,
    'threads': None,
    'normalize': True,
    'theoretical': False,
    'top_k': None,
    'replicates': 100,
    'repeats': 5,
    'grid_n': '256,512,1024',
    'grid_p': '64,128,256',
}

# Per-coordinate jump height of the best-case benchmark design.
BEST_CASE_JUMP = 20.0


# -----------------------------------------------------------------------------
def runMain(args=[]):
    """Main function that gets executed when ``esac`` gets run.

    Collects and validates **settings** from both the passed in arguments as
    well as the config file, then runs the requested subcommand.

    Args:
        args (list)     :   list of command line arguments. (optional)

    Returns:
        (int)           :   exit code

    """
    try:
        settings = collectSettings(args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_PARSE

    if settings['verbose']:
        esac.initLogging(level=logging.DEBUG)
    elif settings['quiet']:
        esac.initLogging(level=logging.WARNING)

    command = COMMANDS[settings['command']]
    try:
        return command(settings)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_ERROR
    except EsacError as e:
        logger.error('{}: {}'.format(type(e).__name__, e))
        logger.debug(traceback.format_exc())
        return exitCodeFor(e)


# -----------------------------------------------------------------------------
def exitCodeFor(e):
    """Maps an esac exception onto an exit code."""
    if isinstance(e, ParseError):
        return EXIT_PARSE
    if isinstance(e, ConfigMismatchError):
        return EXIT_MISMATCH
    if isinstance(e, DegenerateSeriesError):
        return EXIT_DEGENERATE
    return EXIT_ERROR


# -----------------------------------------------------------------------------
def collectSettings(args=[]):
    """Collects and validates 'settings' from both the passed in arguments
    as well as the config file.

    Args:
        args (list)     :   list of command line arguments. (optional)

    Returns:
        (dict)          :   dictionary holding all settings

    Raises:
        (SystemExit)    :   on missing or incompatible settings or arguments

    """
    arg_parser = _defineArguments()
    settings = _compileSettings(arg_parser, args)

    return settings


# -----------------------------------------------------------------------------
# Subcommands
# -----------------------------------------------------------------------------

# -----------------------------------------------------------------------------
def cmdDetect(settings):
    """Detects multiple changepoints in the CSV file settings['input'].

    Returns:
        (int)   : exit code
    """
    X = readCsv(settings['input'])
    X, sigma = _normalized(settings, X)
    ctx = makeContext(X.n, X.p, nEffMode=settings['n_eff'])
    cfg = _esacConfig(settings, ctx)
    interval_set = intervals.generate(X.n, cfg.alpha, cfg.K)

    result = detect.esac(X, ctx, cfg, interval_set)
    found = len(result)
    if settings['top_k'] is not None:
        result = detect.significanceRank(result, settings['top_k'])

    logSummary('detect', [
        ('n x p', '{} x {}'.format(X.n, X.p)),
        ('seeded intervals', len(interval_set)),
        ('changepoints found', found),
        ('changepoints kept', len(result)),
    ])
    content = result.toDict()
    content['p'] = X.p
    content['sigma'] = sigma.toList()
    content['sigma_method'] = sigma.method.value
    content['config'] = effectiveConfig(settings, cfg)
    writeJson(settings, content)
    return EXIT_OK


# -----------------------------------------------------------------------------
def cmdEstimate(settings):
    """Estimates a single changepoint in settings['input'].

    Returns:
        (int)   : exit code
    """
    X = readCsv(settings['input'])
    X, sigma = _normalized(settings, X)
    ctx = makeContext(X.n, X.p, nEffMode=settings['n_eff'])
    eta_hat, score = detect.estimateSingle(X, ctx, analyticTable(ctx),
                                           keepPerT=True)
    logSummary('estimate', [
        ('n x p', '{} x {}'.format(X.n, X.p)),
        ('changepoint', eta_hat),
        ('sparsity', score.best_t),
    ])
    writeJson(settings, {
        'n': X.n,
        'p': X.p,
        'eta_hat': eta_hat,
        'score': score.value,
        'sparsity': score.best_t,
        'per_t': {str(t): value for t, value in score.per_t.items()},
        'sigma': sigma.toList(),
        'sigma_method': sigma.method.value,
        'config': effectiveConfig(settings),
    })
    return EXIT_OK


# -----------------------------------------------------------------------------
def cmdIntervals(settings):
    """Writes the seeded intervals for settings['n'] as JSON lines.

    Returns:
        (int)   : exit code
    """
    n = _required(settings, 'n')
    interval_set = intervals.generate(n, settings['alpha'], settings['k'])
    logSummary('intervals', [
        ('n', n),
        ('intervals', len(interval_set)),
        ('scan triples', intervals.tripleCount(interval_set)),
    ])
    writeText(settings, '\n'.join(interval_set.toJsonLines()) + '\n')
    return EXIT_OK


# -----------------------------------------------------------------------------
def cmdCalibrate(settings):
    """Calibrates the testing penalty and writes it as JSON.

    The dimensions come from --n/--p, or from a CSV file passed as input.

    Returns:
        (int)   : exit code
    """
    if settings.get('input'):
        X = readCsv(settings['input'])
        n, p = X.n, X.p
    else:
        n, p = _required(settings, 'n'), _required(settings, 'p')
    ctx = makeContext(n, p, nEffMode=settings['n_eff'])
    interval_set = intervals.generate(n, settings['alpha'], settings['k'])

    started = time.time()
    calibrated = calibrate.calibrateGamma(
        n, p, ctx, interval_set, settings['mc_n'], settings['epsilon'],
        settings['seed'], normalize=settings['normalize'],
        midpoint=settings['variant'] == detect.Variant.MIDPOINT_TEST.value,
        rule=settings['rule'], threads=settings['threads'])

    logSummary('calibrate', [
        ('n x p', '{} x {}'.format(n, p)),
        ('replicates', calibrated.N),
        ('epsilon', calibrated.epsilon),
        ('rule', calibrated.rule),
        ('seconds', '{:.2f}'.format(time.time() - started)),
    ])
    content = calibrated.toDict()
    content['config'] = effectiveConfig(settings)
    writeJson(settings, content)
    return EXIT_OK


# -----------------------------------------------------------------------------
def cmdSimulate(settings):
    """Runs the experiments of a JSON design file.

    The file holds one design or a list of designs.

    Returns:
        (int)   : exit code
    """
    content = _readJson(_required(settings, 'design'))
    designs = content if isinstance(content, list) else [content]

    reports = []
    for design in designs:
        reports.append(simulate.runExperiment(
            simulate.designFromDict(design), settings['replicates'],
            settings['seed'], threads=settings['threads']))

    if settings['table']:
        for line in simulate.formatReport(reports).split('\n'):
            logger.info(line)
    writeJson(settings, {
        'reports': [report.toDict(timing=settings['timing'])
                    for report in reports],
        'config': effectiveConfig(settings),
    })
    return EXIT_OK


# -----------------------------------------------------------------------------
def cmdBench(settings):
    """Times the detector on null data (or on the best-case design with
    n - 1 strong changes) over a grid of n and a grid of p.

    Returns:
        (int)   : exit code
    """
    grid_n = _parseIntList(settings['grid_n'])
    grid_p = _parseIntList(settings['grid_p'])
    fixed_n = settings.get('n') or grid_n[0]
    fixed_p = settings.get('p') or grid_p[0]

    cells = []
    for index, (n, p) in enumerate([(n, fixed_p) for n in grid_n]
                                   + [(fixed_n, p) for p in grid_p]):
        seconds = timeCell(settings, n, p, index)
        logger.info('  n={:6d}  p={:6d}  {:.4f}s'.format(n, p, seconds))
        cells.append({'n': n, 'p': p, 'seconds': seconds})

    by_n = [cell['seconds'] for cell in cells[:len(grid_n)]]
    by_p = [cell['seconds'] for cell in cells[len(grid_n):]]
    content = {
        'best_case': settings['best_case'],
        'repeats': settings['repeats'],
        'cells': cells,
        'ratios_n': _doublingRatios(grid_n, by_n),
        'ratios_p': _doublingRatios(grid_p, by_p),
        'exponent_n': _scalingExponent(grid_n, by_n),
        'exponent_p': _scalingExponent(grid_p, by_p),
        'config': effectiveConfig(settings),
    }
    logSummary('bench', [
        ('exponent in n', '{:.3f}'.format(content['exponent_n'])),
        ('exponent in p', '{:.3f}'.format(content['exponent_p'])),
    ])
    writeJson(settings, content)
    return EXIT_OK


# -----------------------------------------------------------------------------
def timeCell(settings, n, p, index):
    """Median wall time of esac() on one (n, p) cell."""
    rng = np.random.default_rng(np.random.SeedSequence(
        settings['seed'], spawn_key=(index, simulate.ROLE_NOISE)))
    values = rng.standard_normal((p, n))
    if settings['best_case']:
        values += BEST_CASE_JUMP * (np.arange(n) % 2)[None, :]
    X = buildMatrix(values)
    ctx = makeContext(n, p, nEffMode=settings['n_eff'])
    cfg = detect.EsacConfig(alpha=settings['alpha'], K=settings['k'],
                            variant=settings['variant'])
    interval_set = intervals.generate(n, cfg.alpha, cfg.K)

    timings = []
    for _ in range(settings['repeats']):
        started = time.perf_counter()
        detect.esac(X, ctx, cfg, interval_set)
        timings.append(time.perf_counter() - started)
    return float(np.median(timings))


# -----------------------------------------------------------------------------
def _doublingRatios(sizes, seconds):
    return [b / a if a > 0 else None for a, b in zip(seconds, seconds[1:])]


# -----------------------------------------------------------------------------
def _scalingExponent(sizes, seconds):
    if len(sizes) < 2:
        return 0.0
    return float(np.polyfit(np.log(sizes), np.log(np.maximum(seconds, 1e-9)),
                            1)[0])


# -----------------------------------------------------------------------------
def cmdInit(settings):
    createSampleConfig(settings)
    return EXIT_OK


COMMANDS = {
    'detect': cmdDetect,
    'estimate': cmdEstimate,
    'intervals': cmdIntervals,
    'calibrate': cmdCalibrate,
    'simulate': cmdSimulate,
    'bench': cmdBench,
    'init': cmdInit,
}


# -----------------------------------------------------------------------------
# Input / output
# -----------------------------------------------------------------------------

# -----------------------------------------------------------------------------
def readCsv(path):
    """Reads a CSV file into a DataMatrix.

    Rows are time points and columns are series. A first row without any
    numeric entry is treated as a header. Decimals use a dot.

    Args:
        path (string)   : path to the CSV file

    Returns:
        (DataMatrix)

    Raises:
        (ParseError)    : if the file can not be read or holds non-numeric
                          or missing values

    """
    try:
        frame = pandas.read_csv(path, header=None, dtype=str,
                                skipinitialspace=True, encoding='utf-8')
    except (IOError, pandas.errors.ParserError,
            pandas.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError("Could not read '{}': {}".format(path, e))

    if pandas.to_numeric(frame.iloc[0], errors='coerce').isna().all():
        frame = frame.iloc[1:]
    if frame.empty:
        raise ParseError("No data rows in '{}'".format(path))
    try:
        values = frame.apply(pandas.to_numeric, errors='raise')
    except ValueError as e:
        raise ParseError("Non-numeric value in '{}': {}".format(path, e))
    if values.isna().any().any():
        raise ParseError("Missing values in '{}'".format(path))

    X = buildMatrix(values.to_numpy(dtype=np.float64).T)
    logger.debug("Read {} from '{}'".format(X, path))
    return X


# -----------------------------------------------------------------------------
def _readJson(path):
    try:
        with open(path, 'r') as file_handle:
            return json.load(file_handle)
    except (IOError, ValueError) as e:
        raise ParseError("Could not read '{}': {}".format(path, e))


# -----------------------------------------------------------------------------
def writeText(settings, text):
    """Writes text to settings['output'], or to STDOUT."""
    if settings.get('output'):
        with open(settings['output'], 'w') as file_handle:
            file_handle.write(text)
        logger.info("Wrote '{}'".format(settings['output']))
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


# -----------------------------------------------------------------------------
def writeJson(settings, content):
    writeText(settings, json.dumps(content, indent=4, sort_keys=True) + '\n')


# -----------------------------------------------------------------------------
def effectiveConfig(settings, cfg=None):
    """Every setting needed to reproduce a run, plus the package version."""
    keys = ['alpha', 'k', 'variant', 'n_eff', 'penalty', 'epsilon', 'mc_n',
            'rule', 'seed', 'normalize', 'theoretical', 'top_k', 'replicates']
    content = {key: settings.get(key) for key in keys}
    content['command'] = settings['command']
    content['version'] = esac.__version__
    content['prng'] = simulate.PRNG
    if cfg is not None:
        content['detector'] = cfg.toDict()
    return content


# -----------------------------------------------------------------------------
def logSummary(title, rows):
    """Logs a small block of key / value statistics."""
    logger.info('')
    logger.info('esac {} {}'.format(title, '-' * (33 - len(title))))
    for key, value in rows:
        logger.info(' {}: {}'.format(key.ljust(20), value))
    logger.info('-' * 39)
    logger.info('')


# -----------------------------------------------------------------------------
def _normalized(settings, X):
    """Returns X divided by its MAD noise levels, unless disabled."""
    if not settings['normalize']:
        return X, calibrate.SigmaEstimate.known(1.0, p=X.p)
    sigma = calibrate.estimateSigma(X)
    return calibrate.normalize(X, sigma), sigma


# -----------------------------------------------------------------------------
def _esacConfig(settings, ctx):
    """Builds the EsacConfig, loading and checking a calibrated penalty."""
    gamma = None
    if settings['penalty'] != 'analytic':
        calibrated = calibrate.loadCalibration(settings['penalty'])
        scan_mode = ('midpoint' if settings['variant']
                     == detect.Variant.MIDPOINT_TEST.value else 'full')
        calibrate.checkCalibration(calibrated, ctx, settings['alpha'],
                                   settings['k'], scan_mode)
        if calibrated.normalize != settings['normalize']:
            logger.warning('Penalty was calibrated with normalize={}, but '
                           'detection uses normalize={}'
                           .format(calibrated.normalize,
                                   settings['normalize']))
        gamma = calibrated.table
    return detect.EsacConfig(alpha=settings['alpha'], K=settings['k'],
                             variant=settings['variant'], gamma=gamma,
                             lam=analyticTable(ctx),
                             theoretical=settings['theoretical'])


# -----------------------------------------------------------------------------
def _required(settings, key):
    if settings.get(key) is None:
        logger.error("'--{}' is required for '{}'"
                     .format(key, settings['command']))
        raise SystemExit(EXIT_PARSE)
    return settings[key]


# -----------------------------------------------------------------------------
def _parseIntList(value):
    if isinstance(value, (list, tuple)):
        return [int(item) for item in value]
    try:
        return [int(item) for item in str(value).split(',') if item.strip()]
    except ValueError:
        raise ParseError("Expected a comma separated list of integers, got "
                         "'{}'".format(value))


# -----------------------------------------------------------------------------
# Settings
# -----------------------------------------------------------------------------

# -----------------------------------------------------------------------------
def createSampleConfig(settings):
    """Creates a sample .esac.config file in the target folder.

    Will not overwrite an already existing file.

    Args:
        settings (dict)     :  dictionary holding all our settings

    Raises:
        (SystemExit)    :   on invalid target or already existing config file

    """
    if not os.path.isdir(settings['target']):
        logger.error("'target' folder not accessible: {}"
                     .format(settings['target']))
        raise SystemExit(EXIT_ERROR)

    config_path = os.path.join(settings['target'], CONFIG_NAME)
    if os.path.exists(config_path):
        logger.error("config already exists: {}".format(config_path))
        raise SystemExit(EXIT_ERROR)

    content = _getSampleConfigContent()
    with open(config_path, 'w') as f:
        f.write(content)
    logger.info("Created '{}'".format(config_path))


# -----------------------------------------------------------------------------
def _defineArguments():
    """Defines and documents the valid command line arguments.

    Tuning arguments default to None so that the config file and the
    built-in defaults can fill them in later.

    Returns:
        (ArgumentParser)  : ArgumentParser object

    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-c', '--cfg', metavar='', type=str, default=None,
                        help="path of the config file to use. Defaults to "
                             "'{0}' in the current working directory, then "
                             "'{0}' in its parent folder".format(CONFIG_NAME))
    common.add_argument('-o', '--output', metavar='', type=str, default=None,
                        help='output file path (defaults to STDOUT)')
    common.add_argument('--seed', metavar='', type=int, default=None,
                        help='master seed of all random draws')
    common.add_argument('--threads', metavar='', type=int, default=None,
                        help='worker threads (defaults to all cores)')
    common.add_argument('--alpha', metavar='', type=float, default=None,
                        help='growth factor of the seeded interval lengths')
    common.add_argument('--k', metavar='', type=int, default=None,
                        help='shift divisor of the seeded intervals')
    common.add_argument('--variant', type=str, default=None,
                        choices=[variant.value for variant in detect.Variant],
                        help='recursion variant')
    common.add_argument('--n-eff', type=str, default=None, choices=['n4', 'n'],
                        help="replace n by n^4 ('n4') or keep it ('n') "
                             "inside the rate functions")
    common.add_argument('--penalty', metavar='', type=str, default=None,
                        help="'analytic' or the path of a calibrated penalty")
    common.add_argument('--epsilon', metavar='', type=float, default=None,
                        help='false positive target of the calibration')
    common.add_argument('--mc-n', metavar='', type=int, default=None,
                        help='Monte Carlo size of the calibration')
    common.add_argument('--rule', type=str, default=None,
                        choices=list(calibrate.RULES),
                        help='how calibrated quantiles become penalties')
    common.add_argument('--no-normalize', dest='normalize',
                        action='store_const', const=False, default=None,
                        help='skip the MAD noise normalization')
    common.add_argument('--theoretical', type=_stringToBool, default=None,
                        help='enforce 1 < alpha <= 2 and K >= 2')
    common.add_argument('--top-k', metavar='', type=int, default=None,
                        help='keep only the most significant changepoints')
    common.add_argument('--n', metavar='', type=int, default=None,
                        help='number of time points')
    common.add_argument('--p', metavar='', type=int, default=None,
                        help='number of series')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true',
                           help='log debug messages')
    verbosity.add_argument('-q', '--quiet', action='store_true',
                           help='log warnings and errors only')

    parser = argparse.ArgumentParser(
        prog='esac',
        description='Sparsity adaptive multiple changepoint detection.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s {}'.format(esac.__version__))
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    for name in ('detect', 'estimate'):
        sub = commands.add_parser(name, parents=[common],
                                  help='{} changepoints in a CSV file'
                                  .format(name))
        sub.add_argument('input', type=str,
                         help='CSV file, rows are time points')
    commands.add_parser('intervals', parents=[common],
                        help='print the seeded intervals as JSON lines')
    sub = commands.add_parser('calibrate', parents=[common],
                              help='calibrate the testing penalty')
    sub.add_argument('input', type=str, nargs='?', default=None,
                     help='optional CSV file to take n and p from')
    sub = commands.add_parser('simulate', parents=[common],
                              help='run simulation experiments')
    sub.add_argument('design', type=str, help='JSON design file')
    sub.add_argument('--replicates', metavar='', type=int, default=None,
                     help='replicates per design')
    sub.add_argument('--table', action='store_true',
                     help='also log an aligned text table')
    sub.add_argument('--timing', action='store_true',
                     help='include wall times in the report')
    sub = commands.add_parser('bench', parents=[common],
                              help='time the detector over a grid of sizes')
    sub.add_argument('--grid-n', metavar='', type=str, default=None,
                     help="comma separated values of n, e.g. '256,512,1024'")
    sub.add_argument('--grid-p', metavar='', type=str, default=None,
                     help="comma separated values of p, e.g. '64,128,256'")
    sub.add_argument('--repeats', metavar='', type=int, default=None,
                     help='timings per cell, the median is reported')
    sub.add_argument('--best-case', action='store_true',
                     help='time data with a change at every time point')
    sub = commands.add_parser('init', parents=[common],
                              help='create a sample config file')
    sub.add_argument('-t', '--target', metavar='', type=str, default='.',
                     help='target folder (defaults to the current folder)')

    return parser


# -----------------------------------------------------------------------------
def _stringToBool(value):
    """Attempts to interpret value as a boolean value.

    Args:
        value (string)               : string to interpret as a boolean

    Returns:
        (bool)                       : extracted boolean value

    Raises:
        (argparse.ArgumentTypeError) : If value could not be interpreted
                                       as a boolean value

    """
    if isinstance(value, bool):
        return value
    if str(value).lower() in ('true', '1', 'y', 'yes'):
        return True
    if str(value).lower() in ('false', '0', 'n', 'no'):
        return False
    raise argparse.ArgumentTypeError('Boolean value expected.')


# -----------------------------------------------------------------------------
def _compileSettings(arg_parser, args):
    """Collects and combines all valid settings.

    Settings get collected from:
        - parsing the command line arguments
        - a config file
        - built-in defaults

    Args:
        arg_parser (ArgParser)  : ArgumentParser object
        args (list)             : list of command line arguments

    Returns:
        (dict)                  : dictionary of combined settings

    Raises:
        (SystemExit)            : on failure while reading/conforming
                                  config file

    """
    settings = vars(arg_parser.parse_args(args=args))

    try:
        _readConfig(settings)
        _ensureDefaultSettings(settings)

    except json.JSONDecodeError:
        # already reported by _logJsonError()
        raise SystemExit(EXIT_PARSE)
    except ValueError as e:
        logger.error('Invalid config: {}'.format(e))
        raise SystemExit(EXIT_PARSE)
    except Exception as e:
        logger.error('Failed to read and conform config')
        logger.error('{}\n{}'.format(e, traceback.format_exc()))
        raise SystemExit(EXIT_PARSE)

    return settings


# -----------------------------------------------------------------------------
def _readConfig(settings):
    """Reads an esac config file and fills in every setting the command
    line left open.

    Respects the path to a config file stored in the 'cfg' value of
    the settings dictionary.
    Otherwise falls back to expecting '.esac.config' in the current
    working directory, or its parent directory.

    The config file must contain valid JSON, but can also contain lines
    commented out with the # sign.

    Args:
        settings (dict)     :  dictionary holding all our settings

    Raises:
        (Exception)         : on Problems decoding JSON

    """
    # prefer the current folder, fallback to parent folder
    explicit_cfg = True
    if settings['cfg'] is None:
        explicit_cfg = False
        if os.path.exists(os.path.join('.', CONFIG_NAME)):
            settings['cfg'] = os.path.join('.', CONFIG_NAME)
        else:
            settings['cfg'] = os.path.join('..', CONFIG_NAME)

    if not os.path.exists(settings['cfg']):
        # deal with explicit config that can not be read
        if explicit_cfg is True:
            raise IOError('Config file does not exist: {}'
                          .format(settings['cfg']))
        return

    with open(settings['cfg'], 'r') as f:
        content = f.read()
    # strip comments and empty lines
    lines = []
    for line in content.split('\n'):
        tokens = line.split('#')
        relevant = tokens[0]
        if len(relevant.strip()) > 0:
            lines.append(relevant)
    try:
        cfg = json.loads('\n'.join(lines))
    except ValueError as e:
        _logJsonError(settings['cfg'], e, lines)
        raise

    for key, value in cfg.items():
        if key not in DEFAULTS:
            logger.warning("Ignoring unknown config key '{}' in {}"
                           .format(key, settings['cfg']))
        elif settings.get(key) is None:
            settings[key] = value


# -----------------------------------------------------------------------------
def _ensureDefaultSettings(settings):
    """Ensures sensible default settings and consistent types.

    Args:
        settings (dict)     :  dictionary holding all our settings

    """
    for key, value in DEFAULTS.items():
        if settings.get(key) is None:
            settings[key] = value

    for key in ('normalize', 'theoretical'):
        settings[key] = _stringToBool(settings[key])
    for key in ('best_case', 'table', 'timing'):
        settings[key] = bool(settings.get(key, False))

    if settings['threads'] is None:
        settings['threads'] = os.cpu_count() or 1
    if settings['variant'] not in [variant.value for variant in detect.Variant]:
        raise ValueError("Invalid variant '{}'".format(settings['variant']))
    if settings['n_eff'] not in ('n4', 'n'):
        raise ValueError("Invalid n_eff mode '{}'".format(settings['n_eff']))
    if settings['rule'] not in calibrate.RULES:
        raise ValueError("Invalid calibration rule '{}'"
                         .format(settings['rule']))

    settings['cfg'] = os.path.abspath(settings['cfg'])


# -----------------------------------------------------------------------------
def _logJsonError(cfg_path, e, lines):
    """Logs a meaningful JSON error with correct line numbers and the
    correct line-numbered part of the offending JSON.

    Args:
        cfg_path (string)   :   path to the config file
        e (Exception)       :   thrown Exception object
        lines (list)        :   json source lines (with stripped comments)

    """
    offending_line_nbr = _extractLineNumber(e)

    logger.error('')
    logger.error('=' * 80)
    logger.error('= cfg Error ' + ('=' * 68))
    logger.error('')
    logger.error('This cfg file does not contain valid JSON:')
    logger.error("       '{}'".format(cfg_path))
    logger.error('')
    logger.error("Error in line {}: '{}'".format(offending_line_nbr, e))
    logger.error('')
    logger.error('Faulty JSON (after stripping comments):')
    logger.error('---------------------------------------')
    logger.error('')
    for index, line in enumerate(lines):
        lineno = index + 1
        source_line = '{}  {}'.format(str(lineno).rjust(3), line)
        logger.error(source_line)
    logger.error('')
    logger.error('=' * 80)
    logger.error('')


# -----------------------------------------------------------------------------
def _extractLineNumber(e):
    """Attempts to extract the offending line number from the thrown exception.

    Args:
        e (Exception) : Exception object

    Returns:
        (int)   : offending line number, or -1

    """
    line_nbr = getattr(e, 'lineno', None)
    if line_nbr is not None:
        return line_nbr
    try:
        right_side = str(e).split('line ')[1]
        return int(right_side.split(' ')[0])
    except (IndexError, ValueError):
        return -1


# -----------------------------------------------------------------------------
def _getSampleConfigContent():
    """Returns the sample config content.

    Returns:
        (string) sample config content

    """
    content = """
# -----------------------------------------------------------------------------
# esac config file
# -----------------------------------------------------------------------------
# (This is essentially just a json file that supports comments)
#
# Command line arguments always win over the values in here.

{
    # -------------------------------------------------------------------------
    # seeded intervals
    # -------------------------------------------------------------------------
    "alpha" : 1.5,
    "k" : 4,

    # -------------------------------------------------------------------------
    # detector
    #
    # "variant"  : "split" (default), "trim" or "midpoint"
    # "n_eff"    : "n4" replaces n by n^4 inside the rates, "n" keeps n
    # "penalty"  : "analytic", or the path of a file written by
    #              'esac calibrate'
    # -------------------------------------------------------------------------
    "variant" : "split",
    "n_eff" : "n4",
    "penalty" : "analytic",
    "normalize" : true,

    # -------------------------------------------------------------------------
    # calibration
    # -------------------------------------------------------------------------
    "epsilon" : 0.01,
    "mc_n" : 1000,
    "rule" : "tilde",

    # -------------------------------------------------------------------------
    # reproducibility
    # -------------------------------------------------------------------------
    "seed" : 0
}
"""
    return content


# -----------------------------------------------------------------------------
def main(): # pragma: no cover
    sys.exit(runMain(sys.argv[1:]))

# -----------------------------------------------------------------------------
if __name__ == '__main__':
    main() # pragma: no cover
