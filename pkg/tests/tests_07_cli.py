# -*- coding: utf-8 -*-
#
# Copyright (c) 2019-2022, Martin Chatterjee. All rights reserved.
# -----------------------------------------------------------------------------

import argparse
import json
import os
import shutil
import tempfile
import unittest

import numpy as np

import esac
from esac import cli

from output_trap import OutputTrap


# -----------------------------------------------------------------------------
def _writeCsv(path, values, header=None):
    """Writes a p x n matrix with time points as rows."""
    with open(path, 'w') as file_handle:
        if header:
            file_handle.write(','.join(header) + '\n')
        for row in np.asarray(values).T:
            file_handle.write(','.join(repr(float(value)) for value in row)
                              + '\n')


# -----------------------------------------------------------------------------
def _twoChanges(noise=True):
    mean = np.zeros((4, 64))
    mean[:, 20:44] = 8.0
    if noise:
        mean += np.random.default_rng(31).standard_normal(mean.shape)
    return mean


# -----------------------------------------------------------------------------
class CliTestCase(unittest.TestCase):

    # -------------------------------------------------------------------------
    def setUp(self):
        self.cwd = os.getcwd()
        self.tmp = tempfile.mkdtemp(prefix='esac_cli_')
        # no config in the work folder or its parent
        self.work = os.path.join(self.tmp, 'work')
        os.mkdir(self.work)
        os.chdir(self.work)

    # -------------------------------------------------------------------------
    def tearDown(self):
        os.chdir(self.cwd)
        shutil.rmtree(self.tmp, ignore_errors=True)

    # -------------------------------------------------------------------------
    def _run(self, args):
        with OutputTrap() as trap:
            code = cli.runMain(args)
        return code, trap.stdout, trap.stderr

    # -------------------------------------------------------------------------
    def _writeConfig(self, name, text):
        path = os.path.join(self.work, name)
        with open(path, 'w') as file_handle:
            file_handle.write(text)
        return path

    # -------------------------------------------------------------------------
    def test01_intervals_as_json_lines(self):

        code, out, _ = self._run(['intervals', '--n', '4', '--alpha', '2',
                                  '--k', '2'])
        self.assertEqual(code, cli.EXIT_OK)
        lines = [json.loads(line) for line in out.splitlines()]
        self.assertEqual(lines, [{'s': 0, 'e': 2}, {'s': 1, 'e': 3},
                                 {'s': 2, 'e': 4}, {'s': 0, 'e': 4}])

    # -------------------------------------------------------------------------
    def test02_intervals_to_output_file(self):

        path = os.path.join(self.work, 'intervals.jsonl')
        code, out, _ = self._run(['intervals', '--n', '2', '-o', path])
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(out, '')
        with open(path, 'r') as file_handle:
            self.assertEqual(file_handle.read().strip(), '{"s": 0, "e": 2}')

    # -------------------------------------------------------------------------
    def test03_missing_and_invalid_arguments(self):

        self.assertEqual(self._run(['intervals'])[0], cli.EXIT_PARSE)
        self.assertEqual(self._run([])[0], cli.EXIT_PARSE)
        self.assertEqual(self._run(['segment'])[0], cli.EXIT_PARSE)
        self.assertEqual(self._run(['intervals', '--n', 'ten'])[0],
                         cli.EXIT_PARSE)
        self.assertEqual(self._run(['intervals', '--n', '4',
                                    '--variant', 'bisect'])[0],
                         cli.EXIT_PARSE)
        self.assertEqual(self._run(['detect', 'missing.csv'])[0],
                         cli.EXIT_PARSE)
        self.assertEqual(self._run(['--version'])[0], cli.EXIT_OK)

    # -------------------------------------------------------------------------
    def test04_detect_on_constant_data(self):

        path = os.path.join(self.work, 'zeros.csv')
        _writeCsv(path, np.zeros((3, 40)))
        code, _, err = self._run(['detect', path])
        self.assertEqual(code, cli.EXIT_DEGENERATE)
        self.assertIn('DegenerateSeriesError', err)

        code, out, _ = self._run(['detect', path, '--no-normalize'])
        self.assertEqual(code, cli.EXIT_OK)
        content = json.loads(out)
        self.assertEqual(content['changepoints'], [])
        self.assertEqual((content['n'], content['p']), (40, 3))
        self.assertEqual(content['sigma'], [1.0, 1.0, 1.0])
        self.assertEqual(content['sigma_method'], 'Known')

    # -------------------------------------------------------------------------
    def test05_detect_planted_changes(self):

        path = os.path.join(self.work, 'planted.csv')
        _writeCsv(path, _twoChanges(noise=False))
        code, out, _ = self._run(['detect', path, '--no-normalize'])
        self.assertEqual(code, cli.EXIT_OK)
        content = json.loads(out)
        self.assertEqual([item['position'] for item in content['changepoints']],
                         [20, 44])

        config = content['config']
        self.assertEqual(config['version'], esac.__version__)
        self.assertEqual(config['prng'], 'PCG64')
        self.assertEqual(config['detector']['variant'], 'split')
        self.assertNotIn('threads', config)

    # -------------------------------------------------------------------------
    def test06_detect_with_normalization_and_header(self):

        path = os.path.join(self.work, 'noisy.csv')
        _writeCsv(path, _twoChanges(), header=['a', 'b', 'c', 'd'])
        code, out, _ = self._run(['detect', path, '--seed', '3'])
        self.assertEqual(code, cli.EXIT_OK)
        content = json.loads(out)
        self.assertEqual(content['n'], 64)
        self.assertEqual(content['sigma_method'], 'MadDiff')
        self.assertEqual(len(content['sigma']), 4)
        self.assertEqual([item['position'] for item in content['changepoints']],
                         [20, 44])

        code, out, _ = self._run(['detect', path, '--top-k', '1'])
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(len(json.loads(out)['changepoints']), 1)

    # -------------------------------------------------------------------------
    def test07_detect_is_deterministic(self):

        path = os.path.join(self.work, 'noisy.csv')
        _writeCsv(path, _twoChanges())
        first = self._run(['detect', path, '--threads', '1'])[1]
        second = self._run(['detect', path, '--threads', '4'])[1]
        self.assertEqual(first, second)

    # -------------------------------------------------------------------------
    def test08_unreadable_csv(self):

        path = os.path.join(self.work, 'broken.csv')
        with open(path, 'w') as file_handle:
            file_handle.write('1,2\n3,x\n5,6\n')
        self.assertEqual(self._run(['detect', path])[0], cli.EXIT_PARSE)

        with open(path, 'w') as file_handle:
            file_handle.write('1,2\n3,\n5,6\n')
        self.assertEqual(self._run(['detect', path])[0], cli.EXIT_PARSE)

        with open(path, 'w') as file_handle:
            file_handle.write('a,b\n')
        self.assertEqual(self._run(['detect', path])[0], cli.EXIT_PARSE)

        with open(path, 'w') as file_handle:
            file_handle.write('')
        self.assertEqual(self._run(['detect', path])[0], cli.EXIT_PARSE)

    # -------------------------------------------------------------------------
    def test09_estimate_single_change(self):

        values = np.zeros((3, 30))
        values[:, 12:] = 5.0
        path = os.path.join(self.work, 'step.csv')
        _writeCsv(path, values)
        code, out, _ = self._run(['estimate', path, '--no-normalize'])
        self.assertEqual(code, cli.EXIT_OK)
        content = json.loads(out)
        self.assertEqual(content['eta_hat'], 12)
        self.assertIn(str(content['sparsity']), content['per_t'])

    # -------------------------------------------------------------------------
    def test10_calibrated_penalty_round_trip(self):

        penalty = os.path.join(self.work, 'gamma.json')
        code = self._run(['calibrate', '--n', '64', '--p', '4', '--mc-n',
                          '100', '--epsilon', '0.05', '--threads', '2',
                          '-o', penalty])[0]
        self.assertEqual(code, cli.EXIT_OK)
        with open(penalty, 'r') as file_handle:
            stored = json.load(file_handle)
        self.assertEqual((stored['n'], stored['p'], stored['N']), (64, 4, 100))
        self.assertEqual(stored['config']['command'], 'calibrate')
        self.assertEqual(stored['config']['seed'], stored['seed'])
        self.assertEqual(stored['config']['mc_n'], 100)

        planted = os.path.join(self.work, 'planted.csv')
        _writeCsv(planted, _twoChanges())
        code, out, _ = self._run(['detect', planted, '--penalty', penalty])
        self.assertEqual(code, cli.EXIT_OK)
        self.assertIn('calibrated', json.loads(out)['config']['detector']['gamma'])

        shorter = os.path.join(self.work, 'shorter.csv')
        _writeCsv(shorter, _twoChanges()[:, :50])
        code, _, err = self._run(['detect', shorter, '--penalty', penalty])
        self.assertEqual(code, cli.EXIT_MISMATCH)
        self.assertIn('ConfigMismatchError', err)

        code = self._run(['detect', planted, '--penalty', penalty,
                          '--k', '3'])[0]
        self.assertEqual(code, cli.EXIT_MISMATCH)

    # -------------------------------------------------------------------------
    def test11_calibrate_from_csv_to_stdout(self):

        path = os.path.join(self.work, 'shape.csv')
        _writeCsv(path, np.random.default_rng(0).standard_normal((2, 16)))
        code, out, _ = self._run(['calibrate', path, '--mc-n', '100',
                                  '--rule', 'naive', '--seed', '5'])
        self.assertEqual(code, cli.EXIT_OK)
        content = json.loads(out)
        self.assertEqual((content['n'], content['p']), (16, 2))
        self.assertEqual((content['rule'], content['seed']), ('naive', 5))

        code, _, _ = self._run(['calibrate', '--n', '16', '--p', '2',
                                '--mc-n', '50'])
        self.assertEqual(code, cli.EXIT_ERROR)

    # -------------------------------------------------------------------------
    def test12_invalid_config_files(self):

        cfg = self._writeConfig('invalid.cfg', '{\n  "alpha": 1.5,\n  '
                                '"k": \n}\n')
        code, _, err = self._run(['intervals', '--n', '8', '--cfg', cfg])
        self.assertEqual(code, cli.EXIT_PARSE)
        self.assertIn('does not contain valid JSON', err)

        code = self._run(['intervals', '--n', '8', '--cfg',
                          os.path.join(self.work, 'nothing.cfg')])[0]
        self.assertEqual(code, cli.EXIT_PARSE)

        cfg = self._writeConfig('variant.cfg', '{"variant": "bisect"}')
        code, _, err = self._run(['intervals', '--n', '8', '--cfg', cfg])
        self.assertEqual(code, cli.EXIT_PARSE)
        self.assertIn("Invalid config: Invalid variant 'bisect'", err)

        cfg = self._writeConfig('rule.cfg', '{"rule": "sidak"}')
        code, _, err = self._run(['intervals', '--n', '8', '--cfg', cfg])
        self.assertEqual(code, cli.EXIT_PARSE)
        self.assertIn("Invalid calibration rule 'sidak'", err)

    # -------------------------------------------------------------------------
    def test13_command_line_wins_over_config(self):

        self._writeConfig(cli.CONFIG_NAME,
                          '# seeded intervals\n'
                          '{\n'
                          '    "alpha": 2.0,  # doubling\n'
                          '    "k": 2,\n'
                          '    "colour": "red"\n'
                          '}\n')
        code, out, err = self._run(['intervals', '--n', '8'])
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(len(out.splitlines()), 13)
        self.assertIn("unknown config key 'colour'", err)

        code, out, _ = self._run(['intervals', '--n', '8', '--alpha', '1.5'])
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(len(out.splitlines()), 16)

    # -------------------------------------------------------------------------
    def test14_settings_defaults(self):

        with OutputTrap():
            settings = cli.collectSettings(['intervals', '--n', '8'])
        for key in ('alpha', 'k', 'variant', 'n_eff', 'rule', 'epsilon',
                    'mc_n', 'seed', 'normalize'):
            self.assertEqual(settings[key], cli.DEFAULTS[key])
        self.assertGreaterEqual(settings['threads'], 1)
        self.assertTrue(os.path.isabs(settings['cfg']))

        with OutputTrap():
            settings = cli.collectSettings(['detect', 'x.csv',
                                            '--no-normalize',
                                            '--theoretical', 'yes'])
        self.assertFalse(settings['normalize'])
        self.assertTrue(settings['theoretical'])

    # -------------------------------------------------------------------------
    def test15_stringToBool(self):

        for value in [True, 'true', 'True', '1', 'y', 'yes']:
            self.assertTrue(cli._stringToBool(value))
        for value in [False, 'false', 'FALSE', '0', 'n', 'no']:
            self.assertFalse(cli._stringToBool(value))
        with self.assertRaises(argparse.ArgumentTypeError):
            cli._stringToBool('maybe')

    # -------------------------------------------------------------------------
    def test16_init_creates_a_usable_config(self):

        target = os.path.join(self.work, 'init')
        os.mkdir(target)
        self.assertEqual(self._run(['init', '--target', target])[0],
                         cli.EXIT_OK)
        cfg = os.path.join(target, cli.CONFIG_NAME)
        self.assertTrue(os.path.exists(cfg))

        # never overwrites
        self.assertEqual(self._run(['init', '--target', target])[0],
                         cli.EXIT_ERROR)
        self.assertEqual(self._run(['init', '--target',
                                    os.path.join(target, 'nope')])[0],
                         cli.EXIT_ERROR)

        code, out, _ = self._run(['intervals', '--n', '4', '--cfg', cfg])
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(len(out.splitlines()), 4)

    # -------------------------------------------------------------------------
    def test17_simulate_designs(self):

        design = os.path.join(self.work, 'design.json')
        with open(design, 'w') as file_handle:
            json.dump([{'n': 60, 'p': 3, 'J': 1, 'k': 1},
                       {'n': 60, 'p': 3, 'mode': 'single', 'k': 3}],
                      file_handle)
        code, out, err = self._run(['simulate', design, '--replicates', '3',
                                    '--table', '--seed', '2'])
        self.assertEqual(code, cli.EXIT_OK)
        content = json.loads(out)
        self.assertEqual(len(content['reports']), 2)
        self.assertEqual(content['reports'][0]['N'], 3)
        self.assertIsNotNone(content['reports'][1]['mse'])
        self.assertNotIn('runtime', content['reports'][0])
        self.assertIn('Hausdorff distance', err)

        code, out, _ = self._run(['simulate', design, '--replicates', '2',
                                  '--timing'])
        self.assertIn('runtime', json.loads(out)['reports'][0])

        with open(design, 'w') as file_handle:
            json.dump({'n': 60, 'p': 3, 'flavour': 'x'}, file_handle)
        self.assertEqual(self._run(['simulate', design])[0], cli.EXIT_ERROR)

        with open(design, 'w') as file_handle:
            file_handle.write('{"n": 60,')
        self.assertEqual(self._run(['simulate', design])[0], cli.EXIT_PARSE)

    # -------------------------------------------------------------------------
    def test18_bench_small_grid(self):

        for flags in ([], ['--best-case']):
            code, out, _ = self._run(['bench', '--grid-n', '16,32',
                                      '--grid-p', '2,4', '--repeats', '1']
                                     + flags)
            self.assertEqual(code, cli.EXIT_OK)
            content = json.loads(out)
            self.assertEqual([(cell['n'], cell['p'])
                              for cell in content['cells']],
                             [(16, 2), (32, 2), (16, 2), (16, 4)])
            self.assertEqual(len(content['ratios_n']), 1)
            self.assertIn('exponent_p', content)
            self.assertEqual(content['best_case'], bool(flags))

        code = self._run(['bench', '--grid-n', '16,x', '--repeats', '1'])[0]
        self.assertEqual(code, cli.EXIT_PARSE)

    # -------------------------------------------------------------------------
    def test19_exitCodeFor(self):

        self.assertEqual(cli.exitCodeFor(esac.ParseError('x')), cli.EXIT_PARSE)
        self.assertEqual(cli.exitCodeFor(esac.ConfigMismatchError('x')),
                         cli.EXIT_MISMATCH)
        self.assertEqual(cli.exitCodeFor(esac.DegenerateSeriesError('x')),
                         cli.EXIT_DEGENERATE)
        self.assertEqual(cli.exitCodeFor(esac.TooShortError('x')),
                         cli.EXIT_ERROR)


# -----------------------------------------------------------------------------
if __name__ == '__main__':
    unittest.main()
