import json
import os
import shutil
import tempfile
import unittest

from ipddp._cli import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, parse_mu_init, run_command
from ipddp._errors import ConfigurationError
from ipddp._trace import load_solution, read_document, read_trace

RUN_BENCHMARKS = os.environ.get('IPDDP_RUN_BENCHMARKS', '0') == '1'


class ParseMuInitTest(unittest.TestCase):

  def test_forms(self):
    self.assertEqual(parse_mu_init('auto'), 'auto')
    self.assertEqual(parse_mu_init('1e-3'), 1e-3)
    self.assertEqual(parse_mu_init('0.5,1'), (0.5, 1.0))

  def test_bad_range(self):
    with self.assertRaises(ConfigurationError):
      parse_mu_init('0.1,0.2,0.3')


class CommandTest(unittest.TestCase):

  def setUp(self):
    self.tmp = tempfile.mkdtemp()

  def tearDown(self):
    shutil.rmtree(self.tmp)

  def test_no_command(self):
    self.assertEqual(run_command([]), EXIT_CONFIG)

  def test_unknown_problem(self):
    self.assertEqual(run_command(['solve', '--problem', 'cartpole', '--out', self.tmp]),
                     EXIT_CONFIG)

  def test_unknown_algorithm(self):
    self.assertEqual(run_command(['bench', '--problem', 'pendulum', '--algorithm', 'clddp',
                                  '--out', self.tmp]), EXIT_CONFIG)

  def test_bad_config_document(self):
    path = os.path.join(self.tmp, 'config.json')
    with open(path, 'w') as f:
      json.dump({'kapa': 5}, f)
    self.assertEqual(run_command(['solve', '--problem', 'pendulum', '--config', path,
                                  '--out', self.tmp]), EXIT_CONFIG)
    with open(path, 'w') as f:
      json.dump({'trials': {'repeat': 3}}, f)
    self.assertEqual(run_command(['bench', '--problem', 'pendulum', '--config', path,
                                  '--out', self.tmp]), EXIT_CONFIG)

  def test_bad_mu_init(self):
    self.assertEqual(run_command(['solve', '--problem', 'pendulum', '--mu-init', '-1',
                                  '--out', self.tmp]), EXIT_CONFIG)

  def test_missing_solution_file(self):
    self.assertEqual(run_command(['verify', os.path.join(self.tmp, 'missing.npz')]),
                     EXIT_CONFIG)

  def test_solve_iteration_limit(self):
    code = run_command(['solve', '--problem', 'pendulum', '--max-iter', '3', '--quiet',
                        '--out', self.tmp])
    self.assertEqual(code, EXIT_FAILURE)
    rows = read_trace(os.path.join(self.tmp, 'pendulum_feasible-ipddp_trace.csv'))
    self.assertEqual(len(rows), 4)
    # packaged J* fills E_J
    self.assertTrue(all(row['E_J'] is not None for row in rows))
    self.assertFalse(os.path.exists(os.path.join(self.tmp, 'pendulum_feasible-ipddp_solution.npz')))

  def test_solve_infeasible_start(self):
    code = run_command(['solve', '--problem', 'unicycle', '--algorithm', 'barrier', '--quiet',
                        '--out', self.tmp])
    self.assertEqual(code, EXIT_FAILURE)

  def test_bench_files(self):
    code = run_command(['bench', '--problem', 'pendulum', '--trials', '2', '--max-iter', '3',
                        '--no-reference', '--quiet', '--seed', '5', '--out', self.tmp])
    self.assertEqual(code, EXIT_OK)
    names = sorted(os.listdir(self.tmp))
    self.assertEqual(names, ['pendulum_feasible-ipddp_summary.json',
                             'pendulum_feasible-ipddp_trial0.csv',
                             'pendulum_feasible-ipddp_trial1.csv'])
    summary = read_document(os.path.join(self.tmp, names[0]))
    self.assertEqual(int(summary['base_seed']), 5)
    self.assertIsNone(summary['J_star'])
    self.assertEqual(int(summary['success_count']), 0)


@unittest.skipIf(not RUN_BENCHMARKS, 'set IPDDP_RUN_BENCHMARKS=1 to run full benchmark solves')
class SolveVerifyTest(unittest.TestCase):

  def setUp(self):
    self.tmp = tempfile.mkdtemp()

  def tearDown(self):
    shutil.rmtree(self.tmp)

  def test_pendulum(self):
    self.assertEqual(run_command(['solve', '--problem', 'pendulum', '--quiet', '--out', self.tmp]),
                     EXIT_OK)
    path = os.path.join(self.tmp, 'pendulum_feasible-ipddp_solution.npz')
    data = load_solution(path)
    self.assertTrue(data['converged'])
    self.assertEqual(run_command(['verify', path]), EXIT_OK)

  def test_unicycle_infeasible(self):
    self.assertEqual(run_command(['solve', '--problem', 'unicycle', '--algorithm',
                                  'infeasible-ipddp', '--quiet', '--out', self.tmp]), EXIT_OK)
    path = os.path.join(self.tmp, 'unicycle_infeasible-ipddp_solution.npz')
    self.assertEqual(run_command(['verify', path]), EXIT_OK)


if __name__ == '__main__':
  unittest.main()
