import os
import shutil
import tempfile
import unittest

import numpy as np

from ipddp._problem import Iterate, Multipliers
from ipddp._solver import IterationRecord, Solution
from ipddp._trace import (TRACE_HEADER, from_json, load_solution, read_document, read_trace,
                          save_solution, to_json, write_document, write_trace)


class TraceFileTest(unittest.TestCase):

  def setUp(self):
    self.tmp = tempfile.mkdtemp()

  def tearDown(self):
    shutil.rmtree(self.tmp)

  def test_write_and_read(self):
    trace = [IterationRecord(0, 172.72, 0.17272, 3.5, 0.0, 0.0),
             IterationRecord(1, 0.1 + 0.2, 0.034544, 1e-9, 0.5, 1e-6, E_J=-3.25, min_eig=0.02)]
    path = os.path.join(self.tmp, 'nested', 'run_trace.csv')
    write_trace(path, trace)
    with open(path) as f:
      self.assertEqual(f.readline().strip(), ','.join(TRACE_HEADER))
    rows = read_trace(path)
    self.assertEqual(len(rows), 2)
    self.assertIsNone(rows[0]['E_J'])
    self.assertIsNone(rows[0]['min_eig'])
    # %.17g keeps every bit
    self.assertEqual(rows[1]['J'], 0.1 + 0.2)
    self.assertEqual(rows[1]['gamma_reg'], 1e-6)
    self.assertEqual(rows[1]['iter'], 1)
    self.assertEqual(os.listdir(os.path.dirname(path)), ['run_trace.csv'])

  def test_not_a_trace(self):
    path = os.path.join(self.tmp, 'other.csv')
    with open(path, 'w') as f:
      f.write('a,b\n1,2\n')
    with self.assertRaises(ValueError):
      read_trace(path)


class DocumentTest(unittest.TestCase):

  def test_json_text(self):
    text = to_json({'b': [1, 2.5], 'a': {'flag': True, 'none': None}, 'name': 'pendulum'})
    self.assertLess(text.index('"a"'), text.index('"b"'))
    back = from_json(text)
    self.assertEqual(back['b'], [1.0, 2.5])
    self.assertEqual(back['a'], {'flag': True, 'none': None})
    self.assertEqual(back['name'], 'pendulum')

  def test_numpy_values(self):
    back = from_json(to_json({'range': np.array([-0.01, 0.01]), 'count': np.int64(40),
                              'ok': np.bool_(False)}))
    self.assertEqual(back['range'], [-0.01, 0.01])
    self.assertEqual(back['count'], 40)
    self.assertIs(back['ok'], False)

  def test_integers_come_back_as_int(self):
    back = from_json(to_json({'trials': 40, 'seeds': [0, 1], 'nested': {'max_iterations': 500},
                              'kappa': 5.5, 'mu_min': 1e-8}))
    self.assertIsInstance(back['trials'], int)
    self.assertEqual(back['trials'], 40)
    self.assertTrue(all(isinstance(s, int) for s in back['seeds']))
    self.assertIsInstance(back['nested']['max_iterations'], int)
    self.assertIsInstance(back['kappa'], float)
    self.assertEqual(back['mu_min'], 1e-8)
    # range(40)[index] fails on floats
    self.assertEqual(list(range(50))[back['trials']], 40)

  def test_file(self):
    tmp = tempfile.mkdtemp()
    try:
      path = os.path.join(tmp, 'summary.json')
      write_document(path, {'success_rate': 0.95})
      self.assertEqual(read_document(path), {'success_rate': 0.95})
    finally:
      shutil.rmtree(tmp)


class SolutionFileTest(unittest.TestCase):

  def setUp(self):
    self.tmp = tempfile.mkdtemp()

  def tearDown(self):
    shutil.rmtree(self.tmp)

  def test_infeasible_solution(self):
    N = 4
    w = Iterate(np.random.randn(N + 1, 2), np.random.randn(N, 1), np.ones((N, 2)),
                0.5 * np.ones((N, 2)))
    solution = Solution(w, Multipliers(np.random.randn(N + 1, 2)), 1e-8, True, [], None,
                        'infeasible')
    path = os.path.join(self.tmp, 'pendulum_infeasible-ipddp_solution.npz')
    save_solution(path, solution, 'pendulum')
    data = load_solution(path)
    np.testing.assert_array_equal(data['x'], w.x)
    np.testing.assert_array_equal(data['y'], w.y)
    np.testing.assert_array_equal(data['lambda'], solution.multipliers.lambdas)
    self.assertEqual(data['variant'], 'infeasible')
    self.assertEqual(data['problem'], 'pendulum')
    self.assertEqual(data['mu'], 1e-8)
    self.assertTrue(data['converged'])

  def test_feasible_solution_without_multipliers(self):
    N = 3
    w = Iterate(np.zeros((N + 1, 2)), np.zeros((N, 1)), np.ones((N, 2)))
    path = os.path.join(self.tmp, 'solution.npz')
    save_solution(path, Solution(w, None, 0.1, False, [], None), 'pendulum')
    data = load_solution(path)
    self.assertNotIn('y', data)
    self.assertNotIn('lambda', data)
    self.assertFalse(data['converged'])
    self.assertEqual(data['variant'], 'feasible')


if __name__ == '__main__':
  unittest.main()
