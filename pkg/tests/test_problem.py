import unittest

import numpy as np

import ipddp
from ipddp._errors import DivergenceError
from ipddp._problem import Iterate, OCProblem
from ipddp.benchmarks import build_linear_quadratic, build_pendulum

np.random.seed(34)


def _scalar_callbacks():
  return {
    'f': lambda x, u: x + u,
    'f_x': lambda x, u: np.eye(1),
    'f_u': lambda x, u: np.eye(1),
    'f_xx': lambda x, u: np.zeros((1, 1, 1)),
    'f_uu': lambda x, u: np.zeros((1, 1, 1)),
    'f_xu': lambda x, u: np.zeros((1, 1, 1)),
    'q': lambda x, u: 0.5 * (x.dot(x) + u.dot(u)),
    'q_x': lambda x, u: x,
    'q_u': lambda x, u: u,
    'q_xx': lambda x, u: np.eye(1),
    'q_uu': lambda x, u: np.eye(1),
    'q_xu': lambda x, u: np.zeros((1, 1)),
    'p': lambda x: 0.5 * x.dot(x),
    'p_x': lambda x: x,
    'p_xx': lambda x: np.eye(1),
  }


class OCProblemTest(unittest.TestCase):

  def test_unconstrained_table_without_constraint_entries(self):
    problem = OCProblem(1, 1, 0, 3, [1.0], _scalar_callbacks())
    self.assertEqual(problem.l, 0)
    self.assertEqual(problem.constraints(np.ones(1), np.ones(1)).shape, (0,))

  def test_missing_callback(self):
    callbacks = _scalar_callbacks()
    del callbacks['q_uu']
    with self.assertRaises(ValueError):
      OCProblem(1, 1, 0, 3, [1.0], callbacks)

  def test_wrong_shape(self):
    callbacks = _scalar_callbacks()
    callbacks['f_x'] = lambda x, u: np.eye(2)
    with self.assertRaises(ValueError):
      OCProblem(1, 1, 0, 3, [1.0], callbacks)

  def test_asymmetric_hessian(self):
    with self.assertRaises(ValueError):
      build_linear_quadratic(np.eye(2), np.ones((2, 1)), [[1.0, 0.5], [0.0, 1.0]],
                             [[1.0]], np.eye(2), [0.0, 0.0], 2)

  def test_unknown_entry(self):
    callbacks = _scalar_callbacks()
    callbacks['g'] = lambda x, u: x
    with self.assertRaises(ValueError):
      OCProblem(1, 1, 0, 3, [1.0], callbacks)

  def test_invalid_dimensions(self):
    with self.assertRaises(ValueError):
      OCProblem(1, 1, 0, 0, [1.0], _scalar_callbacks())


def _stacked_scalar_callbacks():
  callbacks = _scalar_callbacks()
  callbacks['q'] = lambda x, u: 0.5 * (np.sum(x * x, axis=-1) + np.sum(u * u, axis=-1))
  return callbacks


class StackedEvaluationTest(unittest.TestCase):

  def test_benchmarks_match_stage_loop(self):
    for problem in (build_pendulum(N=15), ipddp.benchmarks.build_car_parking(N=15),
                    ipddp.benchmarks.build_unicycle(N=15)):
      self.assertTrue(problem.vectorized)
      x = np.random.uniform(-1, 1, (15, problem.n))
      u = np.random.uniform(-0.2, 0.2, (15, problem.m))
      for key in ('f', 'f_x', 'f_uu', 'q', 'q_x', 'q_xx', 'q_xu', 'c', 'c_u', 'c_xx'):
        looped = np.array([problem.evaluate(key, x[t], u[t]) for t in range(15)])
        np.testing.assert_allclose(problem.evaluate_stages(key, x, u),
                                   looped.reshape((15,) + problem.shapes[key]),
                                   rtol=1e-12, atol=1e-14, err_msg='%s %s' % (problem.name, key))

  def test_constant_blocks_are_broadcast(self):
    problem = OCProblem(1, 1, 0, 4, [1.0], _stacked_scalar_callbacks(), vectorized=True)
    x = np.arange(4.0).reshape(4, 1)
    u = np.ones((4, 1))
    np.testing.assert_allclose(problem.evaluate_stages('f_x', x, u), np.ones((4, 1, 1)))
    np.testing.assert_allclose(problem.evaluate_stages('q', x, u), 0.5 * (x[:, 0] ** 2 + 1.0))

  def test_stage_loop_without_vectorized_callbacks(self):
    problem = OCProblem(1, 1, 0, 4, [1.0], _scalar_callbacks())
    x = np.arange(4.0).reshape(4, 1)
    u = np.ones((4, 1))
    np.testing.assert_allclose(problem.evaluate_stages('q', x, u), 0.5 * (x[:, 0] ** 2 + 1.0))
    self.assertEqual(problem.evaluate_stages('f_xx', x, u).shape, (4, 1, 1, 1))

  def test_stack_disagreeing_with_single_stage(self):
    callbacks = _stacked_scalar_callbacks()
    callbacks['q'] = lambda x, u: 0.5 * (np.sum(x * x) + np.sum(u * u))
    with self.assertRaises(ValueError):
      OCProblem(1, 1, 0, 3, [1.0], callbacks, vectorized=True)

  def test_stack_with_wrong_shape(self):
    callbacks = _stacked_scalar_callbacks()
    callbacks['q_x'] = lambda x, u: x.ravel()
    with self.assertRaises(ValueError):
      OCProblem(1, 1, 0, 3, [1.0], callbacks, vectorized=True)


class RolloutTest(unittest.TestCase):

  def test_pendulum_rest_state(self):
    problem = build_pendulum(N=10)
    x = ipddp.rollout(problem, np.zeros((10, 1)))
    np.testing.assert_allclose(x[-1], [-np.pi, 0.0], atol=1e-12)

  def test_zero_control_objective(self):
    problem = build_pendulum()
    u = np.zeros((problem.N, 1))
    x = ipddp.rollout(problem, u)
    self.assertAlmostEqual(ipddp.objective(problem, x, u), 172.72, places=2)

  def test_divergence_names_stage(self):
    callbacks = _scalar_callbacks()
    callbacks['f'] = lambda x, u: x * 1e200
    problem = OCProblem(1, 1, 0, 5, [1.0], callbacks)
    with self.assertRaises(DivergenceError) as ctx:
      ipddp.rollout(problem, np.zeros((5, 1)))
    self.assertEqual(ctx.exception.stage, 2)

  def test_control_size_mismatch(self):
    problem = build_pendulum(N=10)
    with self.assertRaises(ValueError):
      ipddp.rollout(problem, np.zeros((9, 1)))

  def test_constraint_values(self):
    problem = build_pendulum(N=4)
    u = np.array([[0.25], [0.0], [-0.1], [0.1]])
    x = ipddp.rollout(problem, u)
    c = ipddp.constraint_values(problem, x, u)
    self.assertEqual(c.shape, (4, 2))
    np.testing.assert_allclose(c[0], [0.0, -0.5])
    np.testing.assert_allclose(c[2], [-0.35, -0.15])


class StrictFeasibilityTest(unittest.TestCase):

  def setUp(self):
    self.problem = build_pendulum(N=5)
    self.u = np.zeros((5, 1))
    self.x = ipddp.rollout(self.problem, self.u)

  def test_interior_point(self):
    w = Iterate(self.x, self.u, np.ones((5, 2)))
    report = ipddp.check_strict_feasibility(self.problem, w)
    self.assertTrue(report.passed)
    self.assertAlmostEqual(report.margin, 0.25)

  def test_zero_dual(self):
    s = np.ones((5, 2))
    s[3, 1] = 0.0
    report = ipddp.check_strict_feasibility(self.problem, Iterate(self.x, self.u, s))
    self.assertFalse(report.passed)
    self.assertEqual(report.margin, 0.0)
    self.assertFalse(report.stage_ok[3])

  def test_infeasible_variant_ignores_c(self):
    u = 0.5 * np.ones((5, 1))
    x = ipddp.rollout(self.problem, u)
    w = Iterate(x, u, np.ones((5, 2)), 0.1 * np.ones((5, 2)))
    self.assertTrue(ipddp.check_strict_feasibility(self.problem, w).passed)
    self.assertFalse(ipddp.check_strict_feasibility(self.problem, w, 'feasible').passed)


class DerivativeCheckTest(unittest.TestCase):

  def test_pendulum_passes(self):
    problem = build_pendulum()
    for _ in range(10):
      x = np.random.uniform(-4, 4, 2)
      u = np.random.uniform(-1, 1, 1)
      report = ipddp.finite_diff_check(problem, x, u)
      self.assertTrue(report.passed, msg=str(report))

  def test_wrong_jacobian_is_reported(self):
    base = build_pendulum()
    callbacks = dict((key, base.callback(key)) for key in ipddp._problem._CALLBACK_NAMES)
    callbacks['f_x'] = lambda x, u: np.array([[1.0, 0.05], [0.0, 1.0]])
    problem = OCProblem(2, 1, 2, 10, [-np.pi, 0.0], callbacks)
    report = ipddp.finite_diff_check(problem, [1.0, 0.0], [0.0])
    self.assertFalse(report.passed)
    self.assertGreater(report.errors['f_x'], 1e-3)
    self.assertLess(report.errors['f_u'], 1e-6)

  def test_numerical_table_matches_analytic(self):
    analytic = build_pendulum(N=10)
    h = 0.05
    table = ipddp.numerical_derivatives(
        f=lambda x, u: np.array([x[0] + h * x[1], x[1] + h * np.sin(x[0]) + h * u[0]]),
        q=lambda x, u: 0.025 * (x.dot(x) + u.dot(u)),
        p=lambda x: 5.0 * x.dot(x),
        c=lambda x, u: np.array([u[0] - 0.25, -u[0] - 0.25]),
        n=2, m=1, l=2)
    numeric = OCProblem(2, 1, 2, 10, [-np.pi, 0.0], table)
    x = np.array([0.7, -0.3])
    u = np.array([0.1])
    for key in ('f_x', 'f_u', 'f_xx', 'q_x', 'q_xx', 'c_u'):
      np.testing.assert_allclose(numeric.evaluate(key, x, u), analytic.evaluate(key, x, u),
                                 atol=1e-6, err_msg=key)
    np.testing.assert_allclose(numeric.evaluate('p_xx', x), analytic.evaluate('p_xx', x), atol=1e-5)


if __name__ == '__main__':
  unittest.main()
