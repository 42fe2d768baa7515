import unittest

import numpy as np

import ipddp
from ipddp._backward_pass import StageGains
from ipddp._errors import StepFailure
from ipddp._forward_pass import (StepCandidate, evaluate_candidate, fraction_to_boundary,
                                 step_grid)
from ipddp._problem import Iterate
from ipddp.benchmarks import build_linear_quadratic, build_pendulum

np.random.seed(34)


def _zero_gains(N, n, m, l, infeasible=False):
  return [StageGains(np.zeros(m), np.zeros((m, n)), np.zeros(l), np.zeros((l, n)),
                     np.zeros(l) if infeasible else None,
                     np.zeros((l, n)) if infeasible else None) for _ in range(N)]


def _candidate(s, y=None, c=None, step=1.0):
  w = Iterate(np.zeros((2, 1)), np.zeros((1, 1)), np.array([s]),
              None if y is None else np.array([y]))
  return StepCandidate(step, w, None if c is None else np.array([c]))


class StepGridTest(unittest.TestCase):

  def test_default_grid(self):
    grid = step_grid(10)
    self.assertEqual(len(grid), 11)
    self.assertEqual(grid[0], 1.0)
    self.assertEqual(grid[-1], 2.0 ** -10)

  def test_fraction_to_boundary(self):
    self.assertAlmostEqual(fraction_to_boundary(0.005, 0.95), 0.995)
    self.assertEqual(fraction_to_boundary(0.5, 0.95), 0.95)


class ApplyGainsTest(unittest.TestCase):

  def test_zero_gains_reproduce_iterate(self):
    problem = build_pendulum(N=30)
    u = np.random.uniform(-0.01, 0.01, (30, 1))
    x = ipddp.rollout(problem, u)
    w = Iterate(x, u, 0.1 * np.ones((30, 2)), 0.2 * np.ones((30, 2)))
    for step in step_grid(10):
      w_new = ipddp.apply_gains(problem, w, _zero_gains(30, 2, 1, 2, True), step)
      np.testing.assert_array_equal(w_new.x, w.x)
      np.testing.assert_array_equal(w_new.u, w.u)
      np.testing.assert_array_equal(w_new.s, w.s)
      np.testing.assert_array_equal(w_new.y, w.y)

  def test_scalar_feedforward(self):
    problem = build_linear_quadratic(1.0, 1.0, 1.0, 1.0, 1.0, [1.0], 1)
    u = np.zeros((1, 1))
    w = Iterate(ipddp.rollout(problem, u), u, np.zeros((1, 0)))
    gains = [StageGains(np.array([-1.0 / 3]), np.zeros((1, 1)), np.zeros(0), np.zeros((0, 1)))]
    w_new = ipddp.apply_gains(problem, w, gains, 1.0)
    np.testing.assert_allclose(w_new.x[1], [2.0 / 3])
    w_half = ipddp.apply_gains(problem, w, gains, 0.5)
    np.testing.assert_allclose(w_half.x[1], [5.0 / 6])

  def test_feedback_uses_state_deviation(self):
    problem = build_linear_quadratic(1.0, 1.0, 1.0, 1.0, 1.0, [1.0], 2)
    u = np.zeros((2, 1))
    w = Iterate(ipddp.rollout(problem, u), u, np.zeros((2, 0)))
    gains = [StageGains(np.array([0.5]), np.zeros((1, 1)), np.zeros(0), np.zeros((0, 1))),
             StageGains(np.zeros(1), np.array([[-1.0]]), np.zeros(0), np.zeros((0, 1)))]
    w_new = ipddp.apply_gains(problem, w, gains, 1.0)
    # dx_1 = 0.5, so u_1 = -0.5 and x_2 = x_1
    np.testing.assert_allclose(w_new.u[:, 0], [0.5, -0.5])
    np.testing.assert_allclose(w_new.x[:, 0], [1.0, 1.5, 1.0])


class PositivityGuardTest(unittest.TestCase):

  def test_dual_sign_violation(self):
    current = _candidate([1.0], [1.0], [-1.0])
    self.assertFalse(ipddp.positivity_guard(_candidate([-1.0], [1.0]), current,
                                            'infeasible', 0.995))

  def test_short_step_keeps_duals_positive(self):
    current = _candidate([1.0], [1.0], [-1.0])
    self.assertTrue(ipddp.positivity_guard(_candidate([0.5], [1.0]), current,
                                           'infeasible', 0.995))

  def test_constraint_fraction_to_boundary(self):
    current = _candidate([1.0], c=[-1.0])
    self.assertFalse(ipddp.positivity_guard(_candidate([1.0], c=[-0.01]), current,
                                            'feasible', 0.95))
    self.assertTrue(ipddp.positivity_guard(_candidate([1.0], c=[-0.01]), current,
                                           'feasible', 0.995))
    self.assertFalse(ipddp.positivity_guard(_candidate([1.0], c=[0.01]), current,
                                            'feasible', 0.995))

  def test_identity_step(self):
    current = _candidate([0.3], [0.2], [-0.1])
    self.assertTrue(ipddp.positivity_guard(current, current, 'feasible', 0.999))
    self.assertTrue(ipddp.positivity_guard(current, current, 'infeasible', 0.999))


class StepFilterTest(unittest.TestCase):

  def _point(self, h, phi):
    return StepCandidate(1.0, None, None, 0.0, h, phi)

  def test_empty_filter_accepts(self):
    self.assertTrue(ipddp.filter_accept(ipddp.StepFilter(), self._point(1e6, 1e6)))

  def test_lower_infeasibility_accepted(self):
    step_filter = ipddp.StepFilter(gamma_f=1e-5, gamma_h=1e-3)
    step_filter.reset(1.0, 10.0)
    self.assertTrue(ipddp.filter_accept(step_filter, self._point(0.5, 10.5)))

  def test_equal_point_rejected(self):
    step_filter = ipddp.StepFilter(gamma_f=1e-5, gamma_h=1e-3)
    step_filter.reset(1.0, 10.0)
    self.assertFalse(ipddp.filter_accept(step_filter, self._point(1.0, 10.0)))
    self.assertEqual(len(step_filter), 1)

  def test_entries_stay_non_dominated(self):
    step_filter = ipddp.StepFilter()
    step_filter.reset(1.0, 10.0)
    self.assertTrue(step_filter.accept(self._point(2.0, 5.0)))
    self.assertEqual(len(step_filter), 2)
    self.assertTrue(step_filter.accept(self._point(0.5, 4.0)))
    self.assertEqual(step_filter.entries, [(0.5, 4.0)])
    for i, (h_i, phi_i) in enumerate(step_filter.entries):
      for h_j, phi_j in step_filter.entries[i + 1:]:
        self.assertFalse(h_i <= h_j and phi_i <= phi_j)


class ObjectiveDecreaseTest(unittest.TestCase):

  def test_sufficient_decrease(self):
    rule = ipddp.ObjectiveDecrease(armijo=0.1)
    rule.reset(None, 1.0)
    self.assertFalse(rule.accept(StepCandidate(1.0, None, None, phi=0.95), -1.0))
    self.assertTrue(rule.accept(StepCandidate(1.0, None, None, phi=0.85), -1.0))
    self.assertEqual(rule.phi, 0.85)

  def test_increase_rejected(self):
    rule = ipddp.ObjectiveDecrease()
    rule.reset(None, 1.0)
    self.assertFalse(rule.accept(StepCandidate(0.5, None, None, phi=1.1), -1.0))


class ForwardPassTest(unittest.TestCase):

  def test_full_step_reaches_lq_optimum(self):
    n, m, N = 2, 1, 20
    A = np.array([[1.0, 0.1], [0.0, 1.0]])
    B = np.array([[0.0], [0.1]])
    Q, R, P = np.eye(n), 0.1 * np.eye(m), 5.0 * np.eye(n)
    x0 = np.array([1.0, -0.5])
    problem = build_linear_quadratic(A, B, Q, R, P, x0, N)
    u = np.zeros((N, m))
    w = Iterate(ipddp.rollout(problem, u), u, np.zeros((N, 0)))
    bp = ipddp.backward_pass(problem, w, 1.0)

    config = ipddp.SolverConfig()
    rule = ipddp.ObjectiveDecrease(config.armijo)
    current = evaluate_candidate(problem, w, 1.0, 'feasible')
    rule.reset(current.h, current.phi)
    candidate = ipddp.forward_pass(problem, w, bp.gains, rule, config, 'feasible', 1.0,
                                   bp.diagnostics['expected_decrease'], current)
    self.assertEqual(candidate.step, 1.0)

    P_t = P
    for _ in range(N):
      K = -np.linalg.solve(R + B.T.dot(P_t).dot(B), B.T.dot(P_t).dot(A))
      P_t = Q + A.T.dot(P_t).dot(A + B.dot(K))
    self.assertAlmostEqual(candidate.J, 0.5 * x0.dot(P_t).dot(x0), places=10)

  def test_exhausted_grid(self):
    problem = build_pendulum(N=10)
    u = np.zeros((10, 1))
    w = Iterate(ipddp.rollout(problem, u), u, 0.1 * np.ones((10, 2)))
    gains = _zero_gains(10, 2, 1, 2)
    for g in gains:
      g.eta = -1e6 * np.ones(2)
    step_filter = ipddp.StepFilter()
    with self.assertRaises(StepFailure):
      ipddp.forward_pass(problem, w, gains, step_filter, ipddp.SolverConfig(), 'feasible', 0.1)

  def test_divergent_candidates_are_rejected(self):
    problem = build_linear_quadratic(2.0, 1.0, 1.0, 1.0, 1.0, [1.0], 5)
    u = np.zeros((5, 1))
    w = Iterate(ipddp.rollout(problem, u), u, np.zeros((5, 0)))
    gains = _zero_gains(5, 1, 1, 0)
    gains[0].alpha = np.array([1e308])
    gains[0].beta = np.zeros((1, 1))
    rule = ipddp.ObjectiveDecrease()
    rule.reset(None, 1.0)
    with self.assertRaises(StepFailure):
      ipddp.forward_pass(problem, w, gains, rule, ipddp.SolverConfig(max_backtracks=3),
                         'feasible', 0.1)


if __name__ == '__main__':
  unittest.main()
