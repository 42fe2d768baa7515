"""Log-barrier and relaxed log-barrier DDP.

Both methods move the constraints into the stage cost and run the
unconstrained (l = 0) path of the backward and forward passes.
"""
from __future__ import print_function
from __future__ import division

import time

import numpy as np

from ._backward_pass import backward_pass
from ._errors import (BarrierDomainError, DivergenceError, InfeasibleStart, MaxIterations,
                      NumericalFailure, StepFailure)
from ._forward_pass import ObjectiveDecrease, evaluate_candidate, forward_pass
from ._problem import (Iterate, OCProblem, _as_controls, constraint_values,
                       objective, rollout)
from ._solver import (IterationRecord, Solution, SolverConfig, _print_header,
                      _print_record, _raise_reg, _regularized_backward_pass,
                      _residual_sweep, init_mu, optimality_error,
                      recover_multipliers, update_mu)


def log_barrier(z):
  z = np.asarray(z, dtype=float)
  if np.any(z <= 0):
    raise BarrierDomainError('Log barrier evaluated at a non-interior point (min -c = %g)' % (
      float(np.amin(z))))
  return -np.log(z), -1.0 / z, 1.0 / z ** 2


def relaxed_penalty(z, delta):
  """
  Relaxed log barrier: -log z for z > delta, continued below delta by the
  quadratic that matches value, slope and curvature at z = delta.
  Returns (value, first derivative, second derivative).
  """
  if not delta > 0:
    raise ValueError('Relaxation parameter must be positive, got %g' % (delta))
  z = np.asarray(z, dtype=float)
  inner = z > delta
  zs = np.where(inner, z, delta)
  value = np.where(inner, -np.log(zs), 0.5 * (((z - 2 * delta) / delta) ** 2 - 1) - np.log(delta))
  d1 = np.where(inner, -1.0 / zs, (z - 2 * delta) / delta ** 2)
  d2 = np.where(inner, 1.0 / zs ** 2, np.ones_like(z) / delta ** 2)
  return value, d1, d2


class BarrierProblem(OCProblem):
  """
  Unconstrained problem with stage cost q + mu * sum_j b(-c_j), where b is
  the log barrier or its relaxed form. With curvature='gauss_newton' the
  stage Hessians keep only the c_a' b'' c_b part, which is positive
  semidefinite.
  """

  def __init__(self, problem, mu, relaxed=False, delta=None, curvature='exact'):
    if not mu > 0:
      raise ValueError('Barrier parameter must be positive, got %g' % (mu))
    if curvature not in ('exact', 'gauss_newton'):
      raise ValueError('Unknown curvature model %s' % (curvature))
    if relaxed and delta is None:
      delta = mu
    self.wrapped = problem
    self.mu = mu
    self.relaxed = relaxed
    self.delta = delta
    self.curvature = curvature
    kind = 'relaxed-barrier' if relaxed else 'barrier'
    super(BarrierProblem, self).__init__(
        problem.n, problem.m, 0, problem.N, problem.x0, self._callbacks_for(problem),
        name='%s-%s' % (problem.name, kind), check=False, vectorized=problem.vectorized)

  def penalty(self, z):
    if self.relaxed:
      return relaxed_penalty(z, self.delta)
    return log_barrier(z)

  def _callbacks_for(self, problem):
    ev = problem.evaluate
    mu = self.mu
    exact = self.curvature == 'exact'

    # every entry broadcasts over leading stage axes
    def terms(x, u):
      return self.penalty(-ev('c', x, u))

    def q(x, u):
      return ev('q', x, u) + mu * np.sum(terms(x, u)[0], axis=-1)

    def first(key, a):
      def grad(x, u):
        d1 = terms(x, u)[1]
        return ev(key, x, u) - mu * np.einsum('...ji,...j->...i', ev('c_' + a, x, u), d1)
      return grad

    def second(key, a, b):
      def hess(x, u):
        _, d1, d2 = terms(x, u)
        c_a = ev('c_' + a, x, u)
        c_b = ev('c_' + b, x, u)
        curv = np.einsum('...ja,...j,...jb->...ab', c_a, d2, c_b)
        if exact:
          curv = curv - np.einsum('...j,...jab->...ab', d1, ev('c_' + a + b, x, u))
        return ev(key, x, u) + mu * curv
      return hess

    table = {
      'q': q,
      'q_x': first('q_x', 'x'),
      'q_u': first('q_u', 'u'),
      'q_xx': second('q_xx', 'x', 'x'),
      'q_uu': second('q_uu', 'u', 'u'),
      'q_xu': second('q_xu', 'x', 'u'),
    }
    for key in ('f', 'f_x', 'f_u', 'f_xx', 'f_uu', 'f_xu', 'p', 'p_x', 'p_xx'):
      table[key] = problem.callback(key)
    return table

  def dual_estimate(self, x_seq, u_seq):
    """s = -mu * b'(-c), which makes S c + mu vanish for the log barrier."""
    c = constraint_values(self.wrapped, x_seq, u_seq)
    return -self.mu * self.penalty(-c)[1]


def barrier_transform(problem, mu, relaxed=False, delta=None, curvature='exact'):
  return BarrierProblem(problem, mu, relaxed, delta, curvature)


def solve_barrier_ddp(problem, initial_controls, config=None, relaxed=False):
  """
  Barrier DDP baseline. The outer loop reduces mu (and sets delta = mu for
  the relaxed form) once the infinity norm of Q_u drops below
  mu_accept_factor * mu, or after barrier_max_inner iterations at one mu.
  """
  if config is None:
    config = SolverConfig()
  algorithm = 'relaxed-barrier' if relaxed else 'barrier'
  second_order = not config.ilqr_mode
  rng = np.random.RandomState(config.seed)
  start = time.time()

  u0 = _as_controls(problem, initial_controls)
  try:
    x = rollout(problem, u0)
  except DivergenceError as e:
    raise NumericalFailure('Initial rollout diverged at stage %d' % (e.stage))
  c = constraint_values(problem, x, u0)
  if not relaxed and np.any(c >= 0):
    raise InfeasibleStart('Initial rollout of %s violates c < 0 (max c = %g)' % (
      problem.name, float(np.amax(c))))
  mu = max(init_mu(problem, Iterate(x, u0, np.zeros_like(c)), config.mu_init_policy, rng), config.mu_min)

  w = Iterate(x, u0, np.zeros((problem.N, 0)))
  bproblem = barrier_transform(problem, mu, relaxed)
  acceptance = ObjectiveDecrease(config.armijo)
  current = evaluate_candidate(bproblem, w, mu, 'feasible')
  acceptance.reset(phi=current.phi)
  deriv = bproblem.evaluate_derivatives(w.x, w.u, second_order)

  trace = []
  state = {'bp': None, 'res': None}

  def finish(converged, message):
    res = state['res']
    s = bproblem.dual_estimate(w.x, w.u)
    mult = recover_multipliers(res.values, res.expansions) if res is not None else None
    gains = state['bp'].gains if state['bp'] is not None else None
    y = -constraint_values(problem, w.x, w.u) if relaxed else None
    return Solution(Iterate(w.x, w.u, s, y), mult, mu, converged, trace, gains,
                    algorithm, [], message)

  def partial(message=''):
    return finish(False, message)

  def record(k, grad, step, gamma, bp):
    J = objective(problem, w.x, w.u)
    E_J = None
    if config.reference_objective is not None:
      E_J = optimality_error(J, config.reference_objective)
    rec = IterationRecord(k, J, mu, grad, step, gamma, E_J,
                          bp.diagnostics.get('min_eig'), time.time() - start,
                          bp.diagnostics.get('curvature', 'exact'))
    trace.append(rec)
    if config.verbose:
      _print_record(rec)

  def gradient(bp, gamma):
    _, res = _residual_sweep(bproblem, w, mu, 'feasible', deriv, bp, gamma, config)
    state['bp'], state['res'] = bp, res
    return res.diagnostics['max_Qu']

  convex = {'w': None, 'mu': None}

  def convex_sweep(g):
    # Gauss-Newton model of the current barrier problem, built on first use per iterate
    if convex['w'] is not w or convex['mu'] != mu:
      convex['problem'] = barrier_transform(problem, mu, relaxed, curvature='gauss_newton')
      convex['deriv'] = convex['problem'].evaluate_derivatives(w.x, w.u, False)
      convex['w'], convex['mu'] = w, mu
    return backward_pass(convex['problem'], w, mu, g, 'feasible', convex['deriv'], False,
                         trace_eigenvalues=config.trace_eigenvalues, curvature='gauss_newton')

  if config.verbose:
    print('Solving %s with %s DDP, mu0 = %g' % (problem.name, algorithm, mu))
    _print_header()

  gamma = 0.0
  last_step = 0.0
  inner = 0
  converged = False
  for k in range(config.max_iterations + 1):
    bp, gamma = _regularized_backward_pass(bproblem, w, mu, gamma, 'feasible', deriv,
                                           config, partial, convex_sweep)
    grad = gradient(bp, gamma)
    record(k, grad, last_step, gamma, bp)
    if mu <= config.mu_min and grad <= config.f_tol:
      converged = True
      break

    inner += 1
    while (grad < config.mu_accept_factor * mu or inner >= config.barrier_max_inner) \
        and mu > config.mu_min:
      mu = max(update_mu(mu, config.kappa), config.mu_min)
      inner = 0
      bproblem = barrier_transform(problem, mu, relaxed)
      deriv = bproblem.evaluate_derivatives(w.x, w.u, second_order)
      current = evaluate_candidate(bproblem, w, mu, 'feasible')
      acceptance.reset(phi=current.phi)
      bp, gamma = _regularized_backward_pass(bproblem, w, mu, gamma, 'feasible', deriv,
                                             config, partial, convex_sweep)
      grad = gradient(bp, gamma)
      if mu <= config.mu_min and grad <= config.f_tol:
        # one row per iteration, at the final mu
        trace.pop()
        record(k, grad, last_step, gamma, bp)
        converged = True
        break
    if converged:
      break

    if k == config.max_iterations:
      raise MaxIterations('No convergence within %d iterations (mu = %g, |Q_u| = %g)' % (
        config.max_iterations, mu, grad), partial('max iterations'))

    try:
      candidate = forward_pass(bproblem, w, bp.gains, acceptance, config, 'feasible', mu,
                               bp.diagnostics['expected_decrease'], current)
    except StepFailure:
      gamma = _raise_reg(gamma, config, partial)
      last_step = 0.0
      continue
    w = candidate.iterate
    current = candidate
    last_step = candidate.step
    deriv = bproblem.evaluate_derivatives(w.x, w.u, second_order)
    gamma = gamma / config.reg_factor
    if gamma < config.reg_min:
      gamma = 0.0

  if config.verbose:
    print('Converged after %d iterations, J = %.10g' % (len(trace) - 1, trace[-1].J))
  return finish(True, 'converged')
