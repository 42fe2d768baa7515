from __future__ import print_function
from __future__ import division

import time

import numpy as np
import six

from ._backward_pass import backward_pass
from ._errors import (ConfigurationError, DivergenceError, InfeasibleStart,
                      MaxIterations, NotPositiveDefinite, NumericalFailure,
                      StepFailure)
from ._forward_pass import ObjectiveDecrease, StepFilter, evaluate_candidate, forward_pass
from ._problem import (Iterate, Multipliers, _as_controls, check_strict_feasibility,
                       constraint_values, objective, rollout)

_VARIANTS = ('feasible', 'infeasible')

_DEFAULTS = {
  'variant': 'feasible',
  'kappa': 5.0,
  'mu_init_policy': 'auto',
  'mu_min': 1e-8,
  'f_tol': 1e-7,
  'mu_accept_factor': 0.2,
  'max_iterations': 1000,
  'tau_min': 0.95,
  'max_backtracks': 10,
  'filter_gamma_f': 1e-5,
  'filter_gamma_h': 1e-5,
  'reg_min': 1e-6,
  'reg_factor': 10.0,
  'reg_max': 1e8,
  'armijo': 1e-8,
  'barrier_max_inner': 200,
  'seed': 0,
  'ilqr_mode': False,
  'curvature_fallback': False,
  'trace_eigenvalues': False,
  'verbose': False,
  'reference_objective': None,
}

_INT_FIELDS = ('max_iterations', 'max_backtracks', 'barrier_max_inner', 'seed')


def _check_mu_policy(policy):
  if isinstance(policy, six.string_types):
    if policy != 'auto':
      raise ConfigurationError('Unknown mu_init_policy %s (expected auto, a number or [lo, hi])' % (policy))
    return policy
  if isinstance(policy, (list, tuple)):
    if len(policy) != 2:
      raise ConfigurationError('Sampled mu_init_policy needs two bounds, got %s' % (str(policy)))
    lo, hi = float(policy[0]), float(policy[1])
    if not 0 < lo <= hi:
      raise ConfigurationError('Sampled mu_init_policy needs 0 < lo <= hi, got [%g, %g]' % (lo, hi))
    return (lo, hi)
  value = float(policy)
  if not value > 0:
    raise ConfigurationError('Explicit initial mu must be positive, got %g' % (value))
  return value


class SolverConfig(object):
  """
  Solver settings. Every field has a default (see `_DEFAULTS`); unknown
  keyword arguments raise ConfigurationError.

  mu_init_policy is 'auto' (J / (N l) at the initial rollout), a positive
  number, or a pair (lo, hi) sampled uniformly with `seed`.

  curvature_fallback retries a sweep whose Q̂_uu is indefinite with the
  Gauss-Newton model before the regularization is raised.
  """

  def __init__(self, **kwargs):
    unknown = [key for key in kwargs if key not in _DEFAULTS]
    if len(unknown) > 0:
      raise ConfigurationError('Unknown solver options: %s' % (', '.join(sorted(unknown))))
    for key, value in _DEFAULTS.items():
      setattr(self, key, kwargs.get(key, value))
    for key in _INT_FIELDS:
      setattr(self, key, int(getattr(self, key)))
    self._validate()

  def _validate(self):
    if self.variant not in _VARIANTS:
      raise ConfigurationError('Unknown variant %s' % (self.variant))
    if not self.kappa > 1:
      raise ConfigurationError('kappa must exceed 1, got %g' % (self.kappa))
    if not 0 < self.mu_accept_factor < 1:
      raise ConfigurationError('mu_accept_factor must lie in (0, 1), got %g' % (self.mu_accept_factor))
    if not self.mu_min > 0:
      raise ConfigurationError('mu_min must be positive, got %g' % (self.mu_min))
    if not self.f_tol > 0:
      raise ConfigurationError('f_tol must be positive, got %g' % (self.f_tol))
    if self.max_iterations < 0:
      raise ConfigurationError('max_iterations must be non-negative, got %d' % (self.max_iterations))
    if not 0 < self.tau_min < 1:
      raise ConfigurationError('tau_min must lie in (0, 1), got %g' % (self.tau_min))
    if not (0 < self.reg_min <= self.reg_max and self.reg_factor > 1):
      raise ConfigurationError('Invalid regularization schedule (%g, %g, %g)' % (
        self.reg_min, self.reg_factor, self.reg_max))
    self.mu_init_policy = _check_mu_policy(self.mu_init_policy)

  def to_dict(self):
    out = {}
    for key in _DEFAULTS:
      value = getattr(self, key)
      out[key] = list(value) if isinstance(value, tuple) else value
    return out

  def replace(self, **overrides):
    values = self.to_dict()
    values.update(overrides)
    return SolverConfig(**values)

  @classmethod
  def from_dict(cls, values):
    return cls(**dict(values))

  def __repr__(self):
    return 'SolverConfig(%s)' % (', '.join(
      '%s=%r' % (key, getattr(self, key)) for key in sorted(_DEFAULTS)))


class IterationRecord(object):
  def __init__(self, iteration, J, mu, F_inf, step, gamma_reg,
               E_J=None, min_eig=None, wall_time=0.0, curvature='exact'):
    self.iteration = iteration
    self.J = J
    self.E_J = E_J
    self.mu = mu
    self.F_inf = F_inf
    self.step = step
    self.gamma_reg = gamma_reg
    self.min_eig = min_eig
    self.wall_time = wall_time
    self.curvature = curvature


class MuEvent(object):
  """State at a mu reduction: the pre-reduction mu, F_inf and KKT report."""

  def __init__(self, iteration, mu, F_inf, kkt):
    self.iteration = iteration
    self.mu = mu
    self.F_inf = F_inf
    self.kkt = kkt


class Solution(object):
  def __init__(self, iterate, multipliers, mu, converged, trace, gains,
               variant='feasible', mu_events=None, message=''):
    self.iterate = iterate
    self.multipliers = multipliers
    self.mu = mu
    self.converged = converged
    self.trace = trace
    self.gains = gains
    self.variant = variant
    self.mu_events = mu_events if mu_events is not None else []
    self.message = message

  @property
  def objective(self):
    return self.trace[-1].J if len(self.trace) > 0 else None

  @property
  def iterations(self):
    return len(self.trace)


def optimality_error(J, J_star):
  """E_J = log10(J - J*), floored at 1e-16."""
  return float(np.log10(max(J - J_star, 1e-16)))


def update_mu(mu, kappa):
  return min(mu / kappa, mu ** 1.2)


def init_mu(problem, w, policy, rng=None):
  policy = _check_mu_policy(policy)
  if isinstance(policy, six.string_types):
    if problem.l == 0:
      raise ConfigurationError('mu_init_policy auto needs constraints (l = 0 for %s)' % (problem.name))
    J = objective(problem, w.x, w.u)
    return J / (problem.N * problem.l)
  if isinstance(policy, tuple):
    if rng is None:
      rng = np.random.RandomState(0)
    return float(rng.uniform(policy[0], policy[1]))
  return policy


def initial_duals(problem, c, mu, variant):
  """Initial s (and y) for a rollout with constraint values c."""
  if variant == 'feasible':
    with np.errstate(divide='ignore'):
      s = mu * np.maximum(1.0, 1.0 / (-c))
    return np.clip(s, 1e-3, 1e3), None
  s = 0.1 * np.ones_like(c)
  y = np.maximum(-c, 1e-2)
  return s, y


def recover_multipliers(values, expansions):
  """lambda_N = V_x^N, lambda_t = Q_x^t."""
  lambdas = [Qe.Q_x for Qe in expansions]
  lambdas.append(values[-1].V_x)
  return Multipliers(np.array(lambdas))


def residual_F(problem, w, mu, variant=None, deriv=None, second_order=True):
  """Stacked F(w, mu) from an unregularized sweep, and its infinity norm."""
  if variant is None:
    variant = w.variant
  bp = backward_pass(problem, w, mu, 0.0, variant, deriv, second_order, residual=True)
  vec = bp.residual_vector(variant)
  return vec, (float(np.amax(np.abs(vec))) if vec.size > 0 else 0.0)


class KKTReport(object):
  def __init__(self, passed, blocks, tol):
    self.passed = passed
    self.blocks = blocks # block name --> infinity norm
    self.tol = tol

  def __repr__(self):
    return 'KKTReport(passed=%s, %s)' % (self.passed, ', '.join(
      '%s=%.3g' % (key, self.blocks[key]) for key in sorted(self.blocks)))


def _norm(a):
  a = np.asarray(a)
  return float(np.amax(np.abs(a))) if a.size > 0 else 0.0


def check_perturbed_kkt(problem, w, lambdas, mu, tol, variant=None):
  """
  Evaluate the perturbed KKT blocks: Lagrangian gradients in x and u, the
  dynamics residual, S c + mu and the sign conditions c <= 0, s >= 0.
  The infeasible variant tolerates sign violations up to `tol`.
  """
  if variant is None:
    variant = w.variant
  lam = lambdas.lambdas if isinstance(lambdas, Multipliers) else np.asarray(lambdas, dtype=float)
  N = problem.N
  d = problem.evaluate_derivatives(w.x, w.u, second_order=False)
  c = d.c

  grad_x = (d.q_x + np.einsum('tjn,tj->tn', d.c_x, w.s)
            + np.einsum('tin,ti->tn', d.f_x, lam[1:]) - lam[:N])
  grad_u = (d.q_u + np.einsum('tjm,tj->tm', d.c_u, w.s)
            + np.einsum('tim,ti->tm', d.f_u, lam[1:]))
  dyn = problem.evaluate_stages('f', w.x[:N], w.u) - w.x[1:]

  blocks = {
    'grad_x': max(_norm(grad_x), _norm(d.p_x - lam[N])),
    'grad_u': _norm(grad_u),
    'dynamics': max(_norm(dyn), _norm(w.x[0] - problem.x0)),
    'complementarity': _norm(w.s * c + mu),
    'sign': max(_norm(np.maximum(c, 0.0)), _norm(np.maximum(-w.s, 0.0))),
  }
  sign_tol = 0.0 if variant == 'feasible' else tol
  passed = (blocks['sign'] <= sign_tol and
            all(blocks[key] <= tol for key in ('grad_x', 'grad_u', 'dynamics', 'complementarity')))
  return KKTReport(passed, blocks, tol)


def _raise_reg(gamma, config, partial):
  gamma = max(config.reg_min, config.reg_factor * gamma)
  if gamma > config.reg_max:
    raise NumericalFailure('Regularization exceeded %g' % (config.reg_max), partial())
  return gamma


def _regularized_backward_pass(problem, w, mu, gamma, variant, deriv, config, partial,
                               convex_sweep=None):
  """
  Sweep at gamma, raising gamma until Q̂_uu factorizes. With
  config.curvature_fallback a failed exact sweep is first retried at the same
  gamma by `convex_sweep(gamma)`, by default the Gauss-Newton sweep of `problem`.
  """
  if convex_sweep is None:
    def convex_sweep(g):
      return backward_pass(problem, w, mu, g, variant, deriv, False,
                           trace_eigenvalues=config.trace_eigenvalues,
                           curvature='gauss_newton')
  while True:
    try:
      bp = backward_pass(problem, w, mu, gamma, variant, deriv, not config.ilqr_mode,
                         trace_eigenvalues=config.trace_eigenvalues)
      return bp, gamma
    except (NotPositiveDefinite, DivergenceError):
      pass
    if config.curvature_fallback:
      try:
        return convex_sweep(gamma), gamma
      except (NotPositiveDefinite, DivergenceError):
        pass
    gamma = _raise_reg(gamma, config, partial)


def _residual_sweep(problem, w, mu, variant, deriv, bp, gamma, config):
  """F_inf of w from an exact gamma = 0 sweep, reusing bp when it is one."""
  if gamma == 0.0 and bp.diagnostics.get('curvature', 'exact') == 'exact':
    return bp.diagnostics['F_inf'], bp
  try:
    res = backward_pass(problem, w, mu, 0.0, variant, deriv, not config.ilqr_mode, residual=True)
  except DivergenceError:
    return bp.diagnostics['F_inf'], bp
  return res.diagnostics['F_inf'], res


def _print_header():
  print('%5s  %10s  %14s  %10s  %8s  %9s' % ('iter', 'mu', 'J', 'F_inf', 'step', 'gamma_reg'))


def _print_record(rec):
  print('%5d  %10.3e  %14.7e  %10.3e  %8.4f  %9.2e' % (
    rec.iteration, rec.mu, rec.J, rec.F_inf, rec.step, rec.gamma_reg))


def initial_iterate(problem, initial_controls, config, rng=None):
  """Rollout of the initial controls with duals set for the configured variant. Returns (w, mu)."""
  u0 = _as_controls(problem, initial_controls)
  try:
    x = rollout(problem, u0)
  except DivergenceError as e:
    raise NumericalFailure('Initial rollout diverged at stage %d' % (e.stage))
  primal = Iterate(x, u0, np.zeros((problem.N, problem.l)))
  mu = max(init_mu(problem, primal, config.mu_init_policy, rng), config.mu_min)
  c = constraint_values(problem, x, u0)
  if config.variant == 'feasible' and np.any(c >= 0):
    t = int(np.argmax(np.any(c >= 0, axis=1)))
    raise InfeasibleStart('Initial rollout of %s violates c < 0 at stage %d (max c = %g)' % (
      problem.name, t, float(np.amax(c))))
  s, y = initial_duals(problem, c, mu, config.variant)
  return Iterate(x, u0, s, y), mu


def _warm_iterate(problem, warm_start, config, rng):
  w = warm_start.copy()
  if w.x.shape != (problem.N + 1, problem.n) or w.u.shape != (problem.N, problem.m):
    raise ConfigurationError('Warm start has shapes %s, %s' % (str(w.x.shape), str(w.u.shape)))
  if config.variant == 'infeasible' and w.y is None:
    c = constraint_values(problem, w.x, w.u)
    w.y = np.maximum(-c, 1e-2)
  if config.variant == 'feasible':
    w.y = None
  mu = max(init_mu(problem, w, config.mu_init_policy, rng), config.mu_min)
  report = check_strict_feasibility(problem, w, config.variant)
  if not report.passed:
    raise InfeasibleStart('Warm start is not strictly feasible (margin %g)' % (report.margin))
  return w, mu


def solve(problem, initial_controls=None, config=None, warm_start=None):
  """
  Interior-point DDP.

  Parameters
  ----------
  problem: OCProblem
  initial_controls: array of shape (N, m)
      Ignored when `warm_start` is given.
  config: SolverConfig
      `variant` selects the feasible or the infeasible method.
  warm_start: Iterate
      Start from an existing primal-dual iterate.

  Returns
  -------
  Solution

  Raises InfeasibleStart, MaxIterations, NumericalFailure. The two solve
  failures carry the partial Solution.
  """
  if config is None:
    config = SolverConfig()
  variant = config.variant
  second_order = not config.ilqr_mode
  rng = np.random.RandomState(config.seed)
  start = time.time()

  if warm_start is not None:
    w, mu = _warm_iterate(problem, warm_start, config, rng)
  else:
    if initial_controls is None:
      raise ConfigurationError('Either initial_controls or warm_start is required')
    w, mu = initial_iterate(problem, initial_controls, config, rng)

  # h is identically zero without constraints
  if problem.l > 0:
    step_filter = StepFilter(config.filter_gamma_f, config.filter_gamma_h)
  else:
    step_filter = ObjectiveDecrease(config.armijo)
  current = evaluate_candidate(problem, w, mu, variant)
  step_filter.reset(current.h, current.phi)
  deriv = problem.evaluate_derivatives(w.x, w.u, second_order)

  trace = []
  mu_events = []
  state = {'bp': None, 'res': None}

  def partial(message=''):
    res = state['res']
    mult = recover_multipliers(res.values, res.expansions) if res is not None else None
    gains = state['bp'].gains if state['bp'] is not None else None
    return Solution(w, mult, mu, False, trace, gains, variant, mu_events, message)

  def record(k, F_inf, step, gamma, bp):
    E_J = None
    if config.reference_objective is not None:
      E_J = optimality_error(current.J, config.reference_objective)
    rec = IterationRecord(k, current.J, mu, F_inf, step, gamma, E_J,
                          bp.diagnostics.get('min_eig'), time.time() - start,
                          bp.diagnostics.get('curvature', 'exact'))
    trace.append(rec)
    if config.verbose:
      _print_record(rec)

  if config.verbose:
    print('Solving %s (N=%d, n=%d, m=%d, l=%d) with the %s variant, mu0 = %g' % (
      problem.name, problem.N, problem.n, problem.m, problem.l, variant, mu))
    _print_header()

  gamma = 0.0
  last_step = 0.0
  converged = False
  for k in range(config.max_iterations + 1):
    bp, gamma = _regularized_backward_pass(problem, w, mu, gamma, variant, deriv, config, partial)
    F_inf, res = _residual_sweep(problem, w, mu, variant, deriv, bp, gamma, config)
    state['bp'], state['res'] = bp, res
    record(k, F_inf, last_step, gamma, bp)
    if mu <= config.mu_min and F_inf <= config.f_tol:
      converged = True
      break

    while F_inf < config.mu_accept_factor * mu and mu > config.mu_min:
      kkt = check_perturbed_kkt(problem, w, recover_multipliers(res.values, res.expansions),
                                mu, 10 * config.mu_accept_factor * mu, variant)
      mu_events.append(MuEvent(k, mu, F_inf, kkt))
      mu = max(update_mu(mu, config.kappa), config.mu_min)
      current = evaluate_candidate(problem, w, mu, variant)
      step_filter.reset(current.h, current.phi)
      bp, gamma = _regularized_backward_pass(problem, w, mu, gamma, variant, deriv, config, partial)
      F_inf, res = _residual_sweep(problem, w, mu, variant, deriv, bp, gamma, config)
      state['bp'], state['res'] = bp, res
      if mu <= config.mu_min and F_inf <= config.f_tol:
        # one row per iteration, at the final mu
        trace.pop()
        record(k, F_inf, last_step, gamma, bp)
        converged = True
        break
    if converged:
      break

    if k == config.max_iterations:
      raise MaxIterations('No convergence within %d iterations (mu = %g, F_inf = %g)' % (
        config.max_iterations, mu, F_inf), partial('max iterations'))

    try:
      candidate = forward_pass(problem, w, bp.gains, step_filter, config, variant, mu,
                               bp.diagnostics['expected_decrease'], current)
    except StepFailure:
      gamma = _raise_reg(gamma, config, partial)
      last_step = 0.0
      continue
    w = candidate.iterate
    current = candidate
    last_step = candidate.step
    deriv = problem.evaluate_derivatives(w.x, w.u, second_order)
    gamma = gamma / config.reg_factor
    if gamma < config.reg_min:
      gamma = 0.0

  if config.verbose:
    print('Converged after %d iterations, J = %.10g' % (len(trace) - 1, current.J))
  res = state['res']
  return Solution(w, recover_multipliers(res.values, res.expansions), mu, converged,
                  trace, state['bp'].gains, variant, mu_events, 'converged')
