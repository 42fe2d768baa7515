from __future__ import print_function
from __future__ import division

import numpy as np

from ._errors import BarrierDomainError, DivergenceError, StepFailure
from ._problem import Iterate, constraint_values, objective

_EPS = np.finfo(float).eps


def step_grid(max_backtracks=10):
  return [2.0 ** (-k) for k in range(max_backtracks + 1)]


def fraction_to_boundary(mu, tau_min=0.95):
  return max(tau_min, 1.0 - mu)


class StepCandidate(object):
  """
  Trial iterate for one step length with its merit measures:
  J (objective), h (infeasibility measure) and phi (barrier objective).
  """

  def __init__(self, step, iterate, c, J=None, h=None, phi=None):
    self.step = step
    self.iterate = iterate
    self.c = c
    self.J = J
    self.h = h
    self.phi = phi

  def __repr__(self):
    return 'StepCandidate(step=%g, J=%s, h=%s, phi=%s)' % (self.step, self.J, self.h, self.phi)


def merit_measures(J, w, c, mu, variant):
  """(h, phi) of an iterate: residual 1-norm and barrier objective."""
  if variant == 'feasible':
    h = float(np.sum(np.abs(w.s * c + mu)))
    phi = J - mu * float(np.sum(np.log(-c)))
  else:
    h = float(np.sum(np.abs(c + w.y)) + np.sum(np.abs(w.s * w.y - mu)))
    phi = J - mu * float(np.sum(np.log(w.y)))
  return h, phi


def evaluate_candidate(problem, w, mu, variant, step=0.0):
  c = constraint_values(problem, w.x, w.u)
  J = objective(problem, w.x, w.u)
  h, phi = merit_measures(J, w, c, mu, variant)
  return StepCandidate(step, w, c, J, h, phi)


class StepFilter(object):
  """Set of mutually non-dominated (h, phi) pairs."""

  def __init__(self, gamma_f=1e-5, gamma_h=1e-5):
    self.gamma_f = gamma_f
    self.gamma_h = gamma_h
    self.entries = []

  def reset(self, h=None, phi=None):
    self.entries = []
    if h is not None:
      self.entries.append((h, phi))

  def acceptable(self, h, phi):
    for h_i, phi_i in self.entries:
      if not (h <= (1.0 - self.gamma_h) * h_i or phi <= phi_i - self.gamma_f * h):
        return False
    return True

  def add(self, h, phi):
    self.entries = [(h_i, phi_i) for h_i, phi_i in self.entries
                    if not (h <= h_i and phi <= phi_i)]
    self.entries.append((h, phi))

  def accept(self, candidate, expected_decrease=0.0):
    if not self.acceptable(candidate.h, candidate.phi):
      return False
    self.add(candidate.h, candidate.phi)
    return True

  def __len__(self):
    return len(self.entries)


class ObjectiveDecrease(object):
  """
  Sufficient decrease of the (barrier) objective, used when there is no
  infeasibility measure. `expected_decrease` is the predicted change of the
  last backward pass and is non-positive.
  """

  def __init__(self, armijo=1e-8):
    self.armijo = armijo
    self.phi = None

  def reset(self, h=None, phi=None):
    self.phi = phi

  def accept(self, candidate, expected_decrease=0.0):
    if self.phi is None:
      self.phi = candidate.phi
      return True
    slack = 1e3 * _EPS * max(1.0, abs(self.phi))
    bound = self.phi + self.armijo * candidate.step * min(expected_decrease, 0.0) + slack
    if candidate.phi <= bound:
      self.phi = candidate.phi
      return True
    return False


def filter_accept(step_filter, candidate, expected_decrease=0.0):
  return step_filter.accept(candidate, expected_decrease)


def apply_gains(problem, w, gains, step):
  """
  Closed-loop rollout of the affine policies. Only the feedforward terms are
  scaled by `step`. Raises DivergenceError on a non-finite state.
  """
  N = problem.N
  infeasible = w.y is not None
  x = np.zeros_like(w.x)
  u = np.zeros_like(w.u)
  s = np.zeros_like(w.s)
  y = np.zeros_like(w.y) if infeasible else None
  x[0] = w.x[0]
  with np.errstate(all='ignore'):
    for t in range(N):
      g = gains[t]
      dx = x[t] - w.x[t]
      u[t] = w.u[t] + step * g.alpha + g.beta.dot(dx)
      s[t] = w.s[t] + step * g.eta + g.theta.dot(dx)
      if infeasible:
        y[t] = w.y[t] + step * g.chi + g.zeta.dot(dx)
      x[t + 1] = problem.dynamics(x[t], u[t])
      if not (np.all(np.isfinite(x[t + 1])) and np.all(np.isfinite(u[t]))):
        raise DivergenceError(t + 1)
  return Iterate(x, u, s, y)


def positivity_guard(candidate, current, variant, tau):
  """
  Fraction-to-boundary test of `candidate` against the iterate it was
  computed from (`current`, a StepCandidate carrying its constraint values).
  """
  w_new = candidate.iterate
  w_old = current.iterate
  if w_new.s.size == 0:
    return True
  if not np.all(w_new.s >= (1.0 - tau) * w_old.s):
    return False
  if variant == 'feasible':
    return bool(np.all(candidate.c <= (1.0 - tau) * current.c))
  return bool(np.all(w_new.y >= (1.0 - tau) * w_old.y))


def forward_pass(problem, w, gains, step_filter, config, variant, mu,
                 expected_decrease=0.0, current=None):
  """
  Backtracking over the step grid. Returns the first candidate that passes
  the positivity guard and the acceptance rule; raises StepFailure when the
  grid is exhausted.
  """
  tau = fraction_to_boundary(mu, config.tau_min)
  if current is None:
    current = evaluate_candidate(problem, w, mu, variant)

  for step in step_grid(config.max_backtracks):
    try:
      w_new = apply_gains(problem, w, gains, step)
      with np.errstate(all='ignore'):
        c_new = constraint_values(problem, w_new.x, w_new.u)
        candidate = StepCandidate(step, w_new, c_new)
        if not np.all(np.isfinite(c_new)):
          continue
        if not positivity_guard(candidate, current, variant, tau):
          continue
        J = objective(problem, w_new.x, w_new.u)
        h, phi = merit_measures(J, w_new, c_new, mu, variant)
    except (DivergenceError, BarrierDomainError):
      continue
    if not (np.isfinite(J) and np.isfinite(h) and np.isfinite(phi)):
      continue
    candidate.J = J
    candidate.h = h
    candidate.phi = phi
    if filter_accept(step_filter, candidate, expected_decrease):
      return candidate

  raise StepFailure('No step length in the backtracking grid was accepted (mu = %g)' % (mu))
