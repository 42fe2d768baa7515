from __future__ import print_function
from __future__ import division

import numpy as np

from .._barrier import barrier_transform, solve_barrier_ddp
from .._errors import SolverFailure, StepFailure
from .._forward_pass import ObjectiveDecrease, StepFilter, evaluate_candidate, forward_pass
from .._problem import Iterate
from .._solver import SolverConfig, _regularized_backward_pass, solve


def _first_step(problem, w, mu, variant, config, acceptance):
  """Largest accepted step of one backward/forward pass at mu from w."""
  current = evaluate_candidate(problem, w, mu, variant)
  acceptance.reset(current.h, current.phi)
  deriv = problem.evaluate_derivatives(w.x, w.u, not config.ilqr_mode)
  try:
    bp, _ = _regularized_backward_pass(problem, w, mu, 0.0, variant, deriv, config, lambda: None)
    candidate = forward_pass(problem, w, bp.gains, acceptance, config, variant, mu,
                             bp.diagnostics['expected_decrease'], current)
  except (StepFailure, SolverFailure):
    return 0.0
  return candidate.step


def central_path_step_study(problem, mu_values, kappas, algorithm='feasible-ipddp',
                            initial_controls=None, config=None):
  """
  For every mu (largest first) solve the perturbed problem at fixed mu, then
  for every kappa take one iteration at mu / kappa from that solution and
  record the first accepted step length.

  Returns a list of dicts with keys mu, kappa, step.
  """
  if algorithm not in ('feasible-ipddp', 'barrier'):
    raise ValueError('Step study supports feasible-ipddp and barrier, got %s' % (algorithm))
  if config is None:
    config = SolverConfig()
  if initial_controls is None:
    initial_controls = np.zeros((problem.N, problem.m))

  rows = []
  warm = None
  controls = initial_controls
  for mu in sorted(mu_values, reverse=True):
    fixed = config.replace(variant='feasible', mu_init_policy=mu, mu_min=mu)
    if algorithm == 'feasible-ipddp':
      solution = solve(problem, controls, fixed, warm_start=warm)
      warm = solution.iterate
      w = solution.iterate
    else:
      solution = solve_barrier_ddp(problem, controls, fixed)
      w = Iterate(solution.iterate.x, solution.iterate.u, np.zeros((problem.N, 0)))
    controls = solution.iterate.u

    for kappa in kappas:
      mu_next = mu / kappa
      if algorithm == 'feasible-ipddp':
        step = _first_step(problem, w, mu_next, 'feasible', config,
                           StepFilter(config.filter_gamma_f, config.filter_gamma_h))
      else:
        step = _first_step(barrier_transform(problem, mu_next), w, mu_next, 'feasible', config,
                           ObjectiveDecrease(config.armijo))
      rows.append({'mu': mu, 'kappa': kappa, 'step': step})
  return rows
