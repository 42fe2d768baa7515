from __future__ import print_function
from __future__ import division

import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from tqdm import tqdm

from .._barrier import solve_barrier_ddp
from .._errors import ConfigurationError, InfeasibleStart, SolverFailure
from .._problem import constraint_values
from .._solver import SolverConfig, solve
from .._trace import read_document, write_document, write_trace
from ._problems import PROBLEM_DEFAULTS, default_solver_options, get_problem, problem_ids


def _run_feasible(problem, u0, config):
  return solve(problem, u0, config.replace(variant='feasible'))


def _run_infeasible(problem, u0, config):
  return solve(problem, u0, config.replace(variant='infeasible'))


def _run_barrier(problem, u0, config):
  return solve_barrier_ddp(problem, u0, config, relaxed=False)


def _run_relaxed_barrier(problem, u0, config):
  return solve_barrier_ddp(problem, u0, config, relaxed=True)


_ALGORITHM_REGISTRY = {
  'feasible-ipddp': _run_feasible,
  'infeasible-ipddp': _run_infeasible,
  'barrier': _run_barrier,
  'relaxed-barrier': _run_relaxed_barrier,
}

# Algorithm used to compute J* when none is stored
_REFERENCE_ALGORITHM = {
  'pendulum': 'feasible-ipddp',
  'car': 'feasible-ipddp',
  'unicycle': 'infeasible-ipddp',
}

_REFERENCE_FILE = 'reference_optima.json'


def algorithm_ids():
  return sorted(_ALGORITHM_REGISTRY)


def get_algorithm(algorithm):
  if algorithm in _ALGORITHM_REGISTRY:
    return _ALGORITHM_REGISTRY[algorithm]
  raise ConfigurationError('Unknown algorithm %s (available: %s)' % (
    algorithm, ', '.join(algorithm_ids())))


def run_algorithm(algorithm, problem, initial_controls, config):
  return get_algorithm(algorithm)(problem, initial_controls, config)


class TrialSpec(object):
  """
  One multi-trial experiment. Trial i uses seed base_seed + i for both the
  initial controls, drawn uniformly from control_range, and the solver.
  """

  def __init__(self, problem_id, algorithm, trials=40, control_range=None,
               base_seed=0, overrides=None, threshold=-4.0):
    _check_problem_id(problem_id)
    get_algorithm(algorithm)
    if trials < 1:
      raise ConfigurationError('Trial count must be at least 1, got %d' % (trials))
    if control_range is None:
      control_range = PROBLEM_DEFAULTS[problem_id]['control_range']
    lo, hi = float(control_range[0]), float(control_range[1])
    if not lo < hi:
      raise ConfigurationError('Control range needs low < high, got [%g, %g]' % (lo, hi))
    self.problem_id = problem_id
    self.algorithm = algorithm
    self.trials = int(trials)
    self.control_range = (lo, hi)
    self.base_seed = int(base_seed)
    self.overrides = dict(overrides) if overrides is not None else {}
    self.threshold = threshold

  def base_config(self):
    values = default_solver_options(self.problem_id)
    values.update(self.overrides)
    return SolverConfig(**values)

  def trace_name(self, i):
    return '%s_%s_trial%d.csv' % (self.problem_id, self.algorithm, i)

  def summary_name(self):
    return '%s_%s_summary.json' % (self.problem_id, self.algorithm)


def _check_problem_id(problem_id):
  if problem_id not in PROBLEM_DEFAULTS:
    raise ConfigurationError('Unknown problem %s (available: %s)' % (
      problem_id, ', '.join(problem_ids())))


def initial_controls(problem, control_range, seed):
  rng = np.random.RandomState(seed)
  return rng.uniform(control_range[0], control_range[1], (problem.N, problem.m))


class ReferenceOptimum(object):
  def __init__(self, problem_id, J_star, provenance=None):
    if J_star is None or not np.isfinite(J_star):
      raise ValueError('Reference objective for %s must be finite' % (problem_id))
    self.problem_id = problem_id
    self.J_star = float(J_star)
    self.provenance = provenance if provenance is not None else {}

  def to_dict(self):
    return {'J_star': self.J_star, 'provenance': self.provenance}


def _stored_optima(path):
  if path is None or not os.path.exists(path):
    return {}
  return read_document(path)


def packaged_optima_path():
  return os.path.join(os.path.dirname(os.path.abspath(__file__)), _REFERENCE_FILE)


def reference_optimum(problem_id, algorithm=None, cache_dir=None, regenerate=True, quiet=True,
                      packaged=True, mu_min=1e-10, f_tol=1e-9):
  """
  J* of a benchmark. Looks in the packaged reference_optima.json (unless
  packaged is False), then in cache_dir; otherwise runs a tight solve from
  seed 0 (mu_min, f_tol) and stores the result in cache_dir. Passing the
  settings recorded in a provenance reproduces that value.
  """
  _check_problem_id(problem_id)
  sources = [packaged_optima_path()] if packaged else []
  if cache_dir is not None:
    sources.append(os.path.join(cache_dir, _REFERENCE_FILE))
  for path in sources:
    entry = _stored_optima(path).get(problem_id)
    if entry is not None and entry.get('J_star') is not None:
      return ReferenceOptimum(problem_id, entry['J_star'], entry.get('provenance'))
  if not regenerate:
    return None

  if algorithm is None:
    algorithm = _REFERENCE_ALGORITHM[problem_id]
  problem = get_problem(problem_id)
  spec = TrialSpec(problem_id, algorithm, trials=1,
                   overrides={'mu_min': mu_min, 'f_tol': f_tol, 'max_iterations': 2000})
  config = spec.base_config()
  if not quiet:
    print('Computing reference objective for %s with %s' % (problem_id, algorithm))
  u0 = initial_controls(problem, spec.control_range, 0)
  solution = run_algorithm(algorithm, problem, u0, config)
  provenance = {
    'algorithm': algorithm,
    'seed': 0,
    'mu_min': config.mu_min,
    'f_tol': config.f_tol,
    'iterations': solution.iterations,
    'date': time.strftime('%Y-%m-%d'),
  }
  ref = ReferenceOptimum(problem_id, solution.objective, provenance)
  if cache_dir is not None:
    path = os.path.join(cache_dir, _REFERENCE_FILE)
    stored = _stored_optima(path)
    stored[problem_id] = ref.to_dict()
    write_document(path, stored)
  return ref


class TrialResult(object):
  """
  Outcome of one trial. With a reference objective, success means E_J
  reached the threshold; without one, the solver must have converged with
  max c <= feasibility_tol and mu <= feasibility_tol.
  """

  def __init__(self, index, seed, solution=None, failure=None, threshold=-4.0,
               max_violation=None, feasibility_tol=1e-6):
    self.index = index
    self.seed = seed
    self.solution = solution
    self.failure = failure
    trace = solution.trace if solution is not None else []
    self.trace = trace
    self.iterations = len(trace)
    self.final_J = trace[-1].J if len(trace) > 0 else None
    self.final_E_J = trace[-1].E_J if len(trace) > 0 else None
    self.final_mu = trace[-1].mu if len(trace) > 0 else None
    self.final_F_inf = trace[-1].F_inf if len(trace) > 0 else None
    self.final_max_violation = max_violation
    self.converged = solution is not None and solution.converged
    self.iterations_to_threshold = None
    for rec in trace:
      if rec.E_J is not None and rec.E_J <= threshold:
        self.iterations_to_threshold = rec.iteration
        break
    if self.final_E_J is not None:
      self.success = self.iterations_to_threshold is not None
    else:
      self.success = (self.converged and max_violation is not None and
                      max_violation <= feasibility_tol and self.final_mu <= feasibility_tol)

  def to_dict(self):
    return {
      'trial': self.index,
      'seed': self.seed,
      'converged': self.converged,
      'success': self.success,
      'failure': self.failure,
      'iterations': self.iterations,
      'iterations_to_threshold': self.iterations_to_threshold,
      'final_J': self.final_J,
      'final_E_J': self.final_E_J,
      'final_mu': self.final_mu,
      'final_F_inf': self.final_F_inf,
      'final_max_violation': self.final_max_violation,
    }


def final_violation(problem, solution):
  """Largest constraint value max_t,i c_i(x_t, u_t) of the final iterate; None without one."""
  if solution is None or problem.l == 0:
    return None
  w = solution.iterate
  return float(np.amax(constraint_values(problem, w.x, w.u)))


def run_trial(spec, i, J_star=None):
  """Run trial i of spec; solver failures are recorded on the result."""
  problem = get_problem(spec.problem_id)
  seed = spec.base_seed + i
  config = spec.base_config().replace(seed=seed, reference_objective=J_star)
  u0 = initial_controls(problem, spec.control_range, seed)
  try:
    solution = run_algorithm(spec.algorithm, problem, u0, config)
    return TrialResult(i, seed, solution, None, spec.threshold,
                       final_violation(problem, solution))
  except SolverFailure as e:
    return TrialResult(i, seed, e.solution, '%s: %s' % (type(e).__name__, e), spec.threshold,
                       final_violation(problem, e.solution))
  except InfeasibleStart as e:
    return TrialResult(i, seed, None, 'InfeasibleStart: %s' % (e), spec.threshold)


def summarize(spec, results, J_star=None):
  successes = sum(1 for r in results if r.success)
  return {
    'problem': spec.problem_id,
    'algorithm': spec.algorithm,
    'trials': spec.trials,
    'base_seed': spec.base_seed,
    'control_range': list(spec.control_range),
    'threshold': spec.threshold,
    'J_star': J_star,
    'success_count': successes,
    'success_rate': successes / float(len(results)),
    'results': [r.to_dict() for r in results],
  }


def run_trials(spec, out_dir, jobs=1, quiet=False, J_star=None):
  """
  Run every trial of `spec`, writing one trace CSV per trial and a JSON
  summary to out_dir. Returns (summary dict, list of TrialResult).
  """
  if not os.path.isdir(out_dir):
    os.makedirs(out_dir)

  def work(i):
    result = run_trial(spec, i, J_star)
    write_trace(os.path.join(out_dir, spec.trace_name(i)), result.trace)
    return result

  indices = list(range(spec.trials))
  progress = tqdm(total=spec.trials, desc='%s/%s' % (spec.problem_id, spec.algorithm),
                  disable=quiet)
  results = []
  try:
    if jobs > 1:
      with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(work, i) for i in indices]
        for future in futures:
          results.append(future.result())
          progress.update(1)
    else:
      for i in indices:
        results.append(work(i))
        progress.update(1)
  finally:
    progress.close()

  summary = summarize(spec, results, J_star)
  write_document(os.path.join(out_dir, spec.summary_name()), summary)
  return summary, results
