"""Command-line front end: `ipddp solve`, `ipddp bench` and `ipddp verify`."""
from __future__ import print_function
from __future__ import division

import argparse
import os
import sys

import numpy as np
import six

from ._barrier import barrier_transform
from ._errors import ConfigurationError, InfeasibleStart, SolverFailure
from ._problem import Iterate, finite_diff_check
from ._solver import SolverConfig, check_perturbed_kkt
from ._trace import load_solution, read_document, save_solution, write_trace
from .benchmarks._problems import (PROBLEM_DEFAULTS, default_solver_options, get_problem,
                                   problem_ids)
from .benchmarks._trials import (TrialSpec, algorithm_ids, get_algorithm,
                                 initial_controls, reference_optimum, run_algorithm,
                                 run_trials)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def parse_mu_init(text):
  """'auto', a positive number, or 'lo,hi' for a sampled initial mu."""
  if isinstance(text, six.string_types):
    text = text.strip()
    if text == 'auto':
      return 'auto'
    if ',' in text:
      parts = text.split(',')
      if len(parts) != 2:
        raise ConfigurationError('--mu-init expects auto, a number or lo,hi; got %s' % (text))
      return (float(parts[0]), float(parts[1]))
    return float(text)
  return text


def _add_common(parser):
  parser.add_argument('--problem', required=True, help='benchmark id: %s' % (', '.join(problem_ids())))
  parser.add_argument('--algorithm', default='feasible-ipddp',
                      help='one of: %s' % (', '.join(algorithm_ids())))
  parser.add_argument('--seed', type=int, default=None)
  parser.add_argument('--mu-init', default=None, help='auto, a number, or lo,hi')
  parser.add_argument('--kappa', type=float, default=None)
  parser.add_argument('--max-iter', type=int, default=None)
  parser.add_argument('--ilqr', action='store_true', help='drop second-order dynamics terms')
  parser.add_argument('--config', default=None, help='JSON document with solver options')
  parser.add_argument('--out', default='.', help='output directory')
  parser.add_argument('--quiet', action='store_true')


def build_parser():
  parser = argparse.ArgumentParser(
      prog='ipddp', description='Interior-point DDP solves and benchmark runs.')
  sub = parser.add_subparsers(dest='command')

  solve = sub.add_parser('solve', help='run one trajectory optimization')
  _add_common(solve)

  bench = sub.add_parser('bench', help='run a multi-trial experiment')
  _add_common(bench)
  bench.add_argument('--trials', type=int, default=None)
  bench.add_argument('--jobs', type=int, default=1)
  bench.add_argument('--no-reference', action='store_true',
                     help='leave E_J empty instead of computing J*')

  verify = sub.add_parser('verify', help='check a stored solution')
  verify.add_argument('solution', help='.npz file written by solve')
  verify.add_argument('--tol', type=float, default=None,
                      help='KKT tolerance, default max(1e-6, 2 mu)')
  verify.add_argument('--fd-points', type=int, default=20)
  verify.add_argument('--seed', type=int, default=0)
  return parser


class RunConfig(object):
  """Parsed command: solver options from --config overridden by flags."""

  def __init__(self, args):
    self.command = args.command
    self.problem_id = args.problem
    self.algorithm = args.algorithm
    self.out_dir = args.out
    self.quiet = args.quiet
    if self.problem_id not in PROBLEM_DEFAULTS:
      raise ConfigurationError('Unknown problem %s (available: %s)' % (
        self.problem_id, ', '.join(problem_ids())))
    get_algorithm(self.algorithm)

    document = read_document(args.config) if args.config is not None else {}
    trials = document.pop('trials', {}) or {}
    unknown = [key for key in trials if key not in ('count', 'control_range', 'base_seed')]
    if len(unknown) > 0:
      raise ConfigurationError('Unknown trials options: %s' % (', '.join(sorted(unknown))))

    options = default_solver_options(self.problem_id)
    options.update(document)
    if args.mu_init is not None:
      options['mu_init_policy'] = parse_mu_init(args.mu_init)
    if args.kappa is not None:
      options['kappa'] = args.kappa
    if args.max_iter is not None:
      options['max_iterations'] = args.max_iter
    if args.ilqr:
      options['ilqr_mode'] = True
    if args.seed is not None:
      options['seed'] = args.seed
    # validates keys and values
    self.config = SolverConfig.from_dict(options)
    self.options = options

    count = getattr(args, 'trials', None)
    self.trials = int(count if count is not None else trials.get('count', 40))
    self.control_range = trials.get('control_range')
    self.base_seed = args.seed if args.seed is not None else int(trials.get('base_seed', 0))
    self.jobs = getattr(args, 'jobs', 1)
    self.reference = not getattr(args, 'no_reference', False)
    if self.jobs < 1:
      raise ConfigurationError('--jobs must be at least 1, got %d' % (self.jobs))


def _solve(run):
  problem = get_problem(run.problem_id)
  control_range = run.control_range or PROBLEM_DEFAULTS[run.problem_id]['control_range']
  seed = run.config.seed
  u0 = initial_controls(problem, control_range, seed)
  ref = reference_optimum(run.problem_id, cache_dir=run.out_dir, regenerate=False)
  config = run.config.replace(verbose=not run.quiet,
                              reference_objective=ref.J_star if ref is not None else None)

  stem = os.path.join(run.out_dir, '%s_%s' % (run.problem_id, run.algorithm))
  try:
    solution = run_algorithm(run.algorithm, problem, u0, config)
  except SolverFailure as e:
    print('Solve failed: %s' % (e))
    if e.solution is not None:
      write_trace(stem + '_trace.csv', e.solution.trace)
    return EXIT_FAILURE
  except InfeasibleStart as e:
    print('Solve failed: %s' % (e))
    return EXIT_FAILURE

  write_trace(stem + '_trace.csv', solution.trace)
  save_solution(stem + '_solution.npz', solution, run.problem_id)
  if not run.quiet:
    last = solution.trace[-1]
    print('Wrote %s_trace.csv and %s_solution.npz (J = %.10g, F_inf = %.3e, mu = %.3e)' % (
      stem, stem, last.J, last.F_inf, last.mu))
  return EXIT_OK


def _bench(run):
  spec = TrialSpec(run.problem_id, run.algorithm, run.trials, run.control_range,
                   run.base_seed, run.options)
  J_star = None
  try:
    ref = None
    if run.reference:
      ref = reference_optimum(run.problem_id, cache_dir=run.out_dir, quiet=run.quiet)
    if ref is not None:
      J_star = ref.J_star
  except (SolverFailure, InfeasibleStart) as e:
    print('No reference objective for %s, E_J is left empty: %s' % (run.problem_id, e))
  summary, _ = run_trials(spec, run.out_dir, run.jobs, run.quiet, J_star)
  if not run.quiet:
    print('%d/%d trials succeeded, summary in %s' % (
      summary['success_count'], spec.trials, os.path.join(run.out_dir, spec.summary_name())))
  return EXIT_OK


def _verify(args):
  if not os.path.exists(args.solution):
    raise ConfigurationError('Solution file %s does not exist' % (args.solution))
  data = load_solution(args.solution)
  problem = get_problem(data['problem'])
  variant = data['variant']
  mu = data['mu']
  w = Iterate(data['x'], data['u'], data['s'], data.get('y'))
  tol = args.tol if args.tol is not None else max(1e-6, 2 * mu)
  ok = True

  if 'lambda' in data:
    kkt_variant = 'feasible' if variant in ('feasible', 'barrier') else 'infeasible'
    report = check_perturbed_kkt(problem, w, data['lambda'], mu, tol, kkt_variant)
    print('Perturbed KKT at mu = %.3e: %s' % (mu, report))
    ok = ok and report.passed
  else:
    print('No multipliers stored, skipping the KKT check')
    ok = False

  rng = np.random.RandomState(args.seed)
  stages = rng.randint(0, problem.N, size=args.fd_points)
  checked = [problem]
  if variant in ('barrier', 'relaxed-barrier'):
    checked.append(barrier_transform(problem, mu, relaxed=(variant == 'relaxed-barrier')))
  for p in checked:
    worst = None
    for t in stages:
      report = finite_diff_check(p, w.x[t], w.u[t], rel_tol=1e-4)
      if worst is None or report.max_error > worst.max_error:
        worst = report
    print('Derivatives of %s at %d points: %s' % (p.name, len(stages), worst))
    ok = ok and worst.passed
  return EXIT_OK if ok else EXIT_FAILURE


def run_command(argv):
  parser = build_parser()
  args = parser.parse_args(argv)
  if args.command is None:
    parser.print_usage()
    return EXIT_CONFIG
  try:
    if args.command == 'verify':
      return _verify(args)
    run = RunConfig(args)
    if args.command == 'solve':
      return _solve(run)
    return _bench(run)
  except ConfigurationError as e:
    print('Configuration error: %s' % (e))
    return EXIT_CONFIG


def main():
  sys.exit(run_command(sys.argv[1:]))


if __name__ == '__main__':
  main()
