from __future__ import print_function
from __future__ import division

import numpy as np

from ._errors import DivergenceError

# Callback table entries. Tensors carry the output index first, e.g.
# f_xx[i] is the Hessian of f_i and c_xu[j] the mixed Hessian of c_j.
_CALLBACK_NAMES = ('f', 'f_x', 'f_u', 'f_xx', 'f_uu', 'f_xu',
                   'q', 'q_x', 'q_u', 'q_xx', 'q_uu', 'q_xu',
                   'p', 'p_x', 'p_xx',
                   'c', 'c_x', 'c_u', 'c_xx', 'c_uu', 'c_xu')

_CONSTRAINT_NAMES = ('c', 'c_x', 'c_u', 'c_xx', 'c_uu', 'c_xu')

# Blocks that must be symmetric in their last two axes
_SYMMETRIC_BLOCKS = ('f_xx', 'f_uu', 'q_xx', 'q_uu', 'p_xx', 'c_xx', 'c_uu')

_EPS = np.finfo(float).eps


def _expected_shapes(n, m, l):
  return {
    'f': (n,), 'f_x': (n, n), 'f_u': (n, m),
    'f_xx': (n, n, n), 'f_uu': (n, m, m), 'f_xu': (n, n, m),
    'q': (), 'q_x': (n,), 'q_u': (m,),
    'q_xx': (n, n), 'q_uu': (m, m), 'q_xu': (n, m),
    'p': (), 'p_x': (n,), 'p_xx': (n, n),
    'c': (l,), 'c_x': (l, n), 'c_u': (l, m),
    'c_xx': (l, n, n), 'c_uu': (l, m, m), 'c_xu': (l, n, m),
  }


def _no_constraints(n, m):
  # l = 0: every constraint callback returns an empty block
  return {
    'c': lambda x, u: np.zeros((0,)),
    'c_x': lambda x, u: np.zeros((0, n)),
    'c_u': lambda x, u: np.zeros((0, m)),
    'c_xx': lambda x, u: np.zeros((0, n, n)),
    'c_uu': lambda x, u: np.zeros((0, m, m)),
    'c_xu': lambda x, u: np.zeros((0, n, m)),
  }


class OCProblem(object):
  """
  Finite-horizon optimal control problem

      min  sum_t q(x_t, u_t) + p(x_N)
      s.t. x_0 = x0, x_{t+1} = f(x_t, u_t), c(x_t, u_t) <= 0.

  Parameters
  ----------
  n, m, l: int
      State, control and constraint dimensions. l = 0 gives an unconstrained
      problem.

  N: int
      Horizon length. Stages are 0..N-1, the terminal state is x_N.

  x0: array of shape (n,)
      Initial state.

  callbacks: {str: callable}
      Callback table. Keys are the names in `_CALLBACK_NAMES`; `p`, `p_x`
      and `p_xx` take the state only, every other entry takes (x, u).
      The constraint entries may be omitted when l = 0.

  name: str
      Identifier used in trace file names and messages.

  check: bool
      Evaluate every callback at (x0, 0) and verify shapes and symmetry.

  vectorized: bool
      The (x, u) callbacks broadcast over leading stage axes: given (K, n)
      states and (K, m) controls they return the K stage values stacked.
      Trajectory-wide evaluations then take one call per entry.
  """

  def __init__(self, n, m, l, N, x0, callbacks, name=None, check=True, vectorized=False):
    if n < 1 or m < 1 or l < 0 or N < 1:
      raise ValueError('Invalid problem dimensions: n=%d, m=%d, l=%d, N=%d' % (n, m, l, N))
    self.n = int(n)
    self.m = int(m)
    self.l = int(l)
    self.N = int(N)
    self.x0 = np.asarray(x0, dtype=float).reshape(self.n)
    self.name = name if name is not None else 'problem'
    self.vectorized = bool(vectorized)

    table = dict(callbacks)
    if self.l == 0:
      for key, func in _no_constraints(self.n, self.m).items():
        table.setdefault(key, func)
    missing = [key for key in _CALLBACK_NAMES if key not in table]
    if len(missing) > 0:
      raise ValueError('Callback table is missing entries: %s' % (', '.join(missing)))
    unknown = [key for key in table if key not in _CALLBACK_NAMES]
    if len(unknown) > 0:
      raise ValueError('Unknown callback table entries: %s' % (', '.join(unknown)))
    self._callbacks = table
    self.shapes = _expected_shapes(self.n, self.m, self.l)

    if check:
      self.check_callbacks(self.x0, np.zeros(self.m))

  def callback(self, key):
    return self._callbacks[key]

  def evaluate(self, key, x, u=None):
    if key.startswith('p'):
      value = self._callbacks[key](x)
    else:
      value = self._callbacks[key](x, u)
    return np.asarray(value, dtype=float)

  def evaluate_stages(self, key, x_seq, u_seq):
    """Stage entry `key` at every row of (x_seq, u_seq), stacked stage-major."""
    K = len(u_seq)
    shape = (K,) + self.shapes[key]
    if self.vectorized:
      value = np.asarray(self._callbacks[key](x_seq, u_seq), dtype=float)
      if value.shape != shape:
        value = np.array(np.broadcast_to(value, shape))
      return value
    return np.array([self.evaluate(key, x_seq[t], u_seq[t]) for t in range(K)]).reshape(shape)

  def check_callbacks(self, x, u):
    """Evaluate every table entry at (x, u) and verify shape and symmetry."""
    for key in _CALLBACK_NAMES:
      value = self.evaluate(key, x, u)
      expected = self.shapes[key]
      if value.shape != expected:
        raise ValueError('Callback %s of problem %s returned shape %s, expected %s' % (
          key, self.name, str(value.shape), str(expected)))
      if key in _SYMMETRIC_BLOCKS and value.size > 0:
        asym = np.amax(np.abs(value - np.swapaxes(value, -1, -2)))
        if asym > 1e-8 * max(1.0, np.amax(np.abs(value))):
          raise ValueError('Callback %s of problem %s is not symmetric (max asymmetry %g)' % (
            key, self.name, asym))
      if self.vectorized and not key.startswith('p'):
        self._check_stacked(key, x, u, value)

  def _check_stacked(self, key, x, u, value):
    # a two-stage stack must reproduce the single-stage value in both rows
    stacked = np.asarray(self._callbacks[key](np.stack([x, x]), np.stack([u, u])), dtype=float)
    expected = (2,) + self.shapes[key]
    try:
      stacked = np.broadcast_to(stacked, expected)
    except ValueError:
      raise ValueError('Vectorized callback %s of problem %s returned shape %s, expected %s' % (
        key, self.name, str(stacked.shape), str(expected)))
    if not np.allclose(stacked, value, rtol=1e-12, atol=1e-12):
      raise ValueError('Vectorized callback %s of problem %s disagrees with its single-stage value' % (
        key, self.name))

  def dynamics(self, x, u):
    return np.asarray(self._callbacks['f'](x, u), dtype=float)

  def stage_cost(self, x, u):
    return float(self._callbacks['q'](x, u))

  def terminal_cost(self, x):
    return float(self._callbacks['p'](x))

  def constraints(self, x, u):
    return np.asarray(self._callbacks['c'](x, u), dtype=float).reshape(self.l)

  def evaluate_derivatives(self, x_seq, u_seq, second_order=True):
    return TrajectoryDerivatives(self, x_seq, u_seq, second_order)


class TrajectoryDerivatives(object):
  """
  Stage-major stack of every derivative along a trajectory.
  Computed once per iterate and shared by all backward sweeps on it.
  """

  def __init__(self, problem, x_seq, u_seq, second_order=True):
    N = problem.N
    ev = problem.evaluate
    self.second_order = second_order
    x_stages = x_seq[:N]

    def stack(key):
      return problem.evaluate_stages(key, x_stages, u_seq)

    self.f_x = stack('f_x')
    self.f_u = stack('f_u')
    if second_order:
      self.f_xx = stack('f_xx')
      self.f_uu = stack('f_uu')
      self.f_xu = stack('f_xu')
    else:
      self.f_xx = self.f_uu = self.f_xu = None

    self.q_x = stack('q_x')
    self.q_u = stack('q_u')
    self.q_xx = stack('q_xx')
    self.q_uu = stack('q_uu')
    self.q_xu = stack('q_xu')

    self.c = stack('c')
    self.c_x = stack('c_x')
    self.c_u = stack('c_u')
    self.c_xx = stack('c_xx')
    self.c_uu = stack('c_uu')
    self.c_xu = stack('c_xu')

    self.p_x = ev('p_x', x_seq[N])
    self.p_xx = ev('p_xx', x_seq[N])


class Iterate(object):
  """
  Primal-dual tuple w = (x, u, s[, y]).

  x: (N+1, n) states, u: (N, m) controls, s: (N, l) duals,
  y: (N, l) slacks, present for the infeasible variant only.
  """

  def __init__(self, x, u, s, y=None):
    self.x = np.asarray(x, dtype=float)
    self.u = np.asarray(u, dtype=float)
    self.s = np.asarray(s, dtype=float)
    self.y = None if y is None else np.asarray(y, dtype=float)

  @property
  def variant(self):
    return 'feasible' if self.y is None else 'infeasible'

  def copy(self):
    return Iterate(self.x.copy(), self.u.copy(), self.s.copy(),
                   None if self.y is None else self.y.copy())


class Multipliers(object):
  """Costates lambda_0..lambda_N of the dynamics constraints."""

  def __init__(self, lambdas):
    self.lambdas = np.asarray(lambdas, dtype=float)
    if not np.all(np.isfinite(self.lambdas)):
      raise ValueError('Multipliers contain non-finite entries')

  def __len__(self):
    return self.lambdas.shape[0]

  def __getitem__(self, t):
    return self.lambdas[t]


def _as_controls(problem, u_seq):
  u_seq = np.asarray(u_seq, dtype=float)
  if u_seq.size != problem.N * problem.m:
    raise ValueError('Control sequence has %d entries, expected N*m = %d' % (
      u_seq.size, problem.N * problem.m))
  return u_seq.reshape(problem.N, problem.m)


def rollout(problem, u_seq):
  """Simulate x_{t+1} = f(x_t, u_t) from problem.x0. Returns (N+1, n) states."""
  u_seq = _as_controls(problem, u_seq)
  x = np.zeros((problem.N + 1, problem.n))
  x[0] = problem.x0
  with np.errstate(all='ignore'):
    for t in range(problem.N):
      x[t + 1] = problem.dynamics(x[t], u_seq[t])
      if not np.all(np.isfinite(x[t + 1])):
        raise DivergenceError(t + 1)
  return x


def objective(problem, x_seq, u_seq):
  N = problem.N
  J = float(np.sum(problem.evaluate_stages('q', x_seq[:N], u_seq)))
  return J + problem.terminal_cost(x_seq[N])


def constraint_values(problem, x_seq, u_seq):
  if problem.l == 0:
    return np.zeros((problem.N, 0))
  return np.array(problem.evaluate_stages('c', x_seq[:problem.N], u_seq))


class FeasibilityReport(object):
  def __init__(self, passed, margin, stage_ok):
    self.passed = passed
    self.margin = margin
    self.stage_ok = stage_ok

  def __repr__(self):
    return 'FeasibilityReport(passed=%s, margin=%g)' % (self.passed, self.margin)


def check_strict_feasibility(problem, w, variant=None):
  """
  Strict feasibility of an iterate. The feasible variant needs c < 0 and
  s > 0 at every stage, the infeasible variant needs s > 0 and y > 0.
  The margin is the smallest of those quantities over the horizon.
  """
  if variant is None:
    variant = w.variant
  if problem.l == 0:
    return FeasibilityReport(True, np.inf, np.ones(problem.N, dtype=bool))

  if variant == 'feasible':
    c = constraint_values(problem, w.x, w.u)
    stage_margin = np.minimum(np.amin(-c, axis=1), np.amin(w.s, axis=1))
  elif variant == 'infeasible':
    if w.y is None:
      raise ValueError('Infeasible variant needs slack variables y')
    stage_margin = np.minimum(np.amin(w.s, axis=1), np.amin(w.y, axis=1))
  else:
    raise ValueError('Unknown variant %s' % (variant))

  stage_ok = stage_margin > 0
  return FeasibilityReport(bool(np.all(stage_ok)), float(np.amin(stage_margin)), stage_ok)


def _fd_step(z, power):
  return _EPS ** power * (1.0 + np.abs(z))


def _central_difference(fun, z, power=1.0 / 3.0):
  """Derivative of fun at z by central differences, output axes first."""
  z = np.asarray(z, dtype=float)
  h = _fd_step(z, power)
  columns = []
  for j in range(z.size):
    zp = z.copy()
    zm = z.copy()
    zp[j] += h[j]
    zm[j] -= h[j]
    columns.append((np.asarray(fun(zp), dtype=float) - np.asarray(fun(zm), dtype=float)) / (2 * h[j]))
  return np.stack(columns, axis=-1)


def numerical_derivatives(f, q, p, c=None, n=None, m=None, l=0):
  """
  Callback table filled in by central differences of the base functions.
  Meant for prototyping; second derivatives use nested differences and are
  accurate to roughly 1e-7.
  """
  power = 0.25

  def d_x(g):
    return lambda x, u: _central_difference(lambda xx: g(xx, u), x, power)

  def d_u(g):
    return lambda x, u: _central_difference(lambda uu: g(x, uu), u, power)

  table = {
    'f': f, 'f_x': d_x(f), 'f_u': d_u(f),
    'f_xx': d_x(d_x(f)), 'f_uu': d_u(d_u(f)), 'f_xu': d_u(d_x(f)),
    'q': q, 'q_x': d_x(q), 'q_u': d_u(q),
    'q_xx': d_x(d_x(q)), 'q_uu': d_u(d_u(q)), 'q_xu': d_u(d_x(q)),
    'p': p,
    'p_x': lambda x: _central_difference(p, x, power),
    'p_xx': lambda x: _central_difference(lambda xx: _central_difference(p, xx, power), x, power),
  }
  if l > 0:
    if c is None:
      raise ValueError('Constraint function is required when l > 0')
    table.update({
      'c': c, 'c_x': d_x(c), 'c_u': d_u(c),
      'c_xx': d_x(d_x(c)), 'c_uu': d_u(d_u(c)), 'c_xu': d_u(d_x(c)),
    })
  return _symmetrized(table)


def _symmetrized(table):
  # nested differences leave O(1e-8) asymmetry in Hessian blocks
  def sym(func, terminal=False):
    if terminal:
      return lambda x: _sym(func(x))
    return lambda x, u: _sym(func(x, u))

  out = dict(table)
  for key in _SYMMETRIC_BLOCKS:
    if key in out:
      out[key] = sym(out[key], terminal=key.startswith('p'))
  return out


def _sym(a):
  a = np.asarray(a, dtype=float)
  return 0.5 * (a + np.swapaxes(a, -1, -2))


class DerivativeReport(object):
  def __init__(self, passed, max_error, block, index, errors):
    self.passed = passed
    self.max_error = max_error
    self.block = block
    self.index = index
    self.errors = errors # block name --> max relative error

  def __repr__(self):
    if self.passed:
      return 'DerivativeReport(passed, max_error=%g)' % (self.max_error)
    return 'DerivativeReport(failed: block %s, index %s, error %g)' % (
      self.block, str(self.index), self.max_error)


def _max_relative_error(analytic, numeric):
  analytic = np.asarray(analytic, dtype=float)
  numeric = np.asarray(numeric, dtype=float)
  if analytic.size == 0:
    return 0.0, ()
  den = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
  err = np.abs(analytic - numeric) / den
  index = np.unravel_index(np.argmax(err), err.shape)
  return float(err[index]), tuple(int(i) for i in index)


def finite_diff_check(problem, x, u, rel_tol=1e-6):
  """
  Compare every analytic derivative in the callback table against central
  differences at (x, u). Second derivatives are differenced from the
  analytic first derivatives.
  """
  x = np.asarray(x, dtype=float).reshape(problem.n)
  u = np.asarray(u, dtype=float).reshape(problem.m)
  ev = problem.evaluate

  def by_x(key):
    return _central_difference(lambda xx: ev(key, xx, u), x)

  def by_u(key):
    return _central_difference(lambda uu: ev(key, x, uu), u)

  numeric = {
    'f_x': by_x('f'), 'f_u': by_u('f'),
    'f_xx': by_x('f_x'), 'f_uu': by_u('f_u'), 'f_xu': by_u('f_x'),
    'q_x': by_x('q'), 'q_u': by_u('q'),
    'q_xx': by_x('q_x'), 'q_uu': by_u('q_u'), 'q_xu': by_u('q_x'),
    'p_x': _central_difference(lambda xx: ev('p', xx), x),
    'p_xx': _central_difference(lambda xx: ev('p_x', xx), x),
  }
  if problem.l > 0:
    numeric.update({
      'c_x': by_x('c'), 'c_u': by_u('c'),
      'c_xx': by_x('c_x'), 'c_uu': by_u('c_u'), 'c_xu': by_u('c_x'),
    })

  errors = {}
  worst = (0.0, None, ())
  for key in sorted(numeric):
    err, index = _max_relative_error(ev(key, x, u), numeric[key])
    errors[key] = err
    if err > worst[0] or worst[1] is None:
      worst = (err, key, index)
  max_error, block, index = worst
  return DerivativeReport(max_error <= rel_tol, max_error, block, index, errors)
