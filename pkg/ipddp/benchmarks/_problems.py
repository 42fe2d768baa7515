from __future__ import print_function
from __future__ import division

import numpy as np

from .._errors import ConfigurationError
from .._problem import OCProblem

# Stage callbacks below take x[..., :] and u[..., :] and broadcast over any
# leading stage axes; terminal callbacks take a single state.


def _zeros(x, *shape):
  return np.zeros(np.shape(x)[:-1] + shape)


def _tiled(x, block):
  """`block` repeated over the leading stage axes of x, writable."""
  block = np.asarray(block, dtype=float)
  return np.array(np.broadcast_to(block, np.shape(x)[:-1] + block.shape))


def _input_box(n, m, bound):
  """Callbacks for -bound <= u <= bound written as c = (u - bound, -u - bound)."""
  bound = np.broadcast_to(np.asarray(bound, dtype=float), (m,))
  # rows u_i - b_i, -u_i - b_i per input
  sign = np.kron(np.eye(m), [[1.0], [-1.0]])
  offset = np.repeat(bound, 2)
  return {
    'c': lambda x, u: u.dot(sign.T) - offset,
    'c_x': lambda x, u: _zeros(x, 2 * m, n),
    'c_u': lambda x, u: _tiled(x, sign),
    'c_xx': lambda x, u: _zeros(x, 2 * m, n, n),
    'c_uu': lambda x, u: _zeros(x, 2 * m, m, m),
    'c_xu': lambda x, u: _zeros(x, 2 * m, n, m),
  }


def build_pendulum(N=500, h=0.05, u_max=0.25):
  """Control-limited inverted pendulum, x = (phi, omega), started hanging down."""
  n, m, l = 2, 1, 2

  def f(x, u):
    return np.stack([x[..., 0] + h * x[..., 1],
                     x[..., 1] + h * np.sin(x[..., 0]) + h * u[..., 0]], axis=-1)

  def f_x(x, u):
    out = _tiled(x, [[1.0, h], [0.0, 1.0]])
    out[..., 1, 0] = h * np.cos(x[..., 0])
    return out

  def f_xx(x, u):
    out = _zeros(x, n, n, n)
    out[..., 1, 0, 0] = -h * np.sin(x[..., 0])
    return out

  callbacks = {
    'f': f, 'f_x': f_x,
    'f_u': lambda x, u: _tiled(x, [[0.0], [h]]),
    'f_xx': f_xx,
    'f_uu': lambda x, u: _zeros(x, n, m, m),
    'f_xu': lambda x, u: _zeros(x, n, n, m),
    'q': lambda x, u: 0.025 * (np.sum(x * x, axis=-1) + np.sum(u * u, axis=-1)),
    'q_x': lambda x, u: 0.05 * x,
    'q_u': lambda x, u: 0.05 * u,
    'q_xx': lambda x, u: _tiled(x, 0.05 * np.eye(n)),
    'q_uu': lambda x, u: _tiled(x, 0.05 * np.eye(m)),
    'q_xu': lambda x, u: _zeros(x, n, m),
    'p': lambda x: 5.0 * x.dot(x),
    'p_x': lambda x: 10.0 * x,
    'p_xx': lambda x: 10.0 * np.eye(n),
  }
  callbacks.update(_input_box(n, m, u_max))
  return OCProblem(n, m, l, N, [-np.pi, 0.0], callbacks, name='pendulum', vectorized=True)


def smooth_abs(y, z):
  """H(y, z) = sqrt(y^2 + z^2) - z with its first and second derivative in y."""
  root = np.sqrt(y * y + z * z)
  return root - z, y / root, z * z / root ** 3


def _car_steering_terms(v, w, h, d):
  """
  Displacement b and heading change theta of one step with speed v and
  steering angle w, each with its gradient and Hessian in (v, w) on the
  trailing axes.
  """
  # P = h v sin w drives both the displacement b and the heading change asin(P/d)
  P = h * v * np.sin(w)
  P_v, P_w = h * np.sin(w), h * v * np.cos(w)
  P_vv, P_ww, P_vw = np.zeros_like(P), -P, h * np.cos(w)
  S = np.sqrt(d * d - P * P)

  def S_1(P_a):
    return -P * P_a / S

  def S_2(P_a, P_b, P_ab):
    return -(P_a * P_b + P * P_ab) / S - P * P * P_a * P_b / S ** 3

  def th_2(P_a, P_b, P_ab):
    return P_ab / S + P * P_a * P_b / S ** 3

  def sym(aa, ab, bb):
    return np.stack([np.stack([aa, ab], axis=-1), np.stack([ab, bb], axis=-1)], axis=-2)

  b = d + h * v * np.cos(w) - S
  db = np.stack([h * np.cos(w) - S_1(P_v), -h * v * np.sin(w) - S_1(P_w)], axis=-1)
  ddb = sym(-S_2(P_v, P_v, P_vv),
            -h * np.sin(w) - S_2(P_v, P_w, P_vw),
            -h * v * np.cos(w) - S_2(P_w, P_w, P_ww))
  theta = np.arcsin(P / d)
  dth = np.stack([P_v / S, P_w / S], axis=-1)
  ddth = sym(th_2(P_v, P_v, P_vv), th_2(P_v, P_w, P_vw), th_2(P_w, P_w, P_ww))
  return b, db, ddb, theta, dth, ddth


def build_car_parking(N=500, h=0.03, d=2.0, x0=None):
  """
  Car parking with x = (r_x, r_y, phi, v), u = (w, a): steering angle and
  acceleration, bounded by |w| <= 0.5 and |a| <= 2.
  """
  n, m, l = 4, 2, 4
  if x0 is None:
    x0 = [1.0, 1.0, 1.5 * np.pi, 0.0]
  # (v, w) positions inside x and u
  V, W = 3, 0

  def steering(x, u):
    return _car_steering_terms(x[..., V], u[..., W], h, d)

  def f(x, u):
    b, _, _, theta, _, _ = steering(x, u)
    return np.stack([x[..., 0] + b * np.cos(x[..., 2]),
                     x[..., 1] + b * np.sin(x[..., 2]),
                     x[..., 2] + theta,
                     x[..., 3] + h * u[..., 1]], axis=-1)

  def jacobians(x, u):
    b, db, _, _, dth, _ = steering(x, u)
    cphi, sphi = np.cos(x[..., 2]), np.sin(x[..., 2])
    fx = _tiled(x, np.eye(n))
    fx[..., 0, 2] = -b * sphi
    fx[..., 0, V] = db[..., 0] * cphi
    fx[..., 1, 2] = b * cphi
    fx[..., 1, V] = db[..., 0] * sphi
    fx[..., 2, V] = dth[..., 0]
    fu = _zeros(x, n, m)
    fu[..., 0, W] = db[..., 1] * cphi
    fu[..., 1, W] = db[..., 1] * sphi
    fu[..., 2, W] = dth[..., 1]
    fu[..., 3, 1] = h
    return fx, fu

  def hessians(x, u):
    b, db, ddb, _, _, ddth = steering(x, u)
    cphi, sphi = np.cos(x[..., 2]), np.sin(x[..., 2])
    fxx = _zeros(x, n, n, n)
    fuu = _zeros(x, n, m, m)
    fxu = _zeros(x, n, n, m)
    # r_x row
    fxx[..., 0, 2, 2] = -b * cphi
    fxx[..., 0, 2, V] = fxx[..., 0, V, 2] = -db[..., 0] * sphi
    fxx[..., 0, V, V] = ddb[..., 0, 0] * cphi
    fuu[..., 0, W, W] = ddb[..., 1, 1] * cphi
    fxu[..., 0, 2, W] = -db[..., 1] * sphi
    fxu[..., 0, V, W] = ddb[..., 0, 1] * cphi
    # r_y row
    fxx[..., 1, 2, 2] = -b * sphi
    fxx[..., 1, 2, V] = fxx[..., 1, V, 2] = db[..., 0] * cphi
    fxx[..., 1, V, V] = ddb[..., 0, 0] * sphi
    fuu[..., 1, W, W] = ddb[..., 1, 1] * sphi
    fxu[..., 1, 2, W] = db[..., 1] * cphi
    fxu[..., 1, V, W] = ddb[..., 0, 1] * sphi
    # heading row
    fxx[..., 2, V, V] = ddth[..., 0, 0]
    fuu[..., 2, W, W] = ddth[..., 1, 1]
    fxu[..., 2, V, W] = ddth[..., 0, 1]
    return fxx, fuu, fxu

  def q(x, u):
    return 0.01 * (smooth_abs(x[..., 0], 0.1)[0] + smooth_abs(x[..., 1], 0.1)[0]
                   + u[..., 0] ** 2 + 0.01 * u[..., 1] ** 2)

  def q_x(x, u):
    out = _zeros(x, n)
    out[..., 0] = 0.01 * smooth_abs(x[..., 0], 0.1)[1]
    out[..., 1] = 0.01 * smooth_abs(x[..., 1], 0.1)[1]
    return out

  def q_xx(x, u):
    out = _zeros(x, n, n)
    out[..., 0, 0] = 0.01 * smooth_abs(x[..., 0], 0.1)[2]
    out[..., 1, 1] = 0.01 * smooth_abs(x[..., 1], 0.1)[2]
    return out

  terminal_z = (0.1, 0.1, 0.01, 0.1)

  def p(x):
    return sum(smooth_abs(x[i], terminal_z[i])[0] for i in range(n))

  def p_x(x):
    return np.array([smooth_abs(x[i], terminal_z[i])[1] for i in range(n)])

  def p_xx(x):
    return np.diag([smooth_abs(x[i], terminal_z[i])[2] for i in range(n)])

  callbacks = {
    'f': f,
    'f_x': lambda x, u: jacobians(x, u)[0],
    'f_u': lambda x, u: jacobians(x, u)[1],
    'f_xx': lambda x, u: hessians(x, u)[0],
    'f_uu': lambda x, u: hessians(x, u)[1],
    'f_xu': lambda x, u: hessians(x, u)[2],
    'q': q, 'q_x': q_x,
    'q_u': lambda x, u: u * np.array([0.02, 0.0002]),
    'q_xx': q_xx,
    'q_uu': lambda x, u: _tiled(x, np.diag([0.02, 0.0002])),
    'q_xu': lambda x, u: _zeros(x, n, m),
    'p': p, 'p_x': p_x, 'p_xx': p_xx,
  }
  callbacks.update(_input_box(n, m, [0.5, 2.0]))
  return OCProblem(n, m, l, N, x0, callbacks, name='car', vectorized=True)


# (center x, center y, radius)
UNICYCLE_OBSTACLES = ((-5.5, -1.0, 1.0), (-8.0, 0.2, 0.5), (-2.5, 1.0, 1.5))


def build_unicycle(N=600, h=0.1, v=1.5, obstacles=UNICYCLE_OBSTACLES):
  """
  Unicycle at constant speed steered through three circular obstacles.
  Obstacles use the squared form R^2 - |r - o|^2 <= 0.
  """
  n, m = 3, 1
  l = 4 + len(obstacles)
  centers = np.array([[o[0], o[1]] for o in obstacles])
  radii = np.array([o[2] for o in obstacles])

  def f(x, u):
    return np.stack([x[..., 0] + h * v * np.cos(x[..., 2]),
                     x[..., 1] + h * v * np.sin(x[..., 2]),
                     x[..., 2] + h * u[..., 0]], axis=-1)

  def f_x(x, u):
    out = _tiled(x, np.eye(n))
    out[..., 0, 2] = -h * v * np.sin(x[..., 2])
    out[..., 1, 2] = h * v * np.cos(x[..., 2])
    return out

  def f_xx(x, u):
    out = _zeros(x, n, n, n)
    out[..., 0, 2, 2] = -h * v * np.cos(x[..., 2])
    out[..., 1, 2, 2] = -h * v * np.sin(x[..., 2])
    return out

  def offsets(x):
    return x[..., None, :2] - centers

  def c(x, u):
    box = np.stack([u[..., 0] - 1.5, -u[..., 0] - 1.5, x[..., 1] - 1.0, -x[..., 1] - 1.0], axis=-1)
    return np.concatenate([box, radii ** 2 - np.sum(offsets(x) ** 2, axis=-1)], axis=-1)

  def c_x(x, u):
    out = _zeros(x, l, n)
    out[..., 2, 1] = 1.0
    out[..., 3, 1] = -1.0
    out[..., 4:, :2] = -2.0 * offsets(x)
    return out

  def c_u(x, u):
    out = _zeros(x, l, m)
    out[..., 0, 0] = 1.0
    out[..., 1, 0] = -1.0
    return out

  def c_xx(x, u):
    out = _zeros(x, l, n, n)
    out[..., 4:, 0, 0] = -2.0
    out[..., 4:, 1, 1] = -2.0
    return out

  callbacks = {
    'f': f, 'f_x': f_x,
    'f_u': lambda x, u: _tiled(x, [[0.0], [0.0], [h]]),
    'f_xx': f_xx,
    'f_uu': lambda x, u: _zeros(x, n, m, m),
    'f_xu': lambda x, u: _zeros(x, n, n, m),
    'q': lambda x, u: 0.1 * (np.sum(x * x, axis=-1) + 0.1 * np.sum(u * u, axis=-1)),
    'q_x': lambda x, u: 0.2 * x,
    'q_u': lambda x, u: 0.02 * u,
    'q_xx': lambda x, u: _tiled(x, 0.2 * np.eye(n)),
    'q_uu': lambda x, u: _tiled(x, 0.02 * np.eye(m)),
    'q_xu': lambda x, u: _zeros(x, n, m),
    'p': lambda x: 0.1 * x.dot(x),
    'p_x': lambda x: 0.2 * x,
    'p_xx': lambda x: 0.2 * np.eye(n),
    'c': c, 'c_x': c_x, 'c_u': c_u, 'c_xx': c_xx,
    'c_uu': lambda x, u: _zeros(x, l, m, m),
    'c_xu': lambda x, u: _zeros(x, l, n, m),
  }
  return OCProblem(n, m, l, N, [-10.0, 0.0, 0.0], callbacks, name='unicycle', vectorized=True)


def build_linear_quadratic(A, B, Q, R, P, x0, N, u_bound=None, name='lq'):
  """
  x_{t+1} = A x + B u with cost 1/2 (x'Qx + u'Ru) per stage and 1/2 x'Px at
  the end. `u_bound` adds the box |u| <= u_bound (l = 2m).
  """
  A, B, Q, R, P = [np.atleast_2d(np.asarray(a, dtype=float)) for a in (A, B, Q, R, P)]
  n, m = B.shape
  callbacks = {
    'f': lambda x, u: x.dot(A.T) + u.dot(B.T),
    'f_x': lambda x, u: _tiled(x, A),
    'f_u': lambda x, u: _tiled(x, B),
    'f_xx': lambda x, u: _zeros(x, n, n, n),
    'f_uu': lambda x, u: _zeros(x, n, m, m),
    'f_xu': lambda x, u: _zeros(x, n, n, m),
    'q': lambda x, u: 0.5 * (np.sum(x.dot(Q.T) * x, axis=-1) + np.sum(u.dot(R.T) * u, axis=-1)),
    'q_x': lambda x, u: x.dot(Q.T),
    'q_u': lambda x, u: u.dot(R.T),
    'q_xx': lambda x, u: _tiled(x, Q),
    'q_uu': lambda x, u: _tiled(x, R),
    'q_xu': lambda x, u: _zeros(x, n, m),
    'p': lambda x: 0.5 * x.dot(P).dot(x),
    'p_x': lambda x: P.dot(x),
    'p_xx': lambda x: P.copy(),
  }
  l = 0
  if u_bound is not None:
    callbacks.update(_input_box(n, m, u_bound))
    l = 2 * m
  return OCProblem(n, m, l, N, x0, callbacks, name=name, vectorized=True)


_PROBLEM_REGISTRY = {
  'pendulum': build_pendulum,
  'car': build_car_parking,
  'unicycle': build_unicycle,
}

# Per-problem defaults: initial mu policy, initial control range and
# solver options applied before any user configuration
PROBLEM_DEFAULTS = {
  'pendulum': {'mu_init_policy': 'auto', 'control_range': (-0.01, 0.01), 'solver': {}},
  'car': {'mu_init_policy': 'auto', 'control_range': (-0.01, 0.01), 'solver': {}},
  'unicycle': {'mu_init_policy': (0.5, 1.0), 'control_range': (-0.01, 0.01),
               'solver': {'curvature_fallback': True}},
}


def default_solver_options(problem_id):
  """SolverConfig keyword arguments a benchmark starts from."""
  defaults = PROBLEM_DEFAULTS[problem_id]
  options = {'mu_init_policy': defaults['mu_init_policy']}
  options.update(defaults['solver'])
  return options


def problem_ids():
  return sorted(_PROBLEM_REGISTRY)


def get_problem(problem_id, **kwargs):
  """Build a registered benchmark problem."""
  if problem_id in _PROBLEM_REGISTRY:
    return _PROBLEM_REGISTRY[problem_id](**kwargs)
  raise ConfigurationError('Unknown problem %s (available: %s)' % (
    problem_id, ', '.join(problem_ids())))
