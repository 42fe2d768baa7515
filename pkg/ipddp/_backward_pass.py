from __future__ import print_function
from __future__ import division

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ._errors import DivergenceError, NotPositiveDefinite

_STAGE_KEYS = ('f_x', 'f_u', 'f_xx', 'f_uu', 'f_xu',
               'q_x', 'q_u', 'q_xx', 'q_uu', 'q_xu',
               'c', 'c_x', 'c_u', 'c_xx', 'c_uu', 'c_xu')

_CURVATURE_MODELS = ('exact', 'gauss_newton')


class _StageData(object):
  def __init__(self, **blocks):
    for key, value in blocks.items():
      setattr(self, key, value)


def _stage_from_problem(problem, x_t, u_t, second_order=True):
  blocks = {}
  for key in _STAGE_KEYS:
    if not second_order and key.startswith('f_') and len(key) == 4:
      blocks[key] = None
    else:
      blocks[key] = problem.evaluate(key, x_t, u_t)
  return _StageData(**blocks)


def _stage_from_cache(deriv, t):
  blocks = {}
  for key in _STAGE_KEYS:
    value = getattr(deriv, key)
    blocks[key] = None if value is None else value[t]
  return _StageData(**blocks)


class QExpansion(object):
  """Quadratic model of the stage Lagrangian plus the next value function."""

  def __init__(self, Q_x, Q_u, Q_s, Q_xx, Q_uu, Q_xu, Q_sx, Q_su):
    self.Q_x = Q_x
    self.Q_u = Q_u
    self.Q_s = Q_s
    self.Q_xx = Q_xx
    self.Q_uu = Q_uu
    self.Q_xu = Q_xu
    self.Q_sx = Q_sx
    self.Q_su = Q_su

  @property
  def Q_ux(self):
    return self.Q_xu.T


class StageGains(object):
  """
  Affine policies of one stage: du = alpha + beta dx, ds = eta + theta dx
  and, for the infeasible variant, dy = chi + zeta dx.
  """

  def __init__(self, alpha, beta, eta, theta, chi=None, zeta=None):
    self.alpha = alpha
    self.beta = beta
    self.eta = eta
    self.theta = theta
    self.chi = chi
    self.zeta = zeta


class ValueCoeffs(object):
  def __init__(self, V_x, V_xx):
    self.V_x = V_x
    self.V_xx = V_xx


class CondensedCoeffs(object):
  """
  Coefficients left after eliminating the dual (and slack) directions.
  Qhat_uu includes the regularization it was factorized with.
  """

  def __init__(self, Qhat_x, Qhat_u, Qhat_xx, Qhat_xu, Qhat_uu,
               r=None, rp=None, rd=None, rhat=None):
    self.Qhat_x = Qhat_x
    self.Qhat_u = Qhat_u
    self.Qhat_xx = Qhat_xx
    self.Qhat_xu = Qhat_xu
    self.Qhat_uu = Qhat_uu
    self.r = r
    self.rp = rp
    self.rd = rd
    self.rhat = rhat

  @property
  def Qhat_ux(self):
    return self.Qhat_xu.T


def _expand(d, s_t, V_x, V_xx, second_order=True, stage=0, constraint_curvature=True):
  # l = q + s'c folded into the cost derivatives
  l_x = d.q_x + d.c_x.T.dot(s_t)
  l_u = d.q_u + d.c_u.T.dot(s_t)
  l_xx, l_uu, l_xu = d.q_xx, d.q_uu, d.q_xu
  if constraint_curvature:
    l_xx = l_xx + np.tensordot(s_t, d.c_xx, axes=1)
    l_uu = l_uu + np.tensordot(s_t, d.c_uu, axes=1)
    l_xu = l_xu + np.tensordot(s_t, d.c_xu, axes=1)

  Q_x = l_x + d.f_x.T.dot(V_x)
  Q_u = l_u + d.f_u.T.dot(V_x)
  Q_xx = l_xx + d.f_x.T.dot(V_xx).dot(d.f_x)
  Q_uu = l_uu + d.f_u.T.dot(V_xx).dot(d.f_u)
  Q_xu = l_xu + d.f_x.T.dot(V_xx).dot(d.f_u)
  if second_order:
    Q_xx = Q_xx + np.tensordot(V_x, d.f_xx, axes=1)
    Q_uu = Q_uu + np.tensordot(V_x, d.f_uu, axes=1)
    Q_xu = Q_xu + np.tensordot(V_x, d.f_xu, axes=1)

  Q_xx = 0.5 * (Q_xx + Q_xx.T)
  Q_uu = 0.5 * (Q_uu + Q_uu.T)
  for block in (Q_x, Q_u, Q_xx, Q_uu, Q_xu):
    if not np.all(np.isfinite(block)):
      raise DivergenceError(stage, 'Non-finite Q expansion at stage %d' % (stage))
  return QExpansion(Q_x, Q_u, d.c, Q_xx, Q_uu, Q_xu, d.c_x, d.c_u)


def stage_expansion(problem, x_t, u_t, s_t, V_next, second_order=True):
  """Second-order expansion of l(x, u, s) + V_next(f(x, u)) at (x_t, u_t, s_t)."""
  V_x = np.asarray(V_next.V_x, dtype=float)
  V_xx = np.asarray(V_next.V_xx, dtype=float)
  if V_x.shape != (problem.n,) or V_xx.shape != (problem.n, problem.n):
    raise ValueError('Value coefficients have shapes %s, %s, expected (%d,), (%d, %d)' % (
      str(V_x.shape), str(V_xx.shape), problem.n, problem.n, problem.n))
  if not (np.all(np.isfinite(V_x)) and np.all(np.isfinite(V_xx))):
    raise ValueError('Value coefficients contain non-finite entries')
  s_t = np.asarray(s_t, dtype=float).reshape(problem.l)
  d = _stage_from_problem(problem, x_t, u_t, second_order)
  return _expand(d, s_t, V_x, V_xx, second_order)


def _solve_condensed(Qhat_uu, Qhat_u, Qhat_ux, stage, gamma_reg, residual):
  rhs = np.column_stack([Qhat_u, Qhat_ux])
  if residual:
    # residual-grade sweep: no definiteness requirement
    try:
      sol = np.linalg.solve(Qhat_uu, rhs)
    except np.linalg.LinAlgError:
      sol = np.linalg.lstsq(Qhat_uu, rhs, rcond=None)[0]
  else:
    try:
      factor = cho_factor(Qhat_uu, lower=True)
    except (LinAlgError, ValueError):
      raise NotPositiveDefinite(stage, gamma_reg)
    sol = cho_solve(factor, rhs)
  return -sol[:, 0], -sol[:, 1:]


def solve_stage_feasible(Qe, s_t, c_t, mu, gamma_reg=0.0, stage=0, residual=False):
  """
  Condensed solve of the stage system with C = diag(c) < 0 and S = diag(s) > 0.
  Returns (StageGains, CondensedCoeffs).
  """
  s_t = np.asarray(s_t, dtype=float)
  c_t = np.asarray(c_t, dtype=float)
  m = Qe.Q_u.shape[0]

  r = s_t * c_t + mu
  cinv = 1.0 / c_t
  SCinv = s_t * cinv
  Q_su = Qe.Q_su
  Q_sx = Qe.Q_sx

  Qhat_uu = Qe.Q_uu + gamma_reg * np.eye(m) - Q_su.T.dot(SCinv[:, None] * Q_su)
  Qhat_uu = 0.5 * (Qhat_uu + Qhat_uu.T)
  Qhat_u = Qe.Q_u - Q_su.T.dot(cinv * r)
  Qhat_ux = Qe.Q_ux - Q_su.T.dot(SCinv[:, None] * Q_sx)
  Qhat_x = Qe.Q_x - Q_sx.T.dot(cinv * r)
  Qhat_xx = Qe.Q_xx - Q_sx.T.dot(SCinv[:, None] * Q_sx)

  alpha, beta = _solve_condensed(Qhat_uu, Qhat_u, Qhat_ux, stage, gamma_reg, residual)
  eta = -cinv * (r + s_t * Q_su.dot(alpha))
  theta = -SCinv[:, None] * (Q_sx + Q_su.dot(beta))

  gains = StageGains(alpha, beta, eta, theta)
  coeffs = CondensedCoeffs(Qhat_x, Qhat_u, Qhat_xx, Qhat_ux.T, Qhat_uu, r=r)
  return gains, coeffs


def solve_stage_infeasible(Qe, s_t, y_t, c_t, mu, gamma_reg=0.0, stage=0, residual=False):
  """
  Condensed solve of the slack-augmented stage system (c + y = 0, S y = mu),
  with s > 0 and y > 0. The slack direction is eliminated first, then the
  dual direction.
  """
  s_t = np.asarray(s_t, dtype=float)
  y_t = np.asarray(y_t, dtype=float)
  c_t = np.asarray(c_t, dtype=float)
  m = Qe.Q_u.shape[0]

  rp = c_t + y_t
  rd = s_t * y_t - mu
  rhat = s_t * rp - rd
  yinv = 1.0 / y_t
  SYinv = s_t * yinv
  Q_su = Qe.Q_su
  Q_sx = Qe.Q_sx

  Qhat_uu = Qe.Q_uu + gamma_reg * np.eye(m) + Q_su.T.dot(SYinv[:, None] * Q_su)
  Qhat_uu = 0.5 * (Qhat_uu + Qhat_uu.T)
  Qhat_u = Qe.Q_u + Q_su.T.dot(yinv * rhat)
  Qhat_ux = Qe.Q_ux + Q_su.T.dot(SYinv[:, None] * Q_sx)
  Qhat_x = Qe.Q_x + Q_sx.T.dot(yinv * rhat)
  Qhat_xx = Qe.Q_xx + Q_sx.T.dot(SYinv[:, None] * Q_sx)

  alpha, beta = _solve_condensed(Qhat_uu, Qhat_u, Qhat_ux, stage, gamma_reg, residual)
  eta = yinv * (rhat + s_t * Q_su.dot(alpha))
  theta = SYinv[:, None] * (Q_sx + Q_su.dot(beta))
  chi = -rp - Q_su.dot(alpha)
  zeta = -(Q_sx + Q_su.dot(beta))

  gains = StageGains(alpha, beta, eta, theta, chi, zeta)
  coeffs = CondensedCoeffs(Qhat_x, Qhat_u, Qhat_xx, Qhat_ux.T, Qhat_uu,
                           rp=rp, rd=rd, rhat=rhat)
  return gains, coeffs


def value_update(Qhat, gains):
  V_x = Qhat.Qhat_x + Qhat.Qhat_xu.dot(gains.alpha)
  V_xx = Qhat.Qhat_xx + Qhat.Qhat_xu.dot(gains.beta)
  V_xx = 0.5 * (V_xx + V_xx.T)
  return ValueCoeffs(V_x, V_xx)


class BackwardPassResult(object):
  """
  Output of one sweep. Lists are indexed by stage; `values` has N+1
  entries with the terminal value last.
  """

  def __init__(self, gains, values, expansions, condensed, diagnostics):
    self.gains = gains
    self.values = values
    self.expansions = expansions
    self.condensed = condensed
    self.diagnostics = diagnostics

  def residual_vector(self, variant):
    """Stacked F: the Q_u blocks followed by the complementarity residuals."""
    parts = [Qe.Q_u for Qe in self.expansions]
    if variant == 'feasible':
      parts.extend([cc.r for cc in self.condensed])
    else:
      parts.extend([cc.rp for cc in self.condensed])
      parts.extend([cc.rd for cc in self.condensed])
    return np.concatenate(parts)


def _inf_norm(blocks):
  if len(blocks) == 0:
    return 0.0
  return max([float(np.amax(np.abs(b))) if b.size > 0 else 0.0 for b in blocks])


def backward_pass(problem, w, mu, gamma_reg=0.0, variant=None, deriv=None,
                  second_order=True, residual=False, trace_eigenvalues=False,
                  curvature='exact'):
  """
  Sweep t = N-1..0 computing the stage gains and the value recursion.

  Parameters
  ----------
  problem: OCProblem
  w: Iterate
      Strictly feasible for `variant`.
  mu: float
      Barrier perturbation.
  gamma_reg: float
      Regularization added to Q_uu before condensation.
  variant: str
      'feasible' or 'infeasible'. Defaults to the variant of `w`.
  deriv: TrajectoryDerivatives
      Derivative cache for w; evaluated here when not given.
  second_order: bool
      False drops the dynamics Hessian terms (iLQR mode).
  residual: bool
      Use a general solve for Q̂_uu instead of a Cholesky factorization.
  trace_eigenvalues: bool
      Record the smallest eigenvalue of Q̂_uu over the horizon.
  curvature: str
      'exact', or 'gauss_newton' to drop the V_x f_** and s c_** terms. The
      Gauss-Newton model keeps Q̂ positive semidefinite for convex costs.

  Returns
  -------
  BackwardPassResult

  Raises NotPositiveDefinite with the failing stage index.
  """
  if variant is None:
    variant = w.variant
  if variant not in ('feasible', 'infeasible'):
    raise ValueError('Unknown variant %s' % (variant))
  if variant == 'infeasible' and w.y is None:
    raise ValueError('Infeasible variant needs slack variables y')
  if mu <= 0:
    raise ValueError('Barrier parameter must be positive, got %g' % (mu))
  if curvature not in _CURVATURE_MODELS:
    raise ValueError('Unknown curvature model %s' % (curvature))
  exact = curvature == 'exact'
  second_order = second_order and exact
  if deriv is None or (second_order and deriv.f_xx is None):
    deriv = problem.evaluate_derivatives(w.x, w.u, second_order)

  N = problem.N
  gains = [None] * N
  expansions = [None] * N
  condensed = [None] * N
  values = [None] * (N + 1)
  values[N] = ValueCoeffs(deriv.p_x, 0.5 * (deriv.p_xx + deriv.p_xx.T))

  min_eig = np.inf
  expected_decrease = 0.0
  for t in range(N - 1, -1, -1):
    d = _stage_from_cache(deriv, t)
    Qe = _expand(d, w.s[t], values[t + 1].V_x, values[t + 1].V_xx, second_order, t, exact)
    if variant == 'feasible':
      g, cc = solve_stage_feasible(Qe, w.s[t], d.c, mu, gamma_reg, t, residual)
    else:
      g, cc = solve_stage_infeasible(Qe, w.s[t], w.y[t], d.c, mu, gamma_reg, t, residual)
    values[t] = value_update(cc, g)
    gains[t] = g
    expansions[t] = Qe
    condensed[t] = cc
    expected_decrease += float(cc.Qhat_u.dot(g.alpha))
    if trace_eigenvalues:
      min_eig = min(min_eig, float(np.amin(np.linalg.eigvalsh(cc.Qhat_uu))))

  diagnostics = {
    'max_Qu': _inf_norm([Qe.Q_u for Qe in expansions]),
    'expected_decrease': expected_decrease,
    'gamma_reg': gamma_reg,
    'curvature': curvature,
  }
  if variant == 'feasible':
    diagnostics['max_r'] = _inf_norm([cc.r for cc in condensed])
    diagnostics['F_inf'] = max(diagnostics['max_Qu'], diagnostics['max_r'])
  else:
    diagnostics['max_rp'] = _inf_norm([cc.rp for cc in condensed])
    diagnostics['max_rd'] = _inf_norm([cc.rd for cc in condensed])
    diagnostics['F_inf'] = max(diagnostics['max_Qu'], diagnostics['max_rp'],
                               diagnostics['max_rd'])
  if trace_eigenvalues:
    diagnostics['min_eig'] = min_eig

  return BackwardPassResult(gains, values, expansions, condensed, diagnostics)
