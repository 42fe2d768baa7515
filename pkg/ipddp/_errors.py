"""Exceptions raised by the solvers.

All of them derive from a builtin exception so that callers can catch
ValueError / ArithmeticError / RuntimeError without importing this module.
"""


class DivergenceError(ArithmeticError):
  def __init__(self, stage, message=None):
    self.stage = stage
    if message is None:
      message = 'Non-finite state encountered at stage %d' % (stage)
    super(DivergenceError, self).__init__(message)


class NotPositiveDefinite(ArithmeticError):
  def __init__(self, stage, gamma_reg=0.0):
    self.stage = stage
    self.gamma_reg = gamma_reg
    super(NotPositiveDefinite, self).__init__(
        'Condensed Q_uu is not positive definite at stage %d (gamma_reg = %g)' % (stage, gamma_reg))


class StepFailure(RuntimeError):
  pass


class InfeasibleStart(ValueError):
  pass


class BarrierDomainError(ValueError):
  pass


class ConfigurationError(ValueError):
  pass


class SolverFailure(RuntimeError):
  """Base of solve-level failures. `solution` holds the partial result."""

  def __init__(self, message, solution=None):
    self.solution = solution
    super(SolverFailure, self).__init__(message)


class MaxIterations(SolverFailure):
  pass


class NumericalFailure(SolverFailure):
  pass
