from ._problem import (OCProblem, Iterate, Multipliers, rollout, objective,
                       constraint_values, check_strict_feasibility,
                       finite_diff_check, numerical_derivatives)
from ._backward_pass import (stage_expansion, solve_stage_feasible,
                             solve_stage_infeasible, value_update, backward_pass)
from ._forward_pass import (StepFilter, ObjectiveDecrease, apply_gains,
                            positivity_guard, filter_accept, forward_pass)
from ._solver import (SolverConfig, Solution, solve, residual_F, update_mu,
                      init_mu, recover_multipliers, check_perturbed_kkt,
                      optimality_error)
from ._barrier import relaxed_penalty, barrier_transform, solve_barrier_ddp
from ._errors import (DivergenceError, NotPositiveDefinite, StepFailure,
                      InfeasibleStart, BarrierDomainError, ConfigurationError,
                      SolverFailure, MaxIterations, NumericalFailure)
