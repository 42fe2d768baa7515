from .._solver import optimality_error
from ._problems import (build_car_parking, build_linear_quadratic, build_pendulum,
                        build_unicycle, get_problem, problem_ids)
from ._studies import central_path_step_study
from ._trials import (ReferenceOptimum, TrialSpec, algorithm_ids, reference_optimum,
                      run_trial, run_trials)
