"""Geometric integrators for dissipative mechanics with per-chart conformal factors.

The package provides the continuous reference dynamics (conformal Hamilton and
Euler-Lagrange equations), quadrature-rule and exact discrete Lagrangians, the
plain and conformal three-point variational recursions, discrete Legendre
transforms with right/left discrete Hamiltonians and their steppers, the
associated two-point Poincare-Cartan forms with a numerical conformal-condition
verifier, and a CLI experiment driver over a small built-in system catalog.
"""

from .atlas import (Chart, ConformalAtlas, LeeForm, TransitionMap, a_matrix,
                    cocycle_check, lcs_two_form_matrix, lee_form,
                    transition_apply)
from .continuous import (ContinuousHamiltonian, ContinuousLagrangian,
                         PhaseState, divergence_numeric, energy,
                         fiber_legendre, fiber_legendre_inv,
                         lcel_acceleration, lcs_hamiltonian_field,
                         make_lcel_field, make_lcshe_field, rk4_integrate)
from .discretize import (DiscreteLagrangian, conformal_midpoint_rule,
                         conformal_trapezoidal_rule,
                         exact_discrete_lagrangian, midpoint_rule,
                         trapezoidal_rule)
from .errors import (ConfigError, ConsistencyError, DomainError,
                     IntegrationError, NewtonError, RegularityError,
                     ShootingError)
from .forms import (LcsConditionReport, RegularityReport, TwoFormField,
                    lc_pc_two_form, lcs_condition_check, pc_one_forms,
                    pc_two_form, regularity_check)
from .hamiltonian_discrete import (DiscreteHamiltonian, LagrangianSource,
                                   LegendreMomenta, MomentumPair,
                                   build_left_hamiltonian,
                                   build_right_hamiltonian, discrete_legendre,
                                   integrate_hamiltonian, ld_step, ldlch_step,
                                   momenta_along_trajectory, rd_step,
                                   rdlch_step)
from .numerics import (NewtonResult, StepperConfig, fd_gradient, fd_jacobian,
                       gauss_legendre, newton_solve, solve_linear)
from .systems import (CATALOG, System, free_rotor_circle, get_system,
                      harmonic_1d, planar_2d, rotor_extended_chart,
                      with_constant_sigma)
from .trajectory import DiscreteTrajectory, StepRecord, TrajectoryPoint
from .variational import (action_sum, del_step, dlcel_step, integrate,
                          stationarity_residual)

__version__ = "0.1.0"
