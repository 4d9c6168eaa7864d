"""Convex programming by fixed-time-stable flows on a homogeneous complementarity embedding."""
from .problem import (ConvexProgram, Family, GenericOracle, OracleEval, ProblemFormatError,
                      augment_infeasible, dump_problem, evaluate, load_problem, make_expsum,
                      make_generic, make_lp, make_qp, parse_problem, split_free_variables)
from .mcp import KKTResidual, kkt_residual, monotone_gap, phi, phi_jacobian
from .hmcp import (Classification, HMCPState, Outcome, OutcomeThresholds, classify, psi,
                   psi_jacobian, residual_z)
from .flows import (BoundKind, FlowConfig, FlowSingularityError, Scheme, full_hmcp_rhs,
                    gradient_flow_rhs, newton_flow_rhs, prescribe_gain, radial_norm_closed_form,
                    reduced_rhs, settling_bound, settling_time)
from .integrator import IntegratorConfig, StopEvent, StopKind, Trajectory, integrate
from .solver import SmoothObjective, SolveReport, SolverConfig, solve, solve_unconstrained

__version__ = "0.1.0"
