"""Markovian lifts of affine Volterra jump-diffusions.

Kernels and lift measures, resolvents of the second kind, invariant-cone
membership, path simulation (hybrid, pure-jump, small-jump and forward-curve
schemes) and Riccati-based Laplace transforms with Monte Carlo
cross-validation.
"""

from .config import ModelConfig, config_hash, parse_config, serialize_config
from .cone import (ConeCheckConfig, MembershipReport, drift_matrix,
                   membership_E, membership_Ew, membership_report,
                   sufficient_cm_condition)
from .driver import (DriverParams, ExponentialJumps, FiniteAtomJumps,
                     jump_compensated_integral, jump_expm1_integral,
                     jump_mean, jump_total_mass, nonlinearity)
from .kernels import (ExponentialSum, Fractional, LiftMeasure, LiftState,
                      Tabulated, TimeGrid, build_measure_fractional,
                      eval_kernel, h_curve, kernel_from_measure,
                      l2_fit_error, l2_norm_sq, measure_from_kernel)
from .resolvent import (ResolventTable, check_resolvent_identity,
                        resolvent_nonnegative, resolvent_second_kind)
from .riccati import (laplace_transform_lifted, laplace_transform_volterra,
                      riccati_eps_jump, riccati_lifted, riccati_volterra)
from .simulate import (CHUNK, ForwardPath, LaplaceEstimate, McConfig,
                       PathRecord, active_backend, available_backends,
                       estimate_laplace_mc, propagate_forward_lift,
                       propagate_measure_lift, simulate_eps_jump,
                       simulate_forward_lift, simulate_hybrid,
                       simulate_pure_jump_n)

__version__ = "0.1.0"
