"""Spectral solvers and a convergence-rate harness for the rescaled dipolar Gross-Pitaevskii equation
and its strong-confinement, semiclassical and kernel limits."""
from .data import InitialData, gaussian_x, oscillator_ground_state
from .errors import (BoundaryMassError, CausticError, ConfigError, RegimeWarning,
                     RepresentationError, SolverFailure, StepSizeError, TruncationWarning)
from .harness import (Estimate, PhysicalInputs, RateFit, SweepSpec, derive_scaled_params,
                      fit_rate, nondimensionalize, run_sweep, selftest)
from .kernel import (DipoleAxis, KernelTable, apply_convolution, kernel_table, udip_hat,
                     v0_local_coefficient, vdip_hat, w_split_hat)
from .nonlinearity import (ModelParams, ThetaQuadrature, G_reduced, eval_F, eval_F_av,
                           lipschitz_probe)
from .phase import (FrameStamp, QuadraticPhase, caustic_time, evolve_phase, from_filtered,
                    to_filtered)
from .solvers import (SolverConfig, Trajectory, Variant, solve, solve_averaged, solve_full,
                      solve_polarized, solve_transport)
from .spectral import (Frame, Grid, HermiteBasis, Representation, WaveField, discrete_B_norm,
                       hermite_basis, make_grid, propagate_Hz, resample_affine, transform)

__version__ = "0.1.0"
