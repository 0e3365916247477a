"""Semiclassical limit through the sweep harness: transport error against alpha.

Each ladder value solves the oscillatory transport equation; the reference is the same
equation at alpha = 0. Errors are measured in the discrete B0 and B2 norms.

Run:  python demos/alpha_rate_sweep.py
"""
import numpy as np

from dipolar_gpe import (DipoleAxis, Estimate, InitialData, ModelParams, PhysicalInputs,
                         QuadraticPhase, SweepSpec, make_grid, nondimensionalize, run_sweep)

grid = make_grid(1, 8.0, 32, 6.0, 16)
axis = DipoleAxis.from_vector([np.sin(0.3), 0.0, np.cos(0.3)], 1)
params = ModelParams(1, 1, 0.5, axis, 0.5, 0.5, 0.25)
phase = QuadraticPhase([[0.3, 0.1], [0.1, -0.2]], [0.2, 0.0])

spec = SweepSpec(Estimate.ALPHA_RATE, (0.2, 0.1, 0.05), grid, params, 0.5, 0.025, phase,
                 InitialData(), norms=(0, 2))
result = run_sweep(spec, jobs=1)
print(result.rates_csv())
for norm, fit in sorted(result.fits.items()):
    print(f"B{norm}: slope {fit.slope:.3f}  r^2 {fit.r_squared:.4f}")

#--------------------------------------------------------------------------------------------------
# Where a physical trap would sit: a cigar of 10^4 atoms, 500 Hz radial / 5 kHz axial
trap = PhysicalInputs(mass_kg=2.7e-25, omega_x_rad_s=2 * np.pi * 500, omega_z_rad_s=2 * np.pi * 5000,
                      a_s_m=5e-9, N_atoms=1e4, C_dip_SI=1e-50)
print(nondimensionalize(trap))
