"""Dipolar multiplier on a 3-D grid: bounds, the long/short-range split, and one slice.

Run:  python demos/kernel_table.py
"""
import numpy as np

from dipolar_gpe import DipoleAxis, kernel_table, make_grid, v0_local_coefficient, vdip_hat, w_split_hat

grid = make_grid(1, 8.0, 32, 6.0, 32)

# a dipole tilted 0.4 rad away from the confined axis
axis = DipoleAxis.from_vector([np.sin(0.4), 0.0, np.cos(0.4)], 1)

for gamma in (0.0, 0.1, 0.5, 1.0):
    m = kernel_table(grid, axis, gamma).multiplier
    print(f"gamma={gamma:4.2f}  min={m.min():+.6f}  max={m.max():+.6f}")

# at gamma = 0 the convolution collapses to a local coefficient
print("local coefficient:", v0_local_coefficient(axis))

#--------------------------------------------------------------------------------------------------
# Long and short-range parts add up to V^gamma - V^0
rng = np.random.default_rng(0)
kx = rng.standard_normal((1000, 2))
kz = rng.standard_normal((1000, 1))
w1, w2 = w_split_hat(kx, kz, 0.5, axis)
gap = w1 + w2 - (vdip_hat(kx, kz, 0.5, axis) - vdip_hat(kx, kz, 0.0, axis))
print("split residual:", np.max(np.abs(gap)))

#--------------------------------------------------------------------------------------------------
# Slice at k_x2 = 0: rows are k_x1, columns are k_z
m = kernel_table(grid, axis, 0.5).multiplier
print(np.array2string(np.fft.fftshift(m[:, 0, :])[::4, ::4], precision=3, suppress_small=True))
