"""Initial-data families used by solvers, sweeps and demos."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import Frame, Grid, WaveField, embed, l2_norm


def x_points(grid: Grid) -> list[np.ndarray]:
    """Coordinate arrays on the x-grid alone, shape ``grid.x_shape``."""
    return list(np.meshgrid(*([grid.x] * grid.dim_x), indexing="ij"))


def gaussian_x(grid: Grid, centre=0.0, width: float = 1.0, momentum=0.0) -> np.ndarray:
    """exp(-|x - centre|^2 / (2 width^2) + i momentum.x) on the x-grid."""
    xs = x_points(grid)
    c = np.broadcast_to(np.asarray(centre, dtype=float), (grid.dim_x,))
    p = np.broadcast_to(np.asarray(momentum, dtype=float), (grid.dim_x,))
    r2 = sum((x - ci) ** 2 for x, ci in zip(xs, c))
    phase = sum(pi * x for x, pi in zip(xs, p))
    return np.exp(-r2 / (2 * width**2) + 1j * phase)


def oscillator_ground_state(grid: Grid, alpha: float) -> np.ndarray:
    """Normalized ground state of -(alpha/2) Lap_x + |x|^2/(2 alpha), energy (3-d)/2."""
    xs = x_points(grid)
    r2 = sum(x**2 for x in xs)
    return (np.pi * alpha) ** (-grid.dim_x / 4) * np.exp(-r2 / (2 * alpha))


def _mode_key(k, d):
    if d == 1:
        return int(np.atleast_1d(k)[0])
    return tuple(int(v) for v in k)


@dataclass(frozen=True)
class InitialData:
    """Filtered initial amplitude A0 = sum_k w_k a_k(x) omega_k(z), normalized.

    ``kind`` is 'mixed' (each mode gets a Gaussian displaced by ``shift`` in a
    mode-dependent direction, so the data is not a product state), 'polarized'
    (a single Gaussian on mode ``mode``) or 'ground' (oscillator ground state
    on mode 0, needs ``alpha``).
    """

    kind: str = "mixed"
    width: float = 1.0
    shift: float = 0.5
    weights: dict = field(default_factory=lambda: {0: 1.0, 1: 0.4, 2: 0.1j})
    mode: int | tuple = 0

    def __post_init__(self):
        if self.kind not in ("mixed", "polarized", "ground"):
            raise ValueError(f"unknown initial-data kind {self.kind!r}")
        if not self.width > 0:
            raise ValueError("width must be positive")

    def amplitude(self, grid: Grid, alpha: float = 1.0) -> WaveField:
        d = grid.d
        if self.kind == "ground":
            vals = embed(oscillator_ground_state(grid, alpha), grid, (0,) * d if d == 2 else 0)
        elif self.kind == "polarized":
            vals = embed(gaussian_x(grid, 0.0, self.width), grid, _mode_key(self.mode, d))
        else:
            vals = np.zeros(grid.shape, dtype=complex)
            for j, (k, w) in enumerate(sorted(self.weights.items(), key=lambda kv: str(kv[0]))):
                ang = 2.0 * np.pi * j / max(len(self.weights), 1)
                centre = self.shift * np.array([np.cos(ang), np.sin(ang)])[: grid.dim_x]
                key = _mode_key(k, d) if d == 1 or np.ndim(k) else (int(k), 0)
                vals = vals + complex(w) * embed(gaussian_x(grid, centre, self.width), grid, key)
        vals = vals / l2_norm(vals, grid)
        return WaveField(grid, vals.astype(complex), frame=Frame.FILTERED)

    def polarized_profile(self, grid: Grid) -> np.ndarray:
        """Normalized x-profile for polarized runs."""
        a = gaussian_x(grid, 0.0, self.width)
        h = grid.hx**grid.dim_x
        return a / np.sqrt(h * np.sum(np.abs(a) ** 2))
