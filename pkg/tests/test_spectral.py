import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from dipolar_gpe import (BoundaryMassError, Frame, Representation, RepresentationError,
                         TruncationWarning, WaveField, discrete_B_norm, hermite_basis, make_grid,
                         propagate_Hz, resample_affine, transform)
from dipolar_gpe.spectral import embed, hermite_functions, l2_norm


def random_field(grid, rng):
    return rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)


def resolved_field(grid, rng):
    b = hermite_basis(grid)
    shape = grid.x_shape + (grid.K_z,) * grid.d
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return b.synthesize(c)


# --- grids -------------------------------------------------------------------------

def test_make_grid_spacings():
    g = make_grid(1, 8, 16, 8, 16, 8)
    assert g.hx == 1.0 and g.hz == 1.0
    assert g.shape == (16, 16, 16)


def test_make_grid_shapes_d2():
    g = make_grid(2, 8, 32, 6, 32, 12)
    assert g.shape == (32, 32, 32)
    assert g.x_shape == (32,) and g.z_shape == (32, 32)


@pytest.mark.parametrize("args", [(1, 8, 16, 8, 16, 20), (1, 8, 12, 8, 16, 8), (3, 8, 16, 8, 16, 8),
                                  (1, -1, 16, 8, 16, 8)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_wavenumbers_are_discrete_set():
    g = make_grid(1, 8, 16, 6, 16)
    assert np.allclose(np.sort(g.kx), np.pi / 8 * np.arange(-8, 8))


# --- transforms ----------------------------------------------------------------------

def test_transform_roundtrip(grid1, rng):
    f = WaveField(grid1, random_field(grid1, rng))
    back = transform(transform(f, "forward"), "inverse")
    assert back.representation is Representation.PHYSICAL
    assert np.max(np.abs(back.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))


def test_transform_plancherel(grid1, rng):
    f = WaveField(grid1, random_field(grid1, rng))
    assert abs(transform(f, "forward").norm() - f.norm()) <= 1e-12 * f.norm()


def test_transform_representation_mismatch(grid1):
    f = WaveField(grid1, np.zeros(grid1.shape, complex))
    with pytest.raises(RepresentationError):
        transform(f, "inverse")
    with pytest.raises(RepresentationError):
        transform(transform(f, "forward"), "forward")


def test_transform_gaussian_matches_continuous():
    g = make_grid(1, 8, 32, 8, 32)
    f = WaveField(g, np.exp(-g.r2() / 2).astype(complex))
    F = transform(f, "forward").values
    # |DFT| of samples = N^{-1/2} h^{-1} * continuous transform, per dimension
    scale = np.prod([n**-0.5 / h for n, h in [(g.n_x, g.hx)] * 2 + [(g.n_z, g.hz)]])
    k2 = sum(w**2 for w in g.wavenumbers)
    expected = scale * (2 * np.pi) ** 1.5 * np.exp(-k2 / 2)
    # aliasing at the Nyquist edge is e^{-(pi/h)^2/2} ~ 3e-9
    assert np.max(np.abs(np.abs(F) - expected)) < 1e-8 * expected.max()
    # symmetric under k -> -k
    flip = np.roll(np.flip(np.abs(F)), 1, axis=(0, 1, 2))
    assert np.allclose(flip, np.abs(F), atol=1e-14)


def test_transform_impulse_flat():
    g = make_grid(1, 4, 8, 4, 8)
    v = np.zeros(g.shape, complex)
    v[3, 2, 5] = 1.0
    F = transform(WaveField(g, v), "forward").values
    assert np.allclose(np.abs(F), 1 / np.sqrt(v.size))


# --- Hermite machinery ----------------------------------------------------------------

def test_hermite_recurrence_matches_scipy():
    from scipy.special import eval_hermite, factorial
    z = np.linspace(-4, 4, 17)
    H = hermite_functions(z, 8)
    for n in range(8):
        ref = eval_hermite(n, z) * np.exp(-z**2 / 2) / np.sqrt(2.0**n * factorial(n) * np.sqrt(np.pi))
        assert np.allclose(H[:, n], ref, atol=1e-13)


@pytest.mark.parametrize("d", [1, 2])
def test_hermite_orthonormal(d):
    g = make_grid(d, 6, 16, 6, 32, 12)
    B = hermite_basis(g).modes
    assert np.max(np.abs(g.hz * B.T @ B - np.eye(12))) < 1e-10


def test_omega0_samples():
    g = make_grid(1, 6, 16, 6, 32)
    w0 = hermite_basis(g).mode_field(0)
    assert np.allclose(w0, np.pi**-0.25 * np.exp(-g.z**2 / 2), atol=1e-12)
    g2 = make_grid(2, 6, 16, 6, 32)
    w00 = hermite_basis(g2).mode_field((0, 0))
    z1, z2 = np.meshgrid(g2.z, g2.z, indexing="ij")
    assert np.allclose(w00, np.pi**-0.5 * np.exp(-(z1**2 + z2**2) / 2), atol=1e-12)


@pytest.mark.parametrize("d", [1, 2])
def test_hermite_roundtrip_on_span(d, rng):
    g = make_grid(d, 6, 8, 6, 16, 10)
    b = hermite_basis(g)
    u = resolved_field(g, rng)
    assert np.max(np.abs(b.synthesize(b.analyze(u)) - u)) < 1e-10 * np.max(np.abs(u))


@pytest.mark.parametrize("d", [1, 2])
def test_propagate_periodic_and_unitary(d, rng):
    g = make_grid(d, 6, 8, 6, 16, 12)
    f = WaveField(g, resolved_field(g, rng))
    once = propagate_Hz(f, 2 * np.pi)
    assert np.max(np.abs(once.values - f.values)) < 1e-10 * np.max(np.abs(f.values))
    p = propagate_Hz(f, 0.37)
    assert abs(p.norm() - f.norm()) < 1e-10 * f.norm()
    shifted = propagate_Hz(f, 0.37 + 2 * np.pi)
    assert np.max(np.abs(shifted.values - p.values)) < 1e-12 * np.max(np.abs(f.values)) * 10


def test_propagate_composition(grid1, rng):
    f = WaveField(grid1, resolved_field(grid1, rng))
    a = propagate_Hz(propagate_Hz(f, 0.4), 1.1)
    b = propagate_Hz(f, 1.5)
    assert np.max(np.abs(a.values - b.values)) < 1e-10 * np.max(np.abs(f.values))


def test_propagate_ground_state_fixed(grid1):
    a = np.exp(-sum(c**2 for c in np.meshgrid(grid1.x, grid1.x, indexing="ij")))
    f = WaveField(grid1, embed(a, grid1, 0).astype(complex))
    assert np.max(np.abs(propagate_Hz(f, 1.234).values - f.values)) < 1e-12


def test_propagate_mode_one_half_turn(grid1):
    a = np.ones(grid1.x_shape)
    f = WaveField(grid1, embed(a, grid1, 1).astype(complex))
    assert np.max(np.abs(propagate_Hz(f, np.pi).values + f.values)) < 1e-12


def test_propagate_leakage_warning():
    g = make_grid(1, 6, 8, 6, 16, 4)
    v = np.zeros(g.shape, complex)
    v[..., 8] = 1.0
    with pytest.warns(TruncationWarning):
        propagate_Hz(WaveField(g, v), 0.5, check=True)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        propagate_Hz(WaveField(g, embed(np.ones(g.x_shape), g, 1).astype(complex)), 0.5, check=True)


# --- B norms ---------------------------------------------------------------------------

def test_B0_is_L2(grid1, rng):
    f = WaveField(grid1, random_field(grid1, rng))
    assert discrete_B_norm(f, 0) == pytest.approx(l2_norm(f.values, grid1), rel=1e-14)


def test_B1_gaussian_against_quadrature():
    g = make_grid(1, 8, 32, 8, 32)
    f = WaveField(g, np.exp(-g.r2() / 2))
    # 1D building blocks by adaptive quadrature
    i0 = integrate.quad(lambda s: np.exp(-s**2), -np.inf, np.inf)[0]
    i2 = integrate.quad(lambda s: s**2 * np.exp(-s**2), -np.inf, np.inf)[0]
    l2 = i0**3
    grad = 3 * i2 * i0**2            # each derivative x_i e^{-r^2/2}
    moment = 3 * i2 * i0**2          # |x|^2 |u|^2
    expected = np.sqrt(l2 + grad + moment)
    assert discrete_B_norm(f, 1) == pytest.approx(expected, rel=1e-10)


def test_B_norm_rejects_m():
    g = make_grid(1, 4, 8, 4, 8)
    with pytest.raises(ValueError):
        discrete_B_norm(WaveField(g, np.zeros(g.shape)), 4)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), c=st.complex_numbers(min_magnitude=0.1, max_magnitude=10))
def test_B_norm_monotone_and_homogeneous(seed, c):
    g = make_grid(1, 4, 8, 4, 8)
    u = random_field(g, np.random.default_rng(seed))
    f = WaveField(g, u)
    vals = [discrete_B_norm(f, m) for m in range(4)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    for m in range(4):
        assert discrete_B_norm(f.replace(c * u), m) == pytest.approx(abs(c) * vals[m], rel=1e-12)


# --- resampling ------------------------------------------------------------------------

def test_resample_identity(grid1, rng):
    f = WaveField(grid1, random_field(grid1, rng))
    out = resample_affine(f, np.eye(2), [0, 0], check_boundary=False)
    assert np.max(np.abs(out.values - f.values)) < 1e-12 * np.max(np.abs(f.values))


def test_resample_shift_one_cell(grid1, rng):
    f = WaveField(grid1, random_field(grid1, rng))
    out = resample_affine(f, np.eye(2), [grid1.hx, 0.0], check_boundary=False)
    assert np.allclose(out.values, np.roll(f.values, -1, axis=0), atol=1e-11)


def test_resample_scale_gaussian():
    g = make_grid(1, 8, 64, 4, 8)
    X, Y = np.meshgrid(g.x, g.x, indexing="ij")
    z = g.z[None, None, :]
    f = WaveField(g, np.exp(-(X**2 + Y**2)[..., None] / 2) * np.cos(z))
    out = resample_affine(f, 0.5 * np.eye(2), [0.0, 0.0])
    exact = np.exp(-(0.25 * (X**2 + Y**2))[..., None] / 2) * np.cos(z)
    assert np.max(np.abs(out.values - exact)) < 1e-8


def test_resample_d2_matches_1d_interpolant():
    g = make_grid(2, 8, 64, 4, 8)
    x = g.x[:, None, None]
    f = WaveField(g, np.exp(-x**2 / 2) * np.ones(g.shape))
    out = resample_affine(f, [[0.8]], [0.3])
    assert np.max(np.abs(out.values - np.exp(-(0.8 * x + 0.3) ** 2 / 2))) < 1e-8


def test_resample_errors(grid1):
    f = WaveField(grid1, np.ones(grid1.shape))
    with pytest.raises(ValueError):
        resample_affine(f, np.zeros((2, 2)), [0, 0])
    with pytest.raises(BoundaryMassError):
        resample_affine(f, 2 * np.eye(2), [0, 0])
    with pytest.raises(RepresentationError):
        resample_affine(f.replace(representation=Representation.FOURIER), np.eye(2), [0, 0])


def test_wavefield_shape_check(grid1):
    with pytest.raises(ValueError):
        WaveField(grid1, np.zeros((3, 3, 3)))
    assert WaveField(grid1, np.zeros(grid1.shape)).frame is Frame.LAB
