import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bec_sideband.core import (A0, CONST, H_PLANCK, HBAR, MASS, ComplexField, Grid,
                               GridMismatchError, GridResolutionWarning, InteractionSpec,
                               PulseSpec, TrapSpec, apply_kinetic, build_grid,
                               energy_functionals, gaussian_field, inner_product,
                               thomas_fermi_radii, trap_potential)

from conftest import paper_trap

# Frozen oracle values (mpmath, CODATA 2018 constants).
X_HO_112 = 1.0190188312e-6
LAMBDA_013 = 8.137524132e-3


def test_constants_positive_and_codata():
    for v in (CONST.hbar, CONST.k_boltzmann, CONST.bohr_radius, CONST.mass_rb87):
        assert v > 0
    assert CONST.mass_rb87 == pytest.approx(86.909 * 1.66053906660e-27, rel=1e-9)
    assert CONST.bohr_radius == pytest.approx(5.29177210903e-11, rel=1e-9)


def test_coupling_formula():
    inter = InteractionSpec()
    assert inter.g11 == 4 * np.pi * HBAR**2 * 100.4 * A0 / MASS
    assert (inter.a11, inter.a12, inter.a22) == (100.4, 98.01, 95.44)


def test_trap_validation():
    with pytest.raises(ValueError):
        TrapSpec(0, 1, 1)
    with pytest.raises(ValueError):
        TrapSpec(1, 1, 1, delta_x=-1e-7)
    with pytest.raises(ValueError):
        TrapSpec(1, 1, 1, gamma=-1)


def test_grid_extent_ideal_gas():
    trap = paper_trap()
    grid = build_grid(trap, 0, (64, 32, 32), 6.0)
    assert grid.extent[0] == pytest.approx(6 * X_HO_112, rel=1e-8)


def test_grid_isotropic_equal_extent():
    trap = TrapSpec(200, 200, 200)
    grid = build_grid(trap, 0, (32, 32, 32))
    assert grid.extent[0] == pytest.approx(grid.extent[1], rel=1e-14)
    assert grid.extent[1] == pytest.approx(grid.extent[2], rel=1e-14)


def test_grid_extent_follows_thomas_fermi_radius():
    trap, inter = paper_trap(), InteractionSpec()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridResolutionWarning)
        grid = build_grid(trap, 400, (64, 32, 32), 6.0, inter)
    r_tf = thomas_fermi_radii(trap, inter, 400)[0]
    assert r_tf > X_HO_112
    assert grid.extent[0] == pytest.approx(6 * r_tf, rel=1e-12)


def test_grid_rejects_small_or_odd_dims():
    trap = paper_trap()
    with pytest.raises(ValueError):
        build_grid(trap, 0, (4, 32, 32))
    with pytest.raises(ValueError):
        Grid((48, 32, 32), (1e-7,) * 3)


def test_grid_healing_length_warning_and_strict():
    trap, inter = paper_trap(), InteractionSpec()
    with pytest.warns(GridResolutionWarning):
        build_grid(trap, 800, (64, 32, 32), inter=inter)
    with pytest.raises(ValueError, match="healing"):
        build_grid(trap, 800, (64, 32, 32), inter=inter, strict=True)


def test_grid_coordinates_centered():
    g = Grid((8,), (0.5,))
    np.testing.assert_array_equal(g.axis(0), (np.arange(8) - 4) * 0.5)


def test_trap_potential_values():
    trap = TrapSpec(112, 517, 517, delta_x=0.13e-6, bottom_offset=37.0)
    grid = Grid((64, 32, 32), (0.13e-6 / 2, 0.1e-6, 0.1e-6))
    V1 = trap_potential(trap, grid, 1)
    V2 = trap_potential(trap, grid, 2)
    c = (32, 16, 16)
    assert V1[c] == 0.0
    assert V2[(34, 16, 16)] == pytest.approx(H_PLANCK * 37.0, rel=1e-12)


def test_potential_at_oscillator_length():
    trap = TrapSpec(112, 517, 517)
    grid = Grid((8,), (X_HO_112,))
    V = trap_potential(trap, grid, 1)
    assert V[5] / H_PLANCK == pytest.approx(56.0, rel=1e-8)


def test_species_two_bit_identical_without_shift():
    trap = TrapSpec(112, 517, 517)
    grid = Grid((32, 16, 16), (2e-7, 1e-7, 1e-7))
    np.testing.assert_array_equal(trap_potential(trap, grid, 1), trap_potential(trap, grid, 2))


def test_quartic_term_only_along_x():
    trap = TrapSpec(112, 517, 517, gamma=2 * np.pi * 2.5e6)
    grid = Grid((32, 16, 16), (2e-7, 1e-7, 1e-7))
    diff = trap_potential(trap, grid, 1, True) - trap_potential(trap, grid, 1)
    x = grid.axis(0)
    np.testing.assert_allclose(diff[:, 3, 5], 0.5 * MASS * trap.gamma**2 * x**4, rtol=1e-8)
    assert np.ptp(diff[7], axis=None) == 0


def test_inner_product_self_and_parity():
    grid = Grid((128,), (0.05e-6,))
    f = gaussian_field(grid, [X_HO_112], norm=3.0)
    assert inner_product(f, f) == pytest.approx(3.0, rel=1e-12)
    x = grid.axis(0)
    odd = ComplexField(grid, x * np.exp(-x**2 / (2 * X_HO_112**2)))
    assert abs(inner_product(f, odd)) < 1e-10


def test_displaced_ground_state_overlap():
    grid = Grid((256,), (0.04e-6,))
    f = gaussian_field(grid, [X_HO_112])
    g = gaussian_field(grid, [X_HO_112], center=[0.13e-6])
    assert abs(inner_product(f, g)) ** 2 == pytest.approx(np.exp(-LAMBDA_013), rel=1e-10)


def test_inner_product_grid_mismatch():
    a = ComplexField(Grid((8,), (1.0,)), np.ones(8))
    b = ComplexField(Grid((8,), (2.0,)), np.ones(8))
    with pytest.raises(GridMismatchError):
        inner_product(a, b)


def test_ideal_gaussian_energies_equipartition():
    trap = TrapSpec(112, 517, 517)
    grid = build_grid(trap, 0, (64, 32, 32), 10.0)
    psi = gaussian_field(grid, trap.oscillator_lengths(), norm=5.0)
    ek, ep, ei = energy_functionals(psi, trap_potential(trap, grid), 0.0)
    expected = 5.0 * HBAR * trap.omegas.sum() / 4
    assert ek == pytest.approx(expected, rel=1e-9)
    assert ep == pytest.approx(expected, rel=1e-9)
    assert ei == 0.0


def test_interaction_energy_linear_in_g():
    grid = Grid((64,), (0.1e-6,))
    psi = gaussian_field(grid, [X_HO_112], norm=10.0)
    V = np.zeros(grid.shape)
    assert energy_functionals(psi, V, 2e-50)[2] == 2 * energy_functionals(psi, V, 1e-50)[2]


def test_spectral_vs_finite_difference_kinetic():
    # Second-order finite differences converge to the spectral value as dx^2.
    errs = []
    for n in (64, 128):
        grid = Grid((n,), (12 * X_HO_112 / n,))
        psi = gaussian_field(grid, [X_HO_112])
        ek = energy_functionals(psi, np.zeros(n), 0.0)[0]
        v = psi.values
        lap = (np.roll(v, 1) - 2 * v + np.roll(v, -1)) / grid.spacing[0] ** 2
        ek_fd = float(np.real(np.vdot(v, -HBAR**2 / (2 * MASS) * lap)) * grid.dV)
        errs.append(abs(ek_fd - ek) / ek)
    assert errs[1] < errs[0] / 3.5


def test_apply_kinetic_matches_energy():
    grid = Grid((64,), (0.1e-6,))
    psi = gaussian_field(grid, [X_HO_112])
    tpsi = apply_kinetic(psi.values, grid)
    ek = np.real(np.vdot(psi.values, tpsi)) * grid.dV
    assert ek == pytest.approx(energy_functionals(psi, np.zeros(64), 0.0)[0], rel=1e-12)


def test_pulse_validation_and_weak_drive():
    with pytest.raises(ValueError):
        PulseSpec(-1.0, 0.1)
    with pytest.raises(ValueError):
        PulseSpec(1.0, 0.0)
    trap = paper_trap()
    assert PulseSpec.from_hz(3.5, 0.14).check_weak_drive(trap)
    with pytest.warns(RuntimeWarning):
        PulseSpec.from_hz(30.0, 0.14).check_weak_drive(trap)


complex_arrays = st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)),
                          min_size=8, max_size=8).map(
    lambda xs: np.array([a + 1j * b for a, b in xs]))
scalars = st.tuples(st.floats(-10, 10), st.floats(-10, 10)).map(lambda t: complex(*t))
GRID8 = Grid((8,), (0.3,))


@given(complex_arrays, complex_arrays)
def test_inner_product_conjugate_symmetric(a, b):
    f, g = ComplexField(GRID8, a), ComplexField(GRID8, b)
    assert inner_product(f, g) == pytest.approx(np.conj(inner_product(g, f)), rel=1e-12, abs=1e-9)


@given(complex_arrays, complex_arrays, complex_arrays, scalars)
def test_inner_product_sesquilinear(a, b, c, s):
    f, g, h = (ComplexField(GRID8, v) for v in (a, b, c))
    lhs = inner_product(f, ComplexField(GRID8, s * b + c))
    assert lhs == pytest.approx(s * inner_product(f, g) + inner_product(f, h), rel=1e-9, abs=1e-6)
    lhs = inner_product(ComplexField(GRID8, s * a), g)
    assert lhs == pytest.approx(np.conj(s) * inner_product(f, g), rel=1e-9, abs=1e-6)


@given(complex_arrays.filter(lambda v: np.linalg.norm(v) > 1e-3),
       st.floats(1e-3, 1e6))
def test_normalized_hits_target(v, target):
    f = ComplexField(GRID8, v).normalized(target)
    assert f.norm() == pytest.approx(target, rel=1e-12)
    assert f.norm_target == target
