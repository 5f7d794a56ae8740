"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

The time-dependent criteria (4, 7, 14) share one search for the carrier and
blue-sideband maxima of the 3D N=800 transfer curve. The search starts at
the Hartree-Fock line positions, walks uphill in 4 Hz steps until the middle
of three samples is the largest, and fits a parabola through the three.
"""

import math
import warnings

import numpy as np
import pytest

from bec_sideband.config import parse_config
from bec_sideband.core import (H_PLANCK, HBAR, MASS, ComplexField, Grid, GridResolutionWarning,
                               InteractionSpec, PulseSpec, TrapSpec, build_grid,
                               kinetic_prefactor)
from bec_sideband.dynamics import propagate_pulse, sweep_detuning, two_level_transfer
from bec_sideband.eigenmodes import (EffectivePotential, anharmonic_modes_1d,
                                     effective_potential, lowest_eigenpairs)
from bec_sideband.groundstate import (ConvergenceReport, GroundState, carrier_shift,
                                      critical_temperature, solve_groundstate)
from bec_sideband.spectra import (SpectrumLine, bose_occupations, convolve_lineshape,
                                  high_temperature_spectrum, level_occupations,
                                  overlap_weights, sideband_peaks, thermal_lines,
                                  zero_temperature_lines)

from conftest import paper_trap, record

PULSE = PulseSpec.from_hz(3.5, 0.140)
SEARCH_STEP_HZ = 4.0


def _hf_carrier_and_blue(gs, modes2):
    lines = zero_temperature_lines(gs, modes2)
    carrier = max(lines, key=lambda l: l.weight)
    blue = min((l for l in lines if l.detuning > carrier.detuning
                and l.weight > 1e-6 * carrier.weight), key=lambda l: l.detuning)
    return carrier, blue


class _TransferCurve:
    """Memoized 3D transfer fraction versus detuning (Hz)."""

    def __init__(self, gs, trap, inter):
        self.gs, self.trap, self.inter = gs, trap, inter
        self.samples = {}
        self.norm_drift = 0.0

    def __call__(self, detunings):
        todo = [d for d in detunings if d not in self.samples]
        if todo:
            spec = sweep_detuning(self.gs, PULSE, todo, self.trap, self.inter)
            assert not spec.meta["failures"], spec.meta["failures"]
            for d, t in zip(spec.detunings, spec.amplitude):
                self.samples[float(d)] = float(t)
            for norm in spec.meta["final_norms"].values():
                self.norm_drift = max(self.norm_drift, abs(norm - self.gs.n_atoms)
                                      / self.gs.n_atoms)
        return np.array([self.samples[d] for d in detunings])

    def peak_near(self, start_hz, max_moves=6):
        h = SEARCH_STEP_HZ
        # samples sit on start + j*h so revisited points hit the cache exactly
        at = lambda j: round(start_hz + j * h, 6)  # noqa: E731
        j = 0
        for _ in range(max_moves):
            y = self([at(j - 1), at(j), at(j + 1)])
            if y[1] >= y[0] and y[1] >= y[2]:
                # vertex of the parabola through the three samples
                den = y[0] - 2 * y[1] + y[2]
                shift = 0.5 * h * (y[0] - y[2]) / den
                height = y[1] - 0.25 * (y[0] - y[2]) * shift / h
                return at(j) + shift, height
            j += 1 if y[2] > y[0] else -1
        raise AssertionError(f"no maximum found near {start_hz} Hz")


@pytest.fixture(scope="module")
def gpm(gs800, hf800):
    trap, inter = paper_trap(), InteractionSpec()
    carrier, blue = _hf_carrier_and_blue(gs800, hf800[1])
    curve = _TransferCurve(gs800, trap, inter)
    peaks = {"carrier": curve.peak_near(carrier.detuning),
             "blue": curve.peak_near(blue.detuning)}
    return {"curve": curve, "peaks": peaks, "hf": (carrier.detuning, blue.detuning)}


def test_criterion_01_chemical_potential():
    cfg = parse_config(preset="paper_n400")
    trap, inter = cfg.trap(), cfg.interaction()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridResolutionWarning)
        grid = build_grid(trap, cfg.n_atoms, cfg.dims, cfg["grid.extent_factor"], inter)
    gs = solve_groundstate(grid, trap, inter, cfg.n_atoms)
    ok = abs(gs.mu_hz / 966.0 - 1) <= 0.03
    assert record(1, "chemical potential", ok, f"mu/h = {gs.mu_hz:.2f} Hz (966 Hz +- 3%)")


def test_criterion_02_carrier_shift():
    shift = carrier_shift(922.0 * H_PLANCK, InteractionSpec())
    ok = abs(shift + 22.0) <= 0.1
    assert record(2, "carrier shift", ok, f"{shift:.4f} Hz (-22.0 +- 0.1 Hz)")


def test_criterion_03_critical_temperature():
    trap, inter = paper_trap(), InteractionSpec()
    tc = critical_temperature(trap, inter, 400) * 1e9
    tc0 = critical_temperature(trap, inter, 400, corrections=False) * 1e9
    ok = abs(tc - 87) <= 3 and abs(tc0 - 103) <= 2
    assert record(3, "critical temperature", ok,
                  f"{tc:.2f} nK corrected (87 +- 3), {tc0:.2f} nK ideal (103 +- 2)")


def test_criterion_04_sideband_spacing(gpm):
    hf_spacing = gpm["hf"][1] - gpm["hf"][0]
    gpm_spacing = gpm["peaks"]["blue"][0] - gpm["peaks"]["carrier"][0]
    ok = (abs(hf_spacing / 42.0 - 1) <= 0.2 and abs(gpm_spacing / 42.0 - 1) <= 0.2
          and abs(gpm_spacing - hf_spacing) <= 5.0)
    assert record(4, "sideband spacing", ok,
                  f"HF {hf_spacing:.2f} Hz, GPM {gpm_spacing:.2f} Hz "
                  f"(42 Hz +- 20%, agreement within 5 Hz)")


def test_criterion_05_red_sideband_location(gs800, hf800):
    m1, m2 = hf800
    occ = bose_occupations(m1, gs800.mu, 30e-9)
    strongest = max(thermal_lines(m1, m2, occ), key=lambda l: l.weight)
    ok = abs(strongest.detuning + 160.0) <= 20.0
    assert record(5, "red sideband location", ok,
                  f"strongest thermal line at {strongest.detuning:.2f} Hz (-160 +- 20 Hz)")


def test_criterion_06_thermal_occupation(gs800, hf800):
    m1, _ = hf800
    occ = bose_occupations(m1, gs800.mu, 30e-9)
    _, counts = level_occupations(occ, m1)
    first, total = counts[0], occ.total_excited
    ok = abs(first - 5) <= 2 and abs(total - 15) <= 5
    assert record(6, "thermal occupation", ok,
                  f"first excited level {first:.2f} (5 +- 2), total {total:.2f} (15 +- 5)")


def test_criterion_07_transfer_ceiling(gpm):
    peak = max(gpm["curve"].samples.values())
    fitted = gpm["peaks"]["carrier"][1]
    ok = max(peak, fitted) < 0.5
    assert record(7, "transfer ceiling", ok,
                  f"largest sampled transfer {peak:.4f}, fitted carrier peak {fitted:.4f} "
                  f"(< 0.5)")


def test_criterion_08_two_level_oracle():
    grid = Grid((8, 8, 8), (1e-6, 1e-6, 1e-6))
    psi = np.full(grid.shape, 1 / np.sqrt(np.prod(grid.extent)), dtype=complex)
    gs = GroundState(ComplexField(grid, psi, 1.0), 0.0, (0.0, 0.0, 0.0), 1.0,
                     ConvergenceReport(0, 0.0, 0, ()))
    zeros = np.zeros(grid.shape)
    det = np.linspace(-20.0, 20.0, 21)
    spec = sweep_detuning(gs, PULSE, det, (zeros, zeros), InteractionSpec(0.0, 0.0, 0.0))
    W, t = PULSE.rabi_frequency, PULSE.duration
    D = 2 * np.pi * det
    analytic = W**2 / (W**2 + D**2) * np.sin(np.sqrt(W**2 + D**2) * t / 2) ** 2
    err = np.max(np.abs(spec.amplitude - analytic))
    assert np.allclose(analytic, [two_level_transfer(PULSE.with_detuning_hz(d)) for d in det])
    ok = spec.amplitude.size == 21 and err < 1e-4
    assert record(8, "two-level oracle", ok, f"max deviation {err:.2e} over 21 detunings (1e-4)")


def test_criterion_09_virial(gs400, gs800):
    worst = 0.0
    for gs in (gs400, gs800):
        ek, ep, ei = gs.energies
        worst = max(worst, abs(2 * ek - 2 * ep + 3 * ei) / (ek + ep + ei))
    ok = worst < 1e-3
    assert record(9, "virial", ok, f"largest relative violation {worst:.2e} (1e-3)")


def _dense_1d(V, dx):
    n = V.size
    k = 2 * np.pi * np.fft.fftfreq(n, dx)
    D = np.fft.ifft(kinetic_prefactor() * k[:, None] ** 2 * np.fft.fft(np.eye(n), axis=0),
                    axis=0).real
    return np.linalg.eigvalsh(D + np.diag(V))


def test_criterion_10_eigensolver_oracles():
    trap = TrapSpec(112.0, 517.0, 517.0)
    grid = build_grid(trap, 1, (32, 16, 16), 10.0)
    es = lowest_eigenpairs(effective_potential(1, None, trap, InteractionSpec(), "anharmonic",
                                               grid), k=7)
    levels = sorted(112.0 * (a + 0.5) + 517.0 * (b + c + 1.0)
                    for a in range(12) for b in range(3) for c in range(3))[:7]
    err3d = np.max(np.abs(es.energies / H_PLANCK / np.array(levels) - 1))
    rng = np.random.default_rng(7)
    x_ho = trap.oscillator_lengths()[0]
    err1d = 0.0
    for n in (128, 256, 512):
        g1 = Grid((n,), (24 * x_ho / n,))
        x = g1.axis(0)
        V = 0.5 * MASS * trap.omegas[0] ** 2 * x**2
        V = V + H_PLANCK * 150.0 * (rng.uniform(-1, 1) * np.cos(x / x_ho)
                                    + rng.uniform(0, 1) * np.exp(-(x / x_ho) ** 2))
        ref = _dense_1d(V, g1.spacing[0])[:8]
        got = lowest_eigenpairs(EffectivePotential(1, V, "anharmonic_1", g1), k=8).energies
        err1d = max(err1d, np.max(np.abs(got / ref - 1)))
    ok = err3d < 1e-4 and err1d < 1e-8
    assert record(10, "eigensolver oracles", ok,
                  f"3D harmonic {err3d:.1e} (1e-4), 1D dense {err1d:.1e} (1e-8)")


def test_criterion_11_franck_condon():
    worst = 0.0
    for dx in (0.13e-6, 0.26e-6):
        trap = TrapSpec(112.0, 517.0, 517.0, delta_x=dx)
        m1, m2 = anharmonic_modes_1d(trap, k=8)
        lam = dx**2 * MASS * trap.omegas[0] / (2 * HBAR)
        w = overlap_weights(m1.modes[0], m2)
        poisson = [math.exp(-lam) * lam**b / math.factorial(b) for b in range(m2.k)]
        worst = max(worst, np.max(np.abs(w - poisson)))
    ok = worst < 1e-6
    assert record(11, "Franck-Condon oracle", ok, f"max deviation {worst:.1e} (1e-6)")


def test_criterion_12_lineshape():
    spec = convolve_lineshape([SpectrumLine(0.0, 1.0, 0, 0)], PULSE, step_hz=0.01)
    above = spec.detunings[spec.amplitude >= 0.5 * spec.peak]
    fwhm = above.max() - above.min()
    ok = 7.0 <= fwhm <= 13.0
    assert record(12, "lineshape", ok, f"FWHM {fwhm:.2f} Hz ([7, 13] Hz)")


def test_criterion_13_high_temperature_structure():
    cfg = parse_config(preset="paper_highT")
    trap = cfg.trap()
    T = cfg["thermal.temperature_nk"] * 1e-9
    spec = high_temperature_spectrum(trap, cfg.n_atoms, T, cfg["modes.k"], cfg.pulse())
    groups = sideband_peaks(spec, trap.fx, rel_height=0.01)
    blue = sorted(m for m in groups if m > 0)
    red = sorted(m for m in groups if m < 0)
    pos = {m: groups[m][0] for m in groups}
    gaps = np.diff([pos[m] for m in sorted(pos)])
    unequal = np.ptp(gaps) > 1.0
    ratio = groups[1][1] / groups[-1][1]
    ok = len(blue) >= 3 and len(red) >= 2 and unequal and ratio > 1
    assert record(13, "high-T structure", ok,
                  f"{len(blue)} blue, {len(red)} red groups; spacings "
                  f"{', '.join(f'{g:.1f}' for g in gaps)} Hz; blue/red {ratio:.3f}")


def test_criterion_14_conservation(gpm, gs800):
    curve = gpm["curve"]
    centre = min(curve.samples, key=lambda d: abs(d - gpm["peaks"]["carrier"][0]))
    coarse = curve.samples[centre]
    fine, _ = propagate_pulse(gs800, PULSE.with_detuning_hz(centre), paper_trap(),
                              InteractionSpec(), dt=2.5e-6)
    change = abs(fine - coarse)
    drift = curve.norm_drift
    ok = drift < 1e-8 and change < 1e-4
    assert record(14, "conservation", ok,
                  f"norm drift {drift:.1e} over {len(curve.samples)} pulses (1e-8); "
                  f"dt-halving change {change:.1e} at {centre:.2f} Hz (1e-4)")
