"""Golden-rule transition spectra and their convolution with the pulse lineshape.

Line detunings are in Hz relative to the bare trap-bottom resonance, so a
line at ``(E_final - E_initial)/h`` is hit when the drive is detuned by that
amount. Zero-temperature lines start from the condensate; thermal lines
start from populated single-particle modes of |1>.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import H_PLANCK, HBAR, KB, ComplexField, GridMismatchError, PulseSpec, TrapSpec
from .eigenmodes import EigenSet, anharmonic_modes_1d
from .groundstate import GroundState

PRUNE_WEIGHT = 1e-9
DEFAULT_FWHM_HZ = 10.0


@dataclass(frozen=True)
class SpectrumLine:
    detuning: float
    weight: float
    alpha: int | str
    beta: int

    def __post_init__(self):
        if not self.weight >= 0:
            raise ValueError("line weight must be non-negative")


@dataclass(frozen=True, eq=False)
class Spectrum:
    lines: tuple = ()
    detunings: np.ndarray = field(default_factory=lambda: np.empty(0))
    amplitude: np.ndarray = field(default_factory=lambda: np.empty(0))
    normalization: str = "raw"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lines = tuple(sorted(self.lines, key=lambda l: (l.detuning, str(l.alpha), l.beta)))
        object.__setattr__(self, "lines", lines)
        object.__setattr__(self, "detunings", np.asarray(self.detunings, dtype=float))
        object.__setattr__(self, "amplitude", np.asarray(self.amplitude, dtype=float))
        if self.detunings.shape != self.amplitude.shape:
            raise ValueError("detunings and amplitude must have the same length")
        if self.normalization not in ("raw", "unit_peak", "matched"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def peak(self) -> float:
        return float(self.amplitude.max()) if self.amplitude.size else 0.0


@dataclass(frozen=True, eq=False)
class ThermalOccupations:
    temperature: float
    chemical_potential: float
    occupations: np.ndarray
    first_alpha: int = 0

    @property
    def total_excited(self) -> float:
        return float(np.sum(self.occupations))


# -- overlaps and line lists ---------------------------------------------------

def overlap_weights(initial: ComplexField, final_modes: EigenSet) -> np.ndarray:
    """Franck-Condon weights |<initial|mode_beta>|^2 with ``initial`` scaled to unit norm."""
    if initial.grid != final_modes.grid:
        raise GridMismatchError("initial state and modes live on different grids")
    v = initial.values.ravel() / np.sqrt(initial.norm())
    amps = final_modes.matrix().conj().T @ v * initial.grid.dV
    return np.abs(amps) ** 2


def overlap_matrix(modes1: EigenSet, modes2: EigenSet) -> np.ndarray:
    """|<1 alpha|2 beta>|^2 as a (k1, k2) array."""
    if modes1.grid != modes2.grid:
        raise GridMismatchError("mode sets live on different grids")
    amps = modes1.matrix().conj().T @ modes2.matrix() * modes1.grid.dV
    return np.abs(amps) ** 2


def zero_temperature_lines(ground: GroundState, modes2: EigenSet,
                           bottom_offset_hz: float = 0.0) -> list[SpectrumLine]:
    """One line per |2> mode at (E_2beta - mu)/h, weighted by N times the overlap."""
    w = overlap_weights(ground.psi1, modes2)
    det = (modes2.energies - ground.mu) / H_PLANCK - bottom_offset_hz
    return [SpectrumLine(float(d), float(ground.n_atoms * wb), "BEC", b)
            for b, (d, wb) in enumerate(zip(det, w))]


def bose_occupations(modes1: EigenSet, mu_th: float, temperature: float,
                     first_alpha: int = 0) -> ThermalOccupations:
    """Bose-Einstein occupations of modes ``first_alpha..`` of ``modes1``."""
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    energies = np.asarray(modes1.energies[first_alpha:])
    if np.any(energies <= mu_th):
        raise ValueError("every mode energy must lie above the thermal chemical potential")
    if temperature == 0:
        n = np.zeros_like(energies)
    else:
        n = 1.0 / np.expm1((energies - mu_th) / (KB * temperature))
    return ThermalOccupations(temperature, mu_th, n, first_alpha)


def level_occupations(occ: ThermalOccupations, modes1: EigenSet,
                      tol_hz: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Merge modes whose energies lie within ``tol_hz`` into levels.

    Returns level energies (J) and summed occupations. Near-degenerate
    HF modes, such as the pair localized on either side of the condensate,
    then count as one excited level.
    """
    energies = np.asarray(modes1.energies[occ.first_alpha:])
    levels, counts = [], []
    for e, n in zip(energies, occ.occupations):
        if levels and (e - levels[-1][0]) / H_PLANCK < tol_hz:
            counts[-1] += n
        else:
            levels.append((e,))
            counts.append(n)
    return np.array([l[0] for l in levels]), np.array(counts)


def thermal_lines(modes1: EigenSet, modes2: EigenSet, occ: ThermalOccupations,
                  bottom_offset_hz: float = 0.0,
                  overlaps: np.ndarray | None = None) -> list[SpectrumLine]:
    """Lines (alpha, beta) at (E_2beta - E_1alpha)/h weighted n_alpha |<1a|2b>|^2."""
    if overlaps is None:
        overlaps = overlap_matrix(modes1, modes2)
    lines = []
    for i, n in enumerate(occ.occupations):
        a = i + occ.first_alpha
        if n == 0:
            continue
        for b in range(modes2.k):
            w = n * overlaps[a, b]
            if w < PRUNE_WEIGHT:
                continue
            d = (modes2.energies[b] - modes1.energies[a]) / H_PLANCK - bottom_offset_hz
            lines.append(SpectrumLine(float(d), float(w), a, b))
    return lines


# -- lineshape ---------------------------------------------------------------

def rabi_lineshape(f_hz, pulse: PulseSpec) -> np.ndarray:
    """Square-pulse two-level transfer probability at detuning ``f_hz``.

    For a vanishing Rabi frequency the weak-drive limit sinc^2 (unit peak)
    is returned instead.
    """
    d = 2 * np.pi * np.asarray(f_hz, dtype=float)
    W = pulse.rabi_frequency
    if W == 0:
        return np.sinc(d * pulse.duration / (2 * np.pi)) ** 2
    gen2 = W**2 + d**2
    return W**2 / gen2 * np.sin(np.sqrt(gen2) * pulse.duration / 2) ** 2


def lineshape_fwhm(pulse: PulseSpec) -> float:
    """FWHM (Hz) of the unscaled square-pulse lineshape, by root search."""
    k0 = rabi_lineshape(0.0, pulse)
    guess = 1.0 / pulse.duration
    hi = guess
    while rabi_lineshape(hi, pulse) > k0 / 2:
        hi *= 1.5
    return 2 * brentq(lambda f: rabi_lineshape(f, pulse) - k0 / 2, 0.0, hi, xtol=1e-12)


class Lineshape:
    """Normalized (K(0) = 1) convolution kernel.

    The shape is the square-pulse two-level lineshape of ``pulse``. With
    ``fwhm_hz`` set, the frequency axis is stretched so the kernel has
    that full width at half maximum; ``fwhm_hz=None`` keeps the bare
    Fourier-limited width.
    """

    def __init__(self, pulse: PulseSpec, fwhm_hz: float | None = DEFAULT_FWHM_HZ):
        self.pulse = pulse
        self.native_fwhm = lineshape_fwhm(pulse)
        self.fwhm = self.native_fwhm if fwhm_hz is None else float(fwhm_hz)
        self.stretch = self.native_fwhm / self.fwhm
        self.k0 = float(rabi_lineshape(0.0, pulse))

    def __call__(self, f_hz) -> np.ndarray:
        return rabi_lineshape(np.asarray(f_hz) * self.stretch, self.pulse) / self.k0


def convolve_lineshape(lines, pulse: PulseSpec, detunings=None, step_hz: float = 0.25,
                       fwhm_hz: float | None = DEFAULT_FWHM_HZ) -> Spectrum:
    """Sum of kernel copies, one per line, sampled on ``detunings`` (Hz).

    Without an explicit sample grid, one with spacing ``step_hz`` covering
    every line +- 5 FWHM is built. An empty line list gives a flat zero curve.
    """
    kernel = Lineshape(pulse, fwhm_hz)
    lines = list(lines)
    margin = 5 * kernel.fwhm
    if detunings is None:
        if lines:
            lo = min(l.detuning for l in lines) - margin
            hi = max(l.detuning for l in lines) + margin
        else:
            lo, hi = -margin, margin
        n = int(np.ceil((hi - lo) / step_hz)) + 1
        detunings = lo + step_hz * np.arange(n)
    detunings = np.asarray(detunings, dtype=float)
    if lines and (detunings.min() > min(l.detuning for l in lines) - margin
                  or detunings.max() < max(l.detuning for l in lines) + margin):
        raise ValueError("sample grid must cover every line +- 5 FWHM")
    curve = np.zeros_like(detunings)
    # Summation in sorted order keeps the curve independent of input order.
    for l in sorted(lines, key=lambda l: (l.detuning, l.weight)):
        curve += l.weight * kernel(detunings - l.detuning)
    return Spectrum(tuple(lines), detunings, curve, "raw")


def normalize_spectrum(spec: Spectrum, mode: str = "unit_peak",
                       reference: Spectrum | None = None) -> Spectrum:
    if mode == "raw":
        return spec
    peak = spec.peak
    if peak <= 0:
        raise ValueError("cannot normalize a zero spectrum")
    if mode == "unit_peak":
        scale = 1.0 / peak
    elif mode == "matched":
        if reference is None:
            raise ValueError("matched normalization needs a reference spectrum")
        scale = reference.peak / peak
    else:
        raise ValueError(f"unknown normalization {mode!r}")
    lines = tuple(dataclasses.replace(l, weight=l.weight * scale) for l in spec.lines)
    return Spectrum(lines, spec.detunings.copy(), spec.amplitude * scale, mode)


# -- high-temperature anharmonic model ----------------------------------------

def _transverse_levels(trap: TrapSpec, temperature: float, cutoff: float = 40.0):
    """Distinct transverse excitation energies (zero point removed) and degeneracies."""
    wy, wz = trap.omegas[1:]
    emax = cutoff * KB * temperature
    ny = np.arange(int(emax / (HBAR * wy)) + 1)
    nz = np.arange(int(emax / (HBAR * wz)) + 1)
    E = HBAR * (wy * ny[:, None] + wz * nz[None, :])
    E = E[E <= emax]
    levels, deg = np.unique(np.round(E / (HBAR * min(wy, wz)), 9), return_counts=True)
    return levels * HBAR * min(wy, wz), deg


def solve_fugacity(energies: np.ndarray, temperature: float, n_atoms: float,
                   transverse: tuple[np.ndarray, np.ndarray] | None = None) -> float:
    """Thermal chemical potential fixing the total atom number, by bracketed bisection.

    ``transverse`` optionally gives spectator levels (energies, degeneracies)
    added to every mode, as for the transverse ladder of a separable trap.
    """
    e_t, deg = (np.zeros(1), np.ones(1)) if transverse is None else transverse
    E = (np.asarray(energies)[:, None] + e_t[None, :]).ravel()
    D = np.broadcast_to(deg[None, :], (len(energies), len(deg))).ravel()
    e0 = E.min()
    kT = KB * temperature

    def excess(log_gap):
        mu = e0 - np.exp(log_gap) * kT
        with np.errstate(over="ignore"):
            return float(np.sum(D / np.expm1((E - mu) / kT))) - n_atoms

    lo, hi = np.log(1e-12), np.log(1e3)
    if excess(lo) < 0 or excess(hi) > 0:
        raise RuntimeError("fugacity solve: atom number not bracketed")
    log_gap = brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)
    return float(e0 - np.exp(log_gap) * kT)


def separable_occupations(modes1: EigenSet, trap: TrapSpec, temperature: float,
                          n_atoms: float, transverse: bool = True) -> ThermalOccupations:
    """Per-x-mode occupations of a trap separable into x modes and a transverse ladder.

    With ``transverse`` each x mode's occupation sums the Bose-Einstein
    factors over all transverse states; otherwise only the x modes hold atoms.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    levels = _transverse_levels(trap, temperature) if transverse else None
    mu = solve_fugacity(modes1.energies, temperature, n_atoms, levels)
    kT = KB * temperature
    e_t, deg = (np.zeros(1), np.ones(1)) if levels is None else levels
    with np.errstate(over="ignore"):
        n = np.sum(deg[None, :] / np.expm1((modes1.energies[:, None] + e_t[None, :] - mu) / kT),
                   axis=1)
    return ThermalOccupations(temperature, mu, n, 0)


def high_temperature_spectrum(trap: TrapSpec, n_atoms: float, temperature: float,
                              k: int = 24, pulse: PulseSpec | None = None,
                              detunings=None, fwhm_hz: float | None = DEFAULT_FWHM_HZ,
                              transverse: bool = True, dims: int | None = None) -> Spectrum:
    """Thermal spectrum of the anharmonic model above the condensation point."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    modes1, modes2 = anharmonic_modes_1d(trap, k, dims)
    occ = separable_occupations(modes1, trap, temperature, n_atoms, transverse)
    lines = thermal_lines(modes1, modes2, occ, trap.bottom_offset)
    if pulse is None:
        pulse = PulseSpec.from_hz(3.5, 0.140)
    return convolve_lineshape(lines, pulse, detunings, fwhm_hz=fwhm_hz)


def find_peaks(spec: Spectrum, rel_height: float = 1e-4) -> np.ndarray:
    """Detunings of local maxima higher than ``rel_height`` of the global peak,
    refined by parabolic interpolation."""
    y, x = spec.amplitude, spec.detunings
    if y.size < 3 or spec.peak <= 0:
        return np.empty(0)
    idx = np.where((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]) & (y[1:-1] > rel_height * spec.peak))[0] + 1
    out = []
    for i in idx:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        den = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        out.append(x[i] + shift * (x[i + 1] - x[i]))
    return np.array(out)


def sideband_peaks(spec: Spectrum, spacing_hz: float, max_order: int = 4,
                   rel_height: float = 0.01) -> dict[int, tuple[float, float]]:
    """Strongest curve maximum inside each window m*spacing +- spacing/2.

    Returns ``{m: (position_hz, amplitude)}`` for the orders whose peak
    exceeds ``rel_height`` of the global maximum; m > 0 are blue sidebands,
    m < 0 red ones. Kernel side lobes never win against the line they
    belong to, so each window reports one physical group.
    """
    peaks = find_peaks(spec, rel_height)
    if peaks.size == 0:
        return {}
    heights = np.interp(peaks, spec.detunings, spec.amplitude)
    out = {}
    for m in range(-max_order, max_order + 1):
        sel = np.abs(peaks - m * spacing_hz) <= spacing_hz / 2
        if np.any(sel):
            j = np.argmax(np.where(sel, heights, -np.inf))
            out[m] = (float(peaks[j]), float(heights[j]))
    return out
