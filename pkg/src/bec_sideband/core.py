"""Constants, grids, trap potentials and field algebra shared by all solvers.

Everything is SI internally. Fields live on uniform Cartesian grids with
1 or 3 axes; the first axis is always x, the spectroscopy axis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.constants as sc


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = sc.hbar
    k_boltzmann: float = sc.k
    bohr_radius: float = sc.physical_constants["Bohr radius"][0]
    mass_rb87: float = 86.909 * sc.atomic_mass

    @property
    def h(self) -> float:
        return 2 * np.pi * self.hbar


CONST = PhysicalConstants()
HBAR = CONST.hbar
H_PLANCK = CONST.h
KB = CONST.k_boltzmann
A0 = CONST.bohr_radius
MASS = CONST.mass_rb87


class GridResolutionWarning(UserWarning):
    """Grid spacing does not resolve the healing length."""


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class TrapSpec:
    """Harmonic trap of state |1>, with |2> displaced along x by ``delta_x``.

    ``gamma`` is the quartic anharmonicity (rad s^-1 m^-1), acting along x
    only. ``bottom_offset`` is the |2>-|1> trap-bottom difference in Hz.
    """

    fx: float
    fy: float
    fz: float
    delta_x: float = 0.0
    gamma: float = 0.0
    bottom_offset: float = 0.0

    def __post_init__(self):
        if min(self.fx, self.fy, self.fz) <= 0:
            raise ValueError("trap frequencies must be positive")
        if self.delta_x < 0:
            raise ValueError("delta_x must be >= 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")

    @property
    def omegas(self) -> np.ndarray:
        return 2 * np.pi * np.array([self.fx, self.fy, self.fz])

    @property
    def omega_bar(self) -> float:
        """Geometric mean angular frequency."""
        return float(np.prod(self.omegas) ** (1 / 3))

    @property
    def omega_max(self) -> float:
        return float(self.omegas.max())

    def oscillator_lengths(self) -> np.ndarray:
        return np.sqrt(HBAR / (MASS * self.omegas))


@dataclass(frozen=True)
class InteractionSpec:
    """s-wave scattering lengths in units of the Bohr radius."""

    a11: float = 100.4
    a12: float = 98.01
    a22: float = 95.44

    def __post_init__(self):
        if min(self.a11, self.a12, self.a22) < 0:
            raise ValueError("scattering lengths must be >= 0")

    @staticmethod
    def coupling(a_bohr: float) -> float:
        return 4 * np.pi * HBAR**2 * a_bohr * A0 / MASS

    @property
    def g11(self) -> float:
        return self.coupling(self.a11)

    @property
    def g12(self) -> float:
        return self.coupling(self.a12)

    @property
    def g22(self) -> float:
        return self.coupling(self.a22)

    def scaled(self, factor: float) -> "InteractionSpec":
        return InteractionSpec(self.a11 * factor, self.a12 * factor, self.a22 * factor)


@dataclass(frozen=True)
class PulseSpec:
    """Square two-photon Rabi pulse; all rates in rad/s."""

    rabi_frequency: float
    duration: float
    detuning: float = 0.0

    def __post_init__(self):
        if self.rabi_frequency < 0:
            raise ValueError("rabi_frequency must be >= 0")
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    @classmethod
    def from_hz(cls, rabi_hz: float, duration_s: float, detuning_hz: float = 0.0) -> "PulseSpec":
        return cls(2 * np.pi * rabi_hz, duration_s, 2 * np.pi * detuning_hz)

    def with_detuning_hz(self, detuning_hz: float) -> "PulseSpec":
        return PulseSpec(self.rabi_frequency, self.duration, 2 * np.pi * detuning_hz)

    def check_weak_drive(self, trap: "TrapSpec", limit: float = 0.1) -> bool:
        ratio = self.rabi_frequency / trap.omegas.min()
        if ratio > limit:
            warnings.warn(f"Rabi frequency is {ratio:.2f} of the lowest trap frequency; "
                          "the weak-drive picture does not hold", RuntimeWarning, stacklevel=2)
            return False
        return True


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid, index ``i`` sits at ``(i - n/2) * d``."""

    dims: tuple[int, ...]
    spacing: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "spacing", tuple(float(d) for d in self.spacing))
        if len(self.dims) not in (1, 3) or len(self.spacing) != len(self.dims):
            raise ValueError("grid must have 1 or 3 axes with matching spacing")
        for n in self.dims:
            if not _is_pow2(n):
                raise ValueError(f"grid dims must be powers of two, got {self.dims}")
            if n < 8:
                raise ValueError(f"grid dims must be >= 8, got {self.dims}")
        if min(self.spacing) <= 0:
            raise ValueError("grid spacing must be positive")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.dims

    @property
    def dV(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def extent(self) -> tuple[float, ...]:
        return tuple(n * d for n, d in zip(self.dims, self.spacing))

    def axis(self, i: int) -> np.ndarray:
        n, d = self.dims[i], self.spacing[i]
        return (np.arange(n) - n // 2) * d

    def mesh(self) -> list[np.ndarray]:
        """Open (broadcastable) coordinate arrays, one per axis."""
        return list(np.meshgrid(*[self.axis(i) for i in range(self.ndim)],
                                indexing="ij", sparse=True))

    def wavenumbers(self) -> list[np.ndarray]:
        ks = [2 * np.pi * np.fft.fftfreq(n, d) for n, d in zip(self.dims, self.spacing)]
        return list(np.meshgrid(*ks, indexing="ij", sparse=True))

    def k_squared(self) -> np.ndarray:
        return sum(k**2 for k in self.wavenumbers())


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex amplitude on a grid, normalized (nominally) to ``norm_target``."""

    grid: Grid
    values: np.ndarray
    norm_target: float = 1.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        return float(np.sum(self.density) * self.grid.dV)

    def normalized(self, target: float | None = None) -> "ComplexField":
        target = self.norm_target if target is None else target
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize a zero field")
        return ComplexField(self.grid, self.values * np.sqrt(target / n), target)


def kinetic_prefactor() -> float:
    """hbar^2 / 2m."""
    return HBAR**2 / (2 * MASS)


def apply_kinetic(values: np.ndarray, grid: Grid, k2: np.ndarray | None = None) -> np.ndarray:
    """Spectral -(hbar^2/2m) Laplacian."""
    if k2 is None:
        k2 = grid.k_squared()
    return np.fft.ifftn(kinetic_prefactor() * k2 * np.fft.fftn(values))


def thomas_fermi_radii(trap: TrapSpec, inter: InteractionSpec, n_atoms: float) -> np.ndarray:
    from .groundstate import thomas_fermi_mu

    mu = thomas_fermi_mu(trap, inter, n_atoms)
    return np.sqrt(2 * mu / MASS) / trap.omegas


def healing_length(trap: TrapSpec, inter: InteractionSpec, n_atoms: float) -> float:
    """1/sqrt(8 pi n0 a11) at the Thomas-Fermi peak density; inf without interactions."""
    from .groundstate import thomas_fermi_mu

    if inter.a11 == 0 or n_atoms == 0:
        return np.inf
    n0 = thomas_fermi_mu(trap, inter, n_atoms) / inter.g11
    return float(1 / np.sqrt(8 * np.pi * n0 * inter.a11 * A0))


def build_grid(trap: TrapSpec, n_atoms: float, dims: tuple[int, ...],
               extent_factor: float = 6.0, inter: InteractionSpec | None = None,
               strict: bool = False) -> Grid:
    """Grid whose box length per axis is ``extent_factor * max(l_ho, R_TF)``.

    ``dims`` of length 1 gives an x-only grid. A spacing coarser than half
    the healing length triggers :class:`GridResolutionWarning`, or a
    ``ValueError`` when ``strict``.
    """
    if extent_factor <= 0:
        raise ValueError("extent_factor must be positive")
    dims = tuple(int(n) for n in dims)
    if len(dims) not in (1, 3):
        raise ValueError("dims must have length 1 or 3")
    if any(n < 8 for n in dims):
        raise ValueError(f"grid dims must be >= 8 per axis, got {dims}")
    inter = InteractionSpec() if inter is None else inter
    lengths = trap.oscillator_lengths()
    radii = thomas_fermi_radii(trap, inter, n_atoms)
    scale = np.maximum(lengths, radii)[: len(dims)]
    spacing = tuple(extent_factor * s / n for s, n in zip(scale, dims))
    grid = Grid(dims, spacing)

    xi = healing_length(trap, inter, n_atoms)
    if max(spacing) > xi / 2:
        msg = (f"grid spacing {max(spacing):.3g} m does not resolve the healing "
               f"length {xi:.3g} m by 2 points")
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, GridResolutionWarning, stacklevel=2)
    return grid


def trap_potential(trap: TrapSpec, grid: Grid, species: int = 1,
                   include_quartic: bool = False) -> np.ndarray:
    """Trap potential in J on the grid.

    Species 2 is the same function evaluated at ``x - delta_x`` plus the
    trap-bottom offset. On a 1D grid only the x term is kept.
    """
    if species not in (1, 2):
        raise ValueError("species must be 1 or 2")
    coords = grid.mesh()
    if species == 2:
        coords[0] = coords[0] - trap.delta_x
    omegas = trap.omegas
    V = np.zeros(grid.shape)
    for w, r in zip(omegas, coords):
        V = V + 0.5 * MASS * w**2 * r**2
    if include_quartic and trap.gamma != 0:
        V = V + 0.5 * MASS * trap.gamma**2 * coords[0] ** 4
    if species == 2 and trap.bottom_offset != 0:
        V = V + H_PLANCK * trap.bottom_offset
    return V


def inner_product(f: ComplexField, g: ComplexField) -> complex:
    if f.grid != g.grid:
        raise GridMismatchError("fields live on different grids")
    return complex(np.vdot(f.values, g.values) * f.grid.dV)


def energy_functionals(psi: ComplexField, V: np.ndarray, g: float) -> tuple[float, float, float]:
    """Kinetic, potential and interaction energy (J) of ``psi``."""
    grid = psi.grid
    dV = grid.dV
    ft = np.fft.fftn(psi.values)
    e_kin = kinetic_prefactor() * np.sum(grid.k_squared() * np.abs(ft) ** 2) * dV / ft.size
    rho = psi.density
    e_pot = np.sum(V * rho) * dV
    e_int = 0.5 * g * np.sum(rho**2) * dV
    return float(e_kin), float(e_pot), float(e_int)


def gaussian_field(grid: Grid, widths, norm: float = 1.0, center=None) -> ComplexField:
    """Normalized Gaussian with amplitude widths ``widths`` (exp(-x^2/2w^2))."""
    coords = grid.mesh()
    center = np.zeros(grid.ndim) if center is None else np.asarray(center, dtype=float)
    arg = sum((r - c) ** 2 / (2 * w**2) for r, c, w in zip(coords, center, widths))
    return ComplexField(grid, np.exp(-arg) + 0j, norm).normalized()
