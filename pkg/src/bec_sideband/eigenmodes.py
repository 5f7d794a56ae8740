"""Single-particle excitation modes of the |1> and |2> effective potentials."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (H_PLANCK, HBAR, MASS, ComplexField, Grid, InteractionSpec, TrapSpec,
                   kinetic_prefactor, trap_potential)
from .groundstate import GroundState, effective_coupling
from .lanczos import lanczos_lowest

PROVENANCES = ("hartree_fock_1", "mean_field_2", "anharmonic_1", "anharmonic_2")
MAX_MODES = 64


@dataclass(frozen=True, eq=False)
class EffectivePotential:
    species: int
    values: np.ndarray
    provenance: str
    grid: Grid

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True, eq=False)
class EigenSet:
    energies: np.ndarray
    modes: list
    residuals: np.ndarray

    @property
    def k(self) -> int:
        return len(self.energies)

    @property
    def grid(self) -> Grid:
        return self.modes[0].grid

    def matrix(self) -> np.ndarray:
        """Modes as columns of an ``(npoints, k)`` array, L2-normalized with dV."""
        return np.stack([m.values.ravel() for m in self.modes], axis=1)


def effective_potential(species: int, ground: GroundState | None, trap: TrapSpec,
                        inter: InteractionSpec, model: str = "hartree_fock",
                        grid: Grid | None = None) -> EffectivePotential:
    """Potential part of the single-particle Hamiltonian for ``species``.

    ``hartree_fock``: V1 + 2 g11 |psi1|^2 for |1>, V2 + g12 |psi1|^2 for |2>.
    ``anharmonic``: trap potential plus the quartic x term centred on
    each species' own trap minimum; no condensate is involved.
    """
    if model == "hartree_fock":
        if ground is None:
            raise ValueError("hartree_fock model requires a ground state")
        grid = ground.grid
        rho = ground.psi1.density
        V = trap_potential(trap, grid, species)
        if species == 1:
            g = effective_coupling(grid, trap, inter.g11)
            return EffectivePotential(1, V + 2 * g * rho, "hartree_fock_1", grid)
        g = effective_coupling(grid, trap, inter.g12)
        return EffectivePotential(2, V + g * rho, "mean_field_2", grid)
    if model == "anharmonic":
        if grid is None:
            if ground is None:
                raise ValueError("anharmonic model needs a grid")
            grid = ground.grid
        V = trap_potential(trap, grid, species, include_quartic=True)
        return EffectivePotential(species, V, f"anharmonic_{species}", grid)
    raise ValueError(f"unknown model {model!r}")


class HamiltonianOperator:
    """Real-symmetric single-particle Hamiltonian with spectral kinetic term."""

    def __init__(self, potential: np.ndarray, grid: Grid):
        self.grid = grid
        self.shape = grid.shape
        self.V = np.asarray(potential, dtype=float).ravel()
        ks = [2 * np.pi * np.fft.fftfreq(n, d) for n, d in zip(grid.dims[:-1], grid.spacing[:-1])]
        ks.append(2 * np.pi * np.fft.rfftfreq(grid.dims[-1], grid.spacing[-1]))
        k2 = sum(k**2 for k in np.meshgrid(*ks, indexing="ij", sparse=True))
        self.tk = kinetic_prefactor() * k2
        self.n = int(np.prod(self.shape))

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        b = X.shape[1]
        axes = tuple(range(len(self.shape)))
        fields = X.T.reshape((b,) + self.shape)
        ft = np.fft.rfftn(fields, axes=tuple(a + 1 for a in axes))
        kin = np.fft.irfftn(self.tk * ft, s=self.shape, axes=tuple(a + 1 for a in axes))
        return kin.reshape(b, -1).T + self.V[:, None] * X


def lowest_eigenpairs(pot: EffectivePotential, grid: Grid | None = None, k: int = 10, *,
                      tol_hz: float = 1e-6, block: int = 4, max_cap: int = MAX_MODES,
                      seed: int = 0) -> EigenSet:
    """Lowest ``k`` eigenpairs of -(hbar^2/2m) Laplacian + ``pot``.

    Each returned mode satisfies ``||H psi - E psi|| < h * tol_hz`` with
    ``psi`` normalized to 1. ``block`` must be at least the largest
    degeneracy among the wanted levels.
    """
    grid = pot.grid if grid is None else grid
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > max_cap:
        raise ValueError(f"k={k} exceeds the cap of {max_cap} modes")
    op = HamiltonianOperator(pot.values, grid)
    w, U, res = lanczos_lowest(op.apply, op.n, k, block=block, tol=tol_hz, scale=H_PLANCK,
                               seed=seed)
    order = np.argsort(w, kind="stable")
    w, U, res = w[order], U[:, order], res[order]
    modes = []
    for j in range(k):
        v = U[:, j].reshape(grid.shape)
        # Sign convention: largest-magnitude sample positive.
        i = np.argmax(np.abs(v))
        v = v * np.sign(v.flat[i]) / np.sqrt(grid.dV)
        modes.append(ComplexField(grid, v + 0j, 1.0))
    return EigenSet(np.asarray(w), modes, np.asarray(res))


def x_grid_for_modes(trap: TrapSpec, k: int, dims: int | None = None) -> Grid:
    """1D grid along x wide and fine enough for the lowest ``k`` oscillator levels."""
    x_ho = trap.oscillator_lengths()[0]
    turning = np.sqrt(2 * k + 1)
    extent = 2 * (turning + 8) * x_ho
    if dims is None:
        dx_max = np.pi * x_ho / (3 * turning)
        dims = max(64, int(2 ** np.ceil(np.log2(extent / dx_max))))
    return Grid((dims,), (extent / dims,))


def anharmonic_modes_1d(trap: TrapSpec, k: int = 24, dims: int | None = None,
                        **kwargs) -> tuple[EigenSet, EigenSet]:
    """Modes of the quartic-perturbed traps of |1> and |2> along x only."""
    if k < 2:
        raise ValueError("k must be >= 2")
    grid = x_grid_for_modes(trap, k, dims)
    sets = []
    for species in (1, 2):
        pot = effective_potential(species, None, trap, InteractionSpec(), "anharmonic", grid)
        sets.append(lowest_eigenpairs(pot, grid, k, **kwargs))
    return sets[0], sets[1]
