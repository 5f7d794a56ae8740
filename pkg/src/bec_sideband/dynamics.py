"""Real-time two-component Gross-Pitaevskii dynamics under a weak Rabi drive.

Component 2 is propagated in the frame rotating with the drive, where the
coupled problem has a time-independent Hamiltonian

    H = [[H1, hbar*Omega/2], [hbar*Omega/2, H2 - hbar*Delta]].

Lab-frame fields are recovered with psi2_lab = exp(-i Delta t) * psi2_frame.
Resonance with a transition of energy E2 - E1 occurs at Delta = (E2 - E1)/hbar,
the same sign convention as the golden-rule line lists.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np
import scipy.fft as sfft

from .core import (H_PLANCK, HBAR, ComplexField, InteractionSpec, PulseSpec, TrapSpec,
                   kinetic_prefactor, trap_potential)
from .groundstate import GroundState, SolverError, effective_coupling
from .spectra import Spectrum

log = logging.getLogger(__name__)

DEFAULT_DT = 5e-6

__all__ = ["PulseSpec", "TwoComponentState", "CoupledPropagator", "step_coupled",
           "propagate_pulse", "sweep_detuning", "two_level_transfer"]


@dataclass(frozen=True, eq=False)
class TwoComponentState:
    psi1: ComplexField
    psi2: ComplexField
    time: float = 0.0

    @property
    def populations(self) -> tuple[float, float]:
        return self.psi1.norm(), self.psi2.norm()

    @property
    def transfer_fraction(self) -> float:
        n1, n2 = self.populations
        return n2 / (n1 + n2)


def two_level_transfer(pulse: PulseSpec) -> float:
    """Analytic square-pulse two-level transfer probability."""
    W, D = pulse.rabi_frequency, pulse.detuning
    gen2 = W**2 + D**2
    if gen2 == 0:
        return 0.0
    return float(W**2 / gen2 * np.sin(np.sqrt(gen2) * pulse.duration / 2) ** 2)


def _potentials(traps, grid):
    """Accept a TrapSpec or an explicit (V1, V2) pair.

    From a TrapSpec the trap-bottom offset is removed from V2, since the
    detuning is measured from the trap-bottom resonance.
    """
    if isinstance(traps, TrapSpec):
        V1 = trap_potential(traps, grid, 1)
        V2 = trap_potential(traps, grid, 2) - H_PLANCK * traps.bottom_offset
        return V1, V2
    V1, V2 = traps
    return np.asarray(V1, dtype=float), np.asarray(V2, dtype=float)


@numba.njit(cache=True)
def _phase_kernel(p1, p2, e1, e2, g11, g12, g22):
    """p_j *= e_j * exp(-i theta_j) in place, theta from the local densities.

    The mean-field angle per step is small, where degree-10/11 Taylor
    series for cos/sin give exp(-i theta) to rounding; larger angles use sin/cos.
    """
    a = p1.ravel()
    b = p2.ravel()
    c = e1.ravel()
    d = e2.ravel()
    for i in range(a.size):
        x = a[i]
        y = b[i]
        n1 = x.real * x.real + x.imag * x.imag
        n2 = y.real * y.real + y.imag * y.imag
        a[i] = x * c[i] * _expmi(g11 * n1 + g12 * n2)
        b[i] = y * d[i] * _expmi(g22 * n2 + g12 * n1)


_C2, _C6, _C12, _C20, _C30 = 1 / 2, 1 / 6, 1 / 12, 1 / 20, 1 / 30
_C42, _C56, _C72, _C90, _C110 = 1 / 42, 1 / 56, 1 / 72, 1 / 90, 1 / 110


@numba.njit(cache=True)
def _expmi(t):
    if abs(t) > 0.05:
        return complex(np.cos(t), -np.sin(t))
    u = t * t
    c = 1 - u * _C2 * (1 - u * _C12 * (1 - u * _C30 * (1 - u * _C56 * (1 - u * _C90))))
    s = t * (1 - u * _C6 * (1 - u * _C20 * (1 - u * _C42 * (1 - u * _C72 * (1 - u * _C110)))))
    return complex(c, -s)


@numba.njit(cache=True)
def _mix_kernel(f1, f2, kd, ko):
    a = f1.ravel()
    b = f2.ravel()
    c = kd.ravel()
    d = ko.ravel()
    for i in range(a.size):
        x = a[i]
        y = b[i]
        a[i] = c[i] * x + d[i] * y
        b[i] = c[i] * y + d[i] * x


class CoupledPropagator:
    """Second-order Strang splitting of the rotating-frame two-component GPE.

    The Hamiltonian is split into a part diagonal in position and species
    (trap, mean field, detuning) and a part made of the kinetic energy plus
    the Rabi coupling. The first leaves both densities unchanged, so its
    nonlinear phase is integrated exactly. The coupling is a constant 2x2
    matrix that commutes with the (species-independent) kinetic operator,
    so the second part is exponentiated exactly in Fourier space.
    Adjacent half steps of the diagonal part are fused.
    """

    def __init__(self, grid, V1, V2, inter: InteractionSpec, pulse: PulseSpec, dt: float,
                 trap: TrapSpec | None = None):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.dt = dt
        scale = 1.0
        if grid.ndim == 1:
            if trap is None:
                raise ValueError("an x-only grid needs the trap for the 1D coupling")
            scale = effective_coupling(grid, trap, 1.0)
        # Diagonal-part angles in radians per full step.
        r = dt / HBAR
        w1 = np.broadcast_to(np.asarray(V1, dtype=float), grid.shape) * r
        w2 = (np.broadcast_to(np.asarray(V2, dtype=float), grid.shape)
              - HBAR * pulse.detuning) * r
        self.g = np.array([inter.g11, inter.g12, inter.g22]) * scale * r
        self.trap_phase = {f: (np.exp(-1j * f * w1), np.exp(-1j * f * w2)) for f in (0.5, 1.0)}
        tk = kinetic_prefactor() * grid.k_squared()
        if tk.max() * r >= np.pi:
            # Split-step schemes for the nonlinear equation go unstable once
            # the kinetic phase at the grid cutoff passes pi per step.
            raise ValueError(f"dt={dt:.3g} s too large for this grid: kinetic phase at the "
                             f"cutoff is {tk.max() * r:.2f} rad per step (limit pi)")
        kin = np.exp(-1j * tk * r)
        half = 0.5 * pulse.rabi_frequency * dt
        self.kin_diag = np.ascontiguousarray(np.broadcast_to(kin * np.cos(half), grid.shape))
        self.kin_off = np.ascontiguousarray(np.broadcast_to(kin * (-1j * np.sin(half)),
                                                            grid.shape))
        self.coupled = pulse.rabi_frequency > 0
        self.axes = tuple(range(grid.ndim))

    def _diag(self, p1, p2, frac):
        e1, e2 = self.trap_phase[frac]
        g11, g12, g22 = frac * self.g
        _phase_kernel(p1, p2, e1, e2, g11, g12, g22)

    def _kinetic_coupling(self, p1, p2):
        f1 = sfft.fftn(p1, axes=self.axes, overwrite_x=True)
        f2 = sfft.fftn(p2, axes=self.axes, overwrite_x=True)
        _mix_kernel(f1, f2, self.kin_diag, self.kin_off)
        return (sfft.ifftn(f1, axes=self.axes, overwrite_x=True),
                sfft.ifftn(f2, axes=self.axes, overwrite_x=True))

    def run(self, p1, p2, n_steps: int, first_step: int = 0):
        """Advance frame fields by ``n_steps``; raises SolverError on non-finite values."""
        p1 = np.array(p1, dtype=complex, order="C")
        p2 = np.array(p2, dtype=complex, order="C")
        if n_steps == 0:
            return p1, p2
        self._diag(p1, p2, 0.5)
        for i in range(n_steps):
            p1, p2 = self._kinetic_coupling(p1, p2)
            if not (np.isfinite(p1.flat[0]) and np.isfinite(p2.flat[0])):
                raise SolverError(f"non-finite field at step {first_step + i + 1}")
            self._diag(p1, p2, 0.5 if i == n_steps - 1 else 1.0)
        return p1, p2


def _to_frame(psi2_lab, t, detuning):
    return psi2_lab * np.exp(1j * detuning * t)


def _to_lab(psi2_frame, t, detuning):
    return psi2_frame * np.exp(-1j * detuning * t)


def step_coupled(state: TwoComponentState, dt: float, pulse: PulseSpec, traps,
                 inter: InteractionSpec, n_steps: int = 1,
                 trap: TrapSpec | None = None) -> TwoComponentState:
    """Advance ``state`` by ``n_steps`` Strang steps of size ``dt``."""
    grid = state.psi1.grid
    if isinstance(traps, TrapSpec):
        trap = traps
    max_rate = np.max(trap.omegas) if trap is not None else None
    if max_rate is not None and dt * max_rate >= 0.2:
        raise ValueError("dt too large: dt * omega_max must stay below 0.2")
    V1, V2 = _potentials(traps, grid)
    prop = CoupledPropagator(grid, V1, V2, inter, pulse, dt, trap)
    p2 = _to_frame(state.psi2.values, state.time, pulse.detuning)
    p1, p2 = prop.run(state.psi1.values, p2, n_steps)
    t = state.time + n_steps * dt
    p2 = _to_lab(p2, t, pulse.detuning)
    return TwoComponentState(ComplexField(grid, p1, state.psi1.norm_target),
                             ComplexField(grid, p2, state.psi2.norm_target), t)


def propagate_pulse(ground: GroundState, pulse: PulseSpec, traps, inter: InteractionSpec,
                    dt: float = DEFAULT_DT, trap: TrapSpec | None = None
                    ) -> tuple[float, TwoComponentState]:
    """Drive the condensate for the pulse duration starting with |2> empty.

    Returns the final fraction N2 / (N1 + N2) and the final state.
    """
    grid = ground.grid
    if isinstance(traps, TrapSpec):
        trap = traps
    n_steps = max(1, int(round(pulse.duration / dt)))
    dt = pulse.duration / n_steps
    V1, V2 = _potentials(traps, grid)
    prop = CoupledPropagator(grid, V1, V2, inter, pulse, dt, trap)
    p1 = np.array(ground.psi1.values)
    p2 = np.zeros_like(p1)
    p1, p2 = prop.run(p1, p2, n_steps)
    t = n_steps * dt
    final = TwoComponentState(ComplexField(grid, p1, ground.n_atoms),
                              ComplexField(grid, _to_lab(p2, t, pulse.detuning), 0.0), t)
    n1, n2 = final.populations
    return n2 / (n1 + n2), final


def _sweep_point(args):
    ground, pulse, traps, inter, dt, trap = args
    try:
        transfer, final = propagate_pulse(ground, pulse, traps, inter, dt, trap)
        n1, n2 = final.populations
        return transfer, n1 + n2, None
    except Exception as exc:  # reported per detuning
        return None, None, repr(exc)


def sweep_detuning(ground: GroundState, pulse_template: PulseSpec, detunings, traps,
                   inter: InteractionSpec, dt: float = DEFAULT_DT, workers: int | None = None,
                   trap: TrapSpec | None = None) -> Spectrum:
    """Transfer fraction versus drive detuning (Hz), one independent pulse per point.

    Points run on a process pool of ``workers`` (default: all cores).
    Failed points are left out of the curve and listed in
    ``spectrum.meta["failures"]``; the sweep fails only if every point does.
    """
    detunings = [float(d) for d in detunings]
    if not detunings:
        raise ValueError("detuning list is empty")
    tasks = [(ground, pulse_template.with_detuning_hz(d), traps, inter, dt, trap)
             for d in detunings]
    workers = (os.cpu_count() or 1) if workers is None else workers
    if workers <= 1 or len(tasks) == 1:
        results = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, tasks))
    xs, ys, failures, norms = [], [], {}, {}
    for d, (transfer, norm, err) in zip(detunings, results):
        if err is not None:
            failures[d] = err
            log.warning("sweep point %.3f Hz failed: %s", d, err)
            continue
        xs.append(d)
        ys.append(transfer)
        norms[d] = norm
    if not xs:
        raise SolverError(f"all {len(detunings)} sweep points failed: {failures}")
    order = np.argsort(xs, kind="stable")
    spec = Spectrum((), np.asarray(xs)[order], np.asarray(ys)[order], "raw",
                    meta={"failures": failures, "final_norms": norms})
    return spec
