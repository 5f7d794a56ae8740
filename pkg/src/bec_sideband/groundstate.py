"""Stationary Gross-Pitaevskii ground state of the |1> condensate.

The solver runs norm-preserving imaginary-time Strang splitting from a
Gaussian seed, then removes the residual splitting bias with a
preconditioned nonlinear conjugate-gradient polish on the discretized
energy functional. The polish is what makes the returned state a
stationary point of the *spatially* discretized GPE to near machine
precision, so real-time propagation of it is stationary too.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import zeta

from .core import (A0, H_PLANCK, HBAR, KB, MASS, ComplexField, Grid, InteractionSpec,
                   TrapSpec, energy_functionals, kinetic_prefactor, trap_potential)

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Raised when an iteration produces non-finite values or fails to converge."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = [] if history is None else list(history)


class ConvergenceError(SolverError):
    pass


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    iterations: int
    residual: float
    refine_iterations: int = 0
    energy_history: np.ndarray = field(default_factory=lambda: np.empty(0))


@dataclass(frozen=True, eq=False)
class GroundState:
    psi1: ComplexField
    mu: float
    energies: tuple[float, float, float]
    n_atoms: float
    convergence_report: ConvergenceReport
    g_eff: float = 0.0

    @property
    def mu_hz(self) -> float:
        return self.mu / H_PLANCK

    @property
    def grid(self) -> Grid:
        return self.psi1.grid


def effective_coupling(grid: Grid, trap: TrapSpec, g: float) -> float:
    """3D coupling unchanged; on an x-only grid divide by the transverse Gaussian area."""
    if grid.ndim == 3:
        return g
    w_perp = np.sqrt(trap.omegas[1] * trap.omegas[2])
    a_perp2 = HBAR / (MASS * w_perp)
    return g / (2 * np.pi * a_perp2)


def thomas_fermi_mu(trap: TrapSpec, inter: InteractionSpec, n_atoms: float) -> float:
    """(hbar w_bar / 2) (15 N a11 / a_ho)^(2/5)."""
    w_bar = trap.omega_bar
    a_ho = np.sqrt(HBAR / (MASS * w_bar))
    return float(0.5 * HBAR * w_bar * (15 * n_atoms * inter.a11 * A0 / a_ho) ** 0.4)


def carrier_shift(mu: float, inter: InteractionSpec) -> float:
    """Mean-field shift of the carrier line in Hz, mu (a12/a11 - 1) / h."""
    if inter.a11 <= 0:
        raise ValueError("a11 must be positive")
    return mu * (inter.a12 / inter.a11 - 1) / H_PLANCK


def critical_temperature(trap: TrapSpec, inter: InteractionSpec, n_atoms: float,
                         corrections: bool = True) -> float:
    """BEC transition temperature in K.

    With ``corrections`` the ideal harmonic-trap value receives the
    leading finite-size and interaction shifts.
    """
    if n_atoms < 2:
        raise ValueError("n_atoms must be >= 2")
    w_bar = trap.omega_bar
    tc0 = HBAR * w_bar * (n_atoms / zeta(3)) ** (1 / 3) / KB
    if not corrections:
        return float(tc0)
    w_mean = trap.omegas.mean()
    a_ho = np.sqrt(HBAR / (MASS * w_bar))
    shift = (-0.73 * (w_mean / w_bar) * n_atoms ** (-1 / 3)
             - 1.33 * (inter.a11 * A0 / a_ho) * n_atoms ** (1 / 6))
    return float(tc0 * (1 + shift))


def _total_energy(psi, V, g):
    return sum(energy_functionals(psi, V, g))


def _imaginary_time(values, grid, V, g, n_atoms, dt, tol, max_iter, descent_tol=1e-12):
    """Normalized imaginary-time Strang splitting.

    A step that raises the energy by more than ``descent_tol`` (relative)
    is rejected and the time step halved, so the accepted energy history
    is non-increasing. Returns the field, the number of steps taken and the
    accepted energy history.
    """
    dV = grid.dV
    tk = kinetic_prefactor() * grid.k_squared()

    def renorm(v):
        return v * np.sqrt(n_atoms / (np.sum(np.abs(v) ** 2) * dV))

    def energy(v):
        return _total_energy(ComplexField(grid, v, n_atoms), V, g)

    psi = renorm(values)
    history = [energy(psi)]
    kin_factor = np.exp(-tk * dt / HBAR)
    for it in range(1, max_iter + 1):
        half = dt / (2 * HBAR)
        new = psi * np.exp(-(V + g * np.abs(psi) ** 2) * half)
        new = np.fft.ifftn(kin_factor * np.fft.fftn(new))
        new = new * np.exp(-(V + g * np.abs(new) ** 2) * half)
        new = renorm(new)
        e = energy(new)
        if not np.isfinite(e):
            raise SolverError(f"non-finite energy at imaginary-time step {it}", history)
        if e > history[-1] + descent_tol * abs(history[-1]):
            dt /= 2
            kin_factor = np.exp(-tk * dt / HBAR)
            continue
        psi = new
        history.append(e)
        if abs(history[-2] - e) < tol * abs(e):
            return psi, it, np.array(history)
    raise ConvergenceError(f"imaginary time did not converge in {max_iter} steps", history)


def refine_groundstate(values, grid, V, g, n_atoms, res_tol=1e-11, max_iter=5000):
    """Preconditioned Polak-Ribiere conjugate gradient on the GPE energy.

    Works on the sphere ||psi||^2 = N with exact geodesic-style updates
    ``cos(t) psi + sin(t) p``; the kinetic preconditioner is
    ``(T + mu)^-1``. Returns the polished field, iteration count and the
    final relative residual ``||H psi - mu psi|| / (mu sqrt(N))``.
    """
    dV = grid.dV
    tk = kinetic_prefactor() * grid.k_squared()

    def dot(a, b):
        return float(np.real(np.vdot(a, b)) * dV)

    def h_lin(v):
        return np.fft.ifftn(tk * np.fft.fftn(v)) + V * v

    psi = values * np.sqrt(n_atoms / dot(values, values))
    hpsi = h_lin(psi)
    p_prev = None
    r_prev = pr_prev = None
    residual = np.inf
    for it in range(max_iter + 1):
        rho = np.abs(psi) ** 2
        grad = hpsi + g * rho * psi
        mu = dot(psi, grad) / n_atoms
        r = grad - mu * psi
        residual = np.sqrt(dot(r, r) / n_atoms) / abs(mu)
        if not np.isfinite(residual):
            raise SolverError(f"non-finite residual at refinement step {it}")
        if residual < res_tol or it == max_iter:
            break
        pr = np.fft.ifftn(np.fft.fftn(r) / (tk + abs(mu)))
        pr -= dot(psi, pr) / n_atoms * psi
        d = -pr
        if p_prev is not None:
            beta = max(0.0, dot(r, pr - pr_prev) / dot(r_prev, pr_prev))
            d = d + beta * p_prev
            d -= dot(psi, d) / n_atoms * psi
            if dot(d, r) >= 0:
                d = -pr
        pnorm = np.sqrt(dot(d, d))
        if pnorm == 0:
            break
        phat = d * np.sqrt(n_atoms) / pnorm
        hp = h_lin(phat)
        a_ = dot(psi, hpsi)
        b_ = dot(psi, hp)
        c_ = dot(phat, hp)

        def slope(t):
            # dE/dt along the curve; root-finding on the slope stays accurate
            # long after energy differences drop below rounding.
            c, s = np.cos(t), np.sin(t)
            lin = 2 * s * c * (c_ - a_) + 2 * (c * c - s * s) * b_
            v = c * psi + s * phat
            dv = c * phat - s * psi
            return lin + 2 * g * np.sum(np.abs(v) ** 2 * np.real(np.conj(v) * dv)) * dV

        t_hi = 1e-3
        while slope(t_hi) < 0 and t_hi < 1.0:
            t_hi *= 4
        t = brentq(slope, 0.0, t_hi, xtol=1e-16, rtol=1e-14) if slope(t_hi) >= 0 else t_hi
        c, s = np.cos(t), np.sin(t)
        psi = c * psi + s * phat
        hpsi = c * hpsi + s * hp
        p_prev, r_prev, pr_prev = d, r, pr
        if it % 20 == 19:
            # Guard against drift of the cached h*psi and the norm.
            psi *= np.sqrt(n_atoms / dot(psi, psi))
            hpsi = h_lin(psi)
    return psi, it, residual


def solve_groundstate(grid: Grid, trap: TrapSpec, inter: InteractionSpec, n_atoms: float,
                      dt_imag: float | None = None, tol: float = 1e-10,
                      max_iter: int = 200_000, refine: bool = True,
                      refine_tol: float = 1e-11, seed: ComplexField | None = None) -> GroundState:
    """Ground state of the |1> condensate in the harmonic trap of ``trap``.

    On an x-only grid the effective-1D coupling is used; energies then
    exclude the transverse zero-point energy, which cancels in every
    transition frequency.

    Raises
    ------
    ConvergenceError
        Imaginary time did not reach ``tol`` within ``max_iter`` steps.
    SolverError
        A non-finite value appeared.
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if dt_imag is None:
        dt_imag = 0.1 / trap.omega_max
    if dt_imag <= 0:
        raise ValueError("dt_imag must be positive")

    V = trap_potential(trap, grid, species=1)
    g = effective_coupling(grid, trap, inter.g11)

    if seed is None:
        from .core import thomas_fermi_radii

        widths = np.maximum(trap.oscillator_lengths(),
                            0.5 * thomas_fermi_radii(trap, inter, n_atoms))[: grid.ndim]
        coords = grid.mesh()
        values = np.exp(-sum(r**2 / (2 * w**2) for r, w in zip(coords, widths))) + 0j
    else:
        values = np.array(seed.values)

    psi, n_it, history = _imaginary_time(values, grid, V, g, n_atoms, dt_imag, tol, max_iter)
    n_ref = 0
    if refine:
        psi, n_ref, residual = refine_groundstate(psi, grid, V, g, n_atoms, res_tol=refine_tol)
    # Fix the global phase so the state is real and positive at its peak.
    peak = psi.flat[np.argmax(np.abs(psi))]
    psi = psi * np.conj(peak) / abs(peak)
    field_ = ComplexField(grid, psi, n_atoms).normalized()
    e_kin, e_pot, e_int = energy_functionals(field_, V, g)
    mu = (e_kin + e_pot + 2 * e_int) / n_atoms

    tk = kinetic_prefactor() * grid.k_squared()
    v = field_.values
    hv = np.fft.ifftn(tk * np.fft.fftn(v)) + (V + g * np.abs(v) ** 2) * v
    residual = np.sqrt(np.sum(np.abs(hv - mu * v) ** 2) * grid.dV / n_atoms) / mu
    log.info("ground state: mu/h=%.3f Hz after %d+%d iterations, residual %.2e",
             mu / H_PLANCK, n_it, n_ref, residual)

    report = ConvergenceReport(n_it, float(residual), n_ref, history)
    return GroundState(field_, float(mu), (e_kin, e_pot, e_int), float(n_atoms), report, g)
