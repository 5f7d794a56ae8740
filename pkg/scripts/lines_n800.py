"""Print HF line positions, weights and 30 nK occupations for the N=800 preset."""

import argparse
import warnings

from bec_sideband.config import parse_config
from bec_sideband.core import H_PLANCK, GridResolutionWarning, build_grid
from bec_sideband.eigenmodes import effective_potential, lowest_eigenpairs
from bec_sideband.groundstate import solve_groundstate
from bec_sideband.spectra import (bose_occupations, level_occupations, thermal_lines,
                                  zero_temperature_lines)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--temperature-nk", type=float, default=30.0)
    p.add_argument("--delta-x-um", type=float, default=0.13)
    p.add_argument("-k", type=int, default=10)
    args = p.parse_args()

    cfg = parse_config(preset="paper_n800",
                       extra=f"trap.delta_x_um = {args.delta_x_um}\nmodes.k = {args.k}")
    trap, inter = cfg.trap(), cfg.interaction()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridResolutionWarning)
        grid = build_grid(trap, cfg.n_atoms, cfg.dims, cfg["grid.extent_factor"], inter)
    gs = solve_groundstate(grid, trap, inter, cfg.n_atoms)
    m1 = lowest_eigenpairs(effective_potential(1, gs, trap, inter), k=args.k)
    m2 = lowest_eigenpairs(effective_potential(2, gs, trap, inter), k=args.k)
    print(f"mu/h = {gs.mu_hz:.2f} Hz")

    print("zero temperature lines (Hz, weight):")
    for line in sorted(zero_temperature_lines(gs, m2), key=lambda l: l.detuning):
        if line.weight > 1e-3:
            print(f"  {line.detuning:9.2f}  {line.weight:10.4f}")

    occ = bose_occupations(m1, gs.mu, args.temperature_nk * 1e-9)
    levels, counts = level_occupations(occ, m1)
    print(f"T = {args.temperature_nk} nK: excited atoms {occ.total_excited:.2f}")
    for e, n in zip(levels[:5], counts[:5]):
        print(f"  level {(e - gs.mu) / H_PLANCK:8.2f} Hz above mu: {n:.3f} atoms")
    strongest = sorted(thermal_lines(m1, m2, occ), key=lambda l: -l.weight)[:5]
    print("strongest thermal lines (Hz, weight, alpha -> beta):")
    for line in strongest:
        print(f"  {line.detuning:9.2f}  {line.weight:8.4f}  {line.alpha} -> {line.beta}")


if __name__ == "__main__":
    main()
