"""Command-line front end: ``bec-sideband {ground,modes,spectrum,sweep}``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .config import ConfigError, RunConfig, parse_config
from .core import H_PLANCK, build_grid
from .dynamics import sweep_detuning
from .eigenmodes import effective_potential, lowest_eigenpairs
from .groundstate import solve_groundstate
from .serialize import write_checkpoint, write_spectrum
from .spectra import (Spectrum, bose_occupations, convolve_lineshape, find_peaks,
                      high_temperature_spectrum, sideband_peaks, thermal_lines,
                      zero_temperature_lines)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
# Reported peaks must exceed this fraction of the maximum; the first side
# lobe of the square-pulse lineshape sits near 0.11.
PEAK_LEVEL = 0.2

COMMAND_MODELS = {
    "ground": ("ground",),
    "modes": ("modes",),
    "spectrum": ("spectrum_zero_t", "spectrum_thermal", "spectrum_high_t"),
    "sweep": ("sweep",),
}


def _ground(cfg: RunConfig):
    trap, inter = cfg.trap(), cfg.interaction()
    grid = build_grid(trap, cfg.n_atoms, cfg.dims, cfg["grid.extent_factor"], inter,
                      strict=cfg["grid.strict"])
    dt = cfg["solver.dt_imag_factor"] / trap.omega_max
    return solve_groundstate(grid, trap, inter, cfg.n_atoms, dt_imag=dt, tol=cfg["solver.tol"])


def _hf_modes(cfg: RunConfig, ground):
    trap, inter = cfg.trap(), cfg.interaction()
    k = cfg["modes.k"]
    m1 = lowest_eigenpairs(effective_potential(1, ground, trap, inter), k=k)
    m2 = lowest_eigenpairs(effective_potential(2, ground, trap, inter), k=k)
    return m1, m2


def _spectrum(cfg: RunConfig, summary: dict) -> Spectrum:
    trap = cfg.trap()
    pulse = cfg.pulse()
    T = cfg["thermal.temperature_nk"] * 1e-9
    fwhm, step = cfg["spectrum.fwhm_hz"], cfg["spectrum.step_hz"]
    if cfg.model == "spectrum_high_t":
        if T <= 0:
            raise ConfigError("spectrum_high_t needs a positive temperature",
                              "thermal.temperature_nk")
        spec = high_temperature_spectrum(trap, cfg.n_atoms, T, cfg["modes.k"], pulse,
                                         fwhm_hz=fwhm)
        groups = sideband_peaks(spec, trap.fx)
        summary["sideband_groups"] = {str(m): p for m, p in sorted(groups.items())}
        return spec
    ground = _ground(cfg)
    summary["mu_hz"] = ground.mu_hz
    m1, m2 = _hf_modes(cfg, ground)
    lines = zero_temperature_lines(ground, m2, trap.bottom_offset)
    if cfg.model == "spectrum_thermal" and T > 0:
        occ = bose_occupations(m1, ground.mu, T)
        summary["thermal_excitations"] = occ.total_excited
        lines += thermal_lines(m1, m2, occ, trap.bottom_offset)
    return convolve_lineshape(lines, pulse, step_hz=step, fwhm_hz=fwhm)


def run(cfg: RunConfig, out_dir, fmt: str = "csv", stream=None) -> dict:
    """Execute ``cfg``, write its artifacts into ``out_dir`` and return a summary."""
    stream = sys.stdout if stream is None else stream
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = cfg.render()
    (out / "config.resolved").write_text(resolved, encoding="utf-8")
    for line in resolved.splitlines():
        print(f"# {line}", file=stream)
    t0 = time.perf_counter()
    summary = {"model": cfg.model}
    config = cfg.as_dict()

    if cfg.model == "ground":
        ground = _ground(cfg)
        write_checkpoint(ground.psi1, out / "ground.becw")
        ek, ep, ei = ground.energies
        summary.update(mu_hz=ground.mu_hz, e_kin_hz=ek / H_PLANCK, e_pot_hz=ep / H_PLANCK,
                       e_int_hz=ei / H_PLANCK, iterations=ground.convergence_report.iterations,
                       residual=ground.convergence_report.residual)
        with open(out / "ground.json", "w", encoding="utf-8") as fh:
            json.dump({"summary": summary, "config": config}, fh, indent=1)
            fh.write("\n")
    elif cfg.model == "modes":
        ground = _ground(cfg)
        m1, m2 = _hf_modes(cfg, ground)
        summary["mu_hz"] = ground.mu_hz
        rows = [(s, i, e / H_PLANCK, (e - ground.mu) / H_PLANCK, r / H_PLANCK)
                for s, ms in ((1, m1), (2, m2))
                for i, (e, r) in enumerate(zip(ms.energies, ms.residuals))]
        if fmt == "json":
            doc = {"modes": [dict(zip(("species", "index", "energy_hz", "energy_minus_mu_hz",
                                       "residual_hz"), r)) for r in rows],
                   "mu_hz": ground.mu_hz, "config": config}
            with open(out / "modes.json", "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=1)
                fh.write("\n")
        else:
            with open(out / "modes.csv", "w", encoding="utf-8") as fh:
                fh.write("species,index,energy_hz,energy_minus_mu_hz,residual_hz\n")
                for s, i, e, de, r in rows:
                    fh.write(f"{s},{i},{e:.17g},{de:.17g},{r:.17g}\n")
    elif cfg.model.startswith("spectrum"):
        spec = _spectrum(cfg, summary)
        if "sideband_groups" in summary:
            summary["peaks_hz"] = [p[0] for p in summary["sideband_groups"].values()]
        else:
            summary["peaks_hz"] = [float(p) for p in find_peaks(spec, PEAK_LEVEL)]
        write_spectrum(spec, out / f"spectrum.{fmt}", fmt, config)
    elif cfg.model == "sweep":
        det = cfg.detunings()
        if det.size == 0:
            raise ConfigError("detuning list is empty", "sweep.points")
        ground = _ground(cfg)
        summary["mu_hz"] = ground.mu_hz
        workers = cfg["workers"] or None
        spec = sweep_detuning(ground, cfg.pulse(), det, cfg.trap(), cfg.interaction(),
                              cfg["solver.dt_real_us"] * 1e-6, workers)
        summary["peaks_hz"] = [float(p) for p in find_peaks(spec, PEAK_LEVEL)]
        summary["failed_points"] = len(spec.meta.get("failures", {}))
        write_spectrum(spec, out / f"sweep.{fmt}", fmt, config)
    else:  # pragma: no cover - guarded by config validation
        raise ConfigError(f"unhandled model {cfg.model!r}", "model")

    summary["runtime_s"] = time.perf_counter() - t0
    print(_summary_line(summary), file=stream)
    return summary


def _summary_line(summary: dict) -> str:
    parts = [f"model={summary['model']}"]
    if "mu_hz" in summary:
        parts.append(f"mu/h={summary['mu_hz']:.3f} Hz")
    if "peaks_hz" in summary:
        parts.append("peaks=[" + ", ".join(f"{p:.2f}" for p in summary["peaks_hz"]) + "] Hz")
    if "thermal_excitations" in summary:
        parts.append(f"thermal_excitations={summary['thermal_excitations']:.2f}")
    parts.append(f"runtime={summary['runtime_s']:.1f} s")
    return " ".join(parts)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bec-sideband", description=__doc__)
    p.add_argument("command", choices=sorted(COMMAND_MODELS))
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--preset", help="preset merged before the config file")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="extra config line, applied after the file")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = ""
        if args.config is not None:
            text = args.config.read_text(encoding="utf-8")
        extra = "\n".join(args.set)
        cfg = parse_config(text, preset=args.preset, extra=extra)
        allowed = COMMAND_MODELS[args.command]
        if cfg.model not in allowed:
            # The command picks the model unless the model key names a
            # variant of it; "spectrum" falls back to the zero-T variant.
            if len(allowed) == 1 or cfg.model == "ground":
                cfg = parse_config(text, preset=args.preset, extra=extra,
                                   overrides={"model": allowed[0]})
            else:
                raise ConfigError(f"model {cfg.model!r} does not fit command "
                                  f"{args.command!r}", "model")
        run(cfg, args.out, args.format)
    except ValueError as exc:  # ConfigError and invalid parameter combinations
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as exc:  # SolverError, EigenConvergenceError, fugacity failures
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
