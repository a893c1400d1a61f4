"""Command-line front end: ``quafe <command> [options]``.

Commands emit CSV or JSON tables.  Exit codes: 0 success, 1 configuration
error, 2 circuit-file parse or lowering error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from importlib import resources

import numpy as np

from .circuit import Coupling, run
from .config import RunConfig, load_config, parse_sweep
from .core import lorentz_factors
from .coupler import mean_photon_numbers, sweep_rows
from .dsl import DslError, lower, parse_source
from .errors import ConfigError, QuafeError
from .interference import (
    current_closed_form,
    oracle_current,
    oracle_from_mode_phases,
    single_arm_closed_form,
)
from .noon import VARIANTS, generation_rate, optimize_length_scale
from .waveguide import dispersion_rows, phase_match, solve_dispersion

__all__ = ["main", "build_parser", "BUILTIN_CIRCUITS", "builtin_source", "calibrated_profile"]

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_RUNTIME = 0, 1, 2, 3
BUILTIN_CIRCUITS = ("fig3a", "fig4a", "fig4b")

DISPERSION_COLUMNS = ("kind", "kinetic_energy_keV", "mode", "k_parallel_per_nm", "photon_energy_eV",
                      "decay_length_nm")
COUPLER_COLUMNS = ("kinetic_energy_keV", "mode", "photon_energy_eV", "L_eff_mm", "mean_photons")
NOON_COLUMNS = ("N0", "variant", "s_opt", "probability", "rate_hz")
INTERFERE_COLUMNS = ("phi_ell", "closed_form", "engine")


def builtin_source(name: str) -> str:
    return resources.files("quafe").joinpath(f"programs/{name}.quafe").read_text(encoding="utf-8")


def calibrated_profile(config: RunConfig, energy_keV: float):
    """Phase-matched coupling at ``energy_keV`` with calibrated rates, or None."""
    result = mean_photon_numbers(lorentz_factors(energy_keV * 1e3), config.waveguide, config.calibrated())
    if not result.matched.any():
        return None
    return Coupling.from_result(result)


@contextmanager
def _executor(threads: int):
    if threads == 1:
        yield None
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            yield pool


def _map(pool, fun, items):
    # ThreadPoolExecutor.map yields results in input order
    return list(pool.map(fun, items) if pool else map(fun, items))


def _write(config: RunConfig, columns, rows, extra=None, stdout=None):
    if config.output_format == "json":
        payload = {"columns": list(columns), "rows": [dict(zip(columns, r)) for r in rows]}
        payload.update(extra or {})
        text = json.dumps(payload, indent=2, allow_nan=True) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows([[_cell(v) for v in r] for r in rows])
        text = buf.getvalue()
    _emit(config, text, stdout)


def _emit(config, text, stdout=None):
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        (stdout or sys.stdout).write(text)


def _cell(v):
    return repr(v) if isinstance(v, float) else v


# -- commands ----------------------------------------------------------------

def cmd_dispersion(config: RunConfig, args) -> int:
    branches = solve_dispersion(config.waveguide)
    rows = [("branch", "", m, k, e, lam) for m, k, e, lam in dispersion_rows(branches)]

    def matches(energy):
        beam = lorentz_factors(energy * 1e3)
        return [(energy, phase_match(b, beam)) for b in branches]

    with _executor(config.threads) as pool:
        for found in _map(pool, matches, config.energies_keV):
            for energy, pt in found:
                if pt is not None:
                    rows.append(("phase_match", energy, pt.mode_index, pt.k_parallel, pt.photon_energy,
                                 pt.decay_length))
    _write(config, DISPERSION_COLUMNS, rows)
    return EXIT_OK


def cmd_coupler(config: RunConfig, args) -> int:
    geometry = config.calibrated()
    with _executor(config.threads) as pool:
        rows = sweep_rows(config.waveguide, geometry, [e * 1e3 for e in config.energies_keV], executor=pool)
    _write(config, COUPLER_COLUMNS, rows)
    return EXIT_OK


def cmd_noon(config: RunConfig, args) -> int:
    n0_values = parse_sweep(args.n0, integer=True)
    if n0_values[0] < 1:
        raise ConfigError("--n0 range must start at 1 or above")
    variants = args.variants.split(",")
    bad = [v for v in variants if v not in VARIANTS]
    if bad:
        raise ConfigError(f"unknown variants {bad}; choose from {', '.join(VARIANTS)}")
    profile = calibrated_profile(config, config.energies_keV[0])
    if profile is None:
        raise QuafeError(f"no phase-matched modes at {config.energies_keV[0]} keV")
    base = profile.mean_photons
    jobs = [(n0, v) for n0 in n0_values for v in variants]

    def one(job):
        n0, variant = job
        s, p = optimize_length_scale(base, n0, variant)
        rate = generation_rate(p, config.beam_current_per_s, config.grating_factor)
        return (n0, variant, s, p, rate)

    with _executor(config.threads) as pool:
        rows = _map(pool, one, jobs)
    _write(config, NOON_COLUMNS, rows)
    return EXIT_OK


def _lower_source(source, name, config, params, profile=None):
    if profile is None:
        profile = calibrated_profile(config, config.energies_keV[0])
    return lower(parse_source(source, name), {"calibrated": profile}, params, name)


def _read_circuit(arg):
    if arg in BUILTIN_CIRCUITS:
        return builtin_source(arg), f"{arg}.quafe"
    try:
        with open(arg, encoding="utf-8") as fh:
            return fh.read(), arg
    except OSError as exc:
        raise ConfigError(f"cannot read circuit {arg}: {exc.strerror}") from exc


def cmd_interfere(config: RunConfig, args) -> int:
    source, name = _read_circuit(args.circuit)
    layout = args.layout or ("single-arm" if args.circuit == "fig4b" else "two-arm")
    if args.phi_grid is None:
        # single-arm fringes sit near phi_ell' = pi
        centre = math.pi if layout == "single-arm" else 0.0
        grid = [float(x) for x in centre + np.linspace(-0.05, 0.05, 101)]
    else:
        grid = parse_sweep(args.phi_grid)
    phi_e = args.phi_e
    # lower once up front so parse errors surface before any computation
    profile = calibrated_profile(config, config.energies_keV[0])
    first = _lower_source(source, name, config, {"phi_e": phi_e, "phi_ell": grid[0] if grid else 0.0}, profile)
    couplings = {el.coupling for el in first.elements if hasattr(el, "coupling")}
    if len(couplings) != 1:
        raise QuafeError("closed form needs exactly one coupling profile in the circuit")
    coupling = couplings.pop()
    mean, ratios = np.array(coupling.mean_photons), np.array(coupling.freq_ratios)

    def one(phi):
        circuit = _lower_source(source, name, config, {"phi_e": phi_e, "phi_ell": phi}, profile)
        engine = float(run(circuit).current)
        if layout == "single-arm":
            closed = float(single_arm_closed_form(mean, ratios, phi_e, phi))
            oracle = (oracle_from_mode_phases(mean, math.pi - phi * ratios, phi_e) if args.oracle else None)
        else:
            closed = float(current_closed_form(mean, ratios, phi_e, phi))
            oracle = oracle_current(mean, ratios, phi_e, phi) if args.oracle else None
        return (phi, closed, engine) + ((oracle,) if args.oracle else ())

    with _executor(config.threads) as pool:
        rows = _map(pool, one, grid)
    dev = max((abs(r[2] - r[1]) for r in rows), default=0.0)
    columns = INTERFERE_COLUMNS + (("oracle",) if args.oracle else ())
    print(f"max |engine - closed_form| = {dev:.3e}", file=sys.stderr)
    _write(config, columns, rows, {"max_abs_engine_minus_closed_form": dev})
    return EXIT_OK


def cmd_run(config: RunConfig, args) -> int:
    source, name = _read_circuit(args.circuit)
    params = {"phi_e": args.phi_e} if args.phi_e is not None else {}
    for item in args.param or ():
        key, sep, value = item.partition("=")
        try:
            params[key] = float(value)
        except ValueError:
            raise ConfigError(f"--param expects name=number, got {item!r}") from None
        if not sep:
            raise ConfigError(f"--param expects name=number, got {item!r}")
    circuit = _lower_source(source, name, config, params)
    report = run(circuit, min_probability=args.min_probability)
    _emit(config, json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


# -- argument handling -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file (defaults are shipped)")
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--threads", type=int, help="worker threads for sweeps")
    energy = common.add_mutually_exclusive_group()
    energy.add_argument("--energy", type=float, help="beam kinetic energy in keV")
    energy.add_argument("--energy-sweep", help="lo:hi:steps in keV")

    parser = argparse.ArgumentParser(prog="quafe", description="Free-electron quantum optics toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("dispersion", parents=[common], help="mode branches and phase-match points")
    sub.add_parser("coupler", parents=[common], help="L_eff and mean photon numbers per mode")
    p = sub.add_parser("noon", parents=[common], help="optimised NOON generation probabilities")
    p.add_argument("--n0", default="1:20", help="integer range lo:hi")
    p.add_argument("--variants", default=",".join(VARIANTS), help="comma-separated list")
    p = sub.add_parser("interfere", parents=[common], help="current versus optical phase")
    p.add_argument("circuit", nargs="?", default="fig4a", help="fig4a, fig4b or a .quafe file")
    p.add_argument("--phi-e", type=float, default=math.pi / 2, help="electron phase in rad")
    p.add_argument("--phi-grid", help="lo:hi:steps in rad (write --phi-grid=-a:b:n for negative lo); "
                   "default 101 points within 0.05 rad of the fringe centre")
    p.add_argument("--layout", choices=("two-arm", "single-arm"), help="closed form to compare with")
    p.add_argument("--oracle", action="store_true", help="add the brute-force number-basis column")
    p = sub.add_parser("run", parents=[common], help="simulate a .quafe circuit, print a JSON report")
    p.add_argument("circuit", help="fig3a, fig4a, fig4b or a .quafe file")
    p.add_argument("--phi-e", type=float, help="binds $phi_e")
    p.add_argument("--param", action="append", help="binds $name: name=value (rad)")
    p.add_argument("--min-probability", type=float, default=1e-12,
                   help="omit heralded outcomes below this probability")
    return parser


COMMANDS = {
    "dispersion": cmd_dispersion,
    "coupler": cmd_coupler,
    "noon": cmd_noon,
    "interfere": cmd_interfere,
    "run": cmd_run,
}


def _config_from_args(args) -> RunConfig:
    config = load_config(args.config)
    energies = None
    if args.energy is not None:
        energies = (args.energy,)
    elif args.energy_sweep is not None:
        energies = tuple(parse_sweep(args.energy_sweep))
    return config.with_overrides(output_format=args.format, out=args.out, threads=args.threads,
                                 energies_keV=energies)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command in ("noon", "interfere", "run") and not config.energies_keV:
            raise ConfigError(f"{args.command} needs a beam energy")
    except ConfigError as exc:
        print(f"quafe: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](config, args)
    except DslError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARSE
    except ConfigError as exc:
        print(f"quafe: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuafeError, OSError, ArithmeticError) as exc:
        print(f"quafe: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
