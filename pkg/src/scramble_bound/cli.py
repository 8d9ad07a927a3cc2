"""Command-line entry point: ``scramble-bound <mode> --config <path>``."""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bound, continuum, dynamics, io
from .config import MODES, parse_config
from .errors import LineError, ScrambleError
from .operators import (
    DensityOperator,
    SubsystemSplit,
    maximally_mixed,
    pure_state,
    sample_gue,
    thermal_state,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
INEQ_ATOL = 1e-9
ANCHOR_ATOL = 1e-12
VERIFY_ELLS = (0.5, bound.ELL_OPT, 1.0)


class Outputs:
    """Tracks written files so a failed run can remove them."""

    def __init__(self, directory):
        self.dir = Path(directory)
        self.written = []

    def path(self, name):
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / name
        self.written.append(p)
        return p

    def discard(self):
        for p in self.written:
            p.unlink(missing_ok=True)
        self.written.clear()


def _check(value, passed, **extra):
    return {"value": value, "passed": bool(passed), **extra}


def _config_echo(cfg):
    echo = dataclasses.asdict(cfg)
    echo.pop("out")
    return echo


# --- model construction -------------------------------------------------------


def load_env_state(path):
    path = Path(path)
    rho = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, dtype=complex, delimiter=",")
    return DensityOperator(np.atleast_2d(rho))


def build_system(cfg):
    """Random Hamiltonian and environment state for the configured sizes."""
    split = SubsystemSplit(cfg.n_s, cfg.n_e)
    rng = np.random.default_rng(cfg.seed)
    h_env = sample_gue(split.d_e, rng.integers(2**63))
    if cfg.ensemble == "free":
        h = np.kron(np.eye(split.d_s), h_env)
    else:
        h = sample_gue(split.d, rng.integers(2**63))
    if cfg.environment == "thermal":
        rho = thermal_state(h_env, cfg.beta)
    elif cfg.environment == "pure":
        rho = pure_state(split.d_e)
    elif cfg.environment == "mixed":
        rho = maximally_mixed(split.d_e)
    else:
        rho = load_env_state(cfg.env_file)
    return dynamics.FiniteSystem.build(h, rho, split, cfg.beta)


def build_dos(cfg):
    """The density of states named by ``cfg.source`` and its fidelity."""
    if cfg.source == "spectrum":
        dos = io.import_spectrum(cfg.spectrum_file, beta=cfg.beta, f_beta=cfg.f_beta)
        return dos, cfg.f_beta
    if cfg.source == "triangle":
        return bound.TriangleDOS(bound.reference_beta(cfg.beta)), cfg.f_beta
    system = build_system(cfg)
    return system.dos, system.f_beta


def _interval(cfg):
    return bound.StripInterval(*cfg.strip_interval)


def _grid(cfg):
    return dynamics.TimeGrid(cfg.t_min, cfg.grid_t_max, cfg.points)


# --- modes --------------------------------------------------------------------


def run_simulate(cfg, out):
    system = build_system(cfg)
    grid = _grid(cfg)
    times = grid.times
    p_s = np.array([dynamics.return_probability(system.spectrum, system.sqrt_rho_env, system.split, t) for t in times])
    purity = np.array(
        [dynamics.mean_reduced_purity(system.spectrum, system.sqrt_rho_env, system.split, t)[0] for t in times]
    )
    dos = system.dos
    k_beta = dynamics.regularized_sff(dos, times)
    n_sq = np.abs(dos.char(times)) ** 2

    io.write_trace(out.path("P_S.csv"), times, p_s)
    io.write_trace(out.path("K_beta.csv"), times, k_beta)
    io.write_trace(out.path("N_abs_sq.csv"), times, n_sq)
    io.write_trace(out.path("purity.csv"), times, purity)

    f = system.f_beta
    checks = {
        "P_S_ge_K_beta": _check(float(np.min(p_s - k_beta)), np.all(p_s >= k_beta - INEQ_ATOL)),
        "purity_ge_P_S_sq": _check(float(np.min(purity - p_s**2)), np.all(purity >= p_s**2 - INEQ_ATOL)),
    }
    if cfg.t_min == 0:
        z0 = dynamics.partition_function(dos, 0.0)
        checks["P_S_at_0"] = _check(float(p_s[0]), abs(p_s[0] - 1) <= ANCHOR_ATOL)
        checks["K_beta_at_0"] = _check(float(k_beta[0]), abs(k_beta[0] - f**2) <= ANCHOR_ATOL)
        checks["Z_at_0"] = _check(z0, abs(z0 - 1) <= ANCHOR_ATOL)
    summary = {"config": _config_echo(cfg), "f_beta": f, "checks": checks}
    io.write_json(out.path("summary.json"), summary)
    return summary, all(c["passed"] for c in checks.values())


def run_bound(cfg, out):
    dos, f_beta = build_dos(cfg)
    p_scr = cfg.p_scr if cfg.p_scr is not None else math.exp(-cfg.s2s / 2)
    trail = None
    if cfg.strip == "optimize":
        interval, report, trail = bound.optimize_interval(
            dos, cfg.beta, f_beta, p_scr, cfg.ell, cfg.max_width, cfg.opt_points
        )
    else:
        interval = _interval(cfg)
    if cfg.s2s is not None:
        report = bound.ts_entropy_lower_bound(dos, interval, f_beta, cfg.s2s, cfg.ell)
    else:
        report = bound.ts_lower_bound(dos, interval, f_beta, p_scr, cfg.ell)
    thermo = bound.lambda_thermo(dos, interval)
    lt = report.lambda_tilde
    agree = abs(thermo - lt) <= 1e-6 * max(1.0, abs(lt))
    result = {
        "config": _config_echo(cfg),
        "report": report.to_dict(),
        "lambda_thermo": thermo,
        "checks": {"lambda_routes_agree": _check(thermo - lt, agree)},
    }
    io.write_json(out.path("bound_report.json"), result)
    if trail is not None:
        cols = list(zip(*trail))
        io.write_columns(out.path("optimizer_trail.csv"), ["tau1", "tau2", "ts"], cols)
    return result, agree


def run_continuum(cfg, out):
    profile = continuum.ContinuumProfile.build(cfg.width)
    times = _grid(cfg).times
    values, logs = continuum.self_convolution(times, profile)
    log_gh = continuum.log_g(times / 2, profile.width)
    log_bound = math.log(profile.c_const) + log_gh
    log_bound_norm = math.log(profile.c_normalized) + log_gh
    gauss = continuum.gaussian_reference(profile, spacing=cfg.energy_spacing, times=times)
    spectrum = continuum.RegularizedDOS(
        gauss.energies, gauss.dos / gauss.dos.sum(), beta=None, f_beta=1.0
    )

    io.write_columns(out.path("ntilde.csv"), ["t", "value", "log_value", "gaussian"],
                     [times, values, logs, gauss.gaussian_ntilde])
    io.write_columns(out.path("dos.csv"), ["E", "value", "gaussian"],
                     [gauss.energies, gauss.dos, gauss.gaussian_dos])
    io.write_columns(out.path("envelope.csv"), ["t", "log_n", "log_bound", "log_bound_normalized"],
                     [times, logs, log_bound, log_bound_norm])
    io.export_spectrum(spectrum, out.path("continuum_spectrum.txt"))

    slope = continuum.double_exponential_slope(profile)
    at_zero = values[np.argmin(np.abs(times))]
    checks = {
        "ntilde_at_0": _check(float(at_zero), abs(at_zero - 1) <= 1e-8 or times.min() > 0),
        "dos_mass": _check(gauss.mass, abs(gauss.mass - 1) <= 1e-5),
        "dos_nonnegative": _check(float(gauss.dos.min()), gauss.dos.min() >= 0),
        "ridge": _check(float(values.max()), values.max() <= 1 + 1e-12),
        "envelope_normalized": _check(
            float(np.min(log_bound_norm - logs)), np.all(logs <= log_bound_norm + 1e-9)
        ),
    }
    info = {
        "envelope_unnormalized_min_slack": float(np.min(log_bound - logs)),
        "double_exponential_slope": slope,
        "slope_reference": math.pi / (2 * profile.width),
    }
    if cfg.d_s is not None:
        info["ts_upper"] = dataclasses.asdict(
            continuum.continuum_ts_upper(cfg.d_s, cfg.epsilon, 1.0, profile)
        )
    result = {
        "config": _config_echo(cfg),
        "profile": {**dataclasses.asdict(profile), "c_normalized": profile.c_normalized},
        "sigma_sq": gauss.sigma_sq,
        "info": info,
        "checks": checks,
    }
    io.write_json(out.path("continuum_report.json"), result)
    return result, all(c["passed"] for c in checks.values())


def run_verify(cfg, out):
    dos, _ = build_dos(cfg)
    interval = _interval(cfg)
    grid = _grid(cfg)
    trace = dynamics.SignalTrace(grid, np.abs(dos.char(grid.times)) ** 2, "N_abs_sq")
    zmax, _ = bound.z_max(dos, interval)

    theorem = {}
    for ell in sorted(set(VERIFY_ELLS) | {cfg.ell}):
        params = bound.theorem_envelope(dos, interval, ell)
        rep = bound.exceptional_set_measure(trace, params, ell)
        theorem[format(ell, ".6g")] = {
            "length": rep.length,
            "budget": rep.budget,
            "spacing": rep.spacing,
            "passed": rep.passed,
        }

    def f_sampler(z):
        t, tau = bound.halfplane_to_strip(z, interval)
        return dos.char(t, tau) / zmax

    lemma2 = bound.verify_lemma2(f_sampler, cfg.ell, theta_points=513, r_points=1001)
    probes = [r * np.exp(1j * th) for r in (0.5, 1.0, 2.0, 5.0) for th in (-1.0, 0.0, 1.0)]
    lemma1 = bound.verify_lemma1(f_sampler, lemma2.lam, lemma2.v_set, probes)
    checks = {f"theorem_ell_{k}": v["passed"] for k, v in theorem.items()}
    checks["lemma2"] = lemma2.holds
    checks["lemma1"] = lemma1.holds
    result = {
        "config": _config_echo(cfg),
        "z_max": zmax,
        "theorem": theorem,
        "lemma2": dataclasses.asdict(lemma2),
        "lemma1": {
            "log_length": lemma1.log_length,
            "min_slack": lemma1.min_slack,
            "holds": lemma1.holds,
            "v_condition": lemma1.v_condition,
        },
        "checks": checks,
    }
    io.write_json(out.path("verify_report.json"), result)
    return result, all(checks.values())


RUNNERS = {
    "simulate": run_simulate,
    "bound": run_bound,
    "continuum": run_continuum,
    "verify": run_verify,
}


def run(cfg, out_dir=None, quiet=False):
    """Execute a parsed configuration; returns the process exit status."""
    out = Outputs(out_dir if out_dir is not None else cfg.out)
    try:
        result, passed = RUNNERS[cfg.mode](cfg, out)
    except (ScrambleError, ValueError, OverflowError, OSError) as exc:
        out.discard()
        print(f"scramble-bound {cfg.mode}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if not quiet:
        for name, check in result.get("checks", {}).items():
            ok = check["passed"] if isinstance(check, dict) else check
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
        for p in out.written:
            print(f"wrote {p}")
    return EXIT_OK if passed else EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scramble-bound",
        description="Scrambling-time bounds, spectral form factors and continuum checks.",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="flat key = value run file")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, help="random seed (overrides the config)")
    parser.add_argument("--quiet", action="store_true", help="suppress the summary")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        with warnings.catch_warnings():
            if args.quiet:
                warnings.simplefilter("ignore")
            cfg = parse_config(text, mode=args.mode)
    except (LineError, OSError, UnicodeDecodeError) as exc:
        print(f"scramble-bound: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        cfg.seed = args.seed
    return run(cfg, args.out, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
