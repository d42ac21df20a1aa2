"""Command-line front end: sweeps, spectra, disorder studies, shim runs, oracle checks.

Every run writes a manifest with the fully resolved configuration next to its
outputs.  Exit codes: 0 success (including flagged non-convergence), 2 config
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .model import AnnealSchedule, ChainSpec, ScheduleError, critical_s, feasibility_check
from .blocks import IntegrationError, sample_disorder
from .observables import kink_density, kz_fit, quench_sweep, solve_chain, staggered_kink_diff
from .ed import DenseQuenchProblem, ed_evolve, ed_observables
from .spectral import (
    attach_noise,
    bootstrap_noise,
    detect_peak,
    detrend_and_window,
    series_from_results,
    simulate_shots,
    spectrum,
)
from .shim import NoisySamplerConfig, run_shim
from .svgplot import SvgFigure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def _write_manifest(outdir: Path, command: str, config: dict, seed) -> None:
    manifest = {
        "command": command,
        "resolved_config": {k: v for k, v in sorted(config.items())},
        "seed": seed,
        "version": __version__,
        "started_at": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def _chain_from(cfg) -> ChainSpec:
    return ChainSpec(N=cfg["n"], J=cfg["j"], delta=cfg["delta"],
                     strong_bond_parity=cfg["strong_parity"])


def _schedule_from(cfg) -> AnnealSchedule:
    if cfg.get("schedule_csv"):
        return AnnealSchedule.from_csv(cfg["schedule_csv"])
    return AnnealSchedule.linear(gamma0=cfg["gamma0"], j1=cfg["jfinal"])


def _tau_grid(cfg) -> np.ndarray:
    n = cfg["tau_points"]
    if n < 1:
        raise ConfigError("--tau-points must be >= 1")
    if n == 1:
        return np.array([cfg["tau_max"]])
    if cfg["tau_log"]:
        return np.geomspace(cfg["tau_min"], cfg["tau_max"], n)
    return np.linspace(cfg["tau_min"], cfg["tau_max"], n)


def _outdir(cfg) -> Path:
    out = Path(cfg["outdir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_sweep(cfg) -> tuple[list, ChainSpec]:
    chain = _chain_from(cfg)
    schedule = _schedule_from(cfg)
    taus = _tau_grid(cfg)
    disorder = None
    if cfg["disorder"] > 0 or cfg["realizations"] > 1:
        disorder = (cfg["disorder"], cfg["realizations"], cfg["seed"])
    return (
        quench_sweep(chain, schedule, taus, tol=cfg["tol"], disorder=disorder,
                     threads=cfg["threads"]),
        chain,
    )


def cmd_sweep(cfg) -> int:
    out = _outdir(cfg)
    results, chain = _run_sweep(cfg)
    _write_csv(
        out / "pt_series.csv",
        ["tau_ns", "P", "K", "stderr_P"],
        [(r.tau, r.P, r.K, r.stderr_P) for r in results],
    )
    _write_csv(
        out / "quench_results.csv",
        ["tau_ns", "K", "P", "p_strong", "p_weak", "stderr_K", "stderr_P"],
        [(r.tau, r.K, r.P, r.p_strong, r.p_weak, r.stderr_K, r.stderr_P) for r in results],
    )
    if len(results) > 1:
        fig = SvgFigure(title="kink imbalance vs anneal time", xlabel="tau (ns)", ylabel="P")
        fig.line([r.tau for r in results], [r.P for r in results], label="P(tau)")
        fig.write(out / "pt_series.svg")
        fig2 = SvgFigure(title="kink density vs anneal time", xlabel="tau (ns)", ylabel="K")
        fig2.line([r.tau for r in results], [r.K for r in results], label="K(tau)", color="#d62728")
        fig2.write(out / "kink_density.svg")
    if cfg["kz_fit"] and len(results) >= 5:
        fit = kz_fit(results, (results[0].tau, results[-1].tau))
        with open(out / "kz_fit.json", "w") as fh:
            json.dump({"exponent": fit.exponent, "amplitude": fit.amplitude,
                       "r_squared": fit.r_squared}, fh, indent=2)
            fh.write("\n")
        print(f"KZ fit: exponent={fit.exponent:+.4f} r^2={fit.r_squared:.4f}")
    _write_manifest(out, "sweep", cfg, cfg["seed"])
    print(f"wrote {out / 'pt_series.csv'} ({len(results)} rows)")
    return EXIT_OK


def _spectrum_products(cfg, results, chain, out: Path, tag: str = ""):
    """Windowed spectrum, optional shot noise and peak report for one sweep."""
    series = series_from_results(results, "P")
    window = tuple(cfg["window"]) if cfg["window"] else (float(series.tau_ns[0]), float(series.tau_ns[-1]))
    windowed = detrend_and_window(series, window, cfg["detrend"])
    spec = spectrum(windowed)
    report = None
    if cfg["shots"] > 0:
        tables = simulate_shots(results, chain, cfg["shots"], cfg["seed"])
        omega, sigma = bootstrap_noise(
            tables, cfg["n_series"], cfg["seed"] + 1, window=window, detrend=cfg["detrend"]
        )
        spec = attach_noise(spec, omega, sigma)
        lo, hi = cfg["baseline_band"]
        report = detect_peak(spec, (lo, hi))
    suffix = f"_{tag}" if tag else ""
    _write_csv(
        out / f"spectrum{suffix}.csv",
        ["Omega_GHz", "S", "sigma"],
        [
            (o, s, spec.sigma[i] if spec.sigma is not None else None)
            for i, (o, s) in enumerate(zip(spec.omega_ghz, spec.S))
        ],
    )
    fig = SvgFigure(title=f"amplitude spectrum {tag}".strip(), xlabel="Omega (GHz)", ylabel="S")
    fig.line(spec.omega_ghz, spec.S, label="S(Omega)")
    if spec.sigma is not None:
        base = report.baseline if report else 0.0
        fig.band(spec.omega_ghz, base - 2 * spec.sigma, base + 2 * spec.sigma)
    if report:
        fig.vline(report.omega_peak_ghz, color="#d62728")
    fig.write(out / f"spectrum{suffix}.svg")
    if report:
        with open(out / f"peak_report{suffix}.json", "w") as fh:
            json.dump(report.__dict__, fh, indent=2)
            fh.write("\n")
        print(
            f"peak{suffix}: Omega={report.omega_peak_ghz:.4f} GHz  "
            f"S={report.amplitude:.4g}  significance={report.significance:.2f} sigma"
        )
    return spec, report


def cmd_spectrum(cfg) -> int:
    out = _outdir(cfg)
    gamma_list = cfg["gamma0_list"] or [cfg["gamma0"]]
    peak_rows = []
    for gamma0 in gamma_list:
        sub = dict(cfg, gamma0=gamma0)
        results, chain = _run_sweep(sub)
        tag = f"g{gamma0:g}" if len(gamma_list) > 1 else ""
        spec, report = _spectrum_products(sub, results, chain, out, tag)
        pk = float(spec.omega_ghz[np.argmax(np.where(spec.omega_ghz > 0, spec.S, -1))])
        amp = float(np.max(spec.S[spec.omega_ghz > 0]))
        peak_rows.append((gamma0, pk, amp, report.significance if report else None))
    if len(gamma_list) > 1:
        _write_csv(out / "gamma0_scan.csv",
                   ["gamma0_GHz", "Omega_peak_GHz", "S_peak", "significance"], peak_rows)
        print("gamma0 scan:", ", ".join(f"{g:g}->S={a:.3g}" for g, _, a, _ in peak_rows))
    _write_manifest(out, "spectrum", cfg, cfg["seed"])
    return EXIT_OK


def cmd_shim(cfg) -> int:
    out = _outdir(cfg)
    if cfg["iterations"] < 1:
        raise ConfigError("--iterations must be >= 1")
    chain = _chain_from(cfg)
    rng = np.random.default_rng(cfg["seed"])
    hidden = rng.uniform(-cfg["bias_scale"], cfg["bias_scale"], size=chain.N)
    coupler_err = rng.uniform(-cfg["coupler_error"], cfg["coupler_error"], size=chain.N)
    config = NoisySamplerConfig(
        hidden_bias=hidden, coupler_error=coupler_err,
        t_eff=cfg["t_eff"], sweeps=cfg["sweeps"], seed=cfg["seed"],
    )
    state = run_shim(
        chain, config, eta_phi=cfg["eta_phi"], eta_j=cfg["eta_j"],
        n_iterations=cfg["iterations"], shots=cfg["shots"], seed=cfg["seed"],
        n_gauges=cfg["gauges"],
    )
    rows = []
    for rec in state.history:
        for orbit_id in range(2):
            rows.append(
                (rec["iteration"], orbit_id, rec["m_orbits"][orbit_id],
                 rec["std_pfrust"][orbit_id], rec["sigma_mtilde"])
            )
    _write_csv(out / "shim_history.csv",
               ["iter", "orbit_id", "m", "std_pfrust", "sigma_mtilde"], rows)
    traj = {
        "phi": [rec["phi"].tolist() for rec in state.history],
        "j_prog": [rec["j_prog"].tolist() for rec in state.history],
        "hidden_bias": hidden.tolist(),
        "converged": state.converged,
        "iterations": len(state.history),
    }
    with open(out / "shim_trajectories.json", "w") as fh:
        json.dump(traj, fh)
        fh.write("\n")

    iters = [rec["iteration"] for rec in state.history]
    # panel a: histogram of per-qubit averaged magnetization, first vs last iteration
    first, last = state.history[0]["mtilde"], state.history[-1]["mtilde"]
    lo = float(min(first.min(), last.min()))
    hi = float(max(first.max(), last.max())) or 1e-3
    edges = np.linspace(lo - 1e-6, hi + 1e-6, 24)
    fig = SvgFigure(title="per-qubit magnetization", xlabel="m", ylabel="count")
    fig.bars(edges, np.histogram(first, bins=edges)[0], color="#d62728", label="first iteration")
    fig.bars(edges, np.histogram(last, bins=edges)[0], color="#2ca02c", label="last iteration")
    fig.write(out / "shim_mtilde_hist.svg")
    # panel b: coupler trajectories
    fig = SvgFigure(title="programmed couplers", xlabel="iteration", ylabel="J_prog")
    for b in range(chain.N):
        fig.line(iters, [rec["j_prog"][b] for rec in state.history], width=0.8,
                 color="#1f77b4" if b % 2 == 0 else "#ff7f0e")
    fig.write(out / "shim_couplers.svg")
    # panel c: flux-bias offsets
    fig = SvgFigure(title="flux-bias offsets", xlabel="iteration", ylabel="phi")
    for q in range(chain.N):
        fig.line(iters, [rec["phi"][q] for rec in state.history], width=0.8)
    fig.write(out / "shim_fbo.svg")
    # panel d: sigma_mtilde convergence
    fig = SvgFigure(title="magnetization spread", xlabel="iteration", ylabel="sigma_mtilde")
    fig.line(iters, [rec["sigma_mtilde"] for rec in state.history], label="sigma_mtilde")
    fig.write(out / "shim_sigma.svg")

    _write_manifest(out, "shim", dict(cfg, converged=state.converged), cfg["seed"])
    phi = state.history[-1]["phi"]
    corr = float(np.corrcoef(-phi, hidden)[0, 1]) if np.std(phi) > 0 else 0.0
    print(f"shim: {'converged' if state.converged else 'NOT converged (flagged)'} "
          f"after {len(state.history)} iterations; corr(-phi, hidden_bias)={corr:.3f}")
    return EXIT_OK


def cmd_oracle(cfg) -> int:
    if cfg["n"] > 12:
        raise ConfigError(f"oracle comparison needs N <= 12, got {cfg['n']}")
    chain = _chain_from(cfg)
    schedule = _schedule_from(cfg)
    tau = cfg["tau_max"]
    disorder = None
    h_site = None
    if cfg["disorder"] > 0:
        disorder = sample_disorder(cfg["disorder"], chain.N, cfg["seed"])
        h_site = disorder.h_site
    states = solve_chain(chain, schedule, tau, tol=cfg["tol"], disorder=disorder)
    K_block = kink_density(states, chain)
    P_block = staggered_kink_diff(states, chain)
    problem = DenseQuenchProblem(N=chain.N, J=chain.J, delta=chain.delta,
                                 schedule=schedule, tau=tau, h_site=h_site,
                                 strong_bond_parity=chain.strong_bond_parity)
    obs = ed_observables(ed_evolve(problem, tol=min(cfg["tol"], 1e-8)), chain)
    rows = [
        ("K", K_block, obs.K, abs(K_block - obs.K)),
        ("P", P_block, obs.P, abs(P_block - obs.P)),
    ]
    mode = "approximation (elastic 8x8 vs exact)" if disorder is not None else "exact"
    print(f"block solver vs dense evolution, N={chain.N} tau={tau} ns [{mode}]")
    print(f"{'quantity':<10}{'block':>16}{'dense':>16}{'|diff|':>12}")
    worst = 0.0
    for name, a, b, d in rows:
        d = abs(a - b) if d is None else d
        worst = max(worst, d)
        print(f"{name:<10}{a:>16.9f}{b:>16.9f}{d:>12.2e}")
    if disorder is not None:
        print("note: differences quantify the elastic-backscattering approximation, not an error")
        return EXIT_OK
    if worst > cfg["oracle_tol"]:
        print(f"FAIL: max difference {worst:.2e} exceeds --oracle-tol {cfg['oracle_tol']:g}")
        return 1
    print(f"OK: max difference {worst:.2e} within {cfg['oracle_tol']:g}")
    return EXIT_OK


def cmd_feasibility(cfg) -> int:
    report = feasibility_check(
        tau_max_ns=cfg["tau_max"], dtau_ns=cfg["dtau"],
        omega_ghz=cfg["omega"], t_device_mk=cfg["t_device"],
        coherence_ns=cfg["coherence"],
    )
    print(report)
    if cfg.get("outdir"):
        out = _outdir(cfg)
        with open(out / "feasibility.json", "w") as fh:
            json.dump(report.as_dict(), fh, indent=2)
            fh.write("\n")
        _write_manifest(out, "feasibility", cfg, cfg.get("seed"))
    return EXIT_OK


def cmd_critical(cfg) -> int:
    chain = _chain_from(cfg)
    schedule = _schedule_from(cfg)
    sc = critical_s(schedule, chain)
    jj, gg = schedule(sc)
    print(f"s_c = {sc:.10f}   (J(s_c)={jj:.6f} GHz, Gamma(s_c)={gg:.6f} GHz)")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None, help="JSON file with defaults; flags override")
    p.add_argument("--outdir", type=str, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--tol", type=float, default=None, help="integrator tolerance")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=None, help="number of spins (ring)")
    p.add_argument("--j", type=float, default=None, help="dimensionless coupling J")
    p.add_argument("--delta", type=float, default=None, help="dimensionless staggering")
    p.add_argument("--strong-parity", choices=["even", "odd"], default=None)
    p.add_argument("--gamma0", type=float, default=None, help="Gamma(0) in GHz (linear schedule)")
    p.add_argument("--jfinal", type=float, default=None, help="J(1) in GHz (linear schedule)")
    p.add_argument("--schedule-csv", type=str, default=None, help="tabulated schedule CSV")


def _add_taugrid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau-min", type=float, default=None)
    p.add_argument("--tau-max", type=float, default=None)
    p.add_argument("--tau-points", type=int, default=None)
    p.add_argument("--tau-log", action="store_true", default=None)
    p.add_argument("--disorder", type=float, default=None, help="disorder strength d")
    p.add_argument("--realizations", type=int, default=None)


_DEFAULTS = {
    "n": 160, "j": 1.0, "delta": 0.0, "strong_parity": "even",
    "gamma0": 11.0, "jfinal": 15.0, "schedule_csv": None,
    "tau_min": 1.0, "tau_max": 20.0, "tau_points": 64, "tau_log": False,
    "disorder": 0.0, "realizations": 1,
    "tol": 1e-6, "seed": 1, "threads": 1, "outdir": None,
    "kz_fit": False,
    "window": None, "detrend": "mean", "shots": 0, "n_series": 64,
    "baseline_band": (8.0, 12.0), "gamma0_list": None,
    "eta_phi": 0.05, "eta_j": 0.05, "iterations": 30, "shots_shim": 10000,
    "gauges": 8, "bias_scale": 0.05, "coupler_error": 0.05, "t_eff": 0.7, "sweeps": 10,
    "oracle_tol": 1e-6,
    "dtau": 0.02, "omega": 5.0, "t_device": 15.0, "coherence": 50.0,
}


def _resolve(args: argparse.Namespace, command: str) -> dict:
    cfg = dict(_DEFAULTS)
    cfg["outdir"] = f"{command}_out"
    file_cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key, value in vars(args).items():
        if key in ("config", "func"):
            continue
        name = key
        if value is not None:
            cfg[name] = value
    if command == "shim":
        cfg["shots"] = cfg.pop("shots_shim_arg", None) or cfg["shots_shim"]
    return cfg


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="staggered-ising",
        description="Quench simulation and defect spectroscopy of staggered Ising rings",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="defect observables over a tau grid")
    _add_common(p); _add_model(p); _add_taugrid(p)
    p.add_argument("--kz-fit", action="store_true", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", help="Fourier analysis of P(tau), optional shot noise")
    _add_common(p); _add_model(p); _add_taugrid(p)
    p.add_argument("--window", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--detrend", choices=["none", "mean", "linear"], default=None)
    p.add_argument("--shots", type=int, default=None, help="simulated anneals per tau")
    p.add_argument("--n-series", type=int, default=None, help="bootstrap series count")
    p.add_argument("--baseline-band", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--gamma0-list", type=lambda s: [float(x) for x in s.split(",")], default=None)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("shim", help="iterative calibration against a simulated noisy sampler")
    _add_common(p); _add_model(p)
    p.add_argument("--eta-phi", type=float, default=None)
    p.add_argument("--eta-j", type=float, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--shots", dest="shots_shim_arg", type=int, default=None)
    p.add_argument("--gauges", type=int, default=None)
    p.add_argument("--bias-scale", type=float, default=None, help="hidden bias magnitude")
    p.add_argument("--coupler-error", type=float, default=None)
    p.add_argument("--t-eff", type=float, default=None)
    p.add_argument("--sweeps", type=int, default=None)
    p.set_defaults(func=cmd_shim)

    p = sub.add_parser("oracle", help="block solver vs dense-evolution cross check")
    _add_common(p); _add_model(p)
    p.add_argument("--tau-max", "--tau", dest="tau_max", type=float, default=None)
    p.add_argument("--disorder", type=float, default=None)
    p.add_argument("--oracle-tol", type=float, default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("feasibility", help="observability conditions for oscillations")
    _add_common(p)
    p.add_argument("--tau-max", type=float, default=None)
    p.add_argument("--dtau", type=float, default=None)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--t-device", type=float, default=None)
    p.add_argument("--coherence", type=float, default=None)
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("critical", help="locate the critical anneal fraction s_c")
    _add_common(p); _add_model(p)
    p.set_defaults(func=cmd_critical)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _resolve(args, args.command)
        return args.func(cfg)
    except (ConfigError, ScheduleError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
