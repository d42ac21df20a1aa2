"""Fourier analysis of defect-imbalance series, simulated shot noise and peak tests.

Conventions, fixed here and asserted by the Parseval test: the spectrum is the raw
magnitude of the unnormalized DFT on the one-sided grid Omega_m = m / (M * dtau),
m = 0 .. M//2, so an on-grid sinusoid of amplitude A produces a bin of height
A * M / 2 and sum_m |X_m|^2 over the full two-sided spectrum equals M * sum |x|^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ChainSpec
from .observables import QuenchResult

_SPACING_TOL = 1e-12


@dataclass(frozen=True)
class TauSeries:
    """A defect observable sampled on a uniform grid of anneal durations (ns)."""

    tau_ns: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.tau_ns, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("tau grid and values must be 1-d arrays of equal length >= 2")
        steps = np.diff(t)
        if np.any(np.abs(steps - steps[0]) > _SPACING_TOL):
            raise ValueError("tau grid must be uniformly spaced (required by the DFT)")
        object.__setattr__(self, "tau_ns", t)
        object.__setattr__(self, "values", v)

    @property
    def dtau(self) -> float:
        return float(self.tau_ns[1] - self.tau_ns[0])


@dataclass(frozen=True)
class Spectrum:
    """One-sided amplitude spectrum with optional per-frequency noise levels."""

    omega_ghz: np.ndarray
    S: np.ndarray
    sigma: np.ndarray | None = None
    window: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if np.any(np.asarray(self.S) < 0):
            raise ValueError("spectral amplitudes must be non-negative")

    @property
    def resolution(self) -> float:
        return float(self.omega_ghz[1] - self.omega_ghz[0])


@dataclass(frozen=True)
class ShotTable:
    """Simulated anneal outcomes at one tau: rows are repetitions, columns are bonds.

    ``strong_mask`` marks the columns belonging to the strong-bond sublattice.
    """

    tau_ns: float
    outcomes: np.ndarray  # (shots, n_bonds) uint8 kink indicators
    strong_mask: np.ndarray

    @property
    def shots(self) -> int:
        return self.outcomes.shape[0]

    def per_shot_imbalance(self) -> np.ndarray:
        """P estimate (p_weak - p_strong)/2 of every individual shot."""
        ps = self.outcomes[:, self.strong_mask].mean(axis=1)
        pw = self.outcomes[:, ~self.strong_mask].mean(axis=1)
        return 0.5 * (pw - ps)


def detrend_and_window(
    series: TauSeries, window: tuple[float, float], detrend: str = "mean"
) -> TauSeries:
    """Restrict the series to [window] and remove the chosen trend.

    ``detrend`` is one of none / mean / linear; the windowed grid stays uniform.
    """
    lo, hi = window
    keep = (series.tau_ns >= lo - _SPACING_TOL) & (series.tau_ns <= hi + _SPACING_TOL)
    if int(np.sum(keep)) < 8:
        raise ValueError(f"window {window} intersects the grid in fewer than 8 points")
    t = series.tau_ns[keep]
    v = series.values[keep].copy()
    if detrend == "none":
        pass
    elif detrend == "mean":
        v -= np.mean(v)
    elif detrend == "linear":
        slope, intercept = np.polyfit(t, v, 1)
        v -= slope * t + intercept
    else:
        raise ValueError(f"unknown detrend mode {detrend!r}")
    meta = dict(series.meta)
    meta["window"] = (float(lo), float(hi))
    meta["detrend"] = detrend
    return TauSeries(tau_ns=t, values=v, meta=meta)


def spectrum(series: TauSeries) -> Spectrum:
    """One-sided DFT amplitude spectrum of a uniform series."""
    if series.tau_ns.size < 8:
        raise ValueError("series too short for a meaningful spectrum (need >= 8 points)")
    M = series.values.size
    amps = np.abs(np.fft.rfft(series.values))
    omega = np.fft.rfftfreq(M, d=series.dtau)
    win = series.meta.get("window", (float(series.tau_ns[0]), float(series.tau_ns[-1])))
    return Spectrum(omega_ghz=omega, S=amps, window=win)


def series_from_results(results: list[QuenchResult], column: str = "P", meta: dict | None = None) -> TauSeries:
    """Collect a QuenchResult column into a TauSeries."""
    taus = np.array([r.tau for r in results])
    vals = np.array([getattr(r, column) for r in results])
    return TauSeries(tau_ns=taus, values=vals, meta=dict(meta or {}, column=column))


def simulate_shots(
    results: list[QuenchResult], chain: ChainSpec, shots: int, seed
) -> list[ShotTable]:
    """Draw independent per-bond Bernoulli kink indicators for every tau.

    Bond marginals are the per-sublattice probabilities of each QuenchResult;
    inter-bond correlations of the true state are deliberately ignored (the shot
    noise on sublattice averages is what matters downstream).  Deterministic for
    a given seed.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    strong = np.arange(chain.N) % 2 == (0 if chain.strong_bond_parity == "even" else 1)
    root = np.random.SeedSequence(seed)
    tables = []
    for child, res in zip(root.spawn(len(results)), results):
        rng = np.random.default_rng(child)
        p = np.where(strong, res.p_strong, res.p_weak)
        draws = (rng.random((shots, chain.N)) < p).astype(np.uint8)
        tables.append(ShotTable(tau_ns=res.tau, outcomes=draws, strong_mask=strong))
    return tables


def bootstrap_series(tables, n_series: int, seed) -> np.ndarray:
    """Partition the shots at every tau into n_series groups; return group P estimates.

    Output shape (n_series, n_tau).  Groups are a random equal-as-possible split
    of the shot indices, so the group means average back to the full-sample mean
    exactly when the shot count divides evenly.
    """
    rng = np.random.default_rng(seed)
    columns = []
    for table in tables:
        if table.shots < n_series:
            raise ValueError(
                f"tau={table.tau_ns}: {table.shots} shots cannot fill {n_series} series"
            )
        per_shot = table.per_shot_imbalance()
        perm = rng.permutation(table.shots)
        groups = np.array_split(perm, n_series)
        columns.append([float(np.mean(per_shot[g])) for g in groups])
    return np.array(columns).T


def bootstrap_noise(
    tables,
    n_series: int,
    seed,
    window: tuple[float, float] | None = None,
    detrend: str = "mean",
) -> tuple[np.ndarray, np.ndarray]:
    """Frequency-resolved noise level sigma(Omega) from artificial time series.

    Each artificial series takes one random shot group per tau; every series is
    windowed/detrended like the main spectrum and Fourier transformed, and the
    standard deviation over series of the amplitudes defines sigma(Omega).
    ``tables`` may be any iterable of ShotTable (a generator keeps memory flat).

    Returns (omega_ghz, sigma).
    """
    tables = list(tables) if not isinstance(tables, list) else tables
    taus = np.array([t.tau_ns for t in tables])
    estimates = bootstrap_series(tables, n_series, seed)  # (n_series, n_tau)
    spectra = []
    for row in estimates:
        series = TauSeries(tau_ns=taus, values=row)
        if window is not None:
            series = detrend_and_window(series, window, detrend)
        elif detrend != "none":
            series = detrend_and_window(
                series, (float(taus[0]), float(taus[-1])), detrend
            )
        spectra.append(spectrum(series))
    omega = spectra[0].omega_ghz
    amps = np.stack([sp.S for sp in spectra])
    return omega, np.std(amps, axis=0)


@dataclass(frozen=True)
class PeakReport:
    omega_peak_ghz: float
    amplitude: float
    baseline: float
    sigma_at_peak: float
    significance: float


def detect_peak(spec: Spectrum, baseline_band: tuple[float, float]) -> PeakReport:
    """Most significant excess over a flat noise baseline.

    The baseline is the mean amplitude over ``baseline_band`` (which must contain
    at least 5 bins and should avoid candidate peaks); significance of a bin is
    (S - baseline) / sigma at that bin, maximized over positive frequencies
    outside the band.
    """
    if spec.sigma is None:
        raise ValueError("spectrum carries no noise levels; run bootstrap_noise first")
    lo, hi = baseline_band
    band = (spec.omega_ghz >= lo) & (spec.omega_ghz <= hi)
    if int(np.sum(band)) < 5:
        raise ValueError("baseline band must contain at least 5 bins")
    baseline = float(np.mean(spec.S[band]))
    candidates = (~band) & (spec.omega_ghz > 0) & (spec.sigma > 0)
    if not np.any(candidates):
        raise ValueError("no candidate bins outside the baseline band")
    z = np.where(candidates, (spec.S - baseline) / np.where(spec.sigma > 0, spec.sigma, np.inf), -np.inf)
    best = int(np.argmax(z))
    return PeakReport(
        omega_peak_ghz=float(spec.omega_ghz[best]),
        amplitude=float(spec.S[best]),
        baseline=baseline,
        sigma_at_peak=float(spec.sigma[best]),
        significance=float(z[best]),
    )


def attach_noise(spec: Spectrum, omega: np.ndarray, sigma: np.ndarray) -> Spectrum:
    """Return the spectrum with bootstrap noise levels attached (grids must match)."""
    if spec.omega_ghz.shape != omega.shape or not np.allclose(spec.omega_ghz, omega):
        raise ValueError("noise frequency grid does not match the spectrum grid")
    return Spectrum(omega_ghz=spec.omega_ghz, S=spec.S, sigma=np.asarray(sigma), window=spec.window)
