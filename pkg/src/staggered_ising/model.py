"""Chain geometry, annealing schedules, critical-point location and feasibility checks.

Energies are ordinary frequencies in GHz throughout (the Hamiltonian is H/h);
phases therefore accumulate as 2*pi * integral(f dt) with t in ns.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

# CODATA 2018 exact values
PLANCK_H = 6.62607015e-34      # J / Hz
HBAR = PLANCK_H / (2.0 * math.pi)
BOLTZMANN_KB = 1.380649e-23    # J / K


class ScheduleError(ValueError):
    """Raised for malformed or degenerate annealing schedules."""


@dataclass(frozen=True)
class ChainSpec:
    """Staggered Ising ring: N spins, bond couplings alternating J+delta / J-delta.

    ``strong_bond_parity`` selects which bond sublattice carries the strong
    coupling J+delta; bond n joins sites (n, n+1 mod N).
    """

    N: int
    J: float = 1.0
    delta: float = 0.0
    strong_bond_parity: str = "even"

    def __post_init__(self):
        if self.N < 4 or self.N % 4 != 0:
            raise ValueError(f"N must be >= 4 and divisible by 4, got {self.N}")
        if not self.J > 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if not 0 <= self.delta < self.J:
            raise ValueError(f"delta must satisfy 0 <= delta < J, got delta={self.delta}, J={self.J}")
        if self.strong_bond_parity not in ("even", "odd"):
            raise ValueError(f"strong_bond_parity must be 'even' or 'odd', got {self.strong_bond_parity!r}")

    def bond_couplings(self) -> np.ndarray:
        """Dimensionless coupling of every bond, bond n = (n, n+1 mod N)."""
        signs = np.where(np.arange(self.N) % 2 == 0, 1.0, -1.0)
        if self.strong_bond_parity == "odd":
            signs = -signs
        return self.J + self.delta * signs

    @property
    def staggering_sign(self) -> float:
        """Sign s such that bond couplings equal J + s*delta*(-1)^n."""
        return 1.0 if self.strong_bond_parity == "even" else -1.0


@dataclass(frozen=True)
class AnnealSchedule:
    """Envelope pair (JJ(s), Gamma(s)) in GHz over the anneal fraction s in [0, 1].

    Either analytic-linear (JJ = j1*s, Gamma = gamma0*(1-s)) or tabulated with
    monotone piecewise-linear interpolation.  Invariants: JJ(0) = 0, Gamma(1) = 0,
    JJ non-decreasing, Gamma non-increasing, both non-negative.
    """

    kind: str = "linear"
    gamma0: float = 11.0
    j1: float = 15.0
    table: np.ndarray | None = field(default=None, repr=False)  # rows (s, J_GHz, Gamma_GHz)

    def __post_init__(self):
        if self.kind == "linear":
            if self.gamma0 < 0 or self.j1 < 0:
                raise ScheduleError("linear schedule requires gamma0 >= 0 and j1 >= 0")
        elif self.kind == "tabulated":
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 2 or t.shape[1] != 3 or t.shape[0] < 2:
                raise ScheduleError("table must be an (n >= 2, 3) array of (s, J_GHz, Gamma_GHz) rows")
            s, jj, gg = t[:, 0], t[:, 1], t[:, 2]
            if not (np.all(np.diff(s) > 0) and s[0] == 0.0 and s[-1] == 1.0):
                raise ScheduleError("table s column must be strictly increasing from 0 to 1")
            if jj[0] != 0.0 or gg[-1] != 0.0:
                raise ScheduleError("table must satisfy J(0) = 0 and Gamma(1) = 0")
            if np.any(jj < 0) or np.any(gg < 0):
                raise ScheduleError("schedule values must be non-negative")
            if np.any(np.diff(jj) < 0) or np.any(np.diff(gg) > 0):
                raise ScheduleError("J(s) must be non-decreasing and Gamma(s) non-increasing")
            object.__setattr__(self, "table", t)
        else:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def linear(cls, gamma0: float = 11.0, j1: float = 15.0) -> "AnnealSchedule":
        return cls(kind="linear", gamma0=gamma0, j1=j1)

    @classmethod
    def tabulated(cls, rows) -> "AnnealSchedule":
        return cls(kind="tabulated", table=np.asarray(rows, dtype=float))

    @classmethod
    def from_csv(cls, path) -> "AnnealSchedule":
        """Load a schedule CSV with header ``s,J_GHz,Gamma_GHz``."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["s", "J_GHz", "Gamma_GHz"]:
                raise ScheduleError(f"unexpected schedule CSV header {header!r}")
            rows = [[float(x) for x in row] for row in reader if row]
        return cls.tabulated(rows)

    def __call__(self, s):
        """Evaluate (JJ, Gamma) at anneal fraction s (scalar or array)."""
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < 0.0) or np.any(s_arr > 1.0):
            raise ScheduleError(f"s must lie in [0, 1], got {s!r}")
        if self.kind == "linear":
            jj = self.j1 * s_arr
            gg = self.gamma0 * (1.0 - s_arr)
        else:
            jj = np.interp(s_arr, self.table[:, 0], self.table[:, 1])
            gg = np.interp(s_arr, self.table[:, 0], self.table[:, 2])
        if np.ndim(s) == 0:
            return float(jj), float(gg)
        return jj, gg


def eval_schedule(schedule: AnnealSchedule, s: float) -> tuple[float, float]:
    """Instantaneous envelope pair (JJ(s), Gamma(s)) in GHz."""
    return schedule(s)


@dataclass(frozen=True)
class QuenchParams:
    """One quench: chain, schedule, anneal duration tau (ns), integrator tolerance."""

    chain: ChainSpec
    schedule: AnnealSchedule
    tau: float
    integrator_tol: float = 1e-8

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0 (0 means sudden quench), got {self.tau}")
        if not self.integrator_tol > 0:
            raise ValueError(f"integrator_tol must be positive, got {self.integrator_tol}")


def critical_s(schedule: AnnealSchedule, chain: ChainSpec, tol: float = 1e-10) -> float:
    """Anneal fraction s_c where sqrt(J^2 + delta^2) * JJ(s) crosses Gamma(s).

    The crossing is unique because JJ is non-decreasing and Gamma non-increasing;
    located by bisection to absolute tolerance ``tol`` in s.
    """
    r = math.hypot(chain.J, chain.delta)

    def f(s):
        jj, gg = schedule(s)
        return r * jj - gg

    lo, hi = 0.0, 1.0
    flo, fhi = f(lo), f(hi)
    if flo >= 0 or fhi <= 0:
        raise ScheduleError("schedule does not cross the critical line inside [0, 1]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class FeasibilityReport:
    """Detectability check for coherent defect oscillations of frequency omega.

    ``t_star_h_mk`` uses E = h*omega (omega an ordinary frequency); ``t_star_hbar_mk``
    treats omega as angular (a factor 2*pi lower).  Both conventions are reported
    because published bounds mix h and hbar.
    """

    tau_max_ns: float
    dtau_ns: float
    omega_ghz: float
    t_device_mk: float
    coherence_ns: float
    omega_max_ghz: float
    t_star_h_mk: float
    t_star_hbar_mk: float
    within_coherence: bool
    nyquist_ok: bool
    temperature_ok: bool

    @property
    def feasible(self) -> bool:
        return self.within_coherence and self.nyquist_ok and self.temperature_ok

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["feasible"] = self.feasible
        return d

    def __str__(self) -> str:
        lines = [
            f"sampling precision   : {self.dtau_ns:g} ns  ->  Nyquist ceiling {self.omega_max_ghz:.4g} GHz",
            f"oscillation frequency: {self.omega_ghz:g} GHz",
            f"temperature ceiling  : {self.t_star_h_mk:.4g} mK (E = h*f)   "
            f"{self.t_star_hbar_mk:.4g} mK (E = hbar*f)",
            f"(1) tau_max {self.tau_max_ns:g} ns within {self.coherence_ns:g} ns coherence window: "
            f"{'yes' if self.within_coherence else 'NO'}",
            f"(2) omega below Nyquist ceiling: {'yes' if self.nyquist_ok else 'NO'}",
            f"(3) device at {self.t_device_mk:g} mK below ceiling: {'yes' if self.temperature_ok else 'NO'}",
            f"all conditions met: {'yes' if self.feasible else 'NO'}",
        ]
        return "\n".join(lines)


def feasibility_check(
    tau_max_ns: float,
    dtau_ns: float,
    omega_ghz: float,
    t_device_mk: float,
    coherence_ns: float = 50.0,
) -> FeasibilityReport:
    """Evaluate the three observability conditions for oscillations at omega_ghz.

    (1) anneals no longer than the qubit coherence window, (2) the sampling
    precision dtau resolves omega (Nyquist), (3) a single quantum h*omega
    exceeds the thermal energy at the device temperature.
    """
    if tau_max_ns <= 0 or dtau_ns <= 0 or omega_ghz < 0 or t_device_mk < 0:
        raise ValueError("feasibility_check arguments must be positive (omega, T may be zero)")
    omega_max = 1.0 / (2.0 * dtau_ns)  # GHz, since dtau is in ns
    t_star_h = PLANCK_H * omega_ghz * 1e9 / BOLTZMANN_KB * 1e3      # mK
    t_star_hbar = t_star_h / (2.0 * math.pi)
    return FeasibilityReport(
        tau_max_ns=tau_max_ns,
        dtau_ns=dtau_ns,
        omega_ghz=omega_ghz,
        t_device_mk=t_device_mk,
        coherence_ns=coherence_ns,
        omega_max_ghz=omega_max,
        t_star_h_mk=t_star_h,
        t_star_hbar_mk=t_star_hbar,
        within_coherence=tau_max_ns <= coherence_ns,
        nyquist_ok=omega_ghz < omega_max,
        temperature_ok=t_device_mk <= t_star_h and omega_ghz > 0,
    )
