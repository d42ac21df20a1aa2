"""Free-fermion quench dynamics of staggered transverse-field Ising rings.

Defect densities and their coherent oscillations, an exact-diagonalization
oracle, spectral/bootstrap analysis of oscillation signatures, and an iterative
shimming calibration loop driven against a simulated noisy annealer.
"""

from .model import (
    AnnealSchedule,
    ChainSpec,
    FeasibilityReport,
    QuenchParams,
    ScheduleError,
    critical_s,
    eval_schedule,
    feasibility_check,
)
from .blocks import (
    BASIS6,
    BASIS8,
    BlockState,
    ChainBlockHamiltonian,
    DisorderRealization,
    IntegrationError,
    MomentumBlock,
    allowed_momenta,
    backscatter_amplitudes,
    build_block6,
    build_block8,
    evolve_block,
    quadruplet_momenta,
    sample_disorder,
)
from .observables import (
    KzFit,
    QuenchResult,
    kink_density,
    kz_fit,
    quench_sweep,
    solve_chain,
    staggered_kink_diff,
)
from .ed import DenseQuenchProblem, EdObservables, ed_evolve, ed_observables
from .spectral import (
    PeakReport,
    ShotTable,
    Spectrum,
    TauSeries,
    attach_noise,
    bootstrap_noise,
    detect_peak,
    detrend_and_window,
    series_from_results,
    simulate_shots,
    spectrum,
)
from .shim import (
    NoisySampler,
    NoisySamplerConfig,
    OrbitPartition,
    ShimState,
    build_orbits,
    frustration_prob,
    gauge_sample,
    noisy_sampler,
    run_shim,
    shim_step,
)

__version__ = "0.1.0"
