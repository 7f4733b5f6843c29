"""Raman quantum memory with four-wave-mixing noise: Green's functions, photon
statistics, Monte-Carlo bands and counting estimators."""

from .params import (
    PAPER_NOMINAL,
    ControlPulse,
    Couplings,
    MemoryParams,
    derive_couplings,
    effective_time_map,
    load_params,
)
from .propagator import (
    Discretization,
    GreensSet,
    LinearChannel,
    build_greens,
    channel_retrieval,
    channel_transmission,
    check_commutators,
    check_convergence,
)
from .photonstats import (
    EffResult,
    InputState,
    Moments,
    channel_moments,
    incoherent_g2,
    memory_efficiency_model,
    noise_g2,
    scan_input_number,
    scan_ratio_R,
    snr_model,
)

__version__ = "0.1.0"
