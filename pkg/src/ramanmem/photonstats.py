"""Pulse-integrated photon moments and g2 of memory output channels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import binom

from .params import Couplings, MemoryParams, derive_couplings
from .propagator import (
    Discretization,
    GreensSet,
    LinearChannel,
    cached_greens,
    channel_retrieval,
    channel_transmission,
    uniform_mode,
)

KINDS = ("vacuum", "coherent", "fock_with_loss", "thermal", "custom")


@dataclass(frozen=True, eq=False)
class InputState:
    """Photon-number statistics of the injected signal mode.

    Only the normally ordered moments ``n_b = <b^dag b>`` and
    ``q_b = <b^dag^2 b^2>`` enter the output moments.
    """

    kind: str
    n_b: float
    q_b: float
    distribution: Optional[np.ndarray] = None
    mode: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown input kind {self.kind!r}")
        if self.n_b < 0 or self.q_b < 0:
            raise ValueError("input moments must be non-negative")

    @classmethod
    def vacuum(cls, mode=None) -> "InputState":
        return cls("vacuum", 0.0, 0.0, np.array([1.0]), mode)

    @classmethod
    def coherent(cls, mean: float, mode=None) -> "InputState":
        if mean < 0:
            raise ValueError("mean photon number must be non-negative")
        return cls("coherent", float(mean), float(mean) ** 2, None, mode)

    @classmethod
    def thermal(cls, mean: float, mode=None) -> "InputState":
        if mean < 0:
            raise ValueError("mean photon number must be non-negative")
        return cls("thermal", float(mean), 2.0 * float(mean) ** 2, None, mode)

    @classmethod
    def fock_with_loss(cls, eta: float, photons: int = 1, mode=None) -> "InputState":
        """Fock state ``|photons>`` sent through a loss with transmission ``eta``."""
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"transmission must lie in [0, 1], got {eta}")
        k = np.arange(photons + 1)
        dist = binom.pmf(k, photons, eta)
        return cls("fock_with_loss", eta * photons, eta**2 * photons * (photons - 1), dist, mode)

    @classmethod
    def custom(cls, distribution: Sequence[float], mode=None) -> "InputState":
        p = np.asarray(distribution, dtype=float)
        if p.ndim != 1 or (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("distribution entries must be non-negative and sum to one")
        k = np.arange(p.size)
        return cls("custom", float(k @ p), float((k * (k - 1)) @ p), p, mode)

    @property
    def g2(self) -> float:
        if self.n_b == 0:
            raise ValueError("g2 undefined for an empty input")
        return self.q_b / self.n_b**2


def state_family(family: str, mean: float, mode=None) -> InputState:
    """Input state of a scan family at a given mean photon number."""
    if family == "coherent":
        return InputState.coherent(mean, mode)
    if family in ("fock", "fock_with_loss"):
        return InputState.fock_with_loss(mean, 1, mode)
    if family == "thermal":
        return InputState.thermal(mean, mode)
    raise ValueError(f"unknown state family {family!r}")


@dataclass(frozen=True)
class Moments:
    mean_photons: float
    second_normal: float

    @property
    def g2(self) -> float:
        if self.mean_photons <= 0:
            raise ValueError("g2 undefined: no photons in the output")
        return self.second_normal / self.mean_photons**2


@dataclass(frozen=True)
class EffResult:
    eta_read_in: float
    eta_tot: float


def channel_moments(ch: LinearChannel, state: InputState) -> Moments:
    """Wick factorisation: Gaussian zero-mean noise independent of the signal."""
    if state.mode is not None and not np.allclose(state.mode, ch.mode):
        raise ValueError("input mode differs from the mode used to build the channel")
    A = float(np.vdot(ch.a, ch.a).real)
    T1 = float(np.trace(ch.n).real)
    T2 = float(np.vdot(ch.n, ch.n).real)  # trace(n @ n) for Hermitian n
    X = float(np.vdot(ch.a, ch.n @ ch.a).real)
    nb, qb = state.n_b, state.q_b
    mean = nb * A + T1
    second = qb * A**2 + 2.0 * nb * (A * T1 + X) + T1**2 + T2
    return Moments(mean, second)


def noise_g2(ch: LinearChannel) -> float:
    T1 = float(np.trace(ch.n).real)
    if T1 <= 0:
        raise ValueError("channel has no noise photons")
    return 1.0 + float(np.vdot(ch.n, ch.n).real) / T1**2


def memory_efficiency_model(write: GreensSet, read: GreensSet, mode=None) -> EffResult:
    if write.disc != read.disc:
        raise ValueError("write and read stages must share one discretization")
    mode = uniform_mode(write.disc.N_eps) if mode is None else np.asarray(mode, dtype=complex)
    stored = write.G_SB @ mode
    retrieved = read.G_BS @ stored
    return EffResult(float(np.vdot(stored, stored).real), float(np.vdot(retrieved, retrieved).real))


def incoherent_g2(N_sig: float, N_noise: float, g2_sig: float, g2_noise: float) -> float:
    """g2 of signal and noise mixed on a beam splitter without interference."""
    if N_sig < 0 or N_noise < 0:
        raise ValueError("photon numbers must be non-negative")
    total = N_sig + N_noise
    if total == 0:
        raise ValueError("signal and noise photon numbers are both zero")
    return (N_sig**2 * g2_sig + 2.0 * N_sig * N_noise + N_noise**2 * g2_noise) / total**2


def snr_model(eta_tot: float, eta_herald: float, eps_out: float) -> float:
    if eps_out <= 0:
        raise ValueError("noise photon number must be positive")
    return eta_tot * eta_herald / eps_out


@dataclass(frozen=True)
class ScanPoint:
    x: float
    g2_trans: float
    g2_ret: float
    mean_photons_trans: float
    mean_photons_ret: float
    eps_in: float
    eps_out: float

    FIELDS = ("x", "g2_trans", "g2_ret", "mean_photons_trans", "mean_photons_ret", "eps_in", "eps_out")

    def row(self) -> list[float]:
        return [getattr(self, k) for k in self.FIELDS]


def _g2_or_nan(m: Moments) -> float:
    return m.g2 if m.mean_photons > 0 else float("nan")


def channels(write: GreensSet, read: GreensSet, mode=None, decay: float = 1.0):
    return (
        channel_transmission(write, mode),
        channel_retrieval(write, read, mode, decay=decay),
    )


def scan_input_number(
    write: GreensSet,
    read: GreensSet,
    state_family_name: str,
    N_list: Iterable[float],
    mode=None,
    decay: float = 1.0,
) -> list[ScanPoint]:
    trans, ret = channels(write, read, mode, decay)
    out = []
    for N in N_list:
        if N < 0:
            raise ValueError("input photon numbers must be non-negative")
        state = state_family(state_family_name, N)
        mt, mr = channel_moments(trans, state), channel_moments(ret, state)
        out.append(
            ScanPoint(float(N), _g2_or_nan(mt), _g2_or_nan(mr), mt.mean_photons, mr.mean_photons,
                      trans.noise_photons, ret.noise_photons)
        )
    return out


def scan_ratio_R(
    params: MemoryParams,
    R_list: Iterable[float],
    state: InputState,
    disc: Discretization = Discretization(),
    cache_dir=None,
) -> list[ScanPoint]:
    """Rebuild the memory with ``C' = R*C`` for each ratio and evaluate ``state``."""
    base = derive_couplings(params)
    decay = params.decay_factor()
    out = []
    for R in R_list:
        if R < 0:
            raise ValueError("coupling ratios must be non-negative")
        g = cached_greens(base.with_ratio(float(R)), disc, cache_dir)
        trans, ret = channels(g, g, decay=decay)
        mt, mr = channel_moments(trans, state), channel_moments(ret, state)
        out.append(
            ScanPoint(float(R), _g2_or_nan(mt), _g2_or_nan(mr), mt.mean_photons, mr.mean_photons,
                      trans.noise_photons, ret.noise_photons)
        )
    return out


def memory_from_params(params: MemoryParams, disc: Discretization = Discretization(), cache_dir=None) -> GreensSet:
    """Green's functions for identical write and read control pulses."""
    return cached_greens(derive_couplings(params), disc, cache_dir)
