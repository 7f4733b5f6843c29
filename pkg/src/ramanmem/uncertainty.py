"""Monte-Carlo propagation of parameter uncertainties into g2 predictions.

Each sample draws its own Gaussian parameter set from a stream seeded by
``(rng_seed, index)``, so serial and parallel runs give identical bands.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .params import MemoryParams, coupling_formula, derive_couplings, validate_params
from .photonstats import channel_moments, channels, state_family
from .propagator import Discretization, build_greens

log = logging.getLogger(__name__)

MAX_REDRAWS = 1000


@dataclass(frozen=True)
class ParamUncertainty:
    sigma_d: float = 100.0
    sigma_gamma: float = 0.0005
    sigma_delta: float = 0.2
    sigma_Tc: float = 0.020
    sigma_omega_max: float = 0.1
    n_samples: int = 1000
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("sigma_d", "sigma_gamma", "sigma_delta", "sigma_Tc", "sigma_omega_max"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")

    def scaled(self, factor: float) -> "ParamUncertainty":
        return ParamUncertainty(
            self.sigma_d * factor,
            self.sigma_gamma * factor,
            self.sigma_delta * factor,
            self.sigma_Tc * factor,
            self.sigma_omega_max * factor,
            self.n_samples,
            self.rng_seed,
        )


class SampleError(RuntimeError):
    def __init__(self, index: int, params: MemoryParams, cause: Exception):
        super().__init__(f"sample {index} failed ({cause}); parameters: {params}")
        self.index = index
        self.params = params


def _rescale(nominal: MemoryParams, **drawn) -> MemoryParams:
    # alpha scales as 1/(omega_max^2 T_c) for a fixed pulse shape; an override of C
    # keeps its absolute value at nominal and follows the formula's relative change.
    alpha = nominal.alpha * (nominal.omega_max**2 * nominal.T_c) / (drawn["omega_max"] ** 2 * drawn["T_c"])
    candidate = nominal.replace(alpha=alpha, C_override=None, **drawn)
    C_override = nominal.C_override
    if C_override is not None:
        C_override = C_override * coupling_formula(candidate) / coupling_formula(nominal)
    return candidate.replace(C_override=C_override)


def sample_params(nominal: MemoryParams, u: ParamUncertainty, index: int) -> MemoryParams:
    rng = np.random.default_rng([u.rng_seed, index])
    sigmas = (
        ("d", nominal.d, u.sigma_d),
        ("gamma", nominal.gamma, u.sigma_gamma),
        ("delta", nominal.delta, u.sigma_delta),
        ("T_c", nominal.T_c, u.sigma_Tc),
        ("omega_max", nominal.omega_max, u.sigma_omega_max),
    )
    for _ in range(MAX_REDRAWS):
        drawn = {name: float(rng.normal(mu, sigma)) for name, mu, sigma in sigmas}
        try:
            p = _rescale(nominal, **drawn)
            validate_params(p)
        except ValueError:
            continue
        return p
    raise RuntimeError(f"sample {index}: no valid parameter draw after {MAX_REDRAWS} attempts")


@dataclass(frozen=True)
class ScanTask:
    """What each Monte-Carlo sample evaluates: g2 of one channel over a photon-number grid."""

    nominal: MemoryParams
    N_list: tuple
    family: str = "coherent"
    channel: str = "retrieval"
    disc: Discretization = Discretization(64, 64)

    def __post_init__(self):
        if self.channel not in ("transmission", "retrieval"):
            raise ValueError(f"unknown channel {self.channel!r}")
        if not self.N_list:
            raise ValueError("empty photon-number grid")
        object.__setattr__(self, "N_list", tuple(float(x) for x in self.N_list))
        for N in self.N_list:
            state_family(self.family, N)

    def evaluate(self, params: MemoryParams) -> np.ndarray:
        g = build_greens(derive_couplings(params), self.disc)
        trans, ret = channels(g, g, decay=params.decay_factor())
        ch = trans if self.channel == "transmission" else ret
        return np.array([channel_moments(ch, state_family(self.family, N)).g2 for N in self.N_list])


def _run_sample(args):
    task, u, index = args
    params = sample_params(task.nominal, u, index)
    try:
        return task.evaluate(params)
    except Exception as exc:  # noqa: BLE001 - reported with the offending parameters
        raise SampleError(index, params, exc) from exc


@dataclass(frozen=True)
class Band:
    x: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_samples: int
    seed: int
    samples: np.ndarray

    FIELDS = ("x", "g2_mean", "g2_std", "n_samples", "seed")

    def rows(self):
        for x, m, s in zip(self.x, self.mean, self.std):
            yield [float(x), float(m), float(s), self.n_samples, self.seed]


def _mean_std(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # shift by the first sample: identical draws give an exactly zero spread
    ref = samples[0]
    dev = samples - ref
    mean_dev = dev.mean(axis=0)
    std = np.sqrt(((dev - mean_dev) ** 2).sum(axis=0) / (len(samples) - 1))
    return ref + mean_dev, std


def mc_band(task: ScanTask, u: ParamUncertainty, workers: Optional[int] = None) -> Band:
    jobs = [(task, u, i) for i in range(u.n_samples)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_sample, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        results = [_run_sample(job) for job in jobs]
    samples = np.vstack(results)
    mean, std = _mean_std(samples)
    log.info("Monte-Carlo band: %d samples, seed %d", u.n_samples, u.rng_seed)
    return Band(np.asarray(task.N_list), mean, std, u.n_samples, u.rng_seed, samples)


def sampled_values(nominal: MemoryParams, u: ParamUncertainty, name: str) -> np.ndarray:
    return np.array([getattr(sample_params(nominal, u, i), name) for i in range(u.n_samples)])
