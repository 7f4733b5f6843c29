"""Physical parameters of the Raman memory and the dimensionless couplings.

Units: plain (non-angular) GHz for frequencies, ns for times. ``z`` and the
effective time are dimensionless on [0, 1].
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid


@dataclass(frozen=True)
class MemoryParams:
    d: float
    gamma: float
    delta: float
    delta_s: float
    L: float = 7.5
    T_c: float = 0.36
    omega_max: float = 4.2
    alpha: float = 0.31
    p1: float = 1.0
    p3: float = 0.0
    C_override: Optional[float] = None
    R_override: Optional[float] = None
    storage_time: float = 12.5
    spinwave_decay: Optional[float] = None

    def __post_init__(self):
        validate_params(self)

    @property
    def delta_prime(self) -> float:
        return self.delta + self.delta_s

    def replace(self, **changes) -> "MemoryParams":
        return dataclasses.replace(self, **changes)

    def decay_factor(self) -> float:
        """Spin-wave amplitude factor after ``storage_time``; 1 when decay is disabled."""
        if self.spinwave_decay is None:
            return 1.0
        return float(np.exp(-self.storage_time / (2.0 * self.spinwave_decay)))


def validate_params(p: MemoryParams) -> None:
    for name in ("d", "gamma", "delta", "delta_s", "alpha", "T_c", "omega_max"):
        value = getattr(p, name)
        if not np.isfinite(value) or value <= 0:
            raise ValueError(f"{name} must be positive, got {value!r}")
    if p.p1 < 0 or p.p3 < 0 or abs(p.p1 + p.p3 - 1.0) > 1e-12:
        raise ValueError(f"occupations must satisfy p1, p3 >= 0 and p1 + p3 = 1 (got {p.p1}, {p.p3})")
    if p.delta == p.delta_s:
        raise ValueError("delta equals delta_s: Stokes wavevector is singular")
    if p.C_override is not None and p.C_override < 0:
        raise ValueError("C_override must be non-negative")
    if p.R_override is not None and p.R_override < 0:
        raise ValueError("R_override must be non-negative")
    if p.spinwave_decay is not None and p.spinwave_decay <= 0:
        raise ValueError("spinwave_decay must be positive when given")


PAPER_NOMINAL = MemoryParams(
    d=1800.0,
    gamma=0.016,
    delta=15.2,
    delta_s=9.2,
    L=7.5,
    T_c=0.36,
    omega_max=4.2,
    alpha=0.31,
    p1=1.0,
    p3=0.0,
    C_override=0.82,
    storage_time=12.5,
)

PRESETS = {"paper-nominal": PAPER_NOMINAL}


@dataclass(frozen=True)
class Couplings:
    """Dimensionless coefficients of the Raman propagation equations.

    The wavevectors only hold their dispersive (atomic) parts; the vacuum
    ``L*omega/c`` contributions cancel exactly in ``kappa`` on Raman resonance.
    """

    C: float
    C_prime: float
    R: float
    s: float
    kappa: float
    w: float
    k_omega: float = 0.0
    k_S: float = 0.0
    k_A: float = 0.0
    k_B: float = 0.0

    @property
    def p1(self) -> float:
        return 0.5 * (1.0 + self.w)

    @property
    def p3(self) -> float:
        return 0.5 * (1.0 - self.w)

    def with_ratio(self, R: float) -> "Couplings":
        return dataclasses.replace(self, R=R, C_prime=R * self.C)


def coupling_formula(p: MemoryParams) -> float:
    """C = sqrt(d*gamma / (alpha*delta**2)), ignoring any override."""
    return float(np.sqrt(p.d * p.gamma / (p.alpha * p.delta**2)))


def derive_couplings(params: MemoryParams) -> Couplings:
    validate_params(params)
    d, g = params.d, params.gamma
    D, Ds, Dp = params.delta, params.delta_s, params.delta_prime
    p1, p3 = params.p1, params.p3

    s = 1.0 / (params.alpha * D) + 1.0 / (params.alpha * Dp)
    C = params.C_override if params.C_override is not None else coupling_formula(params)
    C_prime = params.R_override * C if params.R_override is not None else C * D / Dp
    R = C_prime / C if C > 0 else (params.R_override if params.R_override is not None else D / Dp)

    k_omega = d * g * (p3 / D + p1 / Dp)
    k_S = d * g * (p1 / D + p3 / (D - Ds))
    k_A = d * g * (p3 / Dp + p1 / (D + 2 * Ds))
    kappa = 2 * k_omega - k_S - k_A

    return Couplings(
        C=float(C),
        C_prime=float(C_prime),
        R=float(R),
        s=float(s),
        kappa=float(kappa),
        w=float(p1 - p3),
        k_omega=float(k_omega),
        k_S=float(k_S),
        k_A=float(k_A),
        k_B=float(k_A - k_S),
    )


@dataclass(frozen=True)
class ControlPulse:
    """Control Rabi-frequency envelope sampled on a lab-time grid ``tau`` (ns).

    ``width`` is the intensity FWHM for ``gaussian`` and the full duration for
    ``rectangular``.
    """

    shape: str
    peak: float
    width: float
    tau: np.ndarray = None

    def __post_init__(self):
        if self.shape not in ("gaussian", "rectangular"):
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if self.tau is None:
            span = 4.0 * self.width if self.shape == "gaussian" else 1.5 * self.width
            object.__setattr__(self, "tau", np.linspace(-span, span, 4001))

    def rabi(self) -> np.ndarray:
        tau = np.asarray(self.tau, dtype=float)
        if self.shape == "gaussian":
            return self.peak * np.exp(-2.0 * np.log(2.0) * (tau / self.width) ** 2)
        return np.where(np.abs(tau) <= self.width / 2, self.peak, 0.0)


def effective_time_map(pulse: ControlPulse) -> tuple[float, Callable[[np.ndarray], np.ndarray]]:
    """Return ``(alpha, eps)`` with ``eps(tau)`` rising monotonically from 0 to 1."""
    tau = np.asarray(pulse.tau, dtype=float)
    intensity = np.abs(pulse.rabi()) ** 2
    if pulse.shape == "rectangular":
        # exact for a flat top; avoids edge-sampling error of the quadrature
        energy = pulse.peak**2 * pulse.width
        lo = -pulse.width / 2

        def eps(t):
            return np.clip((np.asarray(t, dtype=float) - lo) / pulse.width, 0.0, 1.0)

        if energy <= 0:
            raise ValueError("control pulse has zero energy")
        return 1.0 / energy, eps

    cumulative = cumulative_trapezoid(intensity, tau, initial=0.0)
    energy = cumulative[-1]
    if not energy > 0:
        raise ValueError("control pulse has zero energy")
    alpha = 1.0 / energy
    profile = cumulative * alpha

    def eps(t):
        return np.interp(np.asarray(t, dtype=float), tau, profile, left=0.0, right=1.0)

    return alpha, eps


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(MemoryParams)}


def parse_value(key: str, text: str):
    if key not in _FIELD_TYPES:
        raise ValueError(f"unknown parameter {key!r}; valid keys: {', '.join(_FIELD_TYPES)}")
    text = text.strip()
    if text.lower() in ("", "none", "null"):
        if "Optional" not in str(_FIELD_TYPES[key].type):
            raise ValueError(f"parameter {key!r} cannot be empty")
        return None
    return float(text)


def load_params(source: str | Path, **overrides) -> MemoryParams:
    """Load a preset name or a flat ``key = value`` file, then apply overrides."""
    if str(source) in PRESETS:
        values = dataclasses.asdict(PRESETS[str(source)])
    else:
        path = Path(source)
        if not path.is_file():
            raise FileNotFoundError(f"parameter file not found: {path}")
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        cp.read_string("[params]\n" + path.read_text())
        values = dataclasses.asdict(PAPER_NOMINAL)
        for key, text in cp["params"].items():
            values[key] = parse_value(key, text)
    values.update({k: v for k, v in overrides.items()})
    return MemoryParams(**values)


def dump_params(params: MemoryParams) -> str:
    lines = []
    for key, value in dataclasses.asdict(params).items():
        lines.append(f"{key} = {'none' if value is None else repr(value)}")
    return "\n".join(lines) + "\n"
