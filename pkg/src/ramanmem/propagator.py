"""Green's functions of the linearised Raman interaction for one control stage.

The (z, eps) unit square is tiled into ``N_z x N_eps`` cells. Stokes and
anti-Stokes amplitudes flow through a cell along z, the spin wave along eps.
Each cell applies the box-scheme update (trapezoidal averages of the fields
entering and leaving it), which is the Cayley transform of the local
generator. That generator lies in the Lie algebra of U(2, 1) with metric
``diag(1, -1, w)``, so every cell, and therefore the assembled map, preserves
the bosonic commutators to rounding error at any resolution. The scheme is
second order in both grids.

Operators are normalised per bin: a bin amplitude is the field integrated over
the bin divided by ``sqrt(h)``. Compositions are then plain matrix products.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .params import Couplings

CACHE_ENV = "RAMANMEM_CACHE_DIR"
CACHE_FORMAT = "ramanmem-greens-v1"


@dataclass(frozen=True)
class Discretization:
    N_z: int = 128
    N_eps: int = 128

    def __post_init__(self):
        if int(self.N_z) < 2 or int(self.N_eps) < 2:
            raise ValueError("discretization needs at least two points per grid")

    @property
    def h_z(self) -> float:
        return 1.0 / self.N_z

    @property
    def h_eps(self) -> float:
        return 1.0 / self.N_eps

    @property
    def z(self) -> np.ndarray:
        return (np.arange(self.N_z) + 1) * self.h_z

    @property
    def eps(self) -> np.ndarray:
        return (np.arange(self.N_eps) + 1) * self.h_eps


@dataclass(frozen=True, eq=False)
class GreensSet:
    G_SS: np.ndarray
    G_AS: np.ndarray
    G_BS: np.ndarray
    G_SB: np.ndarray
    G_AB: np.ndarray
    G_BB: np.ndarray
    couplings: Couplings
    disc: Discretization

    BLOCKS = ("G_SS", "G_AS", "G_BS", "G_SB", "G_AB", "G_BB")

    def blocks(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.BLOCKS}


@dataclass(frozen=True, eq=False)
class LinearChannel:
    """Output field of one time bin: signal transfer ``a`` plus noise ``n``.

    ``n[i, j]`` equals ``<S_j^dag S_i>`` for the noise part (all inputs
    other than the signal mode). With this convention ``a^dag n a`` is the
    noise intensity projected on the signal's output mode.
    """

    a: np.ndarray
    n: np.ndarray
    mode: np.ndarray
    label: str = ""

    @property
    def noise_photons(self) -> float:
        return float(np.trace(self.n).real)

    @property
    def efficiency(self) -> float:
        return float(np.vdot(self.a, self.a).real)


def cell_transfer(c: Couplings, disc: Discretization) -> np.ndarray:
    """3x3 map of one cell acting on the (S, A^dag, B) bin amplitudes."""
    hz, he = disc.h_z, disc.h_eps
    g = np.sqrt(hz * he)
    w = c.w
    X = np.array(
        [
            [-1j * c.kappa * hz, 0.0, 1j * c.C * g],
            [0.0, 0.0, -1j * c.C_prime * g],
            [1j * w * c.C * g, 1j * w * c.C_prime * g, -1j * c.s * he],
        ],
        dtype=complex,
    )
    eye = np.eye(3)
    return np.linalg.solve(eye - X / 2, eye + X / 2)


def _propagate(T: np.ndarray, S: np.ndarray, A: np.ndarray, B: np.ndarray) -> None:
    """Sweep the lattice in place along anti-diagonals (cells on one are independent)."""
    N_eps, N_z = S.shape[0], B.shape[0]
    i_all = np.arange(N_z)
    for diag in range(N_z + N_eps - 1):
        i = i_all[max(0, diag - N_eps + 1) : min(N_z, diag + 1)]
        j = diag - i
        s, a, b = S[j], A[j], B[i]
        S[j] = T[0, 0] * s + T[0, 1] * a + T[0, 2] * b
        A[j] = T[1, 0] * s + T[1, 1] * a + T[1, 2] * b
        B[i] = T[2, 0] * s + T[2, 1] * a + T[2, 2] * b


def build_greens(couplings: Couplings, disc: Discretization = Discretization()) -> GreensSet:
    """Propagate every input basis bin through one control stage."""
    Ne, Nz = int(disc.N_eps), int(disc.N_z)
    T = cell_transfer(couplings, disc)
    M = 2 * Ne + Nz
    S = np.zeros((Ne, M), dtype=complex)
    A = np.zeros((Ne, M), dtype=complex)
    B = np.zeros((Nz, M), dtype=complex)
    S[np.arange(Ne), np.arange(Ne)] = 1.0
    A[np.arange(Ne), Ne + np.arange(Ne)] = 1.0
    B[np.arange(Nz), 2 * Ne + np.arange(Nz)] = 1.0
    _propagate(T, S, A, B)
    if not (np.isfinite(S).all() and np.isfinite(B).all()):
        raise FloatingPointError("non-finite values during propagation")
    return GreensSet(
        G_SS=np.ascontiguousarray(S[:, :Ne]),
        G_AS=np.ascontiguousarray(S[:, Ne : 2 * Ne]),
        G_BS=np.ascontiguousarray(S[:, 2 * Ne :]),
        G_SB=np.ascontiguousarray(B[:, :Ne]),
        G_AB=np.ascontiguousarray(B[:, Ne : 2 * Ne]),
        G_BB=np.ascontiguousarray(B[:, 2 * Ne :]),
        couplings=couplings,
        disc=disc,
    )


def _gram(X: np.ndarray, Y: Optional[np.ndarray] = None) -> np.ndarray:
    return X @ (X if Y is None else Y).conj().T


def check_commutators(g: GreensSet, w: Optional[float] = None) -> float:
    """Largest deviation among the output commutator identities."""
    w = g.couplings.w if w is None else w
    Ne, Nz = g.disc.N_eps, g.disc.N_z
    ss = _gram(g.G_SS) - _gram(g.G_AS) + w * _gram(g.G_BS) - np.eye(Ne)
    bb = _gram(g.G_SB) - _gram(g.G_AB) + w * _gram(g.G_BB) - w * np.eye(Nz)
    sb = _gram(g.G_SS, g.G_SB) - _gram(g.G_AS, g.G_AB) + w * _gram(g.G_BS, g.G_BB)
    return float(max(np.abs(ss).max(), np.abs(bb).max(), np.abs(sb).max()))


def coarse_grain(G: np.ndarray, n_rows: int, n_cols: int) -> np.ndarray:
    """Project a bin-normalised kernel onto coarser bins (each coarse bin is an isometric average)."""
    r, c = G.shape
    if r % n_rows or c % n_cols:
        raise ValueError("coarse grid must divide the fine grid")
    P = np.kron(np.eye(n_rows), np.ones(r // n_rows)) / np.sqrt(r // n_rows)
    Q = np.kron(np.eye(n_cols), np.ones(c // n_cols)) / np.sqrt(c // n_cols)
    return P @ G @ Q.T


def check_convergence(couplings: Couplings, sizes=(32, 64, 128), coarse: int = 16) -> dict:
    """Self-convergence of the Green's functions under simultaneous grid refinement.

    Returns the max-norm change of the coarse-grained kernels between
    successive sizes and the ratios of consecutive changes (4 for second order).
    """
    sizes = sorted(sizes)
    if len(sizes) < 3:
        raise ValueError("need at least three grid sizes")
    projected = []
    for N in sizes:
        g = build_greens(couplings, Discretization(N, N))
        projected.append({k: coarse_grain(v, coarse, coarse) for k, v in g.blocks().items()})
    changes = []
    for fine, finer in zip(projected, projected[1:]):
        changes.append(float(max(np.abs(fine[k] - finer[k]).max() for k in GreensSet.BLOCKS)))
    ratios = [a / b if b > 0 else float("inf") for a, b in zip(changes, changes[1:])]
    return {"sizes": list(sizes), "changes": changes, "ratios": ratios}


def _check_mode(mode: np.ndarray, n: int) -> np.ndarray:
    mode = np.asarray(mode, dtype=complex)
    if mode.shape != (n,):
        raise ValueError(f"mode has shape {mode.shape}, expected ({n},)")
    norm = np.vdot(mode, mode).real
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"mode is not normalised (|phi|^2 = {norm})")
    return mode


def uniform_mode(n: int) -> np.ndarray:
    return np.full(n, 1.0 / np.sqrt(n), dtype=complex)


def _vacuum_noise(G_AS: np.ndarray) -> np.ndarray:
    # The anti-Stokes kernel jumps across eps == eps'. Bin projection keeps only
    # half of the jump's weight on the diagonal; the squared modulus of the
    # diagonal restores the sub-bin remainder to second order.
    return _gram(G_AS) + np.diag(np.abs(np.diag(G_AS)) ** 2)


def _occupations(g: GreensSet, occupations) -> tuple[float, float]:
    if occupations is None:
        return g.couplings.p1, g.couplings.p3
    p1, p3 = occupations
    if p1 < 0 or p3 < 0 or abs(p1 + p3 - 1.0) > 1e-12:
        raise ValueError("occupations must be non-negative and sum to one")
    return float(p1), float(p3)


def _hermitian(n: np.ndarray) -> np.ndarray:
    return 0.5 * (n + n.conj().T)


def channel_transmission(write: GreensSet, mode=None, occupations=None) -> LinearChannel:
    """Signal transmitted through the memory during the write pulse."""
    mode = uniform_mode(write.disc.N_eps) if mode is None else _check_mode(mode, write.disc.N_eps)
    _, p3 = _occupations(write, occupations)
    a = write.G_SS @ mode
    n = _vacuum_noise(write.G_AS)
    if p3 > 0:
        n = n + p3 * _gram(write.G_BS)
    return LinearChannel(a=a, n=_hermitian(n), mode=mode, label="transmission")


def channel_retrieval(write: GreensSet, read: GreensSet, mode=None, occupations=None, decay: float = 1.0) -> LinearChannel:
    """Signal retrieved by the read pulse after storage.

    The read stage starts from the spin wave left by the write stage, scaled
    by ``decay`` in amplitude. Amplitude lost to decay is replaced by thermal
    spin-wave population ``p3``. Read and write anti-Stokes vacua are independent.
    """
    if write.disc != read.disc:
        raise ValueError("write and read stages must share one discretization")
    mode = uniform_mode(write.disc.N_eps) if mode is None else _check_mode(mode, write.disc.N_eps)
    _, p3 = _occupations(write, occupations)
    decay = complex(decay)

    stored = decay * (write.G_SB @ mode)
    a = read.G_BS @ stored

    spin_noise = _gram(write.G_AB)
    if p3 > 0:
        spin_noise = spin_noise + p3 * _gram(write.G_BB)
    n = _vacuum_noise(read.G_AS) + abs(decay) ** 2 * (read.G_BS @ spin_noise @ read.G_BS.conj().T)
    refill = p3 * (1.0 - abs(decay) ** 2)
    if refill > 0:
        n = n + refill * _gram(read.G_BS)
    return LinearChannel(a=a, n=_hermitian(n), mode=mode, label="retrieval")


# -- cache -------------------------------------------------------------------


def cache_key(couplings: Couplings, disc: Discretization) -> str:
    payload = {
        "format": CACHE_FORMAT,
        "couplings": {k: float(v).hex() for k, v in dataclasses.asdict(couplings).items()},
        "disc": dataclasses.asdict(disc),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:32]


def save_greens(g: GreensSet, path: str | Path) -> Path:
    path = Path(path)
    header = {
        "format": CACHE_FORMAT,
        "couplings": dataclasses.asdict(g.couplings),
        "disc": dataclasses.asdict(g.disc),
        "key": cache_key(g.couplings, g.disc),
    }
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), **g.blocks())
    os.replace(tmp, path)
    return path


def load_greens(path: str | Path) -> GreensSet:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format") != CACHE_FORMAT:
            raise ValueError(f"{path}: unsupported cache format {header.get('format')!r}")
        blocks = {name: np.array(data[name]) for name in GreensSet.BLOCKS}
    return GreensSet(
        **blocks,
        couplings=Couplings(**header["couplings"]),
        disc=Discretization(**header["disc"]),
    )


def default_cache_dir() -> Optional[Path]:
    value = os.environ.get(CACHE_ENV)
    return Path(value) if value else None


def cached_greens(couplings: Couplings, disc: Discretization, cache_dir=None) -> GreensSet:
    """``build_greens`` with an optional on-disk cache (``$RAMANMEM_CACHE_DIR``)."""
    cache_dir = default_cache_dir() if cache_dir is None else Path(cache_dir)
    if cache_dir is None:
        return build_greens(couplings, disc)
    path = cache_dir / f"greens-{cache_key(couplings, disc)}.npz"
    if path.exists():
        return load_greens(path)
    g = build_greens(couplings, disc)
    cache_dir.mkdir(parents=True, exist_ok=True)
    save_greens(g, path)
    return g
