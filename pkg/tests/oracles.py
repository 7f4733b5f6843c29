"""Independent reference solvers used only by the tests."""

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.special import j0


def method_of_lines_greens(c, n_bins, refine=8):
    """Bin-projected Green's functions by a route unrelated to the lattice sweep.

    The spin wave lives on ``n_bins * refine`` z-cells. Stokes and anti-Stokes
    are eliminated through Volterra quadrature in z, leaving a linear ODE in
    eps that is integrated exactly (matrix exponential) across each eps-bin,
    with inputs held constant within a bin.
    """
    N = n_bins
    M = N * refine
    hz = 1.0 / M
    he = 1.0 / N
    z = (np.arange(M) + 0.5) * hz
    dz = z[:, None] - z[None, :]
    lower = np.tril(np.ones((M, M)), -1) * hz + np.eye(M) * hz / 2
    K_kappa = lower * np.exp(-1j * c.kappa * np.where(dz >= 0, dz, 0.0))
    K_zero = lower
    w = c.w
    L = -1j * c.s * np.eye(M) - w * c.C**2 * K_kappa + w * c.C_prime**2 * K_zero
    F = np.stack([1j * w * c.C * np.exp(-1j * c.kappa * z), 1j * w * c.C_prime * np.ones(M)], axis=1)

    # d/de [intB, B, u] = [[0, I, 0], [0, L, F], [0, 0, 0]] [intB, B, u]
    big = np.zeros((2 * M + 2, 2 * M + 2), dtype=complex)
    big[:M, M : 2 * M] = np.eye(M)
    big[M : 2 * M, M : 2 * M] = L
    big[M : 2 * M, 2 * M :] = F
    P = expm(big * he)
    int_B, int_F = P[:M, M : 2 * M], P[:M, 2 * M :]
    step_B, step_F = P[M : 2 * M, M : 2 * M], P[M : 2 * M, 2 * M :]

    out_row = 1j * c.C * hz * np.exp(-1j * c.kappa * (1 - z))
    n_in = 2 * N + N
    B = np.zeros((M, n_in), dtype=complex)
    for k in range(N):
        B[k * refine : (k + 1) * refine, 2 * N + k] = 1.0 / np.sqrt(1.0 / N)
    S_out = np.zeros((N, n_in), dtype=complex)
    for j in range(N):
        u = np.zeros((2, n_in), dtype=complex)
        u[0, j] = 1.0 / np.sqrt(he)
        u[1, N + j] = 1.0 / np.sqrt(he)
        integral = int_B @ B + int_F @ u
        S_out[j] = (np.exp(-1j * c.kappa) * u[0] * he + out_row @ integral) / np.sqrt(he)
        B = step_B @ B + step_F @ u
    B_out = B.reshape(N, refine, n_in).sum(axis=1) * hz / np.sqrt(1.0 / N)
    return {
        "G_SS": S_out[:, :N],
        "G_AS": S_out[:, N : 2 * N],
        "G_BS": S_out[:, 2 * N :],
        "G_SB": B_out[:, :N],
        "G_AB": B_out[:, N : 2 * N],
        "G_BB": B_out[:, 2 * N :],
    }


def passive_storage_kernel(C, z, eps):
    """Continuum storage kernel S_in(eps) -> B_out(z) for C' = kappa = s = 0, w = 1."""
    return 1j * C * j0(2 * C * np.sqrt(np.outer(z, 1 - eps)))


def passive_storage_bins(C, n_bins, order=20):
    """Bin-normalised projection of the storage kernel by Gauss-Legendre quadrature."""
    x, wq = np.polynomial.legendre.leggauss(order)
    h = 1.0 / n_bins
    out = np.empty((n_bins, n_bins), dtype=complex)
    for i in range(n_bins):
        z = (i + 0.5 + x / 2) * h
        for j in range(n_bins):
            eps = (j + 0.5 + x / 2) * h
            out[i, j] = (np.outer(wq, wq) * passive_storage_kernel(C, z, eps)).sum() / 4 * h
    return out


# -- truncated Fock-space oracle ----------------------------------------------


def _ladder(dim):
    return sparse.diags(np.sqrt(np.arange(1, dim)), 1, format="csr")


def fock_oracle_moments(a, amplifier, rho_b, dim=7):
    """<N> and <:N^2:> of the output modes S_i = a_i b + sum_k amplifier[i, k] v_k^dag.

    ``b`` is in the (truncated) state ``rho_b``; the ``v_k`` are vacua. The
    operators are built explicitly in a truncated Fock space; the mixed input
    is split into its eigen-ensemble and each term is a squared vector norm,
    <S_i^dag S_j^dag S_j S_i> = |S_j S_i psi|^2.
    """
    a = np.asarray(a, dtype=complex)
    Q = np.asarray(amplifier, dtype=complex)
    n_noise = Q.shape[1]
    eye = sparse.identity(dim, format="csr")

    def embed(op, slot):
        out = op if slot == 0 else eye
        for k in range(1, 1 + n_noise):
            out = sparse.kron(out, op if k == slot else eye, format="csr")
        return out

    b = embed(_ladder(dim), 0)
    v_dag = [embed(_ladder(dim).T.tocsr(), 1 + k) for k in range(n_noise)]
    S = [a[i] * b + sum(Q[i, k] * v_dag[k] for k in range(n_noise)) for i in range(a.size)]

    weights, vecs = np.linalg.eigh(rho_b)
    vacuum = np.zeros(dim**n_noise)
    vacuum[0] = 1.0
    mean = second = 0.0
    for p, psi_b in zip(weights, vecs.T):
        if p < 1e-15:
            continue
        psi = np.kron(psi_b, vacuum)
        once = [Si @ psi for Si in S]
        mean += p * sum(np.vdot(x, x).real for x in once)
        for Sj in S:
            for x in once:
                y = Sj @ x
                second += p * np.vdot(y, y).real
    return float(mean), float(second)
