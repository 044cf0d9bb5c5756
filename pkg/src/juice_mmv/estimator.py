"""Post-detection channel re-estimation and oracle baselines.

Once an active set S is known (detected or genie-provided), the channels
on S can be re-estimated from the same observation block.  Stacking
``y = vec(Y^T)`` turns the matrix model into a standard linear one,
``y = Theta x_S + w`` with ``Theta = Phi_S (kron) I_M``, so the linear
MMSE estimate is

    x_hat = R Theta^H (Theta R Theta^H + noise_var I)^{-1} y,

with ``R`` the block-diagonal stack of the per-device scaled spatial
covariances (channels are zero mean, so the prior mean term drops).
The tau_p*M x tau_p*M system matrix is assembled through the identity
``Theta R Theta^H = sum_{i in S} (phi_i phi_i^H) (kron) R_i`` rather
than by materializing Theta, and the Kronecker products with the
identity reduce to reshapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .sim import CovarianceSet


@dataclass
class SupportEstimate:
    """A detected active set: sorted, duplicate-free device indices."""

    indices: np.ndarray

    def __post_init__(self):
        self.indices = np.unique(np.asarray(self.indices, dtype=int))

    def __len__(self) -> int:
        return len(self.indices)


@dataclass
class RefinedEstimate:
    """Re-estimated channels on a support, with the index map back to devices."""

    X_hat_S: np.ndarray
    support: np.ndarray

    def embed(self, N: int) -> np.ndarray:
        """Scatter into a full M x N matrix, zero off the support."""
        X = np.zeros((self.X_hat_S.shape[0], N), dtype=complex)
        X[:, self.support] = self.X_hat_S
        return X


def _support_indices(support) -> np.ndarray:
    if isinstance(support, SupportEstimate):
        return support.indices
    return np.unique(np.asarray(support, dtype=int))


def _check_psd_stack(Rs: np.ndarray) -> None:
    herm_gap = np.max(np.abs(Rs - Rs.conj().transpose(0, 2, 1)))
    if herm_gap > 1e-10:
        raise ValueError(f"covariance blocks not Hermitian (max deviation {herm_gap:.3e})")
    min_eig = np.linalg.eigvalsh(Rs).min()
    scale = max(1.0, float(np.abs(Rs).max()))
    if min_eig < -1e-8 * scale:
        raise ValueError(f"covariance blocks not PSD (min eigenvalue {min_eig:.3e})")


def mmse_estimate(
    Y: np.ndarray,
    Phi: np.ndarray,
    support,
    cov: CovarianceSet,
    noise_var: float,
) -> RefinedEstimate:
    """Linear MMSE re-estimation of the channels on ``support``.

    ``support`` may be a SupportEstimate or a plain index array with at
    least one entry.  Raises ValueError on an empty support, a
    non-positive noise variance, or a covariance stack that is not
    Hermitian PSD on the support.
    """
    idx = _support_indices(support)
    if len(idx) == 0:
        raise ValueError("support must contain at least one device")
    if noise_var <= 0:
        raise ValueError("noise_var must be > 0")
    tau_p, M = Y.shape
    P = Phi[:, idx]
    Rs = np.asarray(cov.R_tilde)[idx]
    _check_psd_stack(Rs)

    # Theta R Theta^H assembled blockwise: block (t, s) of the system is
    # sum_k P[t,k] conj(P[s,k]) R_k, an (M, M) matrix.
    Q = np.einsum("tk,sk,kmn->tmsn", P, P.conj(), Rs).reshape(tau_p * M, tau_p * M)
    Q[np.diag_indices_from(Q)] += noise_var

    y = Y.ravel()  # vec(Y^T): rows of Y stacked
    u = cho_solve(cho_factor(Q), y)
    # Theta^H u = vec(U conj(Phi_S)) with U the M x tau_p unstacking of u.
    U = u.reshape(tau_p, M).T
    G = U @ P.conj()
    X_hat_S = np.einsum("kmn,nk->mk", Rs, G)
    return RefinedEstimate(X_hat_S=X_hat_S, support=idx)


def genie_ls(Y: np.ndarray, Phi: np.ndarray, support) -> RefinedEstimate:
    """Least-squares re-estimation on a known support.

    Solves the normal equations of ``min ||Phi_S X_S^T - Y||_F``; needs
    tau_p >= |S| and a full-column-rank pilot submatrix.
    """
    idx = _support_indices(support)
    if len(idx) == 0:
        raise ValueError("support must contain at least one device")
    tau_p = Phi.shape[0]
    if tau_p < len(idx):
        raise ValueError(f"underdetermined: tau_p={tau_p} < |support|={len(idx)}")
    P = Phi[:, idx]
    try:
        factor = cho_factor(P.conj().T @ P)
    except LinAlgError as exc:
        raise ValueError("pilot submatrix on the support is rank deficient") from exc
    Xt = cho_solve(factor, P.conj().T @ Y)
    return RefinedEstimate(X_hat_S=Xt.T, support=idx)


def genie_mmse(
    Y: np.ndarray,
    Phi: np.ndarray,
    true_support,
    cov: CovarianceSet,
    noise_var: float,
) -> RefinedEstimate:
    """MMSE re-estimation fed the oracle support."""
    return mmse_estimate(Y, Phi, true_support, cov, noise_var)
