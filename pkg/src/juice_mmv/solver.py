"""ADMM solvers for jointly sparse multiple-measurement recovery.

Given observations ``Y = Phi X^T + W`` where only a few columns of the
``M x N`` matrix ``X`` are nonzero, three related solvers estimate ``X``:

* ``ADMM``: convex group-sparse recovery, minimizing
  ``0.5 ||Phi X^T - Y||_F^2 + beta1 * sum_i ||x_i||_2``.
* ``IRW_ADMM``: the log-sum penalty ``sum_i log(1 + ||x_i|| / eps0)``
  handled by majorization-minimization; every outer pass solves the
  convex problem above with weights ``g_i = 1 / (eps0 + ||x_i||)``
  frozen at the previous iterate.
* ``COV_ADMM``: adds a penalty coupling detection and estimation,
  ``beta2 * sum_i f(||x_i||; kappa) * ||x_i x_i^H - R_i||_F^2``, where
  ``R_i`` is the known spatial covariance of device ``i`` scaled by its
  transmit power and ``f`` is a concave relaxation of the step
  indicator.  Majorizing both concave factors gives per-device weights
  ``q_i`` and a quartic term that an extra splitting makes tractable.

All modes run one inner iteration scheme: splitting variables ``Z``
(data fit) and ``V`` (covariance coupling) with scaled duals, a
per-column closed-form ``V`` step, a group soft-threshold ``X`` step,
and dual ascent.  With ``beta2 = 0`` the ``V`` block is passive and the
iteration reduces exactly (same arithmetic, same floats) to the plain
group-sparse splitting, which keeps the three modes comparable
iterate-for-iterate in diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .sim import CovarianceSet


class SolverMode(str, Enum):
    ADMM = "ADMM"
    IRW_ADMM = "IRW_ADMM"
    COV_ADMM = "COV_ADMM"


class SolverDivergence(RuntimeError):
    """Raised when an iterate stops being finite."""


@dataclass
class SolverConfig:
    """Hyperparameters of the ADMM engine.

    ``beta1`` weighs the group-sparsity penalty, ``beta2`` the
    covariance-deviation penalty (ignored outside COV_ADMM mode),
    ``rho`` is the ADMM penalty parameter, ``eps0`` the log-sum
    smoothing offset, ``kappa`` the steepness of the indicator
    relaxation.  ``l_max`` caps outer reweighting passes (ADMM mode
    always runs one), ``k_max`` caps inner iterations per pass, and the
    inner loop also stops once ``||X_k - X_{k-1}||_F < eps_tol``.
    """

    mode: SolverMode = SolverMode.ADMM
    beta1: float = 0.1
    beta2: float = 0.0
    rho: float = 1.0
    eps0: float = 0.1
    kappa: float = 100.0
    l_max: int = 10
    k_max: int = 100
    eps_tol: float = 1e-4

    def validate(self) -> None:
        if self.beta1 < 0:
            raise ValueError("beta1 must be >= 0")
        if self.beta2 < 0:
            raise ValueError("beta2 must be >= 0")
        for name in ("rho", "eps0", "kappa", "eps_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.l_max < 1 or self.k_max < 1:
            raise ValueError("l_max and k_max must be >= 1")
        SolverMode(self.mode)


def default_solver_config(
    mode: SolverMode | str,
    N: int,
    M: int,
    noise_var: float,
    *,
    beta1_scale: float = 1.0,
    beta2_scale: float = 1.0,
    eps0_scale: float = 1.0,
) -> SolverConfig:
    """Scale-aware defaults.

    ``beta1`` follows the universal-threshold rule sigma * sqrt(2 log N)
    (zero noise gives zero penalty, appropriate for exact-recovery
    tests), ``beta2`` is normalized by the squared antenna count since
    the deviation term is quartic in channel amplitude, and ``eps0``
    grows with sqrt(M) to stay proportional to typical column norms.
    The ``*_scale`` knobs are the intended tuning surface; note that
    ``eps0`` sets the weight a zero row gets on the next reweighting
    pass (``g = 1/eps0``), so small values aggressively lock out rows
    that an early pass shrank to zero while values near the expected
    column norm ``sqrt(M)`` keep the reweighting gentle.
    """
    mode = SolverMode(mode)
    beta1 = beta1_scale * math.sqrt(noise_var) * math.sqrt(2.0 * math.log(N))
    return SolverConfig(
        mode=mode,
        beta1=beta1,
        beta2=beta2_scale * 0.1 / M**2 if mode is SolverMode.COV_ADMM else 0.0,
        rho=1.0,
        eps0=eps0_scale * 0.1 * math.sqrt(M),
        kappa=100.0,
        l_max=1 if mode is SolverMode.ADMM else 10,
        k_max=100,
        eps_tol=1e-4,
    )


@dataclass
class SolveHistory:
    """Per-inner-iteration diagnostics, concatenated across outer passes."""

    primal_z: np.ndarray
    primal_v: np.ndarray
    delta_x: np.ndarray
    objective: np.ndarray
    outer_starts: np.ndarray


@dataclass
class SolverState:
    """Mutable engine state; exposed mainly for tests and instrumentation."""

    X: np.ndarray
    Z: np.ndarray
    V: np.ndarray
    Lambda_z: np.ndarray
    Lambda_v: np.ndarray
    g: np.ndarray
    q: np.ndarray
    k: int = 0
    l: int = 0


@dataclass
class RecoveryResult:
    X_hat: np.ndarray
    iterations_inner_total: int
    iterations_outer: int
    converged: bool
    history: SolveHistory


def group_norms(X: np.ndarray) -> np.ndarray:
    """Euclidean norm of each device's column of X (length N)."""
    return np.linalg.norm(X, axis=0)


def group_shrink(c: np.ndarray, t: float) -> np.ndarray:
    """Group soft-threshold: scale c to drop its norm by t, zero if ||c|| <= t."""
    if t < 0:
        raise ValueError("threshold must be >= 0")
    nrm = np.linalg.norm(c)
    if nrm <= t or nrm == 0.0:
        return np.zeros_like(c)
    return (1.0 - t / nrm) * c


def _shrink_columns(S: np.ndarray, t: np.ndarray) -> np.ndarray:
    # Columnwise group_shrink with per-column thresholds, same arithmetic
    # as the scalar form so results agree bitwise.
    nrm = np.linalg.norm(S, axis=0)
    safe = np.where(nrm > 0.0, nrm, 1.0)
    scale = np.where(nrm > t, 1.0 - t / safe, 0.0)
    return S * scale


def weight_g(norms: np.ndarray, eps0: float) -> np.ndarray:
    """Majorization weights of the log-sum penalty: g_i = 1 / (eps0 + ||x_i||)."""
    return 1.0 / (eps0 + np.asarray(norms, dtype=float))


def weight_q(norms: np.ndarray, kappa: float) -> np.ndarray:
    """Majorization weights of the indicator relaxation: kappa / (log(1+kappa) (1 + kappa ||x_i||))."""
    norms = np.asarray(norms, dtype=float)
    return (kappa / np.log1p(kappa)) / (1.0 + kappa * norms)


def relax_indicator(v: float, kappa: float) -> float:
    """Concave step surrogate f(v; kappa) = log(1 + kappa v) / log(1 + kappa); f(0)=0, f(1)=1."""
    if v < 0:
        raise ValueError("v must be >= 0")
    return float(np.log1p(kappa * v) / np.log1p(kappa))


def _apply_cov(R_tilde: np.ndarray, A: np.ndarray) -> np.ndarray:
    # Column i of the result is R_i @ a_i; shapes (N, M, M) x (M, N) -> (M, N).
    return np.einsum("nij,jn->in", R_tilde, A)


def _cov_fro_sq(R_tilde: np.ndarray) -> np.ndarray:
    return np.einsum("nij,nij->n", R_tilde, R_tilde.conj()).real


def _solve_from_right(A_factor, B: np.ndarray) -> np.ndarray:
    # Solve X A = B for Hermitian positive definite A given its Cholesky
    # factorization: X = (A^{-1} B^H)^H.
    return cho_solve(A_factor, B.conj().T).conj().T


def z_update_plain(
    X: np.ndarray,
    Lambda: np.ndarray,
    Y: np.ndarray,
    Phi: np.ndarray,
    rho: float,
    *,
    factor=None,
    yphi: np.ndarray | None = None,
) -> np.ndarray:
    """Data-fit block update: Z = (rho X + Lambda + Y^T Phi*) (Phi^T Phi* + rho I)^{-1}.

    ``factor`` is the cached Cholesky factorization of the N x N system;
    the caller computes it once per solve since the system is constant.
    """
    if factor is None:
        N = Phi.shape[1]
        factor = cho_factor(Phi.T @ Phi.conj() + rho * np.eye(N))
    if yphi is None:
        yphi = Y.T @ Phi.conj()
    return _solve_from_right(factor, rho * X + Lambda + yphi)


def z_update_cov(
    X: np.ndarray,
    V: np.ndarray,
    Lambda_z: np.ndarray,
    Y: np.ndarray,
    Phi: np.ndarray,
    R_tilde: np.ndarray,
    q: np.ndarray,
    beta2: float,
    rho: float,
    *,
    gram: np.ndarray | None = None,
    yphi: np.ndarray | None = None,
    plain_factor=None,
) -> np.ndarray:
    """Data-fit block update with the covariance coupling active.

    Z = (Y^T Phi* + B)(Phi^T Phi* + D)^{-1} with per-column
    b_i = 2 beta2 q_i ||x_i|| R_i v_i + rho x_i + lambda_{z,i} and
    diagonal d_i = 2 beta2 q_i ||x_i|| ||v_i||^2 + rho.  The system
    depends on the current iterate through D, so it is refactorized on
    every call; with beta2 = 0 it falls back to the cached plain update.
    """
    if beta2 == 0.0:
        return z_update_plain(X, Lambda_z, Y, Phi, rho, factor=plain_factor, yphi=yphi)
    if gram is None:
        gram = Phi.T @ Phi.conj()
    if yphi is None:
        yphi = Y.T @ Phi.conj()
    coef = 2.0 * beta2 * np.asarray(q, dtype=float) * group_norms(X)
    B = coef * _apply_cov(R_tilde, V) + rho * X + Lambda_z
    d = coef * np.sum(np.abs(V) ** 2, axis=0) + rho
    factor = cho_factor(gram + np.diag(d))
    return _solve_from_right(factor, yphi + B)


def v_update(
    X: np.ndarray,
    Z: np.ndarray,
    Lambda_v: np.ndarray,
    R_tilde: np.ndarray | None,
    q: np.ndarray,
    beta2: float,
    rho: float,
    *,
    rtz: np.ndarray | None = None,
) -> np.ndarray:
    """Covariance block update, columnwise closed form.

    v_i = (2 beta2 q_i ||x_i|| R_i z_i + rho x_i + lambda_{v,i})
          / (2 beta2 q_i ||x_i|| ||z_i||^2 + rho).
    With beta2 = 0 this is plain consensus: v_i = x_i + lambda_{v,i}/rho.
    """
    if beta2 == 0.0 or R_tilde is None:
        return X + Lambda_v / rho
    if rtz is None:
        rtz = _apply_cov(R_tilde, Z)
    coef = 2.0 * beta2 * np.asarray(q, dtype=float) * group_norms(X)
    num = coef * rtz + rho * X + Lambda_v
    den = coef * np.sum(np.abs(Z) ** 2, axis=0) + rho
    return num / den


def x_update(
    Z: np.ndarray,
    V: np.ndarray,
    Lambda_z: np.ndarray,
    Lambda_v: np.ndarray,
    g: np.ndarray,
    q: np.ndarray,
    R_tilde: np.ndarray | None,
    beta1: float,
    beta2: float,
    rho: float,
    *,
    rtz: np.ndarray | None = None,
) -> np.ndarray:
    """Sparsity block update: group shrink of S = (Z + V - (Lambda_z + Lambda_v)/rho)/2.

    Column thresholds are alpha_i / (2 rho) with
    alpha_i = beta1 g_i + beta2 q_i ||z_i v_i^H - R_i||_F^2; the rank-one
    deviation expands to ||z_i||^2 ||v_i||^2 - 2 Re(v_i^H R_i z_i) + ||R_i||_F^2
    (clamped at zero against rounding) so no M x M outer product is formed.
    """
    S = 0.5 * (Z + V - (Lambda_z + Lambda_v) / rho)
    alpha = beta1 * np.asarray(g, dtype=float)
    if beta2 > 0.0 and R_tilde is not None:
        if rtz is None:
            rtz = _apply_cov(R_tilde, Z)
        dev = (
            np.sum(np.abs(Z) ** 2, axis=0) * np.sum(np.abs(V) ** 2, axis=0)
            - 2.0 * np.real(np.sum(V.conj() * rtz, axis=0))
            + _cov_fro_sq(R_tilde)
        )
        alpha = alpha + beta2 * np.asarray(q, dtype=float) * np.maximum(dev, 0.0)
    return _shrink_columns(S, alpha / (2.0 * rho))


def dual_update(Lambda: np.ndarray, X: np.ndarray, Other: np.ndarray, rho: float) -> np.ndarray:
    """Dual ascent on a consensus constraint: Lambda + rho (X - Other)."""
    return Lambda + rho * (X - Other)


def objective_l21(X: np.ndarray, Y: np.ndarray, Phi: np.ndarray, beta1: float, g) -> float:
    """Weighted group-sparse objective 0.5 ||Phi X^T - Y||_F^2 + beta1 sum_i g_i ||x_i||."""
    fit = 0.5 * np.linalg.norm(Phi @ X.T - Y) ** 2
    return float(fit + beta1 * np.sum(np.asarray(g, dtype=float) * group_norms(X)))


def objective_cov(
    X: np.ndarray,
    Y: np.ndarray,
    Phi: np.ndarray,
    R_tilde: np.ndarray,
    beta1: float,
    beta2: float,
    g,
    q,
) -> float:
    """Group-sparse objective plus the weighted covariance-deviation term.

    The deviation uses the actual iterate on both sides,
    ``||x_i x_i^H - R_i||_F^2 = ||x_i||^4 - 2 x_i^H R_i x_i + ||R_i||_F^2``.
    """
    base = objective_l21(X, Y, Phi, beta1, g)
    if beta2 == 0.0:
        return base
    norms_sq = np.sum(np.abs(X) ** 2, axis=0)
    quad = np.real(np.sum(X.conj() * _apply_cov(R_tilde, X), axis=0))
    dev = np.maximum(norms_sq**2 - 2.0 * quad + _cov_fro_sq(R_tilde), 0.0)
    scaled = np.sqrt(norms_sq) * np.asarray(q, dtype=float) * dev
    return float(base + beta2 * np.sum(scaled))


def solve(
    Y: np.ndarray,
    Phi: np.ndarray,
    cfg: SolverConfig,
    cov: CovarianceSet | None = None,
    x_callback=None,
) -> RecoveryResult:
    """Run the configured solver on one observation block.

    Outer passes recompute the majorization weights from the current
    iterate (all-zero start, so the first pass uses ``g = 1/eps0`` and
    ``q = kappa/log(1+kappa)``); ADMM mode pins unit weights and runs a
    single pass.  Each inner iteration performs the Z, V, X and dual
    updates in that order and stops at the iteration cap, or once the
    iterate change drops below ``eps_tol`` with both consensus residuals
    below ``10 * eps_tol``.  ``x_callback(j, X)`` is invoked with the
    cumulative inner-iteration count, including ``j = 0`` for the
    all-zero start, which is what convergence probes consume.

    Raises ``SolverDivergence`` if an iterate leaves the finite range,
    ``ValueError`` on inconsistent shapes or a missing covariance set in
    COV_ADMM mode.
    """
    Y = np.asarray(Y, dtype=complex)
    Phi = np.asarray(Phi, dtype=complex)
    if Y.ndim != 2 or Phi.ndim != 2 or Y.shape[0] != Phi.shape[0]:
        raise ValueError(f"inconsistent shapes Y {Y.shape}, Phi {Phi.shape}")
    cfg.validate()
    mode = SolverMode(cfg.mode)
    M = Y.shape[1]
    N = Phi.shape[1]

    R = None
    beta2 = 0.0
    if mode is SolverMode.COV_ADMM:
        if cov is None:
            raise ValueError("COV_ADMM mode requires a CovarianceSet")
        R = np.asarray(cov.R_tilde, dtype=complex)
        if R.shape != (N, M, M):
            raise ValueError(f"covariance stack must be ({N}, {M}, {M}), got {R.shape}")
        beta2 = float(cfg.beta2)

    rho = float(cfg.rho)
    gram = Phi.T @ Phi.conj()
    yphi = Y.T @ Phi.conj()
    plain_factor = cho_factor(gram + rho * np.eye(N))

    zeros = np.zeros((M, N), dtype=complex)
    st = SolverState(
        X=zeros.copy(),
        Z=zeros.copy(),
        V=zeros.copy(),
        Lambda_z=zeros.copy(),
        Lambda_v=zeros.copy(),
        g=np.ones(N),
        q=np.ones(N),
    )
    hist_pz: list[float] = []
    hist_pv: list[float] = []
    hist_dx: list[float] = []
    hist_obj: list[float] = []
    outer_starts: list[int] = []

    if x_callback is not None:
        x_callback(0, st.X.copy())

    l_total = 1 if mode is SolverMode.ADMM else int(cfg.l_max)
    g_cap = 1.0 / cfg.eps0
    q_cap = cfg.kappa / np.log1p(cfg.kappa)
    total = 0
    converged_last = False

    for l in range(l_total):
        st.l = l
        if mode is SolverMode.ADMM:
            st.g = np.ones(N)
            st.q = np.ones(N)
        else:
            norms = group_norms(st.X)
            st.g = weight_g(norms, cfg.eps0)
            st.q = weight_q(norms, cfg.kappa)
            ok_g = np.all(st.g > 0) and np.all(st.g <= g_cap * (1 + 1e-12))
            ok_q = np.all(st.q > 0) and np.all(st.q <= q_cap * (1 + 1e-12))
            if not (ok_g and ok_q):
                raise SolverDivergence(f"weights left their admissible range at outer pass {l}")
        outer_starts.append(total)
        converged_last = False

        for _ in range(int(cfg.k_max)):
            X_prev = st.X
            if mode is SolverMode.COV_ADMM:
                st.Z = z_update_cov(
                    st.X, st.V, st.Lambda_z, Y, Phi, R, st.q, beta2, rho,
                    gram=gram, yphi=yphi, plain_factor=plain_factor,
                )
                rtz = _apply_cov(R, st.Z) if beta2 > 0.0 else None
            else:
                st.Z = z_update_plain(st.X, st.Lambda_z, Y, Phi, rho, factor=plain_factor, yphi=yphi)
                rtz = None
            st.V = v_update(st.X, st.Z, st.Lambda_v, R, st.q, beta2, rho, rtz=rtz)
            st.X = x_update(
                st.Z, st.V, st.Lambda_z, st.Lambda_v, st.g, st.q, R, cfg.beta1, beta2, rho, rtz=rtz
            )
            st.Lambda_z = dual_update(st.Lambda_z, st.X, st.Z, rho)
            st.Lambda_v = dual_update(st.Lambda_v, st.X, st.V, rho)
            total += 1
            st.k = total

            dx = float(np.linalg.norm(st.X - X_prev))
            hist_pz.append(float(np.linalg.norm(st.X - st.Z)))
            hist_pv.append(float(np.linalg.norm(st.X - st.V)))
            hist_dx.append(dx)
            if mode is SolverMode.COV_ADMM:
                hist_obj.append(objective_cov(st.X, Y, Phi, R, cfg.beta1, beta2, st.g, st.q))
            else:
                hist_obj.append(objective_l21(st.X, Y, Phi, cfg.beta1, st.g))
            if not (np.isfinite(dx) and np.isfinite(hist_obj[-1])):
                raise SolverDivergence(
                    f"non-finite iterate at outer pass {l}, cumulative inner iteration {total}"
                )
            if x_callback is not None:
                x_callback(total, st.X.copy())
            # The iterate-change test alone false-triggers on the first
            # iteration (X can sit at zero while the duals still move),
            # so convergence also requires small consensus residuals.
            if dx < cfg.eps_tol and max(hist_pz[-1], hist_pv[-1]) < 10.0 * cfg.eps_tol:
                converged_last = True
                break

    history = SolveHistory(
        primal_z=np.asarray(hist_pz),
        primal_v=np.asarray(hist_pv),
        delta_x=np.asarray(hist_dx),
        objective=np.asarray(hist_obj),
        outer_starts=np.asarray(outer_starts, dtype=int),
    )
    return RecoveryResult(
        X_hat=st.X,
        iterations_inner_total=total,
        iterations_outer=l_total,
        converged=converged_last,
        history=history,
    )
