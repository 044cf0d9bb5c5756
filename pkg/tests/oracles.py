"""Independent reference implementations the tests compare against.

Everything here is deliberately naive: dense Kronecker products, plain
proximal-gradient descent, Monte-Carlo averages.  Slow but obviously
correct, which is the point.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from juice_mmv.sim import ula_response


def fista_l21(Y, Phi, beta1, g, iters=5000):
    """Accelerated proximal gradient on the weighted group-sparse problem.

    Minimizes 0.5 ||Phi Z^T - Y||_F^2 + beta1 sum_i g_i ||z_i||_2 over
    the M x N matrix Z.  Step size 1/L from the exact Lipschitz constant.
    """
    Y = np.asarray(Y, dtype=complex)
    Phi = np.asarray(Phi, dtype=complex)
    M = Y.shape[1]
    N = Phi.shape[1]
    g = np.asarray(g, dtype=float)
    L = float(np.linalg.eigvalsh(Phi.conj().T @ Phi)[-1])
    step = 1.0 / L
    Z = np.zeros((M, N), dtype=complex)
    W = Z.copy()
    t_acc = 1.0
    for _ in range(iters):
        grad = (Phi @ W.T - Y).T @ Phi.conj()
        U = W - step * grad
        nrm = np.linalg.norm(U, axis=0)
        thr = step * beta1 * g
        safe = np.where(nrm > 0.0, nrm, 1.0)
        Z_next = U * np.where(nrm > thr, 1.0 - thr / safe, 0.0)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc**2))
        W = Z_next + ((t_acc - 1.0) / t_next) * (Z_next - Z)
        Z, t_acc = Z_next, t_next
    return Z


def prox_row_reference(s, alpha, rho):
    """1-D reference for min_x alpha ||x|| + rho ||x - s||^2.

    The objective is rotation invariant, so the minimizer lies on the ray
    through s; a bounded scalar search finds its length.  Independent of
    the closed-form shrink used by the implementation.
    """
    s = np.asarray(s, dtype=complex)
    ns = float(np.linalg.norm(s))
    if ns == 0.0:
        return np.zeros_like(s)
    res = minimize_scalar(
        lambda c: alpha * c + rho * (c - ns) ** 2,
        bounds=(0.0, ns + 1.0),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return (res.x / ns) * s


def prox_row_reference_full(s, alpha, rho, dim):
    """Full-dimensional numeric minimizer of the per-row prox problem.

    Optimizes over stacked real and imaginary parts with BFGS from a
    couple of starts; slower than the scalar search but does not assume
    the minimizer's direction.
    """
    s = np.asarray(s, dtype=complex)

    def obj(u):
        x = u[:dim] + 1j * u[dim:]
        return alpha * np.linalg.norm(x) + rho * np.linalg.norm(x - s) ** 2

    best = None
    for x0 in (np.concatenate([s.real, s.imag]), np.zeros(2 * dim)):
        res = minimize(obj, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
        if best is None or res.fun < best.fun:
            best = res
    return best.x[:dim] + 1j * best.x[dim:]


def naive_mmse(Y, Phi, support, R_tilde, noise_var):
    """Dense-Kronecker linear MMSE of the active columns.

    Builds A = kron(Phi_S, I_M) and the block-diagonal prior explicitly,
    then solves the full tau_p*M system.  Cubic in everything; use only
    on small instances.
    """
    Y = np.asarray(Y, dtype=complex)
    Phi = np.asarray(Phi, dtype=complex)
    support = np.asarray(sorted(support), dtype=int)
    tau_p, M = Y.shape
    P = Phi[:, support]
    k = len(support)
    A = np.kron(P, np.eye(M))
    C_prior = np.zeros((k * M, k * M), dtype=complex)
    for j, i in enumerate(support):
        C_prior[j * M:(j + 1) * M, j * M:(j + 1) * M] = R_tilde[i]
    C_y = A @ C_prior @ A.conj().T + noise_var * np.eye(tau_p * M)
    x_vec = C_prior @ A.conj().T @ np.linalg.solve(C_y, Y.ravel())
    return x_vec.reshape(k, M).T


def mc_covariance(psi0, spread, M, delta_r, T, rng):
    """Stratified Monte-Carlo estimate of E[a(psi) a(psi)^H], psi uniform around psi0.

    One uniform draw per stratum of the angle interval: unbiased like
    plain Monte Carlo but with error falling as T^-1.5 for this smooth
    integrand, so a 1e-3 comparison tests the quadrature rather than
    sampling noise.
    """
    acc = np.zeros((M, M), dtype=complex)
    chunk = 20000
    done = 0
    while done < T:
        n = min(chunk, T - done)
        u = (done + np.arange(n) + rng.uniform(0.0, 1.0, size=n)) / T
        psi = psi0 + spread * (2.0 * u - 1.0)
        A = ula_response(psi, M, delta_r)
        acc += A @ A.conj().T
        done += n
    return acc / T
