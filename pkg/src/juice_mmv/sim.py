"""Synthetic uplink scenarios for joint activity detection and channel estimation.

The model is a single cell: ``N`` single-antenna devices, ``K`` of them
active in a coherence block, transmitting unit-norm pilots of length
``tau_p`` to a base station with an ``M``-antenna uniform linear array.
The received pilot signal is

    Y = Phi X^T + W,

where ``Phi`` is the ``tau_p x N`` pilot matrix, ``X`` is the ``M x N``
effective channel matrix whose column ``x_i`` is zero for inactive
devices, and ``W`` has i.i.d. circular complex Gaussian entries with
variance ``noise_var`` per entry.  Channels follow a multipath model
with a limited angular spread around a per-device mean angle of
arrival, which makes the per-device spatial covariance matrices
strongly structured; those covariances are what the covariance-aware
solver and the MMSE refinement exploit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Gauss-Legendre node count used for covariance integrals.
DEFAULT_QUAD_NODES = 257


@dataclass
class SystemConfig:
    """Static description of one simulated cell.

    Parameters mirror the usual grant-free access setup: many devices,
    few active, short pilots (``tau_p < K * M`` is the interesting
    regime).  ``snr_db`` sets the noise variance via
    ``noise_var = 10 ** (-snr_db / 10)`` against unit-power pilots and
    unit average channel gain per antenna.
    """

    N: int = 200
    M: int = 20
    K: int = 10
    tau_p: int = 20
    P: int = 200
    delta_r: float = 0.5
    aoa_mean_range: tuple[float, float] = (math.pi / 3, 2 * math.pi / 3)
    angular_spread: float = math.radians(10.0)
    snr_db: float = 10.0
    seed: int = 0

    def validate(self) -> None:
        if not (1 <= self.K <= self.N):
            raise ValueError(f"need 1 <= K <= N, got K={self.K}, N={self.N}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.tau_p < 1:
            raise ValueError(f"tau_p must be >= 1, got {self.tau_p}")
        if self.P < 1:
            raise ValueError(f"P must be >= 1, got {self.P}")
        if not self.delta_r > 0:
            raise ValueError(f"delta_r must be > 0, got {self.delta_r}")
        if self.angular_spread < 0:
            raise ValueError(f"angular_spread must be >= 0, got {self.angular_spread}")
        lo, hi = self.aoa_mean_range
        if not (0.0 < lo <= hi < np.pi):
            raise ValueError(f"aoa_mean_range must lie inside (0, pi), got {self.aoa_mean_range}")

    @property
    def noise_var(self) -> float:
        return float(10.0 ** (-self.snr_db / 10.0))


@dataclass
class UEGeometry:
    """Per-device quantities fixed for a whole experiment.

    ``tx_power`` is the power-control coefficient rho_i.  Under the unit
    average-gain channel model every device has the same average gain,
    so the inverse-gain policy degenerates to rho_i = 1; the field stays
    configurable for unequal-power studies.
    """

    mean_aoa: np.ndarray
    tx_power: np.ndarray

    def validate(self, cfg: SystemConfig) -> None:
        if self.mean_aoa.shape != (cfg.N,) or self.tx_power.shape != (cfg.N,):
            raise ValueError("geometry arrays must have shape (N,)")
        if np.any(self.tx_power <= 0):
            raise ValueError("tx_power entries must be > 0")


@dataclass
class CovarianceSet:
    """Known scaled spatial covariances R_i = rho_i * E[h_i h_i^H], stacked (N, M, M)."""

    R_tilde: np.ndarray

    def validate(self, tx_power: np.ndarray | None = None) -> None:
        R = self.R_tilde
        if R.ndim != 3 or R.shape[1] != R.shape[2]:
            raise ValueError(f"R_tilde must be (N, M, M), got {R.shape}")
        herm_gap = np.max(np.abs(R - R.conj().transpose(0, 2, 1)))
        if herm_gap > 1e-12:
            raise ValueError(f"R_tilde not Hermitian, max deviation {herm_gap:.3e}")
        eigs = np.linalg.eigvalsh(R)
        if eigs.min() < -1e-10:
            raise ValueError(f"R_tilde not PSD, min eigenvalue {eigs.min():.3e}")
        if tx_power is not None:
            diag = np.einsum("nmm->nm", R).real
            if not np.allclose(diag, tx_power[:, None], rtol=1e-8, atol=1e-10):
                raise ValueError("diagonal of R_tilde must equal tx_power per device")


@dataclass
class ScenarioInstance:
    """One realized coherence block: pilots, true channels, observation."""

    Phi: np.ndarray
    X_true: np.ndarray
    active_set: np.ndarray
    Y: np.ndarray
    noise_var: float


def ula_response(psi, M: int, delta_r: float) -> np.ndarray:
    """Array response of an M-element ULA, [a(psi)]_m = exp(-j (m-1) 2 pi delta_r cos psi).

    ``psi`` may be a scalar or an array; the antenna axis is prepended,
    so an array of angles with shape ``s`` yields shape ``(M, *s)``.
    """
    psi = np.asarray(psi, dtype=float)
    m = np.arange(M).reshape((M,) + (1,) * psi.ndim)
    return np.exp(-1j * 2.0 * np.pi * delta_r * m * np.cos(psi))


def draw_channel(rng: np.random.Generator, mean_aoa: float, cfg: SystemConfig) -> np.ndarray:
    """One multipath channel: h = (1/sqrt(P)) sum_p omega_p a(mean_aoa + delta_p).

    Path angles are uniform on [-angular_spread, +angular_spread] around
    the mean and gains are i.i.d. CN(0, 1), so E[h h^H] has unit
    diagonal for any P.  Draw order (angles, then gains) is part of the
    reproducibility contract.
    """
    delta = rng.uniform(-cfg.angular_spread, cfg.angular_spread, size=cfg.P)
    gains = (rng.standard_normal(cfg.P) + 1j * rng.standard_normal(cfg.P)) / np.sqrt(2.0)
    A = ula_response(mean_aoa + delta, cfg.M, cfg.delta_r)
    return (A @ gains) / np.sqrt(cfg.P)


def compute_covariance(
    mean_aoa: float, cfg: SystemConfig, nodes: int = DEFAULT_QUAD_NODES
) -> np.ndarray:
    """Spatial covariance E[a(psi) a(psi)^H] for psi uniform around ``mean_aoa``.

    Entry (m, n) is the expectation of exp(-j 2 pi delta_r (m-n) cos psi),
    evaluated with fixed-node Gauss-Legendre quadrature over the spread
    interval (deterministic, no sampling noise).  The result is
    symmetrized to exact Hermitian form and the diagonal is pinned to
    exactly 1 so downstream PSD checks are not at the mercy of rounding.
    A zero spread degenerates to the rank-one outer product a a^H.
    """
    if cfg.angular_spread == 0.0:
        a = ula_response(mean_aoa, cfg.M, cfg.delta_r)
        R = np.outer(a, a.conj())
    else:
        x, w = np.polynomial.legendre.leggauss(nodes)
        w = w / w.sum()
        A = ula_response(mean_aoa + cfg.angular_spread * x, cfg.M, cfg.delta_r)
        R = (A * w) @ A.conj().T
    R = 0.5 * (R + R.conj().T)
    np.fill_diagonal(R, 1.0)
    return R


def generate_pilots(rng: np.random.Generator, tau_p: int, N: int) -> np.ndarray:
    """QPSK pilot matrix with i.i.d. entries (+-1 +-j)/sqrt(2), columns normalized to unit norm."""
    re = 2.0 * rng.integers(0, 2, size=(tau_p, N)) - 1.0
    im = 2.0 * rng.integers(0, 2, size=(tau_p, N)) - 1.0
    Phi = (re + 1j * im) / np.sqrt(2.0)
    return Phi / np.linalg.norm(Phi, axis=0, keepdims=True)


def build_geometry(rng: np.random.Generator, cfg: SystemConfig) -> UEGeometry:
    """Draw per-device mean angles uniformly over ``aoa_mean_range``; unit power control."""
    lo, hi = cfg.aoa_mean_range
    mean_aoa = rng.uniform(lo, hi, size=cfg.N)
    return UEGeometry(mean_aoa=mean_aoa, tx_power=np.ones(cfg.N))


def build_covariance_set(
    geom: UEGeometry, cfg: SystemConfig, nodes: int = DEFAULT_QUAD_NODES
) -> CovarianceSet:
    """Stack rho_i * R_i for all devices; this is the side information the BS is assumed to know."""
    R = np.empty((cfg.N, cfg.M, cfg.M), dtype=complex)
    for i in range(cfg.N):
        R[i] = geom.tx_power[i] * compute_covariance(geom.mean_aoa[i], cfg, nodes)
    return CovarianceSet(R_tilde=R)


def make_scenario(
    rng: np.random.Generator,
    cfg: SystemConfig,
    geom: UEGeometry,
    cov: CovarianceSet | None = None,
    *,
    phi: np.ndarray | None = None,
) -> ScenarioInstance:
    """Realize one coherence block.

    Draw order: active set, then per-active-device channels in index
    order, then noise.  ``phi`` pins the pilot matrix so that sweeps
    over SNR reuse identical pilots; when omitted a fresh pilot matrix
    is drawn from ``rng`` first.  ``cov`` is only checked for shape
    consistency; channels always come from the multipath model.
    """
    cfg.validate()
    if cov is not None and cov.R_tilde.shape != (cfg.N, cfg.M, cfg.M):
        raise ValueError("covariance set shape inconsistent with config")
    if phi is None:
        phi = generate_pilots(rng, cfg.tau_p, cfg.N)
    elif phi.shape != (cfg.tau_p, cfg.N):
        raise ValueError(f"pilot matrix must be (tau_p, N), got {phi.shape}")

    active = np.sort(rng.choice(cfg.N, size=cfg.K, replace=False))
    X = np.zeros((cfg.M, cfg.N), dtype=complex)
    for i in active:
        X[:, i] = np.sqrt(geom.tx_power[i]) * draw_channel(rng, geom.mean_aoa[i], cfg)

    noise_var = cfg.noise_var
    W = np.sqrt(noise_var / 2.0) * (
        rng.standard_normal((cfg.tau_p, cfg.M)) + 1j * rng.standard_normal((cfg.tau_p, cfg.M))
    )
    Y = phi @ X.T + W
    return ScenarioInstance(Phi=phi, X_true=X, active_set=active, Y=Y, noise_var=noise_var)
