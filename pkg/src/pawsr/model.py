"""Downlink system model: dimensions, channels, transceivers and the
MSE/rate algebra they induce.

Conventions used throughout the package: users are indexed k = 0..K-1,
symbols of user k are i = 0..S_k-1, and the flat symbol index is
l = S_0 + ... + S_{k-1} + i (user-major). Every block-diagonal assembly
(decoders, noise covariances, uplink precoders) follows this ordering.
The stacked channel is H = [H_0, ..., H_{K-1}] of shape N x M_total, so
the channel seen by user k is H_k^H (M_k x N).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

HERM_TOL = 1e-12


def herm(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def blkdiag(blocks) -> np.ndarray:
    return scipy.linalg.block_diag(*blocks)


def symmetrize(a: np.ndarray) -> np.ndarray:
    """(A + A^H)/2 - floating point drift control before inversion."""
    return 0.5 * (a + herm(a))


@dataclass
class SystemDims:
    """Problem dimensions: K users, N BS antennas, per-user receive
    antennas M_k and stream counts S_k."""

    K: int
    N: int
    M: tuple
    S: tuple

    def __post_init__(self):
        self.M = tuple(int(m) for m in self.M)
        self.S = tuple(int(s) for s in self.S)
        if self.K < 1 or self.N < 1:
            raise ValueError("K and N must be >= 1")
        if len(self.M) != self.K or len(self.S) != self.K:
            raise ValueError("M and S must have length K")
        for m, s in zip(self.M, self.S):
            if not (1 <= s <= m):
                raise ValueError(f"need 1 <= S_k <= M_k, got S_k={s}, M_k={m}")
        if self.S_total > self.N:
            raise ValueError("total stream count must not exceed N")

    @property
    def M_total(self) -> int:
        return sum(self.M)

    @property
    def S_total(self) -> int:
        return sum(self.S)

    def antenna_slices(self):
        """Per-user row ranges of the M_total-dim receive space."""
        off = np.cumsum((0,) + self.M)
        return [slice(off[k], off[k + 1]) for k in range(self.K)]

    def symbol_slices(self):
        """Per-user column ranges of the S_total-dim symbol space."""
        off = np.cumsum((0,) + self.S)
        return [slice(off[k], off[k + 1]) for k in range(self.K)]

    def symbol_user(self) -> np.ndarray:
        """Flat symbol index -> owning user."""
        return np.repeat(np.arange(self.K), self.S)


@dataclass
class ChannelSet:
    """Stacked downlink channel H (N x M_total) with per-user column blocks."""

    dims: SystemDims
    H: np.ndarray

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=complex)
        if self.H.shape != (self.dims.N, self.dims.M_total):
            raise ValueError(f"H must be N x M_total, got {self.H.shape}")
        if not np.all(np.isfinite(self.H.view(float))):
            raise ValueError("channel entries must be finite")

    @classmethod
    def from_blocks(cls, dims: SystemDims, blocks) -> "ChannelSet":
        if len(blocks) != dims.K:
            raise ValueError("need one channel block per user")
        for k, hk in enumerate(blocks):
            if hk.shape != (dims.N, dims.M[k]):
                raise ValueError(f"block {k} must be N x M_k, got {hk.shape}")
        return cls(dims, np.concatenate([np.asarray(b, complex) for b in blocks], axis=1))

    def block(self, k: int) -> np.ndarray:
        return self.H[:, self.dims.antenna_slices()[k]]

    @property
    def blocks(self):
        return [self.block(k) for k in range(self.dims.K)]


@dataclass
class NoiseModel:
    """Per-user Hermitian PD receive noise covariances R_nk; assembled
    block-diagonally into R_n. sigma2 is set when the isotropic form
    R_n = sigma2*I is used."""

    dims: SystemDims
    blocks: list
    sigma2: float | None = None

    def __post_init__(self):
        self.blocks = [np.asarray(b, dtype=complex) for b in self.blocks]
        if len(self.blocks) != self.dims.K:
            raise ValueError("need one noise covariance per user")
        for k, r in enumerate(self.blocks):
            mk = self.dims.M[k]
            if r.shape != (mk, mk):
                raise ValueError(f"R_n block {k} must be M_k x M_k")
            if np.max(np.abs(r - herm(r))) > HERM_TOL * max(1.0, np.max(np.abs(r))):
                raise ValueError(f"R_n block {k} is not Hermitian")
            if np.min(np.linalg.eigvalsh(symmetrize(r))) <= 0:
                raise ValueError(f"R_n block {k} is not positive definite")

    @classmethod
    def isotropic(cls, dims: SystemDims, sigma2: float) -> "NoiseModel":
        if sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        return cls(dims, [sigma2 * np.eye(m) for m in dims.M], sigma2=float(sigma2))

    @property
    def R_n(self) -> np.ndarray:
        return blkdiag(self.blocks)


@dataclass
class RateWeights:
    """Per-symbol rate weights omega in (0,1) and the derived exponents
    gamma = 1/(1-omega), mu = 1/omega - 1, theta = omega * mu^(1-omega)."""

    omega: np.ndarray
    gamma: np.ndarray = field(init=False)
    mu: np.ndarray = field(init=False)
    theta: np.ndarray = field(init=False)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        if self.omega.ndim != 1 or self.omega.size == 0:
            raise ValueError("omega must be a nonempty vector")
        if np.any(self.omega <= 0) or np.any(self.omega >= 1):
            raise ValueError("rate weights must satisfy 0 < omega < 1")
        self.gamma = 1.0 / (1.0 - self.omega)
        self.mu = 1.0 / self.omega - 1.0
        self.theta = self.omega * self.mu ** (1.0 - self.omega)

    def eta(self, tau: np.ndarray) -> np.ndarray:
        """MSE weights eta_l = tau_l^mu_l for given auxiliaries tau."""
        tau = np.asarray(tau, dtype=float)
        if np.any(tau <= 0):
            raise ValueError("tau must be positive")
        return tau**self.mu


def derive_weights(omega) -> RateWeights:
    return RateWeights(np.asarray(omega, dtype=float))


@dataclass
class AuxVars:
    """Auxiliary variables (tau, nu) of the rate reformulation plus the
    derived MSE weights eta = tau^mu. The nu's multiply to one."""

    tau: np.ndarray
    nu: np.ndarray
    eta: np.ndarray

    @classmethod
    def create(cls, tau, nu, weights: RateWeights) -> "AuxVars":
        tau = np.asarray(tau, dtype=float)
        nu = np.asarray(nu, dtype=float)
        if np.any(tau <= 0) or np.any(nu <= 0):
            raise ValueError("tau and nu must be strictly positive")
        lognu = np.sum(np.log(nu))
        if abs(lognu) > 1e-8 * max(1.0, np.sum(np.abs(np.log(nu)))):
            raise ValueError("product of nu must equal 1")
        return cls(tau, nu, weights.eta(tau))


@dataclass
class DownlinkTransceiver:
    """Precoder B (N x S_total) and block-diagonal decoder given by the
    per-user blocks W_k (M_k x S_k)."""

    dims: SystemDims
    B: np.ndarray
    W_blocks: list

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=complex)
        if self.B.shape != (self.dims.N, self.dims.S_total):
            raise ValueError("B must be N x S_total")
        if len(self.W_blocks) != self.dims.K:
            raise ValueError("need one decoder block per user")
        for k, w in enumerate(self.W_blocks):
            if w.shape != (self.dims.M[k], self.dims.S[k]):
                raise ValueError(f"W block {k} must be M_k x S_k")

    @property
    def W(self) -> np.ndarray:
        return blkdiag(self.W_blocks)


def _per_user_gram(B: np.ndarray, channels: ChannelSet, noise: NoiseModel):
    """Per-user receive-side Gram matrices H_k^H B B^H H_k + R_nk."""
    BBh = B @ herm(B)
    out = []
    for k in range(channels.dims.K):
        hk = channels.block(k)
        out.append(symmetrize(herm(hk) @ BBh @ hk + noise.blocks[k]))
    return out


def symbol_mse(B, W_blocks, channels: ChannelSet, noise: NoiseModel) -> np.ndarray:
    """Per-symbol downlink MSEs
    xi_l = w_l^H (H_k^H B B^H H_k + R_nk) w_l - 2 Re{w_l^H H_k^H b_l} + 1,
    evaluated jointly from the stacked trace form."""
    W = blkdiag(W_blocks)
    H = channels.H
    gamma_dl = symmetrize(herm(H) @ (B @ herm(B)) @ H + noise.R_n)
    E = herm(W) @ gamma_dl @ W - 2.0 * np.real(herm(W) @ herm(H) @ B) + np.eye(B.shape[1])
    return np.real(np.diag(E)).copy()


def mmse_receiver(B, channels: ChannelSet, noise: NoiseModel) -> list:
    """Per-user MMSE decoders W_k = (H_k^H B B^H H_k + R_nk)^{-1} H_k^H B_k."""
    dims = channels.dims
    grams = _per_user_gram(B, channels, noise)
    sym = dims.symbol_slices()
    out = []
    for k in range(dims.K):
        hk = channels.block(k)
        bk = B[:, sym[k]]
        out.append(np.linalg.solve(grams[k], herm(hk) @ bk))
    return out


def mmse_values(B, channels: ChannelSet, noise: NoiseModel) -> np.ndarray:
    """Per-symbol minimum MSEs
    xi_l = 1 - b_l^H H_k (H_k^H B B^H H_k + R_nk)^{-1} H_k^H b_l,
    guaranteed in (0, 1] for positive definite noise."""
    dims = channels.dims
    grams = _per_user_gram(B, channels, noise)
    sym = dims.symbol_slices()
    vals = np.empty(dims.S_total)
    for k in range(dims.K):
        hk = channels.block(k)
        x = herm(hk) @ B[:, sym[k]]  # M_k x S_k
        q = np.real(np.sum(x.conj() * np.linalg.solve(grams[k], x), axis=0))
        vals[sym[k]] = 1.0 - q
    if np.any(vals <= 0):
        raise ValueError("non-positive minimum MSE: numerical breakdown upstream")
    return vals


def symbol_rates(xi_min) -> np.ndarray:
    """Per-symbol rates R_l = -log2(xi_l) from the minimum MSEs."""
    xi = np.asarray(xi_min, dtype=float)
    if np.any(xi <= 0):
        raise ValueError("minimum MSEs must be positive")
    return -np.log2(xi)


def weighted_sum_rate(xi_min, omega) -> float:
    return float(np.sum(np.asarray(omega, float) * symbol_rates(xi_min)))


def weighted_sum_mse(B, W_blocks, channels: ChannelSet, noise: NoiseModel, eta) -> float:
    """Weighted downlink sum MSE tr{eta [W^H Gamma W - 2Re{W^H H^H B} + I]}."""
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise ValueError("eta must be positive")
    return float(np.sum(eta * symbol_mse(B, W_blocks, channels, noise)))


def surrogate_objective(tau, nu, xi, weights: RateWeights) -> float:
    """The merit function monitored by the outer loop:
    sum_l theta_l tau_l^{-1} nu_l^{gamma_l} + sum_l tau_l^{mu_l} xi_l."""
    tau = np.asarray(tau, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(tau <= 0) or np.any(nu <= 0):
        raise ValueError("tau and nu must be positive")
    return float(np.sum(weights.theta / tau * nu**weights.gamma) + np.sum(tau**weights.mu * np.asarray(xi, float)))


@dataclass
class Decomposition:
    """Transceiver factorization B_k = G_k P_k^{1/2}, W_k = U_k alpha_k P_k^{-1/2}
    with unit-norm columns g_l, u_l, positive powers p_l and real positive
    receiver scalings alpha_l."""

    dims: SystemDims
    G: np.ndarray
    p: np.ndarray
    U_blocks: list
    alpha: np.ndarray

    @property
    def U(self) -> np.ndarray:
        return blkdiag(self.U_blocks)


def decompose(B, W_blocks, dims: SystemDims) -> Decomposition:
    bn2 = np.real(np.sum(B.conj() * B, axis=0))
    if np.any(bn2 < 1e-100):
        raise ValueError("degenerate stream: zero precoder column")
    p = bn2
    G = B / np.sqrt(p)
    sym = dims.symbol_slices()
    U_blocks = []
    alpha = np.empty(dims.S_total)
    for k, w in enumerate(W_blocks):
        wn = np.sqrt(np.real(np.sum(w.conj() * w, axis=0)))
        if np.any(wn < 1e-100):
            raise ValueError("degenerate stream: zero decoder column")
        U_blocks.append(w / wn)
        alpha[sym[k]] = wn * np.sqrt(p[sym[k]])
    return Decomposition(dims, G, p, U_blocks, alpha)


def recompose(dec: Decomposition):
    """Inverse of decompose: (B, W_blocks) from (G, p, U, alpha)."""
    B = dec.G * np.sqrt(dec.p)
    sym = dec.dims.symbol_slices()
    W_blocks = [
        u * (dec.alpha[sym[k]] / np.sqrt(dec.p[sym[k]]))
        for k, u in enumerate(dec.U_blocks)
    ]
    return B, W_blocks


@dataclass
class CouplingMatrices:
    """Power-coupling data of the per-symbol MSE as a function of p:
    phi[l, j] = |g_l^H H u_j|^2 off the diagonal, d[l] the signed direct-link
    coefficient, varsigma[n, i] = |G[n, i]|^2 the per-antenna power rows."""

    phi: np.ndarray
    d: np.ndarray
    varsigma: np.ndarray


def coupling_matrices(dec: Decomposition, channels: ChannelSet) -> CouplingMatrices:
    m = herm(dec.G) @ channels.H @ dec.U  # m[l, j] = g_l^H H u_j
    phi = np.abs(m) ** 2
    diag = np.diag(m)
    np.fill_diagonal(phi, 0.0)
    d = dec.alpha**2 * np.abs(diag) ** 2 - 2.0 * dec.alpha * np.real(diag) + 1.0
    varsigma = np.abs(dec.G) ** 2
    return CouplingMatrices(phi, d, varsigma)


def noise_quadratics(U_blocks, noise: NoiseModel) -> np.ndarray:
    """Per-symbol u_l^H R_n u_l (real positive for PD noise)."""
    out = []
    for u, r in zip(U_blocks, noise.blocks):
        out.append(np.real(np.sum(u.conj() * (r @ u), axis=0)))
    return np.concatenate(out)


def mse_from_powers(p, coupling: CouplingMatrices, alpha, U_blocks, noise: NoiseModel) -> np.ndarray:
    """Per-symbol MSEs as posynomial ratios of the powers:
    xi_l = p_l^{-1} [(D + alpha^2 Phi^T) p]_l + p_l^{-1} alpha_l^2 u_l^H R_n u_l."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("powers must be positive")
    a2 = np.asarray(alpha, float) ** 2
    cross = a2 * (coupling.phi.T @ p)
    noise_term = a2 * noise_quadratics(U_blocks, noise)
    return (coupling.d * p + cross + noise_term) / p
