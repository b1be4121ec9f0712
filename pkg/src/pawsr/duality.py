"""Weighted sum MSE transfer between the downlink and a virtual uplink,
and the fixed-point construction of the uplink noise covariance that makes
the reverse transfer respect the per-antenna power caps.

The uplink is purely virtual: precoders V (block-diagonal), decoder T
(N x S_total), symbol variances zeta and MSE weights lam. Transfers use the
setting V = W, T = B, zeta = eta, lam = I; the diagonal uplink noise
Psi = diag(psi) is the free parameter the duality is steered with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ChannelSet, NoiseModel, blkdiag, herm, symmetrize


class FixedPointError(RuntimeError):
    """Uplink noise fixed point failed to converge; carries the last residual."""

    def __init__(self, message, residual=None, sweeps=None):
        super().__init__(message)
        self.residual = residual
        self.sweeps = sweeps


@dataclass
class UplinkTransceiver:
    """Virtual uplink transceiver: block-diagonal precoders V_k, decoder T,
    per-symbol input variances zeta and MSE weights lam."""

    V_blocks: list
    T: np.ndarray
    zeta: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        self.zeta = np.asarray(self.zeta, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        if np.any(self.zeta <= 0) or np.any(self.lam <= 0):
            raise ValueError("zeta and lam must be positive")


@dataclass
class FixedPointResult:
    psi: np.ndarray
    sweeps: int
    residual: float
    power_overshoot: float
    trim_loss: float = 0.0


def antenna_powers(B) -> np.ndarray:
    """Per-antenna transmit powers [B B^H]_{n,n} (squared row norms)."""
    return np.real(np.sum(np.asarray(B).conj() * B, axis=1))


def to_uplink(B, W_blocks, eta) -> UplinkTransceiver:
    """Configure the virtual uplink from the downlink pair: V = W, T = B,
    zeta = eta, lam = I. Any psi with p_tilde^T psi = tau_tilde preserves the
    weighted sum MSE; p_tilde^T psi < tau_tilde can only decrease it."""
    eta = np.asarray(eta, dtype=float)
    return UplinkTransceiver([w.copy() for w in W_blocks], np.array(B, copy=True),
                             eta.copy(), np.ones_like(eta))


def uplink_weighted_sum_mse(T, V_blocks, zeta, lam, channels: ChannelSet, psi) -> float:
    """tr{lam (T^H Sigma T - 2 Re{zeta T^H H V} + zeta)} with
    Sigma = H V zeta V^H H^H + diag(psi)."""
    zeta = np.asarray(zeta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    psi = np.asarray(psi, dtype=float)
    V = blkdiag(V_blocks)
    H = channels.H
    hv = H @ V
    sigma = symmetrize(hv * zeta @ herm(hv)) + np.diag(psi)
    E = herm(T) @ sigma @ T - 2.0 * np.real(zeta[None, :] * (herm(T) @ hv)) + np.diag(zeta)
    return float(np.real(np.sum(lam * np.diag(E))))


def weighted_noise_power(W_blocks, eta, noise: NoiseModel) -> float:
    """tau_tilde = sum_k tr{eta_k W_k^H R_nk W_k}, the decoder-side weighted
    noise power that anchors both transfer directions."""
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise ValueError("eta must be positive")
    total = 0.0
    off = 0
    for w, r in zip(W_blocks, noise.blocks):
        s = w.shape[1]
        quad = np.real(np.sum(w.conj() * (r @ w), axis=0))
        total += float(np.sum(eta[off:off + s] * quad))
        off += s
    return total


def equal_split_psi(tau_tilde: float, p_tilde) -> np.ndarray:
    """The simplest psi satisfying p_tilde^T psi = tau_tilde exactly."""
    p_tilde = np.asarray(p_tilde, dtype=float)
    return np.full(p_tilde.shape, tau_tilde / np.sum(p_tilde))


def uplink_mmse_receiver(V_blocks, zeta, channels: ChannelSet, psi) -> np.ndarray:
    """Uplink MMSE decoder T = (H V zeta V^H H^H + Psi)^{-1} H V zeta;
    psi > 0 guarantees the inverse exists."""
    psi = np.asarray(psi, dtype=float)
    if np.any(psi <= 0):
        raise ValueError("uplink noise psi must be strictly positive")
    zeta = np.asarray(zeta, dtype=float)
    V = blkdiag(V_blocks)
    hv = channels.H @ V
    sigma = symmetrize(hv * zeta @ herm(hv)) + np.diag(psi)
    return np.linalg.solve(sigma, hv * zeta)


def to_downlink(T, V_blocks, psi, tau_tilde: float):
    """Transfer the uplink pair back to the downlink: B = beta*T, W = V/beta
    with beta^2 = tau_tilde / sum_n psi_n ||t_n||^2. The resulting antenna
    powers are tau_tilde ||t_n||^2 / sum_i psi_i ||t_i||^2."""
    psi = np.asarray(psi, dtype=float)
    row_norms = antenna_powers(T)
    denom = float(np.sum(psi * row_norms))
    if denom <= 0 or tau_tilde <= 0:
        raise ValueError("transfer undefined for zero decoder or zero noise power")
    beta = np.sqrt(tau_tilde / denom)
    return beta * T, [v / beta for v in V_blocks]


def uplink_noise_fixed_point(W_blocks, eta, channels: ChannelSet, p_check,
                             tau_tilde: float, tol: float = 1e-8,
                             max_sweeps: int = 200000,
                             trim_tol: float = 5e-10) -> FixedPointResult:
    """Solve psi = F(psi), where
    F(psi)_n = (tau_tilde / p_check_n) * psi_n ||t_n||^2 / sum_i psi_i ||t_i||^2
    and t_n are the rows of the uplink MMSE decoder recomputed at the current
    psi. At the fixed point sum_n psi_n p_check_n = tau_tilde and the
    downlink transfer saturates every cap whose dual coordinate psi_n stays
    active (a vanished psi_n marks a slack cap).

    Stops when the relative l2 residual is within tol AND the residual
    per-antenna overshoot is small enough that trimming the transfer back
    onto the caps costs at most trim_tol in weighted sum MSE. Caps with
    degenerate (weakly active) duals make the iteration converge only
    algebraically, which is why the sweep budget is generous.
    """
    p_check = np.asarray(p_check, dtype=float)
    if np.any(p_check <= 0):
        raise ValueError("per-antenna caps must be positive")
    if tau_tilde <= 0:
        raise ValueError("transfer undefined: tau_tilde must be positive")
    # A component of psi flowing to zero marks an antenna whose cap is slack
    # at the fixed point (psi acts as that cap's dual variable). Clamping at
    # the nominal 1e-6 floor would stall the residual there and distort the
    # budget identity, so the floor is tied to the stopping tolerance: the
    # mass it parks on dead coordinates stays invisible at the measured
    # scales while keeping the uplink covariance invertible.
    # No upper clamp: the budget identity already bounds psi from above.
    eps = min(1e-6, tau_tilde / np.max(p_check),
              0.1 * trim_tol * tau_tilde / (np.sum(p_check) * np.max(p_check)))

    psi = np.full(channels.dims.N, tau_tilde / np.sum(p_check))

    def step(cur):
        t = uplink_mmse_receiver(W_blocks, eta, channels, cur)
        tn = antenna_powers(t)
        denom = float(np.sum(cur * tn))
        if denom <= 0:
            raise FixedPointError("degenerate uplink decoder (all rows zero)")
        return (tau_tilde / p_check) * cur * tn / denom, denom

    # Plain Picard always converges here (the map is almost-contractive) but
    # its dominant eigenvalue can sit near -1 (oscillation) or +1 (creeping
    # decay of a nearly-inactive dual coordinate), costing thousands of
    # sweeps. Phase 1 therefore runs Anderson acceleration over a short
    # history with a multiplicative trust region and restart safeguard; if
    # the accelerated pass fails, phase 2 falls back to plain Picard from the
    # best iterate, which is slow but sure. The residual is always measured
    # on the undamped map, which is the fixed-point equation itself.
    depth = 4
    accel_budget = min(150, max_sweeps)
    residual = np.inf
    hist_psi, hist_r = [], []
    best_residual = np.inf
    best_psi = psi
    plain_steps = 0
    for sweep in range(1, max_sweeps + 1):
        f_raw, denom = step(psi)
        # relative power overshoot a transfer at this psi would realize, and
        # the weighted-sum-MSE cost of trimming it back onto the caps
        over_rel = float(np.max(f_raw / psi)) - 1.0
        overshoot = float(np.max(p_check * (f_raw / psi - 1.0)))
        trim_loss = max(0.0, over_rel) * denom
        f = np.maximum(f_raw, eps)
        r = f - psi
        residual = float(np.linalg.norm(r))
        if residual <= tol * np.linalg.norm(psi) and trim_loss <= trim_tol:
            return FixedPointResult(psi, sweep, residual, overshoot, trim_loss)
        if residual < best_residual:
            best_residual = residual
            best_psi = psi.copy()
        if sweep >= accel_budget:
            if sweep == accel_budget:
                psi = best_psi.copy()  # phase 2: plain iteration
            else:
                psi = f
            continue
        if residual > 4.0 * best_residual and plain_steps == 0:
            # an extrapolation misfired; resume from the best iterate with a
            # few plain sweeps so the restart cannot enter a cycle
            psi = best_psi.copy()
            hist_psi, hist_r = [], []
            plain_steps = 3
            continue
        if plain_steps > 0:
            plain_steps -= 1
            psi = f
            continue
        hist_psi.append(psi.copy())
        hist_r.append(r.copy())
        if len(hist_psi) > depth:
            hist_psi.pop(0)
            hist_r.pop(0)
        if len(hist_psi) >= 2:
            d_r = np.stack([hist_r[i + 1] - hist_r[i]
                            for i in range(len(hist_r) - 1)], axis=1)
            d_psi = np.stack([hist_psi[i + 1] - hist_psi[i]
                              for i in range(len(hist_psi) - 1)], axis=1)
            gamma, *_ = np.linalg.lstsq(d_r, r, rcond=1e-12)
            psi_new = (psi + r) - (d_psi + d_r) @ gamma
        else:
            psi_new = psi + 0.5 * r
        # multiplicative trust region: the accelerated step must not slam a
        # coordinate onto the floor (recovery from there is a slow climb)
        psi = np.maximum(np.clip(psi_new, psi / 20.0, psi * 20.0), eps)
    raise FixedPointError(
        f"uplink noise fixed point did not converge in {max_sweeps} sweeps "
        f"(residual {residual:.3e})", residual=residual, sweeps=max_sweeps)
