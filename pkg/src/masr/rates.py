"""Primary-rate and secondary-SNR expressions for both coexistence modes.

In the interference-limited mode (PSR) the backscattered signal acts as
interference at the user; in the commensal mode (CSR) it spans many primary
symbols and contributes an extra multipath, giving a half/half mixture of
sum and difference combining.  All robust figures are worst cases over the
bounded error balls, computed from the closed-form amplitude extrema.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import ChannelSet
from .uncertainty import (
    Perturbation,
    UncertaintyModel,
    worst_case_cascaded_amplitude,
    worst_case_combined_amplitude,
    worst_case_direct_amplitude,
)

PSR = "psr"
CSR = "csr"


@dataclass(frozen=True)
class ScenarioConfig:
    """Coexistence mode plus the scalars entering the rate formulas."""

    scenario: str  # "psr" or "csr"
    noise_power: float  # sigma^2, watts
    gamma_pmin: float  # linear secondary-decoding threshold, PSR
    gamma_cmin: float  # linear secondary-decoding threshold, CSR
    symbol_span: int  # L, primary symbols covered by one secondary symbol (CSR)

    def __post_init__(self):
        if self.scenario not in (PSR, CSR):
            raise ValueError("scenario must be 'psr' or 'csr'")
        if self.noise_power <= 0:
            raise ValueError("noise power must be positive")
        if self.gamma_pmin < 0 or self.gamma_cmin < 0:
            raise ValueError("SNR thresholds must be nonnegative")
        if self.symbol_span < 1:
            raise ValueError("symbol span must be at least 1")


@dataclass(eq=False)
class Design:
    """One complete design point: beamformer, grid phases, element positions.

    psi is derived from psi_indices over the n_levels-ary phase alphabet;
    check() enforces the power budget, grid membership, and (when a region
    and spacing are supplied) the placement constraints.
    """

    w: np.ndarray  # (K,) complex
    psi_indices: np.ndarray  # (M,) ints into the phase alphabet
    psi: np.ndarray  # (M,) unit-modulus complex, derived
    positions: np.ndarray  # (K, 3) element coordinates, metres

    def check(self, power: float, n_levels: int, region=None, min_spacing: Optional[float] = None) -> None:
        if np.linalg.norm(self.w) ** 2 > power * (1 + 1e-9):
            raise ValueError("beamformer exceeds the power budget")
        idx = np.asarray(self.psi_indices, int)
        if np.any(idx < 0) or np.any(idx >= n_levels):
            raise ValueError("phase index outside the alphabet")
        expected = np.exp(2j * np.pi * idx / n_levels)
        if not np.allclose(self.psi, expected, atol=1e-9):
            raise ValueError("psi does not match its grid indices")
        if region is not None and not region.contains(self.positions):
            raise ValueError("an element sits outside the movement region")
        if min_spacing is not None and self.positions.shape[0] > 1:
            diff = self.positions[:, None, :] - self.positions[None, :, :]
            dist = np.linalg.norm(diff, axis=-1)
            np.fill_diagonal(dist, np.inf)
            if dist.min() < min_spacing * (1 - 1e-9):
                raise ValueError("element spacing below the minimum")


def _apply(channels: ChannelSet, perturbation: Optional[Perturbation]) -> tuple[np.ndarray, np.ndarray]:
    if perturbation is None:
        return channels.h_u, channels.H_bs
    return channels.h_u + perturbation.dh_u, channels.H_bs + perturbation.dH_bs


def psr_primary_sinr(
    channels: ChannelSet, w: np.ndarray, psi: np.ndarray, noise_power: float, perturbation: Optional[Perturbation] = None
) -> float:
    """|h_u^H w|^2 / (|psi^H H_bs w|^2 + sigma^2): backscatter as interference."""
    h_u, H_bs = _apply(channels, perturbation)
    direct = abs(np.vdot(h_u, w)) ** 2
    backscatter = abs(psi.conj() @ H_bs @ w) ** 2
    return direct / (backscatter + noise_power)


def psr_secondary_snr(
    channels: ChannelSet, w: np.ndarray, psi: np.ndarray, noise_power: float, perturbation: Optional[Perturbation] = None
) -> float:
    """|psi^H H_bs w|^2 / sigma^2 after the primary signal is cancelled."""
    _, H_bs = _apply(channels, perturbation)
    return abs(psi.conj() @ H_bs @ w) ** 2 / noise_power


def psr_robust_rate_lower_bound(
    channels: ChannelSet, w: np.ndarray, psi: np.ndarray, uncertainty: UncertaintyModel, noise_power: float
) -> float:
    """log2(1 + min|direct|^2 / (max|backscatter|^2 + sigma^2)) over the balls."""
    num = worst_case_direct_amplitude(channels.h_u, w, uncertainty.xi_u, "min") ** 2
    den = worst_case_cascaded_amplitude(channels.H_bs, psi, w, uncertainty.xi_bs, "max") ** 2 + noise_power
    return float(np.log2(1.0 + num / den))


def csr_rate(
    channels: ChannelSet, w: np.ndarray, psi: np.ndarray, noise_power: float, perturbation: Optional[Perturbation] = None
) -> float:
    """Half/half mixture of sum and difference combining of the two paths."""
    h_u, H_bs = _apply(channels, perturbation)
    direct = np.vdot(h_u, w)
    backscatter = psi.conj() @ H_bs @ w
    plus = abs(direct + backscatter) ** 2
    minus = abs(direct - backscatter) ** 2
    return float(0.5 * np.log2(1.0 + plus / noise_power) + 0.5 * np.log2(1.0 + minus / noise_power))


def csr_robust_rate_lower_bound(
    channels: ChannelSet, w: np.ndarray, psi: np.ndarray, uncertainty: UncertaintyModel, noise_power: float
) -> float:
    """Per-sign inner minima inside the two log terms.

    min over the balls of a sum is at least the sum of per-term minima, so
    this is a valid lower bound on the worst-case rate.
    """
    plus = worst_case_combined_amplitude(channels.h_u, channels.H_bs, psi, w, uncertainty.xi_u, uncertainty.xi_bs, +1.0)
    minus = worst_case_combined_amplitude(channels.h_u, channels.H_bs, psi, w, uncertainty.xi_u, uncertainty.xi_bs, -1.0)
    return float(0.5 * np.log2(1.0 + plus**2 / noise_power) + 0.5 * np.log2(1.0 + minus**2 / noise_power))


def csr_secondary_snr(
    channels: ChannelSet,
    w: np.ndarray,
    psi: np.ndarray,
    noise_power: float,
    symbol_span: int,
    perturbation: Optional[Perturbation] = None,
) -> float:
    """L * |psi^H H_bs w|^2 / sigma^2: maximum-ratio combining over L symbols."""
    return symbol_span * psr_secondary_snr(channels, w, psi, noise_power, perturbation)


def robust_rate_lower_bound(
    scenario: ScenarioConfig, channels: ChannelSet, w: np.ndarray, psi: np.ndarray, uncertainty: UncertaintyModel
) -> float:
    """Scenario dispatch used by the optimizer stages and the swarm fitness."""
    if scenario.scenario == PSR:
        return psr_robust_rate_lower_bound(channels, w, psi, uncertainty, scenario.noise_power)
    return csr_robust_rate_lower_bound(channels, w, psi, uncertainty, scenario.noise_power)


def nominal_rate(
    scenario: ScenarioConfig,
    channels: ChannelSet,
    w: np.ndarray,
    psi: np.ndarray,
    perturbation: Optional[Perturbation] = None,
) -> float:
    if scenario.scenario == PSR:
        return float(np.log2(1.0 + psr_primary_sinr(channels, w, psi, scenario.noise_power, perturbation)))
    return csr_rate(channels, w, psi, scenario.noise_power, perturbation)


def secondary_snr(
    scenario: ScenarioConfig,
    channels: ChannelSet,
    w: np.ndarray,
    psi: np.ndarray,
    perturbation: Optional[Perturbation] = None,
) -> float:
    if scenario.scenario == PSR:
        return psr_secondary_snr(channels, w, psi, scenario.noise_power, perturbation)
    return csr_secondary_snr(channels, w, psi, scenario.noise_power, scenario.symbol_span, perturbation)


def worst_case_secondary_snr(
    scenario: ScenarioConfig, channels: ChannelSet, w: np.ndarray, psi: np.ndarray, uncertainty: UncertaintyModel
) -> float:
    """Worst-case decoding SNR of the backscatter link; the QoS constraint
    requires this to stay above the scenario's threshold."""
    amp = worst_case_cascaded_amplitude(channels.H_bs, psi, w, uncertainty.xi_bs, "min")
    snr = amp**2 / scenario.noise_power
    if scenario.scenario == CSR:
        snr *= scenario.symbol_span
    return snr


def secondary_qos_threshold(scenario: ScenarioConfig) -> float:
    """Linear SNR floor the worst-case secondary link must meet."""
    return scenario.gamma_pmin if scenario.scenario == PSR else scenario.gamma_cmin


def multi_pu_objective(per_user_rates: list[float]) -> float:
    """Common-signal objective across users: the minimum robust rate."""
    if not per_user_rates:
        raise ValueError("need at least one user rate")
    return min(per_user_rates)
