"""Primary-rate / secondary-SNR formulas and their robust lower bounds."""

import cmath

import numpy as np
import pytest

from masr.rates import (
    Design,
    ScenarioConfig,
    csr_rate,
    csr_robust_rate_lower_bound,
    csr_secondary_snr,
    multi_pu_objective,
    nominal_rate,
    psr_primary_sinr,
    psr_robust_rate_lower_bound,
    psr_secondary_snr,
    robust_rate_lower_bound,
    secondary_qos_threshold,
    secondary_snr,
    worst_case_secondary_snr,
)
from masr.geometry import ChannelSet, MovementRegion
from masr.uncertainty import UncertaintyModel, sample_perturbation

from helpers import crandn, synthetic_channels

PSR_SC = ScenarioConfig(scenario="psr", noise_power=1e-2, gamma_pmin=2.0, gamma_cmin=1.0, symbol_span=50)
CSR_SC = ScenarioConfig(scenario="csr", noise_power=1e-2, gamma_pmin=1.0, gamma_cmin=3.0, symbol_span=50)
NO_ERR = UncertaintyModel(g_bs=0.0, g_u=0.0, xi_bs=0.0, xi_u=0.0)


def unit_psi(rng, m):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, m))


def test_scenario_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig("hybrid", 1e-2, 1.0, 1.0, 50)
    with pytest.raises(ValueError):
        ScenarioConfig("psr", 0.0, 1.0, 1.0, 50)
    with pytest.raises(ValueError):
        ScenarioConfig("psr", 1e-2, -1.0, 1.0, 50)
    with pytest.raises(ValueError):
        ScenarioConfig("csr", 1e-2, 1.0, 1.0, 0)


def test_zero_beamformer_gives_zero_rate():
    rng = np.random.default_rng(0)
    ch = synthetic_channels(rng, 3, 4)
    psi = unit_psi(rng, 4)
    w = np.zeros(3, complex)
    for sc in (PSR_SC, CSR_SC):
        assert nominal_rate(sc, ch, w, psi) == 0.0
        assert robust_rate_lower_bound(sc, ch, w, psi, NO_ERR) == 0.0
        assert secondary_snr(sc, ch, w, psi) == 0.0


def test_interference_free_psr_reduces_to_direct_snr():
    rng = np.random.default_rng(1)
    ch = synthetic_channels(rng, 3, 4)
    quiet = ChannelSet(h_u=ch.h_u, H_r_h=np.zeros_like(ch.H_r_h), h_s=ch.h_s, H_bs=np.zeros_like(ch.H_bs))
    w = crandn(rng, 3)
    psi = unit_psi(rng, 4)
    want = np.log2(1.0 + abs(np.vdot(quiet.h_u, w)) ** 2 / PSR_SC.noise_power)
    assert nominal_rate(PSR_SC, quiet, w, psi) == pytest.approx(want, rel=1e-12)
    assert psr_robust_rate_lower_bound(quiet, w, psi, NO_ERR, PSR_SC.noise_power) == pytest.approx(want, rel=1e-12)


def test_zero_radii_robust_equals_nominal():
    rng = np.random.default_rng(2)
    ch = synthetic_channels(rng, 3, 4)
    w = crandn(rng, 3)
    psi = unit_psi(rng, 4)
    for sc in (PSR_SC, CSR_SC):
        assert robust_rate_lower_bound(sc, ch, w, psi, NO_ERR) == pytest.approx(nominal_rate(sc, ch, w, psi), rel=1e-12)
    assert worst_case_secondary_snr(PSR_SC, ch, w, psi, NO_ERR) == pytest.approx(
        psr_secondary_snr(ch, w, psi, PSR_SC.noise_power), rel=1e-12
    )


def test_robust_bound_never_exceeds_nominal():
    rng = np.random.default_rng(3)
    for _ in range(25):
        ch = synthetic_channels(rng, 2, 3)
        w = crandn(rng, 2)
        psi = unit_psi(rng, 3)
        unc = UncertaintyModel.from_channels(rng.uniform(0, 0.3), rng.uniform(0, 0.3), ch.H_bs, ch.h_u)
        for sc in (PSR_SC, CSR_SC):
            assert robust_rate_lower_bound(sc, ch, w, psi, unc) <= nominal_rate(sc, ch, w, psi) + 1e-12


def test_single_element_hand_computation():
    # M = 1, K = 2: every quantity collapses to scalars checked by hand.
    h_u = np.array([0.6 + 0.1j, -0.2 + 0.4j])
    row = np.array([0.3 - 0.2j, 0.1 + 0.5j])
    ch = ChannelSet(h_u=h_u, H_r_h=row[None, :], h_s=np.array([1.0 + 0.0j]), H_bs=row[None, :])
    w = np.array([0.8 - 0.3j, 0.2 + 0.6j])
    psi = np.array([cmath.exp(1j * 0.7)])
    direct = (h_u.conj() * w).sum()
    through = cmath.exp(-1j * 0.7) * (row[0] * w[0] + row[1] * w[1])
    sig2 = 1e-2
    want_sinr = abs(direct) ** 2 / (abs(through) ** 2 + sig2)
    assert psr_primary_sinr(ch, w, psi, sig2) == pytest.approx(want_sinr, rel=1e-12)
    want_csr = 0.5 * np.log2(1 + abs(direct + through) ** 2 / sig2) + 0.5 * np.log2(1 + abs(direct - through) ** 2 / sig2)
    assert csr_rate(ch, w, psi, sig2) == pytest.approx(want_csr, rel=1e-12)
    xi_u, xi_bs = 0.1, 0.05
    unc = UncertaintyModel(g_bs=0.0, g_u=0.0, xi_bs=xi_bs, xi_u=xi_u)
    nw = np.linalg.norm(w)
    lo_d = max(abs(direct) - xi_u * nw, 0.0)
    hi_c = abs(through) + xi_bs * 1.0 * nw
    assert psr_robust_rate_lower_bound(ch, w, psi, unc, sig2) == pytest.approx(
        np.log2(1 + lo_d**2 / (hi_c**2 + sig2)), rel=1e-12
    )
    plus = max(abs(direct + through) - xi_u * nw - xi_bs * nw, 0.0)
    minus = max(abs(direct - through) - xi_u * nw - xi_bs * nw, 0.0)
    assert csr_robust_rate_lower_bound(ch, w, psi, unc, sig2) == pytest.approx(
        0.5 * np.log2(1 + plus**2 / sig2) + 0.5 * np.log2(1 + minus**2 / sig2), rel=1e-12
    )


def test_fully_scalar_link_hand_computation():
    # K = M = 1: plain-float recomputation of every published figure.
    h = 0.5 + 0.2j
    g = -0.3 + 0.4j
    ch = ChannelSet(
        h_u=np.array([h]), H_r_h=np.array([[g]]), h_s=np.array([1.0 + 0.0j]), H_bs=np.array([[g]])
    )
    w = np.array([1.2 - 0.5j])
    psi = np.array([1.0 + 0.0j])
    sig2 = 0.04
    direct = h.conjugate() * w[0]
    through = g * w[0]
    assert psr_primary_sinr(ch, w, psi, sig2) == pytest.approx(abs(direct) ** 2 / (abs(through) ** 2 + sig2))
    assert psr_secondary_snr(ch, w, psi, sig2) == pytest.approx(abs(through) ** 2 / sig2)
    assert csr_secondary_snr(ch, w, psi, sig2, 50) == pytest.approx(50 * abs(through) ** 2 / sig2)
    assert worst_case_secondary_snr(CSR_SC, ch, w, psi, NO_ERR) == pytest.approx(
        50 * abs(through) ** 2 / CSR_SC.noise_power
    )


def test_csr_robust_bound_certified_by_sampling():
    rng = np.random.default_rng(4)
    ch = synthetic_channels(rng, 3, 4)
    w = crandn(rng, 3)
    psi = unit_psi(rng, 4)
    unc = UncertaintyModel.from_channels(0.08, 0.1, ch.H_bs, ch.h_u)
    bound = csr_robust_rate_lower_bound(ch, w, psi, unc, CSR_SC.noise_power)
    worst = np.inf
    for _ in range(2000):
        p = sample_perturbation(unc, rng, ch.H_bs.shape)
        worst = min(worst, csr_rate(ch, w, psi, CSR_SC.noise_power, p))
    assert bound <= worst + 1e-12
    # bound should not be vacuous: the best sampled point must beat it clearly
    assert worst < csr_rate(ch, w, psi, CSR_SC.noise_power) + 1e-12


def test_psr_robust_bound_certified_by_sampling():
    rng = np.random.default_rng(5)
    ch = synthetic_channels(rng, 3, 4)
    w = crandn(rng, 3)
    psi = unit_psi(rng, 4)
    unc = UncertaintyModel.from_channels(0.08, 0.1, ch.H_bs, ch.h_u)
    bound = psr_robust_rate_lower_bound(ch, w, psi, unc, PSR_SC.noise_power)
    for _ in range(2000):
        p = sample_perturbation(unc, rng, ch.H_bs.shape)
        assert np.log2(1 + psr_primary_sinr(ch, w, psi, PSR_SC.noise_power, p)) >= bound - 1e-12


def test_secondary_snr_scales_linearly_with_symbol_span():
    rng = np.random.default_rng(6)
    ch = synthetic_channels(rng, 3, 4)
    w = crandn(rng, 3)
    psi = unit_psi(rng, 4)
    base = csr_secondary_snr(ch, w, psi, 1e-2, 1)
    for span in (2, 10, 50):
        assert csr_secondary_snr(ch, w, psi, 1e-2, span) == pytest.approx(span * base, rel=1e-12)


def test_psr_rate_decreases_as_backscatter_grows():
    rng = np.random.default_rng(7)
    ch = synthetic_channels(rng, 3, 4)
    w = crandn(rng, 3)
    psi = unit_psi(rng, 4)
    rates = []
    for scale in (0.0, 0.5, 1.0, 2.0, 4.0):
        scaled = ChannelSet(h_u=ch.h_u, H_r_h=scale * ch.H_r_h, h_s=ch.h_s, H_bs=scale * ch.H_bs)
        rates.append(nominal_rate(PSR_SC, scaled, w, psi))
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_csr_rate_invariant_under_backscatter_sign_flip():
    rng = np.random.default_rng(8)
    ch = synthetic_channels(rng, 3, 4)
    flipped = ChannelSet(h_u=ch.h_u, H_r_h=-ch.H_r_h, h_s=ch.h_s, H_bs=-ch.H_bs)
    w = crandn(rng, 3)
    psi = unit_psi(rng, 4)
    unc = UncertaintyModel.from_channels(0.05, 0.1, ch.H_bs, ch.h_u)
    assert csr_rate(ch, w, psi, 1e-2) == pytest.approx(csr_rate(flipped, w, psi, 1e-2), rel=1e-12)
    assert csr_robust_rate_lower_bound(ch, w, psi, unc, 1e-2) == pytest.approx(
        csr_robust_rate_lower_bound(flipped, w, psi, unc, 1e-2), rel=1e-12
    )


def test_multi_user_objective_is_the_minimum():
    assert multi_pu_objective([2.0, 1.0]) == 1.0
    assert multi_pu_objective([3.5]) == 3.5
    with pytest.raises(ValueError):
        multi_pu_objective([])


def test_qos_threshold_dispatch():
    assert secondary_qos_threshold(PSR_SC) == PSR_SC.gamma_pmin
    assert secondary_qos_threshold(CSR_SC) == CSR_SC.gamma_cmin


def test_design_check_enforces_all_constraints():
    region = MovementRegion(0.0, 1.0, 0.0, 1.0, 0.0, 0.0)
    idx = np.array([0, 2])
    psi = np.exp(2j * np.pi * idx / 8)
    good = Design(
        w=np.array([1.0 + 0j, 0.0 + 0j]),
        psi_indices=idx,
        psi=psi,
        positions=np.array([[0.1, 0.1, 0.0], [0.9, 0.9, 0.0]]),
    )
    good.check(power=2.0, n_levels=8, region=region, min_spacing=0.5)
    with pytest.raises(ValueError, match="power"):
        good.check(power=0.5, n_levels=8)
    with pytest.raises(ValueError, match="alphabet"):
        Design(w=good.w, psi_indices=np.array([0, 9]), psi=psi, positions=good.positions).check(2.0, 8)
    with pytest.raises(ValueError, match="indices"):
        Design(w=good.w, psi_indices=idx, psi=psi * 1j, positions=good.positions).check(2.0, 8)
    with pytest.raises(ValueError, match="region"):
        bad_pos = good.positions + np.array([5.0, 0.0, 0.0])
        Design(w=good.w, psi_indices=idx, psi=psi, positions=bad_pos).check(2.0, 8, region=region)
    with pytest.raises(ValueError, match="spacing"):
        tight = np.array([[0.1, 0.1, 0.0], [0.1, 0.2, 0.0]])
        Design(w=good.w, psi_indices=idx, psi=psi, positions=tight).check(2.0, 8, region=region, min_spacing=0.5)
