"""Error-ball model and closed-form worst-case amplitudes vs independent oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from masr.uncertainty import (
    UncertaintyModel,
    batch_cascaded_amplitude,
    batch_combined_amplitude_min,
    batch_direct_amplitude_min,
    sample_perturbation,
    worst_case_cascaded_amplitude,
    worst_case_combined_amplitude,
    worst_case_direct_amplitude,
)

from helpers import (
    crandn,
    extremal_cascaded,
    extremal_direct,
    pgd_cascaded_amplitude,
    pgd_combined_amplitude,
    pgd_direct_amplitude,
    relative_match,
    synthetic_channels,
)


def test_radii_follow_channel_norms():
    rng = np.random.default_rng(0)
    ch = synthetic_channels(rng, 3, 4)
    m = UncertaintyModel.from_channels(0.05, 0.1, ch.H_bs, ch.h_u)
    assert m.xi_bs == pytest.approx(0.05 * np.linalg.norm(ch.H_bs))
    assert m.xi_u == pytest.approx(0.1 * np.linalg.norm(ch.h_u))


@pytest.mark.parametrize("g_bs,g_u", [(-0.1, 0.1), (0.1, -0.1), (1.0, 0.1), (0.1, 1.5)])
def test_ratios_must_be_proper_fractions(g_bs, g_u):
    with pytest.raises(ValueError):
        UncertaintyModel.from_channels(g_bs, g_u, np.ones((2, 2)), np.ones(2))


def test_samples_stay_inside_both_balls():
    rng = np.random.default_rng(1)
    m = UncertaintyModel(g_bs=0.05, g_u=0.1, xi_bs=0.7, xi_u=0.3)
    for _ in range(200):
        p = sample_perturbation(m, rng, (4, 3))
        assert np.linalg.norm(p.dH_bs) <= m.xi_bs * (1 + 1e-12)
        assert np.linalg.norm(p.dh_u) <= m.xi_u * (1 + 1e-12)
        assert p.dH_bs.shape == (4, 3) and p.dh_u.shape == (3,)


def test_boundary_fraction_one_pins_samples_to_spheres():
    rng = np.random.default_rng(2)
    m = UncertaintyModel(g_bs=0.05, g_u=0.1, xi_bs=0.7, xi_u=0.3)
    for _ in range(50):
        p = sample_perturbation(m, rng, (3, 2), boundary_fraction=1.0)
        assert np.linalg.norm(p.dH_bs) == pytest.approx(m.xi_bs, rel=1e-12)
        assert np.linalg.norm(p.dh_u) == pytest.approx(m.xi_u, rel=1e-12)


def test_zero_radii_collapse_to_nominal():
    rng = np.random.default_rng(3)
    ch = synthetic_channels(rng, 3, 4)
    w = crandn(rng, 3)
    psi = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    nom_dir = abs(np.vdot(ch.h_u, w))
    nom_casc = abs(psi.conj() @ ch.H_bs @ w)
    for sense in ("min", "max"):
        assert worst_case_direct_amplitude(ch.h_u, w, 0.0, sense) == pytest.approx(nom_dir, rel=1e-12)
        assert worst_case_cascaded_amplitude(ch.H_bs, psi, w, 0.0, sense) == pytest.approx(nom_casc, rel=1e-12)
    combined = worst_case_combined_amplitude(ch.h_u, ch.H_bs, psi, w, 0.0, 0.0, 1.0)
    assert combined == pytest.approx(abs(np.vdot(ch.h_u, w) + psi.conj() @ ch.H_bs @ w), rel=1e-12)


def test_sense_argument_is_validated():
    with pytest.raises(ValueError):
        worst_case_direct_amplitude(np.ones(2, complex), np.ones(2, complex), 0.1, "median")
    with pytest.raises(ValueError):
        worst_case_cascaded_amplitude(np.ones((2, 2), complex), np.ones(2, complex), np.ones(2, complex), 0.1, "median")


def test_extremal_witnesses_attain_closed_forms():
    rng = np.random.default_rng(4)
    for trial in range(30):
        ch = synthetic_channels(rng, 3, 4)
        w = crandn(rng, 3)
        psi = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        xi_u = rng.uniform(0.0, 1.2)
        xi_bs = rng.uniform(0.0, 1.2)
        for sense in ("min", "max"):
            d = extremal_direct(ch.h_u, w, xi_u, sense)
            assert np.linalg.norm(d) <= xi_u * (1 + 1e-12)
            got = abs(np.vdot(ch.h_u + d, w))
            want = worst_case_direct_amplitude(ch.h_u, w, xi_u, sense)
            assert got == pytest.approx(want, abs=1e-10 * max(1.0, want))

            D = extremal_cascaded(ch.H_bs, psi, w, xi_bs, sense)
            assert np.linalg.norm(D) <= xi_bs * (1 + 1e-12)
            got = abs(psi.conj() @ (ch.H_bs + D) @ w)
            want = worst_case_cascaded_amplitude(ch.H_bs, psi, w, xi_bs, sense)
            assert got == pytest.approx(want, abs=1e-10 * max(1.0, want))


def test_random_sampling_never_beats_closed_forms():
    rng = np.random.default_rng(5)
    ch = synthetic_channels(rng, 3, 4)
    w = crandn(rng, 3)
    psi = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    m = UncertaintyModel(g_bs=0.05, g_u=0.1, xi_bs=0.6, xi_u=0.4)
    lo_d = worst_case_direct_amplitude(ch.h_u, w, m.xi_u, "min")
    hi_d = worst_case_direct_amplitude(ch.h_u, w, m.xi_u, "max")
    lo_c = worst_case_cascaded_amplitude(ch.H_bs, psi, w, m.xi_bs, "min")
    hi_c = worst_case_cascaded_amplitude(ch.H_bs, psi, w, m.xi_bs, "max")
    lo_m = worst_case_combined_amplitude(ch.h_u, ch.H_bs, psi, w, m.xi_u, m.xi_bs, -1.0)
    for _ in range(1500):
        p = sample_perturbation(m, rng, ch.H_bs.shape)
        vd = abs(np.vdot(ch.h_u + p.dh_u, w))
        vc = abs(psi.conj() @ (ch.H_bs + p.dH_bs) @ w)
        vm = abs(np.vdot(ch.h_u + p.dh_u, w) - psi.conj() @ ((ch.H_bs + p.dH_bs) @ w))
        assert lo_d - 1e-9 <= vd <= hi_d + 1e-9
        assert lo_c - 1e-9 <= vc <= hi_c + 1e-9
        assert vm >= lo_m - 1e-9


def test_pgd_oracle_matches_closed_forms():
    rng = np.random.default_rng(6)
    for trial in range(8):
        ch = synthetic_channels(rng, 2, 3)
        w = crandn(rng, 2)
        psi = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
        xi_u = rng.uniform(0.05, 0.8)
        xi_bs = rng.uniform(0.05, 0.8)
        scale = np.linalg.norm(w)
        for sense in ("min", "max"):
            got = pgd_direct_amplitude(ch.h_u, w, xi_u, sense, rng=rng)
            want = worst_case_direct_amplitude(ch.h_u, w, xi_u, sense)
            assert relative_match(got, want, 1e-3, scale)
            got = pgd_cascaded_amplitude(ch.H_bs, psi, w, xi_bs, sense, rng=rng)
            want = worst_case_cascaded_amplitude(ch.H_bs, psi, w, xi_bs, sense)
            assert relative_match(got, want, 1e-3, scale)
        for sign in (1.0, -1.0):
            got = pgd_combined_amplitude(ch.h_u, ch.H_bs, psi, w, xi_u, xi_bs, sign, "min", rng=rng)
            want = worst_case_combined_amplitude(ch.h_u, ch.H_bs, psi, w, xi_u, xi_bs, sign)
            assert relative_match(got, want, 1e-3, scale)


def test_batched_variants_match_scalar_loops():
    rng = np.random.default_rng(7)
    S, M, K = 5, 4, 3
    h_u = crandn(rng, S, K)
    H_bs = crandn(rng, S, M, K)
    w = crandn(rng, K)
    psi = np.exp(1j * rng.uniform(0, 2 * np.pi, M))
    xi_u = rng.uniform(0.0, 0.5, S)
    xi_bs = rng.uniform(0.0, 0.5, S)
    got_d = batch_direct_amplitude_min(h_u, w, xi_u)
    got_cmax = batch_cascaded_amplitude(H_bs, psi, w, xi_bs, "max")
    got_cmin = batch_cascaded_amplitude(H_bs, psi, w, xi_bs, "min")
    got_plus = batch_combined_amplitude_min(h_u, H_bs, psi, w, xi_u, xi_bs, 1.0)
    got_minus = batch_combined_amplitude_min(h_u, H_bs, psi, w, xi_u, xi_bs, -1.0)
    for s in range(S):
        assert got_d[s] == pytest.approx(worst_case_direct_amplitude(h_u[s], w, xi_u[s], "min"), abs=1e-12)
        assert got_cmax[s] == pytest.approx(worst_case_cascaded_amplitude(H_bs[s], psi, w, xi_bs[s], "max"), abs=1e-12)
        assert got_cmin[s] == pytest.approx(worst_case_cascaded_amplitude(H_bs[s], psi, w, xi_bs[s], "min"), abs=1e-12)
        assert got_plus[s] == pytest.approx(
            worst_case_combined_amplitude(h_u[s], H_bs[s], psi, w, xi_u[s], xi_bs[s], 1.0), abs=1e-12
        )
        assert got_minus[s] == pytest.approx(
            worst_case_combined_amplitude(h_u[s], H_bs[s], psi, w, xi_u[s], xi_bs[s], -1.0), abs=1e-12
        )


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_worst_cases_bracket_nominal_and_shrink_with_radius(seed, xi_a, xi_b):
    rng = np.random.default_rng(seed)
    ch = synthetic_channels(rng, 2, 3)
    w = crandn(rng, 2)
    psi = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
    lo, hi = sorted((xi_a, xi_b))
    nom = abs(np.vdot(ch.h_u, w))
    for xi in (lo, hi):
        assert worst_case_direct_amplitude(ch.h_u, w, xi, "min") <= nom + 1e-12
        assert worst_case_direct_amplitude(ch.h_u, w, xi, "max") >= nom - 1e-12
    # monotone in the radius
    assert worst_case_direct_amplitude(ch.h_u, w, hi, "min") <= worst_case_direct_amplitude(ch.h_u, w, lo, "min") + 1e-12
    assert worst_case_direct_amplitude(ch.h_u, w, hi, "max") >= worst_case_direct_amplitude(ch.h_u, w, lo, "max") - 1e-12
    assert (
        worst_case_cascaded_amplitude(ch.H_bs, psi, w, hi, "min")
        <= worst_case_cascaded_amplitude(ch.H_bs, psi, w, lo, "min") + 1e-12
    )
    assert (
        worst_case_combined_amplitude(ch.h_u, ch.H_bs, psi, w, hi, hi, 1.0)
        <= worst_case_combined_amplitude(ch.h_u, ch.H_bs, psi, w, lo, lo, 1.0) + 1e-12
    )


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_closed_forms_are_lipschitz_in_radius(seed):
    # |f(xi + eps) - f(xi)| <= slope * eps with slope ||w|| (direct) or
    # ||psi||*||w|| (cascaded); finite differences certify the slope.
    rng = np.random.default_rng(seed)
    ch = synthetic_channels(rng, 2, 3)
    w = crandn(rng, 2)
    psi = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
    xi = rng.uniform(0.0, 1.0)
    eps = 1e-4
    slope_d = np.linalg.norm(w)
    slope_c = np.linalg.norm(psi) * np.linalg.norm(w)
    for sense in ("min", "max"):
        fd = abs(
            worst_case_direct_amplitude(ch.h_u, w, xi + eps, sense)
            - worst_case_direct_amplitude(ch.h_u, w, xi, sense)
        )
        assert fd <= slope_d * eps + 1e-12
        fc = abs(
            worst_case_cascaded_amplitude(ch.H_bs, psi, w, xi + eps, sense)
            - worst_case_cascaded_amplitude(ch.H_bs, psi, w, xi, sense)
        )
        assert fc <= slope_c * eps + 1e-12
