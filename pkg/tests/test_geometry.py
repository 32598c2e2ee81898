"""Field-response channel synthesis: formulas, identities, determinism."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from masr.geometry import (
    MovementRegion,
    PathLink,
    build_channels,
    build_channels_batch,
    draw_geometry,
    field_response_vector,
    grid_placement,
    pathloss_variance,
    propagation_difference,
)

REGION = MovementRegion(2.85, 3.15, -0.15, 0.15, 0.0, 0.0)


def make_geometry(seed=0, n_users=1, n_ris=3, n_paths=4):
    rng = np.random.default_rng(seed)
    users = [np.array([0.0, 60.0, 0.0]), np.array([0.0, 80.0, 0.0])][:n_users]
    return draw_geometry(
        rng, wavelength=0.1, region=REGION, region_center=np.array([3.0, 0.0, 0.0]),
        ris_position=np.array([0.0, 30.0, 40.0]), user_positions=users,
        n_ris=n_ris, n_paths=n_paths, gain=0.1, exponent=1.3,
    )


def test_propagation_difference_formula():
    rng = np.random.default_rng(3)
    p = rng.normal(size=3)
    th, ph = rng.uniform(0, np.pi, size=2)
    want = p[0] * np.cos(th) * np.cos(ph) + p[1] * np.cos(th) * np.sin(ph) + p[2] * np.sin(th)
    assert propagation_difference(p, th, ph) == pytest.approx(want, abs=1e-15)


def test_propagation_difference_broadcasts_over_paths():
    rng = np.random.default_rng(4)
    p = rng.normal(size=3)
    th = rng.uniform(0, np.pi, size=5)
    ph = rng.uniform(0, np.pi, size=5)
    rho = propagation_difference(p, th, ph)
    assert rho.shape == (5,)
    for l in range(5):
        assert rho[l] == pytest.approx(propagation_difference(p, th[l], ph[l]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), st.integers(0, 10_000))
def test_field_response_unit_modulus(coords, seed):
    rng = np.random.default_rng(seed)
    th = rng.uniform(0, np.pi, size=6)
    ph = rng.uniform(0, np.pi, size=6)
    a = field_response_vector(np.array(coords), th, ph, wavelength=0.1)
    assert np.allclose(np.abs(a), 1.0, atol=1e-12)


def test_field_response_rejects_bad_wavelength():
    with pytest.raises(ValueError):
        field_response_vector(np.zeros(3), np.zeros(2), np.zeros(2), wavelength=0.0)


def test_field_response_translation_equivariance():
    # moving an antenna by delta along x multiplies each path's response by
    # e^{j 2 pi / lambda * delta cos(theta) cos(phi)}
    rng = np.random.default_rng(5)
    lam, delta = 0.1, 0.037
    p = rng.normal(size=3)
    th = rng.uniform(0, np.pi, size=7)
    ph = rng.uniform(0, np.pi, size=7)
    base = field_response_vector(p, th, ph, lam)
    moved = field_response_vector(p + np.array([delta, 0, 0]), th, ph, lam)
    factor = np.exp(2j * np.pi / lam * delta * np.cos(th) * np.cos(ph))
    assert np.allclose(moved, base * factor, atol=1e-12)


def test_pathloss_variance_formula():
    assert pathloss_variance(50.0, 0.1, 1.3, 9) == pytest.approx(0.1 * 50.0 ** (-1.3) / 9)
    with pytest.raises(ValueError):
        pathloss_variance(0.0, 0.1, 1.3, 9)


def test_movement_region_validation_and_clamp():
    with pytest.raises(ValueError):
        MovementRegion(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)
    r = REGION
    assert np.allclose(r.sides, [0.3, 0.3, 0.0])
    inside = np.array([[3.0, 0.0, 0.0]])
    outside = np.array([[9.0, 0.0, 1.0]])
    assert r.contains(inside)
    assert not r.contains(outside)
    clamped = r.clamp(outside)
    assert r.contains(clamped)
    assert np.array_equal(r.clamp(clamped), clamped)


def test_grid_placement_spacing_and_membership():
    pos = grid_placement(REGION, 4, 0.05)
    assert pos.shape == (4, 3)
    assert REGION.contains(pos)
    d = np.linalg.norm(pos[:, None] - pos[None, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 0.05
    # single antenna sits at the face center
    single = grid_placement(REGION, 1, 0.05)
    assert np.allclose(single[0], [3.0, 0.0, 0.0])


def test_grid_placement_rejects_tight_region():
    with pytest.raises(ValueError, match="too small"):
        grid_placement(REGION, 4, 10.0)


def test_pathlink_length_validation():
    with pytest.raises(ValueError):
        PathLink(
            transmit_elevation=np.zeros(3), transmit_azimuth=np.zeros(3),
            receive_elevation=np.zeros(3), receive_azimuth=np.zeros(2),
            gains=np.zeros(3, complex),
        )


def test_cascade_identity_machine_precision():
    geom = make_geometry(seed=11)
    pos = grid_placement(REGION, 2, 0.05)
    ch = build_channels(geom, pos)
    lhs = ch.H_bs
    rhs = np.diag(ch.h_s.conj()) @ ch.H_r_h
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(np.abs(rhs).max(), 1e-300)


def test_channel_shapes_and_determinism():
    geom = make_geometry(seed=12, n_ris=5, n_paths=6)
    pos = grid_placement(REGION, 3, 0.04)
    a = build_channels(geom, pos)
    b = build_channels(geom, pos)
    assert a.h_u.shape == (3,) and a.H_bs.shape == (5, 3)
    assert np.array_equal(a.h_u, b.h_u) and np.array_equal(a.H_bs, b.H_bs)


def test_h_s_invariant_under_antenna_moves():
    geom = make_geometry(seed=13)
    p1 = grid_placement(REGION, 2, 0.05)
    p2 = p1 + np.array([0.01, -0.02, 0.0])
    c1 = build_channels(geom, p1)
    c2 = build_channels(geom, REGION.clamp(p2))
    assert np.array_equal(c1.h_s, c2.h_s)
    assert not np.allclose(c1.h_u, c2.h_u)  # phases must actually move


def test_batch_matches_percall_build():
    geom = make_geometry(seed=14, n_users=2)
    rng = np.random.default_rng(7)
    P = REGION.lower + rng.uniform(size=(6, 2, 3)) * REGION.sides
    for user in range(2):
        h_u, H_bs = build_channels_batch(geom, P, user=user)
        assert h_u.shape == (6, 2)
        assert H_bs.shape == (6, 3, 2)
        for s in range(6):
            ch = build_channels(geom, P[s], user=user)
            assert np.allclose(h_u[s], ch.h_u, atol=1e-12)
            assert np.allclose(H_bs[s], ch.H_bs, atol=1e-12)


def test_draw_geometry_is_seed_deterministic():
    g1 = make_geometry(seed=21)
    g2 = make_geometry(seed=21)
    g3 = make_geometry(seed=22)
    assert np.array_equal(g1.pt_to_ris.gains, g2.pt_to_ris.gains)
    assert not np.array_equal(g1.pt_to_ris.gains, g3.pt_to_ris.gains)


def test_ris_elements_half_wavelength_line():
    geom = make_geometry(seed=23, n_ris=4)
    el = geom.ris_elements
    assert np.allclose(el[:, [0, 2]], 0.0)
    assert np.allclose(np.diff(el[:, 1]), 0.05)  # lambda / 2 at lambda = 0.1
    assert np.allclose(el[:, 1].mean(), 0.0)  # centered on the reference point


def test_build_channels_rejects_bad_positions():
    geom = make_geometry(seed=24)
    with pytest.raises(ValueError):
        build_channels(geom, np.zeros((2, 2)))
