"""Shared synthetic-instance builders and brute-force oracles for the tests.

Everything here is deliberately independent of the production math paths it
is used to check: the extremizers work by projected gradient with multistart,
the passive oracle by exhaustive grid enumeration.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from masr.beamforming import (
    aligned_phase_init,
    closed_form_objective,
    matched_filter_init,
    phases_from_indices,
)
from masr.geometry import ChannelSet
from masr.rates import CSR, PSR, ScenarioConfig
from masr.uncertainty import UncertaintyModel, worst_case_cascaded_amplitude


def crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    """Unit-variance circularly symmetric complex Gaussian draws."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def synthetic_channels(rng, n_antennas, n_ris, direct_scale=1.0, cascade_scale=0.4) -> ChannelSet:
    """Random ChannelSet with the cascade identity baked in, O(1) entries."""
    h_s = crandn(rng, n_ris)
    H_r_h = cascade_scale * crandn(rng, n_ris, n_antennas)
    h_u = direct_scale * crandn(rng, n_antennas)
    return ChannelSet(h_u=h_u, H_r_h=H_r_h, h_s=h_s, H_bs=h_s.conj()[:, None] * H_r_h)


def feasible_instance(
    rng,
    scenario_tag,
    n_antennas=2,
    n_ris=2,
    n_levels=8,
    power=10.0,
    noise=1e-2,
    g_bs=0.05,
    g_u=0.1,
    margin=0.25,
    symbol_span=50,
):
    """Random instance whose QoS threshold is calibrated to be strictly feasible.

    The threshold is set to `margin` times the worst-case secondary SNR at the
    matched-filter start with phase-aligned RIS phases, so the initial point
    meets the constraint with slack and the solvers have room to move.
    Returns (channels, uncertainty, scenario, w0, idx0, psi0).
    """
    while True:
        ch = synthetic_channels(rng, n_antennas, n_ris)
        unc = UncertaintyModel.from_channels(g_bs, g_u, ch.H_bs, ch.h_u)
        w0 = matched_filter_init(ch, power)
        idx0 = aligned_phase_init(ch, w0, n_levels)
        psi0 = phases_from_indices(idx0, n_levels)
        wc_min = worst_case_cascaded_amplitude(ch.H_bs, psi0, w0, unc.xi_bs, "min")
        if wc_min**2 < 1e-4 * noise:
            continue  # cascade wiped out by the error ball; redraw
        snr_floor = wc_min**2 / noise
        if scenario_tag == PSR:
            scenario = ScenarioConfig(
                scenario=PSR, noise_power=noise, gamma_pmin=margin * snr_floor,
                gamma_cmin=1.0, symbol_span=symbol_span,
            )
        else:
            scenario = ScenarioConfig(
                scenario=CSR, noise_power=noise, gamma_pmin=1.0,
                gamma_cmin=margin * snr_floor * symbol_span, symbol_span=symbol_span,
            )
        rep = closed_form_objective(scenario, ch, unc, w0, psi0)
        if rep.feasible and rep.rate > 0.1:
            return ch, unc, scenario, w0, idx0, psi0


# ---------------------------------------------------------------------------
# projected-gradient extremizers (oracles for the closed-form worst cases)
# ---------------------------------------------------------------------------

def _project(vec, radius):
    nrm = np.linalg.norm(vec)
    if nrm > radius and nrm > 0:
        return vec * (radius / nrm)
    return vec


def _extremize(z_of, grads_of, starts, radii, sense, steps=250):
    """Multistart projected gradient on |z(vars)| over per-variable balls.

    z_of maps the variable tuple to the complex amplitude; grads_of(vars, zph)
    returns the full Wirtinger ascent direction of |z| per variable given the
    unit phase zph = z/|z| (variables entering through a conjugate pick up
    conj(zph), linear ones zph).  Tracks the best value seen along every
    trajectory, so overshoot near |z| = 0 cannot hide the minimum.
    """
    sgn = 1.0 if sense == "max" else -1.0
    best = -np.inf if sense == "max" else np.inf
    for start in starts:
        cur = [v.astype(complex).copy() for v in start]
        lrs = [0.25 * r for r in radii]
        for _ in range(steps):
            z = z_of(cur)
            val = abs(z)
            best = max(best, val) if sense == "max" else min(best, val)
            if val < 1e-14:
                if sense == "min":
                    break
                zph = 1.0
            else:
                zph = z / val
            gs = grads_of(cur, zph)
            cur = [
                _project(v + sgn * lr * g / max(np.linalg.norm(g), 1e-300), r)
                for v, g, lr, r in zip(cur, gs, lrs, radii)
            ]
            lrs = [lr * 0.985 for lr in lrs]
        val = abs(z_of(cur))
        best = max(best, val) if sense == "max" else min(best, val)
    return float(max(best, 0.0))


def pgd_direct_amplitude(h, w, xi, sense, rng=None, steps=250):
    """Extremize |(h + d)^H w| over ||d||_2 <= xi by projected gradient."""
    rng = rng or np.random.default_rng(0)
    starts = [
        (np.zeros_like(w),),
        (extremal_direct(h, w, xi, "max"),),
        (extremal_direct(h, w, xi, "min"),),
    ]
    starts += [(_project(crandn(rng, w.size), xi),) for _ in range(3)]
    return _extremize(
        lambda v: np.vdot(h + v[0], w),
        lambda v, zph: (np.conj(zph) * w,),
        starts, [xi], sense, steps,
    )


def pgd_cascaded_amplitude(H, psi, w, xi, sense, rng=None, steps=250):
    """Extremize |psi^H (H + D) w| over ||D||_F <= xi by projected gradient."""
    rng = rng or np.random.default_rng(1)
    direction = np.outer(psi, np.conj(w))
    starts = [
        (np.zeros_like(H),),
        (extremal_cascaded(H, psi, w, xi, "max"),),
        (extremal_cascaded(H, psi, w, xi, "min"),),
    ]
    starts += [(_project(crandn(rng, *H.shape), xi),) for _ in range(3)]
    return _extremize(
        lambda v: np.conj(psi) @ ((H + v[0]) @ w),
        lambda v, zph: (zph * direction,),
        starts, [xi], sense, steps,
    )


def pgd_combined_amplitude(h, H, psi, w, xi_u, xi_bs, sign, sense, rng=None, steps=250):
    """Extremize |(h+d)^H w + sign * psi^H (H+D) w| over both balls jointly."""
    rng = rng or np.random.default_rng(2)
    dir_D = sign * np.outer(psi, np.conj(w))
    z0 = np.vdot(h, w) + sign * (np.conj(psi) @ (H @ w))
    starts = [(np.zeros_like(w), np.zeros_like(H))]
    nw, nd = np.linalg.norm(w), np.linalg.norm(dir_D)
    if abs(z0) > 0 and nw > 0 and nd > 0:
        ph = z0 / abs(z0)
        al = (np.conj(ph) * xi_u * w / nw, ph * xi_bs * dir_D / nd)
        starts += [al, tuple(-a for a in al)]
        slack = xi_u * nw + xi_bs * nd
        if slack > abs(z0) > 0:
            # interior zero of the clamped minimum: scale back the anti-aligned pair
            t = abs(z0) / slack
            starts += [tuple(-t * a for a in al)]
    starts += [
        (_project(crandn(rng, w.size), xi_u), _project(crandn(rng, *H.shape), xi_bs))
        for _ in range(3)
    ]
    return _extremize(
        lambda v: np.vdot(h + v[0], w) + sign * (np.conj(psi) @ ((H + v[1]) @ w)),
        lambda v, zph: (np.conj(zph) * w, zph * dir_D),
        starts, [xi_u, xi_bs], sense, steps,
    )


# ---------------------------------------------------------------------------
# extremal perturbation constructions (attainment witnesses)
# ---------------------------------------------------------------------------

def extremal_direct(h, w, xi, sense):
    """The d on the ball boundary attaining the closed-form direct extremum."""
    z0 = np.vdot(h, w)
    nw = np.linalg.norm(w)
    if nw == 0:
        return np.zeros_like(w)
    phase = z0 / abs(z0) if abs(z0) > 0 else 1.0
    # d enters through d^H w, so the aligned coefficient carries conj(phase)
    d = (1.0 if sense == "max" else -1.0) * np.conj(phase) * xi * w / nw
    if sense == "min" and xi * nw > abs(z0):
        # interior zero: move just far enough to cancel the nominal term
        d *= abs(z0) / (xi * nw)
    return d


def extremal_cascaded(H, psi, w, xi, sense):
    """Rank-one D on the Frobenius sphere attaining the cascaded extremum."""
    denom = np.linalg.norm(psi) * np.linalg.norm(w)
    if denom == 0:
        return np.zeros_like(H)
    z0 = np.conj(psi) @ (H @ w)
    phase = z0 / abs(z0) if abs(z0) > 0 else 1.0
    D = (1.0 if sense == "max" else -1.0) * phase * xi * np.outer(psi, np.conj(w)) / denom
    if sense == "min" and xi * denom > abs(z0):
        D *= abs(z0) / (xi * denom)
    return D


# ---------------------------------------------------------------------------
# exhaustive passive oracle
# ---------------------------------------------------------------------------

def enumerate_passive(scenario, channels, uncertainty, w, n_levels, n_ris):
    """Exhaustive grid search of the true robust objective, QoS-first.

    Mirrors the recovery preference: feasible beats infeasible, then the
    higher robust rate wins.  Returns (best indices, best report).
    """
    best_key, best_idx, best_rep = None, None, None
    for combo in product(range(n_levels), repeat=n_ris):
        idx = np.asarray(combo, int)
        rep = closed_form_objective(
            scenario, channels, uncertainty, w, phases_from_indices(idx, n_levels)
        )
        key = (rep.feasible, rep.rate)
        if best_key is None or key > best_key:
            best_key, best_idx, best_rep = key, idx, rep
    return best_idx, best_rep


def relative_match(a: float, b: float, rtol: float, scale: float) -> bool:
    """Relative agreement with a floor for the both-near-zero case."""
    if max(a, b) <= 1e-9 * max(scale, 1e-300):
        return True
    return abs(a - b) <= rtol * max(a, b)
