"""Bounded channel-estimation error model and tight worst-case evaluators.

Errors live in norm balls: ||dH||_F <= xi_bs around the cascaded channel and
||dh||_2 <= xi_u around the direct channel, with radii proportional to the
current channel norms.  For the scalar amplitudes that drive both scenarios'
rates the inner extrema over these balls have closed forms (the extremal
perturbation is a phase-aligned rank-one/colinear copy), so worst cases are
evaluated exactly instead of by re-solving conic programs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class UncertaintyModel:
    """Error-ball radii, derived from ratio parameters and channel norms."""

    g_bs: float
    g_u: float
    xi_bs: float
    xi_u: float

    @classmethod
    def from_channels(cls, g_bs: float, g_u: float, H_bs: np.ndarray, h_u: np.ndarray) -> "UncertaintyModel":
        """xi_bs = g_bs*||H_bs||_F and xi_u = g_u*||h_u||_2 for the current estimates."""
        if not (0 <= g_bs < 1 and 0 <= g_u < 1):
            raise ValueError("uncertainty ratios must lie in [0, 1)")
        return cls(
            g_bs=g_bs,
            g_u=g_u,
            xi_bs=g_bs * float(np.linalg.norm(H_bs)),
            xi_u=g_u * float(np.linalg.norm(h_u)),
        )


@dataclass(frozen=True, eq=False)
class Perturbation:
    """One realization of the channel errors, inside both balls."""

    dH_bs: np.ndarray  # (M, K)
    dh_u: np.ndarray  # (K,)


def _ball_sample(rng: np.random.Generator, shape: tuple[int, ...], radius: float, on_boundary: bool) -> np.ndarray:
    z = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    nrm = np.linalg.norm(z)
    if nrm == 0.0:
        return np.zeros(shape, dtype=complex)
    if on_boundary:
        return z * (radius / nrm)
    # Uniform radius fraction; worst cases sit on the sphere, so interior
    # coverage only needs to be non-degenerate.
    return z * (radius * rng.uniform() / nrm)


def sample_perturbation(
    model: UncertaintyModel,
    rng: np.random.Generator,
    shape_H: tuple[int, int],
    boundary_fraction: float = 0.5,
) -> Perturbation:
    """Draw one perturbation; with probability boundary_fraction both errors
    sit exactly on their spheres, where the worst cases live."""
    on_b = rng.uniform() < boundary_fraction
    return Perturbation(
        dH_bs=_ball_sample(rng, shape_H, model.xi_bs, on_b),
        dh_u=_ball_sample(rng, (shape_H[1],), model.xi_u, on_b),
    )


def worst_case_direct_amplitude(h_u: np.ndarray, w: np.ndarray, xi_u: float, sense: str = "min") -> float:
    """Extremum of |(h_u + dh)^H w| over ||dh|| <= xi_u.

    The extremal dh is colinear with w and phase-aligned, so the value is
    |h_u^H w| -+ xi_u*||w||, clamped at zero for the minimum.
    """
    nominal = abs(np.vdot(h_u, w))
    slack = xi_u * float(np.linalg.norm(w))
    if sense == "min":
        return max(nominal - slack, 0.0)
    if sense == "max":
        return nominal + slack
    raise ValueError("sense must be 'min' or 'max'")


def worst_case_cascaded_amplitude(H_bs: np.ndarray, psi: np.ndarray, w: np.ndarray, xi_bs: float, sense: str = "min") -> float:
    """Extremum of |psi^H (H_bs + dH) w| over ||dH||_F <= xi_bs.

    |psi^H dH w| <= ||dH||_F ||psi|| ||w|| with equality at dH proportional to
    psi w^H, which is rank one, so the Frobenius bound is attained.
    """
    nominal = abs(psi.conj() @ H_bs @ w)
    slack = xi_bs * float(np.linalg.norm(psi)) * float(np.linalg.norm(w))
    if sense == "min":
        return max(nominal - slack, 0.0)
    if sense == "max":
        return nominal + slack
    raise ValueError("sense must be 'min' or 'max'")


def worst_case_combined_amplitude(
    h_u: np.ndarray,
    H_bs: np.ndarray,
    psi: np.ndarray,
    w: np.ndarray,
    xi_u: float,
    xi_bs: float,
    sign: float = 1.0,
) -> float:
    """Minimum of |(h_u^H + sign*psi^H H_bs) w + errors| over both balls.

    Both error terms subtract at most their aligned maxima, so the bound
    max(|nominal| - xi_u||w|| - xi_bs||psi||||w||, 0) is tight (each extremal
    perturbation aligns against the nominal inner product independently).
    """
    nominal = abs(np.vdot(h_u, w) + sign * (psi.conj() @ H_bs @ w))
    slack = xi_u * float(np.linalg.norm(w)) + xi_bs * float(np.linalg.norm(psi)) * float(np.linalg.norm(w))
    return max(nominal - slack, 0.0)


# Batched variants used by the swarm fitness, one row per candidate position set.


def batch_direct_amplitude_min(h_u: np.ndarray, w: np.ndarray, xi_u: np.ndarray) -> np.ndarray:
    """max(|h_u^H w| - xi_u*||w||, 0) with h_u of shape (S, K), xi_u (S,)."""
    nominal = np.abs(h_u.conj() @ w)
    return np.maximum(nominal - xi_u * np.linalg.norm(w), 0.0)


def batch_cascaded_amplitude(H_bs: np.ndarray, psi: np.ndarray, w: np.ndarray, xi_bs: np.ndarray, sense: str = "max") -> np.ndarray:
    """|psi^H H_bs w| +- xi_bs*||psi||*||w|| with H_bs of shape (S, M, K)."""
    nominal = np.abs(np.einsum("m,smk,k->s", psi.conj(), H_bs, w))
    slack = xi_bs * np.linalg.norm(psi) * np.linalg.norm(w)
    if sense == "max":
        return nominal + slack
    return np.maximum(nominal - slack, 0.0)


def batch_combined_amplitude_min(
    h_u: np.ndarray, H_bs: np.ndarray, psi: np.ndarray, w: np.ndarray, xi_u: np.ndarray, xi_bs: np.ndarray, sign: float
) -> np.ndarray:
    """Batched worst_case_combined_amplitude over (S, ...) channel stacks."""
    nominal = np.abs(h_u.conj() @ w + sign * np.einsum("m,smk,k->s", psi.conj(), H_bs, w))
    slack = (xi_u + xi_bs * np.linalg.norm(psi)) * np.linalg.norm(w)
    return np.maximum(nominal - slack, 0.0)
