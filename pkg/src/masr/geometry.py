"""Far-field channel synthesis for the movable-antenna symbiotic-radio link.

Every channel is assembled from per-path plane-wave responses: a path with
elevation theta and azimuth phi contributes the phase 2*pi/lambda * rho(p)
at an antenna located at p, where rho is the propagation difference of p
relative to the array reference point.  Amplitudes, angles and per-path
complex gains are drawn once per realization; moving an antenna only
changes phases, never the path gains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def propagation_difference(p: np.ndarray, elevation: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    """Path-length difference (meters) of position p relative to the array origin.

    rho = x*cos(theta)*cos(phi) + y*cos(theta)*sin(phi) + z*sin(theta),
    broadcast over per-path angle arrays.
    """
    p = np.asarray(p, dtype=float)
    ct = np.cos(elevation)
    return p[..., 0] * ct * np.cos(azimuth) + p[..., 1] * ct * np.sin(azimuth) + p[..., 2] * np.sin(elevation)


def field_response_vector(p: np.ndarray, elevation: np.ndarray, azimuth: np.ndarray, wavelength: float) -> np.ndarray:
    """Unit-modulus response e^{j 2 pi / lambda * rho_l(p)} for each of the L paths."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    rho = propagation_difference(p, elevation, azimuth)
    return np.exp(2j * np.pi / wavelength * rho)


def pathloss_variance(distance: float, gain: float, exponent: float, n_paths: int) -> float:
    """Per-path complex-gain variance gain * distance^(-exponent) / n_paths."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    return gain * distance ** (-exponent) / n_paths


@dataclass(frozen=True)
class MovementRegion:
    """Axis-aligned box the transmit antennas may move in (meters)."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if not (self.x_min <= self.x_max and self.y_min <= self.y_max and self.z_min <= self.z_max):
            raise ValueError("region bounds must satisfy min <= max componentwise")

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.x_min, self.y_min, self.z_min])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.x_max, self.y_max, self.z_max])

    @property
    def sides(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, positions: np.ndarray, tol: float = 1e-9) -> bool:
        p = np.atleast_2d(positions)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def clamp(self, positions: np.ndarray) -> np.ndarray:
        return np.clip(positions, self.lower, self.upper)


@dataclass(frozen=True, eq=False)
class PathLink:
    """One propagation link: per-path angles at both ends plus diagonal path gains.

    transmit_* angles steer the response at the link's transmit array,
    receive_* angles at its receive array; `gains` holds the diagonal of the
    path-response matrix, drawn CN(0, pathloss_variance) entrywise.
    """

    transmit_elevation: np.ndarray  # (L,)
    transmit_azimuth: np.ndarray  # (L,)
    receive_elevation: np.ndarray  # (L,)
    receive_azimuth: np.ndarray  # (L,)
    gains: np.ndarray  # (L,) complex

    def __post_init__(self):
        n = len(self.gains)
        for a in (self.transmit_elevation, self.transmit_azimuth, self.receive_elevation, self.receive_azimuth):
            if len(a) != n:
                raise ValueError("angle lists and path gains must have equal length")

    @property
    def n_paths(self) -> int:
        return len(self.gains)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Estimated channels for one receive user at fixed antenna positions.

    h_u: direct channel, (K,); H_r_h: RIS-side composite F_r^H Sigma G_r, (M, K);
    h_s: RIS-to-user channel, (M,), independent of antenna positions;
    H_bs: cascaded channel diag(h_s^H) @ H_r_h, (M, K).
    """

    h_u: np.ndarray
    H_r_h: np.ndarray
    h_s: np.ndarray
    H_bs: np.ndarray


@dataclass(frozen=True, eq=False)
class SystemGeometry:
    """Fixed propagation state: node placement, per-link angles, path gains.

    Antenna positions are the only moving part; everything here stays constant
    across an optimization run.  `pt_to_user` and `ris_to_user` hold one link
    per user so multi-user setups reuse the same transmit-side draw.
    """

    wavelength: float
    region: MovementRegion
    ris_elements: np.ndarray  # (M, 3) element positions relative to the RIS reference
    pt_to_ris: PathLink
    pt_to_user: tuple[PathLink, ...]
    ris_to_user: tuple[PathLink, ...]
    ris_receive_row: np.ndarray = field(init=False)  # (M, L) F_r^H Sigma_r, precomputed
    user_direct_rows: tuple[np.ndarray, ...] = field(init=False)  # each (L,) f_u^H Sigma_u
    ris_user_channels: tuple[np.ndarray, ...] = field(init=False)  # each (M,) h_s

    def __post_init__(self):
        if len(self.pt_to_user) != len(self.ris_to_user):
            raise ValueError("need one PT->user and one RIS->user link per user")
        # Receive response at each RIS element; the PU is a single antenna at its
        # reference point, so its receive response is all ones.
        L = self.pt_to_ris.n_paths
        F_r = np.stack(
            [
                field_response_vector(e, self.pt_to_ris.receive_elevation, self.pt_to_ris.receive_azimuth, self.wavelength)
                for e in self.ris_elements
            ],
            axis=1,
        )  # (L, M)
        object.__setattr__(self, "ris_receive_row", F_r.conj().T * self.pt_to_ris.gains[None, :])

        direct_rows = []
        for link in self.pt_to_user:
            f_u = np.ones(link.n_paths, dtype=complex)
            direct_rows.append(f_u.conj() * link.gains)  # (L,)
        object.__setattr__(self, "user_direct_rows", tuple(direct_rows))

        ris_user = []
        for link in self.ris_to_user:
            G_s = np.stack(
                [
                    field_response_vector(e, link.transmit_elevation, link.transmit_azimuth, self.wavelength)
                    for e in self.ris_elements
                ],
                axis=1,
            )  # (L, M)
            f_s = np.ones(link.n_paths, dtype=complex)
            h_s_h = (f_s.conj() * link.gains) @ G_s  # (M,)
            ris_user.append(h_s_h.conj())  # store h_s so h_s^H recovers the row
        object.__setattr__(self, "ris_user_channels", tuple(ris_user))

    @property
    def n_users(self) -> int:
        return len(self.pt_to_user)

    @property
    def n_ris(self) -> int:
        return self.ris_elements.shape[0]


def _transmit_responses(geom: SystemGeometry, link: PathLink, positions: np.ndarray) -> np.ndarray:
    """Transmit response matrix G, shape (..., L, K), for stacked positions (..., K, 3)."""
    rho = propagation_difference(
        positions[..., None, :, :],  # (..., 1, K, 3)
        link.transmit_elevation[:, None],  # (L, 1)
        link.transmit_azimuth[:, None],
    )  # (..., L, K)
    return np.exp(2j * np.pi / geom.wavelength * rho)


def build_channels(geom: SystemGeometry, positions: np.ndarray, user: int = 0) -> ChannelSet:
    """Assemble the channel set seen by one user for antenna positions (K, 3).

    h_u^H = f_u^H Sigma_u G_u and H_r_h = F_r^H Sigma_r G_r follow directly from
    the per-link responses; the cascade is H_bs = diag(h_s^H) @ H_r_h.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise ValueError("positions must have shape (K, 3)")
    G_r = _transmit_responses(geom, geom.pt_to_ris, positions)  # (L, K)
    G_u = _transmit_responses(geom, geom.pt_to_user[user], positions)  # (L, K)
    H_r_h = geom.ris_receive_row @ G_r  # (M, K)
    h_u = (geom.user_direct_rows[user] @ G_u).conj()  # (K,)
    h_s = geom.ris_user_channels[user]
    H_bs = h_s.conj()[:, None] * H_r_h
    return ChannelSet(h_u=h_u, H_r_h=H_r_h, h_s=h_s, H_bs=H_bs)


def build_channels_batch(geom: SystemGeometry, positions: np.ndarray, user: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Direct and cascaded channels for a batch of position sets (S, K, 3).

    Returns (h_u_batch (S, K), H_bs_batch (S, M, K)); used by the position
    optimizer, which re-evaluates fitness across a whole swarm at once.
    """
    positions = np.asarray(positions, dtype=float)
    G_r = _transmit_responses(geom, geom.pt_to_ris, positions)  # (S, L, K)
    G_u = _transmit_responses(geom, geom.pt_to_user[user], positions)  # (S, L, K)
    H_r_h = np.einsum("ml,slk->smk", geom.ris_receive_row, G_r)
    h_u = np.einsum("l,slk->sk", geom.user_direct_rows[user], G_u).conj()
    H_bs = geom.ris_user_channels[user].conj()[None, :, None] * H_r_h
    return h_u, H_bs


def draw_link(
    rng: np.random.Generator,
    n_paths: int,
    distance: float,
    gain: float,
    exponent: float,
) -> PathLink:
    """Draw one link: angles uniform on [0, pi] (uniform [-pi/2, pi/2] shifted by
    +pi/2 into the response model's convention) and CN(0, v) path gains."""
    var = pathloss_variance(distance, gain, exponent, n_paths)
    std = np.sqrt(var / 2.0)
    draws = rng.uniform(-np.pi / 2, np.pi / 2, size=(4, n_paths)) + np.pi / 2
    g = rng.normal(0.0, std, size=n_paths) + 1j * rng.normal(0.0, std, size=n_paths)
    return PathLink(
        transmit_elevation=draws[0],
        transmit_azimuth=draws[1],
        receive_elevation=draws[2],
        receive_azimuth=draws[3],
        gains=g,
    )


def draw_geometry(
    rng: np.random.Generator,
    wavelength: float,
    region: MovementRegion,
    region_center: np.ndarray,
    ris_position: np.ndarray,
    user_positions: list[np.ndarray],
    n_ris: int,
    n_paths: int,
    gain: float,
    exponent: float,
) -> SystemGeometry:
    """Draw a full propagation realization for one or more users.

    Path-loss distances use node reference points (the region center for the
    transmitter); RIS elements sit half a wavelength apart along y around the
    RIS reference point.
    """
    region_center = np.asarray(region_center, dtype=float)
    ris_position = np.asarray(ris_position, dtype=float)
    offsets = (np.arange(n_ris) - (n_ris - 1) / 2.0) * wavelength / 2.0
    ris_elements = np.zeros((n_ris, 3))
    ris_elements[:, 1] = offsets  # relative to the RIS reference point

    d_ris = float(np.linalg.norm(ris_position - region_center))
    pt_to_ris = draw_link(rng, n_paths, d_ris, gain, exponent)
    pt_to_user = []
    ris_to_user = []
    for up in user_positions:
        up = np.asarray(up, dtype=float)
        pt_to_user.append(draw_link(rng, n_paths, float(np.linalg.norm(up - region_center)), gain, exponent))
        ris_to_user.append(draw_link(rng, n_paths, float(np.linalg.norm(up - ris_position)), gain, exponent))
    return SystemGeometry(
        wavelength=wavelength,
        region=region,
        ris_elements=ris_elements,
        pt_to_ris=pt_to_ris,
        pt_to_user=tuple(pt_to_user),
        ris_to_user=tuple(ris_to_user),
    )


def grid_placement(region: MovementRegion, n_antennas: int, min_spacing: float) -> np.ndarray:
    """Deterministic initial placement: a uniform grid on the region's x-y face.

    Gives identical starting points to the movable and fixed-antenna schemes.
    Raises if the region cannot host n_antennas at the requested spacing.
    """
    lo, hi = region.lower, region.upper
    cols = int(np.ceil(np.sqrt(n_antennas)))
    rows = int(np.ceil(n_antennas / cols))
    xs = np.linspace(lo[0], hi[0], cols) if cols > 1 else np.array([(lo[0] + hi[0]) / 2])
    ys = np.linspace(lo[1], hi[1], rows) if rows > 1 else np.array([(lo[1] + hi[1]) / 2])
    pts = [(x, y, lo[2]) for y in ys for x in xs][:n_antennas]
    positions = np.array(pts)
    if n_antennas > 1:
        d = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        if d.min() < min_spacing:
            raise ValueError("region too small to place antennas at the minimum spacing")
    return positions
