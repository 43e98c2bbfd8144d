"""Array geometry and LoS channel synthesis for a tilted linear array.

The base station is a uniform linear array in the vertical (x, z) plane,
tilted from the vertical by a configurable angle toward the served
half-plane.  Users are points (ground distance x, altitude h) in the same
plane.  Channels are exact spherical-wave (near-field) or planar-wave
(far-field) line-of-sight models.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CoincidentUser

SPEED_OF_LIGHT = 299792458.0  # m/s, exact SI value

# Deployment box of the reference low-altitude scenario: ground distance
# 0..200 m, altitude 0..30 m.
DEFAULT_X_RANGE = (0.0, 200.0)
DEFAULT_H_RANGE = (0.0, 30.0)


@dataclass(frozen=True)
class ArrayConfig:
    """Base-station array geometry.

    spacing_m defaults to half a wavelength when left as None.
    tilt_rad is measured from the vertical toward the served half-plane
    (0 = vertical array).
    """

    n_antennas: int = 256
    carrier_hz: float = 30e9
    spacing_m: float | None = None
    bs_height_m: float = 15.0
    tilt_rad: float = math.radians(5.0)

    def __post_init__(self):
        if self.n_antennas < 1:
            raise ValueError(f"n_antennas must be >= 1, got {self.n_antennas}")
        if not self.carrier_hz > 0:
            raise ValueError(f"carrier_hz must be > 0, got {self.carrier_hz}")
        if self.spacing_m is None:
            object.__setattr__(self, "spacing_m", self.wavelength_m / 2.0)
        if not self.spacing_m > 0:
            raise ValueError(f"spacing_m must be > 0, got {self.spacing_m}")
        if self.bs_height_m < 0:
            raise ValueError(f"bs_height_m must be >= 0, got {self.bs_height_m}")
        if not abs(self.tilt_rad) < math.pi / 2:
            raise ValueError(f"|tilt_rad| must be < pi/2, got {self.tilt_rad}")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def aperture_m(self) -> float:
        return (self.n_antennas - 1) * self.spacing_m

    def element_offsets(self) -> np.ndarray:
        """Signed element offsets along the array axis, centered on zero."""
        n = np.arange(self.n_antennas, dtype=np.float64)
        return (n - (self.n_antennas - 1) / 2.0) * self.spacing_m

    def axis(self) -> np.ndarray:
        """Unit vector of the array axis, (sin tilt, cos tilt)."""
        return np.array([math.sin(self.tilt_rad), math.cos(self.tilt_rad)])


@dataclass(frozen=True)
class UserPos:
    """A user location: ground distance x >= 0 and altitude h, in meters."""

    x_m: float
    h_m: float

    def __post_init__(self):
        if self.x_m < 0:
            raise ValueError(f"x_m must be >= 0, got {self.x_m}")


class FieldLabel(enum.IntEnum):
    FAR = 0
    NEAR = 1


@dataclass(frozen=True)
class ChannelVec:
    """One user's length-N channel with its generating metadata."""

    entries: np.ndarray
    model: str  # "near-spherical" or "far-planar"
    user: UserPos
    beta: float  # path gain |h_n|^2 common to all entries


@dataclass(frozen=True)
class ChannelMatrix:
    """K user channels sharing one ArrayConfig, stacked as columns."""

    cfg: ArrayConfig
    vectors: tuple[ChannelVec, ...] = field(default=())

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack([v.entries for v in self.vectors])

    @property
    def n_users(self) -> int:
        return len(self.vectors)


def antenna_positions(cfg: ArrayConfig) -> np.ndarray:
    """(N, 2) element positions; centroid sits at (0, bs_height_m)."""
    d = cfg.element_offsets()
    return np.column_stack(
        [d * math.sin(cfg.tilt_rad), cfg.bs_height_m + d * math.cos(cfg.tilt_rad)]
    )


def rayleigh_distance(cfg: ArrayConfig) -> float:
    """Near/far boundary 2 D^2 / lambda for aperture D = (N-1) * spacing."""
    d_ap = cfg.aperture_m
    return 2.0 * d_ap * d_ap / cfg.wavelength_m


def range_and_axis_cos(cfg: ArrayConfig, user: UserPos) -> tuple[float, float]:
    """Distance from the array center and cos of the angle to the array axis.

    The channel of a linear array depends on the user position only through
    this (r, cos psi) pair: the element-to-user distance is
    sqrt(r^2 - 2 d_n r cos psi + d_n^2) for element offset d_n.
    """
    dx = user.x_m
    dz = user.h_m - cfg.bs_height_m
    r = math.hypot(dx, dz)
    if r == 0.0:
        raise CoincidentUser(f"user {user} sits at the array center")
    ux, uz = math.sin(cfg.tilt_rad), math.cos(cfg.tilt_rad)
    cos_psi = (ux * dx + uz * dz) / r
    return r, min(1.0, max(-1.0, cos_psi))


def user_at(cfg: ArrayConfig, angle_rad: float, range_m: float) -> UserPos:
    """Place a user at polar coordinates about the array center.

    angle_rad is measured from the array axis toward the served (x > 0)
    half-plane; the channel of a linear array is mirror-symmetric about
    the axis, so this parameterization covers all distinct channels.
    """
    if range_m <= 0:
        raise ValueError(f"range_m must be > 0, got {range_m}")
    t = cfg.tilt_rad
    x = range_m * math.sin(t + angle_rad)
    z = cfg.bs_height_m + range_m * math.cos(t + angle_rad)
    if x < -1e-9 * range_m:
        raise ValueError(
            f"angle {angle_rad} rad at tilt {t} leaves the x >= 0 half-plane"
        )
    return UserPos(max(x, 0.0), z)


def element_ranges(cfg: ArrayConfig, user: UserPos) -> np.ndarray:
    """Exact Euclidean distance from every element to the user."""
    r, cos_psi = range_and_axis_cos(cfg, user)
    d = cfg.element_offsets()
    rn_sq = r * r - 2.0 * d * r * cos_psi + d * d
    # guard tiny negative values from cancellation
    rn = np.sqrt(np.maximum(rn_sq, 0.0))
    if np.any(rn == 0.0):
        raise CoincidentUser(f"user {user} coincides with an antenna element")
    return rn


def path_gain(cfg: ArrayConfig, range_m: float, normalized: bool = False) -> float:
    """Free-space power gain (lambda / 4 pi r)^2, or 1 in normalized mode."""
    if normalized:
        return 1.0
    return (cfg.wavelength_m / (4.0 * math.pi * range_m)) ** 2


def near_channel(cfg: ArrayConfig, user: UserPos, normalized: bool = False) -> ChannelVec:
    """Exact spherical-wavefront LoS channel.

    Entry n is sqrt(beta) * exp(-j 2 pi r_n / lambda) with r_n the exact
    element-to-user distance and beta the center-range path gain.
    """
    r, _ = range_and_axis_cos(cfg, user)
    rn = element_ranges(cfg, user)
    beta = path_gain(cfg, r, normalized)
    entries = math.sqrt(beta) * np.exp(-2j * math.pi * rn / cfg.wavelength_m)
    return ChannelVec(entries, "near-spherical", user, beta)


def far_channel(cfg: ArrayConfig, user: UserPos, normalized: bool = False) -> ChannelVec:
    """Planar-wavefront approximation: linear per-element phase.

    Entry n is sqrt(beta) * exp(-j 2 pi (r - d_n cos psi) / lambda), the
    first-order expansion of the spherical model in d_n / r.
    """
    r, cos_psi = range_and_axis_cos(cfg, user)
    d = cfg.element_offsets()
    beta = path_gain(cfg, r, normalized)
    phase = -2.0 * math.pi * (r - d * cos_psi) / cfg.wavelength_m
    entries = math.sqrt(beta) * np.exp(1j * phase)
    return ChannelVec(entries, "far-planar", user, beta)


def label_field(cfg: ArrayConfig, user: UserPos) -> FieldLabel:
    """Ground-truth label: NEAR iff the center range is strictly inside
    the Rayleigh distance (ties label FAR)."""
    r, _ = range_and_axis_cos(cfg, user)
    return FieldLabel.NEAR if r < rayleigh_distance(cfg) else FieldLabel.FAR


def _sub_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based per-item generator: key = (seed, index)."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def _uniform64(rng: np.random.Generator, lo: float, hi: float, size=None) -> np.ndarray:
    """Uniform draw built from 64-bit integers for bit-reproducibility."""
    u = rng.integers(0, 2**64, size=size, dtype=np.uint64, endpoint=False)
    return lo + (hi - lo) * (u / 2.0**64)


def sample_users(
    cfg: ArrayConfig,
    count: int,
    ranges: tuple[tuple[float, float], tuple[float, float]] = (DEFAULT_X_RANGE, DEFAULT_H_RANGE),
    seed: int = 0,
) -> list[UserPos]:
    """i.i.d. uniform user positions over a box, reproducible per (seed, index).

    Each user draws from its own counter-derived stream, so sampling is
    order-independent and safe to parallelize.
    """
    (x_lo, x_hi), (h_lo, h_hi) = ranges
    if x_lo < 0:
        raise ValueError("x range must be non-negative")
    users = []
    for i in range(count):
        rng = _sub_rng(seed, i)
        x = float(_uniform64(rng, x_lo, x_hi))
        h = float(_uniform64(rng, h_lo, h_hi))
        users.append(UserPos(x, h))
    return users


def channel_matrix(
    cfg: ArrayConfig, users: list[UserPos], normalized: bool = False
) -> ChannelMatrix:
    """Stack exact spherical-wave channels for a user set."""
    return ChannelMatrix(cfg, tuple(near_channel(cfg, u, normalized) for u in users))
