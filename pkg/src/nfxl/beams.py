"""Beamfocusing / beamsteering vectors, polar-domain codebooks, array gain.

A focusing beam matches the exact spherical wavefront at a point
(angle and distance); a steering beam matches the planar wavefront of a
direction only.  Gain is the normalized matched-filter output
|b^H h| / ||h||, which is 1 exactly when the beam is phase-aligned with
the channel.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidGrid
from .geometry import (
    DEFAULT_H_RANGE,
    DEFAULT_X_RANGE,
    ArrayConfig,
    ChannelVec,
    UserPos,
    element_ranges,
    far_channel,
    near_channel,
    range_and_axis_cos,
    rayleigh_distance,
    user_at,
)


@dataclass(frozen=True)
class Beam:
    """A unit-norm transmit vector and how it was built."""

    entries: np.ndarray
    kind: str  # "focus" or "steer"
    angle_rad: float
    range_m: float  # inf for steering beams


@dataclass(frozen=True)
class Codebook:
    """Beam lattice over (angle, distance); matrix holds beams as columns."""

    matrix: np.ndarray  # N x B
    angles_rad: np.ndarray  # length B
    ranges_m: np.ndarray  # length B, inf marks far-field entries
    kind: str  # "polar" or "angular"

    @property
    def size(self) -> int:
        return self.matrix.shape[1]


def focus_vector(cfg: ArrayConfig, point: UserPos) -> Beam:
    """Near-field focusing beam: per-element phase matched to the exact
    spherical wavefront at the focal point."""
    rn = element_ranges(cfg, point)
    n = cfg.n_antennas
    entries = np.exp(-2j * math.pi * rn / cfg.wavelength_m) / math.sqrt(n)
    r, cos_psi = range_and_axis_cos(cfg, point)
    return Beam(entries, "focus", math.acos(cos_psi), r)


def steer_vector(cfg: ArrayConfig, angle_rad: float) -> Beam:
    """Far-field steering beam: linear phase along the array axis."""
    d = cfg.element_offsets()
    n = cfg.n_antennas
    entries = np.exp(2j * math.pi * d * math.cos(angle_rad) / cfg.wavelength_m) / math.sqrt(n)
    return Beam(entries, "steer", angle_rad, math.inf)


def _steer_matrix(cfg: ArrayConfig, cos_grid: np.ndarray) -> np.ndarray:
    """N x len(grid) matrix of steering beams, one per cos(angle) value."""
    d = cfg.element_offsets()
    return np.exp(
        2j * math.pi * np.outer(d, cos_grid) / cfg.wavelength_m
    ) / math.sqrt(cfg.n_antennas)


def array_gain(beam: Beam | np.ndarray, h: ChannelVec | np.ndarray) -> float:
    """Normalized gain |b^H h| / ||h|| in [0, 1]."""
    b = beam.entries if isinstance(beam, Beam) else np.asarray(beam)
    hv = h.entries if isinstance(h, ChannelVec) else np.asarray(h)
    if b.shape != hv.shape:
        raise DimensionMismatch(f"beam shape {b.shape} vs channel shape {hv.shape}")
    norm = np.linalg.norm(hv)
    if norm == 0.0:
        return 0.0
    return float(abs(np.vdot(b, hv)) / norm)


def default_sector(
    cfg: ArrayConfig,
    x_range: tuple[float, float] = DEFAULT_X_RANGE,
    h_range: tuple[float, float] = DEFAULT_H_RANGE,
) -> tuple[float, float]:
    """(min, max) of cos(angle-to-axis) subtended by a deployment box."""
    xs = np.linspace(x_range[0], x_range[1], 64)
    hs = np.linspace(h_range[0], h_range[1], 64)
    cos_vals = []
    for x in xs:
        for h in (h_range[0], h_range[1]):
            if x == 0.0 and h == cfg.bs_height_m:
                continue
            cos_vals.append(range_and_axis_cos(cfg, UserPos(x, h))[1])
    for h in hs:
        for x in (x_range[0], x_range[1]):
            if x == 0.0 and h == cfg.bs_height_m:
                continue
            cos_vals.append(range_and_axis_cos(cfg, UserPos(x, h))[1])
    return float(min(cos_vals)), float(max(cos_vals))


def polar_codebook(
    cfg: ArrayConfig,
    n_angles: int,
    n_dist_slots: int,
    r_min: float,
    sector: tuple[float, float] | None = None,
) -> Codebook:
    """Angle-distance beam lattice for location-division access.

    Angles are uniform in cos(angle) over the service sector.  Distance
    slots are uniform in inverse distance: slot 0 is the far-field entry
    (a steering beam, 1/r = 0) and slot s >= 1 focuses at
    r_min * n_dist_slots / s, so consecutive slots differ by a fixed
    1 / (n_dist_slots * r_min) step in curvature.  One distance slot
    degenerates to the classical angular (SDMA) codebook.
    """
    if n_angles < 1 or n_dist_slots < 1:
        raise InvalidGrid("n_angles and n_dist_slots must be >= 1")
    if not 0 < r_min < rayleigh_distance(cfg):
        raise InvalidGrid(
            f"r_min must lie in (0, Rayleigh distance {rayleigh_distance(cfg):.3g}), got {r_min}"
        )
    if sector is None:
        sector = default_sector(cfg)
    cos_lo, cos_hi = sector
    if not (-1.0 <= cos_lo < cos_hi <= 1.0):
        raise InvalidGrid(f"bad sector {sector}")

    cos_grid = (
        np.linspace(cos_lo, cos_hi, n_angles) if n_angles > 1
        else np.array([(cos_lo + cos_hi) / 2.0])
    )
    slot_ranges = [math.inf] + [r_min * n_dist_slots / s for s in range(1, n_dist_slots)]

    cols, angles, ranges = [], [], []
    for c in cos_grid:
        ang = math.acos(c)
        for r in slot_ranges:
            if math.isinf(r):
                cols.append(steer_vector(cfg, ang).entries)
            else:
                cols.append(focus_vector(cfg, user_at(cfg, ang, r)).entries)
            angles.append(ang)
            ranges.append(r)
    kind = "angular" if n_dist_slots == 1 else "polar"
    return Codebook(np.column_stack(cols), np.array(angles), np.array(ranges), kind)


def angular_codebook(
    cfg: ArrayConfig, n_angles: int, sector: tuple[float, float] | None = None
) -> Codebook:
    """Far-field (SDMA) codebook: steering beams only."""
    if sector is None:
        sector = default_sector(cfg)
    cos_lo, cos_hi = sector
    if n_angles < 1:
        raise InvalidGrid("n_angles must be >= 1")
    cos_grid = (
        np.linspace(cos_lo, cos_hi, n_angles) if n_angles > 1
        else np.array([(cos_lo + cos_hi) / 2.0])
    )
    angles = np.arccos(cos_grid)
    matrix = _steer_matrix(cfg, cos_grid)
    return Codebook(matrix, angles, np.full(n_angles, math.inf), "angular")


def nearest_codeword(cb: Codebook, cos_psi: float, range_m: float) -> int:
    """Codeword whose lattice cell is nearest a location.

    Nearest angle (in cos) first, then nearest inverse distance within that
    angle; far-field entries sit at 1/r = 0.  Models beam selection from an
    estimated user location rather than from full channel knowledge, so
    users at the same angle map to the same steering beam in an angular
    codebook.
    """
    cos_grid = np.cos(cb.angles_rad)
    d_ang = np.abs(cos_grid - cos_psi)
    at_angle = d_ang <= d_ang.min() + 1e-15
    inv_r = np.where(np.isinf(cb.ranges_m), 0.0, 1.0 / cb.ranges_m)
    d_inv = np.abs(inv_r - 1.0 / range_m)
    d_inv[~at_angle] = np.inf
    return int(np.argmin(d_inv))


def codebook_gains(cb: Codebook, h: ChannelVec | np.ndarray) -> np.ndarray:
    """Gain of every codeword on one channel."""
    hv = h.entries if isinstance(h, ChannelVec) else np.asarray(h)
    if hv.shape[0] != cb.matrix.shape[0]:
        raise DimensionMismatch(
            f"channel length {hv.shape[0]} vs codebook rows {cb.matrix.shape[0]}"
        )
    norm = np.linalg.norm(hv)
    if norm == 0.0:
        return np.zeros(cb.size)
    return np.abs(cb.matrix.conj().T @ hv) / norm


def gain_map(
    cfg: ArrayConfig,
    beam: Beam,
    angles_rad: np.ndarray,
    ranges_m: np.ndarray,
    normalized: bool = True,
) -> list[tuple[float, float, float]]:
    """Evaluate a beam's gain over an (angle, distance) grid.

    Returns (angle_rad, r_m, gain) rows, angle-major.  Distances beyond
    the Rayleigh region may be passed as inf to probe the far-field limit.
    """
    rows = []
    for ang in angles_rad:
        for r in ranges_m:
            if math.isinf(r):
                h = far_channel(cfg, user_at(cfg, ang, 10 * rayleigh_distance(cfg)), normalized)
            else:
                h = near_channel(cfg, user_at(cfg, ang, r), normalized)
            rows.append((float(ang), float(r), array_gain(beam, h)))
    return rows


def write_gain_map_csv(rows, path) -> None:
    """Write gain-map rows with the `angle_rad,r_m,gain` header, atomically."""
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["angle_rad", "r_m", "gain"])
        for ang, r, g in rows:
            writer.writerow([repr(ang), repr(r), repr(g)])
    os.replace(tmp, path)
