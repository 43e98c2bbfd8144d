import math

import numpy as np
import pytest

from nfxl import (
    ArrayConfig,
    angular_codebook,
    array_gain,
    far_channel,
    focus_vector,
    gain_map,
    near_channel,
    nearest_codeword,
    polar_codebook,
    rayleigh_distance,
    steer_vector,
    user_at,
    write_gain_map_csv,
)
from nfxl.beams import codebook_gains, default_sector
from nfxl.errors import DimensionMismatch, InvalidGrid

BROADSIDE = math.pi / 2

# frozen from a direct numeric evaluation of |b^H h| / ||h|| for a beam
# focused at broadside 20 m applied to the broadside 100 m channel (N=256)
FOCUS_20_ON_100_GAIN = 0.3073604707835797


def test_focus_matched_gain_is_one(paper_cfg, rng):
    for _ in range(20):
        u = user_at(paper_cfg, math.acos(rng.uniform(-0.9, 0.9)), rng.uniform(5, 300))
        b = focus_vector(paper_cfg, u)
        h = near_channel(paper_cfg, u)
        assert array_gain(b, h) == pytest.approx(1.0, abs=1e-12)


def test_focus_single_antenna():
    b = focus_vector(ArrayConfig(n_antennas=1), user_at(ArrayConfig(n_antennas=1), 1.0, 10.0))
    assert b.entries.shape == (1,)
    assert abs(b.entries[0]) == pytest.approx(1.0, abs=1e-15)


def test_focus_mismatch_regression(paper_cfg):
    b = focus_vector(paper_cfg, user_at(paper_cfg, BROADSIDE, 20.0))
    h = near_channel(paper_cfg, user_at(paper_cfg, BROADSIDE, 100.0), normalized=True)
    g = array_gain(b, h)
    assert g < 1.0
    assert g == pytest.approx(FOCUS_20_ON_100_GAIN, abs=1e-9)


def test_steer_matched_far_channel(paper_cfg):
    u = user_at(paper_cfg, 1.1, 500.0)
    h = far_channel(paper_cfg, u)
    assert array_gain(steer_vector(paper_cfg, 1.1), h) == pytest.approx(1.0, abs=1e-12)


def test_steer_broadside_uniform(paper_cfg):
    b = steer_vector(paper_cfg, BROADSIDE)
    np.testing.assert_allclose(b.entries, 1.0 / math.sqrt(paper_cfg.n_antennas), atol=1e-15)
    assert np.linalg.norm(b.entries) == pytest.approx(1.0, abs=1e-12)


def test_steer_spreads_on_near_channel(paper_cfg):
    # energy spread: steering at the user's own angle recovers well under
    # 80% of the matched-filter gain deep inside the near field
    u = user_at(paper_cfg, BROADSIDE, 0.1 * rayleigh_distance(paper_cfg))
    h = near_channel(paper_cfg, u, normalized=True)
    assert array_gain(steer_vector(paper_cfg, BROADSIDE), h) < 0.8


def test_polar_codebook_single_slot_is_angular(paper_cfg):
    cb = polar_codebook(paper_cfg, n_angles=16, n_dist_slots=1, r_min=10.0)
    assert cb.kind == "angular"
    assert cb.size == 16
    assert np.all(np.isinf(cb.ranges_m))


def test_polar_codebook_distance_slots(paper_cfg):
    # slot 0 is the far-field steering entry; slots s >= 1 focus at
    # r_min * n_dist_slots / s, uniform steps in inverse distance
    cb = polar_codebook(paper_cfg, n_angles=1, n_dist_slots=3, r_min=10.0)
    assert cb.size == 3
    np.testing.assert_allclose(cb.ranges_m, [math.inf, 30.0, 15.0])
    inv = np.array([0.0, 1 / 30.0, 1 / 15.0])
    np.testing.assert_allclose(np.diff(inv), 1 / 30.0, rtol=1e-12)


def test_codebook_unit_norms(paper_cfg):
    cb = polar_codebook(paper_cfg, n_angles=8, n_dist_slots=4, r_min=10.0)
    assert cb.size == 32
    np.testing.assert_allclose(np.linalg.norm(cb.matrix, axis=0), 1.0, atol=1e-12)


def test_polar_codebook_invalid_grid(paper_cfg):
    with pytest.raises(InvalidGrid):
        polar_codebook(paper_cfg, 0, 4, 10.0)
    with pytest.raises(InvalidGrid):
        polar_codebook(paper_cfg, 8, 4, rayleigh_distance(paper_cfg) + 1.0)
    with pytest.raises(InvalidGrid):
        polar_codebook(paper_cfg, 8, 4, -5.0)


def test_array_gain_orthogonal_is_zero(paper_cfg, rng):
    u = user_at(paper_cfg, 1.3, 60.0)
    h = near_channel(paper_cfg, u)
    b = focus_vector(paper_cfg, u).entries
    v = rng.standard_normal(paper_cfg.n_antennas) + 1j * rng.standard_normal(paper_cfg.n_antennas)
    v -= (np.vdot(h.entries, v) / np.vdot(h.entries, h.entries)) * h.entries
    v /= np.linalg.norm(v)
    assert array_gain(v, h) == pytest.approx(0.0, abs=1e-12)
    assert 0.0 <= array_gain(b, h.entries) <= 1.0


def test_array_gain_dimension_mismatch(paper_cfg):
    b = steer_vector(paper_cfg, 1.0)
    with pytest.raises(DimensionMismatch):
        array_gain(b, np.ones(8, dtype=complex))


def test_gain_bound_random(paper_cfg, rng):
    for _ in range(50):
        b = steer_vector(paper_cfg, rng.uniform(0.2, 2.9))
        u = user_at(paper_cfg, rng.uniform(0.2, 2.9), rng.uniform(5, 500))
        g = array_gain(b, near_channel(paper_cfg, u))
        assert -1e-12 <= g <= 1.0 + 1e-12


def test_focus_dominates_steering(paper_cfg, rng):
    rd = rayleigh_distance(paper_cfg)
    wins = 0
    n = 200
    for _ in range(n):
        ang = math.acos(rng.uniform(-0.9, 0.9))
        r = rng.uniform(0.02, 0.2) * rd
        u = user_at(paper_cfg, ang, r)
        h = near_channel(paper_cfg, u, normalized=True)
        g_focus = array_gain(focus_vector(paper_cfg, u), h)
        g_steer = array_gain(steer_vector(paper_cfg, ang), h)
        assert g_focus >= g_steer - 1e-12
        wins += g_focus > g_steer
    assert wins >= 0.99 * n


def test_depth_of_focus_peak(paper_cfg):
    r_f = 40.0
    b = focus_vector(paper_cfg, user_at(paper_cfg, BROADSIDE, r_f))
    radii = np.concatenate([np.linspace(8, 400, 60), [r_f]])
    gains = [
        array_gain(b, near_channel(paper_cfg, user_at(paper_cfg, BROADSIDE, r), normalized=True))
        for r in radii
    ]
    assert radii[int(np.argmax(gains))] == r_f


def test_codebook_cover(paper_cfg):
    cb = polar_codebook(paper_cfg, n_angles=12, n_dist_slots=4, r_min=15.0)
    for j in range(0, cb.size, 5):
        ang, r = cb.angles_rad[j], cb.ranges_m[j]
        if math.isinf(r):
            h = far_channel(paper_cfg, user_at(paper_cfg, ang, 100 * rayleigh_distance(paper_cfg)))
        else:
            h = near_channel(paper_cfg, user_at(paper_cfg, ang, r))
        assert codebook_gains(cb, h).max() >= 0.999


def test_nearest_codeword(paper_cfg):
    cb = polar_codebook(paper_cfg, n_angles=16, n_dist_slots=4, r_min=10.0)
    j = nearest_codeword(cb, math.cos(cb.angles_rad[5]), 1e9)
    assert math.isinf(cb.ranges_m[j])
    assert math.cos(cb.angles_rad[j]) == pytest.approx(math.cos(cb.angles_rad[5]), abs=1e-12)
    j2 = nearest_codeword(cb, math.cos(cb.angles_rad[5]), 41.0)
    assert cb.ranges_m[j2] == 40.0


def test_default_sector_covers_box(paper_cfg):
    lo, hi = default_sector(paper_cfg)
    assert -1.0 <= lo < 0 < hi <= 1.0


def test_gain_map_csv(tmp_path, paper_cfg):
    beam = steer_vector(paper_cfg, BROADSIDE)
    angles = np.linspace(1.4, 1.8, 5)
    radii = np.array([50.0, 500.0, math.inf])
    rows = gain_map(paper_cfg, beam, angles, radii)
    assert len(rows) == 15
    path = tmp_path / "map.csv"
    write_gain_map_csv(rows, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "angle_rad,r_m,gain"
    assert len(lines) == 16
