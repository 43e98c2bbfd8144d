"""Multi-user downlink precoding: baselines, the lambda-parameterized
optimal-structure beamformer, and a derivative-free oracle over (lambda, p).

The optimal sum-SE beam directions live in the family

    w_k(lambda) = normalize( (I + sum_i lambda_i / sigma^2 h_i h_i^H)^{-1} h_k ),

with lambda on the scaled simplex {lambda >= 0, sum lambda = P}.  The
solve is carried out in the K x K Gram domain (matrix inversion lemma),
never through an explicit N x N inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .beams import Codebook, codebook_gains, nearest_codeword
from .errors import (
    DimensionMismatch,
    InsufficientCodebook,
    RankDeficient,
    ZeroChannel,
)
from .geometry import ChannelMatrix

_COND_LIMIT = 1e12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
GRID_RESOLUTION = 64  # simplex grid step 1/64 for the K <= 2 oracle


@dataclass(frozen=True)
class PrecodeProblem:
    """K-user downlink instance: channels, power budget, noise power."""

    channels: np.ndarray  # N x K complex
    total_power: float
    noise_var: float

    def __post_init__(self):
        h = self.channels
        if isinstance(h, ChannelMatrix):
            h = h.matrix
        h = np.atleast_2d(np.asarray(h, dtype=np.complex128))
        object.__setattr__(self, "channels", h)
        if not self.total_power > 0:
            raise ValueError(f"total_power must be > 0, got {self.total_power}")
        if not self.noise_var > 0:
            raise ValueError(f"noise_var must be > 0, got {self.noise_var}")
        if self.n_users < 1:
            raise ValueError("need at least one user")

    @property
    def n_antennas(self) -> int:
        return self.channels.shape[0]

    @property
    def n_users(self) -> int:
        return self.channels.shape[1]


@dataclass(frozen=True)
class PrecodeSolution:
    """Unit-norm beam directions, per-user powers, and dual weights."""

    directions: np.ndarray  # N x K, unit-norm columns
    powers: np.ndarray  # length K, >= 0, sums to <= P
    duals: np.ndarray  # length K, >= 0, sums to <= P

    def validate(self, total_power: float) -> None:
        col_norms = np.linalg.norm(self.directions, axis=0)
        if np.any(np.abs(col_norms - 1.0) > 1e-10):
            raise ValueError(f"direction columns not unit-norm: {col_norms}")
        if np.any(self.powers < -1e-12) or self.powers.sum() > total_power + 1e-9:
            raise ValueError(f"powers infeasible: {self.powers}")
        if np.any(self.duals < -1e-12) or self.duals.sum() > total_power + 1e-9:
            raise ValueError(f"duals infeasible: {self.duals}")


def _as_matrix(channels) -> np.ndarray:
    if isinstance(channels, ChannelMatrix):
        return channels.matrix
    return np.asarray(channels, dtype=np.complex128)


def _normalize_columns(w: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(w, axis=-2, keepdims=True)
    return w / norms


def mrt(prob: PrecodeProblem, powers: np.ndarray) -> PrecodeSolution:
    """Maximum ratio transmission: each beam aligned with its channel."""
    h = prob.channels
    norms = np.linalg.norm(h, axis=0)
    if np.any(norms == 0.0):
        raise ZeroChannel("MRT undefined for a zero channel column")
    sol = PrecodeSolution(h / norms, np.asarray(powers, float), np.zeros(prob.n_users))
    sol.validate(prob.total_power)
    return sol


def zf(prob: PrecodeProblem, powers: np.ndarray) -> PrecodeSolution:
    """Zero forcing: beam k orthogonal to every other user's channel."""
    h = prob.channels
    if prob.n_users > prob.n_antennas:
        raise RankDeficient(f"ZF needs K <= N, got K={prob.n_users}, N={prob.n_antennas}")
    gram = h.conj().T @ h
    if np.linalg.cond(gram) > _COND_LIMIT:
        raise RankDeficient("channel Gram matrix numerically singular")
    w = h @ np.linalg.solve(gram, np.eye(prob.n_users, dtype=np.complex128))
    sol = PrecodeSolution(_normalize_columns(w), np.asarray(powers, float), np.zeros(prob.n_users))
    sol.validate(prob.total_power)
    return sol


def structure_precoder(prob: PrecodeProblem, duals: np.ndarray) -> np.ndarray:
    """Beam directions of the optimal family for given dual weights.

    Uses the inversion-lemma form
        (I + U U^H)^{-1} h_k = h_k - U (I_K + U^H U)^{-1} U^H h_k
    with U = H diag(sqrt(lambda)) / sigma, so the cost is O(N K^2 + K^3).
    """
    lam = np.asarray(duals, dtype=np.float64)
    if lam.shape != (prob.n_users,):
        raise DimensionMismatch(f"duals shape {lam.shape}, expected ({prob.n_users},)")
    if np.any(lam < 0):
        raise ValueError("duals must be non-negative")
    h = prob.channels
    u = h * (np.sqrt(lam) / math.sqrt(prob.noise_var))
    m = np.eye(prob.n_users, dtype=np.complex128) + u.conj().T @ u
    x = cho_solve(cho_factor(m), u.conj().T @ h)
    return _normalize_columns(h - u @ x)


def _structure_dirs_batch(h: np.ndarray, lams: np.ndarray, noise_var: float) -> np.ndarray:
    """Vectorized structure_precoder over a batch of dual vectors.

    h is N x K, lams is B x K; returns B x N x K unit-column directions.
    """
    k = h.shape[1]
    scale = np.sqrt(lams / noise_var)  # B x K
    u = h[None, :, :] * scale[:, None, :]  # B x N x K
    m = np.eye(k, dtype=np.complex128)[None] + np.einsum("bnk,bnl->bkl", u.conj(), u)
    rhs = np.einsum("bnk,nl->bkl", u.conj(), h)
    x = np.linalg.solve(m, rhs)
    w = h[None, :, :] - np.einsum("bnk,bkl->bnl", u, x)
    return _normalize_columns(w)


def _cross_gains(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    """G[k, j] = |h_k^H w_j|^2 (batched over leading axes of w)."""
    c = np.einsum("nk,...nj->...kj", h.conj(), w)
    return np.abs(c) ** 2


def _se_from_gains(gains: np.ndarray, powers: np.ndarray, noise_var: float) -> np.ndarray:
    """Sum SE from a cross-gain matrix; broadcasts over leading axes."""
    signal = powers * np.diagonal(gains, axis1=-2, axis2=-1)
    total = np.einsum("...kj,j->...k", gains, powers)
    sinr_val = signal / (total - signal + noise_var)
    return np.log2(1.0 + sinr_val).sum(axis=-1)


def sinr(prob: PrecodeProblem, sol: PrecodeSolution) -> np.ndarray:
    """Per-user SINR: p_k |h_k^H w_k|^2 / (sum_{j!=k} p_j |h_k^H w_j|^2 + sigma^2)."""
    h, w = prob.channels, sol.directions
    if w.shape != h.shape:
        raise DimensionMismatch(f"directions shape {w.shape} vs channels {h.shape}")
    if sol.powers.shape != (prob.n_users,):
        raise DimensionMismatch(f"powers shape {sol.powers.shape}")
    gains = _cross_gains(h, w)
    signal = sol.powers * np.diag(gains)
    interference = gains @ sol.powers - signal
    return signal / (interference + prob.noise_var)


def sum_se(prob: PrecodeProblem, sol: PrecodeSolution) -> float:
    """Sum spectral efficiency sum_k log2(1 + SINR_k) in bits/s/Hz."""
    return float(np.log2(1.0 + sinr(prob, sol)).sum())


def structure_se(prob: PrecodeProblem, duals: np.ndarray, powers: np.ndarray) -> float:
    """Sum SE achieved by the structure precoder at (lambda, p)."""
    w = structure_precoder(prob, duals)
    gains = _cross_gains(prob.channels, w)
    return float(_se_from_gains(gains, np.asarray(powers, float), prob.noise_var))


def waterfill(gains: np.ndarray, total_power: float, noise_var: float = 1.0) -> np.ndarray:
    """Water-filling power allocation over interference-free gains.

    Solves p_k = max(0, mu - sigma^2 / g_k) with sum p = total_power by
    bisection on the water level mu.
    """
    g = np.asarray(gains, dtype=np.float64)
    if np.any(g <= 0):
        raise ValueError("gains must be positive")
    floor = noise_var / g
    lo = float(floor.min())
    hi = lo + total_power
    while hi - lo > 1e-10 * max(1.0, hi):
        mu = 0.5 * (lo + hi)
        if np.maximum(0.0, mu - floor).sum() > total_power:
            hi = mu
        else:
            lo = mu
    p = np.maximum(0.0, 0.5 * (lo + hi) - floor)
    s = p.sum()
    if s > 0:
        p *= total_power / s
    else:
        # degenerate: all power to the strongest channel
        p = np.zeros_like(g)
        p[int(np.argmax(g))] = total_power
    return p


def codebook_precoder(
    prob: PrecodeProblem, cb: Codebook, power_rule: str = "equal"
) -> PrecodeSolution:
    """Assign each user its best codeword (no duplicates) and allocate power.

    Assignment is greedy by gain over all remaining (user, codeword) pairs;
    exact ties prefer the lower codeword index, then the lower user index.
    """
    k_users = prob.n_users
    if cb.size < k_users:
        raise InsufficientCodebook(f"{k_users} users but only {cb.size} codewords")
    gains = np.stack([codebook_gains(cb, prob.channels[:, k]) for k in range(k_users)])

    assignment = np.full(k_users, -1)
    masked = gains.copy()
    for _ in range(k_users):
        top = masked.max()
        ks, bs = np.nonzero(masked == top)  # exact ties: lower codeword, then lower user
        order = np.lexsort((ks, bs))
        best_k, best_b = int(ks[order[0]]), int(bs[order[0]])
        assignment[best_k] = best_b
        masked[best_k, :] = -1.0
        masked[:, best_b] = -1.0

    w = cb.matrix[:, assignment]
    if power_rule == "equal":
        p = np.full(k_users, prob.total_power / k_users)
    elif power_rule == "waterfill":
        matched = np.abs(np.einsum("nk,nk->k", prob.channels.conj(), w)) ** 2
        matched = np.maximum(matched, 1e-300)
        p = waterfill(matched, prob.total_power, prob.noise_var)
    else:
        raise ValueError(f"unknown power rule {power_rule!r}")
    sol = PrecodeSolution(w, p, np.zeros(k_users))
    sol.validate(prob.total_power)
    return sol


def location_precoder(
    prob: PrecodeProblem,
    cb: Codebook,
    locations,
    power_rule: str = "equal",
) -> PrecodeSolution:
    """Serve each user with the codeword nearest its (angle, distance).

    locations is a length-K sequence of (cos_psi, range_m) pairs.  Unlike
    codebook_precoder, beam selection uses only the estimated location,
    never the channel, and users quantizing to the same cell share a beam:
    angle-only knowledge cannot separate users at a common angle, which is
    precisely the regime where the distance dimension pays off.
    """
    if len(locations) != prob.n_users:
        raise DimensionMismatch(f"{len(locations)} locations for {prob.n_users} users")
    idx = [nearest_codeword(cb, c, r) for c, r in locations]
    w = cb.matrix[:, idx]
    k_users = prob.n_users
    if power_rule == "equal":
        p = np.full(k_users, prob.total_power / k_users)
    elif power_rule == "waterfill":
        matched = np.abs(np.einsum("nk,nk->k", prob.channels.conj(), w)) ** 2
        p = waterfill(np.maximum(matched, 1e-300), prob.total_power, prob.noise_var)
    else:
        raise ValueError(f"unknown power rule {power_rule!r}")
    sol = PrecodeSolution(w, p, np.zeros(k_users))
    sol.validate(prob.total_power)
    return sol


@dataclass(frozen=True)
class OracleResult:
    """Best (lambda, p) found, the SE it achieves, and search accounting."""

    duals: np.ndarray
    powers: np.ndarray
    se: float
    evaluations: int
    budget_exhausted: bool

    def as_solution(self, prob: PrecodeProblem) -> PrecodeSolution:
        return PrecodeSolution(structure_precoder(prob, self.duals), self.powers, self.duals)


class _Budget:
    def __init__(self, limit: int):
        self.limit = int(limit)
        self.used = 0

    def take(self, n: int = 1) -> bool:
        if self.used + n > self.limit:
            return False
        self.used += n
        return True

    @property
    def exhausted(self) -> bool:
        return self.used >= self.limit


def _simplex_grid_k2(total: float, resolution: int) -> np.ndarray:
    t = np.arange(resolution + 1) / resolution
    return total * np.column_stack([t, 1.0 - t])


def _reapportion(v: np.ndarray, idx: int, value: float, total: float) -> np.ndarray:
    """Set v[idx] and rescale the rest so the vector still sums to total."""
    out = v.copy()
    rest = total - v[idx]
    out[idx] = value
    remaining = total - value
    if rest > 1e-300:
        mask = np.ones(len(v), dtype=bool)
        mask[idx] = False
        out[mask] = v[mask] * (remaining / rest)
    else:
        out[:] = remaining / max(len(v) - 1, 1)
        out[idx] = value
    return np.maximum(out, 0.0)


def _golden_refine(f, lo: float, hi: float, budget: _Budget, iters: int = 28):
    """Golden-section maximization on [lo, hi]; returns best probed (x, f(x))."""
    best_x, best_f = None, -math.inf
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    if not budget.take(2):
        return best_x, best_f
    fc, fd = f(c), f(d)
    for x, fx in ((c, fc), (d, fd)):
        if fx > best_f:
            best_x, best_f = x, fx
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            if not budget.take():
                break
            fc = f(c)
            if fc > best_f:
                best_x, best_f = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            if not budget.take():
                break
            fd = f(d)
            if fd > best_f:
                best_x, best_f = d, fd
    return best_x, best_f


def oracle_lambda(prob: PrecodeProblem, budget: int = 20000) -> OracleResult:
    """Derivative-free search for the best (lambda, p) of the structure family.

    Both lambda and p range over the scaled simplex {v >= 0, sum v = P}.
    For K <= 2 an exhaustive simplex grid (step P/64) seeds the search;
    coordinate-wise golden-section then refines.  Exhausting the budget is
    never fatal: the best point seen so far is returned with a flag.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    p_tot = prob.total_power
    k = prob.n_users
    h = prob.channels
    bud = _Budget(budget)

    if k == 1:
        lam = np.array([p_tot])
        p = np.array([p_tot])
        bud.take()
        se = structure_se(prob, lam, p)
        return OracleResult(lam, p, se, bud.used, False)

    best_lam = np.full(k, p_tot / k)
    best_p = np.full(k, p_tot / k)
    bud.take()
    best_se = structure_se(prob, best_lam, best_p)

    if k == 2:
        lam_grid = _simplex_grid_k2(p_tot, GRID_RESOLUTION)
        p_grid = _simplex_grid_k2(p_tot, GRID_RESOLUTION)
        centroid = np.full(k, p_tot / k)
        # one batched direction solve per lambda row, power sweep broadcast
        for i in range(lam_grid.shape[0]):
            if not bud.take(p_grid.shape[0]):
                break
            w = _structure_dirs_batch(h, lam_grid[i : i + 1], prob.noise_var)[0]
            gains = _cross_gains(h, w)
            signal = p_grid * np.diag(gains)  # (J, K)
            total = p_grid @ gains.T
            se_row = np.log2(1.0 + signal / (total - signal + prob.noise_var)).sum(axis=1)
            # flat directions (e.g. orthogonal channels) leave SE constant in
            # lambda; break those ties toward the simplex centroid
            j = int(np.argmax(se_row))
            se_ij = float(se_row[j])
            margin = 1e-12 * max(1.0, abs(best_se))
            closer = (
                np.sum((lam_grid[i] - centroid) ** 2) + np.sum((p_grid[j] - centroid) ** 2)
                < np.sum((best_lam - centroid) ** 2) + np.sum((best_p - centroid) ** 2)
            )
            if se_ij > best_se + margin or (abs(se_ij - best_se) <= margin and closer):
                best_se = se_ij
                best_lam, best_p = lam_grid[i].copy(), p_grid[j].copy()
        grid_step = 1.0 / GRID_RESOLUTION
        deltas = [2.0 * grid_step, grid_step, grid_step / 8.0]
    else:
        # no exhaustive grid beyond K=2: score a handful of starts instead
        starts = []
        w_eq = structure_precoder(prob, best_lam)
        matched = np.abs(np.einsum("nk,nk->k", h.conj(), w_eq)) ** 2
        if np.all(matched > 0):
            starts.append((best_lam.copy(), waterfill(matched, p_tot, prob.noise_var)))
        strongest = int(np.argmax(np.linalg.norm(h, axis=0)))
        solo = np.zeros(k)
        solo[strongest] = p_tot
        starts.append((best_lam.copy(), solo))
        for lam0, p0 in starts:
            if not bud.take():
                break
            se0 = structure_se(prob, lam0, p0)
            if se0 > best_se:
                best_se, best_lam, best_p = se0, lam0.copy(), p0.copy()
        deltas = [0.5, 0.1, 1.0 / GRID_RESOLUTION]

    # coordinate-wise golden-section refinement around the incumbent,
    # sweeping all coordinates repeatedly so the search can track ridges
    def eps() -> float:
        return 1e-12 * max(1.0, abs(best_se))

    max_sweeps = 8
    for delta in deltas:
        for _ in range(max_sweeps):
            if bud.exhausted:
                break
            improved = False
            for which in ("lam", "p"):
                for idx in range(k):
                    if bud.exhausted:
                        break
                    base_lam, base_p = best_lam, best_p
                    frac = (base_lam if which == "lam" else base_p)[idx] / p_tot
                    lo = max(0.0, frac - delta)
                    hi = min(1.0, frac + delta)
                    if hi - lo < 1e-12:
                        continue

                    def f(t):
                        if which == "lam":
                            lam_t = _reapportion(base_lam, idx, t * p_tot, p_tot)
                            return structure_se(prob, lam_t, base_p)
                        p_t = _reapportion(base_p, idx, t * p_tot, p_tot)
                        return structure_se(prob, base_lam, p_t)

                    x, fx = _golden_refine(f, lo, hi, bud)
                    if x is not None and fx > best_se + eps():
                        best_se = fx
                        improved = True
                        if which == "lam":
                            best_lam = _reapportion(base_lam, idx, x * p_tot, p_tot)
                        else:
                            best_p = _reapportion(base_p, idx, x * p_tot, p_tot)
            if not improved:
                break

    return OracleResult(best_lam, best_p, float(best_se), bud.used, bud.exhausted)
