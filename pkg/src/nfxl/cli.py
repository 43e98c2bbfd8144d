"""Command-line front end: one verb per experiment.

    nfxl gen          --config gen.json [--seed N] [--out DIR]
    nfxl sweep-snr    --config sweep.json ...
    nfxl ldma-vs-sdma --config ldma.json ...
    nfxl classify     --config classify.json ...
    nfxl gainmap      --config gainmap.json ...
    nfxl score        --config score.json ...

Configs are JSON, schema-validated with unknown keys rejected.  Every
command is deterministic given (config, seed); `--seed` overrides the
config.  CSV outputs carry fixed headers and are written atomically.

Exit codes: 0 success, 2 config/validation error, 3 runtime numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import jsonschema
import numpy as np

from . import datastore, precoding, schemas
from .beams import Beam, angular_codebook, focus_vector, gain_map, polar_codebook, steer_vector, write_gain_map_csv
from .errors import ConfigError, NfxlError, RankDeficient
from .fieldsplit import add_csi_noise, calibrate_threshold, confusion, field_stats
from .geometry import ArrayConfig, FieldLabel, UserPos, _sub_rng, near_channel, user_at
from .geometry import DEFAULT_H_RANGE, DEFAULT_X_RANGE

_SCHEME_ORDER = ["mrt", "zf", "sdma", "ldma", "oracle"]


def _load_config(path: str, command: str, seed_override, out_override) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(config, schemas.BY_COMMAND[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config {path}: {exc.message}") from exc
    if seed_override is not None:
        config["seed"] = seed_override
    if out_override is not None:
        config["out"] = out_override
    if command != "score" and "out" not in config:
        raise ConfigError("no output directory: set `out` in the config or pass --out")
    return config


def _array_config(config: dict) -> ArrayConfig:
    try:
        return ArrayConfig(**config.get("cfg", {}))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _ranges(config: dict):
    r = config.get("ranges", {})
    return tuple(r.get("x_m", DEFAULT_X_RANGE)), tuple(r.get("h_m", DEFAULT_H_RANGE))


def _codebooks(cfg: ArrayConfig, config: dict):
    from .geometry import rayleigh_distance

    cb = config.get("codebook", {})
    n_angles = cb.get("n_angles", 256)
    n_dist = cb.get("n_dist_slots", 8)
    # default inner focus slot at 3% of the Rayleigh distance (~10 m for
    # the reference N=256 / 30 GHz array)
    r_min = cb.get("r_min", 0.03 * rayleigh_distance(cfg))
    return angular_codebook(cfg, n_angles), polar_codebook(cfg, n_angles, n_dist, r_min)


def _write_csv(path: str, header: list[str], rows) -> None:
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)


def cmd_gen(config: dict) -> None:
    cfg = _array_config(config)
    splits = config.get("splits", {"train": 8000, "val": 1000, "test": 1000})
    seed = config.get("seed", 0)
    out = config["out"]
    os.makedirs(out, exist_ok=True)
    for offset, (name, count) in enumerate(sorted(splits.items(), key=lambda kv: ("train", "val", "test").index(kv[0]))):
        spec = datastore.GenSpec(
            cfg=cfg,
            k_users=config.get("k_users", 4),
            count=count,
            seed=seed + offset,
            snr_db=config.get("snr_db", 10.0),
            ranges=_ranges(config),
            with_oracle=config.get("with_oracle", False),
            oracle_budget=config.get("oracle_budget", 20000),
            normalized_gain=config.get("normalized_gain", True),
        )
        ds = datastore.generate(spec)
        paths = datastore.write(ds, os.path.join(out, name))
        print(f"wrote {paths[0]} ({count} records)")


def _scenario(cfg: ArrayConfig, k_users: int, ranges, seed: int, index: int, normalized: bool):
    """One record's channels plus the users' (cos_psi, range) locations."""
    from .geometry import _uniform64, range_and_axis_cos

    rng = _sub_rng(seed, index)
    (x_lo, x_hi), (h_lo, h_hi) = ranges
    xs = _uniform64(rng, x_lo, x_hi, k_users)
    hs = _uniform64(rng, h_lo, h_hi, k_users)
    users = [UserPos(float(x), float(h)) for x, h in zip(xs, hs)]
    h = np.column_stack([near_channel(cfg, u, normalized).entries for u in users])
    locs = []
    for u in users:
        r, c = range_and_axis_cos(cfg, u)
        locs.append((c, r))
    return h, locs


def cmd_sweep_snr(config: dict) -> None:
    cfg = _array_config(config)
    seed = config.get("seed", 0)
    k_users = config.get("k_users", 2)
    n_records = config.get("n_records", 20)
    grid = config.get("snr_db_grid", [-10.0, 0.0, 10.0, 20.0, 30.0])
    schemes = config.get("schemes", _SCHEME_ORDER)
    normalized = config.get("normalized_gain", True)
    budget = config.get("oracle_budget", 20000)
    if {"sdma", "ldma"} & set(schemes):
        sdma_cb, ldma_cb = _codebooks(cfg, config)

    scenarios = [
        _scenario(cfg, k_users, _ranges(config), seed, i, normalized)
        for i in range(n_records)
    ]

    rows = []
    for snr_db in grid:
        p_tot = 10.0 ** (snr_db / 10.0)
        acc = {s: [] for s in schemes}
        for h, locs in scenarios:
            prob = precoding.PrecodeProblem(h, p_tot, 1.0)
            equal = np.full(k_users, p_tot / k_users)
            if "mrt" in acc:
                acc["mrt"].append(precoding.sum_se(prob, precoding.mrt(prob, equal)))
            if "zf" in acc:
                try:
                    w = precoding.zf(prob, equal).directions
                    gains = np.abs(np.einsum("nk,nk->k", h.conj(), w)) ** 2
                    p = precoding.waterfill(gains, p_tot, 1.0)
                    acc["zf"].append(precoding.sum_se(prob, precoding.zf(prob, p)))
                except RankDeficient:
                    acc["zf"].append(math.nan)
            if "sdma" in acc:
                acc["sdma"].append(precoding.sum_se(prob, precoding.location_precoder(prob, sdma_cb, locs)))
            if "ldma" in acc:
                acc["ldma"].append(precoding.sum_se(prob, precoding.location_precoder(prob, ldma_cb, locs)))
            if "oracle" in acc:
                acc["oracle"].append(precoding.oracle_lambda(prob, budget).se)
        for s in _SCHEME_ORDER:
            if s in acc:
                rows.append([repr(float(snr_db)), s, repr(float(np.mean(acc[s])))])

    out = config["out"]
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "sweep_snr.csv")
    _write_csv(path, ["snr_db", "scheme", "sum_se"], rows)
    print(f"wrote {path}")


def cmd_ldma_vs_sdma(config: dict) -> None:
    cfg = _array_config(config)
    seed = config.get("seed", 0)
    n_seeds = config.get("n_seeds", 100)
    snr_db = config.get("snr_db", 30.0)
    r_near = config.get("r_near_m", 20.0)
    gaps = config.get("gaps_m", [0.0, 60.0, 120.0, 180.0])
    cos_lo, cos_hi = config.get("angle_cos_range", [-0.5, 0.5])
    normalized = config.get("normalized_gain", True)
    sdma_cb, ldma_cb = _codebooks(cfg, config)
    p_tot = 10.0 ** (snr_db / 10.0)

    from .geometry import _uniform64

    rows = []
    for gap in gaps:
        se_l, se_s = [], []
        for i in range(n_seeds):
            rng = _sub_rng(seed, i)
            ang = math.acos(float(_uniform64(rng, cos_lo, cos_hi)))
            radii = [r_near, r_near + gap]
            users = [user_at(cfg, ang, r) for r in radii]
            locs = [(math.cos(ang), r) for r in radii]
            h = np.column_stack([near_channel(cfg, u, normalized).entries for u in users])
            prob = precoding.PrecodeProblem(h, p_tot, 1.0)
            se_l.append(precoding.sum_se(prob, precoding.location_precoder(prob, ldma_cb, locs)))
            se_s.append(precoding.sum_se(prob, precoding.location_precoder(prob, sdma_cb, locs)))
        rows.append([repr(float(gap)), repr(float(np.mean(se_l))), repr(float(np.mean(se_s)))])

    out = config["out"]
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "ldma_vs_sdma.csv")
    _write_csv(path, ["delta_r_m", "se_ldma", "se_sdma"], rows)
    print(f"wrote {path}")


def _classifier_population(cfg, n, r_factors, cos_range, seed, normalized=True):
    from .geometry import _uniform64, rayleigh_distance

    rd = rayleigh_distance(cfg)
    cols, labels = [], []
    for i in range(n):
        rng = _sub_rng(seed, i)
        c = float(_uniform64(rng, cos_range[0], cos_range[1]))
        r = float(_uniform64(rng, r_factors[0], r_factors[1])) * rd
        u = user_at(cfg, math.acos(c), r)
        cols.append(near_channel(cfg, u, normalized).entries)
        labels.append(FieldLabel.NEAR if r < rd else FieldLabel.FAR)
    return np.column_stack(cols), labels


def cmd_classify(config: dict) -> None:
    cfg = _array_config(config)
    seed = config.get("seed", 0)
    n_val = config.get("n_val", 400)
    n_test = config.get("n_test", 400)
    near_rf = config.get("near_r_factors", [0.02, 0.1])
    far_rf = config.get("far_r_factors", [10.0, 50.0])
    cos_range = config.get("angle_cos_range", [-0.95, 0.95])
    grid = config.get("csi_snr_db_grid", [0.0, 10.0, 20.0, 30.0])
    noiseless = config.get("noiseless_row", True)
    grid_size = config.get("angle_grid_size")

    def population(n, sub):
        h_near, lab_near = _classifier_population(cfg, n // 2, near_rf, cos_range, seed * 4 + sub)
        h_far, lab_far = _classifier_population(cfg, n - n // 2, far_rf, cos_range, seed * 4 + sub + 2)
        return np.concatenate([h_near, h_far], axis=1), lab_near + lab_far

    h_val, lab_val = population(n_val, 0)
    h_test, lab_test = population(n_test, 1)

    levels = ([math.inf] if noiseless else []) + sorted(grid, reverse=True)
    rows = []
    for idx, level in enumerate(levels):
        if math.isinf(level):
            hv, ht = h_val, h_test
        else:
            hv = add_csi_noise(h_val, level, _sub_rng(seed, 1000 + idx))
            ht = add_csi_noise(h_test, level, _sub_rng(seed, 2000 + idx))
        thr = calibrate_threshold(field_stats(cfg, hv, grid_size), lab_val)
        stats = field_stats(cfg, ht, grid_size)
        pred = [FieldLabel.FAR if s >= thr else FieldLabel.NEAR for s in stats]
        rep = confusion(pred, lab_test)
        rows.append([repr(float(level)), repr(rep.accuracy), repr(rep.precision_near), repr(rep.recall_near)])

    out = config["out"]
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "classify.csv")
    _write_csv(path, ["csi_snr_db", "accuracy", "precision_near", "recall_near"], rows)
    print(f"wrote {path}")


def cmd_gainmap(config: dict) -> None:
    cfg = _array_config(config)
    beam_spec = config["beam"]
    if beam_spec["kind"] == "focus":
        if "range_m" not in beam_spec:
            raise ConfigError("focus beam needs range_m")
        beam: Beam = focus_vector(cfg, user_at(cfg, beam_spec["angle_rad"], beam_spec["range_m"]))
    else:
        beam = steer_vector(cfg, beam_spec["angle_rad"])

    def axis_values(spec, default):
        ax = config.get(spec, default)
        if ax.get("spacing", "linear") == "inverse":
            inv = np.linspace(1.0 / ax["start"], 1.0 / ax["stop"], ax["num"])
            return 1.0 / inv
        return np.linspace(ax["start"], ax["stop"], ax["num"])

    angles = axis_values("angles_rad", {"start": 0.35 * math.pi, "stop": 0.65 * math.pi, "num": 33})
    ranges = axis_values("ranges_m", {"start": 5.0, "stop": 400.0, "num": 33})
    rows = gain_map(cfg, beam, angles, ranges, config.get("normalized_gain", True))

    out = config["out"]
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "gainmap.csv")
    write_gain_map_csv(rows, path)
    print(f"wrote {path}")


def cmd_score(config: dict) -> None:
    ds = datastore.read(config["dataset"])
    ps = datastore.read_predictions(config["predictions"])
    report = datastore.score(ds, ps).as_dict()
    text = json.dumps(report, indent=2)
    if "out" in config:
        os.makedirs(config["out"], exist_ok=True)
        path = os.path.join(config["out"], "score.json")
        tmp = f"{path}.tmp-{os.getpid()}"
        with open(tmp, "w") as fh:
            fh.write(text + "\n")
        os.replace(tmp, path)
        print(f"wrote {path}")
    print(text)


_COMMANDS = {
    "gen": cmd_gen,
    "sweep-snr": cmd_sweep_snr,
    "ldma-vs-sdma": cmd_ldma_vs_sdma,
    "classify": cmd_classify,
    "gainmap": cmd_gainmap,
    "score": cmd_score,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nfxl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args.config, args.command, args.seed, args.out)
        _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NfxlError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
