"""Dataset generation, binary serialization, and prediction scoring.

A dataset on disk is a pair of files sharing one stem: `<stem>.json`
(manifest) and `<stem>.nfld` (binary blob).  The blob is little-endian
throughout:

    magic "NFLD" | version u32 | N u32 | K u32 | count u64
    per record:
        record_id u64
        users     K x (f64 x_m, f64 h_m)
        labels    K x u8          (0 = far, 1 = near)
        H         N*K x (f32 re, f32 im), column-major
        oracle_flag u8
        if set:   lambda K x f64 | p K x f64 | se f64

Prediction files reuse the same header followed by one task tag u8
(0 = classify, 1 = precode) and per-record payloads.

Channels are quantized to 32-bit floats before labels and oracle targets
are computed, so everything in a file is reproducible from the file alone.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import precoding
from .errors import (
    FormatError,
    IdMismatch,
    InfeasiblePrediction,
    MissingOracle,
    NfxlError,
    VersionMismatch,
)
from .fieldsplit import ConfusionReport, confusion
from .geometry import (
    DEFAULT_H_RANGE,
    DEFAULT_X_RANGE,
    ArrayConfig,
    UserPos,
    _sub_rng,
    _uniform64,
    label_field,
    near_channel,
)

MAGIC = b"NFLD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIQ")
TASK_CLASSIFY = 0
TASK_PRECODE = 1
SIMPLEX_TOL = 1e-6


@dataclass(frozen=True)
class GenSpec:
    """Everything that determines a generated dataset, bit for bit."""

    cfg: ArrayConfig
    k_users: int = 4
    count: int = 100
    seed: int = 0
    snr_db: float = 10.0
    ranges: tuple = (DEFAULT_X_RANGE, DEFAULT_H_RANGE)
    with_oracle: bool = False
    oracle_budget: int = 20000
    normalized_gain: bool = True

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if self.k_users < 1:
            raise ValueError(f"k_users must be >= 1, got {self.k_users}")


@dataclass
class DatasetRecord:
    record_id: int
    users: np.ndarray  # K x 2 float64 (x, h)
    labels: np.ndarray  # K uint8
    channels: np.ndarray  # N x K complex64
    oracle_lam: np.ndarray | None = None  # K float64
    oracle_p: np.ndarray | None = None
    oracle_se: float | None = None

    @property
    def has_oracle(self) -> bool:
        return self.oracle_lam is not None


@dataclass
class Dataset:
    cfg: ArrayConfig
    k_users: int
    seed: int
    snr_db: float
    with_oracle: bool
    records: list[DatasetRecord] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.records)

    def problem_for(self, record: DatasetRecord) -> precoding.PrecodeProblem:
        """Rebuild the precoding instance: sigma^2 = 1, P = 10^(snr/10)."""
        return precoding.PrecodeProblem(
            record.channels.astype(np.complex128),
            total_power=10.0 ** (self.snr_db / 10.0),
            noise_var=1.0,
        )


def _make_record(spec: GenSpec, index: int) -> DatasetRecord:
    rng = _sub_rng(spec.seed, index)
    (x_lo, x_hi), (h_lo, h_hi) = spec.ranges
    xs = _uniform64(rng, x_lo, x_hi, spec.k_users)
    hs = _uniform64(rng, h_lo, h_hi, spec.k_users)
    users = [UserPos(float(x), float(h)) for x, h in zip(xs, hs)]
    cols = [near_channel(spec.cfg, u, spec.normalized_gain).entries for u in users]
    h32 = np.column_stack(cols).astype(np.complex64)
    labels = np.array([int(label_field(spec.cfg, u)) for u in users], dtype=np.uint8)
    rec = DatasetRecord(
        record_id=index,
        users=np.array([[u.x_m, u.h_m] for u in users], dtype=np.float64),
        labels=labels,
        channels=h32,
    )
    if spec.with_oracle:
        prob = precoding.PrecodeProblem(
            h32.astype(np.complex128), 10.0 ** (spec.snr_db / 10.0), 1.0
        )
        try:
            res = precoding.oracle_lambda(prob, spec.oracle_budget)
        except (NfxlError, np.linalg.LinAlgError):
            return rec  # oracle failure is a per-record flag, never fatal
        rec.oracle_lam = res.duals.astype(np.float64)
        rec.oracle_p = res.powers.astype(np.float64)
        rec.oracle_se = float(res.se)
    return rec


def generate(spec: GenSpec, workers: int = 1) -> Dataset:
    """Deterministic dataset: record i depends only on (spec, seed, i),
    so any worker count yields identical bytes."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda i: _make_record(spec, i), range(spec.count)))
    else:
        records = [_make_record(spec, i) for i in range(spec.count)]
    return Dataset(
        cfg=spec.cfg,
        k_users=spec.k_users,
        seed=spec.seed,
        snr_db=spec.snr_db,
        with_oracle=spec.with_oracle,
        records=records,
    )


def _stem(path) -> str:
    path = os.fspath(path)
    for ext in (".json", ".nfld"):
        if path.endswith(ext):
            return path[: -len(ext)]
    return path


def blob_bytes(ds: Dataset) -> bytes:
    n = ds.cfg.n_antennas
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, n, ds.k_users, ds.count)]
    for rec in ds.records:
        parts.append(struct.pack("<Q", rec.record_id))
        parts.append(rec.users.astype("<f8").tobytes())
        parts.append(rec.labels.astype(np.uint8).tobytes())
        parts.append(rec.channels.astype("<c8").flatten(order="F").tobytes())
        if rec.has_oracle:
            parts.append(b"\x01")
            parts.append(rec.oracle_lam.astype("<f8").tobytes())
            parts.append(rec.oracle_p.astype("<f8").tobytes())
            parts.append(struct.pack("<d", rec.oracle_se))
        else:
            parts.append(b"\x00")
    return b"".join(parts)


def manifest_dict(ds: Dataset, blob_sha256: str) -> dict:
    cfg = ds.cfg
    return {
        "format_version": FORMAT_VERSION,
        "cfg": {
            "n_antennas": cfg.n_antennas,
            "carrier_hz": cfg.carrier_hz,
            "spacing_m": cfg.spacing_m,
            "bs_height_m": cfg.bs_height_m,
            "tilt_rad": cfg.tilt_rad,
        },
        "k_users": ds.k_users,
        "count": ds.count,
        "seed": ds.seed,
        "snr_db": ds.snr_db,
        "with_oracle": ds.with_oracle,
        "blob_sha256": blob_sha256,
    }


def _atomic_write(path: str, data: bytes) -> None:
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write(ds: Dataset, path) -> tuple[str, str]:
    """Serialize to `<stem>.json` + `<stem>.nfld`; returns the two paths."""
    stem = _stem(path)
    blob = blob_bytes(ds)
    sha = hashlib.sha256(blob).hexdigest()
    manifest = json.dumps(manifest_dict(ds, sha), indent=2) + "\n"
    _atomic_write(stem + ".nfld", blob)
    _atomic_write(stem + ".json", manifest.encode("utf-8"))
    return stem + ".json", stem + ".nfld"


class _Cursor:
    """Byte reader that reports the failure offset."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.off = 0

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.buf):
            raise FormatError(f"truncated while reading {what}", self.off)
        out = self.buf[self.off : self.off + n]
        self.off += n
        return out

    def array(self, dtype, count: int, what: str) -> np.ndarray:
        dt = np.dtype(dtype)
        raw = self.take(dt.itemsize * count, what)
        return np.frombuffer(raw, dtype=dt, count=count).copy()

    def done(self) -> None:
        if self.off != len(self.buf):
            raise FormatError(f"{len(self.buf) - self.off} trailing bytes", self.off)


def _parse_header(cur: _Cursor) -> tuple[int, int, int]:
    magic, version, n, k, count = _HEADER.unpack(cur.take(_HEADER.size, "header"))
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"format version {version}, reader supports {FORMAT_VERSION}")
    return n, k, count


def _parse_records(cur: _Cursor, n: int, k: int, count: int) -> list[DatasetRecord]:
    records = []
    for _ in range(count):
        rid = struct.unpack("<Q", cur.take(8, "record id"))[0]
        users = cur.array("<f8", 2 * k, "user positions").reshape(k, 2)
        labels = cur.array(np.uint8, k, "labels")
        flat = cur.array("<c8", n * k, "channel matrix")
        channels = flat.reshape((n, k), order="F")
        flag = cur.take(1, "oracle flag")[0]
        rec = DatasetRecord(rid, users, labels, channels)
        if flag == 1:
            rec.oracle_lam = cur.array("<f8", k, "oracle lambda")
            rec.oracle_p = cur.array("<f8", k, "oracle p")
            rec.oracle_se = struct.unpack("<d", cur.take(8, "oracle se"))[0]
        elif flag != 0:
            raise FormatError(f"bad oracle flag {flag}", cur.off - 1)
        records.append(rec)
    return records


def read(path) -> Dataset:
    """Load and verify a dataset pair; the blob hash must match the manifest."""
    stem = _stem(path)
    with open(stem + ".json", "rb") as fh:
        try:
            manifest = json.loads(fh.read().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"manifest is not valid JSON: {exc}") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(f"manifest format_version {manifest.get('format_version')}")
    with open(stem + ".nfld", "rb") as fh:
        blob = fh.read()
    sha = hashlib.sha256(blob).hexdigest()
    if sha != manifest["blob_sha256"]:
        raise FormatError("blob sha256 does not match manifest")

    cur = _Cursor(blob)
    n, k, count = _parse_header(cur)
    cfg_d = manifest["cfg"]
    cfg = ArrayConfig(
        n_antennas=cfg_d["n_antennas"],
        carrier_hz=cfg_d["carrier_hz"],
        spacing_m=cfg_d["spacing_m"],
        bs_height_m=cfg_d["bs_height_m"],
        tilt_rad=cfg_d["tilt_rad"],
    )
    if n != cfg.n_antennas or k != manifest["k_users"] or count != manifest["count"]:
        raise FormatError(
            f"blob header (N={n}, K={k}, count={count}) disagrees with manifest", 0
        )
    records = _parse_records(cur, n, k, count)
    cur.done()
    return Dataset(
        cfg=cfg,
        k_users=k,
        seed=manifest["seed"],
        snr_db=manifest["snr_db"],
        with_oracle=manifest["with_oracle"],
        records=records,
    )


@dataclass
class PredictionRecord:
    record_id: int
    labels: np.ndarray | None = None  # classify: K uint8
    lam: np.ndarray | None = None  # precode: K float64
    powers: np.ndarray | None = None


@dataclass
class PredictionSet:
    task: str  # "classify" or "precode"
    n_antennas: int
    k_users: int
    records: list[PredictionRecord] = field(default_factory=list)


def prediction_bytes(ps: PredictionSet) -> bytes:
    tag = TASK_CLASSIFY if ps.task == "classify" else TASK_PRECODE
    parts = [
        _HEADER.pack(MAGIC, FORMAT_VERSION, ps.n_antennas, ps.k_users, len(ps.records)),
        struct.pack("<B", tag),
    ]
    for rec in ps.records:
        parts.append(struct.pack("<Q", rec.record_id))
        if ps.task == "classify":
            parts.append(rec.labels.astype(np.uint8).tobytes())
        else:
            parts.append(rec.lam.astype("<f8").tobytes())
            parts.append(rec.powers.astype("<f8").tobytes())
    return b"".join(parts)


def write_predictions(ps: PredictionSet, path) -> str:
    path = os.fspath(path)
    _atomic_write(path, prediction_bytes(ps))
    return path


def read_predictions(path) -> PredictionSet:
    with open(os.fspath(path), "rb") as fh:
        cur = _Cursor(fh.read())
    n, k, count = _parse_header(cur)
    tag = struct.unpack("<B", cur.take(1, "task tag"))[0]
    if tag not in (TASK_CLASSIFY, TASK_PRECODE):
        raise FormatError(f"bad task tag {tag}", cur.off - 1)
    task = "classify" if tag == TASK_CLASSIFY else "precode"
    records = []
    for _ in range(count):
        rid = struct.unpack("<Q", cur.take(8, "record id"))[0]
        rec = PredictionRecord(rid)
        if tag == TASK_CLASSIFY:
            rec.labels = cur.array(np.uint8, k, "predicted labels")
        else:
            rec.lam = cur.array("<f8", k, "predicted lambda")
            rec.powers = cur.array("<f8", k, "predicted p")
        records.append(rec)
    cur.done()
    return PredictionSet(task, n, k, records)


@dataclass(frozen=True)
class ScoreReport:
    task: str
    n_records: int
    n_rejected: int
    classify: ConfusionReport | None = None
    mean_se: float | None = None
    mean_oracle_se: float | None = None
    se_ratio: float | None = None

    def as_dict(self) -> dict:
        out = {"task": self.task, "n_records": self.n_records, "n_rejected": self.n_rejected}
        if self.classify is not None:
            out.update(
                accuracy=self.classify.accuracy,
                precision_near=self.classify.precision_near,
                recall_near=self.classify.recall_near,
                precision_far=self.classify.precision_far,
                recall_far=self.classify.recall_far,
            )
        if self.se_ratio is not None:
            out.update(
                mean_se=self.mean_se,
                mean_oracle_se=self.mean_oracle_se,
                se_ratio=self.se_ratio,
            )
        return out


def _check_simplex(v: np.ndarray, total: float) -> bool:
    tol = SIMPLEX_TOL * max(1.0, total)
    return bool(np.all(v >= -tol) and abs(v.sum() - total) <= tol)


def score(ds: Dataset, ps: PredictionSet) -> ScoreReport:
    """Evaluate predictions against a dataset.

    Classification scores confusion metrics over all users.  Precoding
    re-runs the structure precoder on the stored channels for both the
    prediction and the stored oracle target and reports the mean SE ratio.
    Simplex-infeasible predictions are rejected and counted, not fatal.
    """
    by_id = {rec.record_id: rec for rec in ds.records}
    if len(by_id) != len(ds.records):
        raise IdMismatch("duplicate record ids in dataset")
    ids = [p.record_id for p in ps.records]
    if sorted(ids) != sorted(by_id):
        raise IdMismatch("prediction ids do not match dataset ids")

    if ps.task == "classify":
        pred = np.concatenate([p.labels for p in ps.records])
        truth = np.concatenate([by_id[p.record_id].labels for p in ps.records])
        return ScoreReport("classify", len(ids), 0, classify=confusion(pred, truth))

    if not ds.with_oracle:
        raise MissingOracle("precoding score needs oracle targets in the dataset")
    total_power = 10.0 ** (ds.snr_db / 10.0)
    ratios, ses, oracle_ses = [], [], []
    rejected = 0
    for p in ps.records:
        rec = by_id[p.record_id]
        if not rec.has_oracle:
            rejected += 1
            continue
        if not (_check_simplex(p.lam, total_power) and _check_simplex(p.powers, total_power)):
            rejected += 1
            continue
        prob = ds.problem_for(rec)
        se_pred = precoding.structure_se(prob, np.maximum(p.lam, 0.0), np.maximum(p.powers, 0.0))
        se_orc = precoding.structure_se(prob, rec.oracle_lam, rec.oracle_p)
        ses.append(se_pred)
        oracle_ses.append(se_orc)
        ratios.append(se_pred / se_orc if se_orc > 0 else (1.0 if se_pred == se_orc else math.inf))
    n_scored = len(ratios)
    return ScoreReport(
        "precode",
        len(ids),
        rejected,
        mean_se=float(np.mean(ses)) if n_scored else math.nan,
        mean_oracle_se=float(np.mean(oracle_ses)) if n_scored else math.nan,
        se_ratio=float(np.mean(ratios)) if n_scored else math.nan,
    )
