import hashlib
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfxl import ArrayConfig
from nfxl import datastore as ds
from nfxl.errors import (
    FormatError,
    IdMismatch,
    MissingOracle,
    VersionMismatch,
)
from nfxl.geometry import FieldLabel


def small_spec(**kw):
    defaults = dict(
        cfg=ArrayConfig(n_antennas=8),
        k_users=2,
        count=6,
        seed=11,
        snr_db=15.0,
        with_oracle=False,
    )
    defaults.update(kw)
    return ds.GenSpec(**defaults)


def test_generate_deterministic():
    a = ds.generate(small_spec())
    b = ds.generate(small_spec())
    assert ds.blob_bytes(a) == ds.blob_bytes(b)


def test_generate_parallel_matches_serial():
    spec = small_spec(count=16)
    serial = ds.generate(spec, workers=1)
    for workers in (2, 5):
        parallel = ds.generate(spec, workers=workers)
        assert ds.blob_bytes(parallel) == ds.blob_bytes(serial)


def test_single_user_oracle_analytic():
    d = ds.generate(small_spec(k_users=1, count=1, with_oracle=True))
    rec = d.records[0]
    prob = d.problem_for(rec)
    expected = math.log2(1.0 + prob.total_power * np.linalg.norm(prob.channels) ** 2)
    assert rec.oracle_se == pytest.approx(expected, abs=1e-6)


def test_write_read_round_trip(tmp_path):
    d = ds.generate(small_spec(with_oracle=True))
    ds.write(d, tmp_path / "t")
    d2 = ds.read(tmp_path / "t")
    assert ds.blob_bytes(d2) == ds.blob_bytes(d)
    assert d2.snr_db == d.snr_db and d2.seed == d.seed and d2.k_users == d.k_users


def test_reserialization_identical_bytes(tmp_path):
    d = ds.generate(small_spec())
    p_json, p_blob = ds.write(d, tmp_path / "a")
    d2 = ds.read(tmp_path / "a")
    ds.write(d2, tmp_path / "b")
    assert (tmp_path / "a.nfld").read_bytes() == (tmp_path / "b.nfld").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_manifest_schema(tmp_path):
    d = ds.generate(small_spec())
    p_json, _ = ds.write(d, tmp_path / "t")
    manifest = json.loads(open(p_json).read())
    assert list(manifest) == [
        "format_version", "cfg", "k_users", "count", "seed", "snr_db",
        "with_oracle", "blob_sha256",
    ]
    assert list(manifest["cfg"]) == [
        "n_antennas", "carrier_hz", "spacing_m", "bs_height_m", "tilt_rad",
    ]
    blob = (tmp_path / "t.nfld").read_bytes()
    assert manifest["blob_sha256"] == hashlib.sha256(blob).hexdigest()
    assert blob[:4] == b"NFLD"


def test_truncated_blob_raises(tmp_path):
    d = ds.generate(small_spec())
    ds.write(d, tmp_path / "t")
    blob = (tmp_path / "t.nfld").read_bytes()
    (tmp_path / "t.nfld").write_bytes(blob[: len(blob) - 7])
    # fix the manifest hash so truncation itself is what the parser hits
    manifest = json.loads((tmp_path / "t.json").read_text())
    manifest["blob_sha256"] = hashlib.sha256(blob[: len(blob) - 7]).hexdigest()
    (tmp_path / "t.json").write_text(json.dumps(manifest))
    with pytest.raises(FormatError) as exc:
        ds.read(tmp_path / "t")
    assert exc.value.offset is not None


def test_hash_mismatch_raises(tmp_path):
    d = ds.generate(small_spec())
    ds.write(d, tmp_path / "t")
    blob = bytearray((tmp_path / "t.nfld").read_bytes())
    blob[-1] ^= 0xFF
    (tmp_path / "t.nfld").write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        ds.read(tmp_path / "t")


def test_version_mismatch(tmp_path):
    d = ds.generate(small_spec())
    ds.write(d, tmp_path / "t")
    manifest = json.loads((tmp_path / "t.json").read_text())
    manifest["format_version"] = 2
    (tmp_path / "t.json").write_text(json.dumps(manifest))
    with pytest.raises(VersionMismatch):
        ds.read(tmp_path / "t")


def test_labels_match_rayleigh_rule():
    d = ds.generate(small_spec(cfg=ArrayConfig(n_antennas=64), count=10))
    from nfxl import label_field
    from nfxl.geometry import UserPos

    for rec in d.records:
        for k in range(d.k_users):
            u = UserPos(rec.users[k, 0], rec.users[k, 1])
            assert rec.labels[k] == int(label_field(d.cfg, u))


@settings(deadline=None, max_examples=100)
@given(
    n=st.integers(2, 10),
    k=st.integers(1, 3),
    count=st.integers(1, 4),
    seed=st.integers(0, 2**32),
    with_oracle=st.booleans(),
)
def test_round_trip_property(tmp_path_factory, n, k, count, seed, with_oracle):
    tmp = tmp_path_factory.mktemp("rt")
    spec = ds.GenSpec(
        cfg=ArrayConfig(n_antennas=n),
        k_users=k,
        count=count,
        seed=seed,
        snr_db=10.0,
        with_oracle=with_oracle,
        oracle_budget=500,
    )
    d = ds.generate(spec)
    ds.write(d, tmp / "t")
    assert ds.blob_bytes(ds.read(tmp / "t")) == ds.blob_bytes(d)


def oracle_predictions(d):
    return ds.PredictionSet(
        "precode",
        d.cfg.n_antennas,
        d.k_users,
        [ds.PredictionRecord(r.record_id, lam=r.oracle_lam, powers=r.oracle_p) for r in d.records],
    )


def test_score_oracle_as_prediction():
    d = ds.generate(small_spec(with_oracle=True))
    rep = ds.score(d, oracle_predictions(d))
    assert rep.se_ratio == pytest.approx(1.0, abs=1e-9)
    assert rep.n_rejected == 0


def test_score_equal_split_below_oracle():
    d = ds.generate(small_spec(with_oracle=True, count=10))
    p_tot = 10.0 ** (d.snr_db / 10.0)
    preds = ds.PredictionSet(
        "precode",
        d.cfg.n_antennas,
        d.k_users,
        [
            ds.PredictionRecord(
                r.record_id,
                lam=np.full(d.k_users, p_tot / d.k_users),
                powers=np.full(d.k_users, p_tot / d.k_users),
            )
            for r in d.records
        ],
    )
    rep = ds.score(d, preds)
    assert rep.se_ratio <= 1.0 + 1e-12


def test_score_classify_ground_truth():
    d = ds.generate(small_spec())
    preds = ds.PredictionSet(
        "classify",
        d.cfg.n_antennas,
        d.k_users,
        [ds.PredictionRecord(r.record_id, labels=r.labels.copy()) for r in d.records],
    )
    rep = ds.score(d, preds)
    assert rep.classify.accuracy == 1.0


def test_score_id_mismatch():
    d = ds.generate(small_spec())
    preds = oracle_predictions(ds.generate(small_spec(count=3, with_oracle=True)))
    with pytest.raises(IdMismatch):
        ds.score(d, preds)


def test_score_missing_oracle():
    d = ds.generate(small_spec(with_oracle=False))
    preds = ds.PredictionSet(
        "precode",
        d.cfg.n_antennas,
        d.k_users,
        [ds.PredictionRecord(r.record_id, lam=np.ones(2), powers=np.ones(2)) for r in d.records],
    )
    with pytest.raises(MissingOracle):
        ds.score(d, preds)


def test_score_rejects_infeasible():
    d = ds.generate(small_spec(with_oracle=True))
    p_tot = 10.0 ** (d.snr_db / 10.0)
    records = [
        ds.PredictionRecord(r.record_id, lam=r.oracle_lam, powers=r.oracle_p)
        for r in d.records
    ]
    records[0].lam = np.array([p_tot, p_tot])  # breaks the simplex budget
    rep = ds.score(d, ds.PredictionSet("precode", d.cfg.n_antennas, d.k_users, records))
    assert rep.n_rejected == 1
    assert rep.se_ratio == pytest.approx(1.0, abs=1e-9)


def test_prediction_file_round_trip(tmp_path):
    d = ds.generate(small_spec(with_oracle=True))
    ps = oracle_predictions(d)
    path = tmp_path / "pred.nfp"
    ds.write_predictions(ps, path)
    ps2 = ds.read_predictions(path)
    assert ps2.task == "precode"
    assert ds.prediction_bytes(ps2) == ds.prediction_bytes(ps)

    labels = ds.PredictionSet(
        "classify",
        d.cfg.n_antennas,
        d.k_users,
        [ds.PredictionRecord(r.record_id, labels=r.labels) for r in d.records],
    )
    ds.write_predictions(labels, tmp_path / "cls.nfp")
    got = ds.read_predictions(tmp_path / "cls.nfp")
    assert got.task == "classify"
    np.testing.assert_array_equal(got.records[2].labels, d.records[2].labels)


def test_channels_stored_as_complex64():
    d = ds.generate(small_spec(count=1))
    assert d.records[0].channels.dtype == np.complex64
    assert d.records[0].channels.shape == (8, 2)


def test_normalized_gain_flag():
    d_norm = ds.generate(small_spec(count=1, normalized_gain=True))
    d_fs = ds.generate(small_spec(count=1, normalized_gain=False))
    # free-space channels at tens of meters are orders of magnitude weaker
    assert np.abs(d_fs.records[0].channels).max() < 1e-3 < np.abs(d_norm.records[0].channels).max()


def test_genspec_validation():
    with pytest.raises(ValueError):
        small_spec(count=0)
    with pytest.raises(ValueError):
        small_spec(k_users=0)
