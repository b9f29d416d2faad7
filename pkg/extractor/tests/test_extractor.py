"""Extractor unit tests: shapes, determinism, format, error paths."""

import json
import struct

import numpy as np
import pytest
from click.testing import CliRunner

from cdsextract import (
    DATASETS,
    FEATURE_WIDTHS,
    ModelError,
    SourceError,
    TensorFormatError,
    build_model,
    extract,
    open_source,
    read_tensor,
    write_tensor,
)
from cdsextract.cli import main


def test_manifest_fields(extracted):
    manifest, out = extracted
    assert manifest.model == "resnet18"
    assert (manifest.n, manifest.K, manifest.C) == (24, 512, 3)
    assert manifest.K == FEATURE_WIDTHS["resnet18"]
    assert set(manifest.files) == {"features", "labels", "probs"}
    on_disk = json.loads((out / "manifest.json").read_text())
    assert on_disk == json.loads(manifest.to_json())


def test_tensor_shapes_and_dtypes(extracted):
    manifest, _ = extracted
    feats = read_tensor(manifest.files["features"])
    labels = read_tensor(manifest.files["labels"])
    probs = read_tensor(manifest.files["probs"])
    assert feats.shape == (24, 512) and feats.dtype == np.dtype("<f4")
    assert labels.shape == (24,) and labels.dtype == np.dtype("<u4")
    assert probs.shape == (24, 3) and probs.dtype == np.dtype("<f4")
    # labels follow the sorted class folders: cats, dogs, newts
    np.testing.assert_array_equal(labels, np.repeat([0, 1, 2], 8))


def test_probs_are_softmax_rows(extracted):
    manifest, _ = extracted
    probs = read_tensor(manifest.files["probs"])
    assert np.all(probs >= 0.0)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-5)


def test_features_finite_and_varying(extracted):
    manifest, _ = extracted
    feats = read_tensor(manifest.files["features"])
    assert np.all(np.isfinite(feats))
    assert feats.std() > 0.0


def test_no_temp_files_left(extracted):
    _, out = extracted
    assert not list(out.glob("*.tmp"))


def test_determinism(image_tree, tmp_path):
    m1 = extract(image_tree, "resnet18", tmp_path / "a", batch_size=8, seed=3)
    m2 = extract(image_tree, "resnet18", tmp_path / "b", batch_size=8, seed=3)
    for key in ("features", "labels", "probs"):
        b1 = open(m1.files[key], "rb").read()
        b2 = open(m2.files[key], "rb").read()
        assert b1 == b2, f"{key} bytes differ between identical runs"


def test_seed_changes_features(image_tree, tmp_path, extracted):
    manifest, _ = extracted
    other = extract(image_tree, "resnet18", tmp_path, batch_size=8, seed=1)
    f0 = read_tensor(manifest.files["features"])
    f1 = read_tensor(other.files["features"])
    assert not np.array_equal(f0, f1)


def test_limit_caps_rows(image_tree, tmp_path):
    manifest = extract(image_tree, "resnet18", tmp_path, batch_size=8,
                       seed=0, limit=10)
    assert manifest.n == 10
    labels = read_tensor(manifest.files["labels"])
    np.testing.assert_array_equal(labels, [0] * 8 + [1] * 2)
    # C still reflects the full class set
    assert read_tensor(manifest.files["probs"]).shape == (10, 3)


def test_header_layout(tmp_path):
    # 1x1 f32: 16 byte fixed header + 2x8 dims + 4 payload = 36 bytes
    path = tmp_path / "one.cdsf"
    write_tensor(np.array([[1.5]], dtype=np.float32), path)
    raw = path.read_bytes()
    assert len(raw) == 36
    assert raw[:4] == b"CDSF"
    version, tag, ndim = struct.unpack_from("<III", raw, 4)
    assert (version, tag, ndim) == (1, 1, 2)
    assert struct.unpack_from("<QQ", raw, 16) == (1, 1)
    assert struct.unpack_from("<f", raw, 32)[0] == 1.5


def test_write_tensor_rejections(tmp_path):
    path = tmp_path / "bad.cdsf"
    with pytest.raises(TensorFormatError):
        write_tensor(np.zeros((2, 2, 2)), path)
    with pytest.raises(TensorFormatError):
        write_tensor(np.array([np.nan]), path)
    with pytest.raises(TensorFormatError):
        write_tensor(np.array([-1, 2]), path)
    with pytest.raises(TensorFormatError):
        write_tensor(np.array(["a"], dtype=object), path)
    assert not path.exists() and not list(tmp_path.glob("*.tmp"))


def test_read_tensor_errors(tmp_path):
    path = tmp_path / "t.cdsf"
    path.write_bytes(b"NOPE" + b"\x00" * 20)
    with pytest.raises(TensorFormatError, match="magic"):
        read_tensor(path)
    write_tensor(np.arange(4, dtype=np.uint32), path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-2])
    with pytest.raises(TensorFormatError, match="payload"):
        read_tensor(path)
    path.write_bytes(b"CDSF" + struct.pack("<III", 9, 1, 1) + struct.pack("<Q", 0))
    with pytest.raises(TensorFormatError, match="version"):
        read_tensor(path)
    with pytest.raises(FileNotFoundError):
        read_tensor(tmp_path / "missing.cdsf")


def test_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    arr = rng.standard_normal((5, 3)).astype(np.float32)
    path = tmp_path / "rt.cdsf"
    write_tensor(arr, path)
    np.testing.assert_array_equal(read_tensor(path), arr)


def test_unknown_model():
    with pytest.raises(ModelError, match="unknown model"):
        build_model("vgg11", 3)
    with pytest.raises(ModelError, match="classes"):
        build_model("resnet18", 1)


def test_bad_arguments(image_tree, tmp_path):
    with pytest.raises(ValueError, match="batch-size"):
        extract(image_tree, "resnet18", tmp_path, batch_size=0)
    with pytest.raises(ValueError, match="limit"):
        extract(image_tree, "resnet18", tmp_path, limit=0)
    with pytest.raises(ValueError, match="image-size"):
        extract(image_tree, "resnet18", tmp_path, image_size=4)


def test_missing_source(tmp_path):
    with pytest.raises(SourceError, match="neither a directory"):
        open_source(str(tmp_path / "nope"), 32)
    with pytest.raises(SourceError):
        open_source(str(tmp_path), 32)  # exists but has no class folders


def test_named_dataset_absent(tmp_path):
    assert "cifar10" in DATASETS
    with pytest.raises(SourceError, match="cifar10"):
        open_source("cifar10", 32, data_root=tmp_path)


def test_unreadable_image(tmp_path):
    bad = tmp_path / "klass"
    bad.mkdir()
    (bad / "fake.png").write_text("not an image")
    (tmp_path / "other").mkdir()
    from PIL import Image
    Image.new("RGB", (9, 9)).save(tmp_path / "other" / "ok.png")
    with pytest.raises(SourceError, match="unreadable"):
        extract(tmp_path, "resnet18", tmp_path / "out", batch_size=4)


def test_cli_happy_path(image_tree, tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, [str(image_tree), "--out", str(tmp_path),
                               "--batch-size", "8", "--seed", "0"])
    assert res.exit_code == 0, res.output
    doc = json.loads(res.output)
    assert (doc["n"], doc["K"], doc["C"]) == (24, 512, 3)
    assert (tmp_path / "features.cdsf").is_file()


def test_cli_config_error(image_tree, tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, [str(image_tree), "--out", str(tmp_path),
                               "--batch-size", "0"])
    assert res.exit_code == 2


def test_cli_data_error(tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, [str(tmp_path / "missing"), "--out",
                               str(tmp_path / "out")])
    assert res.exit_code == 3
