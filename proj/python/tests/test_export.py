import numpy as np
import pytest

import ctdb as cdb
from ctdb import export


class HashEncoder:
    """Deterministic test encoder: a fixed random projection of downsampled pixels."""

    dim = 16

    def __init__(self):
        self.rng = np.random.default_rng(0)
        self.proj = self.rng.normal(size=(self.dim, 16 * 16))

    def _embed(self, img):
        h, w = img.shape
        small = img[: h - h % 16, : w - w % 16].reshape(16, h // 16, 16, w // 16).mean(axis=(1, 3))
        return self.proj @ small.ravel() + 1e-3

    def encode_images(self, images):
        glob = np.stack([self._embed(x) for x in images])
        patches = [np.stack([self._embed(np.roll(x, k, axis=0)) for k in range(2)]) for x in images]
        return glob, patches

    def encode_texts(self, texts):
        return np.stack([np.frombuffer(t.encode()[: self.dim].ljust(self.dim, b"."), np.uint8).astype(float) for t in texts])


@pytest.fixture
def exported(dataset, tmp_path):
    root, _ = dataset
    export.register_encoder("test-hash", HashEncoder)
    out = tmp_path / "emb.ctde"
    assert export.main(["--manifest", str(root / "manifest.json"), "--model", "test-hash", "--patches", "--out", str(out)]) == 0
    return dict(cdb.decode_ctde(out.read_bytes()))


def test_export_round_trip(exported):
    prompts_h = [k for k in exported if k.startswith("prompt:H:")]
    prompts_l = [k for k in exported if k.startswith("prompt:L:")]
    assert (len(prompts_h), len(prompts_l)) == (3, 5)
    for name, v in exported.items():
        if not name.startswith("meta:"):
            assert abs(np.linalg.norm(np.asarray(v, np.float64)) - 1.0) < 1e-5
    z = exported["img:ref_0000"]
    assert cdb.drift(z, z) == 0.0
    assert any(k.startswith("patch:") for k in exported)
    assert "meta:model=test-hash" in exported


def test_export_is_deterministic(dataset, tmp_path):
    root, _ = dataset
    export.register_encoder("test-hash", HashEncoder)
    a, b = tmp_path / "a.ctde", tmp_path / "b.ctde"
    for out in (a, b):
        export.main(["--manifest", str(root / "manifest.json"), "--model", "test-hash", "--out", str(out)])
    assert a.read_bytes() == b.read_bytes()


def test_unknown_model_is_a_load_failure(dataset, tmp_path, capsys):
    root, _ = dataset
    code = export.main(["--manifest", str(root / "manifest.json"), "--model", "missing", "--out", str(tmp_path / "x.ctde")])
    assert code == 1
    assert "no encoder registered" in capsys.readouterr().err


def test_ctde_rejects_duplicates():
    with pytest.raises(ValueError):
        cdb.encode_ctde([("img:a", [1.0, 0.0]), ("img:a", [0.0, 1.0])])
