import json

import jsonschema
import numpy as np

import ctdb as cdb


def test_metadata_validates_with_jsonschema(dataset):
    root, n = dataset
    schema = json.loads(cdb.metadata_schema())
    manifest = json.loads((root / "manifest.json").read_text())
    assert len(manifest["samples"]) == n == 80
    for s in manifest["samples"]:
        text = (root / s["metadata_path"]).read_text()
        meta = json.loads(text)
        jsonschema.validate(meta, schema)
        assert cdb.validate_metadata(text) == []
        assert meta["severity"] == max(c["level"] for c in meta["components"])


def test_spectral_descriptor_matches_metadata(dataset):
    root, _ = dataset
    manifest = json.loads((root / "manifest.json").read_text())
    s = manifest["samples"][0]
    meta = json.loads((root / s["metadata_path"]).read_text())
    hu, _ = cdb.read_image(str(root / s["degraded_path"]))
    d = cdb.spectral_descriptor(hu)
    assert len(d["hex"]) == 136
    assert np.isclose(sum(d["radial"]), 1.0)
    stored = np.frombuffer(bytes.fromhex(meta["spectral_descriptor"]), "<f4")
    assert np.allclose(stored, d["radial"] + d["angular"] + [d["hf_ratio"]], atol=1e-3)


def test_image_round_trip(tmp_path, phantom):
    hu, spacing = phantom
    cdb.write_image(str(tmp_path / "x.ctdi"), hu, spacing)
    back, back_spacing = cdb.read_image(str(tmp_path / "x.ctdi"))
    assert back_spacing == spacing
    assert np.abs(back - hu).max() <= 0.5
