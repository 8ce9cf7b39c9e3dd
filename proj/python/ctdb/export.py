"""Embedding export: encode benchmark images and quality prompts into a CTDE file.

Usage: python -m ctdb.export --manifest <path> --model <id> [--patches] --out <ctde>

Encoders are looked up in ENCODERS by model id. Register one with
``register_encoder``; no pretrained encoder ships with this package.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from . import _core

WINDOW_HU = (-1000.0, 400.0)


class Encoder(Protocol):
    def encode_images(self, images: list[np.ndarray]) -> tuple[np.ndarray, list[np.ndarray] | None]:
        """Global embeddings (n, d) and optional per-image patch tokens (t, d)."""

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        """Text embeddings (n, d)."""


ENCODERS: dict[str, Callable[[], Encoder]] = {}


class ModelLoadError(RuntimeError):
    pass


def register_encoder(model_id: str, factory: Callable[[], Encoder]) -> None:
    ENCODERS[model_id] = factory


@dataclass
class ExportJob:
    manifest: Path
    model: str
    include_patches: bool
    out: Path


def preprocess(hu: np.ndarray) -> np.ndarray:
    """Window to [-1000, 400] HU and scale to [0, 1]."""
    lo, hi = WINDOW_HU
    return (np.clip(hu, lo, hi) - lo) / (hi - lo)


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0.0:
        raise ValueError("embedding has zero or non-finite norm")
    return (v / n).astype(np.float32)


def build_entries(job: ExportJob, encoder: Encoder) -> list[tuple[str, np.ndarray]]:
    manifest = json.loads(job.manifest.read_text())
    root = job.manifest.parent
    images: list[tuple[str, Path]] = [(r["id"], root / r["path"]) for r in manifest["references"]]
    images += [(s["sample_id"], root / s["degraded_path"]) for s in manifest["samples"]]

    entries: list[tuple[str, np.ndarray]] = []
    for name, path in images:
        try:
            hu, _ = _core.read_image(str(path))
        except RuntimeError as err:
            raise RuntimeError(f"unreadable image {path}: {err}") from err
        glob, patches = encoder.encode_images([preprocess(hu)])
        entries.append((f"img:{name}", _unit(glob[0])))
        if job.include_patches and patches is not None:
            for i, token in enumerate(patches[0]):
                entries.append((f"patch:{name}:{i}", _unit(token)))

    for tag, prompts in (("H", _core.HIGH_QUALITY_PROMPTS), ("L", _core.LOW_QUALITY_PROMPTS)):
        for i, z in enumerate(encoder.encode_texts(list(prompts))):
            entries.append((f"prompt:{tag}:{i}", _unit(z)))

    dim = entries[0][1].size
    lo, hi = WINDOW_HU
    entries.append((f"meta:model={job.model}", np.zeros(dim, np.float32)))
    entries.append((f"meta:window={lo:g},{hi:g}", np.zeros(dim, np.float32)))
    entries.append(("meta:patches=pre-projection", np.zeros(dim, np.float32)))
    return entries


def export(job: ExportJob) -> int:
    if job.model not in ENCODERS:
        raise ModelLoadError(f"no encoder registered for model id {job.model!r}")
    try:
        encoder = ENCODERS[job.model]()
    except Exception as err:
        raise ModelLoadError(f"failed to load {job.model!r}: {err}") from err
    entries = build_entries(job, encoder)
    data = _core.encode_ctde([(name, v.tolist()) for name, v in entries])
    job.out.parent.mkdir(parents=True, exist_ok=True)
    job.out.write_bytes(data)
    return len(entries)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ctdb.export")
    parser.add_argument("--manifest", type=Path, required=True)
    parser.add_argument("--model", required=True)
    parser.add_argument("--patches", action="store_true")
    parser.add_argument("--out", type=Path, required=True)
    args = parser.parse_args(argv)
    try:
        n = export(ExportJob(args.manifest, args.model, args.patches, args.out))
    except (ModelLoadError, ValueError, KeyError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (RuntimeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"wrote {n} entries to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
