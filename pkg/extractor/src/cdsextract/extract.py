"""End-to-end extraction: images to features/labels/probs CDSF files."""

from __future__ import annotations

import dataclasses
import json
import os
from pathlib import Path

import numpy as np
from torch.utils.data import DataLoader, Subset

from .cdsf import write_tensor
from .model import build_model, forward_penultimate
from .sources import SourceError, open_source


@dataclasses.dataclass
class ExtractionManifest:
    """What one extraction run produced and where it was written."""

    model: str
    source: str
    n: int
    K: int
    C: int
    seed: int
    files: dict

    def to_json(self) -> str:
        doc = dataclasses.asdict(self)
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def extract(source, model_id: str, out_dir, batch_size: int = 32, *,
            seed: int = 0, image_size: int = 32, limit=None,
            data_root="data") -> ExtractionManifest:
    """Extract features/labels/probs from `source` into `out_dir`.

    Writes features.cdsf (f32 n x K), labels.cdsf (u32 n), probs.cdsf
    (f32 n x C, softmax rows) plus manifest.json. Deterministic for a
    fixed seed, source contents, and batch size: the dataset order is
    the sorted folder walk and the weights come from the seed alone.
    """
    if batch_size < 1:
        raise ValueError(f"batch-size must be >= 1, got {batch_size}")
    if image_size < 8:
        raise ValueError(f"image-size must be >= 8, got {image_size}")
    if limit is not None and limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")

    dataset, C = open_source(source, image_size, data_root)
    if limit is not None and limit < len(dataset):
        dataset = Subset(dataset, range(limit))
    model = build_model(model_id, C, seed)
    loader = DataLoader(dataset, batch_size=batch_size, shuffle=False,
                        num_workers=0)

    feat_chunks, label_chunks, prob_chunks = [], [], []
    try:
        for images, targets in loader:
            feats, probs = forward_penultimate(model, images)
            feat_chunks.append(feats.numpy())
            prob_chunks.append(probs.numpy())
            label_chunks.append(targets.numpy())
    except OSError as exc:
        raise SourceError(f"unreadable image under {source}: {exc}") from exc

    features = np.concatenate(feat_chunks).astype(np.float32)
    probs = np.concatenate(prob_chunks).astype(np.float32)
    labels = np.concatenate(label_chunks).astype(np.uint32)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "features": str(out / "features.cdsf"),
        "labels": str(out / "labels.cdsf"),
        "probs": str(out / "probs.cdsf"),
    }
    write_tensor(features, files["features"])
    write_tensor(labels, files["labels"])
    write_tensor(probs, files["probs"])

    manifest = ExtractionManifest(
        model=model_id, source=str(source), n=int(features.shape[0]),
        K=int(features.shape[1]), C=int(C), seed=int(seed), files=files,
    )
    _atomic_write_text(out / "manifest.json", manifest.to_json())
    return manifest
