"""Input sources: class-per-subfolder image trees and local CIFAR copies."""

from __future__ import annotations

from pathlib import Path

from torchvision import datasets, transforms

DATASETS = ("cifar10", "cifar100")

# ImageNet statistics; inference only, so no augmentation transforms.
_MEAN = [0.485, 0.456, 0.406]
_STD = [0.229, 0.224, 0.225]


class SourceError(ValueError):
    """Source missing, empty, or containing unreadable images."""


def build_transform(image_size: int):
    return transforms.Compose([
        transforms.Resize((image_size, image_size)),
        transforms.ToTensor(),
        transforms.Normalize(mean=_MEAN, std=_STD),
    ])


def open_source(source, image_size: int, data_root="data"):
    """Resolve `source` to (dataset, class count).

    A directory is read as one subdirectory per class (labels follow
    sorted subdirectory names); otherwise the name must be one of the
    bundled dataset ids, already present under `data_root` since the
    build environment has no network access.
    """
    tfm = build_transform(image_size)
    path = Path(source)
    if path.is_dir():
        try:
            ds = datasets.ImageFolder(str(path), transform=tfm)
        except FileNotFoundError as exc:
            raise SourceError(f"{source}: {exc}") from exc
        return ds, len(ds.classes)
    name = str(source).lower()
    if name in DATASETS:
        cls = datasets.CIFAR10 if name == "cifar10" else datasets.CIFAR100
        try:
            ds = cls(root=str(data_root), train=False, transform=tfm,
                     download=False)
        except RuntimeError as exc:
            raise SourceError(f"{name}: {exc}") from exc
        return ds, len(ds.classes)
    raise SourceError(
        f"source {source!r} is neither a directory nor one of {DATASETS}"
    )
