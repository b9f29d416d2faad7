"""Backbone construction and penultimate-layer inference."""

from __future__ import annotations

import torch
from torchvision.models import resnet18

MODELS = ("resnet18",)
FEATURE_WIDTHS = {"resnet18": 512}


class ModelError(ValueError):
    """Unknown model id or unusable head configuration."""


def build_model(model_id: str, num_classes: int, seed: int = 0):
    """Construct an inference-ready classifier with seeded random weights.

    Pretrained checkpoints cannot be assumed downloadable, so the
    backbone is initialized from a fixed torch seed instead; that keeps
    the whole extraction deterministic across runs while preserving the
    shape contract of a real checkpoint.
    """
    if model_id not in MODELS:
        raise ModelError(f"unknown model {model_id!r}, choose from {MODELS}")
    if num_classes < 2:
        raise ModelError(f"need at least 2 classes, got {num_classes}")
    torch.manual_seed(seed)
    model = resnet18(weights=None, num_classes=num_classes)
    model.eval()
    return model


@torch.no_grad()
def forward_penultimate(model, batch):
    """Run one batch and return (features, probs) torch tensors.

    Replays the standard residual forward so the pooled activations can
    be captured before the final fully connected layer.
    """
    x = model.conv1(batch)
    x = model.bn1(x)
    x = model.relu(x)
    x = model.maxpool(x)
    x = model.layer1(x)
    x = model.layer2(x)
    x = model.layer3(x)
    x = model.layer4(x)
    x = model.avgpool(x)
    feats = torch.flatten(x, 1)
    probs = torch.softmax(model.fc(feats), dim=1)
    return feats, probs
