"""Penultimate-layer feature extraction to CDSF tensor files."""

from .cdsf import TensorFormatError, read_tensor, write_tensor
from .extract import ExtractionManifest, extract
from .model import FEATURE_WIDTHS, MODELS, ModelError, build_model, forward_penultimate
from .sources import DATASETS, SourceError, build_transform, open_source
