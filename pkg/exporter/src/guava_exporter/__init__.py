"""Frozen EfficientNet-B0 deep-feature exporter.

Feeds the guavacade classifier pipeline: reads an image manifest, runs the
pretrained backbone (classification top removed, weights frozen), pools the
final convolutional maps by global average pooling, and writes the vectors
as an FVEC feature file.
"""

from .backbone import Backbone, load_backbone
from .export import ExportError, ExportJob, export_deep_features
from .fvec import write_fvec
from .images import load_and_preprocess, read_manifest, resize_bilinear

__version__ = "0.1.0"
