"""Frozen EfficientNet-B0 feature backbone.

The classification top is dropped: we keep the convolutional stages, take
their final output, and pool spatially (global average pooling). The
channel width of the exported vectors is discovered from the loaded model
at runtime, never hardcoded.

Weight sources:
  "imagenet"  published pretrained weights (downloaded/cached by torchvision)
  "none"      seeded random initialization (offline smoke tests only)
  <path>      a local state_dict checkpoint
"""

import torch
from torchvision.models import EfficientNet_B0_Weights, efficientnet_b0


class Backbone:
    def __init__(self, model: torch.nn.Module):
        model.eval()
        for p in model.parameters():
            p.requires_grad_(False)
        self.features = model.features
        self.channels = None  # discovered on first forward

    @torch.no_grad()
    def pooled(self, batch: torch.Tensor) -> torch.Tensor:
        """B x 3 x H x W -> B x d feature matrix (final conv stage + GAP)."""
        maps = self.features(batch)
        if self.channels is None:
            self.channels = int(maps.shape[1])
        return maps.mean(dim=(2, 3))


def load_backbone(weights: str = "imagenet") -> Backbone:
    if weights == "imagenet":
        model = efficientnet_b0(weights=EfficientNet_B0_Weights.IMAGENET1K_V1)
    elif weights == "none":
        torch.manual_seed(0)  # deterministic random init for offline runs
        model = efficientnet_b0(weights=None)
    else:
        model = efficientnet_b0(weights=None)
        state = torch.load(weights, map_location="cpu", weights_only=True)
        model.load_state_dict(state)
    return Backbone(model)
