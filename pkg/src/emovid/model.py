"""Backbone + three heads, feature-level body/context fusion, segment consensus,
partial batch-norm freezing."""

import warnings
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from .taxonomy import N_LABELS


@dataclass(frozen=True)
class PredictionSet:
    """Per-instance outputs: 26 categorical scores, 3 continuous, projected feature."""

    categorical: np.ndarray
    continuous: np.ndarray
    projected: np.ndarray

    def __post_init__(self):
        for arr in (self.categorical, self.continuous, self.projected):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite prediction values")


class TinyBackbone(nn.Module):
    """Small 4-stage conv net (~100k params) for CPU desk-scale runs."""

    def __init__(self, in_channels=3, width=16):
        super().__init__()
        chans = [width, width * 2, width * 4, width * 4]
        layers = []
        prev = in_channels
        for c in chans:
            layers += [nn.Conv2d(prev, c, 3, padding=1),
                       nn.BatchNorm2d(c), nn.ReLU(inplace=True),
                       nn.MaxPool2d(2)]
            prev = c
        self.features = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.out_features = prev

    def forward(self, x):
        return self.pool(self.features(x)).flatten(1)


def make_backbone(name, in_channels):
    """Backbone registry; full-scale residual presets plug in here."""
    if name == "tiny":
        return TinyBackbone(in_channels=in_channels)
    if name in ("resnet50", "resnet101"):
        import torchvision.models as tvm
        net = getattr(tvm, name)(weights=None)
        if in_channels != 3:
            net.conv1 = nn.Conv2d(in_channels, 64, 7, stride=2, padding=3, bias=False)
        out = net.fc.in_features
        net.fc = nn.Identity()
        net.out_features = out
        return net
    raise ValueError(f"unknown backbone {name!r}")


class EmotionNet(nn.Module):
    """Feature extractor(s) + categorical / continuous / embedding heads.

    With a context backbone, body and context features are concatenated
    (body first) before the shared heads.
    """

    def __init__(self, backbone_b, backbone_c=None, emb_dim=300, n_cont=3):
        super().__init__()
        self.backbone_b = backbone_b
        self.backbone_c = backbone_c
        fused = backbone_b.out_features
        if backbone_c is not None:
            fused += backbone_c.out_features
        self.head_cat = nn.Linear(fused, N_LABELS)
        self.head_cont = nn.Linear(fused, n_cont)
        self.head_emb = nn.Linear(fused, emb_dim)
        self.partial_bn = False

    @property
    def has_context(self):
        return self.backbone_c is not None

    def forward(self, body, context=None):
        """body/context: (B, C, H, W) -> (categorical, continuous, projected)."""
        if self.has_context != (context is not None):
            raise ValueError("context input must match the network configuration")
        feat = self.backbone_b(body)
        if context is not None:
            feat = torch.cat([feat, self.backbone_c(context)], dim=1)
        return torch.sigmoid(self.head_cat(feat)), self.head_cont(feat), self.head_emb(feat)

    def train(self, mode=True):
        super().train(mode)
        if mode and self.partial_bn:
            self._freeze_bn_stats()
        return self

    def _bn_modules(self):
        out = []
        for backbone in (self.backbone_b, self.backbone_c):
            if backbone is None:
                continue
            out.append([m for m in backbone.modules()
                        if isinstance(m, nn.modules.batchnorm._BatchNorm)])
        return out

    def _freeze_bn_stats(self):
        # All norm layers except the first per backbone: running stats frozen,
        # affine parameters still trainable.
        for bns in self._bn_modules():
            for m in bns[1:]:
                m.eval()


def apply_partial_bn(net):
    """Enable partial batch-norm freezing on a network (in place)."""
    if not any(net._bn_modules()):
        warnings.warn("network has no batch-norm layers; partial BN is a no-op")
        return net
    net.partial_bn = True
    if net.training:
        net._freeze_bn_stats()
    return net


def _to_tensor(snippet):
    return torch.from_numpy(np.ascontiguousarray(snippet.data)).unsqueeze(0)


def forward_snippet(net, body, context=None):
    """Deterministic eval-mode forward of one snippet -> PredictionSet."""
    if net.has_context and context is None:
        raise ValueError("network expects a context snippet")
    if not net.has_context and context is not None:
        raise ValueError("body-only network given a context snippet")
    was_training = net.training
    net.eval()
    with torch.no_grad():
        cat, cont, emb = net(_to_tensor(body),
                             _to_tensor(context) if context is not None else None)
    if was_training:
        net.train()
    return PredictionSet(categorical=cat[0].numpy().astype(np.float64),
                         continuous=cont[0].numpy().astype(np.float64),
                         projected=emb[0].numpy().astype(np.float64))


def consensus(preds):
    """Segment consensus: elementwise mean of the per-segment predictions.

    Averaging applies to post-logistic categorical scores.
    """
    if not preds:
        raise ValueError("empty prediction list")
    return PredictionSet(
        categorical=np.mean([p.categorical for p in preds], axis=0),
        continuous=np.mean([p.continuous for p in preds], axis=0),
        projected=np.mean([p.projected for p in preds], axis=0))
