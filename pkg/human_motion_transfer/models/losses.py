"""
Objetivos de entrenamiento: entropia cruzada de forma, L1 enmascarada de
estructura, L1 + perceptual de apariencia y refinamiento, y la suma ponderada
"""

import logging
from typing import Any, Dict, List, Optional, Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F
from pydantic import BaseModel, ConfigDict, Field

from human_motion_transfer.exceptions import ConfigError, NumericError

logger = logging.getLogger(__name__)

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
# relu1_1, relu2_1, relu3_1, relu4_1, relu5_1
VGG19_LAYER_INDICES = (1, 6, 11, 20, 29)


class LossWeights(BaseModel):
    model_config = ConfigDict(frozen=True, extra="ignore")

    lambda1: float = Field(default=0.5, ge=0)
    lambda2: float = Field(default=1.0, ge=0)
    lambda3: float = Field(default=1.0, ge=0)
    lambda4: float = Field(default=1.0, ge=0)
    lambda_r: float = Field(default=0.1, ge=0)
    lambda_p: float = Field(default=0.9, ge=0)


class FeatureExtractor(nn.Module):
    """phi: mapa congelado y diferenciable de RGB a una lista de features multi-escala"""

    descriptor: str = "feature-extractor"

    def freeze(self) -> "FeatureExtractor":
        for param in self.parameters():
            param.requires_grad_(False)
        return self.eval()

    def train(self, mode: bool = True) -> "FeatureExtractor":
        # siempre en modo evaluacion
        return super().train(False)


class RandomPyramidExtractor(FeatureExtractor):
    """Piramide convolucional de 3 escalas con pesos aleatorios de semilla fija"""

    def __init__(self, layers: Sequence[int] = (0, 1, 2), seed: int = 1234, widths: Sequence[int] = (8, 16, 32)):
        super().__init__()
        if not layers or any(not 0 <= i < len(widths) for i in layers):
            raise ConfigError(f"Capas invalidas para la piramide: {list(layers)}")
        self.layers = tuple(layers)
        self.descriptor = f"random-pyramid(seed={seed}, layers={list(self.layers)})"

        generator = torch.Generator().manual_seed(seed)
        stages = []
        in_channels = 3
        for width in widths:
            conv = nn.Conv2d(in_channels, width, kernel_size=3, padding=1, padding_mode="reflect")
            with torch.no_grad():
                bound = (6.0 / (in_channels * 9)) ** 0.5
                conv.weight.copy_(torch.empty_like(conv.weight).uniform_(-bound, bound, generator=generator))
                conv.bias.zero_()
            stages.append(conv)
            in_channels = width
        self.stages = nn.ModuleList(stages)
        self.freeze()

    def forward(self, x: torch.Tensor) -> List[torch.Tensor]:
        features = []
        for i, conv in enumerate(self.stages):
            if i > 0:
                x = F.avg_pool2d(x, kernel_size=2)
            x = F.relu(conv(x))
            if i in self.layers:
                features.append(x)
        return features


class VGG19Extractor(FeatureExtractor):
    """VGG19 preentrenada de torchvision (requiere descargar los pesos)"""

    def __init__(self, layers: Sequence[int] = (0, 1, 2)):
        super().__init__()
        try:
            from torchvision.models import VGG19_Weights, vgg19
        except ImportError as e:
            raise ConfigError("El extractor vgg19 requiere torchvision instalado") from e

        if any(not 0 <= i < len(VGG19_LAYER_INDICES) for i in layers):
            raise ConfigError(f"Capas invalidas para VGG19: {list(layers)}")
        self.taps = {VGG19_LAYER_INDICES[i] for i in layers}
        last = max(self.taps)
        self.features = nn.Sequential(*list(vgg19(weights=VGG19_Weights.DEFAULT).features)[: last + 1])
        self.register_buffer("mean", torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(IMAGENET_STD).view(1, 3, 1, 1))
        self.descriptor = f"vgg19(layers={sorted(self.taps)})"
        self.freeze()

    def forward(self, x: torch.Tensor) -> List[torch.Tensor]:
        x = (x - self.mean) / self.std
        features = []
        for index, layer in enumerate(self.features):
            x = layer(x)
            if index in self.taps:
                features.append(x)
        return features


def build_feature_extractor(config: Optional[Dict[str, Any]] = None) -> FeatureExtractor:
    """Selecciona phi segun la seccion 'losses' de la configuracion"""
    config = config or {}
    name = config.get("feature_extractor", "random_pyramid")
    layers = config.get("feature_layers", [0, 1, 2])
    if name == "random_pyramid":
        return RandomPyramidExtractor(layers=layers, seed=int(config.get("feature_seed", 1234)))
    if name == "vgg19":
        return VGG19Extractor(layers=layers)
    raise ConfigError(f"Extractor de features desconocido: {name}")


def _batched(x: torch.Tensor, ndim: int) -> torch.Tensor:
    return x.unsqueeze(0) if x.ndim == ndim - 1 else x


def masked_l1(pred: torch.Tensor, target: torch.Tensor, mask: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Media de |pred - target| sobre pixeles enmascarados y canales; mascara vacia -> 0"""
    diff = (pred - target).abs()
    if mask is None:
        return diff.mean()
    mask = mask.to(diff.dtype)
    count = mask.sum() * diff.shape[1]
    if count.item() == 0:
        return (diff * 0.0).sum()
    return (diff * mask).sum() / count


def shape_loss(logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Entropia cruzada por pixel (log-sum-exp estable), promediada"""
    logits = _batched(logits, 4)
    target = _batched(target, 3)
    if torch.isnan(logits).any():
        raise NumericError("Logits con NaN en shape_loss")
    return F.cross_entropy(logits, target.long())


def structure_loss(pred: torch.Tensor, target: torch.Tensor, garment: torch.Tensor) -> torch.Tensor:
    pred, target = _batched(pred, 4), _batched(target, 4)
    mask = _batched(garment, 3).unsqueeze(1)
    return masked_l1(pred, target, mask)


def _scale_mask(mask: torch.Tensor, size) -> torch.Tensor:
    if tuple(mask.shape[-2:]) == tuple(size):
        return (mask > 0).to(mask.dtype)
    return (F.interpolate(mask, size=size, mode="area") > 0).to(mask.dtype)


def appearance_loss(
    pred: torch.Tensor,
    target: torch.Tensor,
    fg: torch.Tensor,
    phi: FeatureExtractor,
    weights: LossWeights,
) -> torch.Tensor:
    """lambda_r * L1 enmascarada + lambda_p * suma por capa de L1 enmascarada de features"""
    pred, target = _batched(pred, 4), _batched(target, 4)
    mask = _batched(fg, 3).unsqueeze(1).to(pred.dtype)

    loss = weights.lambda_r * masked_l1(pred, target, mask)
    if weights.lambda_p > 0:
        perceptual = pred.new_zeros(())
        for feat_pred, feat_target in zip(phi(pred * mask), phi(target * mask)):
            perceptual = perceptual + masked_l1(feat_pred, feat_target, _scale_mask(mask, feat_pred.shape[-2:]))
        loss = loss + weights.lambda_p * perceptual
    return loss


def refinement_loss(pred: torch.Tensor, target: torch.Tensor, phi: FeatureExtractor, weights: LossWeights) -> torch.Tensor:
    """Igual que appearance_loss sobre todo el plano de imagen"""
    pred = _batched(pred, 4)
    full = pred.new_ones(pred.shape[0], *pred.shape[-2:])
    return appearance_loss(pred, target, full, phi, weights)


def total_loss(l_shp, l_str, l_app, l_ref, weights: LossWeights):
    return weights.lambda1 * l_shp + weights.lambda2 * l_str + weights.lambda3 * l_app + weights.lambda4 * l_ref
