"""
Metricas de imagen: SSIM, distancia de Frechet (nucleo de FID) y distancia
perceptual sobre un extractor de features intercambiable
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F
from scipy.linalg import eigh
from scipy.signal import convolve2d

from human_motion_transfer.data.structure_field import rgb_to_luminance
from human_motion_transfer.exceptions import MetricError
from human_motion_transfer.models.losses import FeatureExtractor

logger = logging.getLogger(__name__)

FEATURE_EPS = 1e-10


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    coords = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(coords ** 2) / (2.0 * sigma ** 2))
    window = np.outer(g, g)
    return window / window.sum()


def ssim(
    a: np.ndarray,
    b: np.ndarray,
    window: int = 11,
    sigma: float = 1.5,
    k1: float = 0.01,
    k2: float = 0.03,
    dynamic_range: float = 1.0,
) -> float:
    """SSIM medio con ventana gaussiana (solo posiciones validas)"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise MetricError(f"Tamanos distintos: {a.shape} vs {b.shape}")
    if a.ndim != 2 or min(a.shape) < window:
        raise MetricError(f"Se requiere una imagen 2D de al menos {window}x{window}, recibido {a.shape}")

    w = gaussian_window(window, sigma)
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2

    def filt(x):
        return convolve2d(x, w, mode="valid")

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b

    numerator = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    denominator = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(numerator / denominator))


def ssim_rgb(a: np.ndarray, b: np.ndarray, **kwargs) -> float:
    """SSIM sobre la luminancia de dos imagenes RGB"""
    return ssim(rgb_to_luminance(a), rgb_to_luminance(b), **kwargs)


def _symmetric_sqrt(matrix: np.ndarray, clamp: float) -> Tuple[np.ndarray, np.ndarray]:
    values, vectors = eigh(matrix)
    if values.min(initial=0.0) < -clamp:
        raise MetricError(f"Matriz no semidefinida positiva (autovalor {values.min():.3e})")
    values = np.clip(values, 0.0, None)
    return (vectors * np.sqrt(values)) @ vectors.T, values


def frechet_distance(
    mu1: np.ndarray,
    sigma1: np.ndarray,
    mu2: np.ndarray,
    sigma2: np.ndarray,
    eigenvalue_clamp: float = 1e-8,
) -> float:
    """||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2)"""
    mu1, mu2 = np.atleast_1d(np.asarray(mu1, dtype=np.float64)), np.atleast_1d(np.asarray(mu2, dtype=np.float64))
    sigma1 = np.atleast_2d(np.asarray(sigma1, dtype=np.float64))
    sigma2 = np.atleast_2d(np.asarray(sigma2, dtype=np.float64))
    if mu1.shape != mu2.shape or sigma1.shape != sigma2.shape or sigma1.shape != (mu1.size, mu1.size):
        raise MetricError(f"Dimensiones incompatibles: mu {mu1.shape}/{mu2.shape}, sigma {sigma1.shape}/{sigma2.shape}")
    for name, s in (("sigma1", sigma1), ("sigma2", sigma2)):
        if not np.allclose(s, s.T, rtol=0.0, atol=1e-10):
            raise MetricError(f"{name} no es simetrica")

    sqrt1, _ = _symmetric_sqrt(sigma1, eigenvalue_clamp)
    middle = sqrt1 @ sigma2 @ sqrt1
    middle = (middle + middle.T) / 2.0
    _, values = _symmetric_sqrt(middle, eigenvalue_clamp)

    diff = mu1 - mu2
    distance = diff @ diff + np.trace(sigma1) + np.trace(sigma2) - 2.0 * np.sqrt(values).sum()
    return float(max(distance, 0.0))


def _as_batch(image: Union[np.ndarray, torch.Tensor], like: Optional[torch.nn.Module] = None) -> torch.Tensor:
    if isinstance(image, torch.Tensor):
        tensor = image if image.ndim == 4 else image.unsqueeze(0)
    else:
        array = np.asarray(image)
        values = array.astype(np.float32)
        if array.dtype == np.uint8:
            values /= 255.0
        tensor = torch.from_numpy(values.transpose(2, 0, 1)).unsqueeze(0)
    if like is not None:
        param = next(like.parameters(), None)
        if param is not None:
            tensor = tensor.to(param)
    return tensor


def _unit_normalize(feature: torch.Tensor) -> torch.Tensor:
    norm = torch.sqrt((feature ** 2).sum(dim=1, keepdim=True))
    return feature / (norm + FEATURE_EPS)


@torch.no_grad()
def perceptual_distance(a, b, phi: FeatureExtractor) -> float:
    """Suma por capa del promedio espacial de la distancia cuadratica entre features normalizadas"""
    a_t, b_t = _as_batch(a, phi), _as_batch(b, phi)
    if a_t.shape != b_t.shape:
        raise MetricError(f"Tamanos distintos: {tuple(a_t.shape)} vs {tuple(b_t.shape)}")
    total = 0.0
    for fa, fb in zip(phi(a_t), phi(b_t)):
        diff = (_unit_normalize(fa) - _unit_normalize(fb)) ** 2
        total += float(diff.sum(dim=1).mean())
    return total


@torch.no_grad()
def embed_images(images: Sequence, phi: FeatureExtractor) -> np.ndarray:
    """Vector por imagen: promedio espacial de cada capa de features, concatenado"""
    vectors = []
    for image in images:
        feats = phi(_as_batch(image, phi))
        pooled = [F.adaptive_avg_pool2d(f, 1).flatten(1) for f in feats]
        vectors.append(torch.cat(pooled, dim=1)[0].double().cpu().numpy())
    return np.stack(vectors)


def fid_from_embeddings(real: np.ndarray, generated: np.ndarray, eigenvalue_clamp: float = 1e-8) -> float:
    real, generated = np.asarray(real, dtype=np.float64), np.asarray(generated, dtype=np.float64)
    if real.shape[0] < 2 or generated.shape[0] < 2:
        raise MetricError("FID requiere al menos 2 muestras por coleccion")
    return frechet_distance(
        real.mean(axis=0),
        np.cov(real, rowvar=False),
        generated.mean(axis=0),
        np.cov(generated, rowvar=False),
        eigenvalue_clamp=eigenvalue_clamp,
    )


def _unit_range(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.dtype == np.uint8:
        return image.astype(np.float64) / 255.0
    return image.astype(np.float64)


def masked_l1(pred: np.ndarray, target: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    """L1 media en [0, 1] sobre los pixeles de la mascara (todos si no hay mascara)"""
    pred, target = _unit_range(pred), _unit_range(target)
    diff = np.abs(pred - target)
    if mask is None:
        return float(diff.mean())
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return 0.0
    return float(diff[mask].mean())
