"""
Estructura de gradiente de la prenda: banco de 32 filtros de Gabor,
orientacion/confianza por pixel, suavizado y visualizacion HSV
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from matplotlib.colors import hsv_to_rgb
from PIL import Image
from pydantic import BaseModel, ConfigDict, Field
from scipy.ndimage import gaussian_filter
from scipy.signal import fftconvolve

from human_motion_transfer.exceptions import ConfigError, DimensionError, NumericError

logger = logging.getLogger(__name__)

NUM_ORIENTATIONS = 32
LUMINANCE_WEIGHTS = (0.299, 0.587, 0.114)


class GaborParams(BaseModel):
    """Parametros del banco (en pixeles, definidos a 512x512)"""

    model_config = ConfigDict(frozen=True, extra="ignore")

    num_orientations: int = NUM_ORIENTATIONS
    kernel_size: int = Field(default=17, ge=3)
    sigma: float = Field(default=3.0, gt=0)
    wavelength: float = Field(default=6.0, gt=0)
    reference_resolution: int = Field(default=512, gt=0)
    scale_with_resolution: bool = False
    smoothing_sigma: float = Field(default=1.0, ge=0)
    epsilon: float = Field(default=1e-6, gt=0)
    n_jobs: int = 1

    def scaled_to(self, resolution: Tuple[int, int]) -> "GaborParams":
        """Escala tamano, sigma y longitud de onda proporcionalmente a la resolucion"""
        if not self.scale_with_resolution:
            return self
        factor = min(resolution) / self.reference_resolution
        size = max(3, int(round(self.kernel_size * factor)))
        if size % 2 == 0:
            size += 1
        return self.model_copy(
            update={
                "kernel_size": size,
                "sigma": self.sigma * factor,
                "wavelength": self.wavelength * factor,
            }
        )


@dataclass(frozen=True)
class GaborBank:
    kernels: np.ndarray  # (32, k, k) float64
    angles: np.ndarray  # (32,)
    params: GaborParams


@dataclass(frozen=True)
class StructureField:
    """Orientacion en [0, pi) y confianza en [0, 1], ambas h x w float32"""

    orientation: np.ndarray
    confidence: np.ndarray

    def __post_init__(self):
        if self.orientation.shape != self.confidence.shape or self.orientation.ndim != 2:
            raise DimensionError(
                f"Orientacion {self.orientation.shape} y confianza {self.confidence.shape} no coinciden"
            )

    def as_array(self) -> np.ndarray:
        return np.stack([self.orientation, self.confidence]).astype(np.float32)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "StructureField":
        array = np.asarray(array, dtype=np.float32)
        if array.ndim != 3 or array.shape[0] != 2:
            raise DimensionError(f"Se esperaba un arreglo (2, h, w), recibido {array.shape}")
        return cls(orientation=array[0].copy(), confidence=array[1].copy())


def build_gabor_bank(params: Optional[GaborParams] = None) -> GaborBank:
    """32 nucleos de Gabor con portadora coseno, media cero y norma L2 unitaria"""
    params = params or GaborParams()
    size = params.kernel_size
    if size < 3 or size % 2 == 0:
        raise ConfigError(f"El tamano del nucleo debe ser impar y >= 3, recibido {size}")

    half = size // 2
    y, x = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    angles = np.arange(params.num_orientations) * np.pi / params.num_orientations

    kernels = np.empty((params.num_orientations, size, size), dtype=np.float64)
    for i, theta in enumerate(angles):
        x_theta = x * np.cos(theta) + y * np.sin(theta)
        envelope = np.exp(-(x ** 2 + y ** 2) / (2.0 * params.sigma ** 2))
        kernel = envelope * np.cos(2.0 * np.pi * x_theta / params.wavelength)
        kernel -= kernel.mean()
        kernel /= np.linalg.norm(kernel)
        kernels[i] = kernel

    return GaborBank(kernels=kernels, angles=angles, params=params)


def rgb_to_luminance(rgb: np.ndarray) -> np.ndarray:
    """Luminancia Rec. 601 en [0, 1] a partir de RGB (uint8 o float)"""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[-1] != 3:
        raise DimensionError(f"Se esperaba una imagen (h, w, 3), recibido {rgb.shape}")
    values = rgb.astype(np.float64)
    if rgb.dtype == np.uint8:
        values /= 255.0
    return values @ np.asarray(LUMINANCE_WEIGHTS)


def filter_responses(image: np.ndarray, bank: GaborBank) -> np.ndarray:
    """Respuestas (32, h, w) con borde reflejado"""
    half = bank.params.kernel_size // 2
    padded = np.pad(image, half, mode="reflect")
    return np.stack([fftconvolve(padded, kernel, mode="valid") for kernel in bank.kernels])


def extract_structure(image: np.ndarray, bank: GaborBank) -> StructureField:
    """Angulo y amplitud de la respuesta maxima; confianza normalizada por el maximo de la imagen"""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise DimensionError(f"Se esperaba una imagen en escala de grises, recibido {image.shape}")
    if np.isnan(image).any():
        raise NumericError("Imagen con NaN en extract_structure")

    magnitude = np.abs(filter_responses(image, bank))
    best = np.argmax(magnitude, axis=0)
    raw_confidence = np.take_along_axis(magnitude, best[None], axis=0)[0]

    peak = raw_confidence.max() if raw_confidence.size else 0.0
    if peak < bank.params.epsilon:
        zeros = np.zeros(image.shape, dtype=np.float32)
        return StructureField(orientation=zeros, confidence=zeros.copy())

    orientation = bank.angles[best].astype(np.float32)
    confidence = (raw_confidence / peak).astype(np.float32)
    return StructureField(orientation=orientation, confidence=np.clip(confidence, 0.0, 1.0))


def _wrap_orientation(theta: np.ndarray) -> np.ndarray:
    theta = np.mod(theta, np.pi).astype(np.float32)
    theta[theta >= np.float32(np.pi)] = 0.0
    return theta


def smooth_orientation(field: StructureField, sigma: float) -> StructureField:
    """Filtro gaussiano ponderado por confianza en la representacion de angulo doble"""
    if sigma < 0:
        raise ConfigError(f"sigma debe ser >= 0, recibido {sigma}")
    if sigma == 0:
        return field

    doubled = 2.0 * field.orientation.astype(np.float64)
    weight = field.confidence.astype(np.float64)
    cos_part = gaussian_filter(np.cos(doubled) * weight, sigma=sigma, mode="reflect")
    sin_part = gaussian_filter(np.sin(doubled) * weight, sigma=sigma, mode="reflect")

    smoothed = np.arctan2(sin_part, cos_part) / 2.0
    # sin soporte de confianza en la vecindad: se conserva el angulo original
    empty = np.hypot(cos_part, sin_part) < 1e-12
    smoothed = np.where(empty, field.orientation, smoothed)
    return StructureField(orientation=_wrap_orientation(smoothed), confidence=field.confidence)


def _extract_frame(image: np.ndarray, bank: GaborBank, smoothing_sigma: float) -> StructureField:
    if image.ndim == 3:
        image = rgb_to_luminance(image)
    return smooth_orientation(extract_structure(image, bank), smoothing_sigma)


def extract_structure_sequence(
    frames: Sequence[np.ndarray],
    bank: GaborBank,
    smoothing_sigma: float = 0.0,
    n_jobs: int = 1,
) -> List[StructureField]:
    """Extraccion + suavizado de una secuencia (en orden) con joblib"""
    logger.info(f"Extrayendo estructura de {len(frames)} frames (n_jobs={n_jobs})")
    return Parallel(n_jobs=n_jobs)(
        delayed(_extract_frame)(np.asarray(frame), bank, smoothing_sigma) for frame in frames
    )


def visualize_structure(field: StructureField) -> np.ndarray:
    """RGB float en [0, 1]: tono = orientacion / pi, saturacion = confianza, valor = 1"""
    hsv = np.stack(
        [
            np.clip(field.orientation / np.pi, 0.0, 1.0),
            np.clip(field.confidence, 0.0, 1.0),
            np.ones_like(field.confidence),
        ],
        axis=-1,
    )
    return hsv_to_rgb(hsv)


def save_structure_visualization(path: Union[str, Path], field: StructureField) -> None:
    rgb = np.round(visualize_structure(field) * 255.0).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(rgb).save(path)


def save_structure(path: Union[str, Path], field: StructureField) -> None:
    """Persistencia .npy: cabecera con forma + datos float32 (2, h, w)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, field.as_array())


def load_structure(path: Union[str, Path]) -> StructureField:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Campo de estructura no encontrado: {path}")
    return StructureField.from_array(np.load(path))
