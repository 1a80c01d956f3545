"""
Mapas de segmentacion (etiquetas ATR), argmax de logits y mascaras
indicadoras de prenda y de primer plano
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image
from pydantic import BaseModel, ConfigDict, model_validator

from human_motion_transfer.exceptions import DimensionError, LabelError, NumericError
from human_motion_transfer.utils.config import load_yaml, validate_section

logger = logging.getLogger(__name__)

NUM_ATR_LABELS = 18

ATR_NAMES = [
    "Background", "Hat", "Hair", "Sunglasses", "Upper-clothes", "Skirt", "Pants",
    "Dress", "Belt", "Left-shoe", "Right-shoe", "Face", "Left-leg", "Right-leg",
    "Left-arm", "Right-arm", "Bag", "Scarf",
]

# Paleta indexada (la misma del parser SCHP)
PALETTE = [
    (0, 0, 0), (128, 0, 0), (0, 128, 0), (128, 128, 0),
    (0, 0, 128), (128, 0, 128), (0, 128, 128), (128, 128, 128),
    (64, 0, 0), (192, 0, 0), (64, 128, 0), (192, 128, 0),
    (64, 0, 128), (192, 0, 128), (64, 128, 128), (192, 128, 128),
    (0, 64, 0), (128, 64, 0), (0, 192, 0), (128, 192, 0),
    (0, 64, 128),
]

# Piel y extremidades: nunca cuentan como prenda
_SKIN_LABELS = {2, 11, 12, 13, 14, 15}

ArrayOrTensor = Union[np.ndarray, torch.Tensor]


class LabelSet(BaseModel):
    """Nombres de las j etiquetas, subconjunto de prendas C e indice de fondo"""

    model_config = ConfigDict(frozen=True)

    names: List[str] = list(ATR_NAMES)
    garment_labels: List[int] = [4, 5, 6, 7, 8, 17]
    background_index: int = 0

    @model_validator(mode="after")
    def _check_indices(self) -> "LabelSet":
        j = len(self.names)
        if j != NUM_ATR_LABELS:
            raise ValueError(f"Se esperaban {NUM_ATR_LABELS} etiquetas, hay {j}")
        if not 0 <= self.background_index < j:
            raise ValueError(f"background_index fuera de rango: {self.background_index}")
        for idx in self.garment_labels:
            if not 0 <= idx < j:
                raise ValueError(f"Etiqueta de prenda fuera de rango: {idx}")
            if idx == self.background_index or idx in _SKIN_LABELS:
                raise ValueError(f"La etiqueta {idx} ({self.names[idx]}) no puede ser prenda")
        return self

    @property
    def count(self) -> int:
        return len(self.names)

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "LabelSet":
        return validate_section(cls, load_yaml(path))


def ingest_label_map(
    path: Union[str, Path], labels: LabelSet, expected_size: Optional[Tuple[int, int]] = None
) -> np.ndarray:
    """Lee un PNG indexado como grilla entera h x w de etiquetas"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Mapa de etiquetas no encontrado: {path}")

    with Image.open(path) as image:
        if image.mode not in ("P", "L"):
            raise LabelError(f"{path}: se esperaba un PNG indexado, modo {image.mode}")
        grid = np.array(image, dtype=np.int64)

    if expected_size is not None and tuple(grid.shape) != tuple(expected_size):
        raise DimensionError(f"{path}: tamano {grid.shape}, se esperaba {tuple(expected_size)}")
    if grid.size and grid.max() >= labels.count:
        raise LabelError(f"{path}: indice {int(grid.max())} fuera de rango para j={labels.count}")
    return grid


def save_label_map(path: Union[str, Path], label_map: np.ndarray, labels: Optional[LabelSet] = None) -> None:
    """Guarda la grilla como PNG de 8 bits con paleta"""
    j = labels.count if labels is not None else NUM_ATR_LABELS
    label_map = np.asarray(label_map)
    if label_map.size and (label_map.min() < 0 or label_map.max() >= j):
        raise LabelError(f"Etiquetas fuera de [0, {j})")

    image = Image.fromarray(label_map.astype(np.uint8))  # modo L; putpalette lo pasa a P
    flat = [channel for color in PALETTE for channel in color]
    image.putpalette(flat + [0] * (768 - len(flat)))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image.save(path)


def colorize_label_map(label_map: np.ndarray) -> np.ndarray:
    """Imagen RGB uint8 con los colores de la paleta"""
    colors = np.asarray(PALETTE, dtype=np.uint8)
    return colors[np.asarray(label_map, dtype=np.int64)]


def argmax_labels(logits: ArrayOrTensor) -> ArrayOrTensor:
    """
    Indice del canal maximo por pixel; en empates gana el indice menor.
    Acepta (j, h, w) o (B, j, h, w), en numpy o torch.
    """
    if isinstance(logits, torch.Tensor):
        if torch.isnan(logits).any():
            raise NumericError("Logits con NaN en argmax_labels")
        return torch.argmax(logits, dim=-3)

    logits = np.asarray(logits)
    if np.isnan(logits).any():
        raise NumericError("Logits con NaN en argmax_labels")
    return np.argmax(logits, axis=-3)


def garment_mask(label_map: ArrayOrTensor, labels: LabelSet) -> ArrayOrTensor:
    """chi_C: 1 donde la etiqueta pertenece al conjunto de prendas"""
    if isinstance(label_map, torch.Tensor):
        garments = torch.tensor(labels.garment_labels, device=label_map.device)
        return torch.isin(label_map, garments)
    return np.isin(label_map, labels.garment_labels).astype(np.uint8)


def foreground_mask(label_map: ArrayOrTensor, labels: LabelSet) -> ArrayOrTensor:
    """chi_B: 0 solo en el fondo"""
    if isinstance(label_map, torch.Tensor):
        return label_map != labels.background_index
    return (np.asarray(label_map) != labels.background_index).astype(np.uint8)


def one_hot_labels(label_map: ArrayOrTensor, num_labels: int = NUM_ATR_LABELS) -> torch.Tensor:
    """Codificacion one-hot float, canales en la dimension -3"""
    tensor = torch.as_tensor(np.asarray(label_map) if isinstance(label_map, np.ndarray) else label_map)
    encoded = F.one_hot(tensor.long(), num_classes=num_labels)
    return encoded.movedim(-1, -3).float()
