"""
Intercambio de secuencias como directorios de PNG numerados

    <dir>/frames/frame_00000.png      RGB uint8
    <dir>/labels/label_00000.png      PNG indexado (paleta ATR)
    <dir>/keypoints.json              formato de keypoints documentado
    <dir>/background.png              placa de fondo (opcional)
    <dir>/structure/structure_00000.npy   campo (2, h, w) float32 (lo escribe prepare)
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from PIL import Image

from human_motion_transfer.data.parsing import LabelSet, ingest_label_map, save_label_map
from human_motion_transfer.data.pose_conditioning import KeypointFrame, load_keypoints, save_keypoints
from human_motion_transfer.data.structure_field import StructureField, load_structure, save_structure
from human_motion_transfer.exceptions import DatasetError

logger = logging.getLogger(__name__)

FRAMES_DIR = "frames"
LABELS_DIR = "labels"
STRUCTURE_DIR = "structure"
KEYPOINTS_FILE = "keypoints.json"
BACKGROUND_FILE = "background.png"


@dataclass
class SequenceData:
    frames: np.ndarray  # (N, h, w, 3) uint8
    keypoints: List[KeypointFrame]
    labels: Optional[np.ndarray] = None  # (N, h, w)
    background: Optional[np.ndarray] = None  # (h, w, 3) uint8
    structure: Optional[List[StructureField]] = None

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def size(self):
        return tuple(self.frames.shape[1:3])


def frame_name(prefix: str, index: int, suffix: str = ".png") -> str:
    return f"{prefix}_{index:05d}{suffix}"


def save_image(path: Union[str, Path], image: np.ndarray) -> None:
    """Guarda RGB uint8 o float en [0, 1] como PNG"""
    image = np.asarray(image)
    if image.dtype != np.uint8:
        image = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(image).save(path)


def load_image(path: Union[str, Path]) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Imagen no encontrada: {path}")
    with Image.open(path) as image:
        return np.array(image.convert("RGB"), dtype=np.uint8)


def load_image_dir(directory: Union[str, Path]) -> np.ndarray:
    """Todas las PNG de un directorio en orden lexicografico, (N, h, w, 3) uint8"""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Directorio no encontrado: {directory}")
    paths = sorted(directory.glob("*.png"))
    if not paths:
        raise DatasetError(f"No hay imagenes PNG en {directory}")
    images = [load_image(p) for p in paths]
    if len({img.shape for img in images}) != 1:
        raise DatasetError(f"Imagenes de tamanos distintos en {directory}")
    return np.stack(images)


def save_image_dir(directory: Union[str, Path], images: Sequence[np.ndarray], prefix: str = "frame") -> List[Path]:
    directory = Path(directory)
    paths = []
    for n, image in enumerate(images):
        path = directory / frame_name(prefix, n)
        save_image(path, image)
        paths.append(path)
    return paths


def write_sequence(
    directory: Union[str, Path],
    frames: np.ndarray,
    keypoints: Sequence[KeypointFrame],
    labels: Optional[np.ndarray] = None,
    background: Optional[np.ndarray] = None,
    structure: Optional[Sequence[StructureField]] = None,
    label_set: Optional[LabelSet] = None,
) -> Path:
    directory = Path(directory)
    if len(keypoints) != len(frames):
        raise DatasetError(f"{len(frames)} frames pero {len(keypoints)} registros de keypoints")

    save_image_dir(directory / FRAMES_DIR, frames, prefix="frame")
    save_keypoints(directory / KEYPOINTS_FILE, keypoints)
    if labels is not None:
        for n, label in enumerate(labels):
            save_label_map(directory / LABELS_DIR / frame_name("label", n), label, label_set)
    if background is not None:
        save_image(directory / BACKGROUND_FILE, background)
    if structure is not None:
        write_structure(directory, structure)

    logger.info(f"Secuencia de {len(frames)} frames escrita en {directory}")
    return directory


def write_structure(directory: Union[str, Path], structure: Sequence[StructureField]) -> None:
    for n, field in enumerate(structure):
        save_structure(Path(directory) / STRUCTURE_DIR / frame_name("structure", n, ".npy"), field)


def read_sequence(
    directory: Union[str, Path],
    label_set: Optional[LabelSet] = None,
    keypoint_count: Optional[int] = None,
    confidence_threshold: float = 0.05,
) -> SequenceData:
    """Lee un directorio de secuencia; etiquetas, fondo y estructura son opcionales"""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Directorio de secuencia no encontrado: {directory}")

    frames = load_image_dir(directory / FRAMES_DIR)
    kwargs = {"confidence_threshold": confidence_threshold}
    if keypoint_count is not None:
        kwargs["count"] = keypoint_count
    keypoints = load_keypoints(directory / KEYPOINTS_FILE, **kwargs)
    if len(keypoints) != len(frames):
        raise DatasetError(f"{directory}: {len(frames)} frames pero {len(keypoints)} registros de keypoints")

    size = frames.shape[1:3]
    labels = None
    label_paths = sorted((directory / LABELS_DIR).glob("*.png"))
    if label_paths:
        if len(label_paths) != len(frames):
            raise DatasetError(f"{directory}: {len(label_paths)} mapas de etiquetas para {len(frames)} frames")
        label_set = label_set or LabelSet()
        labels = np.stack([ingest_label_map(p, label_set, expected_size=size) for p in label_paths])

    background = None
    if (directory / BACKGROUND_FILE).exists():
        background = load_image(directory / BACKGROUND_FILE)

    structure = None
    structure_paths = sorted((directory / STRUCTURE_DIR).glob("*.npy"))
    if structure_paths:
        if len(structure_paths) != len(frames):
            raise DatasetError(f"{directory}: estructura incompleta ({len(structure_paths)}/{len(frames)})")
        structure = [load_structure(p) for p in structure_paths]

    return SequenceData(
        frames=frames, keypoints=keypoints, labels=labels, background=background, structure=structure
    )
