import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import joblib
import numpy as np
import torch
from tqdm import tqdm

from human_motion_transfer.data.parsing import LabelSet
from human_motion_transfer.data.pose_conditioning import KeypointFrame, LimbMap, build_conditioning
from human_motion_transfer.data.structure_field import (
    GaborBank,
    GaborParams,
    build_gabor_bank,
    extract_structure_sequence,
)
from human_motion_transfer.exceptions import DatasetError
from human_motion_transfer.utils.config import get_cache_dir, load_config, resolve_path
from human_motion_transfer.utils.io import read_sequence, write_structure

logger = logging.getLogger(__name__)

CACHE_VERSION = 1


@dataclass
class TrainingSample:
    """Un frame de entrenamiento; canales primero, float32 en [0, 1] para RGB"""

    frame: np.ndarray  # (3, h, w)
    pose: np.ndarray  # (45, h, w)
    gt_shape: np.ndarray  # (h, w) int64
    gt_structure: np.ndarray  # (2, h, w)
    background: np.ndarray  # (3, h, w)

    def to_tensors(self, device: Union[str, torch.device] = "cpu", dtype: torch.dtype = torch.float32) -> Dict[str, torch.Tensor]:
        """Tensores con dimension de lote 1"""
        return {
            "frame": torch.from_numpy(self.frame).to(device, dtype).unsqueeze(0),
            "pose": torch.from_numpy(self.pose).to(device, dtype).unsqueeze(0),
            "gt_shape": torch.from_numpy(self.gt_shape).to(device).long().unsqueeze(0),
            "gt_structure": torch.from_numpy(self.gt_structure).to(device, dtype).unsqueeze(0),
            "background": torch.from_numpy(self.background).to(device, dtype).unsqueeze(0),
        }


def _to_chw(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    values = image.astype(np.float32)
    if image.dtype == np.uint8:
        values /= 255.0
    return np.ascontiguousarray(values.transpose(2, 0, 1))


def prepare_dataset(
    video_frames: np.ndarray,
    keypoints: Sequence[KeypointFrame],
    label_maps: np.ndarray,
    background: np.ndarray,
    bank: GaborBank,
    limbs: LimbMap,
    smoothing_sigma: float = 0.0,
    n_jobs: int = 1,
    structure: Optional[Sequence] = None,
) -> List[TrainingSample]:
    """Combina frames, poses, etiquetas y estructura extraida en muestras ordenadas"""
    n = len(video_frames)
    if len(keypoints) != n or len(label_maps) != n:
        raise DatasetError(
            f"Longitudes distintas: {n} frames, {len(keypoints)} keypoints, {len(label_maps)} etiquetas"
        )
    if n == 0:
        raise DatasetError("La secuencia esta vacia")
    size = tuple(video_frames.shape[1:3])
    if tuple(label_maps.shape[1:]) != size or tuple(np.asarray(background).shape[:2]) != size:
        raise DatasetError(f"Tamanos inconsistentes: frames {size}, etiquetas {label_maps.shape[1:]}")
    counts = {frame.count for frame in keypoints}
    if len(counts) != 1:
        raise DatasetError(f"Numero de keypoints inconsistente entre frames: {sorted(counts)}")

    if structure is None:
        structure = extract_structure_sequence(video_frames, bank, smoothing_sigma, n_jobs)
    conditioning = build_conditioning(keypoints, limbs, size)
    background_chw = _to_chw(background)

    samples = []
    for i in range(n):
        samples.append(
            TrainingSample(
                frame=_to_chw(video_frames[i]),
                pose=conditioning[i].as_array(),
                gt_shape=np.asarray(label_maps[i], dtype=np.int64),
                gt_structure=structure[i].as_array(),
                background=background_chw,
            )
        )
    return samples


class DataPreprocessor:
    """
    Clase para preparar secuencias de entrenamiento (estructura + condicionamiento)
    con cache en disco
    """

    def __init__(self, config_path: Optional[str] = None, config: Optional[Dict] = None):
        """Inicializa el preprocesador con configuracion"""
        self.config = config if config is not None else load_config(config_path)
        data_cfg = self.config.get("data", {})
        self.limbs = LimbMap.from_yaml(
            data_cfg.get("limb_map_path", "configs/limb_map.yaml"),
            keypoint_count=data_cfg.get("keypoint_count"),
        )
        self.labels = LabelSet.from_yaml(data_cfg.get("label_set_path", "configs/atr_labels.yaml"))
        self.confidence_threshold = float(data_cfg.get("confidence_threshold", 0.05))
        self.gabor_params = GaborParams.model_validate(self.config.get("structure", {}))
        self.cache_dir = get_cache_dir(self.config)
        self.last_from_cache = False

    def cache_key(self, sequence_dir: Path) -> str:
        """Hash de los archivos de la secuencia y de los parametros que afectan las muestras"""
        files = sorted(
            p for p in sequence_dir.rglob("*") if p.is_file() and p.parent.name != "structure"
        )
        fingerprint = [(str(p.relative_to(sequence_dir)), p.stat().st_size, p.stat().st_mtime_ns) for p in files]
        return joblib.hash(
            (CACHE_VERSION, fingerprint, self.gabor_params.model_dump(), self.limbs.groups, self.confidence_threshold)
        )

    def prepare(self, sequence_dir: Union[str, Path], force: bool = False) -> Tuple[List[TrainingSample], Path]:
        """Pipeline completo: lectura, extraccion de estructura, condicionamiento y cache"""
        sequence_dir = resolve_path(sequence_dir)
        cache_path = self.cache_dir / f"samples_{self.cache_key(sequence_dir)}.joblib"

        if cache_path.exists() and not force:
            logger.info(f"Muestras cargadas desde cache: {cache_path}")
            self.last_from_cache = True
            return joblib.load(cache_path), cache_path

        self.last_from_cache = False
        sequence = read_sequence(
            sequence_dir,
            label_set=self.labels,
            keypoint_count=self.limbs.keypoint_count,
            confidence_threshold=self.confidence_threshold,
        )
        if sequence.labels is None:
            raise DatasetError(f"{sequence_dir}: faltan los mapas de etiquetas (labels/)")
        if sequence.background is None:
            raise DatasetError(f"{sequence_dir}: falta la placa de fondo (background.png)")

        params = self.gabor_params.scaled_to(sequence.size)
        bank = build_gabor_bank(params)
        structure = []
        for start in tqdm(range(0, len(sequence), 16), desc="Estructura", disable=None):
            chunk = sequence.frames[start:start + 16]
            structure.extend(
                extract_structure_sequence(chunk, bank, params.smoothing_sigma, params.n_jobs)
            )
        write_structure(sequence_dir, structure)

        samples = prepare_dataset(
            sequence.frames,
            sequence.keypoints,
            sequence.labels,
            sequence.background,
            bank,
            self.limbs,
            structure=structure,
        )

        cache_path.parent.mkdir(parents=True, exist_ok=True)
        joblib.dump(samples, cache_path)
        logger.info(f"Dataset preparado: {len(samples)} muestras, cache en {cache_path}")
        return samples, cache_path
