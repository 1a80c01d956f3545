"""
Keypoints 2D, derivadas temporales, normalizacion de pose y rasterizacion
de los mapas de condicionamiento (esqueleto + derivadas)
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from skimage.draw import line

from human_motion_transfer.exceptions import (
    ConfigError,
    KeypointParseError,
    KeypointSchemaError,
    NormalizationError,
)
from human_motion_transfer.utils.config import load_yaml

logger = logging.getLogger(__name__)

NUM_LIMB_GROUPS = 9
DERIVATIVES_PER_GROUP = 4  # (dx, dy, d2x, d2y)
NUM_DERIVATIVE_CHANNELS = NUM_LIMB_GROUPS * DERIVATIVES_PER_GROUP
DEFAULT_KEYPOINT_COUNT = 127
DEFAULT_CONFIDENCE_THRESHOLD = 0.05


@dataclass(frozen=True)
class KeypointFrame:
    """Keypoints (x, y) en pixeles de un frame, con bandera de validez"""

    points: np.ndarray
    valid: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if points.ndim != 2 or points.shape[1] != 2:
            raise KeypointSchemaError(f"points debe tener forma (K, 2), recibido {points.shape}")
        if valid.shape != (points.shape[0],):
            raise KeypointSchemaError(
                f"valid debe tener longitud {points.shape[0]}, recibido {valid.shape}"
            )
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "valid", valid)

    @property
    def count(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class DerivativeFrame:
    """Primera y segunda derivada temporal (diferencias hacia atras) por keypoint"""

    first: np.ndarray
    second: np.ndarray
    valid: np.ndarray
    frame_index: int = 0

    @property
    def count(self) -> int:
        return self.first.shape[0]


@dataclass(frozen=True)
class LimbMap:
    """Nueve grupos de extremidades, cada uno una lista de huesos (pares de indices)"""

    groups: Tuple[Tuple[str, Tuple[Tuple[int, int], ...]], ...]
    keypoint_count: int = DEFAULT_KEYPOINT_COUNT
    anchors: Dict[str, Tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.groups) != NUM_LIMB_GROUPS:
            raise ConfigError(
                f"El mapa de extremidades debe tener {NUM_LIMB_GROUPS} grupos, tiene {len(self.groups)}"
            )
        for name, bones in self.groups:
            for a, b in bones:
                if not (0 <= a < self.keypoint_count and 0 <= b < self.keypoint_count):
                    raise ConfigError(
                        f"Hueso ({a}, {b}) del grupo '{name}' fuera de rango para K={self.keypoint_count}"
                    )

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.groups]

    @classmethod
    def from_yaml(cls, path: Union[str, Path], keypoint_count: Optional[int] = None) -> "LimbMap":
        """Carga y valida el mapa de extremidades desde YAML"""
        raw = load_yaml(path)
        count = keypoint_count or int(raw.get("keypoint_count", DEFAULT_KEYPOINT_COUNT))
        groups = []
        for entry in raw.get("groups", []):
            bones = [tuple(int(i) for i in bone) for bone in entry.get("bones", [])]
            for chain in entry.get("chains", []):
                bones.extend(zip(chain[:-1], chain[1:]))
            bones = [(int(a), int(b)) for a, b in bones]
            groups.append((str(entry["name"]), tuple(bones)))
        anchors = {key: tuple(int(i) for i in idx) for key, idx in raw.get("anchors", {}).items()}
        return cls(groups=tuple(groups), keypoint_count=count, anchors=anchors)


@dataclass(frozen=True)
class PoseConditioning:
    """Esqueleto binario (9 x h x w) y derivadas rasterizadas (36 x h x w)"""

    skeleton: np.ndarray
    derivatives: np.ndarray

    def __post_init__(self):
        if self.skeleton.ndim != 3 or self.skeleton.shape[0] != NUM_LIMB_GROUPS:
            raise ConfigError(f"El esqueleto debe tener {NUM_LIMB_GROUPS} canales: {self.skeleton.shape}")
        if self.derivatives.shape != (NUM_DERIVATIVE_CHANNELS,) + self.skeleton.shape[1:]:
            raise ConfigError(
                f"Las derivadas deben tener forma ({NUM_DERIVATIVE_CHANNELS}, h, w): {self.derivatives.shape}"
            )

    @property
    def size(self) -> Tuple[int, int]:
        return tuple(self.skeleton.shape[1:])

    def as_array(self) -> np.ndarray:
        """Concatena esqueleto y derivadas en la entrada de 45 canales"""
        return np.concatenate(
            [self.skeleton.astype(np.float32), self.derivatives.astype(np.float32)], axis=0
        )


class PoseStats(BaseModel):
    """Estadisticas de una secuencia para la normalizacion de pose"""

    model_config = ConfigDict(frozen=True)

    ankle_y: float
    torso_height: float
    hip_x: float = Field(default=0.0)


def load_keypoints(
    path: Union[str, Path],
    count: int = DEFAULT_KEYPOINT_COUNT,
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> List[KeypointFrame]:
    """
    Lee el JSON de keypoints: {"frames": [{"frame_index": n, "people":
    [{"pose_keypoints_2d": [x0, y0, c0, x1, y1, c1, ...]}]}, ...]}.
    Solo se usa la primera persona; un frame sin personas queda todo invalido.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Archivo de keypoints no encontrado: {path}")

    with open(path, "r", encoding="utf-8") as file:
        try:
            raw = json.load(file)
        except json.JSONDecodeError as e:
            raise KeypointParseError(f"JSON invalido en {path}: {e}") from e

    records = raw.get("frames") if isinstance(raw, dict) else raw
    if not isinstance(records, list):
        raise KeypointParseError(f"{path}: se esperaba una lista 'frames'")

    frames = []
    for n, record in enumerate(records):
        try:
            people = record.get("people", [])
            frame_index = int(record.get("frame_index", n))
            flat = people[0]["pose_keypoints_2d"] if people else [0.0] * (3 * count)
            triples = np.asarray(flat, dtype=np.float64)
        except (AttributeError, KeyError, TypeError, ValueError, IndexError) as e:
            raise KeypointParseError(f"Registro malformado en el frame {n}: {e}") from e

        if triples.ndim != 1 or triples.size % 3 != 0:
            raise KeypointParseError(f"Registro malformado en el frame {n}: longitud {triples.size}")
        triples = triples.reshape(-1, 3)
        if triples.shape[0] != count:
            raise KeypointSchemaError(
                f"Frame {n}: se esperaban {count} keypoints, se recibieron {triples.shape[0]}"
            )
        frames.append(
            KeypointFrame(
                points=triples[:, :2],
                valid=triples[:, 2] >= confidence_threshold,
                frame_index=frame_index,
            )
        )

    logger.info(f"Keypoints cargados: {len(frames)} frames desde {path}")
    return frames


def save_keypoints(path: Union[str, Path], frames: Sequence[KeypointFrame]) -> None:
    """Guarda keypoints en el formato JSON documentado (confianza 1/0)"""
    records = []
    for frame in frames:
        triples = np.concatenate(
            [frame.points, frame.valid.astype(np.float64)[:, None]], axis=1
        )
        records.append(
            {
                "frame_index": int(frame.frame_index),
                "people": [{"pose_keypoints_2d": triples.ravel().tolist()}],
            }
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as file:
        json.dump({"frames": records}, file)


def temporal_derivatives(frames: Sequence[KeypointFrame]) -> List[DerivativeFrame]:
    """Diferencias hacia atras: k_n - k_{n-1} y k_n - 2 k_{n-1} + k_{n-2}"""
    derivatives = []
    for n, frame in enumerate(frames):
        first = np.zeros_like(frame.points)
        second = np.zeros_like(frame.points)
        valid = frame.valid.copy()

        if n >= 1:
            prev = frames[n - 1]
            valid &= prev.valid
            first = frame.points - prev.points
        if n >= 2:
            prev2 = frames[n - 2]
            valid &= prev2.valid
            second = frame.points - 2.0 * frames[n - 1].points + prev2.points

        first = np.where(valid[:, None], first, 0.0)
        second = np.where(valid[:, None], second, 0.0)
        derivatives.append(
            DerivativeFrame(first=first, second=second, valid=valid, frame_index=frame.frame_index)
        )
    return derivatives


def _median_of_valid(frames: Sequence[KeypointFrame], indices: Sequence[int], reducer) -> float:
    values = []
    for frame in frames:
        idx = [i for i in indices if frame.valid[i]]
        if idx:
            values.append(reducer(frame.points[idx]))
    return float(np.median(values)) if values else float("nan")


def compute_pose_stats(frames: Sequence[KeypointFrame], anchors: Dict[str, Sequence[int]]) -> PoseStats:
    """Mediana de la altura del tobillo, altura del torso y x de la cadera (ignora invalidos)"""
    ankles, hips, neck = anchors["ankles"], anchors["hips"], anchors["neck"]

    ankle_y = _median_of_valid(frames, ankles, lambda p: p[:, 1].max())
    hip_x = _median_of_valid(frames, hips, lambda p: p[:, 0].mean())

    heights = []
    for frame in frames:
        hip_idx = [i for i in hips if frame.valid[i]]
        neck_idx = [i for i in neck if frame.valid[i]]
        if hip_idx and neck_idx:
            heights.append(abs(frame.points[hip_idx, 1].mean() - frame.points[neck_idx, 1].mean()))
    torso_height = float(np.median(heights)) if heights else 0.0

    return PoseStats(ankle_y=ankle_y, torso_height=torso_height, hip_x=hip_x)


def normalize_poses(
    source: Sequence[KeypointFrame], source_stats: PoseStats, target_stats: PoseStats
) -> List[KeypointFrame]:
    """Escala global + traslacion que lleva la pose fuente al actor destino"""
    for name, stats in (("fuente", source_stats), ("destino", target_stats)):
        values = (stats.ankle_y, stats.torso_height, stats.hip_x)
        if not np.all(np.isfinite(values)):
            raise NormalizationError(
                f"Estadisticas no finitas en la secuencia {name}: {stats} "
                "(sin tobillos, caderas o cuello validos)"
            )
    if source_stats.torso_height <= 0 or target_stats.torso_height <= 0:
        raise NormalizationError(
            f"Estadisticas degeneradas: altura fuente {source_stats.torso_height}, "
            f"altura destino {target_stats.torso_height}"
        )
    if source_stats == target_stats:
        return list(source)

    scale = target_stats.torso_height / source_stats.torso_height
    normalized = []
    for frame in source:
        points = np.empty_like(frame.points)
        points[:, 0] = scale * (frame.points[:, 0] - source_stats.hip_x) + target_stats.hip_x
        points[:, 1] = scale * (frame.points[:, 1] - source_stats.ankle_y) + target_stats.ankle_y
        normalized.append(KeypointFrame(points=points, valid=frame.valid, frame_index=frame.frame_index))
    return normalized


def _bone_pixels(p0: np.ndarray, p1: np.ndarray, size: Tuple[int, int]):
    """Pixeles de la linea de Bresenham entre dos puntos, recortados al frame"""
    h, w = size
    if not (np.all(np.isfinite(p0)) and np.all(np.isfinite(p1))):
        empty = np.zeros(0, dtype=int)
        return empty, empty, np.zeros(0)
    # extremos acotados a un margen de un frame alrededor de la imagen
    low, high = np.array([-w, -h]), np.array([2 * w, 2 * h])
    q0, q1 = np.clip(p0, low, high), np.clip(p1, low, high)
    x0, y0 = np.rint(q0).astype(int)
    x1, y1 = np.rint(q1).astype(int)
    rr, cc = line(y0, x0, y1, x1)
    if np.array_equal(q0, p0) and np.array_equal(q1, p1):
        t = np.linspace(0.0, 1.0, rr.size) if rr.size > 1 else np.zeros(1)
    else:
        bone = np.asarray(p1, dtype=np.float64) - p0
        t = np.clip(((np.stack([cc, rr], axis=1) - p0) @ bone) / max(bone @ bone, 1e-12), 0.0, 1.0)
    inside = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    return rr[inside], cc[inside], t[inside]


def rasterize_skeleton(frame: KeypointFrame, limbs: LimbMap, size: Tuple[int, int]) -> np.ndarray:
    """Lineas binarias de 1 pixel por hueso, en el canal de su grupo"""
    h, w = size
    if h <= 0 or w <= 0:
        raise ConfigError(f"Tamano invalido: {size}")
    skeleton = np.zeros((NUM_LIMB_GROUPS, h, w), dtype=np.uint8)
    for g, (_, bones) in enumerate(limbs.groups):
        for a, b in bones:
            if not (frame.valid[a] and frame.valid[b]):
                continue
            rr, cc, _ = _bone_pixels(frame.points[a], frame.points[b], size)
            skeleton[g, rr, cc] = 1
    return skeleton


def rasterize_derivatives(
    frame: KeypointFrame, deriv: DerivativeFrame, limbs: LimbMap, size: Tuple[int, int]
) -> np.ndarray:
    """
    Interpola linealmente (dx, dy, d2x, d2y) a lo largo de cada hueso.
    Canal = grupo * 4 + (dx, dy, d2x, d2y); en solapes gana el ultimo hueso.
    """
    if frame.count != deriv.count:
        raise KeypointSchemaError(f"K distinto: frame {frame.count}, derivadas {deriv.count}")
    h, w = size
    maps = np.zeros((NUM_DERIVATIVE_CHANNELS, h, w), dtype=np.float32)
    values = np.concatenate([deriv.first, deriv.second], axis=1)  # (K, 4)

    for g, (_, bones) in enumerate(limbs.groups):
        for a, b in bones:
            if not (frame.valid[a] and frame.valid[b]):
                continue
            if not (deriv.valid[a] and deriv.valid[b]):
                continue
            rr, cc, t = _bone_pixels(frame.points[a], frame.points[b], size)
            interp = (1.0 - t)[:, None] * values[a] + t[:, None] * values[b]
            for k in range(DERIVATIVES_PER_GROUP):
                maps[g * DERIVATIVES_PER_GROUP + k, rr, cc] = interp[:, k]
    return maps


def build_conditioning(
    frames: Sequence[KeypointFrame], limbs: LimbMap, size: Tuple[int, int]
) -> List[PoseConditioning]:
    """Derivadas temporales + ambos rasterizadores, frame a frame"""
    derivatives = temporal_derivatives(frames)
    return [
        PoseConditioning(
            skeleton=rasterize_skeleton(frame, limbs, size),
            derivatives=rasterize_derivatives(frame, deriv, limbs, size),
        )
        for frame, deriv in zip(frames, derivatives)
    ]
