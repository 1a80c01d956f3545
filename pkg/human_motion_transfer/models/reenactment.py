"""
Recreacion entre actores (poses fuente -> apariencia destino) con arranque
iterativo del primer frame, y edicion de material (intercambio de forma y
estructura, escala de arrugas)
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from human_motion_transfer.data.parsing import LabelSet, colorize_label_map
from human_motion_transfer.data.pose_conditioning import (
    KeypointFrame,
    LimbMap,
    PoseConditioning,
    PoseStats,
    build_conditioning,
    normalize_poses,
)
from human_motion_transfer.data.structure_field import StructureField, visualize_structure
from human_motion_transfer.exceptions import EditError
from human_motion_transfer.models.generators import (
    CascadeModels,
    CascadeState,
    cascade_step,
    shape_forward,
    structure_forward,
)
from human_motion_transfer.utils.io import frame_name, save_image

logger = logging.getLogger(__name__)


@dataclass
class BootstrapResult:
    state: CascadeState
    iterations: int
    converged: bool


@dataclass
class ReenactmentResult:
    frames: np.ndarray  # (N, h, w, 3) uint8
    shapes: Optional[np.ndarray]  # (N, h, w) etiquetas, None en la variante P
    structures: Optional[List[StructureField]]
    bootstrap: BootstrapResult

    def __len__(self) -> int:
        return len(self.frames)


def _mean_abs(a: torch.Tensor, b: torch.Tensor) -> float:
    return float((a - b).abs().mean())


@torch.no_grad()
def bootstrap_first_frame(
    models: CascadeModels,
    pose_0: torch.Tensor,
    max_iters: int = 30,
    tol: float = 1e-3,
) -> BootstrapResult:
    """
    Desde el estado frio (todo cero) hace una pasada inicial sin contar y luego
    itera solo las etapas recurrentes sobre la pose inicial, realimentando sus
    salidas, hasta que ambas realimentaciones cambien menos que tol
    """
    state = models.cold_state(pose_0.shape[0], tuple(pose_0.shape[-2:]))
    if not (models.config.uses_shape and models.config.recurrent):
        return BootstrapResult(state=state, iterations=0, converged=True)

    def recurrent_pass(current: CascadeState) -> CascadeState:
        logits = shape_forward(models["shape"], pose_0, current)
        structure = current.prev_structure
        if models.config.uses_structure:
            shape = torch.argmax(logits, dim=1)
            structure = structure_forward(models["structure"], pose_0, shape, current, models.num_labels)
        return CascadeState(logits, structure)

    state = recurrent_pass(state)
    delta = float("inf")
    iterations = 0
    for iterations in range(1, max_iters + 1):
        new_state = recurrent_pass(state)
        delta = max(
            _mean_abs(new_state.prev_shape_logits, state.prev_shape_logits),
            _mean_abs(new_state.prev_structure, state.prev_structure),
        )
        state = new_state
        if delta < tol:
            logger.info(f"Arranque convergio en {iterations} iteraciones (delta={delta:.2e})")
            return BootstrapResult(state=state, iterations=iterations, converged=True)

    logger.warning(f"Arranque sin convergencia tras {iterations} iteraciones (delta={delta:.2e})")
    return BootstrapResult(state=state, iterations=iterations, converged=False)


def scale_wrinkles(structure: StructureField, factor: float) -> StructureField:
    """Multiplica la confianza por factor y la recorta a [0, 1]; la orientacion no cambia"""
    if factor < 0:
        raise EditError(f"El factor de arrugas debe ser >= 0, recibido {factor}")
    confidence = np.clip(structure.confidence * np.float32(factor), 0.0, 1.0).astype(np.float32)
    return StructureField(orientation=structure.orientation, confidence=confidence)


def wrinkle_transform(factor: float) -> Callable[[torch.Tensor], torch.Tensor]:
    """Version tensorial de scale_wrinkles para la cascada (B, 2, h, w)"""
    if factor < 0:
        raise EditError(f"El factor de arrugas debe ser >= 0, recibido {factor}")

    def transform(structure: torch.Tensor) -> torch.Tensor:
        confidence = (structure[:, 1:2] * factor).clamp(0.0, 1.0)
        return torch.cat([structure[:, :1], confidence], dim=1)

    return transform


def resample_stream(stream: Sequence, length: int, name: str = "override") -> List:
    """Remuestreo por indice mas cercano si las longitudes difieren en <= 1"""
    if len(stream) == length:
        return list(stream)
    if abs(len(stream) - length) > 1 or len(stream) == 0:
        raise EditError(f"El stream '{name}' tiene {len(stream)} frames, la secuencia {length}")
    scale = len(stream) / length
    return [stream[min(int(round(i * scale)), len(stream) - 1)] for i in range(length)]


def _to_image(tensor: torch.Tensor) -> np.ndarray:
    array = tensor[0].detach().clamp(0.0, 1.0).permute(1, 2, 0).cpu().numpy()
    return np.round(array * 255.0).astype(np.uint8)


def _background_tensor(background: np.ndarray, like: torch.Tensor) -> torch.Tensor:
    background = np.asarray(background)
    values = background.astype(np.float32)
    if background.dtype == np.uint8:
        values /= 255.0
    return torch.from_numpy(values.transpose(2, 0, 1)).unsqueeze(0).to(like)


def render_panel(pose: PoseConditioning, shape: Optional[np.ndarray], structure: Optional[StructureField], frame: np.ndarray) -> np.ndarray:
    """Panel horizontal: pose | forma | estructura | resultado"""
    h, w = frame.shape[:2]
    skeleton = np.repeat((pose.skeleton.max(axis=0) * 255).astype(np.uint8)[..., None], 3, axis=-1)
    blank = np.zeros((h, w, 3), dtype=np.uint8)
    shape_img = colorize_label_map(shape) if shape is not None else blank
    structure_img = (
        np.round(visualize_structure(structure) * 255.0).astype(np.uint8) if structure is not None else blank
    )
    return np.concatenate([skeleton, shape_img, structure_img, frame], axis=1)


@torch.no_grad()
def run_cascade(
    models: CascadeModels,
    conditioning: Sequence[PoseConditioning],
    background: np.ndarray,
    labels: LabelSet,
    shape_overrides: Optional[Sequence[np.ndarray]] = None,
    structure_overrides: Optional[Sequence[StructureField]] = None,
    wrinkle_factor: Optional[float] = None,
    max_iters: int = 30,
    tol: float = 1e-3,
    panels_dir: Optional[Union[str, Path]] = None,
) -> ReenactmentResult:
    """Arranque del frame 0 y luego cascade_step secuencial"""
    models.eval()
    param = next(models.parameters())
    n = len(conditioning)
    if shape_overrides is not None:
        shape_overrides = resample_stream(shape_overrides, n, "shape")
    if structure_overrides is not None:
        structure_overrides = resample_stream(structure_overrides, n, "structure")
    transform = wrinkle_transform(wrinkle_factor) if wrinkle_factor is not None else None

    frames, shapes, structures = [], [], []
    boot = BootstrapResult(state=None, iterations=0, converged=True)
    state = None
    bg = None

    for i, pose in enumerate(conditioning):
        pose_t = torch.from_numpy(pose.as_array()).unsqueeze(0).to(param)
        if i == 0:
            bg = _background_tensor(background, pose_t)
            if tuple(bg.shape[-2:]) != tuple(pose_t.shape[-2:]):
                raise EditError(f"Fondo {tuple(bg.shape[-2:])} y pose {tuple(pose_t.shape[-2:])} de distinto tamano")
            boot = bootstrap_first_frame(models, pose_t, max_iters=max_iters, tol=tol)
            state = boot.state

        shape_override = structure_override = None
        if shape_overrides is not None:
            shape_override = torch.as_tensor(np.asarray(shape_overrides[i]), device=param.device).long().unsqueeze(0)
            if tuple(shape_override.shape[-2:]) != tuple(pose_t.shape[-2:]):
                raise EditError(f"Override de forma con tamano {tuple(shape_override.shape[-2:])} en el frame {i}")
        if structure_overrides is not None:
            structure_override = torch.from_numpy(structure_overrides[i].as_array()).unsqueeze(0).to(param)
            if tuple(structure_override.shape[-2:]) != tuple(pose_t.shape[-2:]):
                raise EditError(f"Override de estructura con tamano {tuple(structure_override.shape[-2:])} en el frame {i}")

        out = cascade_step(
            models, pose_t, bg, state, labels,
            shape_override=shape_override,
            structure_override=structure_override,
            structure_transform=transform,
        )
        state = out.state

        image = _to_image(out.frame)
        shape = out.shape[0].cpu().numpy().astype(np.uint8) if out.shape is not None else None
        structure = (
            StructureField.from_array(out.structure[0].cpu().numpy()) if out.structure is not None else None
        )
        frames.append(image)
        shapes.append(shape)
        structures.append(structure)

        if panels_dir is not None:
            save_image(Path(panels_dir) / frame_name("panel", i), render_panel(pose, shape, structure, image))

    return ReenactmentResult(
        frames=np.stack(frames) if frames else np.zeros((0, 0, 0, 3), dtype=np.uint8),
        shapes=np.stack(shapes) if shapes and shapes[0] is not None else None,
        structures=structures if structures and structures[0] is not None else None,
        bootstrap=boot,
    )


def reenact_sequence(
    models: CascadeModels,
    source_keypoints: Sequence[KeypointFrame],
    source_stats: PoseStats,
    target_stats: PoseStats,
    background: np.ndarray,
    labels: LabelSet,
    limbs: LimbMap,
    wrinkle_factor: Optional[float] = None,
    max_iters: int = 30,
    tol: float = 1e-3,
    panels_dir: Optional[Union[str, Path]] = None,
) -> ReenactmentResult:
    """Normaliza las poses fuente al actor destino y ejecuta la cascada frame a frame"""
    size: Tuple[int, int] = tuple(np.asarray(background).shape[:2])
    normalized = normalize_poses(source_keypoints, source_stats, target_stats)
    conditioning = build_conditioning(normalized, limbs, size)
    logger.info(f"Recreando {len(conditioning)} frames con la variante {models.variant}")
    return run_cascade(
        models, conditioning, background, labels,
        wrinkle_factor=wrinkle_factor, max_iters=max_iters, tol=tol, panels_dir=panels_dir,
    )


def swap_conditioning(
    models: CascadeModels,
    pose_stream: Sequence[PoseConditioning],
    background: np.ndarray,
    labels: LabelSet,
    override_shape: Optional[Sequence[np.ndarray]] = None,
    override_structure: Optional[Sequence[StructureField]] = None,
    wrinkle_factor: Optional[float] = None,
    max_iters: int = 30,
    tol: float = 1e-3,
) -> ReenactmentResult:
    """Reemplaza la forma y/o estructura predichas por streams externos antes de la apariencia"""
    if override_shape is not None and not models.config.uses_shape:
        raise EditError(f"La variante {models.variant} no usa forma; no se puede intercambiar")
    if override_structure is not None and not models.config.uses_structure:
        raise EditError(f"La variante {models.variant} no usa estructura; no se puede intercambiar")
    return run_cascade(
        models, pose_stream, background, labels,
        shape_overrides=override_shape,
        structure_overrides=override_structure,
        wrinkle_factor=wrinkle_factor,
        max_iters=max_iters,
        tol=tol,
    )
