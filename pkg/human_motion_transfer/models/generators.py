"""
Cascada de cuatro generadores (forma, estructura, apariencia, refinamiento),
composicion con el fondo y paso de cascada con realimentacion recurrente
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Literal, Optional, Tuple, Union

import numpy as np
import torch
import torch.nn as nn
from pydantic import BaseModel, ConfigDict, Field

from human_motion_transfer.data.parsing import LabelSet, argmax_labels, foreground_mask, one_hot_labels
from human_motion_transfer.data.pose_conditioning import NUM_DERIVATIVE_CHANNELS, NUM_LIMB_GROUPS
from human_motion_transfer.data.structure_field import GaborParams
from human_motion_transfer.exceptions import ConfigError, ShapeError

logger = logging.getLogger(__name__)

POSE_CHANNELS = NUM_LIMB_GROUPS + NUM_DERIVATIVE_CHANNELS  # 45
STRUCTURE_CHANNELS = 2
RGB_CHANNELS = 3
ORIENTATION_SCALE = np.pi * (1.0 - 1e-6)
CHECKPOINT_FORMAT_VERSION = 1

Head = Literal["logits", "structure", "rgb"]
Variant = Literal["P", "PS", "PSS", "PSS-R"]
VARIANTS = ("P", "PS", "PSS", "PSS-R")


class GeneratorConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="ignore")

    input_channels: int = Field(gt=0)
    output_channels: int = Field(gt=0)
    base_width: int = Field(default=16, gt=0)
    num_residual_blocks: int = Field(default=4, gt=0)
    downsampling_steps: int = Field(default=2, gt=0)
    head: Head = "logits"
    zero_init_head: bool = False


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.ReflectionPad2d(1),
            nn.Conv2d(channels, channels, kernel_size=3),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
            nn.ReflectionPad2d(1),
            nn.Conv2d(channels, channels, kernel_size=3),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.block(x)


class Generator(nn.Module):
    """
    Generador local estilo pix2pixHD: codificador con pasos stride 2,
    bloques residuales y decodificador espejado con una cabeza por tipo de salida
    """

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        width = config.base_width

        layers = [
            nn.ReflectionPad2d(3),
            nn.Conv2d(config.input_channels, width, kernel_size=7),
            nn.InstanceNorm2d(width),
            nn.ReLU(inplace=True),
        ]
        for i in range(config.downsampling_steps):
            mult = 2 ** i
            layers += [
                nn.Conv2d(width * mult, width * mult * 2, kernel_size=3, stride=2, padding=1),
                nn.InstanceNorm2d(width * mult * 2),
                nn.ReLU(inplace=True),
            ]

        bottleneck = width * 2 ** config.downsampling_steps
        layers += [ResidualBlock(bottleneck) for _ in range(config.num_residual_blocks)]

        for i in range(config.downsampling_steps, 0, -1):
            mult = 2 ** i
            layers += [
                nn.ConvTranspose2d(
                    width * mult, width * mult // 2, kernel_size=3, stride=2, padding=1, output_padding=1
                ),
                nn.InstanceNorm2d(width * mult // 2),
                nn.ReLU(inplace=True),
            ]

        self.body = nn.Sequential(*layers)
        self.final = nn.Sequential(nn.ReflectionPad2d(3), nn.Conv2d(width, config.output_channels, kernel_size=7))

        if config.zero_init_head:
            nn.init.zeros_(self.final[1].weight)
            nn.init.zeros_(self.final[1].bias)

    def check_input(self, x: torch.Tensor) -> None:
        if x.ndim != 4 or x.shape[1] != self.config.input_channels:
            raise ShapeError(
                f"Entrada con forma {tuple(x.shape)}, se esperaban {self.config.input_channels} canales"
            )
        factor = 2 ** self.config.downsampling_steps
        if x.shape[2] % factor or x.shape[3] % factor:
            raise ShapeError(f"El tamano {tuple(x.shape[2:])} debe ser divisible por {factor}")

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        self.check_input(x)
        out = self.final(self.body(x))
        if self.config.head == "structure":
            orientation = ORIENTATION_SCALE * torch.sigmoid(out[:, :1])
            confidence = torch.sigmoid(out[:, 1:2])
            return torch.cat([orientation, confidence], dim=1)
        if self.config.head == "rgb":
            return torch.sigmoid(out)
        return out


def make_generator(config: GeneratorConfig) -> Generator:
    return Generator(config)


@dataclass
class CascadeState:
    """Salidas del frame anterior: logits de forma (B, j, h, w) y estructura (B, 2, h, w)"""

    prev_shape_logits: torch.Tensor
    prev_structure: torch.Tensor

    @classmethod
    def cold(
        cls,
        batch: int,
        num_labels: int,
        size: Tuple[int, int],
        device: Union[str, torch.device] = "cpu",
        dtype: torch.dtype = torch.float32,
    ) -> "CascadeState":
        h, w = size
        return cls(
            prev_shape_logits=torch.zeros(batch, num_labels, h, w, device=device, dtype=dtype),
            prev_structure=torch.zeros(batch, STRUCTURE_CHANNELS, h, w, device=device, dtype=dtype),
        )

    def detach(self) -> "CascadeState":
        return CascadeState(self.prev_shape_logits.detach(), self.prev_structure.detach())

    def zeros_like(self) -> "CascadeState":
        return CascadeState(torch.zeros_like(self.prev_shape_logits), torch.zeros_like(self.prev_structure))


def _check_sizes(*tensors: torch.Tensor) -> None:
    sizes = {tuple(t.shape[-2:]) for t in tensors}
    if len(sizes) != 1:
        raise ShapeError(f"Tamanos espaciales inconsistentes: {sorted(sizes)}")


def shape_forward(gen: Generator, pose: torch.Tensor, state: CascadeState) -> torch.Tensor:
    _check_sizes(pose, state.prev_shape_logits)
    return gen(torch.cat([pose, state.prev_shape_logits], dim=1))


def structure_forward(
    gen: Generator, pose: torch.Tensor, shape: torch.Tensor, state: CascadeState, num_labels: int
) -> torch.Tensor:
    """Entrada [pose(45), forma one-hot(j), estructura previa(2)]"""
    _check_sizes(pose, shape, state.prev_structure)
    return gen(torch.cat([pose, one_hot_labels(shape, num_labels).to(pose), state.prev_structure], dim=1))


def appearance_forward(
    gen: Generator,
    pose: torch.Tensor,
    shape: Optional[torch.Tensor] = None,
    structure: Optional[torch.Tensor] = None,
    num_labels: int = 18,
) -> torch.Tensor:
    """No recurrente; las entradas ausentes corresponden a las variantes P y PS"""
    inputs = [pose]
    if shape is not None:
        _check_sizes(pose, shape)
        inputs.append(one_hot_labels(shape, num_labels).to(pose))
    if structure is not None:
        _check_sizes(pose, structure)
        inputs.append(structure)
    return gen(torch.cat(inputs, dim=1))


def composite_background(
    foreground: Union[np.ndarray, torch.Tensor],
    shape: Union[np.ndarray, torch.Tensor],
    background: Union[np.ndarray, torch.Tensor],
    labels: LabelSet,
):
    """Primer plano donde chi_B = 1, fondo en el resto (canales en -3)"""
    if foreground.shape != background.shape or tuple(foreground.shape[-2:]) != tuple(shape.shape[-2:]):
        raise ShapeError(
            f"Tamanos incompatibles: primer plano {tuple(foreground.shape)}, "
            f"fondo {tuple(background.shape)}, forma {tuple(shape.shape)}"
        )
    if isinstance(foreground, torch.Tensor):
        mask = foreground_mask(shape, labels).unsqueeze(-3)
        return torch.where(mask, foreground, background)
    mask = foreground_mask(np.asarray(shape), labels).astype(bool)[..., None, :, :]
    return np.where(mask, foreground, background)


def refine_forward(gen: Generator, composite: torch.Tensor, shape: Optional[torch.Tensor], num_labels: int = 18) -> torch.Tensor:
    """Entrada [composicion(3), forma one-hot(j)]; sin forma (variante P) los canales van en cero"""
    if shape is None:
        encoded = composite.new_zeros(composite.shape[0], num_labels, *composite.shape[-2:])
    else:
        _check_sizes(composite, shape)
        encoded = one_hot_labels(shape, num_labels).to(composite)
    return gen(torch.cat([composite, encoded], dim=1))


class CascadeConfig(BaseModel):
    """Configuracion comun de la cascada para una variante de ablacion"""

    model_config = ConfigDict(frozen=True, extra="ignore")

    variant: Variant = "PSS"
    num_labels: int = 18
    base_width: int = Field(default=16, gt=0)
    num_residual_blocks: int = Field(default=4, gt=0)
    downsampling_steps: int = Field(default=2, gt=0)
    zero_init_head: bool = False

    @property
    def uses_shape(self) -> bool:
        return self.variant != "P"

    @property
    def uses_structure(self) -> bool:
        return self.variant in ("PSS", "PSS-R")

    @property
    def recurrent(self) -> bool:
        return self.variant != "PSS-R"

    def generator_config(self, stage: str) -> GeneratorConfig:
        j = self.num_labels
        common = dict(
            base_width=self.base_width,
            num_residual_blocks=self.num_residual_blocks,
            downsampling_steps=self.downsampling_steps,
            zero_init_head=self.zero_init_head,
        )
        if stage == "shape":
            return GeneratorConfig(input_channels=POSE_CHANNELS + j, output_channels=j, head="logits", **common)
        if stage == "structure":
            return GeneratorConfig(
                input_channels=POSE_CHANNELS + j + STRUCTURE_CHANNELS,
                output_channels=STRUCTURE_CHANNELS,
                head="structure",
                **common,
            )
        if stage == "appearance":
            channels = POSE_CHANNELS
            channels += j if self.uses_shape else 0
            channels += STRUCTURE_CHANNELS if self.uses_structure else 0
            return GeneratorConfig(input_channels=channels, output_channels=RGB_CHANNELS, head="rgb", **common)
        if stage == "refinement":
            common["num_residual_blocks"] = max(1, self.num_residual_blocks // 2)
            return GeneratorConfig(input_channels=RGB_CHANNELS + j, output_channels=RGB_CHANNELS, head="rgb", **common)
        raise ConfigError(f"Etapa desconocida: {stage}")

    @property
    def stages(self) -> Tuple[str, ...]:
        stages = []
        if self.uses_shape:
            stages.append("shape")
        if self.uses_structure:
            stages.append("structure")
        return tuple(stages + ["appearance", "refinement"])


class CascadeModels(nn.Module):
    """Las redes de una variante, indexadas por etapa"""

    def __init__(self, config: CascadeConfig):
        super().__init__()
        self.config = config
        self.networks = nn.ModuleDict(
            {stage: make_generator(config.generator_config(stage)) for stage in config.stages}
        )

    def __getitem__(self, stage: str) -> Generator:
        return self.networks[stage]

    def __contains__(self, stage: str) -> bool:
        return stage in self.networks

    @property
    def variant(self) -> str:
        return self.config.variant

    @property
    def num_labels(self) -> int:
        return self.config.num_labels

    def cold_state(self, batch: int, size: Tuple[int, int]) -> CascadeState:
        param = next(self.parameters())
        return CascadeState.cold(batch, self.num_labels, size, device=param.device, dtype=param.dtype)


def build_cascade(config: Union[CascadeConfig, Dict[str, Any]]) -> CascadeModels:
    if isinstance(config, dict):
        config = CascadeConfig.model_validate(config)
    models = CascadeModels(config)
    n_params = sum(p.numel() for p in models.parameters())
    logger.info(f"Cascada {config.variant} construida: etapas {list(config.stages)}, {n_params} parametros")
    return models


@dataclass
class CascadeOutput:
    frame: torch.Tensor  # refinado, (B, 3, h, w)
    composite: torch.Tensor
    foreground: torch.Tensor
    shape_logits: Optional[torch.Tensor]
    shape: Optional[torch.Tensor]  # mapa de etiquetas usado aguas abajo (B, h, w)
    structure: Optional[torch.Tensor]  # (B, 2, h, w) usada por la apariencia
    state: CascadeState


def cascade_step(
    models: CascadeModels,
    pose: torch.Tensor,
    background: torch.Tensor,
    state: CascadeState,
    labels: LabelSet,
    shape_override: Optional[torch.Tensor] = None,
    structure_override: Optional[torch.Tensor] = None,
    structure_transform: Optional[Callable[[torch.Tensor], torch.Tensor]] = None,
) -> CascadeOutput:
    """
    Forma -> argmax -> estructura -> apariencia -> composicion -> refinamiento.
    El estado nuevo guarda las predicciones de las redes; los overrides de edicion
    solo reemplazan lo que consumen las etapas siguientes.
    """
    j = models.num_labels
    if not models.config.recurrent:
        state = state.zeros_like()

    shape_logits = shape = structure = None
    next_logits = state.prev_shape_logits
    next_structure = state.prev_structure

    if models.config.uses_shape:
        shape_logits = shape_forward(models["shape"], pose, state)
        next_logits = shape_logits
        shape = shape_override if shape_override is not None else argmax_labels(shape_logits.detach())

    if models.config.uses_structure:
        predicted = structure_forward(models["structure"], pose, shape, state, j)
        next_structure = predicted
        structure = structure_override if structure_override is not None else predicted
        if structure_transform is not None:
            structure = structure_transform(structure)

    foreground = appearance_forward(models["appearance"], pose, shape, structure, j)
    if shape is None:
        composite = foreground
    else:
        composite = composite_background(foreground, shape, background.to(foreground), labels)
    frame = refine_forward(models["refinement"], composite, shape, j)

    return CascadeOutput(
        frame=frame,
        composite=composite,
        foreground=foreground,
        shape_logits=shape_logits,
        shape=shape,
        structure=structure,
        state=CascadeState(next_logits, next_structure),
    )


def save_checkpoint(
    path: Union[str, Path],
    models: CascadeModels,
    labels: LabelSet,
    gabor_params: Optional[GaborParams] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """Contenedor con los pesos, configuraciones, etiquetas y parametros de Gabor"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "cascade_config": models.config.model_dump(),
        "generator_configs": {
            stage: models.config.generator_config(stage).model_dump() for stage in models.config.stages
        },
        "state_dicts": {stage: net.state_dict() for stage, net in models.networks.items()},
        "labels": labels.model_dump(),
        "gabor_params": (gabor_params or GaborParams()).model_dump(),
        "extra": extra or {},
    }
    torch.save(payload, path)
    logger.info(f"Checkpoint guardado en: {path}")
    return path


def load_checkpoint(
    path: Union[str, Path], device: Union[str, torch.device] = "cpu"
) -> Tuple[CascadeModels, LabelSet, GaborParams, Dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint no encontrado: {path}")
    payload = torch.load(path, map_location=device, weights_only=False)

    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ConfigError(f"Version de checkpoint no soportada: {version}")

    models = CascadeModels(CascadeConfig.model_validate(payload["cascade_config"]))
    for stage, state_dict in payload["state_dicts"].items():
        models[stage].load_state_dict(state_dict)
    models.to(device)
    models.eval()

    labels = LabelSet.model_validate(payload["labels"])
    gabor = GaborParams.model_validate(payload["gabor_params"])
    return models, labels, gabor, payload.get("extra", {})
