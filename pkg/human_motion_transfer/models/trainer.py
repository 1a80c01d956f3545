import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from human_motion_transfer.data.parsing import LabelSet, foreground_mask, garment_mask, one_hot_labels
from human_motion_transfer.data.structure_field import GaborParams
from human_motion_transfer.exceptions import ConfigError, DatasetError, TrainingError
from human_motion_transfer.models.generators import (
    VARIANTS,
    CascadeConfig,
    CascadeModels,
    CascadeState,
    Variant,
    build_cascade,
    cascade_step,
    load_checkpoint,
    save_checkpoint,
)
from human_motion_transfer.models.losses import (
    FeatureExtractor,
    LossWeights,
    appearance_loss,
    build_feature_extractor,
    refinement_loss,
    shape_loss,
    structure_loss,
    total_loss,
)
from human_motion_transfer.utils.config import load_config, resolve_path, set_seed, validate_section
from human_motion_transfer.utils.data_preprocessing import TrainingSample

logger = logging.getLogger(__name__)

STAGE_ORDER = ("shape", "structure", "appearance", "refinement")
LOSS_COLUMNS = ["l_shp", "l_str", "l_app", "l_ref", "l_total"]
BETA_PRESETS = {"published": (0.999, 0.5), "standard": (0.5, 0.999)}
LATEST_POINTER = "latest.txt"


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="ignore")

    epochs: int = Field(default=30, ge=1)
    learning_rate: float = Field(default=2e-4, gt=0)
    # "published" = (0.999, 0.5) tal como aparece publicado; "standard" = (0.5, 0.999)
    betas_preset: Literal["published", "standard", "custom"] = "published"
    betas: Tuple[float, float] = (0.999, 0.5)
    variant: Variant = "PSS"
    seed: int = 42
    stages: List[str] = list(STAGE_ORDER)
    teacher_forcing_epochs: int = Field(default=1, ge=0)
    joint_finetune: bool = False
    device: str = "cpu"

    def resolved_betas(self) -> Tuple[float, float]:
        if self.betas_preset == "custom":
            return tuple(self.betas)
        return BETA_PRESETS[self.betas_preset]

    def teacher_forcing(self, epoch_index: int) -> bool:
        return epoch_index < self.teacher_forcing_epochs


def latest_checkpoint(path: Union[str, Path]) -> Path:
    """Resuelve un directorio de checkpoints a su archivo mas reciente"""
    path = Path(path)
    if path.is_dir():
        pointer = path / LATEST_POINTER
        if not pointer.exists():
            raise FileNotFoundError(f"No hay puntero '{LATEST_POINTER}' en {path}")
        path = path / pointer.read_text(encoding="utf-8").strip()
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint no encontrado: {path}")
    return path


def teacher_state(sample: Dict[str, torch.Tensor], num_labels: int) -> CascadeState:
    """Realimentacion con pseudo-ground-truth: forma one-hot como logits y estructura"""
    logits = one_hot_labels(sample["gt_shape"], num_labels).to(sample["pose"])
    return CascadeState(prev_shape_logits=logits, prev_structure=sample["gt_structure"].clone())


def _check_finite(value: torch.Tensor, frame: int, component: str) -> None:
    if not torch.isfinite(value).all():
        raise TrainingError(f"Perdida no finita en el frame {frame}, componente {component}: {value.item()}")


def train_epoch(
    models: CascadeModels,
    samples: Sequence[TrainingSample],
    optimizer: torch.optim.Optimizer,
    epoch_index: int,
    config: TrainConfig,
    active_stages: Sequence[str],
    phi: FeatureExtractor,
    weights: LossWeights,
    labels: LabelSet,
    log_rows: Optional[List[Dict[str, Any]]] = None,
    stage_name: Optional[str] = None,
) -> Dict[str, float]:
    """
    Una pasada secuencial (sin barajar) por la secuencia con paso de optimizador por frame.
    Con teacher forcing la realimentacion es el ground truth del frame anterior; si no,
    la prediccion anterior desacoplada del grafo.
    """
    param = next(models.parameters())
    device, dtype = param.device, param.dtype
    j = models.num_labels
    forcing = config.teacher_forcing(epoch_index)
    totals = {column: 0.0 for column in LOSS_COLUMNS}

    state: Optional[CascadeState] = None
    previous: Optional[Dict[str, torch.Tensor]] = None

    for n, sample in enumerate(samples):
        batch = sample.to_tensors(device, dtype)
        if n == 0:
            state = models.cold_state(1, tuple(batch["frame"].shape[-2:]))
        elif forcing:
            state = teacher_state(previous, j)

        out = cascade_step(models, batch["pose"], batch["background"], state, labels)

        zero = batch["frame"].new_zeros(())
        components = {"l_shp": zero, "l_str": zero, "l_app": zero, "l_ref": zero}
        if "shape" in active_stages:
            components["l_shp"] = shape_loss(out.shape_logits, batch["gt_shape"])
        if "structure" in active_stages:
            components["l_str"] = structure_loss(
                out.structure, batch["gt_structure"], garment_mask(batch["gt_shape"], labels)
            )
        if "appearance" in active_stages:
            if models.config.uses_shape:
                fg = foreground_mask(batch["gt_shape"], labels)
            else:
                fg = torch.ones_like(batch["gt_shape"], dtype=torch.bool)
            components["l_app"] = appearance_loss(out.foreground, batch["frame"], fg, phi, weights)
        if "refinement" in active_stages:
            components["l_ref"] = refinement_loss(out.frame, batch["frame"], phi, weights)

        for name, value in components.items():
            _check_finite(value, n, name)
        loss = total_loss(components["l_shp"], components["l_str"], components["l_app"], components["l_ref"], weights)
        _check_finite(loss, n, "l_total")

        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()

        # recurrencia truncada: nunca se propaga gradiente entre frames
        state = out.state.detach()
        previous = batch

        row = {name: float(value.detach()) for name, value in components.items()}
        row["l_total"] = float(loss.detach())
        for column in LOSS_COLUMNS:
            totals[column] += row[column]
        if log_rows is not None:
            log_rows.append({"epoch": epoch_index, "stage": stage_name or "+".join(active_stages), "frame": n, **row})

    count = max(len(samples), 1)
    return {column: value / count for column, value in totals.items()}


class CascadeTrainer:
    """
    Entrenamiento secuencial por etapas de la cascada con Adam, registro CSV
    de perdidas y checkpoints por epoca
    """

    def __init__(self, config_path: Optional[str] = None, config: Optional[Dict] = None):
        """Inicializa el entrenador a partir de la configuracion"""
        self.config = config if config is not None else load_config(config_path)
        self.train_config = validate_section(TrainConfig, self.config.get("training"))
        self.weights = validate_section(LossWeights, self.config.get("losses"))
        self.gabor_params = validate_section(GaborParams, self.config.get("structure"))
        if self.train_config.variant not in VARIANTS:
            raise ConfigError(f"Variante desconocida: {self.train_config.variant}")
        unknown = set(self.train_config.stages) - set(STAGE_ORDER)
        if unknown:
            raise ConfigError(f"Etapas desconocidas: {sorted(unknown)}")

        label_path = self.config.get("data", {}).get("label_set_path", "configs/atr_labels.yaml")
        self.labels = LabelSet.from_yaml(label_path)
        self.device = torch.device(self.train_config.device)
        logger.info(f"Usando dispositivo: {self.device}")

        paths = self.config.get("paths", {})
        self.checkpoint_dir = resolve_path(paths.get("checkpoint_dir", "checkpoints"))
        self.logs_dir = resolve_path(paths.get("logs_dir", "logs"))

        self.models: Optional[CascadeModels] = None
        self.phi: Optional[FeatureExtractor] = None
        self.history: List[Dict[str, Any]] = []
        self.is_trained = False

    @property
    def cascade_config(self) -> CascadeConfig:
        gen_cfg = dict(self.config.get("generators", {}))
        gen_cfg.update(variant=self.train_config.variant, num_labels=self.labels.count)
        return validate_section(CascadeConfig, gen_cfg)

    def setup_models(self) -> CascadeModels:
        """Construye la cascada de la variante y el extractor de features"""
        set_seed(self.train_config.seed)
        self.models = build_cascade(self.cascade_config).to(self.device)
        self.phi = build_feature_extractor(self.config.get("losses")).to(self.device)
        return self.models

    def stage_schedule(self) -> List[str]:
        """Etapas configuradas que existen en la variante, en orden de la cascada"""
        available = self.models.config.stages
        return [stage for stage in STAGE_ORDER if stage in self.train_config.stages and stage in available]

    def _make_optimizer(self, stages: Sequence[str]) -> torch.optim.Adam:
        for name, net in self.models.networks.items():
            net.requires_grad_(name in stages)
        params = [p for stage in stages for p in self.models[stage].parameters()]
        return torch.optim.Adam(params, lr=self.train_config.learning_rate, betas=self.train_config.resolved_betas())

    def _append_log(self, rows: List[Dict[str, Any]]) -> None:
        if not rows:
            return
        self.logs_dir.mkdir(parents=True, exist_ok=True)
        log_path = self.logs_dir / "training_log.csv"
        pd.DataFrame(rows).to_csv(log_path, mode="a", header=not log_path.exists(), index=False)

    def _run_stage(self, name: str, stages: Sequence[str], samples: Sequence[TrainingSample], checkpoint_dir: Path) -> Path:
        optimizer = self._make_optimizer(stages)
        self.models.train()
        path = None
        for epoch in tqdm(range(self.train_config.epochs), desc=f"Etapa {name}", disable=None):
            rows: List[Dict[str, Any]] = []
            stats = train_epoch(
                self.models, samples, optimizer, epoch, self.train_config, stages,
                self.phi, self.weights, self.labels, log_rows=rows, stage_name=name,
            )
            self._append_log(rows)
            self.history.append({"stage": name, "epoch": epoch, **stats})
            logger.info(f"Etapa {name}, epoca {epoch + 1}/{self.train_config.epochs}: l_total={stats['l_total']:.5f}")
            path = self.save_model(checkpoint_dir / f"{name}_epoch{epoch:03d}.pt", stage=name, epoch=epoch)
        return path

    def train(self, samples: Sequence[TrainingSample], checkpoint_dir: Optional[Union[str, Path]] = None) -> Path:
        """Entrena las etapas en orden (las anteriores congeladas) y devuelve el checkpoint final"""
        if not samples:
            raise DatasetError("El dataset de entrenamiento esta vacio")
        checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else self.checkpoint_dir
        if self.models is None:
            self.setup_models()

        schedule = self.stage_schedule()
        logger.info(f"Iniciando entrenamiento de la variante {self.models.variant}: etapas {schedule}")
        final = None
        for stage in schedule:
            final = self._run_stage(stage, [stage], samples, checkpoint_dir)
        if self.train_config.joint_finetune and schedule:
            final = self._run_stage("joint", schedule, samples, checkpoint_dir)

        self.models.requires_grad_(False)
        self.models.eval()
        self.is_trained = True
        logger.info(f"Entrenamiento completado. Checkpoint final: {final}")
        return final

    @torch.no_grad()
    def reconstruction_error(self, samples: Sequence[TrainingSample]) -> float:
        """L1 media enmascarada al primer plano entre el frame refinado y el original (inferencia sin teacher forcing)"""
        if self.models is None:
            raise TrainingError("El modelo debe ser entrenado antes de evaluar")
        self.models.eval()
        param = next(self.models.parameters())
        errors = []
        state = None
        for n, sample in enumerate(samples):
            batch = sample.to_tensors(param.device, param.dtype)
            if state is None:
                state = self.models.cold_state(1, tuple(batch["frame"].shape[-2:]))
            out = cascade_step(self.models, batch["pose"], batch["background"], state, self.labels)
            state = out.state
            fg = foreground_mask(batch["gt_shape"], self.labels).unsqueeze(1).to(param.dtype)
            count = fg.sum() * 3
            if count > 0:
                errors.append(float(((out.frame - batch["frame"]).abs() * fg).sum() / count))
        return float(np.mean(errors)) if errors else 0.0

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.history)

    def save_model(self, path: Union[str, Path], stage: str = "final", epoch: int = -1) -> Path:
        """Guarda el checkpoint y actualiza el puntero 'latest'"""
        path = Path(path)
        save_checkpoint(
            path,
            self.models,
            self.labels,
            self.gabor_params,
            extra={"stage": stage, "epoch": epoch, "train_config": self.train_config.model_dump()},
        )
        (path.parent / LATEST_POINTER).write_text(path.name, encoding="utf-8")
        return path

    def load_model(self, path: Union[str, Path]) -> CascadeModels:
        """Carga un checkpoint (archivo o directorio con puntero 'latest')"""
        path = latest_checkpoint(path)
        self.models, self.labels, self.gabor_params, _ = load_checkpoint(path, device=self.device)
        if self.phi is None:
            self.phi = build_feature_extractor(self.config.get("losses")).to(self.device)
        self.is_trained = True
        logger.info(f"Cascada cargada desde: {path}")
        return self.models


def run_training(config: Dict[str, Any], dataset: Sequence[TrainingSample], checkpoint_dir: Union[str, Path]) -> Path:
    """Orquestacion completa: construir, entrenar por etapas y devolver el checkpoint final"""
    trainer = CascadeTrainer(config=config)
    return trainer.train(dataset, checkpoint_dir)
