"""
Interfaz de linea de comandos: datos sinteticos, preparacion, entrenamiento,
recreacion, edicion, evaluacion, estudio perceptual y visualizacion

    python -m human_motion_transfer <subcomando> [opciones]
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from human_motion_transfer.data.parsing import LabelSet, colorize_label_map
from human_motion_transfer.data.pose_conditioning import LimbMap, build_conditioning, compute_pose_stats, normalize_poses
from human_motion_transfer.data.structure_field import (
    GaborParams,
    build_gabor_bank,
    extract_structure_sequence,
    visualize_structure,
)
from human_motion_transfer.data.synthetic import SyntheticSceneSpec, generate_synthetic_sequence
from human_motion_transfer.evaluation.model_evaluation import VariantEvaluator
from human_motion_transfer.evaluation.user_study import (
    design_from_votes,
    load_votes,
    rank_methods,
    validate_vote_budget,
    vote_budget,
)
from human_motion_transfer.exceptions import ConfigError, MotionTransferError, StudyError
from human_motion_transfer.models.generators import VARIANTS, load_checkpoint
from human_motion_transfer.models.reenactment import reenact_sequence, swap_conditioning
from human_motion_transfer.models.trainer import CascadeTrainer, latest_checkpoint
from human_motion_transfer.utils.config import apply_overrides, load_config, resolve_path, validate_section
from human_motion_transfer.utils.data_preprocessing import DataPreprocessor
from human_motion_transfer.utils.io import (
    SequenceData,
    frame_name,
    read_sequence,
    save_image,
    save_image_dir,
    write_sequence,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _resolution(value: str) -> List[int]:
    """'64' o '64x96' -> [h, w]"""
    try:
        parts = [int(p) for p in value.lower().split("x")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Resolucion invalida: {value}")
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or min(parts) <= 0:
        raise argparse.ArgumentTypeError(f"Resolucion invalida: {value}")
    return parts


def _variant_checkpoint(value: str) -> List[str]:
    name, sep, path = value.partition("=")
    if not sep or name not in VARIANTS:
        raise argparse.ArgumentTypeError(f"Se esperaba VARIANTE=RUTA con variante en {VARIANTS}, recibido {value}")
    return [name, path]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="Archivo YAML de configuracion")
    common.add_argument("--seed", type=int, default=None, help="Semilla (training.seed y synthetic.seed)")
    common.add_argument("--variant", choices=VARIANTS, default=None, help="Variante de ablacion de la cascada")
    common.add_argument("--resolution", type=_resolution, default=None, help="Resolucion HxW o un solo lado")
    common.add_argument("--checkpoint", type=str, default=None, help="Checkpoint o directorio de checkpoints")
    common.add_argument("--epochs", type=int, default=None, help="Epocas por etapa")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(
        prog="human_motion_transfer",
        description="Transferencia de movimiento humano con cascada forma -> estructura -> apariencia",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcomando")

    p = sub.add_parser("synth-data", parents=[common], help="Genera una secuencia sintetica")
    p.add_argument("--out", required=True, help="Directorio de salida de la secuencia")
    p.add_argument("--frames", type=int, default=None, help="Numero de frames")

    p = sub.add_parser("prepare", parents=[common], help="Extrae estructura y arma las muestras (con cache)")
    p.add_argument("--data", required=True, help="Directorio de la secuencia")
    p.add_argument("--force", action="store_true", help="Ignora la cache")

    p = sub.add_parser("train", parents=[common], help="Entrena la cascada por etapas")
    p.add_argument("--data", required=True, help="Directorio de la secuencia")
    p.add_argument("--lr", type=float, default=None, help="Tasa de aprendizaje de Adam")
    p.add_argument("--betas-preset", choices=["published", "standard"], default=None, help="Orden de betas de Adam")
    p.add_argument("--joint", action="store_true", help="Agrega el ajuste conjunto final")

    p = sub.add_parser("reenact", parents=[common], help="Recrea las poses de una secuencia fuente en el actor destino")
    p.add_argument("--source", required=True, help="Secuencia fuente (keypoints.json)")
    p.add_argument("--target", required=True, help="Secuencia de entrenamiento del actor destino (keypoints y fondo)")
    p.add_argument("--out", required=True, help="Directorio de frames de salida")
    p.add_argument("--wrinkle", type=float, default=None, help="Factor de escala de arrugas")
    p.add_argument("--panels", action="store_true", help="Escribe paneles pose|forma|estructura|resultado")

    p = sub.add_parser("edit", parents=[common], help="Intercambio de forma/estructura y escala de arrugas")
    p.add_argument("--source", required=True, help="Secuencia que aporta las poses")
    p.add_argument("--target", required=True, help="Secuencia del actor destino (fondo y estadisticas de pose)")
    p.add_argument("--shape-from", default=None, help="Secuencia cuyas etiquetas reemplazan la forma")
    p.add_argument("--structure-from", default=None, help="Secuencia cuya estructura reemplaza la predicha")
    p.add_argument("--wrinkle", type=float, default=None, help="Factor de escala de arrugas")
    p.add_argument("--out", required=True, help="Directorio de frames de salida")

    p = sub.add_parser("evaluate", parents=[common], help="SSIM, distancia perceptual y FID")
    p.add_argument("--pred", default=None, help="Directorio de frames generados")
    p.add_argument("--gt", default=None, help="Directorio de frames reales")
    p.add_argument("--data", default=None, help="Secuencia para comparar variantes")
    p.add_argument("--variants", nargs="+", type=_variant_checkpoint, default=None, metavar="VARIANTE=RUTA")

    p = sub.add_parser("study", parents=[common], help="Ranking de metodos con significancia")
    p.add_argument("--votes", required=True, help="CSV con columnas method, participant, vote")
    p.add_argument("--W", type=float, default=None, help="Valor critico W_{t,alpha}")
    p.add_argument("--m", type=int, required=True, help="Numero de participantes")
    p.add_argument("--t", type=int, default=None, help="Numero de metodos (se verifica contra el CSV)")
    p.add_argument("--alpha", type=float, default=None, help="Nivel de significancia")
    p.add_argument("--comparisons-per-pair", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV de salida del ranking")

    p = sub.add_parser("visualize", parents=[common], help="Paneles de etiquetas y estructura de una secuencia")
    p.add_argument("--data", required=True, help="Directorio de la secuencia")
    p.add_argument("--out", required=True, help="Directorio de salida")

    return parser


def resolve_config(args: argparse.Namespace) -> Dict[str, Any]:
    """Configuracion YAML con los flags comunes aplicados encima"""
    config = load_config(args.config)
    overrides = {
        "training.seed": args.seed,
        "synthetic.seed": args.seed,
        "training.variant": args.variant,
        "training.epochs": args.epochs,
        "data.resolution": args.resolution,
        "synthetic.resolution": args.resolution,
        "training.learning_rate": getattr(args, "lr", None),
        "training.betas_preset": getattr(args, "betas_preset", None),
        "synthetic.frames": getattr(args, "frames", None),
    }
    if getattr(args, "joint", False):
        overrides["training.joint_finetune"] = True
    return apply_overrides(config, overrides)


def _limbs(config: Dict[str, Any]) -> LimbMap:
    data_cfg = config.get("data", {})
    return LimbMap.from_yaml(
        data_cfg.get("limb_map_path", "configs/limb_map.yaml"), keypoint_count=data_cfg.get("keypoint_count")
    )


def _label_set(config: Dict[str, Any]) -> LabelSet:
    return LabelSet.from_yaml(config.get("data", {}).get("label_set_path", "configs/atr_labels.yaml"))


def _read(path: str, config: Dict[str, Any], limbs: LimbMap) -> SequenceData:
    return read_sequence(
        resolve_path(path),
        label_set=_label_set(config),
        keypoint_count=limbs.keypoint_count,
        confidence_threshold=float(config.get("data", {}).get("confidence_threshold", 0.05)),
    )


def _checkpoint(args: argparse.Namespace, config: Dict[str, Any]) -> Path:
    path = args.checkpoint or config.get("paths", {}).get("checkpoint_dir", "checkpoints")
    return latest_checkpoint(resolve_path(path))


def cmd_synth_data(args, config) -> int:
    spec = validate_section(
        SyntheticSceneSpec,
        {**config.get("synthetic", {}), "keypoint_count": config.get("data", {}).get("keypoint_count", 127)},
    )
    sequence = generate_synthetic_sequence(spec)
    out = write_sequence(
        args.out, sequence.frames, sequence.keypoints, sequence.labels, sequence.background,
        label_set=_label_set(config),
    )
    print(f"secuencia: {out} ({len(sequence.frames)} frames, {spec.resolution[0]}x{spec.resolution[1]})")
    return 0


def cmd_prepare(args, config) -> int:
    preprocessor = DataPreprocessor(config=config)
    samples, cache_path = preprocessor.prepare(args.data, force=args.force)
    print(f"muestras: {len(samples)}")
    print(f"cache: {cache_path}")
    print(f"desde_cache: {preprocessor.last_from_cache}")
    return 0


def cmd_train(args, config) -> int:
    samples, _ = DataPreprocessor(config=config).prepare(args.data)
    trainer = CascadeTrainer(config=config)
    checkpoint_dir = resolve_path(args.checkpoint) if args.checkpoint else trainer.checkpoint_dir
    final = trainer.train(samples, checkpoint_dir)
    print(f"checkpoint: {final}")
    print(f"l1_primer_plano: {trainer.reconstruction_error(samples):.6f}")
    return 0


def _reenact_cfg(config: Dict[str, Any]) -> Dict[str, Any]:
    cfg = config.get("reenactment", {})
    return {"max_iters": cfg.get("bootstrap_max_iters", 30), "tol": cfg.get("bootstrap_tol", 1e-3)}


def cmd_reenact(args, config) -> int:
    limbs = _limbs(config)
    models, labels, _, _ = load_checkpoint(_checkpoint(args, config))
    source = _read(args.source, config, limbs)
    target = _read(args.target, config, limbs)
    if target.background is None:
        raise ConfigError(f"{args.target}: falta background.png")

    emit_panels = args.panels or config.get("reenactment", {}).get("emit_panels", False)
    result = reenact_sequence(
        models,
        source.keypoints,
        compute_pose_stats(source.keypoints, limbs.anchors),
        compute_pose_stats(target.keypoints, limbs.anchors),
        target.background,
        labels,
        limbs,
        wrinkle_factor=args.wrinkle,
        panels_dir=Path(args.out) / "panels" if emit_panels else None,
        **_reenact_cfg(config),
    )
    save_image_dir(Path(args.out) / "frames", result.frames, prefix="frame")
    print(f"frames: {len(result)}")
    print(f"arranque: {result.bootstrap.iterations} iteraciones, convergio={result.bootstrap.converged}")
    return 0


def _structure_stream(sequence: SequenceData, config: Dict[str, Any]):
    if sequence.structure is not None:
        return sequence.structure
    params = validate_section(GaborParams, config.get("structure")).scaled_to(sequence.size)
    return extract_structure_sequence(sequence.frames, build_gabor_bank(params), params.smoothing_sigma, params.n_jobs)


def cmd_edit(args, config) -> int:
    limbs = _limbs(config)
    models, labels, _, _ = load_checkpoint(_checkpoint(args, config))
    source = _read(args.source, config, limbs)
    target = _read(args.target, config, limbs)
    if target.background is None:
        raise ConfigError(f"{args.target}: falta background.png")

    normalized = normalize_poses(
        source.keypoints,
        compute_pose_stats(source.keypoints, limbs.anchors),
        compute_pose_stats(target.keypoints, limbs.anchors),
    )
    poses = build_conditioning(normalized, limbs, target.size)

    shapes = structures = None
    if args.shape_from:
        shape_seq = _read(args.shape_from, config, limbs)
        if shape_seq.labels is None:
            raise ConfigError(f"{args.shape_from}: no tiene mapas de etiquetas")
        shapes = list(shape_seq.labels)
    if args.structure_from:
        structures = _structure_stream(_read(args.structure_from, config, limbs), config)

    result = swap_conditioning(
        models, poses, target.background, labels,
        override_shape=shapes,
        override_structure=structures,
        wrinkle_factor=args.wrinkle,
        **_reenact_cfg(config),
    )
    save_image_dir(Path(args.out) / "frames", result.frames, prefix="frame")
    print(f"frames: {len(result)}")
    return 0


def _fmt(value: Optional[float]) -> str:
    return "n/d" if value is None else f"{value:.6f}"


def cmd_evaluate(args, config) -> int:
    evaluator = VariantEvaluator(config=config)
    if args.variants:
        if not args.data:
            raise ConfigError("--variants requiere --data")
        evaluator.run_full_evaluation({name: resolve_path(path) for name, path in args.variants}, resolve_path(args.data))
        return 0
    if not (args.pred and args.gt):
        raise ConfigError("evaluate requiere --pred y --gt, o --data con --variants")

    metrics = evaluator.evaluate_directories(resolve_path(args.pred), resolve_path(args.gt))
    print(f"frames: {metrics['frames']}")
    print(f"ssim: {_fmt(metrics['ssim'])}")
    print(f"perceptual: {_fmt(metrics['perceptual'])}")
    print(f"fid: {_fmt(metrics['fid'])}")
    return 0


def cmd_study(args, config) -> int:
    study_cfg = config.get("study", {})
    votes = load_votes(resolve_path(args.votes))
    if args.t is not None and args.t != len(votes):
        raise StudyError(f"--t={args.t} pero el CSV tiene {len(votes)} metodos")

    design = design_from_votes(
        votes,
        m=args.m,
        alpha=args.alpha if args.alpha is not None else study_cfg.get("alpha", 0.01),
        W=args.W,
        critical_values=study_cfg.get("critical_values"),
        comparisons_per_pair=args.comparisons_per_pair or study_cfg.get("comparisons_per_pair", 1),
    )
    # el presupuesto solo es estricto si el diseno se declara explicitamente
    if args.comparisons_per_pair is not None:
        validate_vote_budget(design)
    elif sum(votes.values()) > vote_budget(design):
        logger.warning(
            f"Total de votos {sum(votes.values())} excede m*t(t-1)/2*{design.comparisons_per_pair}; "
            "declare --comparisons-per-pair para validarlo"
        )

    report = rank_methods(design)
    print(report.to_text())
    if args.out:
        report.to_csv(args.out)
    return 0


def cmd_visualize(args, config) -> int:
    sequence = _read(args.data, config, _limbs(config))
    structure = _structure_stream(sequence, config)
    out = Path(args.out)
    for n, frame in enumerate(sequence.frames):
        panels = [frame]
        if sequence.labels is not None:
            panels.append(colorize_label_map(sequence.labels[n]))
        panels.append(np.round(visualize_structure(structure[n]) * 255.0).astype(np.uint8))
        save_image(out / frame_name("panel", n), np.concatenate(panels, axis=1))
    print(f"paneles: {len(sequence)} en {out}")
    return 0


COMMANDS = {
    "synth-data": cmd_synth_data,
    "prepare": cmd_prepare,
    "train": cmd_train,
    "reenact": cmd_reenact,
    "edit": cmd_edit,
    "evaluate": cmd_evaluate,
    "study": cmd_study,
    "visualize": cmd_visualize,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Punto de entrada; 0 exito, 1 error del dominio o de E/S, 2 error de uso"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](args, config)
    except (MotionTransferError, OSError) as e:
        message = " ".join(str(e).split())
        print(f"error: {type(e).__name__}: {message}", file=sys.stderr)
        return 1
