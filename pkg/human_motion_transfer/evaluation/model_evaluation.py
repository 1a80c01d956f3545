import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from human_motion_transfer.data.parsing import foreground_mask
from human_motion_transfer.data.pose_conditioning import LimbMap, build_conditioning
from human_motion_transfer.evaluation.metrics import (
    embed_images,
    fid_from_embeddings,
    masked_l1,
    perceptual_distance,
    ssim_rgb,
)
from human_motion_transfer.exceptions import MetricError
from human_motion_transfer.models.generators import load_checkpoint
from human_motion_transfer.models.losses import FeatureExtractor, build_feature_extractor
from human_motion_transfer.models.reenactment import run_cascade
from human_motion_transfer.models.trainer import latest_checkpoint
from human_motion_transfer.utils.config import load_config, resolve_path
from human_motion_transfer.utils.io import SequenceData, load_image_dir, read_sequence

logger = logging.getLogger(__name__)

# (clave, titulo, mayor es mejor)
METRICS = [
    ("ssim", "SSIM", True),
    ("perceptual", "Distancia perceptual", False),
    ("fid", "FID (features phi)", False),
    ("fg_l1", "L1 primer plano", False),
]


def convert_numpy(obj):
    """Convierte tipos numpy a tipos nativos para serializar en JSON"""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, dict):
        return {key: convert_numpy(value) for key, value in obj.items()}
    elif isinstance(obj, list):
        return [convert_numpy(item) for item in obj]
    return obj


def compare_frames(
    pred: np.ndarray,
    gt: np.ndarray,
    phi: FeatureExtractor,
    masks: Optional[np.ndarray] = None,
    eval_cfg: Optional[Dict[str, Any]] = None,
) -> Dict[str, float]:
    """SSIM y distancia perceptual medias por frame, FID entre colecciones y L1 de primer plano"""
    if pred.shape != gt.shape:
        raise MetricError(f"Colecciones de distinto tamano: {pred.shape} vs {gt.shape}")
    eval_cfg = eval_cfg or {}
    ssim_kwargs = {
        "window": eval_cfg.get("ssim_window", 11),
        "sigma": eval_cfg.get("ssim_sigma", 1.5),
        "k1": eval_cfg.get("ssim_k1", 0.01),
        "k2": eval_cfg.get("ssim_k2", 0.03),
        "dynamic_range": eval_cfg.get("dynamic_range", 1.0),
    }

    results = {
        "frames": len(pred),
        "ssim": float(np.mean([ssim_rgb(p, g, **ssim_kwargs) for p, g in zip(pred, gt)])),
        "perceptual": float(np.mean([perceptual_distance(p, g, phi) for p, g in zip(pred, gt)])),
        "fid": None,
        "fg_l1": masked_l1(pred, gt, masks),
    }
    if len(pred) >= 2:
        results["fid"] = fid_from_embeddings(
            embed_images(gt, phi), embed_images(pred, phi), eval_cfg.get("eigenvalue_clamp", 1e-8)
        )
    return results


class VariantEvaluator:
    """
    Clase para evaluar y comparar las variantes de ablacion (P, PS, PSS, PSS-R)
    """

    def __init__(self, config_path: Optional[str] = None, config: Optional[Dict] = None):
        """Inicializa el evaluador de variantes"""
        self.config = config if config is not None else load_config(config_path)
        self.results_dir = resolve_path(self.config.get("paths", {}).get("results_dir", "results"))
        self.phi = build_feature_extractor(self.config.get("losses"))
        data_cfg = self.config.get("data", {})
        self.limbs = LimbMap.from_yaml(
            data_cfg.get("limb_map_path", "configs/limb_map.yaml"), keypoint_count=data_cfg.get("keypoint_count")
        )
        self.results: Dict[str, Dict[str, Any]] = {}

    def evaluate_directories(self, pred_dir: Union[str, Path], gt_dir: Union[str, Path]) -> Dict[str, Any]:
        """Compara dos directorios de PNG numerados"""
        pred, gt = load_image_dir(pred_dir), load_image_dir(gt_dir)
        return compare_frames(pred, gt, self.phi, eval_cfg=self.config.get("evaluation"))

    def evaluate_variant(self, checkpoint: Union[str, Path], sequence: SequenceData) -> Dict[str, Any]:
        """Auto-recreacion de la secuencia con el checkpoint y metricas contra los frames reales"""
        models, labels, _, extra = load_checkpoint(latest_checkpoint(checkpoint))
        reenact_cfg = self.config.get("reenactment", {})
        conditioning = build_conditioning(sequence.keypoints, self.limbs, sequence.size)
        result = run_cascade(
            models,
            conditioning,
            sequence.background,
            labels,
            max_iters=reenact_cfg.get("bootstrap_max_iters", 30),
            tol=reenact_cfg.get("bootstrap_tol", 1e-3),
        )
        masks = foreground_mask(sequence.labels, labels).astype(bool) if sequence.labels is not None else None
        metrics = compare_frames(result.frames, sequence.frames, self.phi, masks, self.config.get("evaluation"))
        metrics.update(
            variant=models.variant,
            bootstrap_iterations=result.bootstrap.iterations,
            bootstrap_converged=result.bootstrap.converged,
            stage=extra.get("stage"),
        )
        return metrics

    def compare_variants(self, results: Dict[str, Dict[str, Any]]) -> Dict[str, Any]:
        """Mejor variante por metrica"""
        comparison = {}
        for key, _, higher_is_better in METRICS:
            scored = {name: r[key] for name, r in results.items() if r.get(key) is not None}
            if not scored:
                continue
            pick = max if higher_is_better else min
            comparison[f"best_{key}"] = pick(scored, key=scored.get)
        return comparison

    def results_table(self, results: Dict[str, Dict[str, Any]]) -> pd.DataFrame:
        columns = ["variant"] + [key for key, _, _ in METRICS]
        rows = [{"variant": name, **{k: r.get(k) for k in columns[1:]}} for name, r in results.items()]
        return pd.DataFrame(rows, columns=columns)

    def create_comparison_plots(self, results: Dict[str, Dict[str, Any]]) -> Path:
        """Crea graficos de barras comparando las variantes"""
        self.results_dir.mkdir(parents=True, exist_ok=True)
        plt.style.use("default")

        fig, axes = plt.subplots(2, 2, figsize=(12, 8))
        fig.suptitle("Comparacion de variantes de la cascada", fontsize=16, fontweight="bold")
        names = list(results)
        colors = ["skyblue", "lightcoral", "lightgreen", "gold"]

        for ax, (key, title, _) in zip(axes.flat, METRICS):
            values = [results[name].get(key) or 0.0 for name in names]
            ax.bar(names, values, color=colors[: len(names)])
            ax.set_title(title)
            ax.set_ylabel("Valor")
            for i, v in enumerate(values):
                ax.text(i, v, f"{v:.3f}", ha="center", va="bottom")

        plt.tight_layout()
        path = self.results_dir / "variant_comparison.png"
        plt.savefig(path, dpi=150, bbox_inches="tight")
        plt.close()
        logger.info(f"Graficos guardados en: {path}")
        return path

    def save_results(self, results: Dict[str, Any]) -> Path:
        """Guarda los resultados en JSON y la tabla de variantes en CSV"""
        self.results_dir.mkdir(parents=True, exist_ok=True)
        results_path = self.results_dir / "evaluation_results.json"
        with open(results_path, "w", encoding="utf-8") as f:
            json.dump(convert_numpy(results), f, indent=2, ensure_ascii=False)

        if "variants" in results:
            self.results_table(results["variants"]).to_csv(self.results_dir / "ablation_table.csv", index=False)
        logger.info(f"Resultados guardados en: {results_path}")
        return results_path

    def print_summary(self, results: Dict[str, Dict[str, Any]], comparison: Dict[str, Any]) -> None:
        """Imprime un resumen de la comparacion"""
        print("\n" + "=" * 60)
        print("RESUMEN DE EVALUACION DE VARIANTES")
        print("=" * 60)
        for name, metrics in results.items():
            print(f"\nVARIANTE {name}:")
            for key, title, _ in METRICS:
                value = metrics.get(key)
                print(f"  {title}: {'n/d' if value is None else f'{value:.4f}'}")
        print("\nCOMPARACION:")
        for key, best in comparison.items():
            print(f"  {key}: {best}")
        print("\n" + "=" * 60)

    def run_full_evaluation(
        self, checkpoints: Dict[str, Union[str, Path]], sequence_dir: Union[str, Path]
    ) -> Dict[str, Any]:
        """Evalua cada variante sobre la misma secuencia y guarda el reporte"""
        sequence = read_sequence(sequence_dir, keypoint_count=self.limbs.keypoint_count)
        if sequence.background is None:
            raise MetricError(f"{sequence_dir}: falta background.png")

        variants = {}
        for name, checkpoint in checkpoints.items():
            logger.info(f"Evaluando variante {name}...")
            variants[name] = self.evaluate_variant(checkpoint, sequence)

        comparison = self.compare_variants(variants)
        self.results = {
            "timestamp": pd.Timestamp.now().isoformat(),
            "frames": len(sequence),
            "feature_extractor": self.phi.descriptor,
            "variants": variants,
            "comparison": comparison,
        }
        self.create_comparison_plots(variants)
        self.save_results(self.results)
        self.print_summary(variants, comparison)
        return self.results
