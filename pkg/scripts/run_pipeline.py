#!/usr/bin/env python3
"""
Script principal del pipeline completo de transferencia de movimiento
Ejecuta secuencialmente: datos sinteticos, preparacion, entrenamiento por
etapas, recreacion del actor y evaluacion
"""

import logging
import sys
import time
from pathlib import Path

# Agregar el directorio principal al path
sys.path.append(str(Path(__file__).parent.parent))

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)


def main():
    """Función principal que ejecuta todo el pipeline"""
    from human_motion_transfer.data.pose_conditioning import compute_pose_stats
    from human_motion_transfer.data.synthetic import SyntheticSceneSpec, generate_synthetic_sequence
    from human_motion_transfer.evaluation.model_evaluation import VariantEvaluator, compare_frames
    from human_motion_transfer.models.reenactment import reenact_sequence
    from human_motion_transfer.models.trainer import CascadeTrainer
    from human_motion_transfer.utils.config import load_config, resolve_path, validate_section
    from human_motion_transfer.utils.data_preprocessing import DataPreprocessor
    from human_motion_transfer.utils.io import save_image_dir, write_sequence

    start_time = time.time()
    config = load_config(sys.argv[1] if len(sys.argv) > 1 else None)
    paths = config.get("paths", {})
    data_dir = resolve_path(paths.get("data_dir", "data/synthetic"))

    print("🚀 Iniciando pipeline completo de transferencia de movimiento")
    print("=" * 80)

    try:
        # 1. Secuencia sintetica
        print("\n🎨 PASO 1: Generación de la secuencia sintética")
        print("-" * 50)
        spec = validate_section(SyntheticSceneSpec, config.get("synthetic"))
        sequence = generate_synthetic_sequence(spec)
        write_sequence(data_dir, sequence.frames, sequence.keypoints, sequence.labels, sequence.background)

        # 2. Preparacion (estructura + condicionamiento de pose)
        print("\n📊 PASO 2: Extracción de estructura y preparación de muestras")
        print("-" * 50)
        preprocessor = DataPreprocessor(config=config)
        samples, cache_path = preprocessor.prepare(data_dir)
        print(f"   {len(samples)} muestras (cache: {cache_path})")

        # 3. Entrenamiento por etapas
        print(f"\n🤖 PASO 3: Entrenamiento de la cascada ({config['training']['variant']})")
        print("-" * 50)
        trainer = CascadeTrainer(config=config)
        final = trainer.train(samples)
        print(f"   L1 de primer plano en entrenamiento: {trainer.reconstruction_error(samples):.4f}")

        # 4. Auto-recreacion y evaluacion
        print("\n📈 PASO 4: Recreación y evaluación")
        print("-" * 50)
        stats = compute_pose_stats(sequence.keypoints, preprocessor.limbs.anchors)
        result = reenact_sequence(
            trainer.models, sequence.keypoints, stats, stats, sequence.background,
            trainer.labels, preprocessor.limbs,
        )
        results_dir = resolve_path(paths.get("results_dir", "results"))
        save_image_dir(results_dir / "reenactment", result.frames, prefix="frame")
        evaluator = VariantEvaluator(config=config)
        metrics = compare_frames(result.frames, sequence.frames, evaluator.phi, eval_cfg=config.get("evaluation"))
        evaluator.save_results({"variant": trainer.models.variant, "checkpoint": str(final), **metrics})

        end_time = time.time()
        total_time = end_time - start_time

        print("\n" + "=" * 80)
        print("✅ PIPELINE COMPLETADO EXITOSAMENTE!")
        print(f"⏱️  Tiempo total de ejecución: {total_time:.2f} segundos ({total_time/60:.1f} minutos)")
        print(f"   SSIM: {metrics['ssim']:.4f}   perceptual: {metrics['perceptual']:.4f}")
        print("\n📁 Archivos generados:")
        print(f"   • Secuencia: {data_dir}")
        print(f"   • Checkpoint final: {final}")
        print(f"   • Frames recreados: {results_dir / 'reenactment'}")
        print(f"   • Resultados: {results_dir / 'evaluation_results.json'}")
        print("=" * 80)

    except Exception as e:
        print(f"\n❌ ERROR EN EL PIPELINE: {e}")
        print("Revisa los logs para más detalles.")
        sys.exit(1)


if __name__ == "__main__":
    main()
