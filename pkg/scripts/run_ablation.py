#!/usr/bin/env python3
"""
Ablación de la cascada: entrena P, PS, PSS y PSS-R sobre la misma secuencia
y escribe la tabla comparativa (CSV + JSON + gráfico)
"""

import logging
import sys
import time
from pathlib import Path

sys.path.append(str(Path(__file__).parent.parent))

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)


def main():
    """Entrena cada variante y las compara con VariantEvaluator"""
    from human_motion_transfer.evaluation.model_evaluation import VariantEvaluator
    from human_motion_transfer.models.generators import VARIANTS
    from human_motion_transfer.models.trainer import CascadeTrainer
    from human_motion_transfer.utils.config import apply_overrides, load_config, resolve_path
    from human_motion_transfer.utils.data_preprocessing import DataPreprocessor

    start_time = time.time()
    config = load_config(sys.argv[1] if len(sys.argv) > 1 else None)
    paths = config.get("paths", {})
    data_dir = resolve_path(paths.get("data_dir", "data/synthetic"))
    checkpoint_root = resolve_path(paths.get("checkpoint_dir", "checkpoints"))

    print("🧪 Ablación de variantes de la cascada")
    print("=" * 80)

    try:
        samples, _ = DataPreprocessor(config=config).prepare(data_dir)
        checkpoints = {}
        for variant in VARIANTS:
            print(f"\n🔄 Variante {variant}")
            print("-" * 50)
            variant_config = apply_overrides(config, {"training.variant": variant})
            trainer = CascadeTrainer(config=variant_config)
            checkpoints[variant] = trainer.train(samples, checkpoint_root / variant)

        print("\n📈 Evaluación comparativa")
        print("-" * 50)
        VariantEvaluator(config=config).run_full_evaluation(checkpoints, data_dir)

        total_time = time.time() - start_time
        print(f"\n✅ Ablación completada en {total_time/60:.1f} minutos")
    except Exception as e:
        logger.exception("La ablación falló")
        print(f"\n❌ ERROR EN LA ABLACIÓN: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
