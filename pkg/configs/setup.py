#!/usr/bin/env python3
"""
Setup script para el proyecto Human Motion Transfer
"""

import subprocess
import sys
from pathlib import Path

import yaml

PROJECT_ROOT = Path(__file__).resolve().parent.parent


def create_directories():
    """Crear los directorios declarados en la seccion 'paths' de la configuracion"""
    with open(PROJECT_ROOT / "configs" / "config.yaml", "r", encoding="utf-8") as file:
        paths = (yaml.safe_load(file) or {}).get("paths", {})

    for directory in paths.values():
        target = PROJECT_ROOT / directory
        target.mkdir(parents=True, exist_ok=True)
        print(f"✓ Directorio '{directory}' creado/verificado")


def check_python_version():
    """Verificar versión de Python"""
    if sys.version_info < (3, 9):
        print("❌ ERROR: Se requiere Python 3.9 o superior")
        print(f"Versión actual: {sys.version}")
        sys.exit(1)
    else:
        print(f"✓ Python {sys.version.split()[0]} - OK")


def install_requirements():
    """Instalar dependencias"""
    try:
        print("📦 Instalando dependencias...")
        subprocess.run(
            [sys.executable, "-m", "pip", "install", "-r", str(PROJECT_ROOT / "requirements.txt")],
            check=True, capture_output=True, text=True,
        )
        print("✓ Dependencias instaladas correctamente")
    except subprocess.CalledProcessError as e:
        print("❌ Error instalando dependencias:")
        print(e.stderr)
        sys.exit(1)


def verify_installation():
    """Verificar que las librerías principales estén instaladas"""
    try:
        import numpy  # noqa: F401
        import pandas  # noqa: F401
        import PIL  # noqa: F401
        import pydantic  # noqa: F401
        import scipy  # noqa: F401
        import skimage  # noqa: F401
        import torch  # noqa: F401
        print("✓ Todas las dependencias principales verificadas")
    except ImportError as e:
        print(f"❌ Error importando librería: {e}")
        sys.exit(1)

    try:
        import torchvision  # noqa: F401
        print("✓ torchvision disponible (extractor vgg19 habilitado)")
    except ImportError:
        print("⚠️  torchvision no instalado: solo el extractor random_pyramid estará disponible")


def main():
    """Función principal de setup"""
    print("🚀 Configurando Human Motion Transfer...")
    print("=" * 50)

    check_python_version()
    create_directories()

    if "--install-deps" in sys.argv:
        install_requirements()
        verify_installation()

    print("\n✅ Setup completado!")
    print("\nPróximos pasos:")
    print("1. Activar entorno virtual: source venv/bin/activate (Linux/Mac) o venv\\Scripts\\activate (Windows)")
    print("2. Instalar dependencias: pip install -r requirements.txt")
    print("3. Pipeline de escritorio: python scripts/run_pipeline.py")
    print("4. Ablacion de variantes: python scripts/run_ablation.py")
    print("5. CLI: python -m human_motion_transfer --help")


if __name__ == "__main__":
    main()
