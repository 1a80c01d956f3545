"""
Carga de configuracion YAML, semillas y rutas del proyecto
"""

import logging
import os
import random
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar, Union

import numpy as np
import torch
import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError

from human_motion_transfer.exceptions import ConfigError

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "configs" / "config.yaml"
CACHE_DIR_ENV = "MOTION_TRANSFER_CACHE_DIR"

ModelT = TypeVar("ModelT", bound=BaseModel)


def load_config(config_path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """Carga la configuracion desde archivo YAML"""
    if config_path is None:
        config_path = DEFAULT_CONFIG_PATH
    config_path = Path(config_path)
    if not config_path.exists():
        raise FileNotFoundError(f"Archivo de configuracion no encontrado: {config_path}")

    with open(config_path, "r", encoding="utf-8") as file:
        config = yaml.safe_load(file) or {}

    if not isinstance(config, dict):
        raise ConfigError(f"La configuracion en {config_path} no es un mapa clave-valor")
    return config


def load_yaml(path: Union[str, Path]) -> Dict[str, Any]:
    """Carga un archivo YAML auxiliar (mapa de extremidades, etiquetas)"""
    path = resolve_path(path)
    if not path.exists():
        raise FileNotFoundError(f"Archivo no encontrado: {path}")
    with open(path, "r", encoding="utf-8") as file:
        return yaml.safe_load(file) or {}


def resolve_path(path: Union[str, Path]) -> Path:
    """Resuelve rutas relativas contra el directorio actual o la raiz del proyecto"""
    path = Path(path)
    if path.is_absolute() or path.exists():
        return path
    return PROJECT_ROOT / path


def validate_section(model_cls: Type[ModelT], data: Optional[Dict[str, Any]]) -> ModelT:
    """Valida una seccion de configuracion con su modelo pydantic"""
    try:
        return model_cls.model_validate(data or {})
    except ValidationError as e:
        raise ConfigError(f"Configuracion invalida para {model_cls.__name__}: {e}") from e


def apply_overrides(config: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Aplica overrides con claves 'seccion.clave' (los valores None se ignoran)"""
    updated = {section: dict(values) if isinstance(values, dict) else values
               for section, values in config.items()}
    for dotted, value in overrides.items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if not key:
            raise ConfigError(f"Override sin seccion: {dotted}")
        updated.setdefault(section, {})[key] = value
    return updated


def get_cache_dir(config: Dict[str, Any]) -> Path:
    """Directorio de cache; la variable de entorno tiene prioridad sobre el YAML"""
    load_dotenv()
    env_dir = os.environ.get(CACHE_DIR_ENV)
    if env_dir:
        return Path(env_dir)
    return resolve_path(config.get("paths", {}).get("cache_dir", "data/cache"))


def set_seed(seed: int) -> None:
    """Fija las semillas de random, numpy y torch para corridas reproducibles"""
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True, warn_only=True)
    logger.debug(f"Semilla fijada: {seed}")
