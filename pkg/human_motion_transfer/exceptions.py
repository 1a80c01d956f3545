"""Errores del paquete. Todos derivan de ValueError ademas de la base comun."""


class MotionTransferError(ValueError):
    """Base de todos los errores del dominio"""


class ConfigError(MotionTransferError):
    pass


class KeypointParseError(MotionTransferError):
    pass


class KeypointSchemaError(MotionTransferError):
    pass


class NormalizationError(MotionTransferError):
    pass


class LabelError(MotionTransferError):
    pass


class DimensionError(MotionTransferError):
    pass


class NumericError(MotionTransferError):
    pass


class ShapeError(MotionTransferError):
    pass


class TrainingError(MotionTransferError):
    pass


class DatasetError(MotionTransferError):
    pass


class EditError(MotionTransferError):
    pass


class MetricError(MotionTransferError):
    pass


class StudyError(MotionTransferError):
    pass
