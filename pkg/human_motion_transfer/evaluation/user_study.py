"""
Analisis del estudio perceptual de comparaciones pareadas enlazadas:
umbral de significancia R' y ranking de metodos por votos
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from human_motion_transfer.exceptions import StudyError

logger = logging.getLogger(__name__)


class CriticalValue(BaseModel):
    t: int
    alpha: float
    W: float


class StudyDesign(BaseModel):
    """t metodos, m participantes, nivel alpha, valor critico W_{t,alpha} y votos por metodo"""

    model_config = ConfigDict(frozen=True)

    t: int = Field(ge=2)
    m: int = Field(ge=1)
    alpha: float = 0.01
    W: Optional[float] = Field(default=None, ge=0)
    votes: Dict[str, int] = {}
    methods: Optional[List[str]] = None
    comparisons_per_pair: int = Field(default=1, ge=1)

    @field_validator("votes")
    @classmethod
    def _check_votes(cls, value: Dict[str, int]) -> Dict[str, int]:
        negative = [name for name, count in value.items() if count < 0]
        if negative:
            raise ValueError(f"Votos negativos para: {negative}")
        return value


def lookup_critical_value(t: int, alpha: float, table: Sequence[Union[Dict, CriticalValue]]) -> float:
    """Busca W_{t,alpha} en la tabla configurada"""
    for entry in table:
        entry = entry if isinstance(entry, CriticalValue) else CriticalValue.model_validate(entry)
        if entry.t == t and math.isclose(entry.alpha, alpha):
            return entry.W
    raise StudyError(f"No hay valor critico tabulado para t={t}, alpha={alpha}")


def significance_threshold(design: StudyDesign) -> float:
    """R' = (W * sqrt(m * t) + 0.5) / 2"""
    if design.W is None:
        raise StudyError("El diseno no tiene valor critico W")
    if design.m * design.t <= 0:
        raise StudyError(f"m * t debe ser positivo, recibido {design.m * design.t}")
    return (design.W * math.sqrt(design.m * design.t) + 0.5) / 2.0


def vote_budget(design: StudyDesign) -> int:
    return design.m * design.t * (design.t - 1) // 2 * design.comparisons_per_pair


def validate_vote_budget(design: StudyDesign) -> int:
    """Verifica que el total de votos no exceda m * t(t-1)/2 * comparaciones por par"""
    budget = vote_budget(design)
    total = sum(design.votes.values())
    if total > budget:
        raise StudyError(f"Total de votos {total} excede el presupuesto del diseno ({budget})")
    return budget


@dataclass
class RankingRow:
    rank: int
    method: str
    votes: int
    gap_to_next: Optional[int]
    significant: Optional[bool]


@dataclass
class RankingReport:
    rows: List[RankingRow]
    threshold: float
    design: StudyDesign

    @property
    def num_groups(self) -> int:
        return max((row.rank for row in self.rows), default=0)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.__dict__ for row in self.rows])

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    def to_text(self) -> str:
        lines = [
            f"t={self.design.t}  m={self.design.m}  alpha={self.design.alpha}  W={self.design.W}",
            f"R' = {self.threshold:.5f}",
            f"{'rango':>5}  {'metodo':<16}{'votos':>7}  {'diferencia':>10}  significativo",
        ]
        for row in self.rows:
            gap = "" if row.gap_to_next is None else str(row.gap_to_next)
            flag = "" if row.significant is None else ("si" if row.significant else "no (empate)")
            lines.append(f"{row.rank:>5}  {row.method:<16}{row.votes:>7}  {gap:>10}  {flag}")
        lines.append(f"Grupos distinguibles: {self.num_groups}")
        return "\n".join(lines)


def rank_methods(design: StudyDesign) -> RankingReport:
    """Ordena por votos; un par adyacente es significativo si la diferencia >= R'"""
    if design.methods is not None:
        missing = [name for name in design.methods if name not in design.votes]
        if missing:
            raise StudyError(f"Faltan votos para los metodos: {missing}")
    if len(design.votes) != design.t:
        raise StudyError(f"Se esperaban votos para {design.t} metodos, hay {len(design.votes)}")

    threshold = significance_threshold(design)
    ordered = sorted(design.votes.items(), key=lambda item: (-item[1], item[0]))

    rows = []
    rank = 1
    for i, (method, votes) in enumerate(ordered):
        gap = significant = None
        if i + 1 < len(ordered):
            gap = votes - ordered[i + 1][1]
            significant = gap >= threshold
        rows.append(RankingRow(rank=rank, method=method, votes=votes, gap_to_next=gap, significant=significant))
        if significant:
            rank += 1

    report = RankingReport(rows=rows, threshold=threshold, design=design)
    logger.info(f"Ranking: {report.num_groups} grupos distinguibles con R'={threshold:.5f}")
    return report


def load_votes(path: Union[str, Path]) -> Dict[str, int]:
    """Agrega un CSV con columnas (method, participant, vote) a votos totales por metodo"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Archivo de votos no encontrado: {path}")
    df = pd.read_csv(path)
    required = {"method", "participant", "vote"}
    if not required.issubset(df.columns):
        raise StudyError(f"{path}: faltan columnas {sorted(required - set(df.columns))}")
    totals = df.groupby("method", sort=True)["vote"].sum()
    return {str(method): int(count) for method, count in totals.items()}


def design_from_votes(
    votes: Dict[str, int],
    m: int,
    alpha: float = 0.01,
    W: Optional[float] = None,
    critical_values: Optional[Sequence[Dict]] = None,
    comparisons_per_pair: int = 1,
) -> StudyDesign:
    """Arma el diseno; si W no se da, se busca en la tabla de valores criticos"""
    t = len(votes)
    if W is None:
        W = lookup_critical_value(t, alpha, critical_values or [])
    try:
        return StudyDesign(t=t, m=m, alpha=alpha, W=W, votes=votes, comparisons_per_pair=comparisons_per_pair)
    except ValidationError as e:
        raise StudyError(f"Diseno de estudio invalido: {e}") from e
