"""
미지 의사 라벨 선택기

- topk_select: 비매칭 제안 중 objectness 상위 k개 (기준선)
- plu_select: 점수기(φ)의 FG 확률 > fg_threshold 인 비매칭 제안 전부
- OracleScorer: 숨은 태그로 미지 FG를 1, 나머지를 0으로 주는 상한 점수기
"""
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Protocol, Sequence, Union

import numpy as np
import pandas as pd

from ..common.errors import InvalidInputError
from ..world.geometry import MatchPartition
from ..world.scene import Proposal, Scene

logger = logging.getLogger(__name__)

SELECTION_COLUMNS = ['scene_id', 'proposal_index', 'selector', 'score']


class ProposalScorer(Protocol):
    """제안 목록 → FG 점수 배열"""

    def score_proposals(self, proposals: Sequence[Proposal]) -> np.ndarray:
        ...


@dataclass
class UnknownSelection:
    """씬 1장의 '미지' 의사 라벨 선택 결과"""
    scene_id: int
    chosen: List[int] = field(default_factory=list)
    scores: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.chosen)


def topk_select(scene: Scene, partition: MatchPartition, k: int) -> UnknownSelection:
    """objectness 상위 min(k, |비매칭|)개 (동점은 낮은 인덱스)"""
    if k < 0:
        raise InvalidInputError(f"k는 0 이상이어야 합니다: {k}")
    ranked = sorted(partition.unmatched, key=lambda i: (-scene.objectness[i], i))[:k]
    return UnknownSelection(
        scene_id=scene.scene_id,
        chosen=ranked,
        scores=[float(scene.objectness[i]) for i in ranked],
    )


def plu_select(
    scene: Scene,
    partition: MatchPartition,
    scorer: ProposalScorer,
    fg_threshold: float = 0.5,
) -> UnknownSelection:
    """FG 확률 > fg_threshold 인 비매칭 제안 (선택 수는 씬마다 다름)"""
    if not 0.0 < fg_threshold < 1.0:
        raise InvalidInputError(f"fg_threshold는 (0,1) 범위여야 합니다: {fg_threshold}")
    unmatched = list(partition.unmatched)
    if not unmatched:
        return UnknownSelection(scene_id=scene.scene_id)
    probs = scorer.score_proposals([scene.proposals[i] for i in unmatched])
    chosen = [(i, float(p)) for i, p in zip(unmatched, probs) if p > fg_threshold]
    return UnknownSelection(
        scene_id=scene.scene_id,
        chosen=[i for i, _ in chosen],
        scores=[p for _, p in chosen],
    )


class OracleScorer:
    """숨은 태그 기반 점수기 (미지 클래스 FG = 1.0, 그 외 0.0)"""

    def __init__(self, known_ids: Iterable[int]):
        self.known_ids = frozenset(known_ids)

    def score_proposals(self, proposals: Sequence[Proposal]) -> np.ndarray:
        return np.array([
            1.0 if p.truth.is_foreground and p.truth.class_id not in self.known_ids else 0.0
            for p in proposals
        ], dtype=np.float64)


def resolve_k(k: Union[str, int], mean_unknown_objects: float) -> int:
    """'auto' → 씬당 평균 미지 객체 수 (반올림)"""
    if k == 'auto':
        return int(np.floor(mean_unknown_objects + 0.5))
    return int(k)


def selections_to_frame(selections: Sequence[UnknownSelection], selector: str) -> pd.DataFrame:
    """선택 결과 → (scene_id, proposal_index, selector, score) 표"""
    rows = [
        {'scene_id': s.scene_id, 'proposal_index': i, 'selector': selector, 'score': score}
        for s in selections
        for i, score in zip(s.chosen, s.scores)
    ]
    return pd.DataFrame(rows, columns=SELECTION_COLUMNS)
