"""
소스/타깃 도메인 구성 및 의사 라벨

역할:
- 소스 도메인: GT별 최고 IoU 제안 특징 (FG=1) + objectness 최하위 비매칭 제안 (BG=0)
- 타깃 도메인: 나머지 비매칭 제안에서 |source|개 무작위 비복원 추출
- FixMatch 의사 라벨: softmax 최대값 > ε 인 경우만 argmax 채택
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..common.config import PluConfig
from ..common.errors import InvalidInputError
from ..common.rng import SeedLike, as_generator
from ..world.geometry import MatchPartition, boxes_to_array, pairwise_iou
from ..world.scene import Scene
from .label_audit import LabelAudit
from .predictor import FG_INDEX, BG_INDEX, softmax

logger = logging.getLogger(__name__)


@dataclass
class DomainBatch:
    """씬 1장의 소스(라벨) / 타깃(무라벨) 집합

    *_indices는 씬 제안 목록으로의 역참조다.
    """
    scene_id: int
    source_features: np.ndarray
    source_labels: np.ndarray
    source_indices: np.ndarray
    target_features: np.ndarray
    target_indices: np.ndarray

    @property
    def n_source(self) -> int:
        return int(len(self.source_labels))

    @property
    def n_target(self) -> int:
        return int(len(self.target_indices))

    @property
    def n_fg(self) -> int:
        return int(np.sum(self.source_labels == FG_INDEX))

    @property
    def n_bg(self) -> int:
        return int(np.sum(self.source_labels == BG_INDEX))

    @property
    def is_empty(self) -> bool:
        return self.n_source == 0

    @classmethod
    def empty(cls, scene_id: int, d: int) -> 'DomainBatch':
        no_idx = np.zeros(0, dtype=np.int64)
        return cls(scene_id, np.zeros((0, d)), no_idx.copy(), no_idx.copy(), np.zeros((0, d)), no_idx.copy())


def round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))


def form_domains(
    scene: Scene,
    partition: MatchPartition,
    cfg: Optional[PluConfig] = None,
    seed: SeedLike = 0,
    audit: Optional[LabelAudit] = None,
) -> DomainBatch:
    """씬 1장의 DomainBatch 구성

    Args:
        scene: 씬
        partition: 이 씬 GT 대비 매칭 분할
        cfg: PLU 설정 (fg_bg_ratio 사용)
        seed: 타깃 추출 시드
        audit: 주석 읽기 감사 (학습 경로)

    Returns:
        DomainBatch (GT가 없으면 빈 배치)
    """
    cfg = cfg or PluConfig()
    gt = audit.read_gt(scene) if audit is not None else list(scene.gt)
    d = scene.features.shape[1] if scene.proposals else 0
    if not gt or not scene.proposals:
        return DomainBatch.empty(scene.scene_id, d)

    # 1. 소스 FG: GT별 최고 IoU 제안 (동점은 낮은 제안 인덱스)
    overlaps = pairwise_iou(boxes_to_array([g.box for g in gt]), scene.proposal_box_array)
    fg_idx = [int(np.argmax(row)) for row in overlaps]
    fg_set = set(fg_idx)

    # 2. 소스 BG: objectness 최하위 비매칭 제안
    pool = [i for i in partition.unmatched if i not in fg_set]
    pool.sort(key=lambda i: (scene.objectness[i], i))
    n_bg = min(round_half_up(cfg.fg_bg_ratio * len(fg_idx)), len(pool))
    bg_idx = pool[:n_bg]

    # 3. 타깃: 나머지 비매칭 제안에서 비복원 추출
    remaining = sorted(pool[n_bg:])
    n_source = len(fg_idx) + len(bg_idx)
    n_target = min(n_source, len(remaining))
    rng = as_generator(seed)
    if n_target > 0:
        target_idx = np.sort(rng.choice(np.asarray(remaining, dtype=np.int64), size=n_target, replace=False))
    else:
        target_idx = np.zeros(0, dtype=np.int64)

    source_idx = np.asarray(fg_idx + bg_idx, dtype=np.int64)
    labels = np.asarray([FG_INDEX] * len(fg_idx) + [BG_INDEX] * len(bg_idx), dtype=np.int64)
    return DomainBatch(
        scene_id=scene.scene_id,
        source_features=scene.features[source_idx],
        source_labels=labels,
        source_indices=source_idx,
        target_features=scene.features[target_idx] if n_target else np.zeros((0, d)),
        target_indices=target_idx.astype(np.int64),
    )


def pseudo_label(weak_logits: np.ndarray, epsilon: float) -> Optional[int]:
    """약한 뷰 로짓의 의사 라벨 (max softmax > ε 일 때만)"""
    labels, mask = pseudo_labels(np.asarray(weak_logits, dtype=np.float64)[None, :], epsilon)
    return int(labels[0]) if mask[0] else None


def pseudo_labels(weak_logits: np.ndarray, epsilon: float) -> Tuple[np.ndarray, np.ndarray]:
    """배치 의사 라벨

    Returns:
        (argmax 라벨, 마스크). 마스크가 False인 샘플은 L_T에서 제외
    """
    if not 0.5 < epsilon < 1.0:
        raise InvalidInputError(f"epsilon은 (0.5, 1) 범위여야 합니다: {epsilon}")
    weak_logits = np.atleast_2d(weak_logits)
    if weak_logits.shape[0] == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=bool)
    probs = softmax(weak_logits)
    return probs.argmax(axis=1).astype(np.int64), probs.max(axis=1) > epsilon
