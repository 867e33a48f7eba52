"""
박스 연산 및 제안-GT 매칭

역할:
- 정규화 좌표계 축정렬 박스 (BBox)
- IoU 계산 (단건/행렬)
- 매칭/비매칭 제안 분할 (MatchPartition)

좌표는 [0,1] 닫힌 구간, x1 < x2, y1 < y2.
IoU = threshold 인 경우는 매칭으로 본다.
"""
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from ..common.errors import InvalidInputError

DEFAULT_IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class BBox:
    """정규화 좌표 박스 [x1, y1, x2, y2]"""
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise InvalidInputError(f"박스 좌표가 유한하지 않습니다: {coords}")
        if not all(0.0 <= c <= 1.0 for c in coords):
            raise InvalidInputError(f"박스 좌표가 [0,1] 범위를 벗어났습니다: {coords}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InvalidInputError(f"퇴화 박스 (면적 0 이하): {coords}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> 'BBox':
        x1, y1, x2, y2 = (float(v) for v in values)
        return cls(x1, y1, x2, y2)


def iou(a: BBox, b: BBox) -> float:
    """두 박스의 IoU (교집합 면적 / 합집합 면적)"""
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def boxes_to_array(boxes: Sequence[BBox]) -> np.ndarray:
    """박스 리스트 → (n, 4) 배열"""
    if not boxes:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array([b.as_tuple() for b in boxes], dtype=np.float64)


def pairwise_iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(n,4) × (m,4) → (n,m) IoU 행렬

    iou()와 동일한 연산 순서를 사용하여 단건 계산과 같은 값을 낸다.
    """
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    positive = (iw > 0.0) & (ih > 0.0)
    inter = np.where(positive, iw * ih, 0.0)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.where(positive, inter / union, 0.0)


@dataclass
class MatchPartition:
    """매칭/비매칭 제안 분할

    matched: (제안 인덱스, GT 인덱스, IoU)
    unmatched: 제안 인덱스 (오름차순)
    """
    matched: List[Tuple[int, int, float]] = field(default_factory=list)
    unmatched: List[int] = field(default_factory=list)

    @property
    def matched_indices(self) -> List[int]:
        return [m[0] for m in self.matched]

    def __len__(self) -> int:
        return len(self.matched) + len(self.unmatched)


def match_proposals(
    proposals: Sequence[BBox],
    gts: Sequence[BBox],
    threshold: float = DEFAULT_IOU_THRESHOLD,
) -> MatchPartition:
    """제안을 GT 대비 매칭/비매칭으로 분할

    Args:
        proposals: 제안 박스 리스트
        gts: GT 박스 리스트 (알려진 클래스 주석)
        threshold: 매칭 IoU 임계값 (0,1)

    Returns:
        MatchPartition (최대 IoU ≥ threshold 이면 매칭, 동점은 낮은 GT 인덱스)
    """
    if not 0.0 < threshold < 1.0:
        raise InvalidInputError(f"IoU 임계값은 (0,1) 범위여야 합니다: {threshold}")

    partition = MatchPartition()
    if not gts:
        partition.unmatched = list(range(len(proposals)))
        return partition

    overlaps = pairwise_iou(boxes_to_array(proposals), boxes_to_array(gts))
    for i in range(len(proposals)):
        j = int(np.argmax(overlaps[i]))
        best = float(overlaps[i, j])
        if best >= threshold:
            partition.matched.append((i, j, best))
        else:
            partition.unmatched.append(i)
    return partition
