"""
검출 평가: PR 곡선, AP, mAP (IoU 0.5)

- VOC 방식 탐욕 일대일 매칭: 신뢰도 내림차순, 검출별 최고 IoU GT를 차지
- 이미 차지된 GT에 대한 중복 검출은 FP
- AP: all_point (정밀도 포락선 면적) 또는 eleven_point (VOC2007)
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..common.errors import InvalidInputError
from ..world.geometry import BBox, boxes_to_array, pairwise_iou
from ..world.scene import GroundTruth

logger = logging.getLogger(__name__)

UNKNOWN_LABEL = -1

GtIndex = Mapping[int, Sequence[GroundTruth]]


@dataclass(frozen=True)
class Detection:
    """검출 1건 (label = 기지 클래스 ID 또는 UNKNOWN_LABEL)"""
    scene_id: int
    label: int
    box: BBox
    confidence: float

    def __post_init__(self):
        if not (math.isfinite(self.confidence) and 0.0 <= self.confidence <= 1.0):
            raise InvalidInputError(f"신뢰도는 [0,1] 유한값이어야 합니다: {self.confidence}")

    @property
    def is_unknown(self) -> bool:
        return self.label == UNKNOWN_LABEL


def sort_detections(detections: Sequence[Detection]) -> List[int]:
    """정렬 순서 (신뢰도 내림차순, scene_id, 입력 순서)"""
    return sorted(range(len(detections)),
                  key=lambda i: (-detections[i].confidence, detections[i].scene_id, i))


def best_overlap(box: BBox, candidates: Sequence[BBox]) -> Tuple[int, float]:
    """후보 중 최고 IoU (동점은 낮은 인덱스), 후보가 없으면 (-1, 0.0)"""
    if not candidates:
        return -1, 0.0
    overlaps = pairwise_iou(boxes_to_array([box]), boxes_to_array(candidates))[0]
    j = int(np.argmax(overlaps))
    return j, float(overlaps[j])


def greedy_match(
    detections: Sequence[Detection],
    order: Sequence[int],
    gts: GtIndex,
    iou_threshold: float = 0.5,
) -> List[bool]:
    """정렬 순서대로 검출별 TP 여부 (같은 클래스 GT만 대상)

    Returns:
        order와 같은 길이의 TP 플래그 리스트
    """
    claimed: Dict[Tuple[int, int], set] = defaultdict(set)
    by_scene_class: Dict[Tuple[int, int], List[BBox]] = {}
    flags = []
    for i in order:
        det = detections[i]
        key = (det.scene_id, det.label)
        if key not in by_scene_class:
            by_scene_class[key] = [g.box for g in gts.get(det.scene_id, []) if g.class_id == det.label]
        j, best = best_overlap(det.box, by_scene_class[key])
        if j >= 0 and best >= iou_threshold and j not in claimed[key]:
            claimed[key].add(j)
            flags.append(True)
        else:
            flags.append(False)
    return flags


def count_gt(gts: GtIndex, class_id: int) -> int:
    return sum(1 for items in gts.values() for g in items if g.class_id == class_id)


def pr_curve(
    detections: Sequence[Detection],
    gts: GtIndex,
    class_id: int,
    iou_thresh: float = 0.5,
) -> List[Tuple[float, float]]:
    """클래스별 (precision, recall) 점 목록

    Args:
        detections: 전체 검출 (class_id 라벨만 사용)
        gts: scene_id → GT 목록
        class_id: 평가 클래스
        iou_thresh: TP 판정 IoU

    Returns:
        신뢰도 순 누적 (precision, recall). 해당 클래스 GT가 없으면 빈 리스트
    """
    n_gt = count_gt(gts, class_id)
    if n_gt == 0:
        return []
    dets = [d for d in detections if d.label == class_id]
    order = sort_detections(dets)
    flags = greedy_match(dets, order, gts, iou_thresh)

    points = []
    tp = fp = 0
    for is_tp in flags:
        if is_tp:
            tp += 1
        else:
            fp += 1
        points.append((tp / (tp + fp), tp / n_gt))
    return points


def average_precision(curve: Sequence[Tuple[float, float]], method: str = 'all_point') -> float:
    """PR 곡선 → AP

    all_point: 재현율별 정밀도를 그 이상 재현율의 최대 정밀도로 대체한 뒤 적분
    eleven_point: 재현율 0, 0.1, ..., 1.0 에서의 포락선 평균
    """
    if not curve:
        return 0.0
    prec = np.array([p for p, _ in curve], dtype=np.float64)
    rec = np.array([r for _, r in curve], dtype=np.float64)

    if method == 'eleven_point':
        ap = 0.0
        for t in np.arange(0.0, 1.1, 0.1):
            p = prec[rec >= t - 1e-12].max() if np.any(rec >= t - 1e-12) else 0.0
            ap += p / 11.0
        return float(ap)
    if method != 'all_point':
        raise InvalidInputError(f"알 수 없는 AP 방식: {method}")

    mrec = np.concatenate(([0.0], rec, [1.0]))
    mpre = np.concatenate(([0.0], prec, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    idx = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]))


@dataclass
class ClassAP:
    """클래스별 AP 결과"""
    class_id: int
    ap: float
    n_gt: int
    n_detections: int

    @property
    def flagged(self) -> bool:
        """GT 없음 (AP 0으로 정의, mAP에서 제외)"""
        return self.n_gt == 0


def class_aps(
    detections: Sequence[Detection],
    gts: GtIndex,
    class_ids: Iterable[int],
    iou_thresh: float = 0.5,
    method: str = 'all_point',
) -> Dict[int, ClassAP]:
    """클래스별 AP"""
    result = {}
    for cid in sorted(set(class_ids)):
        curve = pr_curve(detections, gts, cid, iou_thresh)
        n_gt = count_gt(gts, cid)
        if n_gt == 0:
            logger.debug(f"클래스 {cid}: GT 없음, AP=0 (mAP 제외)")
        result[cid] = ClassAP(
            class_id=cid,
            ap=average_precision(curve, method),
            n_gt=n_gt,
            n_detections=sum(1 for d in detections if d.label == cid),
        )
    return result


def mean_ap(aps: Mapping[int, ClassAP], class_ids: Optional[Iterable[int]] = None) -> Optional[float]:
    """GT가 있는 클래스의 AP 비가중 평균 (대상 클래스가 없으면 None)"""
    ids = set(aps) if class_ids is None else set(class_ids)
    values = [aps[c].ap for c in sorted(ids) if c in aps and not aps[c].flagged]
    if not values:
        return None
    return float(np.mean(values))
