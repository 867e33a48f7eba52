"""
오픈월드 지표: Wilderness Impact, U-Recall, A-OSE

운영점 (WI, A-OSE 공통):
- 기지 라벨 검출을 클래스 구분 없이 신뢰도 내림차순으로 모아 VOC 방식 일대일 매칭
- 누적 기지 재현율이 recall_point에 처음 도달하는 접두부에서 평가
- 도달 불가 시 전체 목록(최대 재현율)에서 평가하고 플래그

WI = P_K / P_{K∪U} - 1
- P_{K∪U} = TP / N (미지 객체 위 검출도 오류)
- P_K = TP / (N - H) (미지 객체 위 FP 제외, 폐쇄 세계 정밀도)
- H: 접두부 FP 중 미지 객체와 IoU ≥ 0.5 인 검출 수
"""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

from ..common.errors import InvalidInputError
from ..world.scene import GroundTruth
from .detection import Detection, GtIndex, best_overlap, greedy_match, sort_detections

logger = logging.getLogger(__name__)


@dataclass
class OperatingPoint:
    """WI/A-OSE 운영점 진단 정보"""
    n_detections: int = 0          # 접두부 검출 수 N
    true_positives: int = 0        # TP
    wilderness_hits: int = 0       # H
    a_ose: int = 0
    recall_reached: float = 0.0
    confidence_threshold: Optional[float] = None
    recall_flagged: bool = False   # recall_point 미도달
    precision_flagged: bool = False  # TP = 0 (WI 0으로 정의)

    @property
    def precision_known_unknown(self) -> float:
        return self.true_positives / self.n_detections if self.n_detections else 0.0

    @property
    def precision_known(self) -> float:
        closed = self.n_detections - self.wilderness_hits
        return self.true_positives / closed if closed else 0.0

    @property
    def wilderness_impact(self) -> float:
        if self.true_positives == 0:
            return 0.0
        return self.wilderness_hits / (self.n_detections - self.wilderness_hits)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['precision_known'] = self.precision_known
        data['precision_known_unknown'] = self.precision_known_unknown
        return data


def split_objects(objects: GtIndex, known_ids: Iterable[int]):
    """숨은 객체 목록 → (기지 GT 색인, 미지 객체 색인)"""
    known = set(known_ids)
    known_gts = {sid: [o for o in items if o.class_id in known] for sid, items in objects.items()}
    unknown = {sid: [o for o in items if o.class_id not in known] for sid, items in objects.items()}
    return known_gts, unknown


def wilderness_impact_from_precisions(p_k: float, p_ku: float) -> float:
    """WI = P_K / P_{K∪U} - 1"""
    if p_ku <= 0:
        raise InvalidInputError(f"P_K∪U는 양수여야 합니다: {p_ku}")
    return p_k / p_ku - 1.0


def operating_point(
    detections: Sequence[Detection],
    objects: GtIndex,
    known_ids: Iterable[int],
    recall_point: float = 0.8,
    iou_threshold: float = 0.5,
) -> OperatingPoint:
    """기지 재현율 recall_point 운영점 계산

    Args:
        detections: 전체 검출 (UNKNOWN 라벨은 무시)
        objects: scene_id → 모든 객체 (숨은 정보, 기지/미지 포함)
        known_ids: 현재 기지 클래스
        recall_point: 목표 기지 재현율 (0,1]
        iou_threshold: 매칭 IoU

    Returns:
        OperatingPoint
    """
    if not 0.0 < recall_point <= 1.0:
        raise InvalidInputError(f"recall_point는 (0,1] 범위여야 합니다: {recall_point}")
    known_gts, unknown = split_objects(objects, known_ids)
    n_known_gt = sum(len(v) for v in known_gts.values())

    dets = [d for d in detections if not d.is_unknown]
    order = sort_detections(dets)
    flags = greedy_match(dets, order, known_gts, iou_threshold)

    # 접두부 길이
    cut = len(order)
    tp = 0
    reached = False
    for pos, is_tp in enumerate(flags):
        tp += is_tp
        if n_known_gt and tp / n_known_gt >= recall_point:
            cut = pos + 1
            reached = True
            break

    point = OperatingPoint(recall_flagged=not reached)
    for pos in range(cut):
        det = dets[order[pos]]
        point.n_detections += 1
        if flags[pos]:
            point.true_positives += 1

        unknown_boxes = [o.box for o in unknown.get(det.scene_id, [])]
        _, best_unknown = best_overlap(det.box, unknown_boxes)
        if not flags[pos] and best_unknown >= iou_threshold:
            point.wilderness_hits += 1

        # A-OSE: 최고 IoU 객체가 미지 (기지 우선)
        _, best_known = best_overlap(det.box, [g.box for g in known_gts.get(det.scene_id, [])])
        if best_unknown >= iou_threshold and best_unknown > best_known:
            point.a_ose += 1

    point.recall_reached = point.true_positives / n_known_gt if n_known_gt else 0.0
    if cut:
        point.confidence_threshold = dets[order[cut - 1]].confidence
    point.precision_flagged = point.true_positives == 0

    if point.recall_flagged:
        logger.debug(f"기지 재현율 {recall_point} 미도달, 최대 {point.recall_reached:.4f}에서 평가")
    return point


def wilderness_impact(
    detections: Sequence[Detection],
    objects: GtIndex,
    known_ids: Iterable[int],
    recall_point: float = 0.8,
    iou_threshold: float = 0.5,
) -> float:
    """기지 재현율 recall_point 에서의 WI (작을수록 좋음)"""
    return operating_point(detections, objects, known_ids, recall_point, iou_threshold).wilderness_impact


def a_ose(
    detections: Sequence[Detection],
    objects: GtIndex,
    known_ids: Iterable[int],
    recall_point: float = 0.8,
    iou_threshold: float = 0.5,
) -> int:
    """운영점 접두부에서 미지 객체 위 기지 라벨 검출 수"""
    return operating_point(detections, objects, known_ids, recall_point, iou_threshold).a_ose


def u_recall(
    detections: Sequence[Detection],
    unknown_objects: Mapping[int, Sequence[GroundTruth]],
    iou_threshold: float = 0.5,
) -> Optional[float]:
    """UNKNOWN 라벨 검출로 덮인 미지 객체 비율 (미지 객체가 없으면 None)"""
    total = sum(len(v) for v in unknown_objects.values())
    if total == 0:
        return None
    by_scene: Dict[int, list] = {}
    for d in detections:
        if d.is_unknown:
            by_scene.setdefault(d.scene_id, []).append(d.box)

    covered = 0
    for sid, objs in unknown_objects.items():
        boxes = by_scene.get(sid, [])
        for obj in objs:
            if best_overlap(obj.box, boxes)[1] >= iou_threshold:
                covered += 1
    return covered / total
