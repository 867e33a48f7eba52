"""
태스크별 평가 리포트

- build_report: 검출 목록 + 숨은 객체 → EvalReport
- EvalReport.to_dict: JSON 리포트 (정렬 키, 시간 정보 없음)
- EvalReport.to_row: metrics.csv 한 행
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from ..common.config import MetricsConfig
from ..world.scene import Scene
from .detection import Detection, class_aps, mean_ap
from .open_world import OperatingPoint, operating_point, split_objects, u_recall

logger = logging.getLogger(__name__)

ROW_COLUMNS = [
    'task', 'selector', 'map_previous', 'map_current', 'map_both',
    'wi', 'u_recall', 'a_ose', 'n_unknown_objects', 'n_unknown_detections',
]

NOTES = {
    'wi': "WI = P_K/P_{K∪U} - 1 at the first confidence prefix where pooled known recall "
          "reaches recall_point (VOC greedy matching); P_K excludes false positives on "
          "unknown objects.",
    'a_ose': "A-OSE counts known-labelled detections in the same prefix whose best-overlapping "
             "object (known wins ties) is an unknown object with IoU >= 0.5.",
}


@dataclass
class EvalReport:
    """태스크 × 선택기 평가 결과

    map_previous는 Task 1에서 None, wi/u_recall/a_ose는 미지 객체가 없으면 None.
    """
    task_id: int
    selector: str
    per_class_ap: Dict[int, float] = field(default_factory=dict)
    map_previous: Optional[float] = None
    map_current: Optional[float] = None
    map_both: Optional[float] = None
    wi: Optional[float] = None
    u_recall: Optional[float] = None
    a_ose: Optional[int] = None
    n_unknown_objects: int = 0
    n_unknown_detections: int = 0
    operating_point: Optional[OperatingPoint] = None
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'task': self.task_id,
            'selector': self.selector,
            'per_class_ap': {str(k): v for k, v in sorted(self.per_class_ap.items())},
            'map_previous': self.map_previous,
            'map_current': self.map_current,
            'map_both': self.map_both,
            'wi': self.wi,
            'u_recall': self.u_recall,
            'a_ose': self.a_ose,
            'n_unknown_objects': self.n_unknown_objects,
            'n_unknown_detections': self.n_unknown_detections,
            'operating_point': self.operating_point.to_dict() if self.operating_point else None,
            'flags': list(self.flags),
            'notes': NOTES,
        }

    def to_row(self) -> Dict[str, Any]:
        return {
            'task': self.task_id,
            'selector': self.selector,
            'map_previous': self.map_previous,
            'map_current': self.map_current,
            'map_both': self.map_both,
            'wi': self.wi,
            'u_recall': self.u_recall,
            'a_ose': self.a_ose,
            'n_unknown_objects': self.n_unknown_objects,
            'n_unknown_detections': self.n_unknown_detections,
        }

    def save_json(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write('\n')


def build_report(
    task_id: int,
    selector: str,
    detections: Sequence[Detection],
    scenes: Sequence[Scene],
    known_ids: Iterable[int],
    previous_ids: Iterable[int],
    current_ids: Iterable[int],
    cfg: Optional[MetricsConfig] = None,
) -> EvalReport:
    """평가 리포트 생성

    Args:
        task_id: 태스크 번호
        selector: 선택기 이름 (topk, plu, oracle)
        detections: 기지 + UNKNOWN 검출
        scenes: 평가 씬 (숨은 객체 포함)
        known_ids: K^t
        previous_ids: 이전 태스크까지 도입된 클래스
        current_ids: 이번 태스크에 도입된 클래스
        cfg: 지표 설정
    """
    cfg = cfg or MetricsConfig()
    known = sorted(set(known_ids))
    previous = sorted(set(previous_ids))
    current = sorted(set(current_ids))

    objects = {s.scene_id: list(s.objects) for s in scenes}
    known_gts, unknown = split_objects(objects, known)

    aps = class_aps(detections, known_gts, known, cfg.iou_threshold, cfg.ap_method)
    report = EvalReport(task_id=task_id, selector=selector)
    report.per_class_ap = {c: a.ap for c, a in aps.items() if not a.flagged}
    report.map_previous = mean_ap(aps, previous) if previous else None
    report.map_current = mean_ap(aps, current)
    report.map_both = mean_ap(aps, known)
    report.flags.extend(f"class {c}: no ground truth, AP excluded" for c, a in aps.items() if a.flagged)

    report.n_unknown_objects = sum(len(v) for v in unknown.values())
    report.n_unknown_detections = sum(1 for d in detections if d.is_unknown)
    if report.n_unknown_objects:
        point = operating_point(detections, objects, known, cfg.recall_point, cfg.iou_threshold)
        report.operating_point = point
        report.wi = point.wilderness_impact
        report.a_ose = point.a_ose
        report.u_recall = u_recall(detections, unknown, cfg.iou_threshold)
        if point.recall_flagged:
            report.flags.append(
                f"known recall {cfg.recall_point} unreachable; evaluated at {point.recall_reached:.4f}"
            )
        if point.precision_flagged:
            report.flags.append("no known true positives at the operating point; WI defined as 0")

    logger.info(
        f"Task {task_id} [{selector}] mAP={_fmt(report.map_both)} WI={_fmt(report.wi)} "
        f"U-Recall={_fmt(report.u_recall)} A-OSE={report.a_ose}"
    )
    return report


def _fmt(value: Optional[float]) -> str:
    return '-' if value is None else f"{value:.4f}"
