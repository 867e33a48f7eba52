"""
평가 스테이지

선택기별로 평가 씬의 비매칭 제안에서 '미지'를 고르고,
나머지 제안은 기지 검출 헤드로 분류해 EvalReport를 만든다.
"""
from typing import Any, Dict, List, Sequence, Tuple

from ...common.config import RunConfig
from ...metrics.detection import Detection
from ...metrics.report import EvalReport, build_report
from ...plu.detector import KnownHead
from ...plu.selection import (
    OracleScorer, ProposalScorer, UnknownSelection, plu_select, resolve_k, selections_to_frame, topk_select,
)
from ...world.geometry import match_proposals
from ...world.scene import Scene
from ..tasks import TaskSplit
from .base import BaseStage

SELECTORS = ('topk', 'plu')


def select_unknowns(
    scenes: Sequence[Scene],
    selector: str,
    cfg: RunConfig,
    k: int,
    scorer: ProposalScorer,
) -> List[UnknownSelection]:
    """씬별 미지 선택 (평가 경로: GT는 매칭 분할에만 사용)"""
    result = []
    for scene in scenes:
        partition = match_proposals(scene.proposal_boxes, scene.gt_boxes, cfg.plu.iou_threshold)
        if selector == 'topk':
            result.append(topk_select(scene, partition, k))
        else:
            result.append(plu_select(scene, partition, scorer, cfg.selection.fg_threshold))
    return result


def evaluate_selector(
    scenes: Sequence[Scene],
    task: TaskSplit,
    head: KnownHead,
    selector: str,
    cfg: RunConfig,
    k: int,
    scorer: ProposalScorer,
) -> Tuple[EvalReport, List[UnknownSelection]]:
    """선택기 1개 평가"""
    selections = select_unknowns(scenes, selector, cfg, k, scorer)
    detections: List[Detection] = []
    for scene, sel in zip(scenes, selections):
        detections.extend(head.detect(scene, sel))
    report = build_report(
        task.task_id, selector, detections, scenes,
        known_ids=task.known, previous_ids=task.previous, current_ids=task.introduced,
        cfg=cfg.metrics,
    )
    return report, selections


class EvaluateStage(BaseStage):
    """평가 스테이지 (top-k, PLU 나란히)"""

    STAGE_NAME = 'EvaluateStage'

    def __init__(self, *args, selectors: Sequence[str] = SELECTORS, **kwargs):
        super().__init__(*args, **kwargs)
        self.selectors = tuple(selectors)

    def process(self) -> Dict[str, Any]:
        state = self.state
        k = resolve_k(self.config.selection.k, self.data.mean_unknown_objects)
        reports: Dict[str, EvalReport] = {}
        for selector in self.selectors:
            scorer = OracleScorer(self.task.known) if selector == 'oracle' else state.predictor
            report, selections = evaluate_selector(
                self.data.test, self.task, state.head, selector, self.config, k, scorer,
            )
            reports[selector] = report
            state.selections[(self.task.task_id, selector)] = selections_to_frame(selections, selector)

        state.reports[self.task.task_id] = reports
        return {
            'status': 'success',
            'k': k,
            'selectors': list(reports),
        }
