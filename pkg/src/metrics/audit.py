"""
생성 데이터셋 감사

역할:
- 주석 검열: GT에 기지 밖 클래스가 없는지
- 하위 10% 게이트: 비매칭 제안 중 objectness 최하위 10%가 배경인 비율 (기준 ≥ 0.99)
- 배경 격리율: 배경 제안 중 모든 객체와 IoU < 0.5 인 비율
- 편향 감사: top-k 미지 재현율 vs 오라클 FG/BG 분할, top-k 배경 오염률
- objectness 편향 격차: shift 작은 미지 vs shift 큰 미지의 평균 objectness
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from ..plu.selection import OracleScorer, UnknownSelection, plu_select, topk_select
from ..world.geometry import DEFAULT_IOU_THRESHOLD, boxes_to_array, match_proposals, pairwise_iou
from ..world.scene import Scene

logger = logging.getLogger(__name__)

BOTTOM_DECILE_GATE = 0.99


def censorship_violations(scenes: Sequence[Scene], known_ids: Iterable[int]) -> int:
    """GT 중 기지 밖 클래스 수"""
    known = set(known_ids)
    return sum(1 for s in scenes for g in s.gt if g.class_id not in known)


def bottom_decile_bg_rate(scenes: Sequence[Scene], threshold: float = DEFAULT_IOU_THRESHOLD) -> float:
    """씬별 비매칭 제안 objectness 하위 10% (올림) 중 배경 비율 (전체 합산)"""
    total = bg = 0
    for scene in scenes:
        partition = match_proposals(scene.proposal_boxes, scene.gt_boxes, threshold)
        unmatched = sorted(partition.unmatched, key=lambda i: (scene.objectness[i], i))
        n = int(math.ceil(0.1 * len(unmatched)))
        for i in unmatched[:n]:
            total += 1
            bg += not scene.proposals[i].truth.is_foreground
    return bg / total if total else 1.0


def background_isolation_rate(scenes: Sequence[Scene], threshold: float = DEFAULT_IOU_THRESHOLD) -> float:
    """배경 제안 중 모든 객체와 최대 IoU < threshold 인 비율"""
    total = isolated = 0
    for scene in scenes:
        objects = boxes_to_array([o.box for o in scene.objects])
        for p in scene.proposals:
            if p.truth.is_foreground:
                continue
            total += 1
            if objects.shape[0] == 0 or pairwise_iou(boxes_to_array([p.box]), objects).max() < threshold:
                isolated += 1
    return isolated / total if total else 1.0


def objectness_bias_gap(
    scenes: Sequence[Scene],
    shifts: Mapping[int, float],
    known_ids: Iterable[int],
    near: float = 0.7,
    far: float = 1.5,
) -> Optional[float]:
    """(shift ≤ near 미지 FG 평균 objectness) - (shift ≥ far 미지 FG 평균 objectness)"""
    known = set(known_ids)
    near_scores, far_scores = [], []
    for scene in scenes:
        for p in scene.proposals:
            cid = p.truth.class_id
            if not p.truth.is_foreground or cid in known:
                continue
            if shifts[cid] <= near:
                near_scores.append(p.objectness)
            elif shifts[cid] >= far:
                far_scores.append(p.objectness)
    if not near_scores or not far_scores:
        return None
    return float(np.mean(near_scores) - np.mean(far_scores))


def selection_unknown_recall(
    scenes: Sequence[Scene],
    selections: Sequence[UnknownSelection],
    known_ids: Iterable[int],
    threshold: float = DEFAULT_IOU_THRESHOLD,
) -> float:
    """선택된 제안 박스가 덮는 미지 객체 비율"""
    known = list(known_ids)
    total = covered = 0
    for scene, sel in zip(scenes, selections):
        unknown = scene.unknown_objects(known)
        total += len(unknown)
        if not unknown or not sel.chosen:
            continue
        chosen = boxes_to_array([scene.proposals[i].box for i in sel.chosen])
        overlaps = pairwise_iou(boxes_to_array([o.box for o in unknown]), chosen)
        covered += int(np.sum(overlaps.max(axis=1) >= threshold))
    return covered / total if total else 0.0


def background_contamination(scenes: Sequence[Scene], selections: Sequence[UnknownSelection]) -> float:
    """선택된 제안 중 배경 비율"""
    total = bg = 0
    for scene, sel in zip(scenes, selections):
        for i in sel.chosen:
            total += 1
            bg += not scene.proposals[i].truth.is_foreground
    return bg / total if total else 0.0


@dataclass
class BiasAudit:
    """top-k vs 오라클 비교"""
    k: int
    topk_recall: float
    oracle_recall: float
    topk_contamination: float

    @property
    def biased(self) -> bool:
        """top-k 재현율이 오라클보다 엄격히 낮음"""
        return self.topk_recall < self.oracle_recall

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['biased'] = self.biased
        return data


def bias_audit(scenes: Sequence[Scene], known_ids: Iterable[int], k: int) -> BiasAudit:
    """top-k 선택과 오라클 FG/BG 분할의 미지 재현율 비교"""
    known = sorted(set(known_ids))
    oracle = OracleScorer(known)
    topk_sel, oracle_sel = [], []
    for scene in scenes:
        partition = match_proposals(scene.proposal_boxes, scene.gt_boxes)
        topk_sel.append(topk_select(scene, partition, k))
        oracle_sel.append(plu_select(scene, partition, oracle))
    return BiasAudit(
        k=k,
        topk_recall=selection_unknown_recall(scenes, topk_sel, known),
        oracle_recall=selection_unknown_recall(scenes, oracle_sel, known),
        topk_contamination=background_contamination(scenes, topk_sel),
    )


def dataset_audit(scenes: Sequence[Scene], known_ids: Iterable[int], k: int) -> Dict[str, Any]:
    """생성 직후 감사 묶음 (cmd_generate 요약용)"""
    known = sorted(set(known_ids))
    decile = bottom_decile_bg_rate(scenes)
    result = {
        'n_scenes': len(scenes),
        'censorship_violations': censorship_violations(scenes, known),
        'bottom_decile_bg_rate': decile,
        'bottom_decile_gate': decile >= BOTTOM_DECILE_GATE,
        'background_isolation_rate': background_isolation_rate(scenes),
        'bias': bias_audit(scenes, known, k).to_dict(),
    }
    status = '통과' if result['bottom_decile_gate'] else '실패'
    logger.info(
        f"데이터셋 감사: 하위 10% 배경 비율={decile:.4f} (게이트 {status}), "
        f"검열 위반={result['censorship_violations']}, top-k 오염률={result['bias']['topk_contamination']:.4f}"
    )
    return result
