"""
기지 클래스 검출 헤드

역할:
- MLP 분류기 (|K^t|+1 로짓, 0 = 배경)
- RCNN 방식 샘플링: 매칭 제안 → GT 클래스, 비매칭 제안 → 배경 (FG:BG = 1:bg_ratio)
- 태스크마다 출력층 확장 (기존 클래스 로짓 유지)
- 추론: 미지로 선택되지 않은 제안마다 최고 기지 클래스 검출 1건
"""
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..common.config import DetectorConfig
from ..common.errors import DataError
from ..common.rng import STREAM_DETECTOR, as_generator, derive_seed
from ..metrics.detection import UNKNOWN_LABEL, Detection
from ..world.geometry import DEFAULT_IOU_THRESHOLD, match_proposals
from ..world.scene import Scene
from .label_audit import LabelAudit
from .predictor import OptimState, Predictor, init_predictor, sgd_step, softmax
from .selection import UnknownSelection

logger = logging.getLogger(__name__)


class KnownHead:
    """기지 클래스 분류 헤드

    Args:
        d: 특징 차원
        cfg: 검출 헤드 설정
        seed: 초기화 시드
    """

    def __init__(self, d: int, cfg: Optional[DetectorConfig] = None, seed: int = 0):
        self.cfg = cfg or DetectorConfig()
        self.seed = seed
        self.class_ids: List[int] = []
        self.predictor: Predictor = init_predictor(d, self.cfg.h1, self.cfg.h2, seed, n_out=1)

    @property
    def n_classes(self) -> int:
        return len(self.class_ids)

    def add_classes(self, class_ids: Iterable[int]) -> List[int]:
        """새 클래스 로짓 추가 (이미 있으면 무시)"""
        new = [c for c in sorted(set(class_ids)) if c not in self.class_ids]
        if new:
            self.predictor.expand_outputs(len(new), derive_seed(self.seed, STREAM_DETECTOR, len(self.class_ids)))
            self.class_ids.extend(new)
            logger.debug(f"검출 헤드 클래스 추가: {new} (총 {self.n_classes})")
        return new

    def training_pool(
        self,
        scenes: Sequence[Scene],
        seed: int,
        audit: Optional[LabelAudit] = None,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """(특징, 라벨) 학습 풀 구성"""
        label_of = {c: i + 1 for i, c in enumerate(self.class_ids)}
        rng = as_generator(seed)
        xs, ys = [], []
        for scene in scenes:
            gt = audit.read_gt(scene) if audit is not None else list(scene.gt)
            partition = match_proposals(scene.proposal_boxes, [g.box for g in gt], DEFAULT_IOU_THRESHOLD)
            fg = [(i, label_of[gt[j].class_id]) for i, j, _ in partition.matched if gt[j].class_id in label_of]
            n_bg = min(len(partition.unmatched), int(np.ceil(self.cfg.bg_ratio * max(len(fg), 1))))
            bg = rng.choice(np.asarray(partition.unmatched, dtype=np.int64), size=n_bg, replace=False) \
                if n_bg else []
            for i, label in fg:
                xs.append(scene.proposals[i].feature)
                ys.append(label)
            for i in bg:
                xs.append(scene.proposals[int(i)].feature)
                ys.append(0)
        if not xs:
            return np.zeros((0, self.predictor.d)), np.zeros(0, dtype=np.int64)
        return np.vstack(xs), np.asarray(ys, dtype=np.int64)

    def train(
        self,
        scenes: Sequence[Scene],
        seed: int,
        audit: Optional[LabelAudit] = None,
        n_samples: Optional[int] = None,
    ) -> Dict[str, float]:
        """미니배치 SGD 학습

        Returns:
            {'steps', 'samples', 'final_loss'}
        """
        budget = self.cfg.train_samples if n_samples is None else n_samples
        if budget <= 0 or not scenes:
            return {'steps': 0, 'samples': 0, 'final_loss': 0.0}

        x, y = self.training_pool(scenes, derive_seed(seed, STREAM_DETECTOR, 0), audit)
        if len(y) == 0:
            raise DataError("검출 헤드 학습 샘플이 없습니다")

        opt = OptimState.for_predictor(self.predictor, self.cfg.lr, self.cfg.momentum)
        consumed, step, epoch, loss = 0, 0, 0, 0.0
        while consumed < budget:
            order = as_generator(derive_seed(seed, STREAM_DETECTOR, epoch + 1)).permutation(len(y))
            for start in range(0, len(order), self.cfg.batch_size):
                idx = order[start:start + self.cfg.batch_size]
                loss, grads = self.predictor.backward(x[idx], y[idx])
                sgd_step(self.predictor, grads, opt, step=step)
                consumed += len(idx)
                step += 1
                if consumed >= budget:
                    break
            epoch += 1

        logger.info(f"검출 헤드 학습 완료: 클래스 {self.n_classes}개, {step}스텝, 풀 {len(y)}개, 손실 {loss:.4f}")
        return {'steps': step, 'samples': consumed, 'final_loss': float(loss)}

    def detect(self, scene: Scene, selection: Optional[UnknownSelection] = None) -> List[Detection]:
        """씬 검출 목록

        선택된 제안은 UNKNOWN 검출(선택기 점수), 나머지는 최고 기지 클래스 검출.
        """
        detections: List[Detection] = []
        chosen = {}
        if selection is not None:
            chosen = dict(zip(selection.chosen, selection.scores))
            for i, score in zip(selection.chosen, selection.scores):
                detections.append(Detection(scene.scene_id, UNKNOWN_LABEL, scene.proposals[i].box,
                                            float(min(1.0, max(0.0, score)))))

        rest = [i for i in range(len(scene.proposals)) if i not in chosen]
        if not rest or not self.class_ids:
            return detections
        probs = softmax(self.predictor.forward(scene.features[rest]))[:, 1:]
        best = probs.argmax(axis=1)
        for i, c, p in zip(rest, best, probs[np.arange(len(rest)), best]):
            if p >= self.cfg.score_threshold:
                detections.append(Detection(scene.scene_id, self.class_ids[int(c)], scene.proposals[i].box,
                                            float(p)))
        return detections
