"""
2단계: PLU 모듈 학습

역할:
- 기지 검출 헤드에 이번 태스크 도입 클래스 추가 후 학습
- φ를 UDA 손실로 학습 (train_plu)
- 모든 GT 읽기는 태스크 라벨 감사를 거친다
"""
from typing import Any, Dict

from ...common.rng import STREAM_DETECTOR, STREAM_ORDER, STREAM_PREDICTOR, derive_seed
from ...plu.detector import KnownHead
from ...plu.predictor import init_predictor
from ...plu.trainer import train_plu
from .base import BaseStage

# 실행 단위 초기화 키 (태스크 0)
INIT_TASK = 0


class TrainStage(BaseStage):
    """PLU + 기지 검출 헤드 학습"""

    STAGE_NAME = 'TrainStage'

    def process(self) -> Dict[str, Any]:
        d = self.data.d
        cfg = self.config
        state = self.state

        # 검출 헤드
        if state.head is None:
            state.head = KnownHead(d, cfg.detector, seed=self._init_seed(STREAM_DETECTOR))
        state.head.add_classes(self.task.introduced)
        head_info = state.head.train(self.data.train, seed=self.task_seed(STREAM_DETECTOR), audit=self.audit)

        # φ: reinit_per_task면 태스크마다 새로 초기화
        if state.predictor is None or cfg.plu.reinit_per_task:
            init_seed = self.task_seed(STREAM_PREDICTOR) if cfg.plu.reinit_per_task else self._init_seed(STREAM_ORDER)
            state.predictor = init_predictor(d, cfg.plu.h1, cfg.plu.h2, seed=init_seed, fg_prior=cfg.plu.fg_prior)
        _, log = train_plu(state.predictor, self.data.train, cfg.plu,
                           seed=self.task_seed(STREAM_ORDER), audit=self.audit)
        state.logs[self.task.task_id] = log

        final = log.rows[-1] if log.rows else {}
        self.logger.info(
            f"Task {self.task.task_id} 2단계 학습 완료: {len(log)}스텝, "
            f"마지막 mask_rate={final.get('mask_rate', 0.0):.3f}"
        )
        return {
            'status': 'success',
            'steps': len(log),
            'samples': log.samples_consumed,
            'skipped_scenes': log.skipped_scenes,
            'head': head_info,
        }

    def _init_seed(self, stream: int) -> int:
        return derive_seed(self.state.seed, INIT_TASK, stream)
