"""
3단계: 기지 클래스 소규모 분할 미세조정

역할:
- 지금까지 본 학습 씬(이전 태스크 + 이번 태스크)의 finetune_fraction 만큼을 기지 클래스별 라운드로빈으로 선택 (균형 예제 집합)
- φ: 소스 전용 학습 (λ·L_S, L_T 비활성)
- 기지 검출 헤드: 같은 예제 집합으로 추가 학습 (이전 태스크 클래스 망각 완화)
"""
from collections import deque
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from ...common.config import RunConfig
from ...common.rng import STREAM_DETECTOR, STREAM_FINETUNE, as_generator, derive_seed
from ...plu.detector import KnownHead
from ...plu.domains import round_half_up
from ...plu.label_audit import LabelAudit
from ...plu.predictor import Predictor
from ...plu.trainer import TrainingLog, train_plu
from ...world.scene import Scene
from .base import BaseStage


def select_exemplars(
    scenes: Sequence[Scene],
    known_ids: Iterable[int],
    n: int,
    seed: int,
    audit: Optional[LabelAudit] = None,
) -> List[Scene]:
    """기지 클래스별 라운드로빈 예제 씬 선택

    시드 셔플 순서에서 클래스마다 차례로 그 클래스 GT를 가진 미선택 씬을 하나씩 고른다.
    """
    if n <= 0 or not scenes:
        return []
    order = as_generator(seed).permutation(len(scenes))
    known = sorted(set(known_ids))
    queues = {c: deque() for c in known}
    for pos in order:
        gt = audit.read_gt(scenes[pos]) if audit is not None else scenes[pos].gt
        for c in sorted({g.class_id for g in gt}):
            if c in queues:
                queues[c].append(int(pos))

    chosen: List[int] = []
    taken = set()
    while len(chosen) < n:
        progress = False
        for c in known:
            q = queues[c]
            while q and q[0] in taken:
                q.popleft()
            if q:
                pos = q.popleft()
                taken.add(pos)
                chosen.append(pos)
                progress = True
                if len(chosen) >= n:
                    break
        if not progress:
            break
    return [scenes[i] for i in chosen]


def finetune(
    predictor: Predictor,
    head: Optional[KnownHead],
    scenes: Sequence[Scene],
    known_ids: Iterable[int],
    cfg: RunConfig,
    seed: int,
    audit: Optional[LabelAudit] = None,
) -> Tuple[Predictor, TrainingLog, Dict[str, Any]]:
    """균형 예제 집합 미세조정

    Args:
        predictor: φ (제자리 갱신)
        head: 기지 검출 헤드 (None이면 φ만)
        scenes: 지금까지 본 학습 씬
        known_ids: K^t
        cfg: 실행 설정 (protocol.finetune_fraction, protocol.finetune_samples, plu.*)
        seed: 시드
        audit: 라벨 감사

    Returns:
        (φ, 학습 로그, 요약)
    """
    n = round_half_up(cfg.protocol.finetune_fraction * len(scenes))
    if n == 0 or cfg.protocol.finetune_samples == 0:
        return predictor, TrainingLog(), {'status': 'skipped', 'exemplars': 0}

    exemplars = select_exemplars(scenes, known_ids, n, derive_seed(seed, STREAM_FINETUNE), audit)
    if not exemplars:
        return predictor, TrainingLog(), {'status': 'skipped', 'exemplars': 0}

    _, log = train_plu(
        predictor, exemplars, cfg.plu,
        seed=derive_seed(seed, STREAM_FINETUNE, 1),
        audit=audit,
        train_samples=cfg.protocol.finetune_samples,
        source_only=True,
    )
    head_info = {}
    if head is not None:
        head_info = head.train(exemplars, seed=derive_seed(seed, STREAM_DETECTOR, 1), audit=audit,
                               n_samples=cfg.protocol.finetune_samples)
    return predictor, log, {'status': 'success', 'exemplars': len(exemplars), 'steps': len(log), 'head': head_info}


class FinetuneStage(BaseStage):
    """미세조정 스테이지"""

    STAGE_NAME = 'FinetuneStage'

    def process(self) -> Dict[str, Any]:
        state = self.state
        _, log, info = finetune(
            state.predictor, state.head, [*state.seen_train, *self.data.train], self.task.known,
            self.config, seed=self.task_seed(STREAM_FINETUNE), audit=self.audit,
        )
        state.finetune_logs[self.task.task_id] = log
        self.logger.info(
            f"Task {self.task.task_id} 3단계 미세조정: 예제 씬 {info['exemplars']}개, {len(log)}스텝"
        )
        return info
