"""
태스크별 처리 모듈

역할:
- 태스크 순서 검사 (T1 → T2 → ...)
- 학습 절차 스테이지 순차 실행: 백본(no-op) → PLU 학습 → 미세조정 → 평가
- 스테이지별 소요 시간 로그 (리포트 파일에는 기록하지 않음)
- 오류 발생 시 스테이지 이름과 함께 로그 후 상위로 전파
"""
import logging
import time
from typing import Any, Dict, Sequence

from ..common.errors import ProtocolError
from .stages import BackboneStage, EvaluateStage, FinetuneStage, TrainStage, SELECTORS
from .state import RunState, TaskData
from .tasks import TaskSplit

logger = logging.getLogger(__name__)


class TaskProcessor:
    """태스크 1개 처리 클래스"""

    def __init__(
        self,
        state: RunState,
        task: TaskSplit,
        data: TaskData,
        finetune_enabled: bool = True,
        selectors: Sequence[str] = SELECTORS,
    ):
        """
        Args:
            state: 프로토콜 실행 상태
            task: 태스크 분할
            data: 태스크 데이터
            finetune_enabled: 3단계 미세조정 실행 여부 (ablation용)
            selectors: 평가할 선택기
        """
        self.state = state
        self.task = task
        self.data = data
        self.finetune_enabled = finetune_enabled
        self.selectors = tuple(selectors)
        self.logger = logging.getLogger(f"{__name__}.Task{task.task_id}")

    def process(self) -> Dict[str, Any]:
        """태스크 실행

        Returns:
            스테이지별 결과 딕셔너리

        Raises:
            ProtocolError: 이전 태스크가 끝나지 않음
        """
        expected = self.state.next_task
        if self.task.task_id != expected:
            raise ProtocolError(
                f"태스크 순서 위반: Task {self.task.task_id} 요청, 다음 실행 가능 태스크는 Task {expected}"
            )

        self.logger.info(
            f"태스크 처리 시작: Task {self.task.task_id}, 도입 클래스={self.task.introduced}, "
            f"미지 클래스 {len(self.task.unknown)}개"
        )
        stages = [
            ('BackboneStage', BackboneStage, {}),
            ('TrainStage', TrainStage, {}),
        ]
        if self.finetune_enabled:
            stages.append(('FinetuneStage', FinetuneStage, {}))
        stages.append(('EvaluateStage', EvaluateStage, {'selectors': self.selectors}))

        results = {}
        task_start = time.time()
        for stage_name, stage_class, stage_kwargs in stages:
            stage_start = time.time()
            try:
                stage = stage_class(self.state, self.task, self.data, **stage_kwargs)
                result = stage.process()
                elapsed_ms = int((time.time() - stage_start) * 1000)

                result_key = stage_name.replace('Stage', '').lower()
                results[result_key] = result
                self.logger.info(f"{stage_name} 완료: {elapsed_ms}ms")

            except Exception as stage_error:
                elapsed_ms = int((time.time() - stage_start) * 1000)
                self.logger.error(
                    f"{stage_name} 실패 ({elapsed_ms}ms): Task {self.task.task_id}, 오류: {stage_error}",
                    exc_info=True,
                )
                raise

        self.state.seen_train.extend(self.data.train)
        self.state.completed.append(self.task.task_id)
        self.state.stage_results[self.task.task_id] = results

        total_ms = int((time.time() - task_start) * 1000)
        self.logger.info(f"태스크 처리 완료: Task {self.task.task_id} ({total_ms}ms)")
        return {
            'status': 'success',
            'task': self.task.task_id,
            'results': results,
        }


def run_task(
    state: RunState,
    task: TaskSplit,
    data: TaskData,
    finetune_enabled: bool = True,
    selectors: Sequence[str] = SELECTORS,
) -> RunState:
    """태스크 1개 실행 후 갱신된 상태 반환"""
    TaskProcessor(state, task, data, finetune_enabled, selectors).process()
    return state
