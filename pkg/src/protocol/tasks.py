"""
증분 오픈월드 태스크 분할

역할:
- 주석 대상 클래스를 태스크별로 분할 (K^t 누적, U^t = 세계 - K^t)
- 태스크별 학습/평가 씬 ID 구간 배정
- 태스크 데이터 생성 (학습: 이번 태스크 도입 클래스 위주, 평가: K^t 전체)
- iod 모드: 미지 역할 클래스 없이 닫힌 평가
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from ..common.config import ProtocolConfig, SceneConfig
from ..common.errors import ConfigError
from ..common.rng import derive_seed
from ..world.generator import generate_scenes
from ..world.scene import ClassRole, ClassSpec, Scene

logger = logging.getLogger(__name__)

SPLIT_TRAIN = 0
SPLIT_TEST = 1


@dataclass
class TaskSplit:
    """태스크 t의 클래스/씬 구성"""
    task_id: int
    known: List[int]
    introduced: List[int]
    previous: List[int]
    unknown: List[int]
    train_scene_ids: List[int] = field(default_factory=list)
    test_scene_ids: List[int] = field(default_factory=list)
    is_final: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'task': self.task_id,
            'known': self.known,
            'introduced': self.introduced,
            'previous': self.previous,
            'unknown': self.unknown,
            'train_scenes': [self.train_scene_ids[0], self.train_scene_ids[-1] + 1] if self.train_scene_ids else [],
            'test_scenes': [self.test_scene_ids[0], self.test_scene_ids[-1] + 1] if self.test_scene_ids else [],
            'is_final': self.is_final,
        }


def make_tasks(
    world: Sequence[ClassSpec],
    n_tasks: int,
    classes_per_task: Union[int, Sequence[int]],
    scenes_per_task: Tuple[int, int],
    seed: int,
) -> List[TaskSplit]:
    """클래스를 태스크로 분할

    Args:
        world: 클래스 명세 (KNOWN 역할 클래스만 주석 대상)
        n_tasks: 태스크 수
        classes_per_task: 태스크당 도입 클래스 수, 또는 태스크별 개수 목록 (예: [15, 5])
        scenes_per_task: (학습 씬 수, 평가 씬 수)
        seed: 분할 시드

    Returns:
        TaskSplit 리스트 (task_id 1..n_tasks)
    """
    annotatable = [c.class_id for c in world if c.role is ClassRole.KNOWN]
    if isinstance(classes_per_task, int):
        counts = [classes_per_task] * max(n_tasks, 0)
    else:
        counts = [int(c) for c in classes_per_task]
        if len(counts) != n_tasks:
            raise ConfigError(f"태스크별 클래스 수 {counts}의 길이가 n_tasks={n_tasks}와 다릅니다")
    if n_tasks < 1 or min(counts, default=0) < 1 or sum(counts) > len(annotatable):
        raise ConfigError(
            f"태스크 분할 불가: {n_tasks}태스크, 태스크별 {counts}클래스 > 주석 가능 클래스 {len(annotatable)}개"
        )

    order = np.random.default_rng(seed).permutation(annotatable)
    bounds = np.concatenate(([0], np.cumsum(counts)))
    all_ids = sorted(c.class_id for c in world)
    n_train, n_test = scenes_per_task

    tasks: List[TaskSplit] = []
    known: List[int] = []
    next_id = 0
    for t in range(1, n_tasks + 1):
        introduced = sorted(int(c) for c in order[bounds[t - 1]:bounds[t]])
        previous = list(known)
        known = sorted(previous + introduced)
        unknown = [c for c in all_ids if c not in set(known)]
        train_ids = list(range(next_id, next_id + n_train))
        test_ids = list(range(next_id + n_train, next_id + n_train + n_test))
        next_id += n_train + n_test
        tasks.append(TaskSplit(
            task_id=t,
            known=known,
            introduced=introduced,
            previous=previous,
            unknown=unknown,
            train_scene_ids=train_ids,
            test_scene_ids=test_ids,
            is_final=(t == n_tasks),
        ))

    logger.debug(f"태스크 분할: {[t.introduced for t in tasks]}")
    return tasks


def generate_task_scenes(
    world: Sequence[ClassSpec],
    task: TaskSplit,
    scene_cfg: SceneConfig,
    protocol_cfg: ProtocolConfig,
    seed: int,
    workers: int = 1,
) -> Tuple[List[Scene], List[Scene]]:
    """태스크 학습/평가 씬 생성

    학습: 기지 객체는 이번 도입 클래스 (이전 클래스는 previous_class_rate 확률), 주석은 K^t
    평가: 기지 객체는 K^t 전체, final_task_closed면 마지막 태스크 평가 씬에 미지 객체 없음

    mode=iod: 학습 씬의 미지 객체는 이후 태스크의 주석 대상 클래스뿐이고 평가 씬은 항상 닫힘
    """
    iod = protocol_cfg.mode == 'iod'
    if iod:
        roles = {c.class_id: c.role for c in world}
        train_unknown = [c for c in task.unknown if roles[c] is ClassRole.KNOWN]
    else:
        train_unknown = task.unknown
    train = generate_scenes(
        world, task.known, scene_cfg,
        n_scenes=len(task.train_scene_ids),
        seed=derive_seed(seed, task.task_id, SPLIT_TRAIN),
        first_scene_id=task.train_scene_ids[0] if task.train_scene_ids else 0,
        known_pool=task.introduced,
        unknown_pool=train_unknown,
        previous_pool=task.previous,
        previous_rate=protocol_cfg.previous_class_rate,
        workers=workers,
    )
    closed = iod or (task.is_final and protocol_cfg.final_task_closed)
    test = generate_scenes(
        world, task.known, scene_cfg,
        n_scenes=len(task.test_scene_ids),
        seed=derive_seed(seed, task.task_id, SPLIT_TEST),
        first_scene_id=task.test_scene_ids[0] if task.test_scene_ids else 0,
        known_pool=task.known,
        unknown_pool=[] if closed else task.unknown,
        workers=workers,
    )
    return train, test
