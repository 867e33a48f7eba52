"""
프로토콜 오케스트레이터
- 작업 흐름 제어
- 1. 데이터셋 생성 (세계 → 태스크 분할 → 태스크별 학습/평가 씬 → 감사)
- 2. 증분 프로토콜 실행 (태스크 순차, 선택기 top-k / PLU 나란히)
- 3. 산출물 기록 (리포트, 학습 로그, 선택 결과, 체크포인트, 매니페스트)

산출물에는 시간 정보를 넣지 않는다 (같은 설정 + 시드 → 바이트 동일).
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from ..common import Config, setup_logger
from ..common.config import RunConfig
from ..common.errors import DataError
from ..common.rng import derive_seed
from ..metrics.audit import dataset_audit, objectness_bias_gap
from ..metrics.report import ROW_COLUMNS
from ..plu.predictor import save_checkpoint
from ..plu.selection import resolve_k
from ..world.dataset import DatasetHeader, file_sha256, load_dataset, mean_unknown_count, save_dataset
from ..world.generator import generate_world
from ..world.scene import ClassSpec
from .stages import SELECTORS
from .state import RunState, TaskData
from .task_processor import run_task
from .tasks import TaskSplit, generate_task_scenes, make_tasks

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
# 세계/분할 시드 스트림
WORLD_STREAM = 101
SPLIT_STREAM = 102
DATA_STREAM = 103


@dataclass
class Benchmark:
    """메모리 내 벤치마크 (세계, 태스크, 태스크 데이터)"""
    world: List[ClassSpec]
    tasks: List[TaskSplit]
    data: Dict[int, TaskData]


def build_benchmark(cfg: RunConfig, seed: int, workers: int = 1, n_tasks: Optional[int] = None) -> Benchmark:
    """설정 + 시드로 세계와 태스크 데이터 생성

    Args:
        cfg: 실행 설정
        seed: 데이터 시드
        workers: 씬 생성 스레드 수
        n_tasks: 앞에서부터 생성할 태스크 수 (기본: 전체)
    """
    w = cfg.world
    world = generate_world(w.n_known, w.n_unknown, w.d, w.shift_range,
                           seed=derive_seed(seed, WORLD_STREAM), spread=w.spread)
    tasks = make_tasks(world, cfg.protocol.n_tasks, cfg.protocol.class_counts,
                       (cfg.protocol.train_scenes, cfg.protocol.test_scenes), seed=derive_seed(seed, SPLIT_STREAM))
    data = {}
    for task in tasks[:n_tasks]:
        train, test = generate_task_scenes(world, task, cfg.scene, cfg.protocol,
                                           seed=derive_seed(seed, DATA_STREAM), workers=workers)
        data[task.task_id] = TaskData(train, test, mean_unknown_count(train, task.known))
    return Benchmark(world, tasks, data)


def run_protocol(
    cfg: RunConfig,
    seed: int,
    benchmark: Benchmark,
    finetune_enabled: bool = True,
    selectors: Sequence[str] = SELECTORS,
    n_tasks: Optional[int] = None,
) -> RunState:
    """태스크 순차 실행 (메모리 내)"""
    state = RunState(config=cfg, seed=seed)
    for task in benchmark.tasks[:n_tasks]:
        run_task(state, task, benchmark.data[task.task_id], finetune_enabled, selectors)
    return state


def _write_json(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')


def _task_from_dict(data: Dict[str, Any]) -> TaskSplit:
    train = data.get('train_scenes') or []
    test = data.get('test_scenes') or []
    return TaskSplit(
        task_id=int(data['task']),
        known=[int(c) for c in data['known']],
        introduced=[int(c) for c in data['introduced']],
        previous=[int(c) for c in data['previous']],
        unknown=[int(c) for c in data['unknown']],
        train_scene_ids=list(range(*train)) if train else [],
        test_scene_ids=list(range(*test)) if test else [],
        is_final=bool(data.get('is_final', False)),
    )


class ProtocolOrchestrator:
    """PLU 실험 오케스트레이터

    작업 순서:
    1. generate: 데이터셋 파일 + 매니페스트
    2. run: 태스크 순차 실행 + 산출물
    """

    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config()
        self.cfg: RunConfig = self.config.run_config
        log_cfg = self.config.logging
        self.logger = setup_logger("plu_orchestrator", log_cfg.get('log_path'), log_cfg.get('level', 'INFO'))

    @property
    def out_dir(self) -> Path:
        return Path(self.cfg.run.out_dir)

    @property
    def data_dir(self) -> Path:
        return self.out_dir / 'data'

    @property
    def workers(self) -> int:
        return 1 if self.cfg.run.deterministic else self.cfg.run.workers

    # ========================================
    # 1. 데이터셋 생성
    # ========================================
    def generate(self) -> Dict[str, Any]:
        """데이터셋 생성

        Returns:
            실행 결과 딕셔너리 (파일 해시, 감사 결과)
        """
        self.logger.info("=" * 60)
        self.logger.info("데이터셋 생성 시작")
        self.logger.info("=" * 60)

        seed = self.cfg.run.seed
        bench = build_benchmark(self.cfg, seed, workers=self.workers)
        params = {
            'world': self.cfg.world.model_dump(),
            'scene': self.cfg.scene.model_dump(),
            'protocol': self.cfg.protocol.model_dump(),
        }

        files: Dict[str, str] = {}
        for task in bench.tasks:
            data = bench.data[task.task_id]
            for split, scenes in (('train', data.train), ('test', data.test)):
                header = DatasetHeader(
                    d=self.cfg.world.d,
                    classes=bench.world,
                    seed=seed,
                    params=json.loads(json.dumps(params)),
                    known_ids=task.known,
                    mean_unknown_objects=mean_unknown_count(scenes, task.known),
                )
                name = f"task{task.task_id}_{split}.jsonl"
                files[name] = save_dataset(scenes, self.data_dir / name, header)

        first = bench.tasks[0]
        first_data = bench.data[first.task_id]
        k = resolve_k(self.cfg.selection.k, first_data.mean_unknown_objects)
        audit = dataset_audit(first_data.train, first.known, k)
        audit['objectness_bias_gap'] = objectness_bias_gap(
            first_data.train, {c.class_id: c.shift for c in bench.world}, first.known,
        )
        class_counts = self._class_counts(bench)

        manifest = {
            'schema_version': MANIFEST_VERSION,
            'seed': seed,
            'config': self.cfg.flat(),
            'world': [c.to_dict() for c in bench.world],
            'tasks': [t.to_dict() for t in bench.tasks],
            'files': files,
            'audit': audit,
            'class_counts': class_counts,
        }
        _write_json(self.data_dir / 'manifest.json', manifest)

        self.logger.info(f"데이터셋 생성 완료: {len(files)}개 파일 → {self.data_dir}")
        return {
            'status': 'success',
            'data_dir': str(self.data_dir),
            'files': files,
            'audit': audit,
            'class_counts': class_counts,
        }

    @staticmethod
    def _class_counts(bench: Benchmark) -> Dict[str, Dict[str, int]]:
        """태스크별 학습 씬 객체 수 (클래스 ID → 개수)"""
        counts = {}
        for task in bench.tasks:
            series = pd.Series([o.class_id for s in bench.data[task.task_id].train for o in s.objects], dtype='int64')
            counts[f"task{task.task_id}"] = {str(k): int(v) for k, v in series.value_counts().sort_index().items()}
        return counts

    # ========================================
    # 2. 프로토콜 실행
    # ========================================
    def _load_manifest(self) -> Dict[str, Any]:
        path = self.data_dir / 'manifest.json'
        if not path.exists():
            raise DataError(f"데이터셋 매니페스트가 없습니다: {path} (먼저 generate 실행)")
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)

    def _load_task_data(self, task: TaskSplit, files: Dict[str, str]) -> Tuple[TaskData, Dict[str, str]]:
        hashes = {}
        loaded = {}
        for split in ('train', 'test'):
            name = f"task{task.task_id}_{split}.jsonl"
            path = self.data_dir / name
            dataset = load_dataset(path)
            hashes[name] = file_sha256(path)
            if name in files and files[name] != hashes[name]:
                self.logger.warning(f"데이터셋 해시 불일치: {name}")
            loaded[split] = dataset
        data = TaskData(
            train=loaded['train'].scenes,
            test=loaded['test'].scenes,
            mean_unknown_objects=loaded['train'].header.mean_unknown_objects,
        )
        return data, hashes

    def run(self, selectors: Sequence[str] = SELECTORS) -> Dict[str, Any]:
        """증분 프로토콜 실행

        Returns:
            실행 결과 딕셔너리
        """
        self.logger.info("=" * 60)
        self.logger.info("PLU 프로토콜 실행 시작")
        self.logger.info("=" * 60)

        manifest = self._load_manifest()
        tasks = [_task_from_dict(t) for t in manifest['tasks']]
        seed = self.cfg.run.seed
        state = RunState(config=self.cfg, seed=seed)

        out = self.out_dir
        report_paths: Dict[str, str] = {}
        dataset_hashes: Dict[str, str] = {}
        rows: List[Dict[str, Any]] = []

        for task in tasks:
            data, hashes = self._load_task_data(task, manifest.get('files', {}))
            dataset_hashes.update(hashes)
            run_task(state, task, data, selectors=selectors)

            t = task.task_id
            for selector, report in state.reports[t].items():
                rel = f"reports/task{t}_{selector}.json"
                report.save_json(out / rel)
                report_paths[f"task{t}_{selector}"] = rel
                rows.append(report.to_row())

                frame = state.selections[(t, selector)]
                sel_path = out / f"selections/task{t}_{selector}.csv"
                sel_path.parent.mkdir(parents=True, exist_ok=True)
                frame.to_csv(sel_path, index=False)

            state.logs[t].save_csv(out / f"logs/train_task{t}.csv")
            save_checkpoint(out / f"checkpoints/task{t}_predictor.npz", state.predictor)

        metrics_path = out / 'reports' / 'metrics.csv'
        pd.DataFrame(rows, columns=ROW_COLUMNS).to_csv(metrics_path, index=False)

        run_manifest = {
            'schema_version': MANIFEST_VERSION,
            'seed': seed,
            'config': self.cfg.flat(),
            'dataset_hashes': dataset_hashes,
            'tasks': [t.to_dict() for t in tasks],
            'reports': report_paths,
            'metrics_csv': 'reports/metrics.csv',
            'label_audit': {str(t): a.to_dict() for t, a in sorted(state.audits.items())},
            'label_violations': state.label_violations,
            'stages': {str(t): r for t, r in sorted(state.stage_results.items())},
        }
        _write_json(out / 'run_manifest.json', run_manifest)

        self.logger.info("=" * 60)
        self.logger.info(f"PLU 프로토콜 실행 완료: {len(tasks)}개 태스크, 라벨 위반 {state.label_violations}건")
        self.logger.info("=" * 60)
        return {
            'status': 'success',
            'out_dir': str(out),
            'tasks': len(tasks),
            'label_violations': state.label_violations,
            'metrics': rows,
        }
