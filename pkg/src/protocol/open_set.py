"""
닫힌 평가 대 오픈셋 평가 비교

전체 프로토콜을 학습한 뒤 마지막 태스크 모델을 두 평가 집합에서 잰다.
- closed: 기지 클래스 객체만 있는 씬
- open: closed 씬 + 같은 수의 미지 클래스 전용 씬

미지 전용 씬에는 기지 GT가 없으므로 그곳에서 기지 라벨로 나온 검출은 모두 오검출이다.
map_drop = map_closed - map_open 은 선택기가 미지를 얼마나 걸러내는지를 보여준다.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from ..common import Config, setup_logger
from ..common.config import RunConfig
from ..common.errors import ConfigError
from ..common.rng import derive_seed
from ..plu.selection import OracleScorer, resolve_k
from ..world.generator import generate_scenes
from ..world.scene import Scene
from .orchestrator import Benchmark, build_benchmark, run_protocol
from .stages import SELECTORS
from .stages.evaluate import evaluate_selector
from .state import RunState
from .tasks import TaskSplit

logger = logging.getLogger(__name__)

OPEN_SET_STREAM = 104
SPLIT_CLOSED = 0
SPLIT_UNKNOWN = 1
COLUMNS = ['seed', 'selector', 'map_closed', 'map_open', 'map_drop', 'n_closed_scenes', 'n_unknown_scenes']


def open_set_scenes(
    cfg: RunConfig,
    bench: Benchmark,
    task: TaskSplit,
    seed: int,
    workers: int = 1,
) -> Tuple[List[Scene], List[Scene]]:
    """(닫힌 씬, 미지 전용 씬) 생성

    씬 ID는 벤치마크 씬 다음부터 이어서 배정한다.
    """
    if not task.unknown:
        raise ConfigError(f"태스크 {task.task_id}에 미지 클래스가 없어 오픈셋 평가를 만들 수 없습니다")
    n = cfg.protocol.open_set_scenes
    first_id = 1 + max(max(t.train_scene_ids + t.test_scene_ids, default=-1) for t in bench.tasks)
    base = derive_seed(seed, OPEN_SET_STREAM)

    closed = generate_scenes(
        bench.world, task.known, cfg.scene, n_scenes=n,
        seed=derive_seed(base, SPLIT_CLOSED), first_scene_id=first_id,
        known_pool=task.known, unknown_pool=[], workers=workers,
    )
    unknown_only = generate_scenes(
        bench.world, task.known, cfg.scene, n_scenes=n,
        seed=derive_seed(base, SPLIT_UNKNOWN), first_scene_id=first_id + n,
        known_pool=[], unknown_pool=task.unknown, workers=workers,
    )
    return closed, unknown_only


def open_set_comparison(
    cfg: RunConfig,
    seed: int,
    selectors: Sequence[str] = SELECTORS,
    bench: Optional[Benchmark] = None,
    workers: int = 1,
) -> pd.DataFrame:
    """시드 1개: 프로토콜 학습 후 선택기별 closed/open mAP 표"""
    bench = bench or build_benchmark(cfg, seed, workers=workers)
    state: RunState = run_protocol(cfg, seed, bench, selectors=selectors)
    task = bench.tasks[-1]
    closed, unknown_only = open_set_scenes(cfg, bench, task, seed, workers)
    k = resolve_k(cfg.selection.k, bench.data[task.task_id].mean_unknown_objects)

    rows: List[Dict[str, Any]] = []
    for selector in selectors:
        scorer = OracleScorer(task.known) if selector == 'oracle' else state.predictor
        closed_report, _ = evaluate_selector(closed, task, state.head, selector, cfg, k, scorer)
        open_report, _ = evaluate_selector(closed + unknown_only, task, state.head, selector, cfg, k, scorer)
        map_closed, map_open = closed_report.map_both, open_report.map_both
        rows.append({
            'seed': seed,
            'selector': selector,
            'map_closed': map_closed,
            'map_open': map_open,
            'map_drop': None if map_closed is None or map_open is None else map_closed - map_open,
            'n_closed_scenes': len(closed),
            'n_unknown_scenes': len(unknown_only),
        })
    return pd.DataFrame(rows, columns=COLUMNS)


class OpenSetRunner:
    """닫힌/오픈셋 mAP 비교 실행 클래스"""

    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config()
        self.cfg: RunConfig = self.config.run_config
        log_cfg = self.config.logging
        self.logger = setup_logger("plu_open_set", log_cfg.get('log_path'), log_cfg.get('level', 'INFO'))

    @property
    def workers(self) -> int:
        return 1 if self.cfg.run.deterministic else self.cfg.run.workers

    def run(self, seeds: Optional[Sequence[int]] = None, selectors: Sequence[str] = SELECTORS) -> Dict[str, Any]:
        """시드별 비교 후 CSV 기록

        산출물 (out_dir/open_set/):
        - open_set.csv: 시드 × 선택기 원시 지표
        - open_set_summary.csv: 선택기별 평균
        """
        seeds = list(self.cfg.run.seeds if seeds is None else seeds)
        if not seeds:
            raise ConfigError("오픈셋 비교 시드 목록이 비어 있습니다 (run.seeds)")
        self.logger.info(f"오픈셋 비교 시작: 시드 {len(seeds)}개, 선택기 {', '.join(selectors)}")

        frames = []
        for seed in seeds:
            frame = open_set_comparison(self.cfg, seed, selectors, workers=self.workers)
            for row in frame.itertuples(index=False):
                self.logger.info(f"  seed={seed} [{row.selector}] closed={row.map_closed} open={row.map_open}")
            frames.append(frame)
        frame = pd.concat(frames, ignore_index=True)
        summary = frame.groupby('selector', sort=False)[['map_closed', 'map_open', 'map_drop']].mean().reset_index()

        out = Path(self.cfg.run.out_dir) / 'open_set'
        out.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out / 'open_set.csv', index=False)
        summary.to_csv(out / 'open_set_summary.csv', index=False)
        self.logger.info(f"오픈셋 비교 완료 → {out}")
        return {'status': 'success', 'rows': len(frame), 'out_dir': str(out)}
