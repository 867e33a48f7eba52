"""
Ablation 실행 모듈

축(axis)별로 값 하나씩 바꿔 Task 2 PLU 지표를 시드별로 수집한다.
- ratio: FG:BG 소스 비율
- lambda: 소스 손실 가중치
- epsilon: 의사 라벨 신뢰도 임계값
- finetune: 3단계 미세조정 on/off

시드별 벤치마크 데이터는 한 번만 생성해 모든 셀이 공유한다.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..common import Config, setup_logger
from ..common.config import RunConfig
from ..common.errors import ConfigError
from .orchestrator import Benchmark, build_benchmark, run_protocol

logger = logging.getLogger(__name__)

ABLATION_TASK = 2
ABLATION_SELECTOR = 'plu'
METRICS = ['wi', 'u_recall', 'map_both', 'map_previous', 'map_current']
COLUMNS = ['axis', 'value', 'seed'] + METRICS
# 방향성 검사 통과 기준 (시드 비율)
CHECK_PASS_FRACTION = 0.8


@dataclass(frozen=True)
class Axis:
    """Ablation 축 정의"""
    name: str
    key: Optional[str]
    values: Tuple[Any, ...]
    labels: Tuple[str, ...]
    # (기준 라벨, 비교 라벨, 지표): 기준 > 비교 기대
    check: Optional[Tuple[str, str, str]] = None


AXES: Dict[str, Axis] = {
    'ratio': Axis('ratio', 'plu.fg_bg_ratio', ('1:1', '1:2', '1:5', '1:10'),
                  ('1:1', '1:2', '1:5', '1:10'), check=('1:1', '1:10', 'u_recall')),
    'lambda': Axis('lambda', 'plu.lambda', (1.0, 0.7, 0.5, 0.2),
                   ('1.0', '0.7', '0.5', '0.2'), check=('1.0', '0.2', 'u_recall')),
    'epsilon': Axis('epsilon', 'plu.epsilon', (0.6, 0.7, 0.8, 0.9, 0.95),
                    ('0.6', '0.7', '0.8', '0.9', '0.95')),
    'finetune': Axis('finetune', None, (True, False), ('on', 'off'), check=('on', 'off', 'map_previous')),
}


def get_axis(name: str) -> Axis:
    if name not in AXES:
        raise ConfigError(f"알 수 없는 ablation 축: {name} (가능: {', '.join(AXES)})")
    return AXES[name]


def run_cell(base: RunConfig, axis: Axis, index: int, seed: int, bench: Benchmark) -> Dict[str, Any]:
    """셀 1개 (축 값 × 시드) 실행 후 Task 2 PLU 지표 행 반환"""
    value, label = axis.values[index], axis.labels[index]
    finetune_enabled = True
    cfg = base
    if axis.key is None:
        finetune_enabled = bool(value)
    else:
        cfg = base.replace(**{axis.key: value})

    state = run_protocol(cfg, seed, bench, finetune_enabled=finetune_enabled,
                         selectors=(ABLATION_SELECTOR,), n_tasks=ABLATION_TASK)
    report = state.reports[ABLATION_TASK][ABLATION_SELECTOR]
    row = {'axis': axis.name, 'value': label, 'seed': seed}
    row.update({m: getattr(report, m) for m in METRICS})
    return row


def summarize(frame: pd.DataFrame, labels: Sequence[str]) -> pd.DataFrame:
    """값별 지표 평균/표준편차"""
    numeric = frame[['value'] + METRICS].copy()
    numeric[METRICS] = numeric[METRICS].apply(pd.to_numeric, errors='coerce')
    grouped = numeric.groupby('value', sort=False)[METRICS].agg(['mean', 'std'])
    grouped.columns = [f"{m}_{'sd' if stat == 'std' else stat}" for m, stat in grouped.columns]
    grouped = grouped.reindex([lb for lb in labels if lb in grouped.index])
    grouped.insert(0, 'n_seeds', numeric.groupby('value', sort=False).size())
    return grouped.reset_index()


def directional_check(frame: pd.DataFrame, axis: Axis) -> Optional[Dict[str, Any]]:
    """시드별로 기준 값의 지표가 비교 값보다 큰지 검사"""
    if axis.check is None:
        return None
    high, low, metric = axis.check
    pivot = frame.pivot(index='seed', columns='value', values=metric)
    if high not in pivot.columns or low not in pivot.columns:
        return {'metric': metric, 'expect': f"{high} > {low}", 'n_seeds': 0, 'wins': 0, 'passed': False}
    pairs = pivot[[high, low]].apply(pd.to_numeric, errors='coerce').dropna()
    wins = int(np.sum(pairs[high].to_numpy() > pairs[low].to_numpy()))
    n = int(len(pairs))
    return {
        'metric': metric,
        'expect': f"{high} > {low}",
        'n_seeds': n,
        'wins': wins,
        'passed': bool(n > 0 and wins >= int(np.ceil(CHECK_PASS_FRACTION * n))),
    }


class AblationRunner:
    """축별 ablation 실행 클래스"""

    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config()
        self.cfg: RunConfig = self.config.run_config
        log_cfg = self.config.logging
        self.logger = setup_logger("plu_ablation", log_cfg.get('log_path'), log_cfg.get('level', 'INFO'))

    @property
    def workers(self) -> int:
        return 1 if self.cfg.run.deterministic else self.cfg.run.workers

    def collect(self, axis_name: str, seeds: Optional[Sequence[int]] = None) -> pd.DataFrame:
        """축 1개의 (값 × 시드) 지표 표"""
        axis = get_axis(axis_name)
        if self.cfg.protocol.n_tasks < ABLATION_TASK:
            raise ConfigError(f"ablation은 태스크 {ABLATION_TASK}개 이상 필요: n_tasks={self.cfg.protocol.n_tasks}")
        seeds = list(self.cfg.run.seeds if seeds is None else seeds)
        if not seeds:
            raise ConfigError("ablation 시드 목록이 비어 있습니다 (run.seeds)")

        benches = {s: build_benchmark(self.cfg, s, workers=self.workers, n_tasks=ABLATION_TASK) for s in seeds}
        cells = [(i, s) for i in range(len(axis.values)) for s in seeds]
        self.logger.info(f"ablation {axis.name}: 값 {len(axis.values)}개 × 시드 {len(seeds)}개 (workers={self.workers})")

        rows: Dict[Tuple[int, int], Dict[str, Any]] = {}
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            future_to_cell = {
                executor.submit(run_cell, self.cfg, axis, i, s, benches[s]): (i, s)
                for i, s in cells
            }
            for future in as_completed(future_to_cell):
                i, s = future_to_cell[future]
                try:
                    rows[(i, s)] = future.result()
                except Exception as e:
                    self.logger.error(f"ablation 셀 실패: {axis.name}={axis.labels[i]}, seed={s}, 오류: {e}", exc_info=True)
                    raise
                self.logger.info(f"  셀 완료: {axis.name}={axis.labels[i]}, seed={s}")

        return pd.DataFrame([rows[c] for c in cells], columns=COLUMNS)

    def run(self, axis_name: str, seeds: Optional[Sequence[int]] = None) -> Dict[str, Any]:
        """ablation 실행 후 CSV/JSON 기록

        산출물 (out_dir/ablation/):
        - ablation_{axis}.csv: 시드별 원시 지표
        - ablation_{axis}_summary.csv: 값별 평균/표준편차
        - ablation_{axis}_checks.json: 방향성 검사
        """
        self.logger.info("=" * 60)
        self.logger.info(f"Ablation 시작: {axis_name}")
        self.logger.info("=" * 60)

        axis = get_axis(axis_name)
        frame = self.collect(axis_name, seeds)
        summary = summarize(frame, axis.labels)
        check = directional_check(frame, axis)

        out = Path(self.cfg.run.out_dir) / 'ablation'
        out.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out / f"ablation_{axis.name}.csv", index=False)
        summary.to_csv(out / f"ablation_{axis.name}_summary.csv", index=False)
        checks = {'axis': axis.name, 'task': ABLATION_TASK, 'selector': ABLATION_SELECTOR, 'check': check}
        with open(out / f"ablation_{axis.name}_checks.json", 'w', encoding='utf-8', newline='\n') as f:
            json.dump(checks, f, indent=2, sort_keys=True)
            f.write('\n')

        if check is not None:
            status = '통과' if check['passed'] else '미달'
            self.logger.info(f"방향성 검사 {check['expect']} ({check['metric']}): {check['wins']}/{check['n_seeds']} {status}")
        self.logger.info(f"Ablation 완료: {axis.name} → {out}")
        return {
            'status': 'success',
            'axis': axis.name,
            'rows': len(frame),
            'check': check,
            'out_dir': str(out),
        }
