"""
실행 결과 요약 모듈

run 디렉토리의 CSV를 읽어 다음을 만든다.
- summary.md: 태스크별 top-k vs PLU 비교표 (소수점 4자리), ablation 요약표, 누락 산출물 목록
- plots/{metric}.svg: 지표별 태스크 추이 (선택기별 선)
- plots/ablation_{axis}_{metric}.svg: ablation 값별 평균 ± 표준편차 막대
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from ..common.errors import DataError  # noqa: E402

logger = logging.getLogger(__name__)

PLOT_METRICS = ['map_previous', 'map_current', 'map_both', 'wi', 'u_recall', 'a_ose']
ABLATION_METRICS = ['wi', 'u_recall', 'map_both', 'map_previous', 'map_current']
COUNT_COLUMNS = ['n_unknown_objects', 'n_unknown_detections']

# SVG 출력 고정 (같은 입력 → 같은 파일)
plt.rcParams['svg.hashsalt'] = 'plu-lab'
SVG_METADATA = {'Date': None}


def format_value(value: Any) -> str:
    """지표 값 렌더링 (없으면 '-')"""
    if value is None:
        return '-'
    try:
        number = float(value)
    except (TypeError, ValueError):
        return str(value)
    if math.isnan(number):
        return '-'
    return f"{number:.4f}"


def _markdown_table(frame: pd.DataFrame, columns: List[str], metric_columns: List[str]) -> List[str]:
    lines = [
        '| ' + ' | '.join(columns) + ' |',
        '|' + '|'.join(['---'] * len(columns)) + '|',
    ]
    for _, row in frame.iterrows():
        cells = []
        for col in columns:
            value = row[col]
            if col in metric_columns:
                cells.append(format_value(value))
            elif col in COUNT_COLUMNS and not pd.isna(value):
                cells.append(str(int(value)))
            else:
                cells.append(str(value))
        lines.append('| ' + ' | '.join(cells) + ' |')
    return lines


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format='svg', metadata=SVG_METADATA)
    plt.close(fig)


def plot_metric(frame: pd.DataFrame, metric: str, path: Path) -> bool:
    """태스크별 지표 추이 (선택기별 선), 값이 하나도 없으면 그리지 않음"""
    values = pd.to_numeric(frame[metric], errors='coerce')
    if values.notna().sum() == 0:
        return False
    fig, ax = plt.subplots(figsize=(6, 4))
    for selector, group in frame.assign(**{metric: values}).groupby('selector', sort=True):
        group = group.sort_values('task')
        ax.plot(group['task'], group[metric], marker='o', label=str(selector))
    ax.set_title(metric)
    ax.set_xlabel('task')
    ax.set_ylabel(metric)
    ax.set_xticks(sorted(frame['task'].unique()))
    ax.legend()
    _save(fig, path)
    return True


def plot_ablation(summary: pd.DataFrame, axis: str, metric: str, path: Path) -> bool:
    """ablation 값별 평균 ± 표준편차 막대"""
    mean_col, sd_col = f"{metric}_mean", f"{metric}_sd"
    if mean_col not in summary or summary[mean_col].notna().sum() == 0:
        return False
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = summary['value'].astype(str).tolist()
    ax.bar(labels, summary[mean_col].fillna(0.0), yerr=summary[sd_col].fillna(0.0), capsize=4)
    ax.set_title(f"{axis}: {metric}")
    ax.set_xlabel(axis)
    ax.set_ylabel(metric)
    _save(fig, path)
    return True


def _expected_files(run_dir: Path) -> List[str]:
    """매니페스트 기준으로 있어야 할 산출물 목록"""
    manifest_path = run_dir / 'run_manifest.json'
    if not manifest_path.exists():
        return ['run_manifest.json', 'reports/metrics.csv']
    with open(manifest_path, 'r', encoding='utf-8') as f:
        manifest = json.load(f)
    expected = ['run_manifest.json', manifest.get('metrics_csv', 'reports/metrics.csv')]
    expected.extend(sorted(manifest.get('reports', {}).values()))
    for task in manifest.get('tasks', []):
        t = task['task']
        expected.append(f"logs/train_task{t}.csv")
        expected.append(f"checkpoints/task{t}_predictor.npz")
    return expected


def write_report(run_dir: Union[str, Path], out_dir: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """실행 결과 요약 + SVG 플롯 생성

    Args:
        run_dir: run/ablate 산출물 디렉토리
        out_dir: 요약 출력 위치 (기본: run_dir)

    Returns:
        생성 파일/누락 목록 딕셔너리

    Raises:
        DataError: 요약할 산출물이 하나도 없음
    """
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir else run_dir
    metrics_path = run_dir / 'reports' / 'metrics.csv'
    ablation_paths = sorted((run_dir / 'ablation').glob('ablation_*_summary.csv'))

    if not metrics_path.exists() and not ablation_paths:
        raise DataError(f"nothing to report: {run_dir} (metrics.csv, ablation 요약 없음)")

    missing = [name for name in _expected_files(run_dir) if not (run_dir / name).exists()]
    plots: List[str] = []
    lines = ['# PLU 실행 요약', '']

    if metrics_path.exists():
        frame = pd.read_csv(metrics_path)
        lines += ['## 태스크별 선택기 비교 (top-k vs PLU)', '']
        columns = ['task', 'selector'] + PLOT_METRICS + COUNT_COLUMNS
        columns = [c for c in columns if c in frame.columns]
        for task, group in frame.groupby('task', sort=True):
            lines += [f"### Task {int(task)}", '']
            lines += _markdown_table(group.sort_values('selector'), columns, PLOT_METRICS)
            lines.append('')
        for metric in PLOT_METRICS:
            if metric in frame.columns and plot_metric(frame, metric, out_dir / 'plots' / f"{metric}.svg"):
                plots.append(f"plots/{metric}.svg")

    for path in ablation_paths:
        axis = path.name[len('ablation_'):-len('_summary.csv')]
        summary = pd.read_csv(path, dtype={'value': str})
        lines += [f"## Ablation: {axis}", '']
        stat_columns = [c for c in summary.columns if c not in ('value', 'n_seeds')]
        lines += _markdown_table(summary, ['value', 'n_seeds'] + stat_columns, stat_columns)
        lines.append('')
        checks_path = path.with_name(f"ablation_{axis}_checks.json")
        if checks_path.exists():
            with open(checks_path, 'r', encoding='utf-8') as f:
                check = json.load(f).get('check')
            if check:
                status = 'pass' if check['passed'] else 'fail'
                lines += [f"방향성 검사 {check['expect']} ({check['metric']}): "
                          f"{check['wins']}/{check['n_seeds']} {status}", '']
        for metric in ABLATION_METRICS:
            if plot_ablation(summary, axis, metric, out_dir / 'plots' / f"ablation_{axis}_{metric}.svg"):
                plots.append(f"plots/ablation_{axis}_{metric}.svg")

    if missing:
        lines += ['## 누락 산출물', '']
        lines += [f"- {name}" for name in missing]
        lines.append('')

    out_dir.mkdir(parents=True, exist_ok=True)
    summary_path = out_dir / 'summary.md'
    with open(summary_path, 'w', encoding='utf-8', newline='\n') as f:
        f.write('\n'.join(lines))

    if missing:
        logger.warning(f"누락 산출물 {len(missing)}개: {', '.join(missing)}")
    logger.info(f"요약 생성 완료: {summary_path}, 플롯 {len(plots)}개")
    return {
        'status': 'success',
        'summary': str(summary_path),
        'plots': plots,
        'missing': missing,
    }
