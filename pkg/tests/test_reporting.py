"""summary.md + SVG 플롯"""
import json

import pandas as pd
import pytest

from src.common.errors import DataError
from src.metrics.report import ROW_COLUMNS
from src.reporting import PLOT_METRICS, format_value, write_report


def write_metrics(run_dir):
    rows = [
        [1, 'plu', None, 0.25, 0.25, 0.123456, 0.5, 3, 10, 12],
        [1, 'topk', None, 0.3, 0.3, 0.2, 0.1, 5, 10, 20],
        [2, 'plu', 0.2, 0.4, 0.3, None, None, None, 0, 9],
        [2, 'topk', 0.1, 0.45, 0.275, None, None, None, 0, 20],
    ]
    path = run_dir / 'reports' / 'metrics.csv'
    path.parent.mkdir(parents=True)
    pd.DataFrame(rows, columns=ROW_COLUMNS).to_csv(path, index=False)


def write_ablation(run_dir):
    out = run_dir / 'ablation'
    out.mkdir(parents=True)
    pd.DataFrame({
        'value': ['1.0', '0.2'],
        'n_seeds': [2, 2],
        'u_recall_mean': [0.6, 0.1],
        'u_recall_sd': [0.1, 0.0],
    }).to_csv(out / 'ablation_lambda_summary.csv', index=False)
    check = {'metric': 'u_recall', 'expect': '1.0 > 0.2', 'n_seeds': 2, 'wins': 2, 'passed': True}
    (out / 'ablation_lambda_checks.json').write_text(json.dumps({'axis': 'lambda', 'check': check}), encoding='utf-8')


@pytest.mark.parametrize('value,expected', [(None, '-'), (float('nan'), '-'), (0.123456, '0.1235'), (1, '1.0000')])
def test_format_value(value, expected):
    assert format_value(value) == expected


def test_report_tables_and_plots(tmp_path):
    write_metrics(tmp_path)
    result = write_report(tmp_path)
    text = (tmp_path / 'summary.md').read_text(encoding='utf-8')

    assert '### Task 1' in text
    assert '### Task 2' in text
    assert '| 1 | plu | - | 0.2500 | 0.2500 | 0.1235 | 0.5000 | 3.0000 | 10 | 12 |' in text
    assert result['plots'] == [f"plots/{m}.svg" for m in PLOT_METRICS]
    for name in result['plots']:
        assert (tmp_path / name).read_text(encoding='utf-8').lstrip().startswith('<?xml')
    assert result['missing'] == ['run_manifest.json']
    assert '## 누락 산출물' in text


def test_svg_output_is_reproducible(tmp_path):
    write_metrics(tmp_path)
    write_report(tmp_path, tmp_path / 'a')
    write_report(tmp_path, tmp_path / 'b')
    assert (tmp_path / 'a/plots/wi.svg').read_bytes() == (tmp_path / 'b/plots/wi.svg').read_bytes()


def test_ablation_only_report(tmp_path):
    write_ablation(tmp_path)
    result = write_report(tmp_path)
    text = (tmp_path / 'summary.md').read_text(encoding='utf-8')
    assert '## Ablation: lambda' in text
    assert '| 1.0 | 2 | 0.6000 | 0.1000 |' in text
    assert '방향성 검사 1.0 > 0.2 (u_recall): 2/2 pass' in text
    assert result['plots'] == ['plots/ablation_lambda_u_recall.svg']
    assert 'reports/metrics.csv' in result['missing']


def test_nothing_to_report(tmp_path):
    with pytest.raises(DataError, match='nothing to report'):
        write_report(tmp_path)
