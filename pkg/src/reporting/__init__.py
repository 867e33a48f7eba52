# 실행 결과 요약/플롯
from .summary import PLOT_METRICS, format_value, write_report

__all__ = ['PLOT_METRICS', 'format_value', 'write_report']
