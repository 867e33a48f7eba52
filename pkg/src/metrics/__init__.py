# 평가 지표
from .detection import (
    UNKNOWN_LABEL, Detection, ClassAP, pr_curve, average_precision, class_aps, mean_ap,
)
from .open_world import (
    OperatingPoint, operating_point, wilderness_impact, wilderness_impact_from_precisions,
    u_recall, a_ose, split_objects,
)
from .report import EvalReport, build_report, ROW_COLUMNS

__all__ = [
    'UNKNOWN_LABEL', 'Detection', 'ClassAP', 'pr_curve', 'average_precision', 'class_aps', 'mean_ap',
    'OperatingPoint', 'operating_point', 'wilderness_impact', 'wilderness_impact_from_precisions',
    'u_recall', 'a_ose', 'split_objects',
    'EvalReport', 'build_report', 'ROW_COLUMNS',
]
