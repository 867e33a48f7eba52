"""
PLU 실험실 예외 정의

CLI 종료 코드:
- 0: 성공
- 2: 설정 오류 (ConfigError, ProtocolError)
- 3: 데이터 오류 (DataError, InvalidInputError)
- 4: 수치 오류 (NumericalError)
"""
from typing import Optional


class PluError(Exception):
    """모든 실험실 예외의 기반 클래스"""

    exit_code: int = 1


class ConfigError(PluError, ValueError):
    """설정값 범위 위반, 알 수 없는 키"""

    exit_code = 2


class ProtocolError(PluError):
    """증분 프로토콜 순서 위반 (예: Task 2 이전에 Task 3 실행)"""

    exit_code = 2


class DataError(PluError):
    """데이터셋 누락/손상"""

    exit_code = 3


class DatasetParseError(DataError):
    """데이터셋 파일 파싱 실패 (라인 번호 포함)"""

    def __init__(self, path: str, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {reason}")


class SchemaError(DataError):
    """헤더/레코드 스키마 불일치"""


class InvalidInputError(PluError, ValueError):
    """함수 입력 계약 위반 (퇴화 박스, 빈 배치 등)"""

    exit_code = 3


class ShapeError(InvalidInputError):
    """배열 차원 불일치"""


class NumericalError(PluError, FloatingPointError):
    """NaN/Inf 발생 (파라미터, 그래디언트, 손실)"""

    exit_code = 4

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        super().__init__(message)
