#!/usr/bin/env python3
"""
PLU 실험 메인 실행 스크립트

실행 방법:
    python run_plu.py generate --config config.ini      # 데이터셋 생성
    python run_plu.py run --config config.ini           # 증분 프로토콜 실행
    python run_plu.py ablate --axis ratio               # ablation
    python run_plu.py open-set                          # 닫힌 평가 대 오픈셋 mAP 비교
    python run_plu.py report --out ./runs/default       # 요약 + 플롯
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# 프로젝트 루트를 path에 추가
sys.path.insert(0, str(Path(__file__).parent))

from src.common import Config, PluError, setup_logger
from src.protocol import AXES, AblationRunner, OpenSetRunner, ProtocolOrchestrator
from src.reporting import write_report

EXIT_OK = 0
EXIT_UNEXPECTED = 1


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """CLI 인자 파싱"""
    parser = argparse.ArgumentParser(
        description='PLU 오픈월드 의사 라벨링 실험',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
예시:
  python run_plu.py generate                         # 기본 설정으로 데이터셋 생성
  python run_plu.py generate --seed 7 --out ./runs/s7
  python run_plu.py run --out ./runs/s7              # 생성된 데이터셋으로 프로토콜 실행
  python run_plu.py ablate --axis lambda             # λ 축 ablation (run.seeds 전체)
  python run_plu.py open-set --out ./runs/open       # 닫힌/오픈셋 mAP 비교 (run.seeds 전체)
  python run_plu.py report --out ./runs/s7           # summary.md + SVG
  python run_plu.py run --dry-run                    # 설정 확인만

종료 코드:
  0: 성공
  1: 예상하지 못한 오류
  2: 설정 오류 / 프로토콜 순서 위반
  3: 데이터 오류 (데이터셋 누락, 파싱 실패, 입력 계약 위반)
  4: 수치 오류 (NaN/Inf)
        """
    )

    parser.add_argument(
        'command',
        choices=['generate', 'run', 'ablate', 'open-set', 'report'],
        help='실행할 작업'
    )

    parser.add_argument(
        '--config',
        type=str,
        default=None,
        help='설정 파일 경로 (INI, 미지정 시 기본값)'
    )

    parser.add_argument(
        '--seed',
        type=int,
        default=None,
        help='실행 시드 (run.seed 덮어쓰기)'
    )

    parser.add_argument(
        '--out',
        type=str,
        default=None,
        help='출력 디렉토리 (run.out_dir 덮어쓰기)'
    )

    parser.add_argument(
        '--axis',
        type=str,
        choices=sorted(AXES),
        default=None,
        help='ablation 축 (ablate 전용)'
    )

    parser.add_argument(
        '--deterministic',
        action='store_true',
        help='단일 워커 실행 (run.deterministic)'
    )

    parser.add_argument(
        '--dry-run',
        action='store_true',
        help='실제 실행 없이 설정만 확인'
    )

    return parser.parse_args(argv)


def load_config(args: argparse.Namespace) -> Config:
    """설정 로드 + CLI 덮어쓰기"""
    config = Config(args.config)
    return config.override(**{
        'run.seed': args.seed,
        'run.out_dir': args.out,
        'run.deterministic': True if args.deterministic else None,
    })


def main(argv: Optional[List[str]] = None) -> int:
    """메인 함수

    Returns:
        종료 코드
    """
    args = parse_args(argv)

    try:
        config = load_config(args)
        logger = setup_logger("run_plu", config.logging.get('log_path'), config.logging.get('level', 'INFO'))

        if args.dry_run:
            print("=" * 60)
            print(f"DRY-RUN: {args.command}")
            print("=" * 60)
            for key, value in sorted(config.run_config.flat().items()):
                print(f"  {key} = {value}")
            return EXIT_OK

        logger.info(f"명령 시작: {args.command}")

        if args.command == 'generate':
            result = ProtocolOrchestrator(config).generate()
            audit = result['audit']
            gate = '통과' if audit['bottom_decile_gate'] else '실패'
            print(f"데이터셋 생성 완료: {result['data_dir']} ({len(result['files'])}개 파일)")
            for task, counts in result['class_counts'].items():
                print(f"  {task} 클래스별 객체 수: {counts}")
            print(f"  하위 10% 배경 비율 게이트: {gate} ({audit['bottom_decile_bg_rate']:.4f})")
            print(f"  배경 고립 비율: {audit['background_isolation_rate']:.4f}")
            bias = audit['bias']
            print(f"  top-k 편향 감사: top-k 재현율 {bias['topk_recall']:.4f} / 오라클 {bias['oracle_recall']:.4f}, "
                  f"{'편향 확인' if bias['biased'] else '편향 없음'}")

        elif args.command == 'run':
            result = ProtocolOrchestrator(config).run()
            print(f"프로토콜 실행 완료: {result['tasks']}개 태스크 → {result['out_dir']}")
            print(f"  라벨 위반: {result['label_violations']}건")

        elif args.command == 'ablate':
            if args.axis is None:
                print("ERROR: ablate 명령에는 --axis가 필수입니다.")
                return 2
            result = AblationRunner(config).run(args.axis)
            print(f"ablation 완료: {result['axis']} ({result['rows']}행) → {result['out_dir']}")

        elif args.command == 'open-set':
            result = OpenSetRunner(config).run()
            print(f"오픈셋 비교 완료: {result['rows']}행 → {result['out_dir']}")

        elif args.command == 'report':
            result = write_report(config.run.out_dir)
            print(f"요약 생성 완료: {result['summary']} (플롯 {len(result['plots'])}개)")
            for name in result['missing']:
                print(f"  누락: {name}")

        return EXIT_OK

    except PluError as e:
        print(f"ERROR: {e}")
        return e.exit_code
    except Exception as e:
        print(f"ERROR: {e}")
        return EXIT_UNEXPECTED


if __name__ == '__main__':
    sys.exit(main())
