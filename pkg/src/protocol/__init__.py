# 증분 오픈월드 프로토콜
from .tasks import TaskSplit, make_tasks, generate_task_scenes
from .state import RunState, TaskData
from .task_processor import TaskProcessor, run_task
from .orchestrator import Benchmark, ProtocolOrchestrator, build_benchmark, run_protocol
from .ablation import AXES, AblationRunner, directional_check, summarize
from .open_set import OpenSetRunner, open_set_comparison

__all__ = [
    'TaskSplit', 'make_tasks', 'generate_task_scenes',
    'RunState', 'TaskData',
    'TaskProcessor', 'run_task',
    'Benchmark', 'ProtocolOrchestrator', 'build_benchmark', 'run_protocol',
    'AXES', 'AblationRunner', 'directional_check', 'summarize',
    'OpenSetRunner', 'open_set_comparison',
]
