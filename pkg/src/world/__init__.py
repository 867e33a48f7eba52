# 합성 제안 세계
from .geometry import BBox, MatchPartition, iou, pairwise_iou, match_proposals, DEFAULT_IOU_THRESHOLD
from .scene import ClassRole, ClassSpec, GroundTruth, Proposal, ProposalTruth, Scene, TruthKind
from .generator import generate_world, generate_scene, generate_scenes, biased_objectness, squash, prototypes_of
from .dataset import (
    DatasetFile, DatasetHeader, SCHEMA_VERSION, save_dataset, load_dataset,
    scenes_match, file_sha256, mean_unknown_count,
)

__all__ = [
    'BBox', 'MatchPartition', 'iou', 'pairwise_iou', 'match_proposals', 'DEFAULT_IOU_THRESHOLD',
    'ClassRole', 'ClassSpec', 'GroundTruth', 'Proposal', 'ProposalTruth', 'Scene', 'TruthKind',
    'generate_world', 'generate_scene', 'generate_scenes', 'biased_objectness', 'squash', 'prototypes_of',
    'DatasetFile', 'DatasetHeader', 'SCHEMA_VERSION', 'save_dataset', 'load_dataset',
    'scenes_match', 'file_sha256', 'mean_unknown_count',
]
