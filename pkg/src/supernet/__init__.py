"""Weight-sharing supernet, synthetic task and validation-loss oracle."""

from .model import Sample, SupernetState, ToyDims, block_key, build_supernet, sample_loss
from .dataset import TEACHER_GAIN, SynthDataset, make_synth_dataset
from .trainer import SupernetTrainingError, clip_gradients, train_supernet
from .evaluator import (
    EvalLog,
    EvalLogCorruptError,
    EvalRecord,
    evaluate_arch,
    evaluate_batch,
    evaluate_model,
    load_eval_table,
)
from .checkpoint import load_checkpoint, read_manifest, save_checkpoint

__all__ = [
    'Sample', 'SupernetState', 'ToyDims', 'block_key', 'build_supernet', 'sample_loss',
    'TEACHER_GAIN', 'SynthDataset', 'make_synth_dataset', 'SupernetTrainingError', 'clip_gradients',
    'train_supernet', 'EvalLog', 'EvalLogCorruptError', 'EvalRecord', 'evaluate_arch',
    'evaluate_batch', 'evaluate_model', 'load_eval_table', 'load_checkpoint', 'read_manifest', 'save_checkpoint',
]
