"""Event-level rumor detection on microblog streams.

The model encodes each chronological interval of an event's tweets with a
bi-directional LSTM plus word attention, pairs the interval vector with
per-tweet author embeddings, and classifies the stacked interval matrices
with a small convolutional head.  Everything runs on an in-package
reverse-mode autodiff core over float64 numpy arrays, with compiled
kernels for the hot loops.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .classifier import (ClassifierParams, Model, ModelConfig, PRESETS,
                         decide, forward_ablation, forward_event,
                         predict_probability)
from .data import (Event, Interval, IntervalizedEvent, StatsReport, Tweet,
                   Vocabulary, build_vocabulary, corpus_stats, index_corpus,
                   load_corpus, save_corpus, split_into_intervals, tokenize)
from .encoder import EncoderParams, LstmParams, attention_weights
from .errors import (ConfigError, DataError, FormatError, GradientError,
                     RumorNetError, ShapeError, TrainingError)
from .optim import Adadelta, AdadeltaState, adadelta_step
from .rng import SeededRng
from .synth import SynthSpec, generate
from .tensor import Tape, Tensor, backward
from .training import (Checkpoint, MetricsReport, TrainConfig, cross_validate,
                       evaluate, gradcheck, load_checkpoint,
                       metrics_from_confusion, prepare_events, save_checkpoint,
                       train, train_test_split, write_curve)
from .users import UserHistory, UserTable, init_user_table, lookup, pretrain

__version__ = "0.1.0"

__all__ = [
    "Adadelta", "AdadeltaState", "Checkpoint", "ClassifierParams",
    "ConfigError", "DataError", "EncoderParams", "Event", "FormatError",
    "GradientError", "Interval", "IntervalizedEvent", "KERNEL_BACKEND",
    "LstmParams", "MetricsReport", "Model", "ModelConfig", "PRESETS",
    "RumorNetError", "SeededRng", "ShapeError", "StatsReport", "SynthSpec",
    "Tape", "Tensor", "TrainConfig", "TrainingError", "Tweet", "UserHistory",
    "UserTable", "Vocabulary", "adadelta_step", "attention_weights",
    "backward", "build_vocabulary", "corpus_stats", "cross_validate",
    "decide", "evaluate", "forward_ablation", "forward_event", "generate",
    "gradcheck", "index_corpus", "init_user_table", "load_checkpoint",
    "load_corpus", "lookup", "metrics_from_confusion", "predict_probability",
    "prepare_events", "pretrain", "save_checkpoint", "save_corpus",
    "split_into_intervals",
    "tokenize", "train", "train_test_split",
    "write_curve",
]
