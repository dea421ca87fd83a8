"""Training loop, metrics, cross-validation, gradient check, checkpoints.

A run is fully determined by its seed: event shuffling, dropout masks,
and parameter initialization each draw from their own substream, so two
runs with identical inputs produce byte-identical curves and checkpoints.
"""

import json
import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import classifier, data, encoder, ops, users as users_mod
from .classifier import Model, ModelConfig
from .errors import ConfigError, DataError, FormatError, TrainingError
from .optim import Adadelta
from .rng import SeededRng
from .tensor import Tape, Tensor, backward

CKPT_MAGIC = b"RNCKPT01"


@dataclass
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    min_count: int = 1
    loss_tol: float = 1e-5   # convergence: improvement below this ...
    patience: int = 10       # ... for this many consecutive epochs
    holdout: float = 0.1
    folds: int = 5

    def __post_init__(self):
        if not 0.0 < self.holdout < 1.0:
            raise ConfigError("holdout fraction must be in (0,1), got %r"
                              % self.holdout)
        if self.folds < 2:
            raise ConfigError("cross-validation needs folds >= 2, got %d"
                              % self.folds)
        if self.min_count < 1:
            raise ConfigError("min_count must be >= 1")


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class MetricsReport:
    accuracy: float
    rumor: ClassMetrics
    nonrumor: ClassMetrics
    tp: int
    fp: int
    fn: int
    tn: int

    def to_json_dict(self):
        return {
            "accuracy": self.accuracy,
            "rumor": vars(self.rumor).copy(),
            "nonrumor": vars(self.nonrumor).copy(),
            "confusion": {"tp": self.tp, "fp": self.fp,
                          "fn": self.fn, "tn": self.tn},
        }


def _prf(tp, fp, fn):
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return ClassMetrics(precision, recall, f1)


def metrics_from_confusion(tp, fp, fn, tn):
    """Rumor is the positive class; the report carries both classes."""
    total = tp + fp + fn + tn
    if total == 0:
        raise DataError("empty confusion matrix")
    return MetricsReport(
        accuracy=(tp + tn) / total,
        rumor=_prf(tp, fp, fn),
        nonrumor=_prf(tn, fn, fp),
        tp=tp, fp=fp, fn=fn, tn=tn,
    )


def metrics_from_predictions(labels, predictions):
    tp = fp = fn = tn = 0
    for t, y in zip(labels, predictions):
        if t == 1 and y == 1:
            tp += 1
        elif t == 0 and y == 1:
            fp += 1
        elif t == 1 and y == 0:
            fn += 1
        else:
            tn += 1
    return metrics_from_confusion(tp, fp, fn, tn)


@dataclass
class Checkpoint:
    version: str
    config: ModelConfig
    vocab: data.Vocabulary
    model: Model


def prepare_events(corpus, vocab, config):
    """Index tweets against the vocabulary and intervalize every event."""
    data.index_corpus(corpus, vocab)
    return [data.split_into_intervals(e, config.intervals,
                                      config.interval_words, config.q_min)
            for e in corpus]


def _epoch_accuracy(model, events):
    correct = 0
    for ev in events:
        prob = classifier.predict_probability(model, ev)
        correct += classifier.decide(prob) == ev.label
    return correct / len(events)


def train(corpus, tcfg, user_table=None, curve_out=None):
    """Fit a model on the corpus; returns (Checkpoint, curve rows).

    Curve rows are (epoch, train_loss, train_accuracy): the loss is the
    epoch mean over training-mode steps, the accuracy a deterministic
    inference-mode pass at the epoch's end.  Training stops at the epoch
    cap or once the epoch-mean loss improves by less than loss_tol for
    patience consecutive epochs.
    """
    if not corpus:
        raise DataError("cannot train on an empty corpus")
    cfg = tcfg.model
    vocab = data.build_vocabulary(corpus, tcfg.min_count)
    events = prepare_events(corpus, vocab, cfg)

    root = SeededRng(cfg.seed)
    rng_init = root.child(0)
    rng_shuffle = root.child(1)
    rng_dropout = root.child(2)

    if user_table is None:
        ids = sorted({t.user_id for e in corpus for t in e.tweets})
        user_table = users_mod.init_user_table(ids, cfg.width, rng_init)
    model = Model.init(cfg, len(vocab), user_table, rng_init)

    optimizer = Adadelta(rho=cfg.rho, eps=cfg.eps)
    curve = []
    prev_loss = None
    streak = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng_shuffle.permutation(len(events))
        total = 0.0
        for idx in order:
            ev = events[idx]
            tape = Tape()
            prob = classifier.forward_event(model, ev, tape=tape,
                                            training=True, rng=rng_dropout)
            loss = ops.bce_loss(prob, ev.label, tape)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingError("non-finite loss on event %r at epoch %d"
                                    % (ev.event_id, epoch))
            backward(tape, loss)
            optimizer.step(model.parameters())
            total += value
        mean_loss = total / len(events)
        accuracy = _epoch_accuracy(model, events)
        curve.append((epoch, mean_loss, accuracy))
        if prev_loss is not None and prev_loss - mean_loss < tcfg.loss_tol:
            streak += 1
        else:
            streak = 0
        prev_loss = mean_loss
        if streak >= tcfg.patience:
            break
    ckpt = Checkpoint("1", cfg, vocab, model)
    if curve_out is not None:
        write_curve(curve_out, curve)
    return ckpt, curve


def write_curve(path, curve):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,train_accuracy\n")
        for epoch, loss, acc in curve:
            fh.write("%d,%.17g,%.17g\n" % (epoch, loss, acc))


def evaluate(ckpt, corpus):
    """Threshold-0.5 metrics of a frozen checkpoint on a labeled corpus."""
    if not corpus:
        raise DataError("cannot evaluate on an empty corpus")
    events = prepare_events(corpus, ckpt.vocab, ckpt.config)
    labels = [e.label for e in events]
    preds = [classifier.decide(classifier.predict_probability(ckpt.model, e))
             for e in events]
    return metrics_from_predictions(labels, preds)


def train_test_split(corpus, test_fraction, seed):
    """Deterministic stratified split; returns (train, test) event lists."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("test fraction must be in (0,1)")
    rng = SeededRng(seed)
    train_set, test_set = [], []
    for label in (0, 1):
        group = [e for e in corpus if e.label == label]
        order = rng.permutation(len(group))
        n_test = round(len(group) * test_fraction)
        for j, idx in enumerate(order):
            (test_set if j < n_test else train_set).append(group[idx])
    train_set.sort(key=lambda e: e.event_id)
    test_set.sort(key=lambda e: e.event_id)
    return train_set, test_set


def cross_validate(corpus, tcfg, folds=None):
    """Stratified k-fold CV; returns (per-fold reports, macro-mean report)."""
    folds = tcfg.folds if folds is None else folds
    if folds < 2:
        raise ConfigError("cross-validation needs folds >= 2, got %d" % folds)
    if len(corpus) < folds:
        raise DataError("cannot make %d folds from %d events"
                        % (folds, len(corpus)))
    rng = SeededRng(tcfg.model.seed)
    assignment = {}
    for label in (0, 1):
        group = [e for e in corpus if e.label == label]
        order = rng.permutation(len(group))
        for j, idx in enumerate(order):
            assignment[group[idx].event_id] = j % folds
    reports = []
    for f in range(folds):
        train_part = [e for e in corpus if assignment[e.event_id] != f]
        test_part = [e for e in corpus if assignment[e.event_id] == f]
        ckpt, _ = train(train_part, tcfg)
        reports.append(evaluate(ckpt, test_part))
    mean = metrics_mean(reports)
    return reports, mean


def metrics_mean(reports):
    """Macro mean of every metric; confusion counts are summed."""
    n = len(reports)
    avg = lambda vals: sum(vals) / n
    return MetricsReport(
        accuracy=avg([r.accuracy for r in reports]),
        rumor=ClassMetrics(avg([r.rumor.precision for r in reports]),
                           avg([r.rumor.recall for r in reports]),
                           avg([r.rumor.f1 for r in reports])),
        nonrumor=ClassMetrics(avg([r.nonrumor.precision for r in reports]),
                              avg([r.nonrumor.recall for r in reports]),
                              avg([r.nonrumor.f1 for r in reports])),
        tp=sum(r.tp for r in reports), fp=sum(r.fp for r in reports),
        fn=sum(r.fn for r in reports), tn=sum(r.tn for r in reports),
    )


GRADCHECK_CONFIG = ModelConfig(intervals=3, interval_words=6, hidden=4,
                               word_dim=8, filters=4, dropout=0.0,
                               max_epochs=1)

_GROUP_OF = {
    "word_table": "word_table",
    "lstm_fwd.w_in": "lstm_fwd", "lstm_fwd.w_rec": "lstm_fwd",
    "lstm_fwd.bias": "lstm_fwd",
    "lstm_bwd.w_in": "lstm_bwd", "lstm_bwd.w_rec": "lstm_bwd",
    "lstm_bwd.bias": "lstm_bwd",
    "attention.w": "attention", "attention.b": "attention",
    "attention.ctx": "attention",
    "filters": "filters", "filter_bias": "filters",
    "dense.w": "dense", "dense.b": "dense",
    "user_table": "user_rows",
}


def _random_check_event(cfg, vocab_size, user_ids, rng):
    """A small random event exercising PAD, UNK, unknown and null authors."""
    tweets = []
    n_tweets = 7
    for i in range(n_tweets):
        uid = user_ids[int(rng.integers(0, len(user_ids)))]
        if i == 3:
            uid = "stranger"  # unknown author, maps to the null row
        tw = data.Tweet("t%02d" % i, i, uid, "")
        n_tok = int(rng.integers(1, 5))
        tw.tokens = [int(rng.integers(1, vocab_size)) for _ in range(n_tok)]
        tweets.append(tw)
    event = data.Event("gradcheck-event", 1, tweets)
    return data.split_into_intervals(event, cfg.intervals,
                                     cfg.interval_words, cfg.q_min)


def gradcheck(config=None, seed=7, step=1e-5):
    """Max relative error of analytic vs central-difference gradients.

    One random event, inference-mode forward (dropout off), loss against
    label 1.  Every element of every parameter tensor is perturbed by
    +/- step.  Errors are grouped per named parameter family; denominators
    are guarded so exactly-zero pairs count as zero error.
    """
    cfg = config if config is not None else replace(GRADCHECK_CONFIG,
                                                    seed=seed)
    rng = SeededRng(seed)
    vocab_size = 20
    user_ids = ["u%d" % i for i in range(5)]
    table = users_mod.init_user_table(user_ids, cfg.width, rng.child(0))
    model = Model.init(cfg, vocab_size, table, rng.child(1))
    event = _random_check_event(cfg, vocab_size, user_ids, rng.child(2))

    def loss_value():
        tape = Tape()
        prob = classifier.forward_event(model, event, tape=tape,
                                        training=False)
        return ops.bce_loss(prob, event.label, tape).item()

    model.zero_grads()
    tape = Tape()
    prob = classifier.forward_event(model, event, tape=tape, training=False)
    loss = ops.bce_loss(prob, event.label, tape)
    backward(tape, loss)
    analytic = {name: t.grad.copy() for name, t in model.parameters()}

    report = {group: 0.0 for group in set(_GROUP_OF.values())}
    for name, tensor in model.parameters():
        flat = tensor.data.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        group = _GROUP_OF[name]
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            up = loss_value()
            flat[i] = keep - step
            down = loss_value()
            flat[i] = keep
            numeric = (up - down) / (2.0 * step)
            denom = max(abs(a_flat[i]) + abs(numeric), 1e-6)
            rel = abs(a_flat[i] - numeric) / denom
            if rel > report[group]:
                report[group] = rel
    return report


def _config_to_dict(cfg):
    return {k: getattr(cfg, k) for k in (
        "intervals", "interval_words", "hidden", "word_dim", "filters",
        "dropout", "rho", "eps", "q_min", "no_attention", "no_user_context",
        "seed", "max_epochs")}


def save_checkpoint(ckpt, path):
    """Binary checkpoint: magic, JSON header, then raw float64 arrays."""
    model = ckpt.model
    arrays = [(name, t.data) for name, t in model.enc.named_tensors()]
    arrays += [(name, t.data) for name, t in model.cls.named_tensors()]
    arrays.append(("user_table", model.users.matrix.data))
    header = json.dumps({
        "version": ckpt.version,
        "config": _config_to_dict(ckpt.config),
        "vocab": ckpt.vocab.index_to_token,
        "user_ids": [uid for uid, _ in sorted(model.users.row_of.items(),
                                              key=lambda kv: kv[1])],
        "users_trainable": model.users.trainable,
        "arrays": [[name, list(arr.shape)] for name, arr in arrays],
    }, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for _, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 or blob[:6] != CKPT_MAGIC[:6]:
        raise FormatError("not a checkpoint file: %s" % path)
    if blob[6:8] != CKPT_MAGIC[6:8]:
        raise FormatError("checkpoint version mismatch in %s" % path)
    if len(blob) < 16:
        raise FormatError("unexpected end of file in %s" % path)
    (hlen,) = struct.unpack("<Q", blob[8:16])
    if len(blob) < 16 + hlen:
        raise FormatError("unexpected end of file in %s" % path)
    try:
        header = json.loads(blob[16:16 + hlen].decode("utf-8"))
        cfg = ModelConfig(**header["config"])
        tokens = list(header["vocab"])
        user_ids = list(header["user_ids"])
        trainable = bool(header["users_trainable"])
        manifest = header["arrays"]
        version = str(header["version"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError("bad checkpoint header in %s (%s)" % (path, exc))

    offset = 16 + hlen
    loaded = {}
    for name, shape in manifest:
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if len(blob) < end:
            raise FormatError("unexpected end of file in %s" % path)
        loaded[name] = np.frombuffer(blob[offset:end], dtype="<f8") \
            .reshape(shape).copy()
        offset = end

    vocab = data.Vocabulary({t: i for i, t in enumerate(tokens) if i >= 2},
                            tokens)
    table = users_mod.UserTable({uid: i + 1 for i, uid in enumerate(user_ids)},
                                Tensor(loaded["user_table"]), trainable)
    enc = encoder.EncoderParams(
        word_table=Tensor(loaded["word_table"]),
        fwd=encoder.LstmParams(Tensor(loaded["lstm_fwd.w_in"]),
                               Tensor(loaded["lstm_fwd.w_rec"]),
                               Tensor(loaded["lstm_fwd.bias"])),
        bwd=encoder.LstmParams(Tensor(loaded["lstm_bwd.w_in"]),
                               Tensor(loaded["lstm_bwd.w_rec"]),
                               Tensor(loaded["lstm_bwd.bias"])),
        attn_w=Tensor(loaded["attention.w"]),
        attn_b=Tensor(loaded["attention.b"]),
        attn_ctx=Tensor(loaded["attention.ctx"]),
    )
    cls_params = classifier.ClassifierParams(
        filters=Tensor(loaded["filters"]),
        filter_bias=Tensor(loaded["filter_bias"]),
        dense_w=Tensor(loaded["dense.w"]),
        dense_b=Tensor(loaded["dense.b"]),
    )
    model = Model(cfg, enc, cls_params, table)
    if enc.word_table.shape[0] != len(tokens):
        raise FormatError("checkpoint word table does not match vocabulary")
    for _, t in model.parameters():
        t.ensure_grad()
    return Checkpoint(version, cfg, vocab, model)
