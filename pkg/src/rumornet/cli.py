"""Command-line entry point.

Subcommands cover the whole pipeline: corpus statistics, synthetic data,
user pretraining, training, evaluation, prediction, cross-validation, and
a finite-difference gradient check.  Exit codes: 0 success, 1 validation
error, 2 I/O error.  Diagnostics go to stderr; results go to stdout or to
--out files.
"""

import argparse
import json
import sys

from . import synth as synth_mod
from . import training, users as users_mod
from .classifier import PRESETS, ModelConfig, decide, predict_probability
from .data import build_vocabulary, corpus_stats, index_corpus, load_corpus, \
    save_corpus
from .errors import ConfigError, RumorNetError
from .rng import SeededRng
from .tensor import Tensor


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("%s\n%s" % (message, self.format_usage()))


_MODEL_KEYS = ("intervals", "interval_words", "hidden", "word_dim", "filters",
               "dropout", "rho", "eps", "q_min", "max_epochs", "seed")
_TRAIN_KEYS = ("min_count", "loss_tol", "patience", "holdout", "folds")


def _add_config_flags(sub):
    sub.add_argument("--config", metavar="FILE",
                     help="flat key=value file; explicit flags override it")
    sub.add_argument("--preset", choices=sorted(PRESETS),
                     help="named size preset (overrides the config file)")
    sub.add_argument("--intervals", type=int, help="chunks per event (k)")
    sub.add_argument("--words", type=int, dest="interval_words",
                     help="padded words per interval (p)")
    sub.add_argument("--hidden", type=int,
                     help="LSTM units per direction; widths derive from it")
    sub.add_argument("--word-dim", type=int, dest="word_dim")
    sub.add_argument("--filters", type=int)
    sub.add_argument("--dropout", type=float)
    sub.add_argument("--rho", type=float)
    sub.add_argument("--eps", type=float)
    sub.add_argument("--max-epochs", type=int, dest="max_epochs")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--min-count", type=int, dest="min_count")
    sub.add_argument("--loss-tol", type=float, dest="loss_tol")
    sub.add_argument("--patience", type=int, dest="patience")
    sub.add_argument("--holdout", type=float, dest="holdout")


def _read_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError("%s line %d: expected key=value"
                                  % (path, lineno))
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = value
    return values


def _coerce(key, raw, kind):
    try:
        if kind is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError("config key %s: cannot parse %r as %s"
                          % (key, raw, kind.__name__))


def _build_train_config(args):
    """Layered config: defaults, then file, then preset, then flags."""
    model_kw = {}
    train_kw = {}
    if getattr(args, "config", None):
        for key, raw in _read_config_file(args.config).items():
            if key in _MODEL_KEYS or key in ("no_attention",
                                             "no_user_context"):
                kind = {"dropout": float, "rho": float, "eps": float,
                        "no_attention": bool,
                        "no_user_context": bool}.get(key, int)
                model_kw[key] = _coerce(key, raw, kind)
            elif key in _TRAIN_KEYS:
                kind = {"loss_tol": float, "holdout": float}.get(key, int)
                train_kw[key] = _coerce(key, raw, kind)
            else:
                raise ConfigError("unknown config key %r in %s"
                                  % (key, args.config))
    if getattr(args, "preset", None):
        model_kw.update(PRESETS[args.preset])
    for key in _MODEL_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            model_kw[key] = value
    for key in _TRAIN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            train_kw[key] = value
    for flag in ("no_attention", "no_user_context"):
        if getattr(args, flag, False):
            model_kw[flag] = True
    model = ModelConfig(**model_kw)
    return training.TrainConfig(model=model, **train_kw)


def _load_users_or_none(args, width):
    path = getattr(args, "users", None)
    if not path:
        return None
    table = users_mod.load(path)
    if table.dim != width:
        raise ConfigError("user table width %d does not match 2*hidden (%d)"
                          % (table.dim, width))
    return table


def _format_metrics(report):
    lines = ["accuracy           %.4f" % report.accuracy]
    for name, cm in (("rumor", report.rumor), ("non-rumor", report.nonrumor)):
        lines.append("%-9s  precision %.4f  recall %.4f  f1 %.4f"
                     % (name, cm.precision, cm.recall, cm.f1))
    lines.append("confusion  tp %d  fp %d  fn %d  tn %d"
                 % (report.tp, report.fp, report.fn, report.tn))
    return "\n".join(lines)


def _cmd_stats(args):
    report = corpus_stats(load_corpus(args.corpus))
    if args.json:
        print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    else:
        print(report.to_table())
    return 0


def _cmd_synth(args):
    spec = synth_mod.SynthSpec(events=args.events, mode=args.mode,
                               strength=args.strength, seed=args.seed)
    corpus, manifest = synth_mod.generate(spec)
    save_corpus(corpus, args.out)
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print("wrote %d events to %s" % (len(corpus), args.out), file=sys.stderr)
    return 0


def _cmd_pretrain_users(args):
    tcfg = _build_train_config(args)
    corpus = load_corpus(args.corpus)
    vocab = build_vocabulary(corpus, tcfg.min_count)
    index_corpus(corpus, vocab)
    by_user = {}
    for event in corpus:
        for tweet in event.tweets:
            by_user.setdefault(tweet.user_id, []).append(tweet.tokens)
    histories = [users_mod.UserHistory(uid, docs)
                 for uid, docs in sorted(by_user.items())]
    width = tcfg.model.width
    rng = SeededRng(tcfg.model.seed)
    table = users_mod.init_user_table(sorted(by_user), width, rng.child(0))
    word_vecs = Tensor(rng.child(1).uniform(-0.08, 0.08,
                                            size=(len(vocab), width)))
    users_mod.pretrain(table, histories, word_vecs, args.epochs,
                       args.negatives, rng.child(2),
                       rho=tcfg.model.rho, eps=tcfg.model.eps)
    users_mod.save(table, args.out)
    print("pretrained %d users (%d epochs) -> %s"
          % (len(histories), args.epochs, args.out), file=sys.stderr)
    return 0


def _cmd_train(args):
    tcfg = _build_train_config(args)
    corpus = load_corpus(args.corpus)
    table = _load_users_or_none(args, tcfg.model.width)
    ckpt, curve = training.train(corpus, tcfg, user_table=table,
                                 curve_out=args.curve)
    training.save_checkpoint(ckpt, args.out_ckpt)
    if curve:
        epoch, loss, acc = curve[-1]
        print("stopped at epoch %d: train loss %.6f, train accuracy %.4f"
              % (epoch, loss, acc), file=sys.stderr)
    print("checkpoint -> %s" % args.out_ckpt, file=sys.stderr)
    return 0


def _cmd_evaluate(args):
    ckpt = training.load_checkpoint(args.ckpt)
    corpus = load_corpus(args.corpus)
    report = training.evaluate(ckpt, corpus)
    if args.json:
        print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    else:
        print(_format_metrics(report))
    return 0


def _cmd_predict(args):
    ckpt = training.load_checkpoint(args.ckpt)
    corpus = load_corpus(args.corpus)
    events = training.prepare_events(corpus, ckpt.vocab, ckpt.config)
    for event in events:
        prob = predict_probability(ckpt.model, event)
        print("%s\t%.6f\t%d" % (event.event_id, prob, decide(prob)))
    return 0


def _cmd_cv(args):
    tcfg = _build_train_config(args)
    corpus = load_corpus(args.corpus)
    reports, mean = training.cross_validate(corpus, tcfg, args.folds)
    if args.json:
        payload = {"folds": [r.to_json_dict() for r in reports],
                   "mean": mean.to_json_dict()}
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for i, rep in enumerate(reports, start=1):
            print("fold %d" % i)
            print(_format_metrics(rep))
        print("macro mean")
        print(_format_metrics(mean))
    return 0


def _cmd_gradcheck(args):
    seed = args.seed if args.seed is not None else 7
    report = training.gradcheck(seed=seed)
    worst = 0.0
    for group in sorted(report):
        print("%-12s %.3e" % (group, report[group]))
        worst = max(worst, report[group])
    if worst >= args.threshold:
        print("gradient check failed: worst group error %.3e >= %.1e"
              % (worst, args.threshold), file=sys.stderr)
        return 1
    return 0


def _build_parser():
    parser = _Parser(prog="rumornet",
                     description="Event-level rumor detection on microblog "
                                 "streams")
    subs = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    sub = subs.add_parser("stats", help="corpus statistics table")
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--json", action="store_true")
    sub.set_defaults(func=_cmd_stats)

    sub = subs.add_parser("synth", help="generate a synthetic corpus")
    sub.add_argument("--events", type=int, default=200)
    sub.add_argument("--mode", choices=synth_mod.MODES, default="lexical")
    sub.add_argument("--strength", type=float, default=0.8)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True, help="corpus JSONL path")
    sub.add_argument("--manifest", help="signal manifest JSON path")
    sub.set_defaults(func=_cmd_synth)

    sub = subs.add_parser("pretrain-users",
                          help="fit author embeddings from their tweets")
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--out", required=True, help="user table path")
    sub.add_argument("--epochs", type=int, default=5)
    sub.add_argument("--negatives", type=int, default=5)
    _add_config_flags(sub)
    sub.set_defaults(func=_cmd_pretrain_users)

    sub = subs.add_parser("train", help="train a model")
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--users", help="pretrained user table")
    sub.add_argument("--out-ckpt", required=True, dest="out_ckpt")
    sub.add_argument("--curve", help="write per-epoch CSV here")
    sub.add_argument("--no-attention", action="store_true",
                     dest="no_attention")
    sub.add_argument("--no-user-context", action="store_true",
                     dest="no_user_context")
    _add_config_flags(sub)
    sub.set_defaults(func=_cmd_train)

    sub = subs.add_parser("evaluate", help="metrics of a checkpoint")
    sub.add_argument("--ckpt", required=True)
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--json", action="store_true")
    sub.set_defaults(func=_cmd_evaluate)

    sub = subs.add_parser("predict",
                          help="per-event probability and decision")
    sub.add_argument("--ckpt", required=True)
    sub.add_argument("--corpus", required=True,
                     help="JSONL with the event(s) to score")
    sub.set_defaults(func=_cmd_predict)

    sub = subs.add_parser("cv", help="stratified cross-validation")
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--folds", type=int, default=None)
    sub.add_argument("--json", action="store_true")
    _add_config_flags(sub)
    sub.set_defaults(func=_cmd_cv)

    sub = subs.add_parser("gradcheck",
                          help="finite-difference gradient check")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--threshold", type=float, default=1e-4)
    sub.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            print(parser.format_usage(), file=sys.stderr, end="")
            return 1
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except RumorNetError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print("i/o error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
