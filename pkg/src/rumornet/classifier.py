"""Model configuration, convolutional decision head, and the full forward pass.

The event cube (k x q x 2D) runs through M valid 3x3x2D ReLU filters, a
per-map global max pool, dropout, and a sigmoid dense layer producing the
rumor probability.  Ablation flags swap the interval vector for a mean of
word embeddings (no_attention) or zero out the author half of the cube
(no_user_context) while keeping every parameter shape fixed.
"""

from dataclasses import dataclass

from . import encoder, ops
from .errors import ConfigError
from .tensor import Tape, Tensor

PRESETS = {
    "tiny": {"intervals": 5, "interval_words": 60, "hidden": 8,
             "word_dim": 16, "filters": 8},
}


@dataclass
class ModelConfig:
    intervals: int = 50        # k: chronological chunks per event
    interval_words: int = 2500  # p: padded word count per interval
    hidden: int = 50           # H: LSTM units per direction
    word_dim: int = 100        # Dw: word embedding width
    filters: int = 32          # M: convolution filter count
    dropout: float = 0.3
    rho: float = 0.95
    eps: float = 1e-6
    q_min: int = 3
    no_attention: bool = False
    no_user_context: bool = False
    seed: int = 0
    max_epochs: int = 250

    @property
    def width(self):
        """Interval-vector width, which the user table must match (2H)."""
        return 2 * self.hidden

    @property
    def cube_depth(self):
        """Channel count of the event cube: interval vector + author vector."""
        return 2 * self.width

    def __post_init__(self):
        for name in ("intervals", "interval_words", "hidden", "word_dim",
                     "filters", "max_epochs"):
            if getattr(self, name) < 1:
                raise ConfigError("%s must be positive, got %r"
                                  % (name, getattr(self, name)))
        if self.intervals < 3:
            raise ConfigError("intervals must be >= 3 so the 3x3 convolution "
                              "fits, got %d" % self.intervals)
        if self.q_min < 3:
            raise ConfigError("q_min must be >= 3, got %d" % self.q_min)
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1), got %r"
                              % self.dropout)
        if not 0.0 < self.rho < 1.0 or self.eps <= 0.0:
            raise ConfigError("need 0 < rho < 1 and eps > 0")
        if self.no_attention and self.word_dim != self.width:
            raise ConfigError(
                "no_attention replaces the interval vector with a mean word "
                "embedding, so word_dim must equal 2*hidden (%d), got %d"
                % (self.width, self.word_dim))


@dataclass
class ClassifierParams:
    filters: Tensor      # (M, 3, 3, 2D)
    filter_bias: Tensor  # (M,)
    dense_w: Tensor      # (M,)
    dense_b: Tensor      # scalar

    @classmethod
    def init(cls, n_filters, depth, rng):
        s = encoder.INIT_SCALE
        return cls(
            filters=Tensor(rng.uniform(-s, s, size=(n_filters, 3, 3, depth))),
            filter_bias=Tensor(rng.uniform(-s, s, size=n_filters)),
            dense_w=Tensor(rng.uniform(-s, s, size=n_filters)),
            dense_b=Tensor(rng.uniform(-s, s)),
        )

    def named_tensors(self):
        return [("filters", self.filters),
                ("filter_bias", self.filter_bias),
                ("dense.w", self.dense_w),
                ("dense.b", self.dense_b)]


def pool_and_concat(maps, tape):
    """Largest value of each feature map, concatenated into a length-M vector."""
    return ops.global_max_pool(maps, tape)


def classify(pooled, params, tape, dropout_rate=0.0, rng=None, training=False):
    """Sigmoid dense layer over the (dropped-out) pooled vector."""
    pooled = ops.dropout(pooled, dropout_rate, rng, training, tape)
    logit = ops.add(ops.matmul(params.dense_w, pooled, tape),
                    params.dense_b, tape)
    return ops.activation(logit, "sigmoid", tape)


@dataclass
class Model:
    config: ModelConfig
    enc: encoder.EncoderParams
    cls: ClassifierParams
    users: object  # UserTable

    @classmethod
    def init(cls, config, vocab_size, user_table, rng):
        if user_table.dim != config.width:
            raise ConfigError("user table width %d must equal 2*hidden (%d)"
                              % (user_table.dim, config.width))
        enc = encoder.EncoderParams.init(vocab_size, config.word_dim,
                                         config.hidden, rng)
        head = ClassifierParams.init(config.filters, config.cube_depth, rng)
        model = cls(config, enc, head, user_table)
        for _, t in model.parameters():
            t.ensure_grad()
        return model

    def parameters(self):
        """Named trainable tensors, in a fixed deterministic order."""
        out = self.enc.named_tensors() + self.cls.named_tensors()
        if self.users.trainable:
            out.append(("user_table", self.users.matrix))
        return out

    def zero_grads(self):
        for _, t in self.parameters():
            t.zero_grad()


def forward_event(model, event, tape=None, training=False, rng=None,
                  no_attention=None, no_user_context=None, alpha_out=None):
    """Rumor probability for one intervalized event.

    Flag arguments default to the model config; passing explicit values
    runs an ablation variant without touching stored parameters.
    """
    cfg = model.config
    if tape is None:
        tape = Tape()
    if no_attention is None:
        no_attention = cfg.no_attention
    if no_user_context is None:
        no_user_context = cfg.no_user_context
    cube = encoder.build_event_cube(
        event, model.enc, model.users, tape,
        dropout_rate=cfg.dropout, rng=rng, training=training,
        no_attention=no_attention, no_user_context=no_user_context,
        alpha_out=alpha_out)
    maps = ops.conv_valid(cube, model.cls.filters, model.cls.filter_bias, tape)
    pooled = pool_and_concat(maps, tape)
    return classify(pooled, model.cls, tape, dropout_rate=cfg.dropout,
                    rng=rng, training=training)


def forward_ablation(model, event, no_attention=False, no_user_context=False):
    """Inference-mode forward with explicit ablation flags."""
    prob = forward_event(model, event, training=False,
                         no_attention=no_attention,
                         no_user_context=no_user_context)
    return prob.item()


def predict_probability(model, event):
    """Inference-mode rumor probability as a plain float."""
    return forward_event(model, event, training=False).item()


def decide(probability):
    """Threshold at 0.5; a tie goes to non-rumor."""
    return 1 if probability > 0.5 else 0
