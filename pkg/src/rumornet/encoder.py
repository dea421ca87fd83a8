"""Interval representation learning.

Pipeline per interval: word-embedding lookup, bi-directional LSTM, word
attention, then the q x 2D interval matrix whose left half repeats the
interval vector and whose right half holds per-tweet author embeddings.
The k interval matrices stack into the event cube consumed by the
convolutional head.
"""

from dataclasses import dataclass

import numpy as np

from . import ops
from .errors import ConfigError
from .tensor import Tape, Tensor

INIT_SCALE = 0.08


def _init(rng, *shape):
    return Tensor(rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape))


@dataclass
class LstmParams:
    """One direction's weights, gate blocks ordered input|forget|output|candidate."""
    w_in: Tensor    # (Dw, 4H)
    w_rec: Tensor   # (H, 4H)
    bias: Tensor    # (4H,)

    @classmethod
    def init(cls, dim_in, hidden, rng):
        return cls(_init(rng, dim_in, 4 * hidden),
                   _init(rng, hidden, 4 * hidden),
                   _init(rng, 4 * hidden))


@dataclass
class EncoderParams:
    word_table: Tensor  # (|V|, Dw), PAD row frozen zero
    fwd: LstmParams
    bwd: LstmParams
    attn_w: Tensor      # (2H, 2H)
    attn_b: Tensor      # (2H,)
    attn_ctx: Tensor    # (2H,)

    @classmethod
    def init(cls, vocab_size, word_dim, hidden, rng):
        word_table = _init(rng, vocab_size, word_dim)
        word_table.data[0] = 0.0  # PAD row stays zero
        return cls(
            word_table=word_table,
            fwd=LstmParams.init(word_dim, hidden, rng),
            bwd=LstmParams.init(word_dim, hidden, rng),
            attn_w=_init(rng, 2 * hidden, 2 * hidden),
            attn_b=_init(rng, 2 * hidden),
            attn_ctx=_init(rng, 2 * hidden),
        )

    def named_tensors(self):
        return [
            ("word_table", self.word_table),
            ("lstm_fwd.w_in", self.fwd.w_in),
            ("lstm_fwd.w_rec", self.fwd.w_rec),
            ("lstm_fwd.bias", self.fwd.bias),
            ("lstm_bwd.w_in", self.bwd.w_in),
            ("lstm_bwd.w_rec", self.bwd.w_rec),
            ("lstm_bwd.bias", self.bwd.bias),
            ("attention.w", self.attn_w),
            ("attention.b", self.attn_b),
            ("attention.ctx", self.attn_ctx),
        ]


def embed_words(interval, word_table, tape):
    """(p, Dw) embedding matrix; PAD slots are exact zeros with no gradient."""
    return ops.embedding_rows(word_table, interval.word_indices,
                              interval.word_mask, tape)


def bilstm_encode(x, params, tape):
    """(p, 2H): forward-direction states beside backward-direction states."""
    fwd = ops.lstm_sequence(x, params.fwd.w_in, params.fwd.w_rec,
                            params.fwd.bias, False, tape)
    bwd = ops.lstm_sequence(x, params.bwd.w_in, params.bwd.w_rec,
                            params.bwd.bias, True, tape)
    return ops.concat_cols(fwd, bwd, tape)


def word_attention(h, mask, params, tape):
    """Attention weights and the weighted interval vector.

    u = tanh(h W_a + b_a); weights = masked softmax of u . ctx; the
    interval vector is the alpha-weighted sum of hidden states.  An
    all-padding interval yields zero weights and a zero vector.
    """
    u = ops.activation(
        ops.add_bias(ops.matmul(h, params.attn_w, tape), params.attn_b, tape),
        "tanh", tape)
    logits = ops.matmul(u, params.attn_ctx, tape)
    alpha = ops.masked_softmax(logits, np.asarray(mask, dtype=bool), tape)
    interval_vec = ops.matmul(alpha, h, tape)
    return alpha, interval_vec


def masked_mean_vector(x, mask, tape):
    """Mean of the unmasked rows of x; zero vector when nothing is real.

    Used by the no-attention ablation in place of the LSTM/attention stack.
    """
    mask = np.asarray(mask, dtype=bool)
    n = int(mask.sum())
    coeff = np.where(mask, 1.0 / n, 0.0) if n else np.zeros(mask.shape)
    return ops.matmul(Tensor(coeff), x, tape)


def _real_tweet_count(interval):
    return sum(1 for uid in interval.tweet_user_ids if uid is not None)


def build_interval_matrix(interval_vec, interval, user_table, tape,
                          zero_users=False):
    """q x 2D matrix: repeated interval vector beside author embeddings.

    Padded tweet rows are entirely zero; null or unknown authors give zero
    right halves.  zero_users forces the right half to zero (the
    no-user-context ablation) while keeping the width at 2D.
    """
    width = interval_vec.shape[0]
    if user_table.dim != width:
        raise ConfigError("user embedding width %d must equal interval "
                          "vector width %d" % (user_table.dim, width))
    q = len(interval.tweet_user_ids)
    left = ops.repeat_rows(interval_vec, _real_tweet_count(interval), q, tape)
    if zero_users:
        right = Tensor(np.zeros((q, width)))
    else:
        rows = np.array([user_table.row_index(uid)
                         for uid in interval.tweet_user_ids], dtype=np.int64)
        right = ops.embedding_rows(user_table.matrix, rows, rows != 0, tape)
    return ops.concat_cols(left, right, tape)


def build_event_cube(event, params, user_table, tape, dropout_rate=0.0,
                     rng=None, training=False, no_attention=False,
                     no_user_context=False, alpha_out=None):
    """Stack the k interval matrices into the (k, q, 2D) event cube.

    Dropout hits each interval vector before repetition.  alpha_out, when
    given, collects each interval's attention weight vector (numpy copies)
    for inspection.
    """
    mats = []
    for interval in event.intervals:
        x = embed_words(interval, params.word_table, tape)
        if no_attention:
            interval_vec = masked_mean_vector(x, interval.word_mask, tape)
            if alpha_out is not None:
                alpha_out.append(np.zeros(len(interval.word_mask)))
        else:
            h = bilstm_encode(x, params, tape)
            alpha, interval_vec = word_attention(h, interval.word_mask,
                                                 params, tape)
            if alpha_out is not None:
                alpha_out.append(alpha.data.copy())
        interval_vec = ops.dropout(interval_vec, dropout_rate, rng,
                                   training, tape)
        mats.append(build_interval_matrix(interval_vec, interval, user_table,
                                          tape, zero_users=no_user_context))
    return ops.stack_mats(mats, tape)


def attention_weights(event, params):
    """Per-interval attention vectors for a frozen model (no dropout)."""
    tape = Tape()
    out = []
    for interval in event.intervals:
        x = embed_words(interval, params.word_table, tape)
        h = bilstm_encode(x, params, tape)
        alpha, _ = word_attention(h, interval.word_mask, params, tape)
        out.append(alpha.data.copy())
    return out
