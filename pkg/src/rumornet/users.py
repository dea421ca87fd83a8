"""Author-embedding table: init, negative-sampling pretraining, persistence.

The table reserves row 0 for the null author (padding slots and authors
never seen in training).  That row is all zeros and is never written by
any update path.

File format: 8-byte magic "USRTBL01", an 8-byte little-endian header
length, a JSON header {"n", "d", "user_ids", "trainable"}, then the
(n+1) x d matrix as little-endian float64, row-major, null row included.
"""

import json
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FormatError
from .optim import AdadeltaState, adadelta_step
from .tensor import Tensor

_MAGIC = b"USRTBL01"


@dataclass
class UserTable:
    row_of: dict            # user_id -> row index >= 1
    matrix: Tensor          # (n_users + 1) x d, row 0 frozen zero
    trainable: bool = True

    @property
    def dim(self):
        return self.matrix.shape[1]

    def row_index(self, user_id):
        """Total over all inputs: unknown ids and None map to the null row."""
        if user_id is None:
            return 0
        return self.row_of.get(user_id, 0)


@dataclass
class UserHistory:
    user_id: str
    documents: list  # token-index lists


def init_user_table(user_ids, dim, rng):
    if dim < 1:
        raise DataError("user embedding dimension must be >= 1")
    if len(set(user_ids)) != len(user_ids):
        raise DataError("duplicate user_id in table initialization")
    mat = np.zeros((len(user_ids) + 1, dim))
    if user_ids:
        mat[1:] = rng.uniform(-0.08, 0.08, size=(len(user_ids), dim))
    row_of = {uid: i + 1 for i, uid in enumerate(user_ids)}
    return UserTable(row_of, Tensor(mat))


def lookup(table, user_id):
    """Embedding row for a user id; zeros for unknown or null authors."""
    return table.matrix.data[table.row_index(user_id)]


def _log_sigmoid(x):
    if x >= 0.0:
        return -np.log1p(np.exp(-x))
    return x - np.log1p(np.exp(x))


def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


def pretrain(table, histories, word_vecs, epochs, neg_samples, rng,
             rho=0.95, eps=1e-6, epoch_losses=None):
    """Fit user rows (and word vectors) by skip-gram negative sampling.

    Per (user u, word w) pair the loss is
        -log sigmoid(u.v_w) - sum_j log sigmoid(-u.v_nj)
    with negatives drawn from the history unigram distribution raised to
    the 3/4 power.  Each pair applies one adadelta step to the touched
    rows.  Users with empty histories are skipped with a warning.
    """
    dim = table.dim
    if word_vecs.shape[1] != dim:
        raise DataError("word vector width %d does not match user width %d"
                        % (word_vecs.shape[1], dim))
    counts = {}
    active = []
    for hist in histories:
        row = table.row_of.get(hist.user_id)
        if row is None:
            raise DataError("user %r is not in the table" % hist.user_id)
        tokens = [w for doc in hist.documents for w in doc]
        if not tokens:
            warnings.warn("user %r has an empty history; skipped"
                          % hist.user_id)
            continue
        active.append((row, tokens))
        for w in tokens:
            counts[w] = counts.get(w, 0) + 1
    if not active or epochs <= 0:
        return table

    noise_ids = np.array(sorted(counts), dtype=np.int64)
    noise_p = np.array([counts[w] for w in noise_ids], dtype=np.float64)
    noise_p **= 0.75
    noise_p /= noise_p.sum()

    u_eg2 = np.zeros(table.matrix.shape)
    u_edx2 = np.zeros(table.matrix.shape)
    w_eg2 = np.zeros(word_vecs.shape)
    w_edx2 = np.zeros(word_vecs.shape)

    def step_row(mat, eg2, edx2, row, grad):
        t = Tensor(mat[row])
        t.grad = grad
        adadelta_step(t, AdadeltaState(eg2[row], edx2[row]), rho, eps)

    for _ in range(epochs):
        total = 0.0
        pairs = 0
        for row, tokens in active:
            for w in tokens:
                negs = rng.choice(noise_ids, size=neg_samples, p=noise_p)
                u = table.matrix.data[row]
                idxs = np.concatenate(([w], negs))
                targets = np.zeros(len(idxs))
                targets[0] = 1.0
                vs = word_vecs.data[idxs]
                scores = vs @ u
                total += -_log_sigmoid(scores[0])
                total += sum(-_log_sigmoid(-s) for s in scores[1:])
                pairs += 1
                # dL/d(score_i) = sigmoid(score_i) - target_i; all row
                # gradients are taken at the pre-update point, so build
                # them before any step touches u in place
                ds = np.array([_sigmoid(s) for s in scores]) - targets
                du = ds @ vs
                # merge repeated indices so each row gets one step per pair
                by_row = {}
                for i, idx in enumerate(idxs):
                    by_row[int(idx)] = by_row.get(int(idx), 0.0) + ds[i] * u
                step_row(table.matrix.data, u_eg2, u_edx2, row, du)
                for idx, gv in by_row.items():
                    step_row(word_vecs.data, w_eg2, w_edx2, idx, gv)
        if epoch_losses is not None:
            epoch_losses.append(total / pairs)
    table.matrix.data[0] = 0.0
    return table


def save(table, path):
    header = json.dumps({
        "n": len(table.row_of),
        "d": table.dim,
        "user_ids": [uid for uid, _ in
                     sorted(table.row_of.items(), key=lambda kv: kv[1])],
        "trainable": table.trainable,
    }, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(table.matrix.data, dtype="<f8").tobytes())


def load(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 or blob[:6] != _MAGIC[:6]:
        raise FormatError("not a user-table file: %s" % path)
    if blob[6:8] != _MAGIC[6:8]:
        raise FormatError("user-table version mismatch: got %r, expected %r"
                          % (blob[6:8].decode("ascii", "replace"),
                             _MAGIC[6:8].decode("ascii")))
    if len(blob) < 16:
        raise FormatError("unexpected end of file in %s" % path)
    (hlen,) = struct.unpack("<Q", blob[8:16])
    if len(blob) < 16 + hlen:
        raise FormatError("unexpected end of file in %s" % path)
    try:
        header = json.loads(blob[16:16 + hlen].decode("utf-8"))
        n, d = int(header["n"]), int(header["d"])
        user_ids = list(header["user_ids"])
        trainable = bool(header.get("trainable", True))
    except (ValueError, KeyError) as exc:
        raise FormatError("bad user-table header in %s (%s)" % (path, exc))
    want = (n + 1) * d * 8
    body = blob[16 + hlen:]
    if len(body) < want:
        raise FormatError("unexpected end of file in %s" % path)
    mat = np.frombuffer(body[:want], dtype="<f8").reshape(n + 1, d).copy()
    row_of = {uid: i + 1 for i, uid in enumerate(user_ids)}
    return UserTable(row_of, Tensor(mat), trainable)
