"""Shared test helpers: finite-difference oracles and corpus builders."""

import numpy as np
import pytest

import rumornet as rn


def finite_difference(loss_fn, tensor, h=1e-5):
    """Central-difference gradient of a scalar closure w.r.t. tensor.data.

    The independent oracle for every analytic gradient in the suite.
    """
    flat = tensor.data.reshape(-1)
    out = np.zeros_like(flat)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = loss_fn()
        flat[i] = keep - h
        down = loss_fn()
        flat[i] = keep
        out[i] = (up - down) / (2.0 * h)
    return out.reshape(tensor.shape)


def max_rel_err(a, b, guard=1e-6):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.maximum(np.abs(a) + np.abs(b), guard)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


def toy_event(event_id, label, text, author, n_tweets=4):
    tweets = [rn.Tweet("%s-t%d" % (event_id, i), i + 1, author, text)
              for i in range(n_tweets)]
    return rn.Event(event_id, label, tweets)


def separable_corpus():
    """8 events split cleanly by wording; rumor and non-rumor never overlap."""
    corpus = []
    for i in range(4):
        corpus.append(toy_event("r%d" % i, 1,
                                "total hoax fake made up story", "a%d" % i))
        corpus.append(toy_event("n%d" % i, 0,
                                "confirmed verified true report news",
                                "b%d" % i))
    return corpus


@pytest.fixture
def rng():
    return rn.SeededRng(1234)
