"""Synthetic labeled corpora with planted, controllable signals.

Each mode plants a different cue separating rumor from non-rumor events:

  lexical  rumor tweets contain tokens from a small signal set with the
           given probability; non-rumor events never contain them
  author   token text is label-independent, but rumor tweets are written
           by a disjoint rumor-author pool with the given probability
  mixed    both cues
  none     no cue at all (chance-level ceiling)

Separate random substreams drive event structure, token text, author
choice, and signal placement, so label-dependent decisions never shift
the label-independent ones.  In author mode the two classes' token
distributions are identical by construction, not just in expectation.
"""

from dataclasses import dataclass

from .data import Event, Tweet
from .errors import ConfigError
from .rng import SeededRng

MODES = ("lexical", "author", "mixed", "none")


@dataclass
class SynthSpec:
    events: int = 200
    mode: str = "lexical"
    strength: float = 0.8
    seed: int = 0
    vocab_size: int = 60
    signal_tokens: int = 5
    authors: int = 40        # benign author pool size
    rumor_authors: int = 12  # disjoint rumor author pool size
    tweets_min: int = 8
    tweets_max: int = 16
    tokens_min: int = 4
    tokens_max: int = 10

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError("mode must be one of %s, got %r"
                              % ("/".join(MODES), self.mode))
        if not 0.0 <= self.strength <= 1.0:
            raise ConfigError("strength must be in [0,1], got %r"
                              % self.strength)
        for name in ("events", "vocab_size", "signal_tokens", "authors",
                     "rumor_authors", "tweets_min", "tokens_min"):
            if getattr(self, name) < 1:
                raise ConfigError("%s must be positive" % name)
        if self.tweets_max < self.tweets_min or self.tokens_max < self.tokens_min:
            raise ConfigError("range maxima must be >= minima")
        if self.vocab_size <= self.signal_tokens:
            raise ConfigError("vocabulary (%d) must be larger than the "
                              "signal set (%d)"
                              % (self.vocab_size, self.signal_tokens))


def generate(spec):
    """Build (corpus, manifest) fully determined by the spec.

    The manifest lists the planted signal: token strings under
    "signal_tokens", rumor-pool author ids under "rumor_authors" (each
    empty when the mode does not plant that cue).
    """
    root = SeededRng(spec.seed)
    rng_struct = root.child(0)   # tweet/token counts
    rng_tokens = root.child(1)   # background token text
    rng_author = root.child(2)   # author choice
    rng_signal = root.child(3)   # label-dependent planting decisions

    words = ["w%03d" % i for i in range(spec.vocab_size)]
    lexical = spec.mode in ("lexical", "mixed")
    authored = spec.mode in ("author", "mixed")
    signal_words = words[-spec.signal_tokens:] if lexical else []
    background = words[:-spec.signal_tokens] if lexical else words
    benign_pool = ["u%03d" % i for i in range(spec.authors)]
    rumor_pool = (["r%03d" % i for i in range(spec.rumor_authors)]
                  if authored else [])

    corpus = []
    for e in range(spec.events):
        label = e % 2  # alternating labels keep the balance within 1
        event_id = "ev%04d" % e
        n_tweets = int(rng_struct.integers(spec.tweets_min,
                                           spec.tweets_max + 1))
        tweets = []
        for t in range(n_tweets):
            n_tok = int(rng_struct.integers(spec.tokens_min,
                                            spec.tokens_max + 1))
            toks = [background[int(j)]
                    for j in rng_tokens.integers(0, len(background),
                                                 size=n_tok)]
            author = benign_pool[int(rng_author.integers(0, len(benign_pool)))]
            if label == 1:
                if lexical and rng_signal.random() < spec.strength:
                    pos = int(rng_signal.integers(0, n_tok))
                    sig = signal_words[int(rng_signal.integers(
                        0, len(signal_words)))]
                    toks[pos] = sig
                if authored and rng_signal.random() < spec.strength:
                    author = rumor_pool[int(rng_signal.integers(
                        0, len(rumor_pool)))]
            tweets.append(Tweet("%s-t%03d" % (event_id, t), t + 1,
                                author, " ".join(toks)))
        corpus.append(Event(event_id, label, tweets))
    manifest = {"signal_tokens": list(signal_words),
                "rumor_authors": list(rumor_pool)}
    return corpus, manifest
