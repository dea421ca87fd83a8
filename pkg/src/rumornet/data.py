"""Corpus model: tweets, events, tokenization, vocabulary, interval splitting.

The on-disk corpus format is JSON-lines, one event per line:

    {"event_id": str, "label": 0|1,
     "tweets": [{"tweet_id": str, "timestamp": int, "user_id": str,
                 "text": str}, ...]}

Events are normalized on load: tweets sorted ascending by (timestamp,
tweet_id).  Saving a normalized corpus and reloading it round-trips
byte-identically.
"""

import json
import math
import re
from dataclasses import dataclass

from .errors import DataError, FormatError

PAD = 0
UNK = 1

_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_MENTION_RE = re.compile(r"@\w+")
_TOKEN_RE = re.compile(r"<url>|<mention>|\w+|[^\w\s]")


@dataclass
class Tweet:
    tweet_id: str
    timestamp: int
    user_id: str
    text: str
    tokens: list = None  # token indices, filled by index_corpus


@dataclass
class Event:
    event_id: str
    label: int
    tweets: list


@dataclass
class Vocabulary:
    token_to_index: dict
    index_to_token: list

    def __len__(self):
        return len(self.index_to_token)

    def index(self, token):
        return self.token_to_index.get(token, UNK)


@dataclass
class Interval:
    word_indices: list  # exactly p entries, PAD-padded
    word_mask: list     # boolean prefix mask, same length
    tweet_user_ids: list  # q entries; None marks a padded slot


@dataclass
class IntervalizedEvent:
    event_id: str
    label: int
    intervals: list
    q: int


def tokenize(text):
    """Lowercase, collapse URLs and @-mentions, split words/punctuation."""
    text = text.lower()
    text = _URL_RE.sub(" <url> ", text)
    text = _MENTION_RE.sub(" <mention> ", text)
    return _TOKEN_RE.findall(text)


def build_vocabulary(corpus, min_count=1):
    """Count tokens across the corpus; frequent ones get indices >= 2.

    Index order is descending frequency, ties broken lexicographically, so
    rebuilding on the same corpus is deterministic.  Tokens below min_count
    fall back to UNK at lookup time.
    """
    if not corpus:
        raise DataError("cannot build a vocabulary from an empty corpus")
    counts = {}
    for event in corpus:
        for tweet in event.tweets:
            for tok in tokenize(tweet.text):
                counts[tok] = counts.get(tok, 0) + 1
    kept = sorted((t for t, c in counts.items() if c >= min_count),
                  key=lambda t: (-counts[t], t))
    index_to_token = ["<pad>", "<unk>"] + kept
    token_to_index = {t: i + 2 for i, t in enumerate(kept)}
    return Vocabulary(token_to_index, index_to_token)


def index_corpus(corpus, vocab):
    """Fill each tweet's token-index list in place; returns the corpus."""
    for event in corpus:
        for tweet in event.tweets:
            tweet.tokens = [vocab.index(t) for t in tokenize(tweet.text)]
    return corpus


def split_into_intervals(event, k, p, q_min=3):
    """Partition an event's tweets into k balanced contiguous chunks.

    The first N mod k chunks take one extra tweet so sizes differ by at
    most 1 and chronology is preserved.  Each chunk's token lists are
    concatenated then padded/truncated to exactly p words with a prefix
    mask.  q = max(q_min, ceil(N/k)); author lists are padded to q with
    None.  q_min defaults to 3 so the 3x3 convolution window always fits.
    """
    if k < 1 or p < 1:
        raise DataError("split_into_intervals needs k >= 1 and p >= 1")
    tweets = event.tweets
    n = len(tweets)
    base, rem = divmod(n, k)
    q = max(q_min, math.ceil(n / k)) if n else q_min
    intervals = []
    pos = 0
    for i in range(k):
        size = base + (1 if i < rem else 0)
        chunk = tweets[pos:pos + size]
        pos += size
        words = []
        for tw in chunk:
            if tw.tokens is None:
                raise DataError("tweet %s has no token indices; run "
                                "index_corpus first" % tw.tweet_id)
            words.extend(tw.tokens)
        words = words[:p]
        n_real = len(words)
        mask = [True] * n_real + [False] * (p - n_real)
        words = words + [PAD] * (p - n_real)
        authors = [tw.user_id for tw in chunk] + [None] * (q - len(chunk))
        intervals.append(Interval(words, mask, authors))
    return IntervalizedEvent(event.event_id, event.label, intervals, q)


def _parse_tweet(obj, lineno):
    try:
        tweet = Tweet(str(obj["tweet_id"]), int(obj["timestamp"]),
                      str(obj["user_id"]), str(obj["text"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError("line %d: bad tweet record (%s)" % (lineno, exc))
    if tweet.timestamp < 0:
        raise DataError("line %d: timestamp must be >= 0" % lineno)
    return tweet


def load_corpus(path):
    """Parse and validate a JSON-lines corpus file."""
    events = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError("line %d: malformed JSON (%s)" % (lineno, exc))
            try:
                event_id = str(obj["event_id"])
                label = obj["label"]
                raw_tweets = obj["tweets"]
            except (KeyError, TypeError) as exc:
                raise FormatError("line %d: missing field (%s)" % (lineno, exc))
            if label not in (0, 1):
                raise DataError("line %d: label must be 0 or 1, got %r"
                                % (lineno, label))
            if event_id in seen:
                raise DataError("line %d: duplicate event_id %r"
                                % (lineno, event_id))
            seen.add(event_id)
            if not isinstance(raw_tweets, list) or not raw_tweets:
                raise DataError("line %d: event %r needs at least one tweet"
                                % (lineno, event_id))
            tweets = [_parse_tweet(t, lineno) for t in raw_tweets]
            tweets.sort(key=lambda t: (t.timestamp, t.tweet_id))
            events.append(Event(event_id, int(label), tweets))
    return events


def save_corpus(corpus, path):
    """Write events as normalized JSON lines (sorted keys, compact).

    Tweets are written in (timestamp, tweet_id) order, the same order
    load_corpus produces, so saving is canonical: save(load(f)) == f.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for event in corpus:
            obj = {
                "event_id": event.event_id,
                "label": event.label,
                "tweets": [
                    {"tweet_id": t.tweet_id, "timestamp": t.timestamp,
                     "user_id": t.user_id, "text": t.text}
                    for t in sorted(event.tweets,
                                    key=lambda t: (t.timestamp, t.tweet_id))
                ],
            }
            fh.write(json.dumps(obj, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


@dataclass
class StatsReport:
    unique_users: int
    tweet_count: int
    event_count: int
    rumor_events: int
    nonrumor_events: int
    avg_posts: float
    max_posts: int
    min_posts: int

    _ROWS = (
        ("No. of unique users", "unique_users"),
        ("No. of tweets", "tweet_count"),
        ("No. of events", "event_count"),
        ("No. of rumor events", "rumor_events"),
        ("No. of non-rumor events", "nonrumor_events"),
        ("Avg no. of posts/event", "avg_posts"),
        ("Max no. of posts/event", "max_posts"),
        ("Min no. of posts/event", "min_posts"),
    )

    def to_json_dict(self):
        return {name: getattr(self, attr) for name, attr in self._ROWS}

    def to_table(self):
        lines = []
        width = max(len(name) for name, _ in self._ROWS)
        for name, attr in self._ROWS:
            value = getattr(self, attr)
            if attr == "avg_posts":
                value = round(value)
            lines.append("%-*s  %s" % (width, name, format(value, ",")))
        return "\n".join(lines)


def corpus_stats(corpus):
    if not corpus:
        raise DataError("corpus_stats needs at least one event")
    users = set()
    per_event = []
    rumor = 0
    for event in corpus:
        per_event.append(len(event.tweets))
        rumor += event.label
        for tweet in event.tweets:
            users.add(tweet.user_id)
    total = sum(per_event)
    return StatsReport(
        unique_users=len(users),
        tweet_count=total,
        event_count=len(corpus),
        rumor_events=rumor,
        nonrumor_events=len(corpus) - rumor,
        avg_posts=total / len(corpus),
        max_posts=max(per_event),
        min_posts=min(per_event),
    )
