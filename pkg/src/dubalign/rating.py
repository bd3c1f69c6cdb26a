"""Human rating of exported pairs: storage, sampling, and agreement stats.

Annotators score each pair on a 3-point scale (1 exact match, 0.5 semantic
match, 0 no match).  Ratings are kept in an append-only JSONL event log so a
crashed or restarted reviewer session never loses work; the latest event per
(pair, annotator) wins on load.
"""

from __future__ import annotations

import json
import random
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import PairManifestEntry
from .model import SegmentLabel, ValidationError

ALLOWED_SCORES = (0.0, 0.5, 1.0)


@dataclass(frozen=True)
class Rating:
    """A single annotator's verdict on one exported pair."""

    pair_id: str
    annotator_id: str
    score: float
    timestamp: float = field(default_factory=time.time)

    def __post_init__(self):
        if not self.pair_id:
            raise ValidationError("rating needs a pair id")
        if not self.annotator_id:
            raise ValidationError("rating needs an annotator id")
        if self.score not in ALLOWED_SCORES:
            raise ValidationError(
                "score must be one of 0, 0.5, 1; got %r" % (self.score,)
            )
        # normalize ints so equality and JSON round trips stay uniform
        object.__setattr__(self, "score", float(self.score))

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "annotator": self.annotator_id,
            "score": self.score,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, row: dict) -> "Rating":
        return cls(
            pair_id=row["pair_id"],
            annotator_id=row["annotator"],
            score=row["score"],
            timestamp=row["timestamp"],
        )


class RatingStore:
    """Durable upsert-by-(pair, annotator) store over a JSONL event log.

    Every ``record`` call appends one line; re-rating the same pair by the
    same annotator appends another line that shadows the first.  Loading
    replays the log in order, so the file can only grow but the visible
    state is the compacted last-write-wins view.
    """

    def __init__(self, path, known_pairs: Iterable[str] | None = None):
        self.path = Path(path)
        self.known_pairs = frozenset(known_pairs) if known_pairs is not None else None
        self._lock = threading.Lock()
        self._ratings: dict[tuple[str, str], Rating] = {}
        if self.path.exists():
            self._replay()

    def _replay(self):
        with open(self.path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rating = Rating.from_json(json.loads(line))
                except (json.JSONDecodeError, KeyError, ValidationError) as exc:
                    raise ValidationError(
                        f"{self.path}:{lineno}: bad rating event ({exc})"
                    ) from exc
                self._ratings[(rating.pair_id, rating.annotator_id)] = rating

    def record(self, rating: Rating) -> Rating:
        """Append the event and update the compacted view."""
        if self.known_pairs is not None and rating.pair_id not in self.known_pairs:
            raise ValidationError(f"unknown pair {rating.pair_id!r}")
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rating.to_json(), sort_keys=True) + "\n")
            self._ratings[(rating.pair_id, rating.annotator_id)] = rating
        return rating

    def get(self, pair_id: str, annotator_id: str) -> Rating | None:
        with self._lock:
            return self._ratings.get((pair_id, annotator_id))

    def ratings(self) -> tuple[Rating, ...]:
        with self._lock:
            items = sorted(self._ratings.items())
        return tuple(rating for _, rating in items)

    def annotators(self) -> tuple[str, ...]:
        with self._lock:
            return tuple(sorted({ann for _, ann in self._ratings}))

    def by_annotator(self, annotator_id: str) -> dict[str, float]:
        """pair id -> score for one annotator."""
        with self._lock:
            return {
                pair: rating.score
                for (pair, ann), rating in self._ratings.items()
                if ann == annotator_id
            }

    def rated_pairs(self, annotator_id: str) -> frozenset[str]:
        return frozenset(self.by_annotator(annotator_id))

    def __len__(self) -> int:
        with self._lock:
            return len(self._ratings)


def pair_duration_ms(entry: PairManifestEntry) -> int:
    # same convention as the corpus stats: a pair lasts the mean of its sides
    return round((entry.left.duration_ms + entry.right.duration_ms) / 2)


def sample_pairs(
    entries: Sequence[PairManifestEntry],
    n: int,
    seed: int,
    min_duration_s: float | None = None,
    max_duration_s: float | None = None,
) -> list[str]:
    """Draw ``n`` pair ids uniformly without replacement, reproducibly.

    The optional duration bounds (inclusive, in seconds) narrow the pool
    before sampling.  Pool order is normalized by pair id so the draw only
    depends on the seed and the surviving ids, not on manifest ordering.
    """
    pool = []
    for entry in entries:
        dur_s = pair_duration_ms(entry) / 1000.0
        if min_duration_s is not None and dur_s < min_duration_s:
            continue
        if max_duration_s is not None and dur_s > max_duration_s:
            continue
        pool.append(entry.pair_id)
    pool.sort()
    if n > len(pool):
        raise ValidationError(
            f"asked for {n} pairs but only {len(pool)} are available"
        )
    return random.Random(seed).sample(pool, n)


def cohen_kappa(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    """Cohen's kappa between two annotators' score maps (pair id -> score).

    Computed over the jointly rated pairs with chance agreement from the
    marginal score distributions.  The arithmetic stays in integers until
    the final division so equal inputs give exactly 1.0.
    """
    common = sorted(set(a) & set(b))
    if len(common) < 2:
        raise ValidationError(
            "kappa needs at least 2 jointly rated pairs; got %d" % len(common)
        )
    n = len(common)
    matches = sum(1 for pair in common if a[pair] == b[pair])
    counts_a = Counter(a[pair] for pair in common)
    counts_b = Counter(b[pair] for pair in common)
    chance = sum(counts_a[c] * counts_b[c] for c in ALLOWED_SCORES)
    if chance == n * n:
        # both annotators used a single identical category; p_e = 1 forces
        # p_o = 1, so agreement is perfect by convention
        return 1.0
    return (matches * n - chance) / (n * n - chance)


@dataclass(frozen=True)
class AgreementReport:
    """Consensus score distribution plus accuracy and inter-annotator kappa.

    ``score_counts`` and ``label_counts`` describe the consensus view: a
    pair's consensus score is the lowest score any annotator gave it, so a
    disputed pair is counted conservatively.  ``accuracy`` treats 0.5 as a
    correct match.
    """

    rated_total: int
    score_counts: Mapping[float, int]
    label_counts: Mapping[float, Mapping[str, int]]
    accuracy: float
    annotator_accuracy: Mapping[str, float]
    kappa: Mapping[tuple[str, str], float]

    def __post_init__(self):
        if sum(self.score_counts.values()) != self.rated_total:
            raise ValidationError("score counts must sum to the rated total")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValidationError("accuracy out of [0, 1]")
        for pair, value in self.kappa.items():
            if not -1.0 <= value <= 1.0:
                raise ValidationError(f"kappa for {pair} out of [-1, 1]")

    def to_json(self) -> dict:
        return {
            "rated_total": self.rated_total,
            "score_counts": {str(s): c for s, c in sorted(self.score_counts.items())},
            "label_counts": {
                str(s): dict(sorted(labels.items()))
                for s, labels in sorted(self.label_counts.items())
            },
            "accuracy": self.accuracy,
            "annotator_accuracy": dict(sorted(self.annotator_accuracy.items())),
            "kappa": {
                "|".join(pair): value for pair, value in sorted(self.kappa.items())
            },
        }


def _accuracy(scores: Iterable[float]) -> float:
    scores = list(scores)
    good = sum(1 for s in scores if s >= 0.5)
    return good / len(scores)


def agreement_report(
    ratings: Iterable[Rating],
    labels_by_pair: Mapping[str, str],
) -> AgreementReport:
    """Summarize ratings into the consensus distribution and kappa table.

    ``labels_by_pair`` maps pair id to its speech label (both sides of a
    pair share one by construction).  Kappa is reported for every annotator
    pair with at least 2 jointly rated items; thinner overlaps are omitted
    rather than failing the whole report.
    """
    by_annotator: dict[str, dict[str, float]] = {}
    consensus: dict[str, float] = {}
    for rating in ratings:
        if rating.pair_id not in labels_by_pair:
            raise ValidationError(
                f"rating references unknown pair {rating.pair_id!r}"
            )
        by_annotator.setdefault(rating.annotator_id, {})[rating.pair_id] = rating.score
        prior = consensus.get(rating.pair_id)
        consensus[rating.pair_id] = (
            rating.score if prior is None else min(prior, rating.score)
        )
    if not consensus:
        raise ValidationError("no ratings recorded")

    score_counts = {score: 0 for score in ALLOWED_SCORES}
    label_counts: dict[float, dict[str, int]] = {s: {} for s in ALLOWED_SCORES}
    for pair_id, score in consensus.items():
        score_counts[score] += 1
        label = labels_by_pair[pair_id]
        name = label.value if isinstance(label, SegmentLabel) else str(label)
        label_counts[score][name] = label_counts[score].get(name, 0) + 1

    kappa: dict[tuple[str, str], float] = {}
    annotators = sorted(by_annotator)
    for i, first in enumerate(annotators):
        for second in annotators[i + 1 :]:
            overlap = set(by_annotator[first]) & set(by_annotator[second])
            if len(overlap) >= 2:
                kappa[(first, second)] = cohen_kappa(
                    by_annotator[first], by_annotator[second]
                )

    return AgreementReport(
        rated_total=len(consensus),
        score_counts=score_counts,
        label_counts=label_counts,
        accuracy=_accuracy(consensus.values()),
        annotator_accuracy={
            ann: _accuracy(scores.values()) for ann, scores in by_annotator.items()
        },
        kappa=kappa,
    )
