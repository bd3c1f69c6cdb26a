"""Cross-track segment pairing under the four matching rules.

A pair of segments (or of one segment and a run of consecutive segments)
is acceptable when

1. the start times differ by at most ``max_start_diff_s`` (inclusive),
2. the speech durations differ by at most ``max_dur_diff_s`` (inclusive),
3. both sides carry the same label, and
4. the text similarity score is strictly above ``min_similarity``.

For a multi-segment side, the start time is the first member's start and
the duration is the sum of member durations (pauses between members do
not count); the similarity score is recomputed over the concatenated
text, not averaged over members.

The global assignment is a chronological greedy sweep over the first
track: each still-unmatched D1 segment first tries its best one-to-one
candidate, then a one-to-many window on D2, then a many-to-one window on
D1 anchored by a D2 segment. Ties on the one-to-one step break by higher
score, then smaller start gap, then smaller D2 id; window steps accept
the earliest-starting, shortest window that passes. Each segment is
consumed at most once. Greedy order is a pinned implementation choice;
nothing here searches for a globally optimal assignment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .model import (
    PipelineConfig,
    SegmentLabel,
    SpeechSegment,
    TimeSpan,
    ValidationError,
    check_track_segments,
)
from .similarity import SimilarityMatrix, matching_text

ONE_TO_ONE = "one-to-one"
ONE_TO_MANY = "one-to-many"
MANY_TO_ONE = "many-to-one"


@dataclass(frozen=True)
class RuleVerdicts:
    start_ok: bool
    duration_ok: bool
    label_ok: bool
    similarity_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.start_ok and self.duration_ok and self.label_ok and self.similarity_ok

    def to_json(self) -> dict:
        return {
            "start": self.start_ok,
            "duration": self.duration_ok,
            "label": self.label_ok,
            "similarity": self.similarity_ok,
        }


def rules_satisfied(
    left_span: TimeSpan,
    right_span: TimeSpan,
    left_label: SegmentLabel,
    right_label: SegmentLabel,
    score: float | None,
    cfg: PipelineConfig,
    left_duration_ms: int | None = None,
    right_duration_ms: int | None = None,
) -> RuleVerdicts:
    """Check Rules 1-4 for one candidate pairing.

    ``score`` may be None (not computed / no vocabulary coverage), which
    fails the similarity rule. The optional duration overrides let a
    caller check a combined window, whose duration is the member sum
    rather than the envelope of its span.
    """
    left_dur = left_span.duration_ms if left_duration_ms is None else left_duration_ms
    right_dur = right_span.duration_ms if right_duration_ms is None else right_duration_ms
    return RuleVerdicts(
        start_ok=abs(left_span.start_ms - right_span.start_ms) <= cfg.max_start_diff_ms,
        duration_ok=abs(left_dur - right_dur) <= cfg.max_dur_diff_ms,
        label_ok=left_label == right_label,
        similarity_ok=score is not None and score > cfg.min_similarity,
    )


@dataclass(frozen=True)
class SegmentPair:
    """One matched unit; exactly one side may have multiple members."""

    left: tuple  # D1 segment ids, track order
    right: tuple  # D2 segment ids, track order
    label: SegmentLabel
    score: float
    kind: str

    def __post_init__(self) -> None:
        if not self.left or not self.right:
            raise ValidationError("pair sides must be non-empty")
        if len(self.left) > 1 and len(self.right) > 1:
            raise ValidationError("many-to-many pairs are not a thing here")
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"pair score out of range: {self.score}")
        expected = (
            ONE_TO_ONE if len(self.left) == 1 and len(self.right) == 1
            else ONE_TO_MANY if len(self.right) > 1
            else MANY_TO_ONE
        )
        if self.kind != expected:
            raise ValidationError(f"pair kind {self.kind!r} contradicts side sizes")


@dataclass(frozen=True)
class MatchOutcome:
    pairs: tuple  # of SegmentPair, sorted by left start time
    unmatched_left: tuple  # D1 ids
    unmatched_right: tuple  # D2 ids

    @property
    def pair_count(self) -> int:
        return len(self.pairs)

    @property
    def mean_score(self) -> float:
        if not self.pairs:
            return 0.0
        return sum(p.score for p in self.pairs) / len(self.pairs)

    def consumed_ids(self) -> set:
        used: set = set()
        for pair in self.pairs:
            for seg_id in pair.left + pair.right:
                if seg_id in used:
                    raise ValidationError(f"segment {seg_id} appears in two pairs")
                used.add(seg_id)
        return used


def _sum_duration_ms(members: list[SpeechSegment]) -> int:
    return sum(s.span.duration_ms for s in members)


def _window_envelope(members: list[SpeechSegment]) -> TimeSpan:
    return TimeSpan(members[0].span.start_ms, members[-1].span.end_ms)


def window_combine(
    anchor: SpeechSegment,
    candidates: list[SpeechSegment],
    matrix: SimilarityMatrix,
    cfg: PipelineConfig,
    available: set | None = None,
    fixed_start: int | None = None,
    anchor_side: str = "left",
) -> SegmentPair | None:
    """Slide a window of consecutive candidate segments against one anchor.

    Windows start at each candidate position in track order (or only at
    ``fixed_start``), grow one segment at a time while the summed duration
    stays within the anchor duration plus the duration slack, and the
    first window whose start gap, summed duration, labels and recomputed
    similarity all pass is returned. ``available`` restricts membership
    to unconsumed segments; a window never spans a consumed one.
    ``anchor_side`` says which track the anchor lives on ("left" = D1).
    """
    if not candidates:
        return None
    anchor_text = matching_text(anchor)
    anchor_dur = anchor.span.duration_ms
    budget = anchor_dur + cfg.max_dur_diff_ms
    starts = range(len(candidates)) if fixed_start is None else [fixed_start]
    for p in starts:
        first = candidates[p]
        if available is not None and first.id not in available:
            continue
        if abs(anchor.span.start_ms - first.span.start_ms) > cfg.max_start_diff_ms:
            continue
        if first.label != anchor.label:
            continue
        members: list = []
        total = 0
        for q in range(p, min(p + cfg.max_window_segments, len(candidates))):
            nxt = candidates[q]
            if available is not None and nxt.id not in available:
                break  # window may not span a consumed segment
            if nxt.label != anchor.label:
                break
            if total + nxt.span.duration_ms > budget:
                break
            members.append(nxt)
            total += nxt.span.duration_ms
            if abs(anchor_dur - total) > cfg.max_dur_diff_ms:
                continue  # too short still; keep growing
            text = " ".join(matching_text(m) for m in members)
            score = matrix.score_texts(anchor_text, text)
            if score is None or score <= cfg.min_similarity:
                continue
            if anchor_side == "left":
                left, right = (anchor.id,), tuple(m.id for m in members)
            else:
                left, right = tuple(m.id for m in members), (anchor.id,)
            kind = (
                ONE_TO_ONE if len(members) == 1
                else ONE_TO_MANY if len(right) > 1
                else MANY_TO_ONE
            )
            return SegmentPair(left=left, right=right, label=anchor.label,
                               score=score, kind=kind)
    return None


def run_matching(
    d1_segments: list[SpeechSegment],
    d2_segments: list[SpeechSegment],
    matrix: SimilarityMatrix,
    cfg: PipelineConfig,
) -> MatchOutcome:
    """Greedy chronological pairing over the two segment lists."""
    check_track_segments(d1_segments)
    check_track_segments(d2_segments)
    d2_by_id = {s.id: s for s in d2_segments}
    available_d1 = {s.id for s in d1_segments}
    available_d2 = {s.id for s in d2_segments}
    pairs: list = []

    for index, left in enumerate(d1_segments):
        if left.id not in available_d1:
            continue

        # one-to-one: best scoring candidate that passes every rule
        best = None
        for right in d2_segments:
            if right.id not in available_d2:
                continue
            score = matrix.get(left.id, right.id)
            verdicts = rules_satisfied(
                left.span, right.span, left.label, right.label, score, cfg
            )
            if not verdicts.all_ok:
                continue
            rank = (-score, abs(left.span.start_ms - right.span.start_ms), right.id)
            if best is None or rank < best[0]:
                best = (rank, right, score)
        if best is not None:
            _, right, score = best
            pairs.append(SegmentPair(left=(left.id,), right=(right.id,),
                                     label=left.label, score=score, kind=ONE_TO_ONE))
            available_d1.discard(left.id)
            available_d2.discard(right.id)
            continue

        # one-to-many: this segment against a window of D2 segments
        pair = window_combine(left, d2_segments, matrix, cfg, available=available_d2)
        if pair is not None and len(pair.right) > 1:
            pairs.append(pair)
            available_d1.discard(left.id)
            for seg_id in pair.right:
                available_d2.discard(seg_id)
            continue

        # many-to-one: a window of D1 segments starting here, against one
        # D2 anchor; anchors are tried in track order
        emitted = None
        for right in d2_segments:
            if right.id not in available_d2:
                continue
            candidate = window_combine(
                right, d1_segments, matrix, cfg,
                available=available_d1, fixed_start=index, anchor_side="right",
            )
            if candidate is not None and len(candidate.left) > 1:
                emitted = candidate
                break
        if emitted is not None:
            pairs.append(emitted)
            for seg_id in emitted.left:
                available_d1.discard(seg_id)
            available_d2.discard(emitted.right[0])

    d1_by_id = {s.id: s for s in d1_segments}
    pairs.sort(key=lambda p: d1_by_id[p.left[0]].span.start_ms)
    outcome = MatchOutcome(
        pairs=tuple(pairs),
        unmatched_left=tuple(s.id for s in d1_segments if s.id in available_d1),
        unmatched_right=tuple(s.id for s in d2_segments if s.id in available_d2),
    )
    outcome.consumed_ids()  # raises if a segment were double-booked
    return outcome


def save_outcome(
    outcome: MatchOutcome,
    d1_segments: list[SpeechSegment],
    d2_segments: list[SpeechSegment],
    cfg: PipelineConfig,
    path: str | Path,
) -> None:
    """One JSON line per pair: ids, spans, kind, score, per-rule verdicts."""
    by_id = {s.id: s for s in list(d1_segments) + list(d2_segments)}
    lines = []
    for pair in outcome.pairs:
        left = [by_id[i] for i in pair.left]
        right = [by_id[i] for i in pair.right]
        verdicts = rules_satisfied(
            _window_envelope(left), _window_envelope(right),
            left[0].label, right[0].label, pair.score, cfg,
            left_duration_ms=_sum_duration_ms(left),
            right_duration_ms=_sum_duration_ms(right),
        )
        lines.append(json.dumps({
            "kind": pair.kind,
            "label": pair.label.value,
            "score": pair.score,
            "left_ids": list(pair.left),
            "right_ids": list(pair.right),
            "left_spans": [[s.span.start_ms, s.span.end_ms] for s in left],
            "right_spans": [[s.span.start_ms, s.span.end_ms] for s in right],
            "rules": verdicts.to_json(),
        }, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_outcome(
    path: str | Path,
    d1_segments: list[SpeechSegment],
    d2_segments: list[SpeechSegment],
) -> MatchOutcome:
    """Rebuild an outcome from its JSONL dump plus the segment inventories."""
    pairs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        pairs.append(SegmentPair(
            left=tuple(row["left_ids"]),
            right=tuple(row["right_ids"]),
            label=SegmentLabel.parse(row["label"]),
            score=float(row["score"]),
            kind=row["kind"],
        ))
    consumed = {i for p in pairs for i in p.left + p.right}
    return MatchOutcome(
        pairs=tuple(pairs),
        unmatched_left=tuple(s.id for s in d1_segments if s.id not in consumed),
        unmatched_right=tuple(s.id for s in d2_segments if s.id not in consumed),
    )
