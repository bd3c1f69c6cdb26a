"""Parallel-corpus export and yield statistics.

Each matched pair becomes two WAV files (one per track; a multi-segment
side is concatenated in track order) plus one manifest line carrying the
ids, spans, texts and relative audio paths. The manifest is the corpus:
reading it back reproduces every pair exactly, and the audio durations
can be re-verified against the spans to the millisecond.

Yield statistics mirror the usual report layout: per-track input
inventory, the two time-gate thresholds, per-track consumed segment
counts, the produced duration, mean pair similarity, and the produced
duration as a percentage of the first track's input. A pair's duration
is the mean of its two sides (the convention is noted in the table
footer); the percent cell shows one decimal plus the truncated integer
that legacy reports print.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import read_wav, write_wav
from .matching import MatchOutcome
from .model import (
    PipelineConfig,
    SegmentLabel,
    SpeechSegment,
    TimeSpan,
    ValidationError,
)


@dataclass(frozen=True)
class PairSide:
    track: str
    language: str
    label: SegmentLabel
    spans: tuple  # of TimeSpan, track order
    texts: tuple  # transcript per member (D2) or source transcript (D1)
    translation: str | None
    audio_path: str  # relative to the manifest

    @property
    def duration_ms(self) -> int:
        return sum(span.duration_ms for span in self.spans)


@dataclass(frozen=True)
class PairManifestEntry:
    pair_id: str
    kind: str
    score: float
    left: PairSide
    right: PairSide


def _side_json(side: PairSide) -> dict:
    return {
        "track": side.track,
        "language": side.language,
        "label": side.label.value,
        "spans": [[s.start_ms, s.end_ms] for s in side.spans],
        "texts": list(side.texts),
        "translation": side.translation,
        "audio": side.audio_path,
    }


def _side_from_json(data: dict) -> PairSide:
    return PairSide(
        track=data["track"],
        language=data["language"],
        label=SegmentLabel.parse(data["label"]),
        spans=tuple(TimeSpan(int(a), int(b)) for a, b in data["spans"]),
        texts=tuple(data["texts"]),
        translation=data.get("translation"),
        audio_path=data["audio"],
    )


def _build_side(pair_ids: tuple, segments_by_id: dict, pair_id: str) -> PairSide:
    members = [segments_by_id[i] for i in pair_ids]
    first = members[0]
    translation = None
    if first.translation is not None:
        translation = " ".join(
            m.translation for m in members if m.translation is not None
        )
    return PairSide(
        track=first.track,
        language=first.language,
        label=first.label,
        spans=tuple(m.span for m in members),
        texts=tuple(m.transcript if isinstance(m.transcript, str) else "" for m in members),
        translation=translation,
        audio_path=f"audio/{pair_id}.{first.track}.wav",
    )


def export_pairs(
    outcome: MatchOutcome,
    audio_by_track: dict,
    segments_by_id: dict,
    out_dir: str | Path,
) -> Path:
    """Write per-side WAVs and the JSONL manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "pairs.jsonl"
    lines = []
    for k, pair in enumerate(outcome.pairs):
        pair_id = f"pair-{k:05d}"
        entry_sides = []
        for ids in (pair.left, pair.right):
            side = _build_side(ids, segments_by_id, pair_id)
            audio = audio_by_track.get(side.track)
            if audio is None:
                raise ValidationError(f"no audio supplied for track {side.track}")
            samples = np.concatenate(
                [audio.slice_span(span) for span in side.spans]
            )
            write_wav(out_dir / side.audio_path, samples)
            entry_sides.append(side)
        left, right = entry_sides
        lines.append(json.dumps({
            "pair_id": pair_id,
            "kind": pair.kind,
            "score": pair.score,
            "left": _side_json(left),
            "right": _side_json(right),
        }, ensure_ascii=False))
    manifest_path.write_text("\n".join(lines) + ("\n" if lines else ""),
                             encoding="utf-8")
    return manifest_path


def load_corpus_manifest(path: str | Path, verify_audio: bool = True) -> list:
    """Read the manifest back; optionally re-verify the written audio lengths."""
    path = Path(path)
    entries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        entry = PairManifestEntry(
            pair_id=row["pair_id"],
            kind=row["kind"],
            score=float(row["score"]),
            left=_side_from_json(row["left"]),
            right=_side_from_json(row["right"]),
        )
        if verify_audio:
            for side in (entry.left, entry.right):
                wav = path.parent / side.audio_path
                if not wav.exists():
                    raise ValidationError(f"{entry.pair_id}: missing audio {wav}")
                track = read_wav(wav, side.track)
                if abs(track.duration_ms - side.duration_ms) > 1:
                    raise ValidationError(
                        f"{entry.pair_id}: audio is {track.duration_ms} ms, "
                        f"manifest says {side.duration_ms} ms"
                    )
        entries.append(entry)
    return entries


@dataclass(frozen=True)
class CorpusStats:
    """One report row: inventory in, thresholds, corpus out."""

    pair_label: str  # e.g. "TR-AR"
    input_duration_s: dict  # track -> seconds
    input_segment_counts: dict  # track -> count
    output_segment_counts: dict  # track -> consumed segment count
    pair_count: int
    output_duration_s: float
    avg_similarity: float
    percent_yield: float
    max_start_diff_s: float
    max_dur_diff_s: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.percent_yield <= 100.0:
            raise ValidationError(f"percent_yield out of range: {self.percent_yield}")
        if self.pair_count > 0 and not 0.0 <= self.avg_similarity <= 1.0:
            raise ValidationError(f"avg_similarity out of range: {self.avg_similarity}")


def compute_stats(
    outcome: MatchOutcome,
    d1_segments: list,
    d2_segments: list,
    input_duration_s: dict,
    cfg: PipelineConfig,
    pair_label: str = "",
) -> CorpusStats:
    """Aggregate one run into a report row.

    The produced duration of a pair is the mean of its two sides' summed
    member durations; the yield percentage is taken against the first
    track's input duration.
    """
    tracks = list(input_duration_s)
    if len(tracks) != 2:
        raise ValidationError("input_duration_s must cover exactly two tracks")
    reference = input_duration_s[tracks[0]]
    if reference <= 0:
        raise ValidationError("reference input duration must be positive")

    by_id = {s.id: s for s in list(d1_segments) + list(d2_segments)}
    out_ms = 0
    consumed = {tracks[0]: 0, tracks[1]: 0}
    for pair in outcome.pairs:
        left_ms = sum(by_id[i].span.duration_ms for i in pair.left)
        right_ms = sum(by_id[i].span.duration_ms for i in pair.right)
        out_ms += (left_ms + right_ms) / 2
        consumed[by_id[pair.left[0]].track] += len(pair.left)
        consumed[by_id[pair.right[0]].track] += len(pair.right)

    output_s = out_ms / 1000.0
    return CorpusStats(
        pair_label=pair_label or f"{tracks[0]}-{tracks[1]}",
        input_duration_s=dict(input_duration_s),
        input_segment_counts={
            tracks[0]: len(d1_segments), tracks[1]: len(d2_segments)
        },
        output_segment_counts=consumed,
        pair_count=outcome.pair_count,
        output_duration_s=output_s,
        avg_similarity=outcome.mean_score,
        percent_yield=100.0 * output_s / reference,
        max_start_diff_s=cfg.max_start_diff_s,
        max_dur_diff_s=cfg.max_dur_diff_s,
    )


def _format_duration(seconds: float) -> str:
    if seconds >= 3600:
        return f"{seconds / 3600:.1f} hrs"
    if seconds >= 60:
        return f"{seconds / 60:.1f} mins"
    return f"{seconds:.1f} s"


COLUMNS = (
    "Lang.", "Input Duration", "Input Segments", "Dif Start Time", "Dif Dur",
    "Output Segments", "Output Duration", "Avg Similarity", "Percent",
)


def stats_row(stats: CorpusStats) -> tuple:
    tracks = list(stats.input_duration_s)
    return (
        stats.pair_label,
        _format_duration(stats.input_duration_s[tracks[0]]),
        ";".join(f"{stats.input_segment_counts[t]:,}" for t in tracks),
        f"<={stats.max_start_diff_s:g}",
        f"<={stats.max_dur_diff_s:g}",
        ";".join(f"{stats.output_segment_counts[t]:,}" for t in tracks),
        _format_duration(stats.output_duration_s),
        f"{stats.avg_similarity:.2f}",
        f"{stats.percent_yield:.1f}% ({int(stats.percent_yield)}%)",
    )


def stats_table(rows: list, fmt: str = "text") -> str:
    """Render report rows; `text` aligns columns, `tsv` is machine-friendly."""
    if not rows:
        raise ValidationError("stats_table needs at least one row")
    cells = [COLUMNS] + [stats_row(r) for r in rows]
    footer = ("# output duration is the mean of the two sides; "
              "percent shows one decimal and the truncated integer")
    if fmt == "tsv":
        return "\n".join("\t".join(row) for row in cells) + "\n" + footer + "\n"
    if fmt != "text":
        raise ValidationError(f"unknown table format: {fmt!r}")
    widths = [max(len(row[i]) for row in cells) for i in range(len(COLUMNS))]
    out = []
    for row in cells:
        out.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
    out.append(footer)
    return "\n".join(out) + "\n"
