"""Labeled speech/non-speech spans per track.

The primary path ingests the TSV a pre-trained neural segmenter writes
(`label\\tstart\\tstop`, seconds). A crude energy-based fallback exists for
running fully offline; it cannot tell music from speech, so its output is
flagged as degraded and every active span carries a placeholder label.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioTrack
from .model import (
    MATCHABLE_LABELS,
    UNRECOGNIZED,
    SegmentLabel,
    SpeechSegment,
    TimeSpan,
    ValidationError,
    ms_from_seconds,
)

log = logging.getLogger(__name__)

DEGRADED_COMMENT = "# degraded: energy fallback, speech/music labels approximate"

# energy fallback knobs (ms)
MIN_ACTIVE_MS = 200
MERGE_GAP_MS = 100


@dataclass(frozen=True)
class VadReport:
    """Ordered (label, span) list for one track."""

    track: str
    segments: tuple  # of (SegmentLabel, TimeSpan)
    degraded: bool = False

    def __post_init__(self) -> None:
        for (_, prev), (_, cur) in zip(self.segments, self.segments[1:]):
            if cur.start_ms < prev.start_ms:
                raise ValidationError(
                    f"{self.track}: VAD spans out of order at {cur.start_ms} ms"
                )
            if prev.overlaps(cur):
                raise ValidationError(
                    f"{self.track}: VAD spans overlap at {cur.start_ms} ms"
                )

    def __len__(self) -> int:
        return len(self.segments)


def ingest_vad(path: str | Path, track: str) -> VadReport:
    """Parse a segmenter TSV; rows must be chronological and non-overlapping."""
    path = Path(path)
    segments = []
    degraded = False
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.lower().startswith("# degraded"):
                degraded = True
            continue
        if lineno == 1 and line.lower().startswith("label\t"):
            continue  # optional header row
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValidationError(
                f"{path}:{lineno}: expected `label\\tstart\\tstop`, got {raw!r}"
            )
        try:
            label = SegmentLabel.parse(parts[0])
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
        try:
            start_s, stop_s = float(parts[1]), float(parts[2])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: unparsable time bounds") from None
        if stop_s <= start_s:
            raise ValidationError(
                f"{path}:{lineno}: inverted span [{start_s}, {stop_s}]"
            )
        try:
            span = TimeSpan(ms_from_seconds(start_s), ms_from_seconds(stop_s))
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
        segments.append((label, span))
    try:
        return VadReport(track=track, segments=tuple(segments), degraded=degraded)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def save_vad(report: VadReport, path: str | Path) -> None:
    """Write the TSV format ingest_vad reads; ingest(save(r)) == r."""
    lines = []
    if report.degraded:
        lines.append(DEGRADED_COMMENT)
    for label, span in report.segments:
        lines.append(f"{label.value}\t{span.start_ms / 1000:.3f}\t{span.end_ms / 1000:.3f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _frame_rms(samples: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    n_frames = 1 + max(0, (samples.shape[0] - frame_len)) // hop
    x = samples.astype(np.float64)
    sq = np.concatenate([[0.0], np.cumsum(x * x)])
    starts = np.arange(n_frames) * hop
    ends = np.minimum(starts + frame_len, samples.shape[0])
    return np.sqrt((sq[ends] - sq[starts]) / np.maximum(ends - starts, 1))


def energy_vad(
    audio: AudioTrack,
    frame_ms: int = 25,
    hop_ms: int = 10,
    threshold_db: float = -35.0,
) -> VadReport:
    """Mark spans whose frame RMS clears ``threshold_db`` relative to the peak.

    Active runs shorter than 200 ms are dropped, gaps up to 100 ms are
    bridged, everything else becomes noEnergy, and the two kinds of span
    tile the whole track. Active spans get the ``male`` placeholder label;
    the report's ``degraded`` flag records that speech and music were not
    separated.
    """
    if audio.samples.shape[0] == 0:
        raise ValidationError(f"{audio.track}: empty audio")
    sr = audio.sample_rate
    frame_len = (frame_ms * sr) // 1000
    hop = (hop_ms * sr) // 1000
    rms = _frame_rms(audio.samples, frame_len, hop)
    peak = rms.max()
    if peak <= 0:
        active = np.zeros(rms.shape[0], dtype=bool)
    else:
        active = rms > peak * (10.0 ** (threshold_db / 20.0))

    # frame i covers [i*hop_ms, i*hop_ms + frame_ms)
    runs = []
    start = None
    for i, flag in enumerate(active):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start * hop_ms, (i - 1) * hop_ms + frame_ms))
            start = None
    if start is not None:
        runs.append((start * hop_ms, (len(active) - 1) * hop_ms + frame_ms))

    merged = []
    for lo, hi in runs:
        if merged and lo - merged[-1][1] <= MERGE_GAP_MS:
            merged[-1][1] = hi
        else:
            merged.append([lo, hi])
    total_ms = audio.duration_ms
    kept = [(lo, min(hi, total_ms)) for lo, hi in merged if hi - lo >= MIN_ACTIVE_MS]

    segments = []
    cursor = 0
    for lo, hi in kept:
        if lo > cursor:
            segments.append((SegmentLabel.NO_ENERGY, TimeSpan(cursor, lo)))
        segments.append((SegmentLabel.MALE, TimeSpan(lo, hi)))
        cursor = hi
    if cursor < total_ms:
        segments.append((SegmentLabel.NO_ENERGY, TimeSpan(cursor, total_ms)))
    return VadReport(track=audio.track, segments=tuple(segments), degraded=True)


def label_histogram(reports: list[VadReport]) -> dict:
    """Per-track segment counts per label, zeros included."""
    counts: dict = {}
    for report in reports:
        per_label = {label: 0 for label in SegmentLabel}
        for label, _ in report.segments:
            per_label[label] += 1
        counts[report.track] = per_label
    return counts


def slice_speech_segments(report: VadReport, language: str = "") -> list[SpeechSegment]:
    """Turn matchable spans (female/male/music) into pending speech segments.

    Ids are positional over the kept spans; transcripts start as the
    Unrecognized placeholder until a transcription provider fills them.
    """
    if report.degraded:
        log.warning(
            "%s: labels come from the energy fallback; music/speech gating degraded",
            report.track,
        )
    out = []
    for label, span in report.segments:
        if label not in MATCHABLE_LABELS:
            continue
        out.append(
            SpeechSegment(
                id=f"{report.track}-{len(out):05d}",
                track=report.track,
                span=span,
                label=label,
                language=language,
                transcript=UNRECOGNIZED,
            )
        )
    return out
