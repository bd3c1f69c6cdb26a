"""Shared domain types for the dubbed-corpus pipeline.

Time is stored as integer milliseconds internally so slicing, matching
and bookkeeping stay bit-exact; seconds are derived views. Exactly two
tracks (the two dubbed variants of the same content) take part in a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path


class ValidationError(ValueError):
    """Input violates a documented contract (bad value, bad format)."""


class MissingArtifactError(FileNotFoundError):
    """A pipeline stage input that an earlier stage should have produced."""


def ms_from_seconds(seconds: float) -> int:
    """Convert seconds to integer milliseconds (nearest, ties away from zero)."""
    if not math.isfinite(seconds):
        raise ValidationError(f"non-finite time value: {seconds!r}")
    return int(math.floor(seconds * 1000.0 + 0.5))


@dataclass(frozen=True, order=True)
class TimeSpan:
    """A half-open time interval [start_ms, end_ms) with millisecond resolution."""

    start_ms: int
    end_ms: int

    def __post_init__(self) -> None:
        if not (isinstance(self.start_ms, int) and isinstance(self.end_ms, int)):
            raise ValidationError("TimeSpan boundaries must be integer milliseconds")
        if self.start_ms < 0:
            raise ValidationError(f"TimeSpan start must be >= 0, got {self.start_ms}")
        if self.end_ms <= self.start_ms:
            raise ValidationError(
                f"TimeSpan end ({self.end_ms}) must exceed start ({self.start_ms})"
            )

    @classmethod
    def from_seconds(cls, start_s: float, end_s: float) -> "TimeSpan":
        return cls(ms_from_seconds(start_s), ms_from_seconds(end_s))

    @property
    def start_s(self) -> float:
        return self.start_ms / 1000.0

    @property
    def end_s(self) -> float:
        return self.end_ms / 1000.0

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms

    @property
    def duration_s(self) -> float:
        return self.duration_ms / 1000.0

    def overlaps(self, other: "TimeSpan") -> bool:
        return self.start_ms < other.end_ms and other.start_ms < self.end_ms


class SegmentLabel(Enum):
    """The closed label set the audio segmenter emits."""

    FEMALE = "female"
    MALE = "male"
    MUSIC = "music"
    NOISE = "noise"
    NO_ENERGY = "noEnergy"

    @classmethod
    def parse(cls, text: str) -> "SegmentLabel":
        key = text.strip()
        for label in cls:
            if label.value.lower() == key.lower():
                return label
        raise ValidationError(f"unknown segment label: {text!r}")


# Labels that carry speech usable for cross-lingual matching.
MATCHABLE_LABELS = frozenset(
    {SegmentLabel.FEMALE, SegmentLabel.MALE, SegmentLabel.MUSIC}
)


class _UnrecognizedType:
    """Singleton marker: the ASR provider could not transcribe the span.

    Distinct from ``None`` (no transcription attempted yet) and from a
    transport failure (an exception). Compares only to itself.
    """

    _instance: "_UnrecognizedType | None" = None

    def __new__(cls) -> "_UnrecognizedType":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNRECOGNIZED"

    def __bool__(self) -> bool:
        return False


UNRECOGNIZED = _UnrecognizedType()


@dataclass(frozen=True)
class SpeechSegment:
    """A labeled, timed audio span on one track, with optional text fields.

    ``transcript`` holds the recognized text once ASR succeeded and the
    ``UNRECOGNIZED`` marker otherwise (both before ASR ran and when the
    provider could not make sense of the audio); ``None`` means the field
    simply was not populated. ``translation`` is filled on the designated
    source track only.
    """

    id: str
    track: str
    span: TimeSpan
    label: SegmentLabel
    language: str = ""
    transcript: str | _UnrecognizedType | None = None
    translation: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("segment id must be non-empty")
        if not self.track:
            raise ValidationError("segment track must be non-empty")

    @property
    def is_unrecognized(self) -> bool:
        return self.transcript is UNRECOGNIZED

    @property
    def has_transcript(self) -> bool:
        return isinstance(self.transcript, str)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "track": self.track,
            "start_ms": self.span.start_ms,
            "end_ms": self.span.end_ms,
            "label": self.label.value,
            "language": self.language,
            "transcript": self.transcript if isinstance(self.transcript, str) else None,
            "unrecognized": self.is_unrecognized,
            "translation": self.translation,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SpeechSegment":
        transcript: str | _UnrecognizedType | None = data.get("transcript")
        if data.get("unrecognized"):
            transcript = UNRECOGNIZED
        return cls(
            id=data["id"],
            track=data["track"],
            span=TimeSpan(int(data["start_ms"]), int(data["end_ms"])),
            label=SegmentLabel.parse(data["label"]),
            language=data.get("language", ""),
            transcript=transcript,
            translation=data.get("translation"),
        )


def check_track_segments(segments: list[SpeechSegment]) -> None:
    """Enforce the per-track invariant: sorted by start, non-overlapping."""
    for prev, cur in zip(segments, segments[1:]):
        if prev.track != cur.track:
            raise ValidationError("segments of different tracks in one sequence")
        if cur.span.start_ms < prev.span.start_ms:
            raise ValidationError(
                f"segments out of order: {cur.id} starts before {prev.id}"
            )
        if prev.span.overlaps(cur.span):
            raise ValidationError(f"segments overlap: {prev.id} and {cur.id}")


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable knobs of the whole pipeline, validated on construction.

    Defaults follow the published operating point: 30 fps frame streams,
    similarity cut-off 0.75 over a 500-frame search window, start/duration
    gates of 9 s / 8 s, text similarity floor 0.5.
    """

    fps: int = 30
    ssim_threshold: float = 0.75
    search_window_frames: int = 500
    max_start_diff_s: float = 9.0
    max_dur_diff_s: float = 8.0
    min_similarity: float = 0.5
    max_window_segments: int = 4
    drift_compensation: bool = True
    frame_stride: int = 1  # compare every k-th frame, propagate verdicts

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValidationError(f"frames.fps must be > 0, got {self.fps}")
        if not 0.0 <= self.ssim_threshold <= 1.0:
            raise ValidationError(
                f"frames.ssim_threshold must be in [0, 1], got {self.ssim_threshold}"
            )
        if self.search_window_frames < 1:
            raise ValidationError(
                f"frames.search_window_frames must be >= 1, got {self.search_window_frames}"
            )
        if self.max_start_diff_s < 0:
            raise ValidationError(
                f"match.max_start_diff_s must be >= 0, got {self.max_start_diff_s}"
            )
        if self.max_dur_diff_s < 0:
            raise ValidationError(
                f"match.max_dur_diff_s must be >= 0, got {self.max_dur_diff_s}"
            )
        if not 0.0 <= self.min_similarity <= 1.0:
            raise ValidationError(
                f"match.min_similarity must be in [0, 1], got {self.min_similarity}"
            )
        if self.max_window_segments < 1:
            raise ValidationError(
                f"match.max_window_segments must be >= 1, got {self.max_window_segments}"
            )
        if self.frame_stride < 1:
            raise ValidationError(
                f"frames.stride must be >= 1, got {self.frame_stride}"
            )

    @property
    def max_start_diff_ms(self) -> int:
        return ms_from_seconds(self.max_start_diff_s)

    @property
    def max_dur_diff_ms(self) -> int:
        return ms_from_seconds(self.max_dur_diff_s)


# Dotted config-file key -> (attribute, parser). The file format is flat
# `key = value` lines; sections are just prefixes in the key.
_CONFIG_KEYS = {
    "frames.fps": ("fps", int),
    "frames.ssim_threshold": ("ssim_threshold", float),
    "frames.search_window_frames": ("search_window_frames", int),
    "frames.drift_compensation": ("drift_compensation", "bool"),
    "frames.stride": ("frame_stride", int),
    "match.max_start_diff_s": ("max_start_diff_s", float),
    "match.max_dur_diff_s": ("max_dur_diff_s", float),
    "match.min_similarity": ("min_similarity", float),
    "match.max_window_segments": ("max_window_segments", int),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in _CONFIG_KEYS.items()}


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.strip().lower()
    if lowered in {"true", "yes", "on", "1"}:
        return True
    if lowered in {"false", "no", "off", "0"}:
        return False
    raise ValidationError(f"{key}: expected a boolean, got {value!r}")


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a `key = value` config file; absent keys keep their defaults.

    Raises FileNotFoundError for a missing file and ValidationError (naming
    the offending key or line) for syntax and range problems.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected `key = value`, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"{path}:{lineno}: unknown config key {key!r}")
        attr, parser = _CONFIG_KEYS[key]
        if parser == "bool":
            values[attr] = _parse_bool(value, key)
        else:
            try:
                values[attr] = parser(value)
            except ValueError:
                raise ValidationError(
                    f"{path}:{lineno}: {key}: cannot parse {value!r}"
                ) from None
    return PipelineConfig(**values)


def save_config(cfg: PipelineConfig, path: str | Path) -> None:
    """Write the flat config format; load_config(save_config(c)) == c."""
    lines = []
    for f in fields(cfg):
        key = _ATTR_TO_KEY[f.name]
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(sorted(lines)) + "\n", encoding="utf-8")


def config_with_overrides(cfg: PipelineConfig, **overrides) -> PipelineConfig:
    """Return a copy of ``cfg`` with non-None overrides applied."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **changes) if changes else cfg
