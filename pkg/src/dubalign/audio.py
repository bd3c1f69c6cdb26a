"""16 kHz mono PCM audio: loading, saving, and millisecond-exact slicing.

The pipeline only accepts 16-bit PCM WAV, mono, at exactly 16000 Hz.
Other rates are rejected rather than resampled; resampling is a
documented pre-step outside the tool. At 16 kHz one millisecond is
exactly 16 samples, which keeps slicing and duration bookkeeping exact.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import TimeSpan, ValidationError

REQUIRED_RATE = 16000
SAMPLES_PER_MS = REQUIRED_RATE // 1000


@dataclass(frozen=True)
class AudioTrack:
    """Mono 16 kHz PCM samples for one dubbed variant."""

    track: str
    sample_rate: int
    samples: np.ndarray  # int16, shape (n,)

    def __post_init__(self) -> None:
        if self.sample_rate != REQUIRED_RATE:
            raise ValidationError(
                f"audio must be {REQUIRED_RATE} Hz, got {self.sample_rate}"
            )
        if self.samples.ndim != 1:
            raise ValidationError("audio must be mono (1-D sample array)")
        if self.samples.dtype != np.int16:
            raise ValidationError(f"audio samples must be int16, got {self.samples.dtype}")

    @property
    def duration_s(self) -> float:
        return self.samples.shape[0] / self.sample_rate

    @property
    def duration_ms(self) -> int:
        # floor: a partial trailing millisecond cannot be sliced exactly
        return self.samples.shape[0] // SAMPLES_PER_MS

    def slice_span(self, span: TimeSpan) -> np.ndarray:
        """Samples of [span.start_ms, span.end_ms); exact at ms resolution."""
        start = span.start_ms * SAMPLES_PER_MS
        end = span.end_ms * SAMPLES_PER_MS
        if end > self.samples.shape[0]:
            raise ValidationError(
                f"span ends at {span.end_ms} ms but track {self.track} "
                f"has only {self.duration_ms} ms"
            )
        return self.samples[start:end]


def read_wav(path: str | Path, track: str) -> AudioTrack:
    """Load a PCM WAV file, enforcing the 16-bit / mono / 16 kHz contract."""
    path = Path(path)
    with wave.open(str(path), "rb") as wav:
        if wav.getcomptype() != "NONE":
            raise ValidationError(f"{path}: compressed WAV not supported")
        if wav.getsampwidth() != 2:
            raise ValidationError(
                f"{path}: need 16-bit PCM, got {8 * wav.getsampwidth()}-bit"
            )
        if wav.getnchannels() != 1:
            raise ValidationError(f"{path}: need mono, got {wav.getnchannels()} channels")
        if wav.getframerate() != REQUIRED_RATE:
            raise ValidationError(
                f"{path}: need {REQUIRED_RATE} Hz, got {wav.getframerate()} Hz "
                "(resample upstream; the tool does not resample)"
            )
        frames = wav.readframes(wav.getnframes())
    samples = np.frombuffer(frames, dtype="<i2").astype(np.int16)
    return AudioTrack(track=track, sample_rate=REQUIRED_RATE, samples=samples)


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int = REQUIRED_RATE) -> None:
    """Write int16 mono samples as a PCM WAV file."""
    samples = np.ascontiguousarray(samples, dtype="<i2")
    if samples.ndim != 1:
        raise ValidationError("write_wav expects a 1-D int16 array")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sample_rate)
        wav.writeframes(samples.tobytes())
