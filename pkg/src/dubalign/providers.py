"""Transcription and translation behind pluggable provider interfaces.

Live speech/translation APIs are deliberately out of scope; anything
implementing the two protocols below can be dropped in. The shipped
implementations are file-backed lookup tables (JSON lines), which keep
runs offline and bit-deterministic:

* ASR table: one object per row, ``{"track", "start_ms", "end_ms",
  "text"}``; ``text: null`` means the span is known but was not
  recognized. Spans absent from the table count as unrecognized too.
* MT table: one object per row, ``{"source", "target"}``, keyed by the
  exact source text.

Unrecognized is a result, not an error: the provider understood the
request and had nothing to say. Transport problems (timeouts, broken
tables) raise ``ProviderTransportError`` instead and are retryable.

Every provider result lands in a ``TranscriptStore`` (append-only JSON
lines); a rerun over the same inputs makes zero provider calls. A live
provider would read its credentials from the ``DUBALIGN_PROVIDER_AUTH``
environment variable; the file-backed ones need none.
"""

from __future__ import annotations

import json
import threading
from dataclasses import replace
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from .audio import AudioTrack
from .model import (
    UNRECOGNIZED,
    MissingArtifactError,
    SpeechSegment,
    ValidationError,
    _UnrecognizedType,
)


class ProviderTransportError(RuntimeError):
    """The provider could not be reached or gave a malformed response."""


@runtime_checkable
class AsrProvider(Protocol):
    provider_id: str
    languages: frozenset  # supported language codes; empty = unrestricted

    def transcribe(
        self, segment: SpeechSegment, samples: np.ndarray
    ) -> str | _UnrecognizedType: ...


@runtime_checkable
class MtProvider(Protocol):
    provider_id: str

    def translate(self, text: str, source_language: str, target_language: str) -> str: ...


def _span_key(segment: SpeechSegment) -> str:
    return f"{segment.track}:{segment.span.start_ms}:{segment.span.end_ms}"


class FileBackedAsr:
    """Offline transcription from a prepared span table."""

    def __init__(self, path: str | Path, languages: frozenset = frozenset()):
        path = Path(path)
        if not path.exists():
            raise MissingArtifactError(f"ASR table not found: {path}")
        self.provider_id = f"file-asr:{path.name}"
        self.languages = languages
        self._table: dict = {}
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                key = f"{row['track']}:{int(row['start_ms'])}:{int(row['end_ms'])}"
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise ProviderTransportError(f"{path}:{lineno}: malformed ASR row") from None
            text = row.get("text")
            self._table[key] = text if isinstance(text, str) else UNRECOGNIZED

    def transcribe(self, segment, samples):
        return self._table.get(_span_key(segment), UNRECOGNIZED)


class FileBackedMt:
    """Offline translation from a prepared source-text table."""

    def __init__(self, path: str | Path):
        path = Path(path)
        if not path.exists():
            raise MissingArtifactError(f"MT table not found: {path}")
        self.provider_id = f"file-mt:{path.name}"
        self._table: dict = {}
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                self._table[row["source"]] = row["target"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise ProviderTransportError(f"{path}:{lineno}: malformed MT row") from None

    def translate(self, text, source_language, target_language):
        if text not in self._table:
            raise ProviderTransportError(
                f"{self.provider_id}: no mapping for {text!r}"
            )
        return self._table[text]


class EchoMt:
    """Identity translator, mainly for tests and same-language plumbing checks."""

    provider_id = "echo-mt"

    def translate(self, text, source_language, target_language):
        return text


class TranscriptStore:
    """Append-only provider-result cache that survives process restarts.

    One JSON line per result: ``{"provider", "key", "text", "unrecognized"}``.
    Duplicate keys may appear in the file; the last one wins on load.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._cache: dict = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                row = json.loads(line)
                value = UNRECOGNIZED if row.get("unrecognized") else row["text"]
                self._cache[(row["provider"], row["key"])] = value

    def __len__(self) -> int:
        return len(self._cache)

    def get(self, provider_id: str, key: str):
        """Cached value, or None on a miss (None is never a stored value)."""
        return self._cache.get((provider_id, key))

    def put(self, provider_id: str, key: str, value) -> None:
        row = {
            "provider": provider_id,
            "key": key,
            "text": value if isinstance(value, str) else None,
            "unrecognized": value is UNRECOGNIZED,
        }
        with self._lock:
            self._cache[(provider_id, key)] = value
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def transcribe_all(
    segments: list[SpeechSegment],
    audio: AudioTrack,
    provider: AsrProvider,
    store: TranscriptStore | None = None,
    jobs: int = 1,
) -> list[SpeechSegment]:
    """Fill every segment's transcript (text or Unrecognized), order preserved.

    Cached spans never reach the provider. A transport failure fails the
    run, but every result gathered around it stays in the store, so a
    retry only re-asks for the spans that actually failed. With
    ``jobs > 1`` uncached calls run concurrently; the merge is by segment
    identity, so output order and content do not depend on scheduling.
    """
    for segment in segments:
        if segment.track != audio.track:
            raise ValidationError(
                f"segment {segment.id} belongs to {segment.track}, audio is {audio.track}"
            )
        if provider.languages and segment.language not in provider.languages:
            raise ValidationError(
                f"{provider.provider_id} does not support language "
                f"{segment.language!r} (segment {segment.id})"
            )

    results: dict = {}
    pending = []
    for segment in segments:
        cached = store.get(provider.provider_id, _span_key(segment)) if store else None
        if cached is not None:
            results[segment.id] = cached
        else:
            pending.append(segment)

    def call(segment: SpeechSegment):
        value = provider.transcribe(segment, audio.slice_span(segment.span))
        if store is not None:
            store.put(provider.provider_id, _span_key(segment), value)
        return segment.id, value

    # on transport failure, still attempt the rest so the cache keeps as
    # much progress as possible; the first failure is re-raised at the end
    failure: ProviderTransportError | None = None
    if jobs <= 1 or len(pending) <= 1:
        for segment in pending:
            try:
                seg_id, value = call(segment)
                results[seg_id] = value
            except ProviderTransportError as exc:
                failure = failure or exc
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(call, segment) for segment in pending]
            for future in futures:
                try:
                    seg_id, value = future.result()
                    results[seg_id] = value
                except ProviderTransportError as exc:
                    failure = failure or exc
    if failure is not None:
        raise failure

    return [replace(segment, transcript=results[segment.id]) for segment in segments]


def drop_unrecognized(segments: list[SpeechSegment]) -> tuple[list[SpeechSegment], int]:
    """Keep exactly the segments with real transcripts; report the removal count."""
    kept = [segment for segment in segments if segment.has_transcript]
    return kept, len(segments) - len(kept)


def translate_all(
    segments: list[SpeechSegment],
    mt: MtProvider,
    target_language: str,
    store: TranscriptStore | None = None,
) -> list[SpeechSegment]:
    """Fill the translation field from each segment's transcript.

    Intended for the designated source track only; the other track keeps
    its transcripts untranslated. Empty transcripts translate to empty
    strings without touching the provider.
    """
    out = []
    for segment in segments:
        if not segment.has_transcript:
            raise ValidationError(
                f"segment {segment.id} has no transcript to translate"
            )
        text = segment.transcript
        if text == "":
            out.append(replace(segment, translation=""))
            continue
        key = f"{segment.language}>{target_language}:{text}"
        cached = store.get(mt.provider_id, key) if store else None
        if cached is None:
            cached = mt.translate(text, segment.language, target_language)
            if store is not None:
                store.put(mt.provider_id, key, cached)
        out.append(replace(segment, translation=cached))
    return out


def resolve_asr_provider(spec: str) -> AsrProvider:
    """Build a provider from a CLI-style descriptor, currently `file:<path>`."""
    if spec.startswith("file:"):
        return FileBackedAsr(spec[5:])
    raise ValidationError(f"unknown ASR provider descriptor: {spec!r}")


def resolve_mt_provider(spec: str) -> MtProvider:
    """Build a provider from `file:<path>` or `echo`."""
    if spec.startswith("file:"):
        return FileBackedMt(spec[5:])
    if spec == "echo":
        return EchoMt()
    raise ValidationError(f"unknown MT provider descriptor: {spec!r}")
