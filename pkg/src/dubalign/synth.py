"""Synthetic dubbed-pair generator with exact ground truth.

Builds tiny procedural inputs (block-pattern frames, tone-coded audio,
planted vocabulary texts) whose expected pipeline output is known by
construction, so every stage can be checked end to end without shipping
media assets.

Frame patterns come in two families:

* content frames: per-index random coarse block patterns, shared across
  the two tracks up to mild per-track pixel noise (pairwise similarity
  of the two renditions stays high);
* commercial frames: a visually different family (finer grid, offset
  palette) that stays well below the removal threshold against every
  content frame.

The separation margins are not taken on faith; ``margin_scan`` measures
them by brute force and ``generate`` asserts them for every emitted pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .audio import REQUIRED_RATE, write_wav
from .frames import FrameManifest, save_frame, save_frame_manifest
from .model import (
    MATCHABLE_LABELS,
    PipelineConfig,
    SegmentLabel,
    TimeSpan,
    ValidationError,
    ms_from_seconds,
    save_config,
)
from .similarity import EmbeddingTable, save_embeddings
from .ssim import ssim_one_to_many, ssim_pairwise, stack_window_stats
from .vad import VadReport, save_vad

FRAME_SIDE = 64
_CONTENT_CELL = 8
_COMMERCIAL_CELL = 4
_NOISE_AMP = 2.0

TRACKS = ("D1", "D2")


def _block_pattern(rng: np.random.Generator, cell: int, low: int, high: int) -> np.ndarray:
    grid = rng.integers(low, high, size=(FRAME_SIDE // cell, FRAME_SIDE // cell))
    return np.kron(grid, np.ones((cell, cell))).astype(np.float64)


def content_frames(n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, 64, 64) stack of distinct coarse block patterns, one per index."""
    return np.stack([_block_pattern(rng, _CONTENT_CELL, 0, 256) for _ in range(n)])


def commercial_frames(n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, 64, 64) stack from the disjoint family used for injected noise."""
    return np.stack([_block_pattern(rng, _COMMERCIAL_CELL, 0, 256) for _ in range(n)])


def noisy_rendition(frames: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """A track's own rendition of shared frames: small independent pixel noise."""
    noise = rng.uniform(-_NOISE_AMP, _NOISE_AMP, size=frames.shape)
    return np.clip(frames + noise, 0.0, 255.0)


def margin_scan(content: np.ndarray, other_rendition: np.ndarray,
                commercials: np.ndarray) -> tuple[float, float]:
    """Measured similarity margins: (worst same-frame, best cross-family).

    The first value is the minimum similarity between a content frame and
    the other track's rendition of the same frame (must sit above the
    removal threshold); the second is the maximum similarity of any
    commercial frame against any content frame (must sit below it).
    """
    same = _chunked_pairwise(content, other_rendition)
    content_stats = stack_window_stats(content)
    cross = 0.0
    for i in range(commercials.shape[0]):
        scores = ssim_one_to_many(commercials[i], content, stack_stats=content_stats)
        cross = max(cross, float(scores.max()))
    return float(same.min()), cross


def _chunked_pairwise(a: np.ndarray, b: np.ndarray, chunk: int = 1024) -> np.ndarray:
    # bounds the O(n) intermediate maps the batched sweep materializes
    return np.concatenate([
        ssim_pairwise(a[lo : lo + chunk], b[lo : lo + chunk])
        for lo in range(0, a.shape[0], chunk)
    ])


# ---------------------------------------------------------------------------
# planted corpus description


@dataclass(frozen=True)
class CommercialBlock:
    """A run of commercial frames injected into one track's clean stream.

    ``insert_at_s`` names the clean-timeline instant before which the block
    appears; both values must land on whole frames.
    """

    track: str
    insert_at_s: float
    length_s: float


@dataclass(frozen=True)
class PlannedUnit:
    """One planted content unit: a pair of utterances, or a one-sided decoy.

    A side is present when it has at least one part; parts are back-to-back
    piece durations in seconds.  At most one side may have several pieces
    (that side carries one planted word per piece, the other carries them
    all in a single utterance), so a unit maps onto exactly one pairing
    shape: one-to-one, one-to-many, many-to-one, or an unmatched decoy.
    """

    label: SegmentLabel
    d1_start_s: float | None = None
    d1_parts_s: tuple = ()
    d2_start_s: float | None = None
    d2_parts_s: tuple = ()

    def __post_init__(self):
        if self.label not in MATCHABLE_LABELS:
            raise ValidationError(f"planted units need a matchable label, got {self.label}")
        for name, start, parts in (
            ("d1", self.d1_start_s, self.d1_parts_s),
            ("d2", self.d2_start_s, self.d2_parts_s),
        ):
            if (start is None) != (len(parts) == 0):
                raise ValidationError(f"unit {name} side needs both a start and parts")
            if any(p <= 0 for p in parts):
                raise ValidationError(f"unit {name} part durations must be positive")
        if not self.d1_parts_s and not self.d2_parts_s:
            raise ValidationError("a unit needs at least one side")
        if len(self.d1_parts_s) > 1 and len(self.d2_parts_s) > 1:
            raise ValidationError("at most one side of a unit may be split into pieces")

    @property
    def is_pair(self) -> bool:
        return bool(self.d1_parts_s) and bool(self.d2_parts_s)

    @property
    def word_count(self) -> int:
        return max(len(self.d1_parts_s), len(self.d2_parts_s))

    @property
    def kind(self) -> str | None:
        if not self.is_pair:
            return None
        if len(self.d2_parts_s) > 1:
            return "one-to-many"
        if len(self.d1_parts_s) > 1:
            return "many-to-one"
        return "one-to-one"


@dataclass(frozen=True)
class SynthSpec:
    """Deterministic description of a synthetic dubbed pair.

    Everything the generator emits follows from these fields and the seed;
    regenerating with the same spec is byte-identical.  ``noise_rows`` adds
    non-matchable segmenter rows (track, label, start_s, end_s) that must
    never reach the pairing stage.
    """

    seed: int
    duration_s: float
    fps: int = 5
    blocks: tuple = ()
    units: tuple = ()
    noise_rows: tuple = ()
    vocab_size: int | None = None
    vocab_dim: int | None = None
    d1_language: str = "tr"
    d2_language: str = "ar"


_ALPHA = "abcdefghijklmnopqrstuvwxyz"


def _letters(n: int) -> str:
    out = ""
    while True:
        n, r = divmod(n, 26)
        out = _ALPHA[r] + out
        if n == 0:
            return out


def vocab_word(i: int) -> str:
    """The i-th planted vocabulary token; letters only so tokenizing is lossless."""
    return "w" + _letters(i)


def source_word(target: str) -> str:
    """The pre-translation form of a planted token on the D1 side."""
    return "kay" + target


def _tone(label: SegmentLabel, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Audible int16 signal for one segmenter row; silent for noEnergy."""
    t = np.arange(n_samples, dtype=np.float64) / REQUIRED_RATE
    if label is SegmentLabel.FEMALE:
        wave = 6000.0 * np.sin(2 * np.pi * 210.0 * t)
    elif label is SegmentLabel.MALE:
        wave = 6000.0 * np.sin(2 * np.pi * 110.0 * t)
    elif label is SegmentLabel.MUSIC:
        wave = 3500.0 * (np.sin(2 * np.pi * 330.0 * t) + np.sin(2 * np.pi * 495.0 * t))
    elif label is SegmentLabel.NOISE:
        wave = rng.integers(-3000, 3000, size=n_samples).astype(np.float64)
    else:
        wave = np.zeros(n_samples)
    return np.clip(np.rint(wave), -32768, 32767).astype(np.int16)


@dataclass(frozen=True)
class _Row:
    """One planned segmenter row on the clean timeline of one track."""

    track: str
    label: SegmentLabel
    span: TimeSpan
    asr_text: str | None  # None for non-matchable rows
    mt_text: str | None  # translation target, D1 rows only
    unit_index: int | None
    segment_id: str | None = None


def _frame_count(spec: SynthSpec, seconds: float, what: str) -> int:
    frames = seconds * spec.fps
    if abs(frames - round(frames)) > 1e-9 or round(frames) < 0:
        raise ValidationError(f"{what} ({seconds} s) is not a whole frame count at {spec.fps} fps")
    return int(round(frames))


def _side_rows(unit: PlannedUnit, index: int, track: str, words: list) -> list:
    start = unit.d1_start_s if track == "D1" else unit.d2_start_s
    parts = unit.d1_parts_s if track == "D1" else unit.d2_parts_s
    if start is None:
        return []
    rows = []
    cursor = ms_from_seconds(start)
    for j, part in enumerate(parts):
        end = cursor + ms_from_seconds(part)
        if len(parts) == 1:
            targets = words
        else:
            targets = [words[j]]
        target_text = " ".join(targets)
        if track == "D1":
            asr = " ".join(source_word(w) for w in targets)
            mt = target_text
        else:
            asr = target_text
            mt = None
        rows.append(_Row(track=track, label=unit.label, span=TimeSpan(cursor, end),
                         asr_text=asr, mt_text=mt, unit_index=index))
        cursor = end
    return rows


def _validate_pair_unit(unit: PlannedUnit, index: int, cfg: PipelineConfig) -> None:
    """Fail fast when a planted pair could not survive the default gates.

    Beyond the pairing rules themselves, split units must be built so that
    no strict subset of the pieces passes the duration rule; otherwise a
    partial window would be accepted first and the declared expectation
    would be wrong.
    """
    gap = abs(ms_from_seconds(unit.d1_start_s) - ms_from_seconds(unit.d2_start_s))
    if gap > cfg.max_start_diff_ms:
        raise ValidationError(
            f"unit {index}: start gap {gap} ms exceeds the {cfg.max_start_diff_ms} ms gate"
        )
    single = unit.d1_parts_s if len(unit.d1_parts_s) == 1 else unit.d2_parts_s
    multi = unit.d2_parts_s if single is unit.d1_parts_s else unit.d1_parts_s
    anchor_ms = ms_from_seconds(single[0])
    part_ms = [ms_from_seconds(p) for p in multi]
    if abs(anchor_ms - sum(part_ms)) > cfg.max_dur_diff_ms:
        raise ValidationError(
            f"unit {index}: full window misses the duration gate by "
            f"{abs(anchor_ms - sum(part_ms)) - cfg.max_dur_diff_ms} ms"
        )
    if len(multi) > cfg.max_window_segments:
        raise ValidationError(
            f"unit {index}: {len(multi)} pieces exceed the window cap of "
            f"{cfg.max_window_segments}"
        )
    if len(multi) > 1:
        for j, piece in enumerate(part_ms):
            if abs(anchor_ms - piece) <= cfg.max_dur_diff_ms:
                raise ValidationError(
                    f"unit {index}: piece {j} alone passes the duration gate, "
                    "so it would be paired one-to-one instead of as a window"
                )
        prefix = 0
        for j, piece in enumerate(part_ms[:-1]):
            prefix += piece
            if abs(anchor_ms - prefix) <= cfg.max_dur_diff_ms:
                raise ValidationError(
                    f"unit {index}: the first {j + 1} pieces already pass the "
                    "duration gate, so a partial window would win"
                )


def _plan_rows(spec: SynthSpec) -> tuple:
    """Allocate vocabulary and lay every unit out as per-track rows.

    Returns (rows_by_track, expected_pairs, decoys, vocab) where rows carry
    their final positional segment ids and expected_pairs use those ids.
    """
    cfg = PipelineConfig(fps=spec.fps)
    next_word = 0
    rows = {track: [] for track in TRACKS}
    unit_words = []
    for index, unit in enumerate(spec.units):
        words = [vocab_word(next_word + j) for j in range(unit.word_count)]
        next_word += unit.word_count
        unit_words.append(words)
        if unit.is_pair:
            _validate_pair_unit(unit, index, cfg)
        for track in TRACKS:
            rows[track].extend(_side_rows(unit, index, track, words))

    for track, label, start_s, end_s in spec.noise_rows:
        if track not in TRACKS:
            raise ValidationError(f"noise row names unknown track {track!r}")
        label = label if isinstance(label, SegmentLabel) else SegmentLabel.parse(label)
        if label in MATCHABLE_LABELS:
            raise ValidationError("noise rows must use non-matchable labels")
        rows[track].append(_Row(track=track, label=label,
                                span=TimeSpan(ms_from_seconds(start_s), ms_from_seconds(end_s)),
                                asr_text=None, mt_text=None, unit_index=None))

    duration_ms = ms_from_seconds(spec.duration_s)
    ids_by_unit = {track: {} for track in TRACKS}
    for track in TRACKS:
        rows[track].sort(key=lambda r: r.span.start_ms)
        counter = 0
        finished = []
        for row in rows[track]:
            if row.span.end_ms > duration_ms:
                raise ValidationError(
                    f"{track} row ending at {row.span.end_ms} ms runs past the "
                    f"{duration_ms} ms clean timeline"
                )
            if row.label in MATCHABLE_LABELS:
                row = replace(row, segment_id=f"{track}-{counter:05d}")
                counter += 1
                if row.unit_index is not None:
                    ids_by_unit[track].setdefault(row.unit_index, []).append(row.segment_id)
            finished.append(row)
        rows[track] = finished

    expected_pairs = []
    decoys = {track: [] for track in TRACKS}
    for index, unit in enumerate(spec.units):
        left = ids_by_unit["D1"].get(index, [])
        right = ids_by_unit["D2"].get(index, [])
        if unit.is_pair:
            expected_pairs.append({
                "left": left,
                "right": right,
                "kind": unit.kind,
                "label": unit.label.value,
                "score": 1.0,
                "words": " ".join(unit_words[index]),
            })
        elif left:
            decoys["D1"].extend(left)
        else:
            decoys["D2"].extend(right)
    expected_pairs.sort(key=lambda p: p["left"][0])

    vocab_size = next_word if spec.vocab_size is None else spec.vocab_size
    vocab_dim = vocab_size if spec.vocab_dim is None else spec.vocab_dim
    if vocab_size < next_word:
        raise ValidationError(
            f"vocab_size {vocab_size} is below the {next_word} planted words"
        )
    if vocab_dim < vocab_size:
        raise ValidationError(
            "planted vectors are one-hot; vocab_dim must be >= vocab_size "
            f"({vocab_dim} < {vocab_size})"
        )
    vocab = [vocab_word(i) for i in range(vocab_size)]
    return rows, expected_pairs, decoys, vocab, vocab_dim


def _dirty_slots(spec: SynthSpec, track: str, n_clean: int) -> list:
    """Per-frame recipe for the dirty stream: clean index or (block, offset)."""
    inserts = []
    seen = set()
    for b, block in enumerate(spec.blocks):
        if block.track not in TRACKS:
            raise ValidationError(f"block names unknown track {block.track!r}")
        if block.track != track:
            continue
        at = _frame_count(spec, block.insert_at_s, "block position")
        length = _frame_count(spec, block.length_s, "block length")
        if length == 0:
            raise ValidationError("blocks need at least one frame")
        if at > n_clean:
            raise ValidationError(f"block at frame {at} lies past the {n_clean}-frame stream")
        if at in seen:
            raise ValidationError(f"two blocks insert at the same frame {at}")
        seen.add(at)
        inserts.append((at, b, length))
    inserts.sort()
    slots = []
    cursor = 0
    for at, b, length in inserts:
        slots.extend(("content", c) for c in range(cursor, at))
        slots.extend(("block", b, j) for j in range(length))
        cursor = at
    slots.extend(("content", c) for c in range(cursor, n_clean))
    return slots


def generate(spec: SynthSpec, out_dir: str | Path) -> dict:
    """Emit the full synthetic pair under ``out_dir`` and return the truth.

    Writes, per track, the dirty frame stream (.y8 plus a manifest), the
    dirty audio, and a clean-timeline segmenter TSV; plus ASR/MT lookup
    tables, a one-hot embedding file, a pipeline config pinned to the
    spec's fps, and ``truth.json`` describing the expected frame removals
    and pairs under the default matching gates.

    The frame-family similarity margins are measured on the exact pixel
    values written to disk and enforced here: same-index frames across the
    two renditions must score at least 0.9 and commercial frames at most
    0.5 against any content frame.
    """
    out = Path(out_dir)
    if REQUIRED_RATE % spec.fps != 0:
        raise ValidationError(
            f"fps must divide the {REQUIRED_RATE} Hz audio rate, got {spec.fps}"
        )
    n_clean = _frame_count(spec, spec.duration_s, "duration")
    if n_clean == 0:
        raise ValidationError("duration must cover at least one frame")
    rows, expected_pairs, decoys, vocab, vocab_dim = _plan_rows(spec)
    samples_per_frame = REQUIRED_RATE // spec.fps

    seeds = np.random.SeedSequence(spec.seed).spawn(6)
    rng_content, rng_comm, rng_d1, rng_d2, rng_audio, rng_blocks = map(
        np.random.default_rng, seeds
    )

    # frames: one shared story, two noisy renditions, commercial inserts
    base = content_frames(n_clean, rng_content)
    rendition = {
        "D1": np.clip(np.rint(noisy_rendition(base, rng_d1)), 0, 255),
        "D2": np.clip(np.rint(noisy_rendition(base, rng_d2)), 0, 255),
    }
    block_frames = [
        np.clip(np.rint(commercial_frames(
            _frame_count(spec, b.length_s, "block length"), rng_comm)), 0, 255)
        for b in spec.blocks
    ]
    block_audio = [
        rng_blocks.integers(-8000, 8000,
                            size=stack.shape[0] * samples_per_frame).astype(np.int16)
        for stack in block_frames
    ]

    truth_files: dict = {"frames": {}, "audio": {}, "vad": {}, "asr": {}}
    removed = {}
    dirty_counts = {}
    for track in TRACKS:
        slots = _dirty_slots(spec, track, n_clean)
        dirty_counts[track] = len(slots)
        removed[track] = [i for i, slot in enumerate(slots) if slot[0] == "block"]
        frame_dir = out / "frames" / track
        entries = []
        for i, slot in enumerate(slots):
            pixels = (rendition[track][slot[1]] if slot[0] == "content"
                      else block_frames[slot[1]][slot[2]])
            path = frame_dir / f"{i:06d}.y8"
            save_frame(pixels, path)
            entries.append((i, path))
        manifest = FrameManifest(track=track, fps=spec.fps, entries=tuple(entries))
        manifest_path = out / "frames" / f"{track}.manifest"
        save_frame_manifest(manifest, manifest_path)
        truth_files["frames"][track] = f"frames/{track}.manifest"

        # audio mirrors the frame recipe chunk for chunk
        clean_audio = np.zeros(n_clean * samples_per_frame, dtype=np.int16)
        for row in rows[track]:
            lo = row.span.start_ms * 16
            hi = row.span.end_ms * 16
            clean_audio[lo:hi] = _tone(row.label, hi - lo, rng_audio)
        chunks = []
        for slot in slots:
            if slot[0] == "content":
                c = slot[1]
                chunks.append(clean_audio[c * samples_per_frame:(c + 1) * samples_per_frame])
            else:
                b, j = slot[1], slot[2]
                chunks.append(block_audio[b][j * samples_per_frame:(j + 1) * samples_per_frame])
        dirty_audio = (np.concatenate(chunks) if chunks
                       else np.zeros(0, dtype=np.int16))
        wav_path = out / "audio" / f"{track}.wav"
        wav_path.parent.mkdir(parents=True, exist_ok=True)
        write_wav(wav_path, dirty_audio)
        truth_files["audio"][track] = f"audio/{track}.wav"

        report = VadReport(
            track=track,
            segments=tuple((row.label, row.span) for row in rows[track]),
            degraded=False,
        )
        vad_path = out / "vad" / f"{track}.tsv"
        vad_path.parent.mkdir(parents=True, exist_ok=True)
        save_vad(report, vad_path)
        truth_files["vad"][track] = f"vad/{track}.tsv"

        asr_path = out / "providers" / f"asr-{track}.jsonl"
        asr_path.parent.mkdir(parents=True, exist_ok=True)
        asr_lines = [
            json.dumps({"track": track, "start_ms": row.span.start_ms,
                        "end_ms": row.span.end_ms, "text": row.asr_text},
                       sort_keys=True)
            for row in rows[track] if row.segment_id is not None
        ]
        asr_path.write_text("\n".join(asr_lines) + "\n", encoding="utf-8")
        truth_files["asr"][track] = f"providers/asr-{track}.jsonl"

    # the similarity margins are asserted on the bytes actually written;
    # the cross scan covers every comparison the cleaning pass can reach
    # with the bundled config (anchor freezes at the insertion point, so
    # block frames only ever face content within one search window)
    same_min = float(_chunked_pairwise(rendition["D1"], rendition["D2"]).min())
    cross_max = 0.0
    other = {"D1": "D2", "D2": "D1"}
    search = PipelineConfig(fps=spec.fps).search_window_frames
    for block, stack in zip(spec.blocks, block_frames):
        content = rendition[other[block.track]]
        insert = _frame_count(spec, block.insert_at_s, "block insertion point")
        lo = max(0, insert - search - 8)
        hi = min(content.shape[0], insert + stack.shape[0] + search)
        reach = content[lo:hi]
        reach_stats = stack_window_stats(reach)
        for i in range(stack.shape[0]):
            scores = ssim_one_to_many(stack[i], reach, stack_stats=reach_stats)
            cross_max = max(cross_max, float(scores.max()))
    margins = {"same_frame_min": same_min, "cross_family_max": cross_max}
    if margins["same_frame_min"] < 0.9:
        raise ValidationError(
            f"rendition margin {margins['same_frame_min']:.3f} fell below 0.9"
        )
    if margins["cross_family_max"] > 0.5:
        raise ValidationError(
            f"commercial margin {margins['cross_family_max']:.3f} rose above 0.5"
        )

    mt_lines = [
        json.dumps({"source": row.asr_text, "target": row.mt_text}, sort_keys=True)
        for row in rows["D1"] if row.mt_text is not None
    ]
    mt_path = out / "providers" / "mt-D1.jsonl"
    mt_path.write_text("\n".join(mt_lines) + "\n", encoding="utf-8")
    truth_files["mt"] = "providers/mt-D1.jsonl"

    eye = np.eye(vocab_dim)
    vectors = {word: eye[i] for i, word in enumerate(vocab)}
    save_embeddings(EmbeddingTable(dim=vocab_dim, vectors=vectors), out / "embeddings.txt")
    truth_files["embeddings"] = "embeddings.txt"

    save_config(PipelineConfig(fps=spec.fps), out / "pipeline.cfg")
    truth_files["config"] = "pipeline.cfg"

    truth = {
        "seed": spec.seed,
        "fps": spec.fps,
        "sample_rate": REQUIRED_RATE,
        "languages": {"D1": spec.d1_language, "D2": spec.d2_language},
        "clean_frames": n_clean,
        "clean_duration_ms": n_clean * 1000 // spec.fps,
        "dirty_frames": dirty_counts,
        "expected_removed_frames": removed,
        "expected_pairs": expected_pairs,
        "decoys": decoys,
        "segments": {
            track: [
                {"id": row.segment_id, "start_ms": row.span.start_ms,
                 "end_ms": row.span.end_ms, "label": row.label.value}
                for row in rows[track] if row.segment_id is not None
            ]
            for track in TRACKS
        },
        "margins": margins,
        "files": truth_files,
    }
    (out / "truth.json").write_text(
        json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return truth


def demo_spec(seed: int = 7, pairs: int = 55, decoys: int = 12,
              block_track: str = "D2", block_length_s: float = 24.0) -> SynthSpec:
    """A ready-made spec exercising every pairing shape.

    Units sit in 18 s slots with jittered cross-track starts and cycling
    labels, so neighbouring units cannot bleed into each other's windows:
    a label change stops window growth and the worst-case slot gap still
    exceeds the start-difference gate.  Split units use piece durations
    whose partial sums all miss the duration gate, forcing full windows.
    """
    if pairs < 1 or decoys < 0:
        raise ValidationError("demo spec needs at least one pair")
    labels = (SegmentLabel.FEMALE, SegmentLabel.MALE, SegmentLabel.MUSIC)
    jitters = (0.0, 2.0, -1.6, 3.0, -2.4, 1.2)
    slot_s = 18.0

    # interleave decoys between pairs rather than bunching them at the end
    tokens = []
    remaining = decoys
    step = max(1, pairs // decoys) if decoys else 0
    for i in range(pairs):
        tokens.append(("pair", i))
        if remaining and step and i % step == step - 1:
            tokens.append(("decoy", decoys - remaining))
            remaining -= 1
    for k in range(remaining):
        tokens.append(("decoy", decoys - remaining + k))

    units = []
    for slot, (what, i) in enumerate(tokens):
        start = 4.0 + slot * slot_s
        label = labels[slot % 3]
        jitter = jitters[slot % len(jitters)]
        if what == "decoy":
            side_d1 = i % 2 == 0
            units.append(PlannedUnit(
                label=label,
                d1_start_s=start if side_d1 else None,
                d1_parts_s=(5.0,) if side_d1 else (),
                d2_start_s=None if side_d1 else start,
                d2_parts_s=() if side_d1 else (5.0,),
            ))
            continue
        shape = i % 5
        if shape in (0, 1):
            dur = 4.0 + (slot % 3)
            unit = PlannedUnit(label=label, d1_start_s=start, d1_parts_s=(dur,),
                               d2_start_s=start + jitter, d2_parts_s=(dur + 0.5,))
        elif shape == 2:
            unit = PlannedUnit(label=label, d1_start_s=start, d1_parts_s=(12.0,),
                               d2_start_s=start + jitter, d2_parts_s=(3.2, 3.4))
        elif shape == 3:
            unit = PlannedUnit(label=label, d1_start_s=start, d1_parts_s=(3.2, 3.4),
                               d2_start_s=start + jitter, d2_parts_s=(12.0,))
        else:
            unit = PlannedUnit(label=label, d1_start_s=start, d1_parts_s=(12.0,),
                               d2_start_s=start + jitter, d2_parts_s=(1.5, 1.6, 1.7))
        units.append(unit)

    duration = 4.0 + len(tokens) * slot_s + 14.0
    noise = (
        ("D1", SegmentLabel.NOISE, 0.5, 2.5),
        ("D2", SegmentLabel.NOISE, 1.0, 3.0),
    )
    return SynthSpec(
        seed=seed,
        duration_s=duration,
        fps=5,
        blocks=(CommercialBlock(track=block_track, insert_at_s=60.0,
                                length_s=block_length_s),),
        units=tuple(units),
        noise_rows=noise,
    )
