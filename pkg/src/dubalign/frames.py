"""Noise-frame removal over two dubbed frame streams.

A frame of one stream (the source) survives iff some frame in a bounded
forward window of the other stream (the target) reaches the configured
mean-SSIM threshold; the window scan stops at the first hit. Running the
pass in both directions removes material present in only one variant
(commercials, bumpers) and leaves two duration-matched timelines.

Two window-anchoring modes exist:

* strict mode anchors the search of source frame ``t`` at target index
  ``t``, exactly as stated in the published procedure; a removed block
  longer than the search window then desynchronizes everything after it.
* drift compensation (the default) anchors at the last confirmed match
  index in the target, so the scan follows the running alignment.

Frames are 2-D grayscale arrays with intensities in [0, 255], at least
8x8. On disk they are either 8-bit grayscale PNG or raw ``.y8`` blobs
(8-byte header of width/height as little-endian uint32, then row-major
pixel bytes).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioTrack
from .model import PipelineConfig, ValidationError
from .ssim import MIN_SIDE, ssim_one_to_many, stack_window_stats, window_stats

log = logging.getLogger(__name__)

# Rec. 601 luma weights for color inputs.
_LUMA = np.array([0.299, 0.587, 0.114])

# Window-scan chunk schedule: genuine frames match within the first few
# candidates, so start tiny and grow geometrically.
_SCAN_CHUNKS = (8, 32, 128)


def to_grayscale(pixels: np.ndarray) -> np.ndarray:
    """Collapse an (h, w, 3|4) color array to (h, w) luma; pass 2-D through."""
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] in (3, 4):
        return arr[:, :, :3] @ _LUMA
    raise ValidationError(f"unsupported image shape {arr.shape}")


def load_frame(path: str | Path) -> np.ndarray:
    """Read one frame (PNG or .y8) as a float64 grayscale array."""
    path = Path(path)
    if path.suffix == ".y8":
        raw = path.read_bytes()
        if len(raw) < 8:
            raise ValidationError(f"{path}: truncated .y8 header")
        width, height = np.frombuffer(raw[:8], dtype="<u4")
        expected = int(width) * int(height)
        if len(raw) - 8 != expected:
            raise ValidationError(
                f"{path}: payload is {len(raw) - 8} bytes, header says {expected}"
            )
        pixels = np.frombuffer(raw[8:], dtype=np.uint8).reshape(int(height), int(width))
        arr = pixels.astype(np.float64)
    else:
        from PIL import Image

        with Image.open(path) as img:
            if img.mode == "L":
                arr = np.asarray(img, dtype=np.float64)
            else:
                arr = to_grayscale(np.asarray(img.convert("RGB"), dtype=np.float64))
    if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
        raise ValidationError(f"{path}: frame smaller than {MIN_SIDE}x{MIN_SIDE}")
    return arr


def save_frame(pixels: np.ndarray, path: str | Path) -> None:
    """Write a grayscale frame as PNG or raw .y8 depending on the suffix."""
    path = Path(path)
    arr = np.asarray(pixels)
    if arr.ndim != 2:
        raise ValidationError("save_frame expects a 2-D grayscale array")
    data = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".y8":
        height, width = data.shape
        header = np.array([width, height], dtype="<u4").tobytes()
        path.write_bytes(header + data.tobytes())
    else:
        from PIL import Image

        Image.fromarray(data, mode="L").save(path, format="PNG")


@dataclass(frozen=True)
class FrameManifest:
    """Ordered frame inventory of one track: index -> image path, plus fps."""

    track: str
    fps: int
    entries: tuple  # of (frame_index, Path)

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValidationError(f"manifest fps must be > 0, got {self.fps}")
        for position, (index, _) in enumerate(self.entries):
            if index != position:
                raise ValidationError(
                    f"manifest indices must be gap-free from 0; "
                    f"entry {position} has index {index}"
                )

    def __len__(self) -> int:
        return len(self.entries)


def load_frame_manifest(path: str | Path, track: str) -> FrameManifest:
    """Parse the `fps=<int>` header plus `<index>\\t<path>` lines."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("fps="):
        raise ValidationError(f"{path}: first line must be fps=<int>")
    try:
        fps = int(lines[0][4:])
    except ValueError:
        raise ValidationError(f"{path}: cannot parse fps from {lines[0]!r}") from None
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValidationError(f"{path}:{lineno}: expected `<index>\\t<path>`")
        try:
            index = int(parts[0])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad frame index {parts[0]!r}") from None
        entries.append((index, path.parent / parts[1]))
    if not entries:
        raise ValidationError(f"{path}: manifest has no frames")
    return FrameManifest(track=track, fps=fps, entries=tuple(entries))


def save_frame_manifest(manifest: FrameManifest, path: str | Path) -> None:
    path = Path(path)
    lines = [f"fps={manifest.fps}"]
    base = path.parent
    for index, frame_path in manifest.entries:
        frame_path = Path(frame_path)
        try:
            rel = frame_path.relative_to(base)
        except ValueError:
            rel = frame_path
        lines.append(f"{index}\t{rel.as_posix()}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_frames(manifest: FrameManifest) -> np.ndarray:
    """Load every manifest frame into one (n, h, w) float64 stack."""
    frames = [load_frame(p) for _, p in manifest.entries]
    shape = frames[0].shape
    for (index, p), frame in zip(manifest.entries, frames):
        if frame.shape != shape:
            raise ValidationError(
                f"frame {index} ({p}) has shape {frame.shape}, expected {shape}"
            )
    return np.stack(frames)


@dataclass(frozen=True)
class RemovalMask:
    """Per-frame keep/remove verdicts plus the compacted-timeline mapping.

    ``new_ms[i]`` is the compacted-timeline position of original frame i
    (``floor(k * 1000 / fps)`` for the k-th kept frame) and -1 for
    removed frames.
    """

    track: str
    fps: int
    keep: np.ndarray  # bool, shape (n,)
    new_ms: np.ndarray  # int64, shape (n,); -1 where removed

    @property
    def kept_count(self) -> int:
        return int(self.keep.sum())

    @property
    def removed_count(self) -> int:
        return int((~self.keep).sum())

    @property
    def compacted_duration_s(self) -> float:
        return self.kept_count / self.fps


def _compaction_ms(keep: np.ndarray, fps: int) -> np.ndarray:
    new_ms = np.full(keep.shape[0], -1, dtype=np.int64)
    positions = np.nonzero(keep)[0]
    new_ms[positions] = (np.arange(positions.shape[0], dtype=np.int64) * 1000) // fps
    return new_ms


def make_removal_mask(track: str, fps: int, keep: np.ndarray) -> RemovalMask:
    keep = np.asarray(keep, dtype=bool)
    return RemovalMask(track=track, fps=fps, keep=keep, new_ms=_compaction_ms(keep, fps))


def save_removal_mask(mask: RemovalMask, path: str | Path) -> None:
    lines = [f"fps={mask.fps}"]
    for index in range(mask.keep.shape[0]):
        if mask.keep[index]:
            lines.append(f"{index}\t1\t{mask.new_ms[index]}")
        else:
            lines.append(f"{index}\t0\t-")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_removal_mask(path: str | Path, track: str) -> RemovalMask:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("fps="):
        raise ValidationError(f"{path}: first line must be fps=<int>")
    fps = int(lines[0][4:])
    keep = []
    new_ms = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValidationError(f"{path}:{lineno}: expected `<index>\\t<keep>\\t<new_ms|->`")
        keep.append(parts[1] == "1")
        new_ms.append(-1 if parts[2] == "-" else int(parts[2]))
    mask = RemovalMask(
        track=track,
        fps=fps,
        keep=np.array(keep, dtype=bool),
        new_ms=np.array(new_ms, dtype=np.int64),
    )
    expected = _compaction_ms(mask.keep, fps)
    if not np.array_equal(expected, mask.new_ms):
        raise ValidationError(f"{path}: compaction column inconsistent with keep column")
    return mask


def _first_match(
    frame: np.ndarray,
    frame_stats: tuple,
    target: np.ndarray,
    target_stats: tuple,
    start: int,
    stop: int,
    threshold: float,
) -> int:
    """Index of the first target frame in [start, stop) with SSIM >= threshold, or -1.

    Scans in growing chunks; equivalent to the frame-by-frame loop with an
    early break, it just evaluates a bounded overshoot in batch.
    """
    mean_t, var_t = target_stats
    pos = start
    chunk_iter = iter(_SCAN_CHUNKS)
    chunk = next(chunk_iter)
    while pos < stop:
        end = min(pos + chunk, stop)
        scores = ssim_one_to_many(
            frame,
            target[pos:end],
            a_stats=frame_stats,
            stack_stats=(mean_t[pos:end], var_t[pos:end]),
        )
        hits = np.nonzero(scores >= threshold)[0]
        if hits.size:
            return pos + int(hits[0])
        pos = end
        chunk = next(chunk_iter, _SCAN_CHUNKS[-1] * 4)
    return -1


def frame_pass(
    source: FrameManifest,
    target: FrameManifest,
    cfg: PipelineConfig,
    *,
    source_pixels: np.ndarray | None = None,
    target_pixels: np.ndarray | None = None,
    workers: int = 1,
) -> RemovalMask:
    """One directed cleaning pass: decide keep/remove for every source frame.

    Source frame ``t`` is kept iff some target frame in the window
    ``[a(t), a(t) + search_window_frames)`` scores ``ssim >= ssim_threshold``,
    where ``a(t) = t`` in strict mode and the last confirmed match index
    under drift compensation. The scan stops at the first hit.

    In strict mode verdicts are independent, so the outer loop may be
    chunked over ``workers`` threads; results are bit-identical for any
    worker count. Drift compensation is inherently sequential and ignores
    ``workers`` beyond the vectorized inner scan.
    """
    if source.fps != target.fps:
        raise ValidationError(f"fps mismatch: {source.fps} vs {target.fps}")
    if len(source) == 0 or len(target) == 0:
        raise ValidationError("frame manifests must be non-empty")
    src = source_pixels if source_pixels is not None else load_frames(source)
    tgt = target_pixels if target_pixels is not None else load_frames(target)
    if src.shape[1:] != tgt.shape[1:]:
        raise ValidationError(
            f"frame dimensions differ between tracks: {src.shape[1:]} vs {tgt.shape[1:]}"
        )

    n_src = src.shape[0]
    n_tgt = tgt.shape[0]
    window = cfg.search_window_frames
    threshold = cfg.ssim_threshold
    stride = cfg.frame_stride
    tgt_stats = stack_window_stats(tgt)
    probe_indices = list(range(0, n_src, stride))
    probe_keep = np.zeros(len(probe_indices), dtype=bool)

    if cfg.drift_compensation:
        anchor = 0
        for row, t in enumerate(probe_indices):
            start = min(anchor, n_tgt)
            stop = min(start + window, n_tgt)
            match = _first_match(
                src[t], window_stats(src[t]), tgt, tgt_stats, start, stop, threshold
            )
            if match >= 0:
                probe_keep[row] = True
                anchor = match
    else:

        def run_block(block: range) -> None:
            for row in block:
                t = probe_indices[row]
                start = min(t, n_tgt)
                stop = min(start + window, n_tgt)
                match = _first_match(
                    src[t], window_stats(src[t]), tgt, tgt_stats, start, stop, threshold
                )
                probe_keep[row] = match >= 0

        if workers <= 1:
            run_block(range(len(probe_indices)))
        else:
            blocks = np.array_split(np.arange(len(probe_indices)), workers)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for future in [pool.submit(run_block, b) for b in blocks]:
                    future.result()

    # propagate each probe verdict to the skipped stride-1 frames after it
    keep = np.zeros(n_src, dtype=bool)
    for row, t in enumerate(probe_indices):
        keep[t : min(t + stride, n_src)] = probe_keep[row]
    return make_removal_mask(source.track, source.fps, keep)


def clean_pair(
    d1: FrameManifest,
    d2: FrameManifest,
    cfg: PipelineConfig,
    *,
    d1_pixels: np.ndarray | None = None,
    d2_pixels: np.ndarray | None = None,
    workers: int = 1,
) -> tuple[RemovalMask, RemovalMask]:
    """Run the directed pass both ways and return (d1 mask, d2 mask)."""
    if d1_pixels is None:
        d1_pixels = load_frames(d1)
    if d2_pixels is None:
        d2_pixels = load_frames(d2)
    mask_d1 = frame_pass(
        d1, d2, cfg, source_pixels=d1_pixels, target_pixels=d2_pixels, workers=workers
    )
    mask_d2 = frame_pass(
        d2, d1, cfg, source_pixels=d2_pixels, target_pixels=d1_pixels, workers=workers
    )
    log.info(
        "cleaned %s: %d/%d kept (%.1f s); %s: %d/%d kept (%.1f s)",
        d1.track, mask_d1.kept_count, len(d1), mask_d1.compacted_duration_s,
        d2.track, mask_d2.kept_count, len(d2), mask_d2.compacted_duration_s,
    )
    return mask_d1, mask_d2


def apply_mask(mask: RemovalMask, audio: AudioTrack) -> AudioTrack:
    """Cut the audio down to the mask's compacted timeline.

    Frame ``i`` owns samples ``[i*sr//fps, (i+1)*sr//fps)``; kept frames'
    sample ranges are concatenated in order. Audio past the last frame is
    dropped; audio shorter than the frame timeline is an error.
    """
    n = mask.keep.shape[0]
    sr = audio.sample_rate
    bounds = (np.arange(n + 1, dtype=np.int64) * sr) // mask.fps
    if bounds[-1] > audio.samples.shape[0]:
        raise ValidationError(
            f"mask covers {bounds[-1]} samples but audio {audio.track} "
            f"has only {audio.samples.shape[0]}"
        )
    kept = np.nonzero(mask.keep)[0]
    if kept.size == 0:
        samples = np.empty(0, dtype=np.int16)
    else:
        samples = np.concatenate(
            [audio.samples[bounds[i] : bounds[i + 1]] for i in kept]
        )
    return AudioTrack(track=audio.track, sample_rate=sr, samples=samples)
