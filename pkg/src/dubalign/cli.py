"""Command line front end: one subcommand per pipeline stage.

Every stage reads and writes fixed file names under ``--out-dir`` and
journals itself in ``ledger.json``. A stage whose config hash, input
fingerprints, and outputs are all unchanged is skipped, so re-running a
stage (or ``run``, which is exactly the stages in order) is idempotent.
Single-file artifacts are written to a temp name and renamed into place;
an interrupted stage never leaves a half-written artifact behind.

Exit codes: 0 success, 2 usage, 3 missing artifact or input file,
4 validation or provider failure.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import fields, replace
from datetime import datetime, timezone
from pathlib import Path

from .audio import read_wav, write_wav
from .corpus import compute_stats, export_pairs, load_corpus_manifest, stats_table
from .frames import (
    apply_mask,
    clean_pair,
    load_frame_manifest,
    load_frames,
    save_removal_mask,
)
from .matching import load_outcome, run_matching, save_outcome
from .model import (
    MissingArtifactError,
    PipelineConfig,
    SpeechSegment,
    ValidationError,
    config_with_overrides,
    load_config,
)
from .providers import (
    ProviderTransportError,
    TranscriptStore,
    drop_unrecognized,
    resolve_asr_provider,
    resolve_mt_provider,
    transcribe_all,
    translate_all,
)
from .rating import RatingStore, agreement_report, cohen_kappa, sample_pairs
from .similarity import build_matrix, load_embeddings, load_matrix, make_scorer, save_matrix
from .vad import energy_vad, ingest_vad, save_vad, slice_speech_segments

log = logging.getLogger(__name__)

TRACKS = ("D1", "D2")


# ---------------------------------------------------------------- layout

class Workspace:
    """Fixed artifact names under the output directory."""

    def __init__(self, out_dir: Path):
        self.root = Path(out_dir)

    def mask(self, track: str) -> Path:
        return self.root / "masks" / f"{track}.tsv"

    def clean_audio(self, track: str) -> Path:
        return self.root / "audio" / f"{track}.clean.wav"

    def vad(self, track: str) -> Path:
        return self.root / "vad" / f"{track}.tsv"

    def sliced(self, track: str) -> Path:
        return self.root / "segments" / f"{track}.sliced.jsonl"

    def transcribed(self, track: str) -> Path:
        return self.root / "segments" / f"{track}.transcribed.jsonl"

    def translated(self, track: str) -> Path:
        return self.root / "segments" / f"{track}.translated.jsonl"

    @property
    def similarity(self) -> Path:
        return self.root / "similarity.tsv"

    @property
    def matches(self) -> Path:
        return self.root / "matches.jsonl"

    @property
    def corpus_dir(self) -> Path:
        return self.root / "corpus"

    @property
    def corpus_manifest(self) -> Path:
        return self.corpus_dir / "pairs.jsonl"

    @property
    def stats(self) -> Path:
        return self.root / "stats.txt"

    @property
    def sample(self) -> Path:
        return self.root / "eval" / "sample.json"

    @property
    def ratings(self) -> Path:
        return self.root / "ratings.jsonl"

    @property
    def ledger_path(self) -> Path:
        return self.root / "ledger.json"

    def cache(self, name: str) -> Path:
        return self.root / "cache" / f"{name}.jsonl"


@contextlib.contextmanager
def _atomic(path: Path):
    """Yield a temp path; rename it over ``path`` only if the body succeeds."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        yield tmp
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _require(path: Path, producer: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(
            f"{path} is missing; run `dubalign {producer}` first"
        )
    return path


def _require_input(path: str | Path, what: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"{what} not found: {path}")
    return path


def _save_segments(segments: list[SpeechSegment], path: Path) -> None:
    lines = [json.dumps(s.to_json(), ensure_ascii=False) for s in segments]
    with _atomic(path) as tmp:
        tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def _load_segments(path: Path) -> list[SpeechSegment]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(SpeechSegment.from_json(json.loads(line)))
    return out


# ---------------------------------------------------------------- ledger

def _sha256_file(path: Path, extra_files: list[Path] | None = None) -> str:
    digest = hashlib.sha256()
    for p in [Path(path)] + [Path(q) for q in (extra_files or [])]:
        with p.open("rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                digest.update(chunk)
    return digest.hexdigest()


def _stage_hash(cfg: PipelineConfig, params: dict | None = None) -> str:
    doc = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    if params:
        doc["params"] = params
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


class RunLedger:
    """Journal of completed stages in ``ledger.json``.

    Each entry records the stage's config hash, input fingerprints,
    output paths, and wall time. A stage is current (and skipped) only
    when all three still match and every output exists.
    """

    def __init__(self, path: Path):
        self.path = Path(path)
        self.stages: dict = {}
        if self.path.exists():
            data = json.loads(self.path.read_text(encoding="utf-8"))
            if not isinstance(data, dict) or not isinstance(data.get("stages"), dict):
                raise ValidationError(f"{self.path}: not a run ledger")
            self.stages = data["stages"]

    def is_current(self, name: str, config_hash: str, inputs: dict,
                   outputs: list[str]) -> bool:
        rec = self.stages.get(name)
        if rec is None:
            return False
        if rec.get("config_hash") != config_hash:
            log.warning("%s: config changed since the last run; rerunning", name)
            return False
        if rec.get("inputs") != inputs:
            return False
        if rec.get("outputs") != outputs:
            return False
        return all(Path(p).exists() for p in outputs)

    def record(self, name: str, config_hash: str, inputs: dict,
               outputs: list[str], elapsed_s: float) -> None:
        self.stages[name] = {
            "config_hash": config_hash,
            "inputs": inputs,
            "outputs": outputs,
            "elapsed_s": round(elapsed_s, 3),
            "finished_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        with _atomic(self.path) as tmp:
            tmp.write_text(
                json.dumps({"stages": self.stages}, indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )


def _run_stage(ledger: RunLedger, name: str, config_hash: str,
               inputs: dict, outputs: list[Path], runner) -> bool:
    """Run one stage unless the ledger proves it is already done."""
    out_strs = [str(p) for p in outputs]
    if ledger.is_current(name, config_hash, inputs, out_strs):
        log.info("%s: up to date, skipping", name)
        return False
    started = time.perf_counter()
    runner()
    ledger.record(name, config_hash, inputs, out_strs, time.perf_counter() - started)
    log.info("%s: done in %.2f s", name, time.perf_counter() - started)
    return True


# ---------------------------------------------------------------- stages

def _load_cfg(args, **overrides) -> PipelineConfig:
    if args.config:
        cfg = load_config(_require_input(args.config, "config file"))
    else:
        cfg = PipelineConfig()
    return config_with_overrides(cfg, **overrides)


def _frames_fingerprint(manifest_path: Path, track: str) -> str:
    # frame pixel files are part of the input, not just the manifest text
    manifest = load_frame_manifest(manifest_path, track)
    return _sha256_file(manifest_path, [p for _, p in manifest.entries])


def stage_frames(ws: Workspace, cfg: PipelineConfig, ledger: RunLedger,
                 d1_frames: Path, d2_frames: Path,
                 d1_audio: Path | None, d2_audio: Path | None,
                 jobs: int) -> None:
    d1_frames = _require_input(d1_frames, "D1 frame manifest")
    d2_frames = _require_input(d2_frames, "D2 frame manifest")
    audio_in = {"D1": d1_audio, "D2": d2_audio}
    inputs = {
        str(d1_frames): _frames_fingerprint(d1_frames, "D1"),
        str(d2_frames): _frames_fingerprint(d2_frames, "D2"),
    }
    outputs = [ws.mask(t) for t in TRACKS]
    for track in TRACKS:
        if audio_in[track] is not None:
            path = _require_input(audio_in[track], f"{track} audio")
            inputs[str(path)] = _sha256_file(path)
            outputs.append(ws.clean_audio(track))

    def runner():
        manifests = {
            "D1": load_frame_manifest(d1_frames, "D1"),
            "D2": load_frame_manifest(d2_frames, "D2"),
        }
        pixels = {t: load_frames(manifests[t]) for t in TRACKS}
        masks = dict(zip(TRACKS, clean_pair(
            manifests["D1"], manifests["D2"], cfg,
            d1_pixels=pixels["D1"], d2_pixels=pixels["D2"], workers=jobs,
        )))
        for track in TRACKS:
            with _atomic(ws.mask(track)) as tmp:
                save_removal_mask(masks[track], tmp)
            if audio_in[track] is not None:
                clean = apply_mask(masks[track], read_wav(audio_in[track], track))
                with _atomic(ws.clean_audio(track)) as tmp:
                    write_wav(tmp, clean.samples)

    _run_stage(ledger, "frames", _stage_hash(cfg), inputs, outputs, runner)


def stage_vad(ws: Workspace, cfg: PipelineConfig, ledger: RunLedger,
              vad_in: dict, languages: dict) -> None:
    inputs = {}
    for track in TRACKS:
        if vad_in[track] is not None:
            path = _require_input(vad_in[track], f"{track} VAD table")
            inputs[str(path)] = _sha256_file(path)
        else:
            path = _require(ws.clean_audio(track), "frames")
            inputs[str(path)] = _sha256_file(path)
    outputs = [ws.vad(t) for t in TRACKS] + [ws.sliced(t) for t in TRACKS]

    def runner():
        for track in TRACKS:
            if vad_in[track] is not None:
                report = ingest_vad(vad_in[track], track)
            else:
                report = energy_vad(read_wav(ws.clean_audio(track), track))
            with _atomic(ws.vad(track)) as tmp:
                save_vad(report, tmp)
            segments = slice_speech_segments(report, language=languages[track])
            _save_segments(segments, ws.sliced(track))
            log.info("%s: %d matchable segments", track, len(segments))

    _run_stage(ledger, "vad", _stage_hash(cfg, {"languages": languages}),
               inputs, outputs, runner)


def _provider_inputs(spec: str, what: str) -> dict:
    """Fingerprint a `file:` provider's table so edits trigger a rerun."""
    if spec.startswith("file:"):
        path = _require_input(spec[5:], what)
        return {str(path): _sha256_file(path)}
    return {}


def stage_transcribe(ws: Workspace, cfg: PipelineConfig, ledger: RunLedger,
                     asr_specs: dict, jobs: int) -> None:
    inputs = {}
    for track in TRACKS:
        for path in (_require(ws.sliced(track), "vad"),
                     _require(ws.clean_audio(track), "frames")):
            inputs[str(path)] = _sha256_file(path)
        inputs.update(_provider_inputs(asr_specs[track], f"{track} ASR table"))
    outputs = [ws.transcribed(t) for t in TRACKS]

    def runner():
        store = TranscriptStore(ws.cache("asr"))
        for track in TRACKS:
            provider = resolve_asr_provider(asr_specs[track])
            segments = _load_segments(ws.sliced(track))
            audio = read_wav(ws.clean_audio(track), track)
            done = transcribe_all(segments, audio, provider, store=store, jobs=jobs)
            _save_segments(done, ws.transcribed(track))

    _run_stage(ledger, "transcribe", _stage_hash(cfg, {"asr": asr_specs}),
               inputs, outputs, runner)


def stage_translate(ws: Workspace, cfg: PipelineConfig, ledger: RunLedger,
                    mt_spec: str, target_language: str) -> None:
    source = _require(ws.transcribed("D1"), "transcribe")
    inputs = {str(source): _sha256_file(source)}
    inputs.update(_provider_inputs(mt_spec, "MT table"))
    outputs = [ws.translated("D1")]

    def runner():
        segments = _load_segments(source)
        kept, dropped = drop_unrecognized(segments)
        if dropped:
            log.info("D1: dropping %d unrecognized segments", dropped)
        mt = resolve_mt_provider(mt_spec)
        done = translate_all(kept, mt, target_language,
                             store=TranscriptStore(ws.cache("mt")))
        _save_segments(done, ws.translated("D1"))

    _run_stage(ledger, "translate",
               _stage_hash(cfg, {"mt": mt_spec, "target_language": target_language}),
               inputs, outputs, runner)


def _matching_inputs(ws: Workspace) -> tuple[list[SpeechSegment], list[SpeechSegment]]:
    """The two segment lists every post-translate stage agrees on."""
    d1 = _load_segments(_require(ws.translated("D1"), "translate"))
    d2_all = _load_segments(_require(ws.transcribed("D2"), "transcribe"))
    d2, dropped = drop_unrecognized(d2_all)
    if dropped:
        log.info("D2: dropping %d unrecognized segments", dropped)
    return d1, d2


def stage_similarity(ws: Workspace, cfg: PipelineConfig, ledger: RunLedger,
                     embeddings: Path, jobs: int) -> None:
    embeddings = _require_input(embeddings, "embeddings file")
    inputs = {str(p): _sha256_file(p) for p in (
        _require(ws.translated("D1"), "translate"),
        _require(ws.transcribed("D2"), "transcribe"),
        embeddings,
    )}
    outputs = [ws.similarity]

    def runner():
        d1, d2 = _matching_inputs(ws)
        table = load_embeddings(embeddings)
        matrix = build_matrix(d1, d2, table, cfg, jobs=jobs)
        with _atomic(ws.similarity) as tmp:
            save_matrix(matrix, tmp)
        log.info("similarity: %d entries for %d x %d segments",
                 len(matrix.entries), len(d1), len(d2))

    _run_stage(ledger, "similarity", _stage_hash(cfg), inputs, outputs, runner)


def stage_match(ws: Workspace, cfg: PipelineConfig, ledger: RunLedger,
                embeddings: Path) -> None:
    embeddings = _require_input(embeddings, "embeddings file")
    inputs = {str(p): _sha256_file(p) for p in (
        _require(ws.similarity, "similarity"),
        _require(ws.translated("D1"), "translate"),
        _require(ws.transcribed("D2"), "transcribe"),
        embeddings,
    )}
    outputs = [ws.matches]

    def runner():
        d1, d2 = _matching_inputs(ws)
        matrix = load_matrix(ws.similarity,
                             row_ids=tuple(s.id for s in d1),
                             col_ids=tuple(s.id for s in d2))
        # the dump drops the scorer; window rescoring needs it back
        matrix = replace(matrix, scorer=make_scorer(load_embeddings(embeddings)))
        outcome = run_matching(d1, d2, matrix, cfg)
        with _atomic(ws.matches) as tmp:
            save_outcome(outcome, d1, d2, cfg, tmp)
        log.info("match: %d pairs, mean score %.3f",
                 outcome.pair_count, outcome.mean_score)

    _run_stage(ledger, "match", _stage_hash(cfg), inputs, outputs, runner)


def stage_export(ws: Workspace, cfg: PipelineConfig, ledger: RunLedger) -> None:
    inputs = {str(p): _sha256_file(p) for p in (
        [_require(ws.matches, "match"),
         _require(ws.translated("D1"), "translate"),
         _require(ws.transcribed("D2"), "transcribe")]
        + [_require(ws.clean_audio(t), "frames") for t in TRACKS]
    )}
    outputs = [ws.corpus_manifest]

    def runner():
        d1, d2 = _matching_inputs(ws)
        outcome = load_outcome(ws.matches, d1, d2)
        audio = {t: read_wav(ws.clean_audio(t), t) for t in TRACKS}
        by_id = {s.id: s for s in d1 + d2}
        # the manifest is written last, so its presence marks a complete export
        manifest = export_pairs(outcome, audio, by_id, ws.corpus_dir)
        log.info("export: %d pairs under %s", outcome.pair_count, manifest.parent)

    _run_stage(ledger, "export", _stage_hash(cfg), inputs, outputs, runner)


def stage_stats(ws: Workspace, cfg: PipelineConfig, ledger: RunLedger,
                label: str | None, fmt: str) -> None:
    inputs = {str(p): _sha256_file(p) for p in (
        [_require(ws.matches, "match"),
         _require(ws.translated("D1"), "translate"),
         _require(ws.transcribed("D2"), "transcribe")]
        + [_require(ws.clean_audio(t), "frames") for t in TRACKS]
    )}
    outputs = [ws.stats]

    def runner():
        d1, d2 = _matching_inputs(ws)
        outcome = load_outcome(ws.matches, d1, d2)
        durations = {t: read_wav(ws.clean_audio(t), t).duration_s for t in TRACKS}
        row_label = label
        if row_label is None:
            langs = [s.language for s in (d1[:1] + d2[:1]) if s.language]
            row_label = "-".join(langs) if len(langs) == 2 else "D1-D2"
        stats = compute_stats(outcome, d1, d2, durations, cfg, pair_label=row_label)
        text = stats_table([stats], fmt=fmt)
        with _atomic(ws.stats) as tmp:
            tmp.write_text(text, encoding="utf-8")
        sys.stdout.write(text)

    _run_stage(ledger, "stats", _stage_hash(cfg, {"label": label, "format": fmt}),
               inputs, outputs, runner)


# ------------------------------------------------------------- commands

def cmd_frames(args) -> int:
    ws = Workspace(args.out_dir)
    cfg = _load_cfg(args)
    ledger = RunLedger(ws.ledger_path)
    stage_frames(ws, cfg, ledger, args.d1_frames, args.d2_frames,
                 args.d1_audio, args.d2_audio, args.jobs)
    return 0


def cmd_vad(args) -> int:
    ws = Workspace(args.out_dir)
    cfg = _load_cfg(args)
    ledger = RunLedger(ws.ledger_path)
    stage_vad(ws, cfg, ledger,
              {"D1": args.d1_vad, "D2": args.d2_vad},
              {"D1": args.d1_language, "D2": args.d2_language})
    return 0


def cmd_transcribe(args) -> int:
    ws = Workspace(args.out_dir)
    cfg = _load_cfg(args)
    ledger = RunLedger(ws.ledger_path)
    stage_transcribe(ws, cfg, ledger,
                     {"D1": args.d1_asr, "D2": args.d2_asr}, args.jobs)
    return 0


def cmd_translate(args) -> int:
    ws = Workspace(args.out_dir)
    cfg = _load_cfg(args)
    ledger = RunLedger(ws.ledger_path)
    stage_translate(ws, cfg, ledger, args.mt, args.target_language)
    return 0


def cmd_similarity(args) -> int:
    ws = Workspace(args.out_dir)
    cfg = _load_cfg(args)
    ledger = RunLedger(ws.ledger_path)
    stage_similarity(ws, cfg, ledger, args.embeddings, args.jobs)
    return 0


def cmd_match(args) -> int:
    ws = Workspace(args.out_dir)
    cfg = _load_cfg(args, max_start_diff_s=args.max_start_diff,
                    max_dur_diff_s=args.max_dur_diff)
    ledger = RunLedger(ws.ledger_path)
    stage_match(ws, cfg, ledger, args.embeddings)
    return 0


def cmd_export(args) -> int:
    ws = Workspace(args.out_dir)
    cfg = _load_cfg(args)
    ledger = RunLedger(ws.ledger_path)
    stage_export(ws, cfg, ledger)
    return 0


def cmd_stats(args) -> int:
    ws = Workspace(args.out_dir)
    cfg = _load_cfg(args)
    ledger = RunLedger(ws.ledger_path)
    stage_stats(ws, cfg, ledger, args.label, args.format)
    return 0


def cmd_eval_sample(args) -> int:
    ws = Workspace(args.out_dir)
    manifest = args.manifest or _require(ws.corpus_manifest, "export")
    entries = load_corpus_manifest(_require_input(manifest, "pair manifest"),
                                   verify_audio=False)
    ids = sample_pairs(entries, n=args.count, seed=args.seed,
                       min_duration_s=args.min_duration,
                       max_duration_s=args.max_duration)
    out_path = args.output or ws.sample
    with _atomic(out_path) as tmp:
        tmp.write_text(json.dumps(ids, indent=2) + "\n", encoding="utf-8")
    print(f"{len(ids)} pair ids -> {out_path}")
    return 0


def _labels_by_pair(entries) -> dict:
    return {e.pair_id: e.left.label for e in entries}


def cmd_eval_report(args) -> int:
    ws = Workspace(args.out_dir)
    manifest = args.manifest or _require(ws.corpus_manifest, "export")
    entries = load_corpus_manifest(_require_input(manifest, "pair manifest"),
                                   verify_audio=False)
    store = RatingStore(args.ratings or ws.ratings,
                        known_pairs={e.pair_id for e in entries})
    if not len(store):
        raise ValidationError("no ratings recorded yet")
    report = agreement_report(store.ratings(), _labels_by_pair(entries))
    print(json.dumps(report.to_json(), indent=2, sort_keys=True))
    return 0


def cmd_eval_kappa(args) -> int:
    ws = Workspace(args.out_dir)
    store = RatingStore(args.ratings or ws.ratings)
    known = store.annotators()
    for annotator in (args.annotator_a, args.annotator_b):
        if annotator not in known:
            raise ValidationError(
                f"annotator {annotator!r} has no ratings "
                f"(known: {', '.join(known) or 'none'})"
            )
    print(repr(cohen_kappa(store.by_annotator(args.annotator_a),
                           store.by_annotator(args.annotator_b))))
    return 0


def cmd_serve(args) -> int:
    from .service import create_app

    ws = Workspace(args.out_dir)
    manifest = args.manifest or _require(ws.corpus_manifest, "export")
    app = create_app(
        _require_input(manifest, "pair manifest"),
        args.ratings or ws.ratings,
        sample_path=args.sample,
        ui_dir=args.ui,
    )
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_synth(args) -> int:
    from .synth import demo_spec, generate

    spec = demo_spec(seed=args.seed, pairs=args.pairs, decoys=args.decoys,
                     block_track=args.block_track,
                     block_length_s=args.block_length)
    truth = generate(spec, args.out_dir)
    removed = sum(len(v) for v in truth["expected_removed_frames"].values())
    print(f"synthetic corpus in {args.out_dir}: "
          f"{len(truth['expected_pairs'])} planted pairs, "
          f"{sum(len(v) for v in truth['decoys'].values())} decoys, "
          f"{len(spec.blocks)} inserted block(s) ({removed} frames)")
    return 0


def cmd_run(args) -> int:
    if args.synth_dir:
        sd = Path(_require_input(args.synth_dir, "synthetic corpus"))
        args.d1_frames = args.d1_frames or sd / "frames" / "D1.manifest"
        args.d2_frames = args.d2_frames or sd / "frames" / "D2.manifest"
        args.d1_audio = args.d1_audio or sd / "audio" / "D1.wav"
        args.d2_audio = args.d2_audio or sd / "audio" / "D2.wav"
        args.d1_vad = args.d1_vad or sd / "vad" / "D1.tsv"
        args.d2_vad = args.d2_vad or sd / "vad" / "D2.tsv"
        args.d1_asr = args.d1_asr or f"file:{sd / 'providers' / 'asr-D1.jsonl'}"
        args.d2_asr = args.d2_asr or f"file:{sd / 'providers' / 'asr-D2.jsonl'}"
        args.mt = args.mt or f"file:{sd / 'providers' / 'mt-D1.jsonl'}"
        args.embeddings = args.embeddings or sd / "embeddings.txt"
        if not args.config and (sd / "pipeline.cfg").exists():
            args.config = sd / "pipeline.cfg"
    for flag, value in (("--d1-frames", args.d1_frames),
                        ("--d2-frames", args.d2_frames),
                        ("--d1-audio", args.d1_audio),
                        ("--d2-audio", args.d2_audio),
                        ("--d1-asr", args.d1_asr),
                        ("--d2-asr", args.d2_asr),
                        ("--mt", args.mt),
                        ("--embeddings", args.embeddings)):
        if value is None:
            raise ValidationError(f"run needs {flag} (or --synth-dir)")

    ws = Workspace(args.out_dir)
    cfg = _load_cfg(args, max_start_diff_s=args.max_start_diff,
                    max_dur_diff_s=args.max_dur_diff)
    ledger = RunLedger(ws.ledger_path)
    stage_frames(ws, cfg, ledger, args.d1_frames, args.d2_frames,
                 args.d1_audio, args.d2_audio, args.jobs)
    stage_vad(ws, cfg, ledger,
              {"D1": args.d1_vad, "D2": args.d2_vad},
              {"D1": args.d1_language, "D2": args.d2_language})
    stage_transcribe(ws, cfg, ledger,
                     {"D1": args.d1_asr, "D2": args.d2_asr}, args.jobs)
    stage_translate(ws, cfg, ledger, args.mt, args.target_language)
    stage_similarity(ws, cfg, ledger, args.embeddings, args.jobs)
    stage_match(ws, cfg, ledger, args.embeddings)
    stage_export(ws, cfg, ledger)
    stage_stats(ws, cfg, ledger, args.label, args.format)
    return 0


# --------------------------------------------------------------- parser

def _add_match_flags(sub) -> None:
    sub.add_argument("--max-start-diff", type=float, default=None,
                     help="max start-time difference in seconds (config override)")
    sub.add_argument("--max-dur-diff", type=float, default=None,
                     help="max duration difference in seconds (config override)")


def _add_stats_flags(sub) -> None:
    sub.add_argument("--label", default=None,
                     help="row label in the report (default: language pair)")
    sub.add_argument("--format", choices=("text", "tsv"), default="text")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", type=Path, default=Path("out"),
                        help="artifact directory (default: out)")
    common.add_argument("--config", type=Path, default=None,
                        help="pipeline config file")
    common.add_argument("--jobs", type=int, default=1,
                        help="worker threads for parallel stages")

    parser = argparse.ArgumentParser(
        prog="dubalign",
        description="Align two dubbed variants of a video into paired speech.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("frames", parents=[common],
                       help="remove frames absent from the other variant")
    p.add_argument("--d1-frames", type=Path, required=True)
    p.add_argument("--d2-frames", type=Path, required=True)
    p.add_argument("--d1-audio", type=Path, default=None,
                   help="raw D1 WAV; writes the compacted track")
    p.add_argument("--d2-audio", type=Path, default=None)
    p.set_defaults(func=cmd_frames)

    p = sub.add_parser("vad", parents=[common],
                       help="label speech spans and slice segments")
    p.add_argument("--d1-vad", type=Path, default=None,
                   help="labelled span table; omit for the energy fallback")
    p.add_argument("--d2-vad", type=Path, default=None)
    p.add_argument("--d1-language", default="tr")
    p.add_argument("--d2-language", default="ar")
    p.set_defaults(func=cmd_vad)

    p = sub.add_parser("transcribe", parents=[common],
                       help="fill transcripts from an ASR provider")
    p.add_argument("--d1-asr", required=True, help="provider, e.g. file:asr-D1.jsonl")
    p.add_argument("--d2-asr", required=True)
    p.set_defaults(func=cmd_transcribe)

    p = sub.add_parser("translate", parents=[common],
                       help="translate D1 transcripts into the D2 language")
    p.add_argument("--mt", required=True, help="provider, e.g. file:mt.jsonl or echo")
    p.add_argument("--target-language", default="ar")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("similarity", parents=[common],
                       help="score temporally plausible segment pairs")
    p.add_argument("--embeddings", type=Path, required=True,
                   help="word2vec text file")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("match", parents=[common],
                       help="pair segments under the timing and score rules")
    p.add_argument("--embeddings", type=Path, required=True)
    _add_match_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("export", parents=[common],
                       help="cut per-pair WAVs and write the pair manifest")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("stats", parents=[common],
                       help="summarize the matched corpus")
    _add_stats_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", parents=[],
                       help="annotation sampling, agreement, and kappa")
    esub = p.add_subparsers(dest="eval_command", required=True)

    e = esub.add_parser("sample", parents=[common],
                        help="draw pair ids for annotation")
    e.add_argument("-n", "--count", type=int, required=True)
    e.add_argument("--seed", type=int, required=True,
                   help="sampling seed; required so draws are reproducible")
    e.add_argument("--manifest", type=Path, default=None,
                   help="pair manifest (default: <out-dir>/corpus/pairs.jsonl)")
    e.add_argument("--min-duration", type=float, default=None,
                   help="keep pairs at least this long, in seconds")
    e.add_argument("--max-duration", type=float, default=None)
    e.add_argument("--output", type=Path, default=None,
                   help="where to write the id list (default: <out-dir>/eval/sample.json)")
    e.set_defaults(func=cmd_eval_sample)

    e = esub.add_parser("report", parents=[common],
                        help="print the agreement report as JSON")
    e.add_argument("--manifest", type=Path, default=None)
    e.add_argument("--ratings", type=Path, default=None,
                   help="ratings log (default: <out-dir>/ratings.jsonl)")
    e.set_defaults(func=cmd_eval_report)

    e = esub.add_parser("kappa", parents=[common],
                        help="Cohen's kappa between two annotators")
    e.add_argument("annotator_a")
    e.add_argument("annotator_b")
    e.add_argument("--ratings", type=Path, default=None)
    e.set_defaults(func=cmd_eval_kappa)

    p = sub.add_parser("serve", parents=[common],
                       help="run the rating service over HTTP")
    p.add_argument("--manifest", type=Path, default=None)
    p.add_argument("--ratings", type=Path, default=None)
    p.add_argument("--sample", type=Path, default=None,
                   help="restrict the queue to a sampled id list")
    p.add_argument("--ui", type=Path, default=None,
                   help="static review UI directory to serve at /")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic corpus with known answers")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--pairs", type=int, default=55)
    p.add_argument("--decoys", type=int, default=12)
    p.add_argument("--block-track", choices=TRACKS, default="D2")
    p.add_argument("--block-length", type=float, default=24.0,
                   help="inserted block length in seconds")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", parents=[common],
                       help="all stages in order; equals running them one by one")
    p.add_argument("--synth-dir", type=Path, default=None,
                   help="take every input from a generated corpus directory")
    p.add_argument("--d1-frames", type=Path, default=None)
    p.add_argument("--d2-frames", type=Path, default=None)
    p.add_argument("--d1-audio", type=Path, default=None)
    p.add_argument("--d2-audio", type=Path, default=None)
    p.add_argument("--d1-vad", type=Path, default=None)
    p.add_argument("--d2-vad", type=Path, default=None)
    p.add_argument("--d1-language", default="tr")
    p.add_argument("--d2-language", default="ar")
    p.add_argument("--d1-asr", default=None)
    p.add_argument("--d2-asr", default=None)
    p.add_argument("--mt", default=None)
    p.add_argument("--target-language", default="ar")
    p.add_argument("--embeddings", type=Path, default=None)
    _add_match_flags(p)
    _add_stats_flags(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MissingArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ProviderTransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
