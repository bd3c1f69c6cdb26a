"""HTTP review service: serve pairs for rating and report agreement.

The API is deliberately small so the browser UI stays a thin client:

* ``GET /api/pairs/next?annotator=<id>`` -> the first pair that annotator
  has not rated yet, with audio URLs and progress counters
* ``GET /api/pairs/<id>/audio/<side>`` -> WAV bytes, side is left or right
* ``POST /api/ratings`` with ``{pair_id, annotator, score}``
* ``GET /api/report`` -> the agreement report as JSON

Rating writes funnel through one RatingStore whose lock serializes them, so
concurrent annotator sessions cannot interleave half-written events.  When
``ui_dir`` is given the directory is mounted at ``/`` after the API routes.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .corpus import PairManifestEntry, load_corpus_manifest
from .model import ValidationError
from .rating import ALLOWED_SCORES, Rating, RatingStore, agreement_report


class RatingIn(BaseModel):
    pair_id: str
    annotator: str
    score: float


def _side_payload(pair_id: str, name: str, side) -> dict:
    return {
        "track": side.track,
        "language": side.language,
        "duration_ms": side.duration_ms,
        "texts": list(side.texts),
        "translation": side.translation,
        "audio_url": f"/api/pairs/{pair_id}/audio/{name}",
    }


def _pair_payload(entry: PairManifestEntry) -> dict:
    return {
        "pair_id": entry.pair_id,
        "kind": entry.kind,
        "score": entry.score,
        "label": entry.left.label.value,
        "left": _side_payload(entry.pair_id, "left", entry.left),
        "right": _side_payload(entry.pair_id, "right", entry.right),
    }


def load_sample_ids(path: str | Path) -> list[str]:
    """Read a sampled pair-id list (JSON array) written by ``eval sample``."""
    ids = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(ids, list) or not all(isinstance(p, str) for p in ids):
        raise ValidationError(f"{path}: expected a JSON array of pair ids")
    return ids


def create_app(
    manifest_path: str | Path,
    ratings_path: str | Path,
    sample_path: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    manifest_path = Path(manifest_path)
    entries = load_corpus_manifest(manifest_path, verify_audio=False)
    by_id = {entry.pair_id: entry for entry in entries}

    if sample_path is not None:
        queue_ids = load_sample_ids(sample_path)
        unknown = [pid for pid in queue_ids if pid not in by_id]
        if unknown:
            raise ValidationError(f"sample lists pairs not in the manifest: {unknown[:3]}")
        queue = [by_id[pid] for pid in queue_ids]
    else:
        queue = list(entries)

    store = RatingStore(ratings_path, known_pairs=by_id)
    labels_by_pair = {entry.pair_id: entry.left.label for entry in entries}

    app = FastAPI(title="dubbed pair review")

    @app.get("/api/pairs/next")
    def next_pair(annotator: str = Query(min_length=1)) -> dict:
        rated = store.rated_pairs(annotator)
        pending = [entry for entry in queue if entry.pair_id not in rated]
        payload = {
            "annotator": annotator,
            "total": len(queue),
            "completed": len(queue) - len(pending),
            "done": not pending,
            "pair": _pair_payload(pending[0]) if pending else None,
        }
        return payload

    @app.get("/api/pairs/{pair_id}/audio/{side}")
    def pair_audio(pair_id: str, side: str) -> FileResponse:
        entry = by_id.get(pair_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id!r}")
        if side not in ("left", "right"):
            raise HTTPException(status_code=404, detail="side must be left or right")
        wav = manifest_path.parent / getattr(entry, side).audio_path
        if not wav.exists():
            raise HTTPException(status_code=404, detail=f"audio missing for {pair_id}")
        return FileResponse(wav, media_type="audio/wav")

    @app.post("/api/ratings")
    def post_rating(body: RatingIn) -> dict:
        if body.pair_id not in by_id:
            raise HTTPException(status_code=404, detail=f"unknown pair {body.pair_id!r}")
        if body.score not in ALLOWED_SCORES:
            raise HTTPException(
                status_code=422, detail="score must be one of 0, 0.5, 1"
            )
        rating = store.record(Rating(body.pair_id, body.annotator, body.score))
        return {"ok": True, "rating": rating.to_json()}

    @app.get("/api/report")
    def report() -> dict:
        ratings = store.ratings()
        if not ratings:
            raise HTTPException(status_code=404, detail="no ratings recorded yet")
        return agreement_report(ratings, labels_by_pair).to_json()

    if ui_dir is not None:
        # mounted last so /api keeps routing priority
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
