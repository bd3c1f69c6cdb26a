"""HTTP endpoints of the review service, exercised through TestClient."""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from dubalign.audio import REQUIRED_RATE, AudioTrack
from dubalign.corpus import export_pairs
from dubalign.matching import MatchOutcome, SegmentPair
from dubalign.model import SegmentLabel, SpeechSegment, TimeSpan, ValidationError
from dubalign.rating import cohen_kappa
from dubalign.service import create_app


def seg(track, i, start_ms, end_ms, label=SegmentLabel.FEMALE, **kw):
    kw.setdefault("transcript", f"text {track} {i}")
    return SpeechSegment(id=f"{track}-{i:05d}", track=track,
                         span=TimeSpan(start_ms, end_ms), label=label,
                         language="tr" if track == "D1" else "ar", **kw)


@pytest.fixture
def corpus_dir(tmp_path):
    """Three exported one-to-one pairs plus their manifest on disk."""
    d1, d2, pairs = [], [], []
    for i in range(3):
        start = 1000 + i * 4000
        d1.append(seg("D1", i, start, start + 2000, translation=f"line {i}"))
        d2.append(seg("D2", i, start + 200, start + 2100))
        pairs.append(SegmentPair(
            left=(f"D1-{i:05d}",), right=(f"D2-{i:05d}",),
            label=SegmentLabel.FEMALE, score=0.8, kind="one-to-one",
        ))
    outcome = MatchOutcome(pairs=tuple(pairs), unmatched_left=(), unmatched_right=())
    rng = np.random.default_rng(3)
    audio = {
        track: AudioTrack(track=track, sample_rate=REQUIRED_RATE,
                          samples=rng.integers(-3000, 3000, size=16 * REQUIRED_RATE,
                                               dtype=np.int16))
        for track in ("D1", "D2")
    }
    by_id = {s.id: s for s in d1 + d2}
    manifest = export_pairs(outcome, audio, by_id, tmp_path)
    return tmp_path, manifest


def make_client(corpus_dir, **kw):
    tmp_path, manifest = corpus_dir
    app = create_app(manifest, tmp_path / "ratings.jsonl", **kw)
    return TestClient(app)


class TestNextPair:
    def test_walks_the_queue_in_order(self, corpus_dir):
        client = make_client(corpus_dir)
        first = client.get("/api/pairs/next", params={"annotator": "ann-a"}).json()
        assert first["pair"]["pair_id"] == "pair-00000"
        assert first["total"] == 3 and first["completed"] == 0
        assert not first["done"]
        assert first["pair"]["left"]["audio_url"] == "/api/pairs/pair-00000/audio/left"
        assert first["pair"]["label"] == "female"

        client.post("/api/ratings", json={
            "pair_id": "pair-00000", "annotator": "ann-a", "score": 1.0})
        second = client.get("/api/pairs/next", params={"annotator": "ann-a"}).json()
        assert second["pair"]["pair_id"] == "pair-00001"
        assert second["completed"] == 1

    def test_queue_is_per_annotator(self, corpus_dir):
        client = make_client(corpus_dir)
        client.post("/api/ratings", json={
            "pair_id": "pair-00000", "annotator": "ann-a", "score": 0.5})
        other = client.get("/api/pairs/next", params={"annotator": "ann-b"}).json()
        assert other["pair"]["pair_id"] == "pair-00000"
        assert other["completed"] == 0

    def test_done_once_everything_is_rated(self, corpus_dir):
        client = make_client(corpus_dir)
        for i in range(3):
            client.post("/api/ratings", json={
                "pair_id": f"pair-{i:05d}", "annotator": "ann-a", "score": 0.0})
        final = client.get("/api/pairs/next", params={"annotator": "ann-a"}).json()
        assert final["done"] and final["pair"] is None
        assert final["completed"] == 3

    def test_missing_annotator_param_rejected(self, corpus_dir):
        client = make_client(corpus_dir)
        assert client.get("/api/pairs/next").status_code == 422


class TestAudio:
    def test_bytes_match_the_exported_file(self, corpus_dir):
        tmp_path, _ = corpus_dir
        client = make_client(corpus_dir)
        resp = client.get("/api/pairs/pair-00001/audio/right")
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "audio/wav"
        on_disk = (tmp_path / "audio" / "pair-00001.D2.wav").read_bytes()
        assert resp.content == on_disk

    def test_unknown_pair_and_side_are_404(self, corpus_dir):
        client = make_client(corpus_dir)
        assert client.get("/api/pairs/pair-99999/audio/left").status_code == 404
        assert client.get("/api/pairs/pair-00000/audio/middle").status_code == 404


class TestRatings:
    def test_score_outside_closed_set_rejected(self, corpus_dir):
        client = make_client(corpus_dir)
        resp = client.post("/api/ratings", json={
            "pair_id": "pair-00000", "annotator": "ann-a", "score": 0.7})
        assert resp.status_code == 422

    def test_unknown_pair_rejected(self, corpus_dir):
        client = make_client(corpus_dir)
        resp = client.post("/api/ratings", json={
            "pair_id": "ghost", "annotator": "ann-a", "score": 1.0})
        assert resp.status_code == 404

    def test_upsert_keeps_the_total_stable(self, corpus_dir):
        client = make_client(corpus_dir)
        for score in (0.0, 1.0):
            resp = client.post("/api/ratings", json={
                "pair_id": "pair-00000", "annotator": "ann-a", "score": score})
            assert resp.status_code == 200
        report = client.get("/api/report").json()
        assert report["rated_total"] == 1
        assert report["score_counts"]["1.0"] == 1

    def test_ratings_survive_a_service_restart(self, corpus_dir):
        tmp_path, manifest = corpus_dir
        first = TestClient(create_app(manifest, tmp_path / "r.jsonl"))
        first.post("/api/ratings", json={
            "pair_id": "pair-00002", "annotator": "ann-a", "score": 0.5})

        reopened = TestClient(create_app(manifest, tmp_path / "r.jsonl"))
        progress = reopened.get("/api/pairs/next", params={"annotator": "ann-a"}).json()
        assert progress["completed"] == 1
        report = reopened.get("/api/report").json()
        assert report["rated_total"] == 1


class TestReport:
    def test_empty_store_is_404(self, corpus_dir):
        client = make_client(corpus_dir)
        assert client.get("/api/report").status_code == 404

    def test_two_annotators_full_pass_matches_direct_kappa(self, corpus_dir):
        client = make_client(corpus_dir)
        scores_a = {"pair-00000": 1.0, "pair-00001": 0.5, "pair-00002": 0.0}
        scores_b = {"pair-00000": 1.0, "pair-00001": 1.0, "pair-00002": 0.0}
        for annotator, scores in (("ann-a", scores_a), ("ann-b", scores_b)):
            for pair_id, score in scores.items():
                client.post("/api/ratings", json={
                    "pair_id": pair_id, "annotator": annotator, "score": score})
        report = client.get("/api/report").json()
        assert report["kappa"]["ann-a|ann-b"] == pytest.approx(
            cohen_kappa(scores_a, scores_b))
        # consensus takes the lower score per pair: 1.0, 0.5, 0.0
        assert report["score_counts"] == {"0.0": 1, "0.5": 1, "1.0": 1}
        assert report["label_counts"]["1.0"] == {"female": 1}
        assert report["accuracy"] == pytest.approx(2 / 3)
        assert set(report["annotator_accuracy"]) == {"ann-a", "ann-b"}


class TestSampleQueue:
    def test_queue_follows_the_sample_file(self, corpus_dir, tmp_path):
        sample = tmp_path / "sample.json"
        sample.write_text(json.dumps(["pair-00002", "pair-00000"]))
        client = make_client(corpus_dir, sample_path=sample)
        first = client.get("/api/pairs/next", params={"annotator": "a"}).json()
        assert first["pair"]["pair_id"] == "pair-00002"
        assert first["total"] == 2

    def test_sample_with_unknown_pair_rejected(self, corpus_dir, tmp_path):
        sample = tmp_path / "sample.json"
        sample.write_text(json.dumps(["pair-77777"]))
        with pytest.raises(ValidationError, match="not in the manifest"):
            make_client(corpus_dir, sample_path=sample)


class TestStaticUi:
    def test_index_served_from_mounted_dir(self, corpus_dir, tmp_path):
        ui = tmp_path / "ui"
        ui.mkdir()
        (ui / "index.html").write_text("<!doctype html><title>review</title>")
        client = make_client(corpus_dir, ui_dir=ui)
        resp = client.get("/")
        assert resp.status_code == 200
        assert "review" in resp.text
        # the API still wins over the static mount
        assert client.get("/api/report").status_code == 404
