import pytest
from hypothesis import given
from hypothesis import strategies as st

from dubalign.model import (
    MATCHABLE_LABELS,
    UNRECOGNIZED,
    PipelineConfig,
    SegmentLabel,
    SpeechSegment,
    TimeSpan,
    ValidationError,
    check_track_segments,
    config_with_overrides,
    load_config,
    ms_from_seconds,
    save_config,
)


def seg(id, start_ms, end_ms, track="D1", label=SegmentLabel.MALE, **kw):
    return SpeechSegment(id=id, track=track, span=TimeSpan(start_ms, end_ms), label=label, **kw)


class TestTimeSpan:
    def test_ms_from_seconds_rounds_to_nearest(self):
        assert ms_from_seconds(1.0) == 1000
        assert ms_from_seconds(0.0015) == 2
        assert ms_from_seconds(0.0014) == 1
        assert ms_from_seconds(12.3456) == 12346

    def test_ms_from_seconds_rejects_nan(self):
        with pytest.raises(ValidationError):
            ms_from_seconds(float("nan"))

    def test_duration_views(self):
        span = TimeSpan(1500, 4000)
        assert span.duration_ms == 2500
        assert span.duration_s == 2.5
        assert span.start_s == 1.5 and span.end_s == 4.0

    def test_from_seconds(self):
        assert TimeSpan.from_seconds(0.1, 0.25) == TimeSpan(100, 250)

    def test_rejects_empty_and_negative(self):
        with pytest.raises(ValidationError):
            TimeSpan(100, 100)
        with pytest.raises(ValidationError):
            TimeSpan(-1, 100)
        with pytest.raises(ValidationError):
            TimeSpan(200, 100)

    def test_rejects_float_boundaries(self):
        with pytest.raises(ValidationError):
            TimeSpan(0.0, 100)  # type: ignore[arg-type]

    def test_overlap_is_half_open(self):
        a = TimeSpan(0, 100)
        assert not a.overlaps(TimeSpan(100, 200))  # touching, no overlap
        assert a.overlaps(TimeSpan(99, 200))
        assert a.overlaps(TimeSpan(0, 1))

    @given(st.integers(0, 10**7), st.integers(1, 10**5))
    def test_duration_consistency(self, start, length):
        span = TimeSpan(start, start + length)
        assert span.duration_ms == length
        assert ms_from_seconds(span.duration_s) == length


class TestLabels:
    def test_parse_is_case_insensitive(self):
        assert SegmentLabel.parse("female") is SegmentLabel.FEMALE
        assert SegmentLabel.parse("NOENERGY") is SegmentLabel.NO_ENERGY
        assert SegmentLabel.parse(" music ") is SegmentLabel.MUSIC

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValidationError, match="speech"):
            SegmentLabel.parse("speech")

    def test_matchable_set(self):
        assert SegmentLabel.NOISE not in MATCHABLE_LABELS
        assert SegmentLabel.NO_ENERGY not in MATCHABLE_LABELS
        assert MATCHABLE_LABELS == {
            SegmentLabel.FEMALE,
            SegmentLabel.MALE,
            SegmentLabel.MUSIC,
        }


class TestSpeechSegment:
    def test_unrecognized_is_falsy_singleton(self):
        assert not UNRECOGNIZED
        s = seg("a", 0, 500, transcript=UNRECOGNIZED)
        assert s.is_unrecognized and not s.has_transcript

    def test_transcript_states_are_distinct(self):
        untried = seg("a", 0, 500)
        failed = seg("b", 0, 500, transcript=UNRECOGNIZED)
        done = seg("c", 0, 500, transcript="hello")
        assert not untried.has_transcript and not untried.is_unrecognized
        assert failed.is_unrecognized
        assert done.has_transcript and done.transcript == "hello"

    def test_json_round_trip_preserves_unrecognized(self):
        for s in [
            seg("a", 10, 900, language="tr", transcript="merhaba", translation="hello"),
            seg("b", 10, 900, transcript=UNRECOGNIZED),
            seg("c", 10, 900),
        ]:
            back = SpeechSegment.from_json(s.to_json())
            assert back == s

    def test_check_track_segments(self):
        good = [seg("a", 0, 100), seg("b", 100, 200), seg("c", 250, 300)]
        check_track_segments(good)
        with pytest.raises(ValidationError, match="overlap"):
            check_track_segments([seg("a", 0, 150), seg("b", 100, 200)])
        with pytest.raises(ValidationError, match="order"):
            check_track_segments([seg("b", 100, 200), seg("a", 0, 50)])
        with pytest.raises(ValidationError):
            check_track_segments([seg("a", 0, 100), seg("b", 200, 300, track="D2")])


class TestConfig:
    def test_defaults_match_operating_point(self):
        cfg = PipelineConfig()
        assert cfg.fps == 30
        assert cfg.ssim_threshold == 0.75
        assert cfg.search_window_frames == 500
        assert cfg.max_start_diff_s == 9.0
        assert cfg.max_dur_diff_s == 8.0
        assert cfg.min_similarity == 0.5
        assert cfg.max_start_diff_ms == 9000
        assert cfg.max_dur_diff_ms == 8000

    def test_range_validation_names_the_key(self):
        with pytest.raises(ValidationError, match="frames.ssim_threshold"):
            PipelineConfig(ssim_threshold=1.5)
        with pytest.raises(ValidationError, match="match.min_similarity"):
            PipelineConfig(min_similarity=-0.1)
        with pytest.raises(ValidationError, match="frames.fps"):
            PipelineConfig(fps=0)

    def test_save_load_round_trip(self, tmp_path):
        cfg = PipelineConfig(fps=25, ssim_threshold=0.8, drift_compensation=False,
                             max_start_diff_s=4.5, frame_stride=2)
        path = tmp_path / "run.cfg"
        save_config(cfg, path)
        assert load_config(path) == cfg

    def test_load_partial_file_keeps_defaults(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment line\nframes.fps = 25\n\nmatch.min_similarity = 0.6\n")
        cfg = load_config(path)
        assert cfg.fps == 25
        assert cfg.min_similarity == 0.6
        assert cfg.search_window_frames == 500

    def test_load_reports_unknown_key_with_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("frames.fps = 25\nfoo.bar = 1\n")
        with pytest.raises(ValidationError, match=r"run\.cfg:2.*foo\.bar"):
            load_config(path)

    def test_load_reports_bad_syntax_and_bad_value(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("frames.fps\n")
        with pytest.raises(ValidationError, match=r":1"):
            load_config(path)
        path.write_text("frames.fps = many\n")
        with pytest.raises(ValidationError, match="many"):
            load_config(path)

    def test_load_rejects_out_of_range_value(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("frames.ssim_threshold = 2.0\n")
        with pytest.raises(ValidationError, match="frames.ssim_threshold"):
            load_config(path)

    def test_missing_file_is_file_not_found(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "absent.cfg")

    def test_overrides_skip_none(self):
        cfg = PipelineConfig()
        same = config_with_overrides(cfg, fps=None, ssim_threshold=None)
        assert same == cfg
        changed = config_with_overrides(cfg, fps=25, min_similarity=None)
        assert changed.fps == 25 and changed.min_similarity == 0.5
