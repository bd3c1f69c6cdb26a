import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dubalign.matching import (
    MANY_TO_ONE,
    ONE_TO_MANY,
    ONE_TO_ONE,
    MatchOutcome,
    SegmentPair,
    load_outcome,
    rules_satisfied,
    run_matching,
    save_outcome,
    window_combine,
)
from dubalign.model import (
    PipelineConfig,
    SegmentLabel,
    SpeechSegment,
    TimeSpan,
    ValidationError,
)
from dubalign.similarity import EmbeddingTable, SimilarityMatrix, build_matrix, make_scorer

from oracles import reference_matching

WORDS = ["alfa", "bravo", "delta", "eko", "golf", "hotel",
         "kilo", "lima", "mike", "nova", "oskar", "papa"]


def one_hot_table(words=WORDS):
    vectors = {}
    for i, w in enumerate(words):
        v = np.zeros(len(words))
        v[i] = 1.0
        vectors[w] = v
    return EmbeddingTable(dim=len(words), vectors=vectors)


def d1_seg(i, start_ms, dur_ms, text, label=SegmentLabel.MALE):
    return SpeechSegment(id=f"D1-{i:05d}", track="D1",
                         span=TimeSpan(start_ms, start_ms + dur_ms), label=label,
                         language="tr", transcript=f"src {i}", translation=text)


def d2_seg(i, start_ms, dur_ms, text, label=SegmentLabel.MALE):
    return SpeechSegment(id=f"D2-{i:05d}", track="D2",
                         span=TimeSpan(start_ms, start_ms + dur_ms), label=label,
                         language="ar", transcript=text)


def scorer_matrix(table):
    return SimilarityMatrix(row_ids=(), col_ids=(), entries={},
                            scorer=make_scorer(table))


class TestRules:
    def check(self, dstart_ms, ddur_ms, same_label=True, score=0.9,
              cfg=PipelineConfig()):
        left = TimeSpan(10000, 10000 + 5000)
        right = TimeSpan(10000 + dstart_ms, 10000 + dstart_ms + 5000 + ddur_ms)
        return rules_satisfied(
            left, right, SegmentLabel.MALE,
            SegmentLabel.MALE if same_label else SegmentLabel.MUSIC,
            score, cfg,
        )

    def test_time_boundaries_inclusive(self):
        assert self.check(9000, 8000).all_ok
        assert not self.check(9001, 0).start_ok
        assert not self.check(0, 8001).duration_ok
        assert self.check(-9000, -0).all_ok  # symmetric gap

    def test_similarity_boundary_strict(self):
        assert not self.check(0, 0, score=0.5).similarity_ok
        assert self.check(0, 0, score=0.5 + 1e-9).similarity_ok
        assert not self.check(0, 0, score=None).similarity_ok

    def test_label_rule(self):
        verdicts = self.check(0, 0, same_label=False, score=0.99)
        assert not verdicts.label_ok and not verdicts.all_ok
        assert verdicts.start_ok and verdicts.duration_ok and verdicts.similarity_ok

    def test_duration_override_for_windows(self):
        left = TimeSpan(0, 10000)
        right = TimeSpan(200, 9800)  # envelope 9.6 s but only 9.1 s of speech
        verdicts = rules_satisfied(left, right, SegmentLabel.MALE, SegmentLabel.MALE,
                                   0.8, PipelineConfig(), right_duration_ms=9100)
        assert verdicts.duration_ok

    @given(st.integers(0, 20000), st.integers(-4900, 12000),
           st.floats(0.0, 1.0), st.booleans())
    def test_agrees_with_direct_formula(self, dstart, ddur, score, same_label):
        cfg = PipelineConfig()
        verdicts = self.check(dstart, ddur, same_label=same_label, score=score, cfg=cfg)
        assert verdicts.start_ok == (abs(dstart) <= 9000)
        assert verdicts.duration_ok == (abs(ddur) <= 8000)
        assert verdicts.label_ok == same_label
        assert verdicts.similarity_ok == (score > 0.5)


class TestSegmentPair:
    def test_many_to_many_rejected(self):
        with pytest.raises(ValidationError, match="many-to-many"):
            SegmentPair(left=("a", "b"), right=("c", "d"),
                        label=SegmentLabel.MALE, score=0.8, kind=ONE_TO_MANY)

    def test_kind_must_match_shape(self):
        with pytest.raises(ValidationError, match="kind"):
            SegmentPair(left=("a",), right=("b",),
                        label=SegmentLabel.MALE, score=0.8, kind=ONE_TO_MANY)
        pair = SegmentPair(left=("a",), right=("b", "c"),
                           label=SegmentLabel.MALE, score=0.8, kind=ONE_TO_MANY)
        assert pair.kind == ONE_TO_MANY


class TestWindowCombine:
    def test_two_piece_window(self):
        # one 10 s anchor against 3.8 s + 5.3 s pieces; the single piece
        # fails the duration rule under a 2 s gate, the combined one passes
        table = one_hot_table()
        anchor = d1_seg(0, 0, 10000, "alfa bravo")
        pieces = [d2_seg(0, 200, 3800, "alfa"), d2_seg(1, 4500, 5300, "bravo")]
        cfg = PipelineConfig(max_dur_diff_s=2.0)
        pair = window_combine(anchor, pieces, scorer_matrix(table), cfg)
        assert pair is not None
        assert pair.kind == ONE_TO_MANY
        assert pair.left == ("D1-00000",) and pair.right == ("D2-00000", "D2-00001")
        assert pair.score > 0.5

    def test_no_similar_window_gives_none(self):
        table = one_hot_table()
        anchor = d1_seg(0, 0, 10000, "alfa")
        pieces = [d2_seg(0, 200, 3800, "bravo"), d2_seg(1, 4500, 5300, "delta")]
        cfg = PipelineConfig(max_dur_diff_s=2.0)
        assert window_combine(anchor, pieces, scorer_matrix(table), cfg) is None

    def test_single_candidate_degenerates_to_one_to_one(self):
        table = one_hot_table()
        anchor = d1_seg(0, 0, 5000, "alfa")
        pieces = [d2_seg(0, 300, 4500, "alfa")]
        pair = window_combine(anchor, pieces, scorer_matrix(table), PipelineConfig())
        assert pair is not None and pair.kind == ONE_TO_ONE

    def test_window_never_spans_consumed_segment(self):
        table = one_hot_table()
        anchor = d1_seg(0, 0, 10000, "alfa bravo")
        pieces = [d2_seg(0, 200, 3800, "alfa"),
                  d2_seg(1, 4500, 3000, "golf"),
                  d2_seg(2, 8000, 1500, "bravo")]
        cfg = PipelineConfig(max_dur_diff_s=2.0)
        pair = window_combine(anchor, pieces, scorer_matrix(table), cfg,
                              available={"D2-00000", "D2-00002"})
        assert pair is None  # the gap at index 1 may not be bridged

    def test_label_mismatch_stops_growth(self):
        table = one_hot_table()
        anchor = d1_seg(0, 0, 10000, "alfa bravo")
        pieces = [d2_seg(0, 200, 3800, "alfa"),
                  d2_seg(1, 4500, 5300, "bravo", label=SegmentLabel.MUSIC)]
        cfg = PipelineConfig(max_dur_diff_s=2.0)
        assert window_combine(anchor, pieces, scorer_matrix(table), cfg) is None

    def test_member_cap_respected(self):
        table = one_hot_table()
        anchor = d1_seg(0, 0, 10000, "alfa bravo delta eko golf")
        pieces = [d2_seg(k, 200 + k * 2100, 2000, WORDS[k]) for k in range(5)]
        cfg = PipelineConfig(max_dur_diff_s=1.0, max_window_segments=4)
        # five pieces of 2 s would be needed to reach 10 s; the cap stops at 4
        assert window_combine(anchor, pieces, scorer_matrix(table), cfg) is None


def recheck_rules(outcome, d1, d2, cfg):
    """Post-hoc audit straight from the pair contents; returns violations."""
    by_id = {s.id: s for s in d1 + d2}
    bad = []
    for pair in outcome.pairs:
        left = [by_id[i] for i in pair.left]
        right = [by_id[i] for i in pair.right]
        dstart = abs(left[0].span.start_ms - right[0].span.start_ms)
        ddur = abs(sum(s.span.duration_ms for s in left)
                   - sum(s.span.duration_ms for s in right))
        labels = {s.label for s in left} | {s.label for s in right}
        if dstart > cfg.max_start_diff_ms or ddur > cfg.max_dur_diff_ms:
            bad.append((pair, "time"))
        if len(labels) != 1:
            bad.append((pair, "label"))
        if not pair.score > cfg.min_similarity:
            bad.append((pair, "similarity"))
    return bad


def random_instance(rng):
    """A pair of segment lists mixing aligned, split, merged and decoy units."""
    table_words = WORDS
    vectors = {w: rng.standard_normal(8) for w in table_words}
    table = EmbeddingTable(dim=8, vectors=vectors)
    labels = [SegmentLabel.MALE, SegmentLabel.FEMALE, SegmentLabel.MUSIC]

    d1, d2 = [], []
    t1 = t2 = int(rng.integers(0, 2000))
    while len(d1) < 12 and len(d2) < 12:
        unit = rng.choice(["single", "split", "merge", "noise1", "noise2"],
                          p=[0.4, 0.2, 0.2, 0.1, 0.1])
        label = labels[int(rng.integers(0, 3))]
        words = list(rng.choice(table_words, size=int(rng.integers(1, 4))))
        text = " ".join(words)
        jitter = int(rng.integers(-4000, 4000))
        if unit == "single":
            dur = int(rng.integers(1000, 9000))
            d1.append((t1, dur, text, label))
            ddur = dur + int(rng.integers(-3000, 3000))
            d2.append((max(0, t2 + jitter), max(500, ddur), text, label))
            t1 += dur + int(rng.integers(200, 3000))
            t2 = t1 + int(rng.integers(-1500, 1500))
        elif unit == "split":
            n = int(rng.integers(2, 4))
            parts = [list(rng.choice(table_words, size=1))[0] for _ in range(n)]
            whole = " ".join(parts)
            dur = int(rng.integers(8000, 14000))
            d1.append((t1, dur, whole, label))
            start = max(0, t1 + jitter // 2)
            for part in parts:
                pdur = max(600, dur // n + int(rng.integers(-700, 700)))
                d2.append((start, pdur, part, label))
                start += pdur + int(rng.integers(100, 900))
            t1 += dur + int(rng.integers(200, 3000))
            t2 = start + int(rng.integers(100, 1200))
        elif unit == "merge":
            n = int(rng.integers(2, 4))
            parts = [list(rng.choice(table_words, size=1))[0] for _ in range(n)]
            whole = " ".join(parts)
            dur = int(rng.integers(8000, 14000))
            d2.append((max(0, t2 + jitter // 2), dur, whole, label))
            start = t1
            for part in parts:
                pdur = max(600, dur // n + int(rng.integers(-700, 700)))
                d1.append((start, pdur, part, label))
                start += pdur + int(rng.integers(100, 900))
            t1 = start + int(rng.integers(100, 1200))
            t2 = max(t2 + dur, t1) + int(rng.integers(100, 1200))
        elif unit == "noise1":
            dur = int(rng.integers(1000, 6000))
            d1.append((t1, dur, text, label))
            t1 += dur + int(rng.integers(200, 2000))
        else:
            dur = int(rng.integers(1000, 6000))
            d2.append((t2, dur, text, label))
            t2 += dur + int(rng.integers(200, 2000))
        t1, t2 = max(t1, 0), max(t2, 0)

    def materialize(rows, maker):
        segs = []
        cursor = 0
        for i, (start, dur, text, label) in enumerate(sorted(rows)[:12]):
            start = max(start, cursor)  # keep the track invariant
            segs.append(maker(i, start, dur, text, label))
            cursor = start + dur
        return segs

    return (
        materialize(d1, lambda i, s, d, x, l: d1_seg(i, s, d, x, label=l)),
        materialize(d2, lambda i, s, d, x, l: d2_seg(i, s, d, x, label=l)),
        table,
    )


class TestRunMatching:
    def test_empty_inputs(self):
        table = one_hot_table()
        matrix = build_matrix([], [], table, PipelineConfig())
        outcome = run_matching([], [], matrix, PipelineConfig())
        assert outcome.pairs == () and outcome.pair_count == 0

    def test_planted_diagonal(self):
        table = one_hot_table()
        cfg = PipelineConfig()
        d1 = [d1_seg(i, i * 15000, 4000, WORDS[i]) for i in range(4)]
        d2 = [d2_seg(i, i * 15000 + 700, 4300, WORDS[i]) for i in range(4)]
        outcome = run_matching(d1, d2, build_matrix(d1, d2, table, cfg), cfg)
        assert outcome.pair_count == 4
        assert all(p.kind == ONE_TO_ONE for p in outcome.pairs)
        assert outcome.unmatched_left == () and outcome.unmatched_right == ()

    def test_one_to_many_recovery(self):
        table = one_hot_table()
        cfg = PipelineConfig()
        d1 = [d1_seg(0, 0, 12000, "alfa bravo")]
        d2 = [d2_seg(0, 500, 3200, "alfa"), d2_seg(1, 4200, 3400, "bravo")]
        outcome = run_matching(d1, d2, build_matrix(d1, d2, table, cfg), cfg)
        assert outcome.pair_count == 1
        pair = outcome.pairs[0]
        assert pair.kind == ONE_TO_MANY
        assert pair.right == ("D2-00000", "D2-00001")

    def test_many_to_one_recovery(self):
        table = one_hot_table()
        cfg = PipelineConfig()
        d1 = [d1_seg(0, 500, 3200, "alfa"), d1_seg(1, 4200, 3400, "bravo")]
        d2 = [d2_seg(0, 0, 12000, "alfa bravo")]
        outcome = run_matching(d1, d2, build_matrix(d1, d2, table, cfg), cfg)
        assert outcome.pair_count == 1
        pair = outcome.pairs[0]
        assert pair.kind == MANY_TO_ONE
        assert pair.left == ("D1-00000", "D1-00001")

    def test_best_candidate_wins_ties_deterministically(self):
        table = one_hot_table()
        cfg = PipelineConfig()
        d1 = [d1_seg(0, 10000, 4000, "alfa")]
        # equal scores: the closer start must win
        d2 = [d2_seg(0, 4000, 4000, "alfa"), d2_seg(1, 12000, 4000, "alfa")]
        outcome = run_matching(d1, d2, build_matrix(d1, d2, table, cfg), cfg)
        assert outcome.pairs[0].right == ("D2-00001",)

    def test_matches_brute_force_oracle(self):
        cfg = PipelineConfig()
        mismatches = 0
        for seed in range(25):
            rng = np.random.default_rng(1000 + seed)
            d1, d2, table = random_instance(rng)
            matrix = build_matrix(d1, d2, table, cfg)
            outcome = run_matching(d1, d2, matrix, cfg)
            got = [(p.left, p.right, p.kind, round(p.score, 9)) for p in outcome.pairs]
            expected = [(l, r, k, round(s, 9))
                        for l, r, k, s in reference_matching(d1, d2, make_scorer(table), cfg)]
            if got != expected:
                mismatches += 1
            assert recheck_rules(outcome, d1, d2, cfg) == []
            outcome.consumed_ids()
        assert mismatches == 0

    def test_monotone_in_time_gates_on_planted_instances(self):
        # unique planted texts, orthogonal decoys: loosening the time
        # gates can only let more planted pairs through
        table = one_hot_table()
        for seed in range(6):
            rng = np.random.default_rng(500 + seed)
            d1, d2 = [], []
            t = 1000
            for i in range(8):
                dur = int(rng.integers(2000, 6000))
                jit = int(rng.integers(-6000, 6000))
                d1.append(d1_seg(i, t, dur, WORDS[i]))
                d2.append(d2_seg(i, max(0, t + jit), dur + int(rng.integers(-2000, 2000)),
                                 WORDS[i]))

                t += dur + 14000
            counts = []
            for gate in [2.0, 4.0, 6.0, 9.0, 12.0]:
                cfg = PipelineConfig(max_start_diff_s=gate, max_dur_diff_s=gate)
                matrix = build_matrix(d1, d2, table, cfg)
                counts.append(run_matching(d1, d2, matrix, cfg).pair_count)
            assert counts == sorted(counts)

    def test_outcome_round_trip(self, tmp_path):
        table = one_hot_table()
        cfg = PipelineConfig()
        d1 = [d1_seg(0, 0, 12000, "alfa bravo"), d1_seg(1, 20000, 4000, "delta")]
        d2 = [d2_seg(0, 500, 3200, "alfa"), d2_seg(1, 4200, 3400, "bravo"),
              d2_seg(2, 20500, 4200, "delta"), d2_seg(3, 40000, 2000, "golf")]
        outcome = run_matching(d1, d2, build_matrix(d1, d2, table, cfg), cfg)
        path = tmp_path / "pairs.jsonl"
        save_outcome(outcome, d1, d2, cfg, path)
        back = load_outcome(path, d1, d2)
        assert back.pairs == outcome.pairs
        assert back.unmatched_right == ("D2-00003",)
        import json

        rows = [json.loads(line) for line in path.read_text().splitlines()]
        assert all(all(row["rules"].values()) for row in rows)
        assert rows[0]["left_spans"] == [[0, 12000]]
