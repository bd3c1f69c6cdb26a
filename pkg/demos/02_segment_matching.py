"""
Pairing speech segments across two dubs
=======================================

Once both tracks are cleaned, segmented, transcribed, and the first
track translated into the second's language, segments are paired by
text similarity under timing and label gates. This script builds a
small hand-made instance and walks through the match.
"""

import numpy as np

from dubalign.matching import run_matching
from dubalign.model import PipelineConfig, SegmentLabel, SpeechSegment, TimeSpan
from dubalign.similarity import EmbeddingTable, build_matrix

# A toy bilingual vocabulary. Vectors are random but shared between the
# translated D1 text and the D2 transcript, so equal texts score 1.0.
rng = np.random.default_rng(5)
words = ["merhaba", "shukran", "tamam", "yok", "habibi"]
table = EmbeddingTable(dim=8, vectors={w: rng.standard_normal(8) for w in words})


def d1(i, start_s, dur_s, text, label=SegmentLabel.MALE):
    return SpeechSegment(id=f"D1-{i:05d}", track="D1",
                         span=TimeSpan(int(start_s * 1000), int((start_s + dur_s) * 1000)),
                         label=label, language="tr",
                         transcript=f"source text {i}", translation=text)


def d2(i, start_s, dur_s, text, label=SegmentLabel.MALE):
    return SpeechSegment(id=f"D2-{i:05d}", track="D2",
                         span=TimeSpan(int(start_s * 1000), int((start_s + dur_s) * 1000)),
                         label=label, language="ar", transcript=text)


# D1 has three utterances; D2 renders the second one as two much
# shorter segments (dubbing routinely re-times speech) and adds one
# segment with no counterpart at all. Each D2 half is 9+ seconds
# shorter than the 13 s original, so no single candidate survives the
# duration gate and only a combined window can claim it.
d1_segments = [
    d1(0, 10.0, 4.0, "merhaba habibi"),
    d1(1, 20.0, 13.0, "shukran tamam yok"),
    d1(2, 40.0, 3.0, "yok", label=SegmentLabel.FEMALE),
]
d2_segments = [
    d2(0, 11.0, 4.5, "merhaba habibi"),
    d2(1, 21.0, 4.0, "shukran tamam"),
    d2(2, 26.0, 3.5, "yok"),
    d2(3, 33.0, 2.0, "habibi"),  # a decoy: wrong time, wrong words
    d2(4, 41.0, 3.0, "yok", label=SegmentLabel.FEMALE),
]

cfg = PipelineConfig()
matrix = build_matrix(d1_segments, d2_segments, table, cfg)

# The matrix only scores temporally plausible pairs; the rest read 0.
print("candidate scores:")
for left in d1_segments:
    for right in d2_segments:
        score = matrix.get(left.id, right.id)
        if score:
            print(f"  {left.id} ~ {right.id}: {score:.3f}")

outcome = run_matching(d1_segments, d2_segments, matrix, cfg)
print(f"\n{outcome.pair_count} pairs, mean score {outcome.mean_score:.3f}")
for pair in outcome.pairs:
    print(f"  {pair.kind}: {list(pair.left)} <-> {list(pair.right)} "
          f"({pair.label.value}, {pair.score:.3f})")

# D1-00001 was matched one-to-many against the two D2 halves: the
# window combiner grows a window from each start until the joined text
# and summed duration pass the same rules a single candidate faces.
# The decoy stays unmatched on both timing and score.
print(f"\nunmatched D2 segments: {list(outcome.unmatched_right)}")
