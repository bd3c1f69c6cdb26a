"""
Scoring human review and inter-annotator agreement
==================================================

Exported pairs get spot-checked by people on a three-level scale:
1 (same meaning), 0.5 (related), 0 (unrelated). This script feeds a
hand-sized rating log through the aggregation and shows how kappa
reacts to different kinds of disagreement.
"""

from dubalign.rating import Rating, agreement_report, cohen_kappa

# Ten pairs, two annotators. They disagree on two items: pair p3
# (1 vs 0.5) and pair p9 (0 vs 1).
scores_a = [1, 1, 1, 1, 0, 0, 0.5, 0.5, 1, 0]
scores_b = [1, 1, 1, 0.5, 0, 0, 0.5, 0.5, 1, 1]

ratings = []
labels = {}
for i, (a, b) in enumerate(zip(scores_a, scores_b)):
    pid = f"p{i}"
    labels[pid] = "male" if i % 2 else "female"
    ratings.append(Rating(pid, "ana", float(a)))
    ratings.append(Rating(pid, "ben", float(b)))

# Raw agreement is 8/10, but some of that is luck: with only three
# score values, two annotators hitting the same one occasionally means
# nothing. Kappa discounts exactly that chance agreement.
kappa = cohen_kappa({f"p{i}": float(s) for i, s in enumerate(scores_a)},
                    {f"p{i}": float(s) for i, s in enumerate(scores_b)})
print(f"observed agreement 0.80, kappa {kappa:.4f}")

# Perfect self-agreement is exactly 1, never 0.99999...; the computation
# is arranged over integer counts so no rounding sneaks in.
same = {f"p{i}": float(s) for i, s in enumerate(scores_a)}
print(f"self-agreement kappa: {cohen_kappa(same, same)}")

# The full report folds disagreements conservatively (the lower score
# wins) and treats 0.5 as usable when computing accuracy.
report = agreement_report(ratings, labels)
print(f"\nconsensus distribution: {dict(sorted(report.score_counts.items()))}")
print(f"accuracy (1 and 0.5 count as usable): {report.accuracy:.3f}")
print(f"per annotator: { {k: round(v, 3) for k, v in report.annotator_accuracy.items()} }")
for pair, value in report.kappa.items():
    print(f"kappa[{pair[0]}, {pair[1]}] = {value:.4f}")
