"""Independent reference implementations used as test oracles.

Everything here recomputes results definitionally (explicit windows,
exhaustive enumeration, direct formulas) and must stay decoupled from
the library's optimized code paths.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

C1 = (0.01 * 255.0) ** 2
C2 = (0.03 * 255.0) ** 2


def reference_ssim_loops(a, b, window: int = 7) -> float:
    """Mean SSIM via an explicit double loop over windows. Slow; small images only."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = window * window
    values = []
    for i in range(a.shape[0] - window + 1):
        for j in range(a.shape[1] - window + 1):
            wa = a[i : i + window, j : j + window]
            wb = b[i : i + window, j : j + window]
            mu_a = wa.mean()
            mu_b = wb.mean()
            var_a = wa.var(ddof=1)
            var_b = wb.var(ddof=1)
            cov = ((wa - mu_a) * (wb - mu_b)).sum() / (n - 1)
            values.append(
                ((2 * mu_a * mu_b + C1) * (2 * cov + C2))
                / ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2))
            )
    return float(np.mean(values))


def reference_ssim(a, b, window: int = 7) -> float:
    """Mean SSIM from materialized windows and centered definitional sums."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    wins_a = sliding_window_view(a, (window, window))
    wins_b = sliding_window_view(b, (window, window))
    n = window * window
    mu_a = wins_a.mean(axis=(-1, -2))
    mu_b = wins_b.mean(axis=(-1, -2))
    dev_a = wins_a - mu_a[..., None, None]
    dev_b = wins_b - mu_b[..., None, None]
    var_a = (dev_a * dev_a).sum(axis=(-1, -2)) / (n - 1)
    var_b = (dev_b * dev_b).sum(axis=(-1, -2)) / (n - 1)
    cov = (dev_a * dev_b).sum(axis=(-1, -2)) / (n - 1)
    ssim_map = ((2 * mu_a * mu_b + C1) * (2 * cov + C2)) / (
        (mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2)
    )
    return float(ssim_map.mean())


def reference_cosine(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def reference_kappa(a: list, b: list) -> float:
    """Cohen's kappa evaluated directly from the defining formula."""
    assert len(a) == len(b) and len(a) >= 2
    n = len(a)
    categories = sorted(set(a) | set(b))
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    p_e = sum(
        (a.count(c) / n) * (b.count(c) / n) for c in categories
    )
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


def reference_matching(d1, d2, score_fn, cfg):
    """Exhaustive re-derivation of the documented greedy pairing policy.

    Independent of the shipped matcher: singles and windows are enumerated
    brute-force from the segment lists alone. ``score_fn(text_a, text_b)``
    returns the clamped similarity or None for no vocabulary coverage.
    Returns a list of (left_ids, right_ids, kind, score) tuples.
    """
    max_start = int(round(cfg.max_start_diff_s * 1000))
    max_dur = int(round(cfg.max_dur_diff_s * 1000))

    def text(seg):
        return seg.translation if seg.translation is not None else seg.transcript

    def passes(anchor, members):
        """All four rules for anchor vs a window of consecutive members."""
        if any(m.label != anchor.label for m in members):
            return None
        total = sum(m.span.duration_ms for m in members)
        if total > anchor.span.duration_ms + max_dur:
            return None  # growth budget: window got too long to ever form
        if abs(anchor.span.start_ms - members[0].span.start_ms) > max_start:
            return None
        if abs(anchor.span.duration_ms - total) > max_dur:
            return None
        score = score_fn(text(anchor), " ".join(text(m) for m in members))
        if score is None or score <= cfg.min_similarity:
            return None
        return score

    def first_window(anchor, pool, used, start_positions):
        for p in start_positions:
            if pool[p].id in used:
                continue
            for n in range(1, cfg.max_window_segments + 1):
                members = pool[p : p + n]
                if len(members) < n or any(m.id in used for m in members):
                    break
                score = passes(anchor, members)
                if score is not None:
                    return members, score
        return None, None

    used1, used2 = set(), set()
    result = []
    for i, left in enumerate(d1):
        if left.id in used1:
            continue
        # best one-to-one by (score desc, |dstart| asc, right id asc)
        feasible = []
        for right in d2:
            if right.id in used2:
                continue
            score = passes(left, [right])
            if score is not None:
                feasible.append(
                    (-score, abs(left.span.start_ms - right.span.start_ms),
                     right.id, right, score)
                )
        if feasible:
            feasible.sort(key=lambda t: t[:3])
            _, _, _, right, score = feasible[0]
            used1.add(left.id)
            used2.add(right.id)
            result.append(((left.id,), (right.id,), "one-to-one", score))
            continue
        # one-to-many window on the second track
        members, score = first_window(left, d2, used2, range(len(d2)))
        if members is not None and len(members) > 1:
            used1.add(left.id)
            used2.update(m.id for m in members)
            result.append(
                ((left.id,), tuple(m.id for m in members), "one-to-many", score)
            )
            continue
        # many-to-one: anchors in track order, window pinned at this segment
        for right in d2:
            if right.id in used2:
                continue
            members, score = first_window(right, d1, used1, [i])
            if members is not None and len(members) > 1:
                used1.update(m.id for m in members)
                used2.add(right.id)
                result.append(
                    (tuple(m.id for m in members), (right.id,), "many-to-one", score)
                )
                break
    start_of = {s.id: s.span.start_ms for s in d1}
    result.sort(key=lambda r: start_of[r[0][0]])
    return result
