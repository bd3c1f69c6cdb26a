"""Cross-lingual text similarity over translated/transcribed segments.

Texts are embedded as the arithmetic mean of word vectors from a
word2vec-style table (text format: `<count> <dim>` header, then
`<token> <floats...>` rows) and compared by cosine. A text none of whose
tokens are in the vocabulary has no embedding; that is a value
("no coverage"), not an error, and scores as 0 with a flag.

The pairwise score matrix is sparse: an entry is computed only when the
two segments start close enough that some matching rule could accept the
pair (start gate plus the widest combining window). Pruning is purely an
optimization; on small instances the stored entries equal a dense
brute-force computation.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import PipelineConfig, SpeechSegment, ValidationError

log = logging.getLogger(__name__)

_WORD = re.compile(r"[^\W\d_]+", re.UNICODE)


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict  # token -> np.ndarray of shape (dim,)

    def __post_init__(self) -> None:
        if not self.vectors:
            raise ValidationError("embedding table has empty vocabulary")

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[token]


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read the word2vec text format; duplicate tokens warn, last one wins."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValidationError(f"{path}: empty embedding file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValidationError(f"{path}:1: header must be `<count> <dim>`")
    try:
        count, dim = int(head[0]), int(head[1])
    except ValueError:
        raise ValidationError(f"{path}:1: header must be `<count> <dim>`") from None
    if count <= 0 or dim <= 0:
        raise ValidationError(f"{path}:1: count and dim must be positive")
    vectors: dict = {}
    rows = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise ValidationError(
                f"{path}:{lineno}: expected {dim} floats after the token, "
                f"got {len(parts) - 1}"
            )
        token = parts[0]
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: unparsable vector") from None
        if token in vectors:
            log.warning("%s:%d: duplicate token %r, keeping the later row",
                        path, lineno, token)
        vectors[token] = vec
        rows += 1
    if rows != count:
        raise ValidationError(
            f"{path}: header promises {count} rows, file has {rows}"
        )
    return EmbeddingTable(dim=dim, vectors=vectors)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    lines = [f"{len(table.vectors)} {table.dim}"]
    for token, vec in table.vectors.items():
        lines.append(token + " " + " ".join(repr(float(x)) for x in vec))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def tokenize(text: str) -> list[str]:
    """Lowercased Unicode-letter runs; digits and punctuation separate tokens."""
    return _WORD.findall(text.lower())


def sentence_vector(text: str, table: EmbeddingTable) -> np.ndarray | None:
    """Mean vector of in-vocabulary tokens; None when nothing is covered."""
    hits = [table[token] for token in tokenize(text) if token in table]
    if not hits:
        return None
    return np.mean(hits, axis=0)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValidationError(f"cosine needs equal-length vectors, got {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValidationError("cosine of a zero vector is undefined")
    # rounding can overshoot the mathematical range by an ulp
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def make_scorer(table: EmbeddingTable):
    """Text-pair scorer: max(0, cosine of sentence vectors), None = no coverage."""

    def score(text_a: str, text_b: str) -> float | None:
        va = sentence_vector(text_a, table)
        vb = sentence_vector(text_b, table)
        if va is None or vb is None:
            return None
        return max(0.0, cosine(va, vb))

    return score


@dataclass(frozen=True)
class SimilarityMatrix:
    """Sparse D1 x D2 score matrix; absent entries were never computed."""

    row_ids: tuple
    col_ids: tuple
    entries: dict  # (row_id, col_id) -> float in [0, 1]
    no_coverage: frozenset = frozenset()  # entries stored as 0 for lack of vocabulary
    scorer: object = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        rows, cols = set(self.row_ids), set(self.col_ids)
        for (i, j), score in self.entries.items():
            if i not in rows or j not in cols:
                raise ValidationError(f"matrix entry ({i}, {j}) outside the id sets")
            if not 0.0 <= score <= 1.0:
                raise ValidationError(f"matrix score out of range at ({i}, {j}): {score}")

    def get(self, row_id: str, col_id: str) -> float | None:
        return self.entries.get((row_id, col_id))

    def score_texts(self, text_a: str, text_b: str) -> float | None:
        if self.scorer is None:
            raise ValidationError(
                "matrix was loaded without an embedding table; "
                "window rescoring unavailable"
            )
        return self.scorer(text_a, text_b)


def save_matrix(matrix: SimilarityMatrix, path: str | Path) -> None:
    """Audit dump: `row_id\\tcol_id\\tscore` per computed entry, sorted."""
    lines = [
        f"{i}\t{j}\t{matrix.entries[(i, j)]!r}"
        for i, j in sorted(matrix.entries)
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_matrix(path: str | Path, row_ids: tuple, col_ids: tuple) -> SimilarityMatrix:
    """Read an audit dump back; coverage flags and the scorer are not restored."""
    path = Path(path)
    entries: dict = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValidationError(f"{path}:{lineno}: expected `row\\tcol\\tscore`")
        entries[(parts[0], parts[1])] = float(parts[2])
    return SimilarityMatrix(row_ids=row_ids, col_ids=col_ids, entries=entries)


def matching_text(segment: SpeechSegment) -> str:
    """The text a segment contributes to scoring: D1 side is compared through
    its translation, the other side through its transcript."""
    if segment.translation is not None:
        return segment.translation
    if isinstance(segment.transcript, str):
        return segment.transcript
    raise ValidationError(f"segment {segment.id} has no usable text")


def candidate_window_ms(left: SpeechSegment, right: SpeechSegment,
                        cfg: PipelineConfig) -> int:
    """Widest |start| gap any rule could accept for this pair, in ms.

    Rule 1 alone allows max_start_diff; a combining window lets later
    members start up to the window's duration budget (anchor duration +
    max_dur_diff) past the window head.
    """
    widest_anchor = max(left.span.duration_ms, right.span.duration_ms)
    return cfg.max_start_diff_ms + cfg.max_dur_diff_ms + widest_anchor


def build_matrix(
    d1_segments: list[SpeechSegment],
    d2_segments: list[SpeechSegment],
    table: EmbeddingTable,
    cfg: PipelineConfig,
    jobs: int = 1,
) -> SimilarityMatrix:
    """Score every temporally plausible (D1, D2) pair.

    Rows are a parallel map with a deterministic merge: output is
    identical for any ``jobs`` value.
    """
    for segment in d1_segments:
        if segment.translation is None:
            raise ValidationError(f"D1 segment {segment.id} lacks a translation")
    for segment in d2_segments:
        if not segment.has_transcript:
            raise ValidationError(f"D2 segment {segment.id} lacks a transcript")

    scorer = make_scorer(table)
    d1_vectors = {s.id: sentence_vector(matching_text(s), table) for s in d1_segments}
    d2_vectors = {s.id: sentence_vector(matching_text(s), table) for s in d2_segments}

    def score_row(left: SpeechSegment) -> tuple[dict, set]:
        entries: dict = {}
        missing: set = set()
        lv = d1_vectors[left.id]
        for right in d2_segments:
            limit = candidate_window_ms(left, right, cfg)
            if abs(left.span.start_ms - right.span.start_ms) > limit:
                continue
            rv = d2_vectors[right.id]
            if lv is None or rv is None:
                entries[(left.id, right.id)] = 0.0
                missing.add((left.id, right.id))
            else:
                entries[(left.id, right.id)] = max(0.0, cosine(lv, rv))
        return entries, missing

    entries: dict = {}
    no_coverage: set = set()
    if jobs <= 1 or len(d1_segments) <= 1:
        rows = [score_row(left) for left in d1_segments]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(score_row, d1_segments))
    for row_entries, row_missing in rows:
        entries.update(row_entries)
        no_coverage.update(row_missing)

    return SimilarityMatrix(
        row_ids=tuple(s.id for s in d1_segments),
        col_ids=tuple(s.id for s in d2_segments),
        entries=entries,
        no_coverage=frozenset(no_coverage),
        scorer=scorer,
    )
