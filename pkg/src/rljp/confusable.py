"""Confusable-case mining: embed facts, rank cross-label cosine similarity,
and collect each target's hardest negatives.

For a target label combination, the validation set pairs its positives with
the other-label cases whose facts sit closest in embedding space: per
positive, the single most similar other-label case is taken, the picks are
deduplicated keeping the highest similarity, and the top `num` survive.
"""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .corpus import LegalCase
from .fol import Consequent

logger = logging.getLogger(__name__)


class EmbeddingBackend(Protocol):
    name: str

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray: ...


@dataclass(frozen=True)
class EmbeddingMatrix:
    vectors: np.ndarray  # (m, d)
    case_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[1] == 0:
            raise ValueError("vectors must be a non-degenerate 2-D array")
        if self.vectors.shape[0] != len(self.case_ids):
            raise ValueError("row count must match case_ids")
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.any(norms == 0):
            bad = self.case_ids[int(np.argmin(norms))]
            raise ValueError(f"zero embedding vector for case {bad}")


@dataclass(frozen=True)
class SimilarityMatrix:
    values: np.ndarray  # (m, n), entries in [-1, 1]
    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.row_ids), len(self.col_ids)):
            raise ValueError("matrix shape must match id lists")
        if self.values.size and (
            self.values.max() > 1 + 1e-9 or self.values.min() < -1 - 1e-9
        ):
            raise ValueError("cosine values outside [-1, 1]")


@dataclass(frozen=True)
class ConfusableSet:
    target: Consequent
    positives: tuple[LegalCase, ...]
    negatives: tuple[LegalCase, ...]
    negative_similarity: dict[str, float]  # case_id -> mined similarity

    def validation_cases(self) -> list[LegalCase]:
        """V_target: positives followed by mined negatives."""
        return list(self.positives) + list(self.negatives)


class HashingEmbedder:
    """Deterministic offline embedder: character n-grams feature-hashed into a
    fixed dimension, L2-normalized.

    Buckets and signs come from crc32, so rows are stable across processes
    and platforms. Texts shorter than the smallest n-gram fall back to one
    whole-text feature, keeping every row nonzero.
    """

    name = "hashing-ngram"

    def __init__(self, dim: int = 256, ngram_sizes: tuple[int, ...] = (3,)):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.ngram_sizes = ngram_sizes

    def _grams(self, text: str):
        produced = False
        for n in self.ngram_sizes:
            for i in range(len(text) - n + 1):
                produced = True
                yield text[i : i + n]
        if not produced:
            yield text

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for gram in self._grams(text):
                h = zlib.crc32(gram.encode("utf-8"))
                sign = 1.0 if (h >> 31) & 1 == 0 else -1.0
                out[row, h % self.dim] += sign
            norm = np.linalg.norm(out[row])
            if norm == 0:
                # all-sign cancellation; pin a single deterministic bucket
                out[row, zlib.crc32(text.encode("utf-8")) % self.dim] = 1.0
                norm = 1.0
            out[row] /= norm
        return out


class HttpEmbedder:
    """OpenAI-compatible /embeddings endpoint client."""

    def __init__(self, base_url: str, model: str, *, session=None, timeout: float = 60.0):
        import os

        import requests

        from .agents import API_KEY_ENV

        self.base_url = base_url.rstrip("/")
        self.model = model
        self.timeout = timeout
        self.session = session or requests.Session()
        self.api_key = os.environ.get(API_KEY_ENV, "")
        self.name = f"http:{model}"

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        response = self.session.post(
            f"{self.base_url}/embeddings",
            json={"model": self.model, "input": list(texts)},
            headers={"Authorization": f"Bearer {self.api_key}"},
            timeout=self.timeout,
        )
        response.raise_for_status()
        rows = [item["embedding"] for item in response.json()["data"]]
        return np.asarray(rows, dtype=np.float64)


def embed_cases(
    cases: Sequence[LegalCase], provider: EmbeddingBackend
) -> EmbeddingMatrix:
    """Embed each case's fact text; row i corresponds to cases[i]."""
    if not cases:
        raise ValueError("no cases to embed")
    try:
        vectors = provider.embed_texts([case.fact_text for case in cases])
    except Exception as exc:
        raise RuntimeError(
            f"embedding failed (first case {cases[0].case_id}): {exc}"
        ) from exc
    return EmbeddingMatrix(
        vectors=np.asarray(vectors, dtype=np.float64),
        case_ids=tuple(case.case_id for case in cases),
    )


def cosine_similarity_matrix(
    targets: EmbeddingMatrix, others: EmbeddingMatrix
) -> SimilarityMatrix:
    """Pairwise cosine similarity between target rows and other rows."""
    if targets.vectors.shape[1] != others.vectors.shape[1]:
        raise ValueError(
            f"dimension mismatch: {targets.vectors.shape[1]} vs {others.vectors.shape[1]}"
        )
    t = targets.vectors / np.linalg.norm(targets.vectors, axis=1, keepdims=True)
    o = others.vectors / np.linalg.norm(others.vectors, axis=1, keepdims=True)
    values = np.clip(t @ o.T, -1.0, 1.0)
    return SimilarityMatrix(
        values=values, row_ids=targets.case_ids, col_ids=others.case_ids
    )


def select_hard_negatives(
    similarity: SimilarityMatrix,
    others: Sequence[LegalCase],
    num: int,
) -> tuple[list[LegalCase], dict[str, float]]:
    """Per positive row, take the most-similar other case; dedup keeping the
    highest similarity; keep the top `num` by (similarity desc, case_id asc)."""
    if num < 1:
        raise ValueError("num must be >= 1")
    by_id = {case.case_id: case for case in others}
    best: dict[str, float] = {}
    for row in similarity.values:
        col = int(np.argmax(row))  # ties: first column in input order
        case_id = similarity.col_ids[col]
        value = float(row[col])
        if case_id not in best or value > best[case_id]:
            best[case_id] = value
    ranked = sorted(best.items(), key=lambda item: (-item[1], item[0]))
    if len(ranked) < num:
        logger.warning(
            "requested %d negatives but only %d distinct top matches available",
            num,
            len(ranked),
        )
    chosen = ranked[:num]
    return [by_id[case_id] for case_id, _ in chosen], dict(chosen)


def build_confusable_set(
    positives: Sequence[LegalCase],
    others: Sequence[LegalCase],
    num: int,
    provider: EmbeddingBackend,
    *,
    target: Consequent,
) -> ConfusableSet:
    """Mine the hardest other-label cases for `positives` and assemble the
    confusable validation set."""
    if not positives:
        raise ValueError("positives must be non-empty")
    if not others:
        raise ValueError("others must be non-empty")
    emb_pos = embed_cases(positives, provider)
    emb_oth = embed_cases(others, provider)
    return build_confusable_set_from_embeddings(
        emb_pos, emb_oth, positives, others, num, target=target
    )


def build_confusable_set_from_embeddings(
    emb_positives: EmbeddingMatrix,
    emb_others: EmbeddingMatrix,
    positives: Sequence[LegalCase],
    others: Sequence[LegalCase],
    num: int,
    *,
    target: Consequent,
) -> ConfusableSet:
    """build_confusable_set for callers that already hold the embeddings."""
    similarity = cosine_similarity_matrix(emb_positives, emb_others)
    negatives, sims = select_hard_negatives(similarity, others, num)
    return ConfusableSet(
        target=target,
        positives=tuple(positives),
        negatives=tuple(negatives),
        negative_similarity=sims,
    )
