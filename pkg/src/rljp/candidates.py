"""Candidate-label prescreening: a character n-gram one-vs-rest linear
classifier trained by averaged perceptron, one model per subtask.

This stands in for the heavyweight neural prescreener; anything exposing
scores(fact, subtask) can replace it (the examination module only consumes
the protocol).
"""

from __future__ import annotations

import json
import logging
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .corpus import LabelSpace, LegalCase

logger = logging.getLogger(__name__)

SUBTASKS = ("article", "charge", "prison_term")


class CandidateProvider(Protocol):
    def scores(self, fact_text: str, subtask: str) -> dict[str, float]: ...


@dataclass(frozen=True)
class CandidateList:
    subtask: str
    entries: tuple[tuple[str, float], ...]  # (label, score), score non-increasing


class ProviderNotTrainedError(RuntimeError):
    pass


def _gold_label(case: LegalCase, subtask: str) -> str:
    if case.judgment is None:
        raise ValueError(f"case {case.case_id} has no judgment")
    return {
        "article": case.judgment.article_id,
        "charge": case.judgment.charge_id,
        "prison_term": case.judgment.prison_term_bucket,
    }[subtask]


class CharNgramPerceptron:
    """One-vs-rest averaged perceptron over hashed character 1..3-grams."""

    def __init__(
        self,
        labels: LabelSpace,
        *,
        ngram_sizes: tuple[int, ...] = (1, 2, 3),
        hash_dim: int = 32768,
        epochs: int = 5,
    ):
        self.labels = labels
        self.ngram_sizes = ngram_sizes
        self.hash_dim = hash_dim
        self.epochs = epochs
        self._weights: dict[str, np.ndarray] = {}
        self._label_lists = {
            "article": list(labels.articles),
            "charge": list(labels.charges),
            "prison_term": list(labels.prison_terms),
        }

    @property
    def trained(self) -> bool:
        return bool(self._weights)

    def _features(self, text: str) -> np.ndarray:
        x = np.zeros(self.hash_dim, dtype=np.float64)
        for n in self.ngram_sizes:
            for i in range(len(text) - n + 1):
                x[zlib.crc32(text[i : i + n].encode("utf-8")) % self.hash_dim] += 1.0
        norm = np.linalg.norm(x)
        return x / norm if norm else x

    def train(self, cases: Sequence[LegalCase]) -> None:
        if not cases:
            raise ValueError("no training cases")
        features = np.stack([self._features(case.fact_text) for case in cases])
        for subtask in SUBTASKS:
            label_list = self._label_lists[subtask]
            index = {label: i for i, label in enumerate(label_list)}
            y = np.array([index[_gold_label(case, subtask)] for case in cases])
            n_labels = len(label_list)
            w = np.zeros((n_labels, self.hash_dim))
            accum = np.zeros_like(w)
            for _ in range(self.epochs):
                for row in range(len(cases)):
                    x = features[row]
                    margins = w @ x
                    target = np.full(n_labels, -1.0)
                    target[y[row]] = 1.0
                    wrong = (margins * target) <= 0
                    if wrong.any():
                        w[wrong] += np.outer(target[wrong], x)
                    accum += w
            self._weights[subtask] = accum / (self.epochs * len(cases))
        logger.info("candidate provider trained on %d cases", len(cases))

    def scores(self, fact_text: str, subtask: str) -> dict[str, float]:
        if not self.trained:
            raise ProviderNotTrainedError("candidate provider has not been trained")
        x = self._features(fact_text)
        margins = self._weights[subtask] @ x
        return {
            label: float(margins[i])
            for i, label in enumerate(self._label_lists[subtask])
        }

    # -- persistence (weights as flat lists keeps the artifact diffable)

    def save(self, path: str | Path) -> None:
        payload = {
            "hash_dim": self.hash_dim,
            "ngram_sizes": list(self.ngram_sizes),
            "epochs": self.epochs,
            "labels": {
                "articles": list(self.labels.articles),
                "charges": list(self.labels.charges),
                "prison_terms": list(self.labels.prison_terms),
            },
            "weights": {
                subtask: w.tolist() for subtask, w in self._weights.items()
            },
        }
        Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CharNgramPerceptron":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        labels = LabelSpace(
            articles=tuple(payload["labels"]["articles"]),
            charges=tuple(payload["labels"]["charges"]),
            prison_terms=tuple(payload["labels"]["prison_terms"]),
        )
        provider = cls(
            labels,
            ngram_sizes=tuple(payload["ngram_sizes"]),
            hash_dim=payload["hash_dim"],
            epochs=payload["epochs"],
        )
        provider._weights = {
            subtask: np.asarray(rows, dtype=np.float64)
            for subtask, rows in payload["weights"].items()
        }
        return provider


def candidate_labels(
    fact_text: str,
    subtask: str,
    provider: CandidateProvider,
    k: int = 10,
) -> CandidateList:
    """Top-k labels by provider score; ties resolve by label-space order."""
    if subtask not in SUBTASKS:
        raise ValueError(f"unknown subtask {subtask!r}")
    scored = provider.scores(fact_text, subtask)
    order = {label: i for i, label in enumerate(scored)}
    ranked = sorted(scored.items(), key=lambda item: (-item[1], order[item[0]]))
    return CandidateList(subtask=subtask, entries=tuple(ranked[:k]))
