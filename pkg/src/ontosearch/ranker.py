"""Searchable indexes over concept labels.

Two rankers answer the same question -- which concepts best match this
text -- by different means:

* ``VectorIndex``: one unit-normalised embedding row per (concept, label),
  scored by cosine against the encoded query with an exact full scan;
* ``Bm25Index``: Okapi BM25 where each concept's document is the token bag
  of all its labels, stop-words removed at index and query time.

Both aggregate multiple labels of one concept by MAX and break score ties
by ascending concept id, so result order is deterministic everywhere.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedder import Encoder, tokenize
from .errors import (
    EmptyQueryConcept,
    MalformedLine,
    MalformedStopwordFile,
    UnknownConceptId,
)
from .npzio import save_arrays
from .ontology import OntologyGraph

_ZERO_NORM_EPS = 1e-12

# Default English stop-word list (30 words), used when no file is supplied.
DEFAULT_STOPWORDS = frozenset(
    """a an and are as at be by for from has he in is it its of on that the
    to was were will with this but they not or""".split()
)


@dataclass(frozen=True)
class RankedHit:
    concept_id: str
    best_label: str
    score: float
    rank: int

    def to_dict(self) -> dict:
        return {
            "concept_id": self.concept_id,
            "best_label": self.best_label,
            "score": self.score,
            "rank": self.rank,
        }


def hit_json_line(hit: RankedHit) -> str:
    """Canonical one-line JSON form of a hit; the CLI prints these and the
    service joins the same strings into arrays, keeping the two surfaces
    byte-identical."""
    return json.dumps(hit.to_dict(), ensure_ascii=False, separators=(",", ":"))


def _rank(scored: dict[str, tuple[float, str]], k: int) -> list[RankedHit]:
    """Top-k of {concept_id: (score, best_label)}; score desc, id asc."""
    ordered = sorted(scored.items(), key=lambda item: (-item[1][0], item[0]))
    return [
        RankedHit(concept_id=cid, best_label=label, score=score, rank=i)
        for i, (cid, (score, label)) in enumerate(ordered[:k], start=1)
    ]


# --- vector index --------------------------------------------------------------


class VectorIndex:
    """Exact cosine index: unit-normalised label vectors plus row metadata."""

    def __init__(
        self,
        dim: int,
        rows: np.ndarray,
        concept_ids: list[str],
        labels: list[str],
        encoder_fingerprint: str = "",
    ):
        rows = np.asarray(rows, dtype=np.float64).reshape(len(concept_ids), dim)
        if len(concept_ids) != len(labels):
            raise ValueError("row metadata lengths differ")
        self.dim = dim
        self.rows = rows
        self.concept_ids = list(concept_ids)
        self.labels = list(labels)
        self.encoder_fingerprint = encoder_fingerprint

    def __len__(self) -> int:
        return len(self.concept_ids)


def build_vector_index(graph: OntologyGraph, encoder: Encoder) -> VectorIndex:
    """One row per (concept, label) in sorted-concept, label-sequence order.

    Rows are normalised to unit length; an all-zero embedding is kept as the
    zero row (it cosine-scores 0 against everything).
    """
    concept_ids: list[str] = []
    labels: list[str] = []
    vectors: list[np.ndarray] = []
    for cid in graph.sorted_ids():
        for label in graph.concepts[cid].labels:
            vec = np.asarray(encoder.embed(label), dtype=np.float64)
            norm = float(np.linalg.norm(vec))
            if norm >= _ZERO_NORM_EPS:
                vec = vec / norm
            else:
                vec = np.zeros(encoder.dim, dtype=np.float64)
            concept_ids.append(cid)
            labels.append(label)
            vectors.append(vec)
    rows = (
        np.stack(vectors)
        if vectors
        else np.zeros((0, encoder.dim), dtype=np.float64)
    )
    return VectorIndex(
        dim=encoder.dim,
        rows=rows,
        concept_ids=concept_ids,
        labels=labels,
        encoder_fingerprint=encoder.fingerprint(),
    )


def _concept_best(index: VectorIndex, query_vec: np.ndarray) -> dict[str, tuple[float, str]]:
    """Cosine every row, then keep each concept's best-scoring label.

    On a within-concept tie the earliest row (label-sequence order) wins.
    """
    q = np.asarray(query_vec, dtype=np.float64)
    norm = float(np.linalg.norm(q))
    if norm < _ZERO_NORM_EPS or len(index) == 0:
        scores = np.zeros(len(index))
    else:
        scores = index.rows @ (q / norm)
        np.clip(scores, -1.0, 1.0, out=scores)
    best: dict[str, tuple[float, str]] = {}
    for i, cid in enumerate(index.concept_ids):
        score = float(scores[i])
        current = best.get(cid)
        if current is None or score > current[0]:
            best[cid] = (score, index.labels[i])
    return best


def search_text(
    index: VectorIndex, query: str, k: int, encoder: Encoder
) -> list[RankedHit]:
    """Exact top-k concepts for a text query; k is clamped to the corpus."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return _rank(_concept_best(index, encoder.embed(query)), k)


def search_concept(
    index: VectorIndex, query_labels: list[str], k: int, encoder: Encoder
) -> list[RankedHit]:
    """Concept-to-concept search: one text search per query label, with
    per-target-concept MAX aggregation across the labels."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not query_labels:
        raise EmptyQueryConcept("query concept has no labels")
    merged: dict[str, tuple[float, str]] = {}
    for query in query_labels:
        for cid, (score, label) in _concept_best(index, encoder.embed(query)).items():
            current = merged.get(cid)
            if current is None or score > current[0]:
                merged[cid] = (score, label)
    return _rank(merged, k)


# --- BM25 index -----------------------------------------------------------------


def load_stopwords(path: str | Path | None) -> frozenset[str]:
    """Stop-word file: one token per line, UTF-8; empty lines skipped.

    Entries are lowercased to match tokenizer output.  None loads the
    built-in default list.
    """
    if path is None:
        return DEFAULT_STOPWORDS
    words: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            word = line.strip()
            if not word:
                continue
            if any(ch.isspace() for ch in word):
                raise MalformedStopwordFile(
                    f"{path}:{lineno}: expected one token per line"
                )
            words.add(word.lower())
    return frozenset(words)


class Bm25Index:
    """Okapi BM25 over per-concept documents.

    IDF(t) = ln(1 + (N - df + 0.5) / (df + 0.5)); a term's contribution is
    IDF(t) * tf*(k1+1) / (tf + k1*(1 - b + b*|D|/avgdl)).
    """

    def __init__(
        self,
        concept_ids: list[str],
        term_freqs: list[dict[str, int]],
        preferred_labels: list[str],
        stopwords: frozenset[str],
        k1: float = 1.2,
        b: float = 0.75,
    ):
        self.concept_ids = list(concept_ids)
        self.term_freqs = term_freqs
        self.preferred_labels = list(preferred_labels)
        self.stopwords = stopwords
        self.k1 = k1
        self.b = b
        self.doc_lens = [sum(tf.values()) for tf in term_freqs]
        self.n_docs = len(concept_ids)
        self.avgdl = (
            sum(self.doc_lens) / self.n_docs if self.n_docs else 0.0
        )
        df: Counter[str] = Counter()
        for tf in term_freqs:
            df.update(tf.keys())
        self.df = dict(df)
        self._pos = {cid: i for i, cid in enumerate(self.concept_ids)}

    def idf(self, term: str) -> float:
        df = self.df.get(term, 0)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"bm25:{self.k1}:{self.b}:{self.n_docs}:".encode())
        for cid, tf in zip(self.concept_ids, self.term_freqs):
            h.update(cid.encode("utf-8") + b"\x00")
            for term in sorted(tf):
                h.update(f"{term}={tf[term]};".encode("utf-8"))
        h.update("|".join(sorted(self.stopwords)).encode("utf-8"))
        return h.hexdigest()


def build_bm25_index(
    graph: OntologyGraph,
    stopwords_path: str | Path | None = None,
    k1: float = 1.2,
    b: float = 0.75,
) -> Bm25Index:
    """Index every concept as the stop-word-filtered token bag of all its
    labels concatenated."""
    stopwords = load_stopwords(stopwords_path)
    concept_ids = graph.sorted_ids()
    term_freqs: list[dict[str, int]] = []
    preferred: list[str] = []
    for cid in concept_ids:
        concept = graph.concepts[cid]
        tokens = [
            t for label in concept.labels for t in tokenize(label)
            if t not in stopwords
        ]
        term_freqs.append(dict(Counter(tokens)))
        preferred.append(concept.preferred_label)
    return Bm25Index(concept_ids, term_freqs, preferred, stopwords, k1=k1, b=b)


def bm25_score(index: Bm25Index, query_tokens: list[str], concept_id: str) -> float:
    """Score one concept for a tokenised query (stop-words dropped here);
    a term occurring twice in the query contributes twice."""
    pos = index._pos.get(concept_id)
    if pos is None:
        raise UnknownConceptId(f"unknown concept id {concept_id!r}")
    tf = index.term_freqs[pos]
    dl = index.doc_lens[pos]
    norm = index.k1 * (1.0 - index.b + index.b * dl / index.avgdl) if index.avgdl else 0.0
    score = 0.0
    for term in query_tokens:
        if term in index.stopwords:
            continue
        f = tf.get(term, 0)
        if f == 0:
            continue
        score += index.idf(term) * f * (index.k1 + 1.0) / (f + norm)
    return score


def bm25_all_scores(index: Bm25Index, query: str) -> dict[str, float]:
    """Score every concept; only concepts with score > 0 appear."""
    tokens = [t for t in tokenize(query) if t not in index.stopwords]
    scores: dict[str, float] = {}
    if not tokens:
        return scores
    for cid in index.concept_ids:
        score = bm25_score(index, tokens, cid)
        if score > 0.0:
            scores[cid] = score
    return scores


def bm25_search(index: Bm25Index, query: str, k: int) -> list[RankedHit]:
    """Top-k concepts by BM25; zero-score concepts never appear."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scored = {
        cid: (score, index.preferred_labels[index._pos[cid]])
        for cid, score in bm25_all_scores(index, query).items()
    }
    return _rank(scored, k)


def bm25_search_concept(index: Bm25Index, query_labels: list[str], k: int) -> list[RankedHit]:
    """MAX aggregation over per-label BM25 scores, mirroring search_concept."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not query_labels:
        raise EmptyQueryConcept("query concept has no labels")
    merged: dict[str, float] = {}
    for query in query_labels:
        for cid, score in bm25_all_scores(index, query).items():
            if score > merged.get(cid, 0.0):
                merged[cid] = score
    scored = {
        cid: (score, index.preferred_labels[index._pos[cid]])
        for cid, score in merged.items()
    }
    return _rank(scored, k)


# --- persistence ---------------------------------------------------------------

_VECTOR_VERSION = 1
_BM25_VERSION = 1


def save_vector_index(index: VectorIndex, path: str | Path) -> None:
    save_arrays(
        path,
        version=_VECTOR_VERSION,
        dim=index.dim,
        rows=index.rows,
        concept_ids=np.asarray(index.concept_ids, dtype=np.str_),
        labels=np.asarray(index.labels, dtype=np.str_),
        fingerprint=index.encoder_fingerprint,
    )


def load_vector_index(path: str | Path) -> VectorIndex:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != _VECTOR_VERSION:
            raise MalformedLine(f"{path}: unsupported vector index version {version}")
        return VectorIndex(
            dim=int(data["dim"]),
            rows=data["rows"].copy(),
            concept_ids=[str(c) for c in data["concept_ids"]],
            labels=[str(lb) for lb in data["labels"]],
            encoder_fingerprint=str(data["fingerprint"]),
        )


def save_bm25_index(index: Bm25Index, path: str | Path) -> None:
    payload = {
        "version": _BM25_VERSION,
        "k1": index.k1,
        "b": index.b,
        "concept_ids": index.concept_ids,
        "term_freqs": index.term_freqs,
        "preferred_labels": index.preferred_labels,
        "df": {t: index.df[t] for t in sorted(index.df)},
        "avgdl": index.avgdl,
        "stopwords": sorted(index.stopwords),
        "stopword_hash": hashlib.sha256(
            "\n".join(sorted(index.stopwords)).encode("utf-8")
        ).hexdigest(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False)
        fh.write("\n")


def load_bm25_index(path: str | Path) -> Bm25Index:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = int(payload["version"])
    if version != _BM25_VERSION:
        raise MalformedLine(f"{path}: unsupported BM25 index version {version}")
    index = Bm25Index(
        concept_ids=payload["concept_ids"],
        term_freqs=[dict(tf) for tf in payload["term_freqs"]],
        preferred_labels=payload["preferred_labels"],
        stopwords=frozenset(payload["stopwords"]),
        k1=payload["k1"],
        b=payload["b"],
    )
    # df/avgdl are derivable from the documents; a mismatch means corruption
    if index.df != payload["df"] or index.avgdl != payload["avgdl"]:
        raise MalformedLine(f"{path}: stored df/avgdl disagree with documents")
    return index
