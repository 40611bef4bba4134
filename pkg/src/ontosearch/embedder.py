"""Text encoders: every encoder maps a string to a fixed-dimension vector
by mean pooling, and the resulting vectors are ranked by cosine similarity.

Three implementations share the contract:

* ``SubwordEmbedder`` -- a trainable bag of hashed subword features
  (whole tokens plus character 3..5-grams, padded with ``<`` ``>``), the
  desk-scale trainable model of this package;
* ``StaticWordVectors`` -- mean of pre-trained per-token vectors, the
  word-vector-averaging baseline;
* ``PrecomputedEncoder`` -- exact full-string lookup, the adapter through
  which externally computed sentence vectors enter the system.
"""

from __future__ import annotations

import hashlib
import logging
import re
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    InconsistentDimension,
    MalformedLine,
    MissingEmbedding,
)
from .npzio import save_arrays
from .rng import SplitMix64, fnv1a64

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_ZERO_NORM_EPS = 1e-12


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric character.

    No stop-word removal happens here; callers that need it filter the
    returned tokens.
    """
    return _TOKEN_RE.findall(text.lower())


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """u.v / (|u||v|), defined as 0.0 when either norm is below 1e-12."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"vector shapes differ: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu < _ZERO_NORM_EPS or nv < _ZERO_NORM_EPS:
        return 0.0
    return float(min(1.0, max(-1.0, float(np.dot(u, v)) / (nu * nv))))


class SubwordEmbedder:
    """Hashed-subword bag encoder with a trainable embedding table.

    Features of a token are the padded whole token ``<token>`` plus every
    character n-gram of the padded form for n in [ngram_min, ngram_max],
    kept as a bag (duplicates count).  Each feature indexes the table via
    64-bit FNV-1a over its UTF-8 bytes, modulo ``bucket_count``.  A text
    embeds to the mean of its feature rows; no features gives the zero
    vector.  The table initialises uniformly in [-0.5/dim, 0.5/dim] from
    ``seed``.
    """

    kind = "subword"

    def __init__(
        self,
        bucket_count: int = 32768,
        dim: int = 64,
        ngram_min: int = 3,
        ngram_max: int = 5,
        seed: int = 0,
        table: np.ndarray | None = None,
    ):
        if bucket_count < 1:
            raise ValueError("bucket_count must be >= 1")
        if ngram_min < 1 or ngram_max < ngram_min:
            raise ValueError("require 1 <= ngram_min <= ngram_max")
        self.bucket_count = bucket_count
        self.dim = dim
        self.ngram_min = ngram_min
        self.ngram_max = ngram_max
        self.seed = seed
        if table is None:
            rng = SplitMix64(seed)
            scale = 0.5 / dim
            flat = np.fromiter(
                (rng.uniform(-scale, scale) for _ in range(bucket_count * dim)),
                dtype=np.float64,
                count=bucket_count * dim,
            )
            table = flat.reshape(bucket_count, dim)
        else:
            table = np.asarray(table, dtype=np.float64)
            if table.shape != (bucket_count, dim):
                raise DimensionMismatch(
                    f"table shape {table.shape} != ({bucket_count}, {dim})"
                )
            if not np.isfinite(table).all():
                raise ValueError("embedding table has non-finite entries")
        self.table = table
        self._feature_cache: dict[str, np.ndarray] = {}

    def features(self, text: str) -> np.ndarray:
        """Bucket ids of the feature bag of ``text`` (cached per string)."""
        cached = self._feature_cache.get(text)
        if cached is not None:
            return cached
        ids: list[int] = []
        for token in tokenize(text):
            padded = f"<{token}>"
            ids.append(fnv1a64(padded.encode("utf-8")) % self.bucket_count)
            for n in range(self.ngram_min, self.ngram_max + 1):
                for i in range(len(padded) - n + 1):
                    gram = padded[i:i + n]
                    ids.append(fnv1a64(gram.encode("utf-8")) % self.bucket_count)
        arr = np.asarray(ids, dtype=np.int64)
        self._feature_cache[text] = arr
        return arr

    def embed(self, text: str) -> np.ndarray:
        ids = self.features(text)
        if ids.size == 0:
            return np.zeros(self.dim, dtype=np.float64)
        return self.table[ids].mean(axis=0)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(
            f"subword:{self.bucket_count}:{self.dim}:"
            f"{self.ngram_min}:{self.ngram_max}:{self.seed}:".encode()
        )
        h.update(np.ascontiguousarray(self.table).tobytes())
        return h.hexdigest()


class StaticWordVectors:
    """Mean of known token vectors; unknown tokens are skipped and a text
    with no known tokens embeds to the zero vector."""

    kind = "wordvec"

    def __init__(self, vectors: dict[str, np.ndarray], dim: int, duplicates: int = 0):
        self.vectors = vectors
        self.dim = dim
        self.duplicates = duplicates  # duplicate tokens seen while loading

    def embed(self, text: str) -> np.ndarray:
        rows = [self.vectors[t] for t in tokenize(text) if t in self.vectors]
        if not rows:
            return np.zeros(self.dim, dtype=np.float64)
        return np.mean(rows, axis=0)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"wordvec:{self.dim}:{len(self.vectors)}:".encode())
        for token in sorted(self.vectors):
            h.update(token.encode("utf-8") + b"\x00")
            h.update(np.ascontiguousarray(self.vectors[token]).tobytes())
        return h.hexdigest()


class PrecomputedEncoder:
    """Exact-string lookup over externally computed vectors."""

    kind = "precomputed"

    def __init__(self, table: dict[str, np.ndarray], dim: int):
        self.table = table
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        try:
            return self.table[text]
        except KeyError:
            raise MissingEmbedding(
                f"no precomputed embedding for {text!r}"
            ) from None

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"precomputed:{self.dim}:{len(self.table)}:".encode())
        for text in sorted(self.table):
            h.update(text.encode("utf-8") + b"\x00")
            h.update(np.ascontiguousarray(self.table[text]).tobytes())
        return h.hexdigest()


Encoder = SubwordEmbedder | StaticWordVectors | PrecomputedEncoder


def embed_text(encoder: Encoder, text: str) -> np.ndarray:
    """Functional form of the shared encoder contract."""
    return encoder.embed(text)


# --- loading the two file-backed encoders -------------------------------------

def _parse_vector(fields: list[str], path: Path, lineno: int) -> np.ndarray:
    try:
        vec = np.asarray([float(x) for x in fields], dtype=np.float64)
    except ValueError:
        raise MalformedLine(
            f"{path}:{lineno}: non-numeric vector component",
            path=str(path), lineno=lineno,
        ) from None
    if not np.isfinite(vec).all():
        raise MalformedLine(
            f"{path}:{lineno}: non-finite vector component",
            path=str(path), lineno=lineno,
        )
    return vec


def load_word_vectors(path: str | Path) -> StaticWordVectors:
    """Read the word-vector text format: an optional ``N d`` header line,
    then ``token v1 .. vd`` space-separated rows.  Duplicate tokens keep the
    last occurrence and are counted as a warning."""
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    duplicates = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.rstrip("\n").split()
            if not fields:
                continue
            if lineno == 1 and len(fields) == 2:
                try:
                    int(fields[0]), int(fields[1])
                    continue  # header line
                except ValueError:
                    pass
            if len(fields) < 2:
                raise MalformedLine(
                    f"{path}:{lineno}: expected 'token v1 .. vd'",
                    path=str(path), lineno=lineno,
                )
            token, *rest = fields
            vec = _parse_vector(rest, path, lineno)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise InconsistentDimension(
                    f"{path}:{lineno}: dimension {vec.size} != {dim}"
                )
            if token in vectors:
                duplicates += 1
                logger.warning("duplicate token %r at %s:%d, last wins", token, path, lineno)
            vectors[token] = vec
    if dim is None:
        raise MalformedLine(f"{path}: no vector rows", path=str(path), lineno=0)
    return StaticWordVectors(vectors, dim, duplicates)


def load_precomputed(path: str | Path) -> PrecomputedEncoder:
    """Read the precomputed-embedding TSV: ``text <TAB> v1 v2 .. vd``."""
    path = Path(path)
    table: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise MalformedLine(
                    f"{path}:{lineno}: expected 'text<TAB>v1 v2 .. vd'",
                    path=str(path), lineno=lineno,
                )
            text, blob = parts
            vec = _parse_vector(blob.split(), path, lineno)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise InconsistentDimension(
                    f"{path}:{lineno}: dimension {vec.size} != {dim}"
                )
            table[text] = vec
    if dim is None:
        raise MalformedLine(f"{path}: no embedding rows", path=str(path), lineno=0)
    return PrecomputedEncoder(table, dim)


# --- encoder container (versioned, bitwise round trip) ------------------------

_CONTAINER_VERSION = 1


def save_encoder(encoder: Encoder, path: str | Path) -> None:
    """Persist any encoder to a single ``.npz`` container."""
    meta = dict(version=_CONTAINER_VERSION, kind=encoder.kind, dim=encoder.dim)
    if isinstance(encoder, SubwordEmbedder):
        save_arrays(
            path,
            **meta,
            bucket_count=encoder.bucket_count,
            ngram_min=encoder.ngram_min,
            ngram_max=encoder.ngram_max,
            seed=encoder.seed,
            table=encoder.table,
        )
    elif isinstance(encoder, StaticWordVectors):
        tokens = list(encoder.vectors)
        save_arrays(
            path,
            **meta,
            tokens=np.asarray(tokens, dtype=np.str_),
            matrix=np.stack([encoder.vectors[t] for t in tokens])
            if tokens else np.zeros((0, encoder.dim)),
            duplicates=encoder.duplicates,
        )
    elif isinstance(encoder, PrecomputedEncoder):
        texts = list(encoder.table)
        save_arrays(
            path,
            **meta,
            texts=np.asarray(texts, dtype=np.str_),
            matrix=np.stack([encoder.table[t] for t in texts])
            if texts else np.zeros((0, encoder.dim)),
        )
    else:  # pragma: no cover - union is closed
        raise TypeError(f"unknown encoder type {type(encoder)!r}")


def load_encoder(path: str | Path) -> Encoder:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != _CONTAINER_VERSION:
            raise MalformedLine(f"{path}: unsupported container version {version}")
        kind = str(data["kind"])
        dim = int(data["dim"])
        if kind == "subword":
            return SubwordEmbedder(
                bucket_count=int(data["bucket_count"]),
                dim=dim,
                ngram_min=int(data["ngram_min"]),
                ngram_max=int(data["ngram_max"]),
                seed=int(data["seed"]),
                table=data["table"],
            )
        if kind == "wordvec":
            tokens = [str(t) for t in data["tokens"]]
            matrix = data["matrix"]
            return StaticWordVectors(
                {t: matrix[i].copy() for i, t in enumerate(tokens)},
                dim,
                duplicates=int(data["duplicates"]),
            )
        if kind == "precomputed":
            texts = [str(t) for t in data["texts"]]
            matrix = data["matrix"]
            return PrecomputedEncoder(
                {t: matrix[i].copy() for i, t in enumerate(texts)}, dim
            )
    raise MalformedLine(f"{path}: unknown encoder kind {kind!r}")
