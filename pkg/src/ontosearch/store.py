"""On-disk layout of a built index directory and the query dispatch both
the CLI and the HTTP service run through (which is what keeps their
outputs byte-identical).

A directory written by ``save_bundle`` holds:

    meta.json        what the bundle contains, plus fingerprints
    concepts.tsv / labels.tsv / relations.tsv    the ontology, round-tripped
    vector.npz + encoder.npz                     when a vector ranker was built
    bm25.json                                    when a BM25 ranker was built
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .embedder import Encoder, load_encoder, save_encoder
from .errors import UsageError
from .ontology import OntologyGraph, load_ontology, save_ontology
from .ranker import (
    Bm25Index,
    RankedHit,
    VectorIndex,
    bm25_search,
    bm25_search_concept,
    load_bm25_index,
    load_vector_index,
    save_bm25_index,
    save_vector_index,
    search_concept,
    search_text,
)

_META_VERSION = 1


@dataclass
class IndexBundle:
    graph: OntologyGraph
    vector: VectorIndex | None = None
    encoder: Encoder | None = None
    bm25: Bm25Index | None = None

    @property
    def rankers(self) -> list[str]:
        names = []
        if self.vector is not None:
            names.append("vector")
        if self.bm25 is not None:
            names.append("bm25")
        return names


def save_bundle(
    out_dir: str | Path,
    graph: OntologyGraph,
    vector: VectorIndex | None = None,
    encoder: Encoder | None = None,
    bm25: Bm25Index | None = None,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_ontology(
        graph, out / "concepts.tsv", out / "labels.tsv", out / "relations.tsv"
    )
    if vector is not None:
        if encoder is None:
            raise UsageError("a vector index needs its encoder saved alongside")
        save_vector_index(vector, out / "vector.npz")
        save_encoder(encoder, out / "encoder.npz")
    if bm25 is not None:
        save_bm25_index(bm25, out / "bm25.json")
    meta = {
        "version": _META_VERSION,
        "vector_fingerprint": vector.encoder_fingerprint if vector else None,
        "bm25_fingerprint": bm25.fingerprint() if bm25 else None,
        "encoder_kind": encoder.kind if encoder else None,
    }
    with open(out / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load_bundle(index_dir: str | Path) -> IndexBundle:
    root = Path(index_dir)
    if not (root / "meta.json").exists():
        raise UsageError(f"{root} is not an index directory (no meta.json)")
    graph = load_ontology(
        root / "concepts.tsv", root / "labels.tsv", root / "relations.tsv"
    )
    vector = encoder = bm25 = None
    if (root / "vector.npz").exists():
        vector = load_vector_index(root / "vector.npz")
        encoder = load_encoder(root / "encoder.npz")
        if vector.encoder_fingerprint != encoder.fingerprint():
            raise UsageError(
                f"{root}: encoder.npz does not match the encoder the vector "
                "index was built with (fingerprint mismatch)"
            )
    if (root / "bm25.json").exists():
        bm25 = load_bm25_index(root / "bm25.json")
    return IndexBundle(graph=graph, vector=vector, encoder=encoder, bm25=bm25)


def query_hits(
    bundle: IndexBundle, text: str, k: int, ranker: str = "vector"
) -> list[RankedHit]:
    """Text-to-concept search through the named ranker."""
    if ranker == "vector":
        if bundle.vector is None or bundle.encoder is None:
            raise UsageError("index has no vector ranker")
        return search_text(bundle.vector, text, k, bundle.encoder)
    if ranker == "bm25":
        if bundle.bm25 is None:
            raise UsageError("index has no bm25 ranker")
        return bm25_search(bundle.bm25, text, k)
    raise UsageError(f"unknown ranker {ranker!r} (expected vector or bm25)")


def match_hits(
    bundle: IndexBundle, labels: list[str], k: int, ranker: str = "vector"
) -> list[RankedHit]:
    """Concept-to-concept search (max over the query concept's labels)."""
    if ranker == "vector":
        if bundle.vector is None or bundle.encoder is None:
            raise UsageError("index has no vector ranker")
        return search_concept(bundle.vector, labels, k, bundle.encoder)
    if ranker == "bm25":
        if bundle.bm25 is None:
            raise UsageError("index has no bm25 ranker")
        return bm25_search_concept(bundle.bm25, labels, k)
    raise UsageError(f"unknown ranker {ranker!r} (expected vector or bm25)")
