from pathlib import Path

import pytest

from ontosearch.ontology import load_ontology

DATA_DIR = Path(__file__).parent / "data"
ASTHENIA = DATA_DIR / "asthenia"


@pytest.fixture(scope="session")
def asthenia_paths():
    return (
        ASTHENIA / "concepts.tsv",
        ASTHENIA / "labels.tsv",
        ASTHENIA / "relations.tsv",
    )


@pytest.fixture(scope="session")
def asthenia_graph(asthenia_paths):
    """The worked hierarchy fragment: Fatigue and Exhaustion under a root
    finding, Asthenia and Feeling tired under Fatigue, with synonyms
    Lassitude (Asthenia) and Weariness (Fatigue)."""
    return load_ontology(*asthenia_paths)
