"""Synthetic ontologies for training experiments.

Labels are built from globally unique tokens, so labels of one concept
share no tokens with each other or with any other concept's labels; any
keyword overlap between a query label and the rest of the corpus is
impossible by construction.
"""

from ontosearch.ontology import Concept, OntologyGraph


def synthetic_ontology(
    n_groups: int, children_per_group: int, labels_per_concept: int
) -> OntologyGraph:
    """``n_groups`` root concepts, each with ``children_per_group`` children;
    every child carries ``labels_per_concept`` two-token labels."""
    concepts = []
    for g in range(n_groups):
        pid = f"p{g:03d}"
        concepts.append(
            Concept(id=pid, labels=(f"pw{g}a pw{g}b",), parent_ids=frozenset())
        )
        for c in range(children_per_group):
            labels = tuple(
                f"w{g}x{c}x{j}a w{g}x{c}x{j}b" for j in range(labels_per_concept)
            )
            concepts.append(
                Concept(
                    id=f"c{g:03d}n{c:03d}",
                    labels=labels,
                    parent_ids=frozenset({pid}),
                )
            )
    return OntologyGraph(concepts)
