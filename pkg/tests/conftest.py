import io

import pytest

from kgrag.graph import KnowledgeGraph, Triple, load_triples


@pytest.fixture
def chain_graph() -> KnowledgeGraph:
    """A -r1-> B -r2-> C -r3-> D."""
    return load_triples(io.BytesIO(b"A\tr1\tB\nB\tr2\tC\nC\tr3\tD\n"))


@pytest.fixture
def diamond_graph() -> KnowledgeGraph:
    """A -> B -> D and A -> C -> D."""
    return KnowledgeGraph.from_triples(
        [
            Triple("A", "ab", "B"),
            Triple("B", "bd", "D"),
            Triple("A", "ac", "C"),
            Triple("C", "cd", "D"),
        ]
    )
