"""Shared fixtures and the acceptance-summary report hook."""

from __future__ import annotations

import pytest

from granurank.core import (
    EmbeddingMatrix,
    Marker,
    PassageRecord,
    PropositionMask,
    QueryEncoding,
    SentenceSpan,
)

from factories import TINY_PASSAGE_ROWS, TINY_QUERY_ROWS


@pytest.fixture
def tiny_passage() -> PassageRecord:
    """4 tokens on the unit circle, two 2-token sentences, one 1-token mask."""
    return PassageRecord(
        id="P",
        embeddings=EmbeddingMatrix(TINY_PASSAGE_ROWS),
        sentences=(SentenceSpan(0, 2), SentenceSpan(2, 4)),
        propositions=(PropositionMask(0, (1,)),),
    )


@pytest.fixture
def tiny_query_default() -> QueryEncoding:
    return QueryEncoding(id="Q", marker=Marker.PASSAGE, embeddings=EmbeddingMatrix(TINY_QUERY_ROWS))


@pytest.fixture
def tiny_query_sentence() -> QueryEncoding:
    return QueryEncoding(id="Q", marker=Marker.SENTENCE, embeddings=EmbeddingMatrix(TINY_QUERY_ROWS))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance guarantee at the end of every run."""
    outcomes: dict[str, str] = {}
    for status, reports in terminalreporter.stats.items():
        if status not in ("passed", "failed", "error"):
            continue
        for rep in reports:
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            if status == "passed" and getattr(rep, "when", "call") == "call":
                outcomes.setdefault(name, "PASS")
            elif status in ("failed", "error"):
                outcomes[name] = "FAIL"
    if outcomes:
        terminalreporter.write_sep("-", "acceptance summary")
        for name in sorted(outcomes):
            terminalreporter.write_line(f"{outcomes[name]}  {name}")
