"""Shared fixtures: tiny corpora, a seeded synthetic corpus generator,
and a threaded stub scoring server for HTTP-mode integration tests."""

from __future__ import annotations

import random
import socket
import threading
import time

import pytest

from qaner.corpus import NerDataset, make_dataset, make_sentence
from qaner.prompts import PromptSet

FILLER_WORDS = [
    "the", "a", "please", "find", "show", "me", "about", "from", "to", "near",
    "flights", "reviews", "news", "report", "today", "good", "cheap", "open",
]

TYPE_SURFACES = {
    "PER": [["john"], ["mary"], ["smith"], ["anna", "lee"], ["bob"]],
    "LOC": [["paris"], ["boston"], ["berlin"], ["new", "york"], ["tokyo"]],
    "ORG": [["acme"], ["nasa"], ["reuters"], ["red", "cross"], ["ibm"]],
    "MISC": [["olympics"], ["oscars"], ["brexit"], ["world", "cup"], ["easter"]],
}

CONLL_TYPES = ["PER", "LOC", "ORG", "MISC"]
MIT_MOVIE_TYPES = [
    "Actor", "Award", "Character_Name", "Director", "Genre", "Opinion",
    "Origin", "Plot", "Quote", "Relationship", "Soundtrack", "Year",
]
MIT_RESTAURANT_TYPES = [
    "Amenity", "Cuisine", "Dish", "Hours", "Location", "Price", "Rating",
    "Restaurant_Name",
]


def make_synthetic_corpus(
    n_sentences: int,
    seed: int = 7,
    entity_types: list[str] | None = None,
    max_mentions: int = 3,
    name: str = "synthetic",
) -> NerDataset:
    """Seeded corpus with 0, 1, and multi-mention sentences per type.

    Mentions are drawn from small per-type surface pools (duplicates
    within a sentence are possible on purpose).
    """
    entity_types = entity_types or CONLL_TYPES
    rng = random.Random(seed)
    sentences = []
    for i in range(n_sentences):
        tokens: list[str] = []
        labels: list[str] = []

        def add_filler(k: int) -> None:
            for _ in range(k):
                tokens.append(rng.choice(FILLER_WORDS))
                labels.append("O")

        add_filler(rng.randint(1, 3))
        mentions = []
        for etype in entity_types:
            weights = [5, 4, 2, 1][: max_mentions + 1]
            count = rng.choices(range(max_mentions + 1), weights=weights)[0]
            mentions.extend([etype] * count)
        rng.shuffle(mentions)
        for etype in mentions:
            surface = rng.choice(TYPE_SURFACES[etype])
            tokens.append(surface[0])
            labels.append(f"B-{etype}")
            for word in surface[1:]:
                tokens.append(word)
                labels.append(f"I-{etype}")
            add_filler(rng.randint(1, 2))
        sentences.append(make_sentence(f"s{i}", tokens, labels))
    return make_dataset(name, sentences, entity_types=entity_types)


@pytest.fixture
def tiny_dataset() -> NerDataset:
    """Three sentences: single mentions, a repeated LOC with duplicate
    surface, and an entity-free sentence."""
    sentences = [
        make_sentence("s0", ["john", "lives", "in", "paris"], ["B-PER", "O", "O", "B-LOC"]),
        make_sentence(
            "s1",
            ["arrive", "in", "paris", "from", "paris"],
            ["O", "O", "B-LOC", "O", "B-LOC"],
        ),
        make_sentence("s2", ["nothing", "happened", "today"], ["O", "O", "O"]),
    ]
    return make_dataset("tiny", sentences, entity_types=["PER", "LOC"])


@pytest.fixture
def tiny_prompts() -> PromptSet:
    return PromptSet(
        prompts=(("PER", "Who is the person?"), ("LOC", "Where is the location?"))
    )


@pytest.fixture
def synthetic_corpus() -> NerDataset:
    return make_synthetic_corpus(40, seed=11)


def make_stub_bridge_app(spec, decode_cfg):
    """A stand-in model service: /score answers from an oracle spec, /fill
    returns a fixed candidate ranking."""
    from fastapi import FastAPI

    from qaner.scoring import ScoringRequest, oracle_score, record_to_dict

    app = FastAPI()

    @app.post("/score")
    def score(body: dict):
        records = []
        for item in body["requests"]:
            request = ScoringRequest(**item)
            records.append(record_to_dict(oracle_score(request, spec, decode_cfg)))
        return {"records": records}

    @app.post("/fill")
    def fill(body: dict):
        assert "[MASK]" in body["text"]
        return {
            "candidates": [
                {"token": "Where", "score": 0.8},
                {"token": "What", "score": 0.7},
                {"token": ",", "score": 0.1},
            ]
        }

    return app


class StubServer:
    """uvicorn in a daemon thread, bound to a free localhost port."""

    def __init__(self, app):
        import uvicorn

        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            self.port = probe.getsockname()[1]
        self.url = f"http://127.0.0.1:{self.port}"
        config = uvicorn.Config(app, host="127.0.0.1", port=self.port, log_level="error")
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def __enter__(self):
        self._thread.start()
        deadline = time.monotonic() + 10
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("stub server did not start")
            time.sleep(0.01)
        return self

    def __exit__(self, *exc):
        self._server.should_exit = True
        self._thread.join(timeout=10)
