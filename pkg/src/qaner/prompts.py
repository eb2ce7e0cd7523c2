"""Per-entity-type question rendering from templates.

A template carries an ``[E]`` slot for the (normalized) entity type and,
for MLM-generated prompts, a ``[MASK]`` slot filled by a pluggable mask
filler. One question is rendered per entity type, in dataset type order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Protocol

import httpx

from .corpus import normalize_entity_type
from .errors import MaskFillError, PromptError

ENTITY_SLOT = "[E]"
MASK_SLOT = "[MASK]"

#: The five question words the mask-fill whitelist option restricts to.
FIVE_WS = ("Who", "What", "When", "Where", "Why")

#: Builtin template configurations, keyed by a short name. "handcraft"
#: is a mapping kind and needs an explicit per-type question map.
BUILTIN_PATTERNS = {
    "mask_is_the": "[MASK] is the [E]?",
    "what_is_the": "What is the [E]?",
    "the": "The [E]?",
    "is_there_a": "Is there a [E]?",
}


class TemplateKind(str, Enum):
    FIXED = "fixed"
    MASKED = "masked"
    HANDCRAFTED_MAP = "handcrafted_map"


class MaskFiller(Protocol):
    """Boundary interface for MLM mask filling.

    ``fill`` returns candidate tokens ranked by non-increasing score in
    [0, 1]; an empty result is a failure.
    """

    def fill(self, text_with_mask: str) -> list[tuple[str, float]]: ...


@dataclass(frozen=True)
class PromptTemplate:
    """A question pattern with one [E] slot (and one [MASK] slot if masked)."""

    pattern: str
    kind: TemplateKind
    mapping: dict[str, str] | None = None

    def __post_init__(self) -> None:
        if self.kind is TemplateKind.HANDCRAFTED_MAP:
            if not self.mapping:
                raise PromptError("handcrafted_map template requires a type->question mapping")
            return
        if self.pattern.count(ENTITY_SLOT) != 1:
            raise PromptError(f"template must contain exactly one {ENTITY_SLOT}: {self.pattern!r}")
        n_masks = self.pattern.count(MASK_SLOT)
        if self.kind is TemplateKind.MASKED and n_masks != 1:
            raise PromptError(f"masked template must contain exactly one {MASK_SLOT}: {self.pattern!r}")
        if self.kind is TemplateKind.FIXED and n_masks != 0:
            raise PromptError(f"fixed template must not contain {MASK_SLOT}: {self.pattern!r}")


@dataclass(frozen=True)
class PromptSet:
    """Rendered (entity_type, question) pairs, one per type, in type order."""

    prompts: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        types = [etype for etype, _ in self.prompts]
        if len(set(types)) != len(types):
            raise PromptError("duplicate entity types in prompt set")
        for etype, question in self.prompts:
            if not question:
                raise PromptError(f"empty question for entity type {etype!r}")

    def question_for(self, entity_type: str) -> str:
        for etype, question in self.prompts:
            if etype == entity_type:
                return question
        raise PromptError(f"prompt set has no question for entity type {entity_type!r}")

    def entity_types(self) -> list[str]:
        return [etype for etype, _ in self.prompts]


def normalize_question(text: str) -> str:
    """Capitalize the first letter and keep exactly one terminal '?'."""
    text = text.strip()
    while text.endswith("?"):
        text = text[:-1].rstrip()
    if not text:
        raise PromptError("question is empty after normalization")
    return text[0].upper() + text[1:] + "?"


def mask_fill_select(
    candidates: list[tuple[str, float]],
    whitelist: list[str] | None = None,
) -> str:
    """Pick the mask-fill token: best purely-alphabetic candidate.

    With a whitelist (e.g. the five Ws) the best whitelisted candidate
    wins, falling back to the unrestricted rule when none match. Matching
    is case-insensitive; the candidate's own casing is returned.
    """
    if not candidates:
        raise MaskFillError("mask fill failed: no candidates")
    alphabetic = [(token, score) for token, score in candidates if token.isalpha()]
    if not alphabetic:
        raise MaskFillError("mask fill failed: no alphabetic candidate")
    if whitelist is not None:
        allowed = {w.lower() for w in whitelist}
        whitelisted = [(t, s) for t, s in alphabetic if t.lower() in allowed]
        if whitelisted:
            return max(whitelisted, key=lambda c: c[1])[0]
    return max(alphabetic, key=lambda c: c[1])[0]


def render_prompts(
    template: PromptTemplate,
    entity_types: list[str],
    filler: MaskFiller | None = None,
    *,
    whitelist: list[str] | None = None,
) -> PromptSet:
    """Render one question per entity type from the template.

    Masked templates require a filler: the [E] slot is filled first, the
    filler ranks tokens for the [MASK] slot, and mask_fill_select picks one.
    """
    prompts = []
    for raw_type in entity_types:
        normalized = normalize_entity_type(raw_type)
        if template.kind is TemplateKind.HANDCRAFTED_MAP:
            assert template.mapping is not None
            question = template.mapping.get(raw_type)
            if question is None:
                question = template.mapping.get(normalized)
            if question is None:
                raise PromptError(f"handcrafted map has no question for entity type {raw_type!r}")
        else:
            question = template.pattern.replace(ENTITY_SLOT, normalized)
            if template.kind is TemplateKind.MASKED:
                if filler is None:
                    raise PromptError("masked template requires a mask filler")
                try:
                    candidates = filler.fill(question)
                except MaskFillError:
                    raise
                except Exception as exc:
                    raise MaskFillError(f"mask fill failed: {exc}") from exc
                if not candidates:
                    raise MaskFillError("mask fill failed: empty candidate list")
                token = mask_fill_select(candidates, whitelist)
                question = question.replace(MASK_SLOT, token)
        prompts.append((raw_type, normalize_question(question)))
    return PromptSet(prompts=tuple(prompts))


@dataclass
class StaticMaskFiller:
    """Fixed candidate list, for offline runs and tests."""

    candidates: list[tuple[str, float]]

    def fill(self, text_with_mask: str) -> list[tuple[str, float]]:
        return list(self.candidates)


class HttpMaskFiller:
    """Mask filler backed by a fill endpoint.

    Protocol: POST {endpoint} with body {"text": str}; the response is
    {"candidates": [{"token": str, "score": float}, ...]}.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def fill(self, text_with_mask: str) -> list[tuple[str, float]]:
        try:
            response = self._client.post(self.endpoint, json={"text": text_with_mask})
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise MaskFillError(f"mask fill failed: {exc}") from exc
        payload = response.json()
        return [(c["token"], float(c["score"])) for c in payload.get("candidates", [])]


def prompt_set_to_json(prompt_set: PromptSet, template: PromptTemplate) -> str:
    """Serialize a prompt set (with its template provenance) to JSON."""
    pattern = "handcraft" if template.kind is TemplateKind.HANDCRAFTED_MAP else template.pattern
    doc = {
        "template": pattern,
        "kind": template.kind.value,
        "prompts": [
            {"entity_type": etype, "question": question}
            for etype, question in prompt_set.prompts
        ],
    }
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def prompt_set_from_json(text: str) -> PromptSet:
    try:
        doc = json.loads(text)
        prompts = tuple((p["entity_type"], p["question"]) for p in doc["prompts"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise PromptError(f"malformed prompt set file: {exc}") from exc
    return PromptSet(prompts=prompts)
