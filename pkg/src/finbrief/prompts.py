"""Prompt templates: versioned text files with `{name}` placeholders.

Each template is a pair of files in the templates directory: `<name>.txt`
holds the body, `<name>.json` holds the descriptor (template_id,
stage_tag, exemplar list). Prompt wording is data, not code; rendering is
a pure substitution so equal inputs always hash equally.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingBinding
from .gateway import StageTag

DEFAULT_TEMPLATES_DIR = Path(__file__).resolve().parent / "templates"

# Stable marker in the corrective re-prompt, used by mock scripts to give
# a different answer on the retry than on the first attempt.
ACTIONS_RETRY_MARKER = "did not contain exactly three actions"

TEMPLATE_NAMES = (
    "initial_summary",
    "metadata_extraction",
    "enhanced_summary",
    "relevance",
    "ranking",
    "insights",
    "actions",
    "actions_retry",
)


@dataclass(frozen=True)
class Exemplar:
    input_excerpt: str
    output_summary: str


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    stage_tag: StageTag
    body: str
    exemplars: tuple[Exemplar, ...] = ()

    def __post_init__(self) -> None:
        if not self.template_id:
            raise ValueError("template_id must be non-empty")
        if not self.body:
            raise ValueError("template body must be non-empty")
        if self.exemplars and self.stage_tag is not StageTag.ENHANCED_SUMMARY:
            raise ValueError("only enhanced_summary templates carry exemplars")

    def placeholders(self) -> set[str]:
        return {
            name
            for _, name, _, _ in string.Formatter().parse(self.body)
            if name is not None
        }


def render_exemplar_block(exemplars: tuple[Exemplar, ...]) -> str:
    parts = []
    for i, exemplar in enumerate(exemplars, start=1):
        parts.append(
            f"Example {i}:\n"
            f"Article excerpt: {exemplar.input_excerpt}\n"
            f"Summary: {exemplar.output_summary}"
        )
    return "\n\n".join(parts)


def render_prompt(template: PromptTemplate, bindings: dict[str, str]) -> str:
    """Substitute every placeholder; unbound names are an error.

    The {exemplars} placeholder is bound automatically from the template's
    own exemplar list unless the caller overrides it.
    """
    merged = dict(bindings)
    if template.exemplars:
        merged.setdefault("exemplars", render_exemplar_block(template.exemplars))
    missing = sorted(template.placeholders() - merged.keys())
    if missing:
        raise MissingBinding(
            f"template {template.template_id!r} is missing bindings: {', '.join(missing)}"
        )
    return template.body.format_map(merged)


def load_template(name: str, directory: str | Path = DEFAULT_TEMPLATES_DIR) -> PromptTemplate:
    directory = Path(directory)
    body = (directory / f"{name}.txt").read_text(encoding="utf-8")
    descriptor = json.loads((directory / f"{name}.json").read_text(encoding="utf-8"))
    return PromptTemplate(
        template_id=descriptor["template_id"],
        stage_tag=StageTag(descriptor["stage_tag"]),
        body=body,
        exemplars=tuple(
            Exemplar(input_excerpt=e["input_excerpt"], output_summary=e["output_summary"])
            for e in descriptor.get("exemplars", [])
        ),
    )


def load_templates(directory: str | Path = DEFAULT_TEMPLATES_DIR) -> dict[str, PromptTemplate]:
    """Load the full template set, keyed by template name."""
    return {name: load_template(name, directory) for name in TEMPLATE_NAMES}
