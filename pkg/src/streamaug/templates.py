"""Prompt templates loaded from plain-text files.

Each template is a .txt file whose body carries named ``{placeholder}``
fields. The bundled defaults ship as package data; a template directory
supplied by the user overrides them file-by-file.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .reviews import ReviewEvent

# Placeholders each template must provide / may use.
TEMPLATE_PLACEHOLDERS: dict[str, set[str]] = {
    "user_mid_extreme": {"reviews"},
    "user_long_tail": {"reviews", "local_reviews", "global_reviews"},
    "product": {"reviews"},
    "second_order_select": {"self_profile", "candidate_profiles"},
    "data_synth": {"user_profile", "product_profiles"},
    "judge": {"review", "user_reviews", "product_reviews"},
}

TEMPLATE_NAMES = tuple(TEMPLATE_PLACEHOLDERS)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str

    def placeholders(self) -> set[str]:
        return {
            field
            for _, field, _, _ in string.Formatter().parse(self.body)
            if field
        }

    def render(self, **values: str) -> str:
        return self.body.format(**values)


def _validate(template: PromptTemplate) -> PromptTemplate:
    required = TEMPLATE_PLACEHOLDERS[template.name]
    found = template.placeholders()
    missing = required - found
    if missing:
        raise ValueError(
            f"template {template.name!r} lacks placeholders {sorted(missing)}"
        )
    unknown = found - required
    if unknown:
        raise ValueError(
            f"template {template.name!r} has unsupported placeholders {sorted(unknown)}"
        )
    return template


def load_templates(directory: str | Path | None = None) -> dict[str, PromptTemplate]:
    """Load all templates, preferring files in ``directory`` over defaults."""
    templates: dict[str, PromptTemplate] = {}
    package_dir = resources.files(__package__) / "templates"
    for name in TEMPLATE_NAMES:
        body = None
        if directory is not None:
            candidate = Path(directory) / f"{name}.txt"
            if candidate.exists():
                body = candidate.read_text(encoding="utf-8")
        if body is None:
            body = (package_dir / f"{name}.txt").read_text(encoding="utf-8")
        templates[name] = _validate(PromptTemplate(name=name, body=body))
    return templates


def format_reviews(events: list[ReviewEvent]) -> str:
    """Render review events as a bulleted block for prompt insertion."""
    if not events:
        return "(none)"
    lines = []
    for e in events:
        text = e.text.strip() or "(no text)"
        lines.append(f"- [rating {e.rating}] {text}")
    return "\n".join(lines)


def format_profiles(profiles) -> str:
    """Render profiles as ``- <id>: <text>`` lines (one per profile)."""
    if not profiles:
        return "(none)"
    return "\n".join(f"- {p.entity_id}: {p.text}" for p in profiles)
