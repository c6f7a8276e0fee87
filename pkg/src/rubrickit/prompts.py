"""Frozen prompt templates: loading, slot substitution, content versions.

Templates live as package data and are substituted with plain string
replacement, never str.format — several templates contain literal JSON
braces.  Each template's version is the first 12 hex digits of its
content SHA-256; reports carry these so cached LLM responses can be
traced to the exact prompt wording that produced them.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache
from importlib import resources

from .errors import TemplateError

TEMPLATE_NAMES = (
    "generation_system",
    "generation_user",
    "exemplar_block",
    "similarity_judge",
    "criterion_grading",
    "scalar_scoring",
    "bad_response",
)


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    """Template text with the editor-added final newline removed."""
    if name not in TEMPLATE_NAMES:
        raise TemplateError(f"unknown template {name!r}")
    path = resources.files("rubrickit.templates").joinpath(f"{name}.txt")
    text = path.read_text(encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


@lru_cache(maxsize=None)
def template_version(name: str) -> str:
    content = load_template(name)
    return hashlib.sha256(content.encode("utf-8")).hexdigest()[:12]


def template_versions() -> dict[str, str]:
    return {name: template_version(name) for name in TEMPLATE_NAMES}


def render(template_text: str, slots: dict[str, str]) -> str:
    """Substitute {Slot} markers by literal replacement.

    Every provided slot must occur in the template; a missing marker is
    a wiring bug, not a soft condition, so it raises TemplateError.
    """
    out = template_text
    for slot, value in slots.items():
        marker = "{" + slot + "}"
        if marker not in out:
            raise TemplateError(f"template has no slot {marker}")
        out = out.replace(marker, value)
    return out


def render_template(name: str, slots: dict[str, str]) -> str:
    return render(load_template(name), slots)
