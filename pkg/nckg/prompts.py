# -*- coding: utf-8 -*-
#
# Copyright (C) 2026 nckg-review contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
"""Prompt templates and parsers for model output.

Template bodies live in ``nckg/data/prompts/<version>/<id>.txt`` so the
wording can be revised without touching code. Slots are written ``{name}``.
"""

import enum
import functools
import json
import os
import re
from typing import Any, List, Mapping, Set, Union

from nckg import const
from nckg.exceptions import (
    MissingSlot,
    PromptError,
    TermCountMismatch,
    UnknownTemplate,
)

__all__ = [
    "PromptTemplate",
    "CLASS_DESCRIPTIONS",
    "load_template",
    "template_slots",
    "render",
    "parse_term_list",
    "parse_json_array",
    "format_elements",
]

slot_regex = re.compile(r"\{([a-z_]+)\}")


class PromptTemplate(enum.Enum):
    TERM_EXTRACT = "TERM_EXTRACT"
    NER = "NER"
    RELATION_LINK = "RELATION_LINK"
    REVIEW = "REVIEW"
    BASELINE_LLM_ONLY = "BASELINE_LLM_ONLY"
    BASELINE_VECTOR = "BASELINE_VECTOR"

    @property
    def filename(self) -> str:
        return self.value.lower() + ".txt"


CLASS_DESCRIPTIONS = {
    const.CONTRACT_ACTOR: (
        "a party or person that acts under the contract, such as the Employer,"
        " the Contractor or the Engineer"
    ),
    const.CONTRACT_OBJECT: (
        "a thing acted upon under the contract, such as a document, a payment,"
        " equipment, the works or the site"
    ),
    const.CONTRACT_PROPERTY: (
        "a state or quality that a contract object has, such as submitted,"
        " approved or not needed"
    ),
    const.CONTRACT_CONSTRAINT: (
        "a limit placed on an action, such as a time limit, an amount,"
        " a condition or a required result"
    ),
}


def _coerce(template: Union[PromptTemplate, str]) -> PromptTemplate:
    if isinstance(template, PromptTemplate):
        return template
    try:
        return PromptTemplate(str(template).upper())
    except ValueError:
        raise UnknownTemplate("Unknown prompt template: %s" % template) from None


@functools.lru_cache(maxsize=None)
def _read(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read().rstrip("\n")


def load_template(
    template: Union[PromptTemplate, str], prompts_dir: str = const.PROMPTS_DIR
) -> str:
    template = _coerce(template)
    path = os.path.join(prompts_dir, template.filename)
    if not os.path.exists(path):
        raise UnknownTemplate("No body for template %s in %s" % (template.value, prompts_dir))
    return _read(path)


def template_slots(
    template: Union[PromptTemplate, str], prompts_dir: str = const.PROMPTS_DIR
) -> Set[str]:
    return set(slot_regex.findall(load_template(template, prompts_dir)))


def render(
    template: Union[PromptTemplate, str],
    slots: Mapping[str, str],
    prompts_dir: str = const.PROMPTS_DIR,
) -> str:
    """Fill every ``{slot}`` in one pass; values are inserted verbatim."""
    body = load_template(template, prompts_dir)
    missing = sorted(set(slot_regex.findall(body)) - set(slots))
    if missing:
        raise MissingSlot(
            "Template %s is missing slot(s): %s"
            % (_coerce(template).value, ", ".join(missing))
        )
    return slot_regex.sub(lambda m: str(slots[m.group(1)]), body)


def parse_term_list(content: str) -> List[str]:
    """Exactly two comma-separated terms, trimmed of whitespace and quotes.

    Empty items count toward the total, except a leading or trailing one.
    """
    terms = [t.strip().strip("\"'`“”‘’").strip() for t in content.strip().split(",")]
    while terms and not terms[-1]:
        terms.pop()
    while terms and not terms[0]:
        terms.pop(0)
    if len(terms) != 2 or not all(terms):
        raise TermCountMismatch(
            "Expected two terms, got %d in %r" % (len(terms), content.strip())
        )
    return terms


def parse_json_array(content: str) -> List[Any]:
    """Decode the first JSON array in a model reply, ignoring code fences."""
    start, end = content.find("["), content.rfind("]")
    if start < 0 or end < start:
        raise PromptError("No JSON array in model output: %r" % content[:80])
    try:
        data = json.loads(content[start : end + 1])
    except ValueError as e:
        raise PromptError("Invalid JSON array in model output: %s" % e) from e
    if not isinstance(data, list):
        raise PromptError("Model output is not a JSON array")
    return data


def format_elements(elements: Mapping[str, str]) -> str:
    return "\n".join("%s: %s" % (k, v) for k, v in elements.items())

