"""Coarse and fine-grained prompt templates and the fixed prompt vocabulary."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .forgery_types import ForgeryType
from .regions import REGION_NAMES

REAL_PROMPT = "this is a real person"
FAKE_PROMPT = "this is a fake person"
FINE_TEMPLATE = FAKE_PROMPT + ", the forgery region is {region}, the forgery type is {ftype}"

# listing order of the five types, also the vocabulary order
TYPE_ORDER = (
    ForgeryType.COLOR_DIFFERENCE,
    ForgeryType.BLUR,
    ForgeryType.STRUCTURE_ABNORMAL,
    ForgeryType.TEXTURE_ABNORMAL,
    ForgeryType.BLEND_BOUNDARY,
)

_FINE_RE = re.compile(
    r"^this is a fake person, the forgery region is (?P<region>[a-z ]+), the forgery type is (?P<ftype>[a-z ]+)$"
)


@dataclass(frozen=True)
class Prompt:
    text: str
    kind: str  # "coarse_real", "coarse_fake" or "fine"
    region: str | None = None
    ftype: ForgeryType | None = None


def coarse_prompt(label: str) -> Prompt:
    if label == "real":
        return Prompt(REAL_PROMPT, "coarse_real")
    if label == "fake":
        return Prompt(FAKE_PROMPT, "coarse_fake")
    raise ValueError(f"coarse label must be 'real' or 'fake', got {label!r}")


def fine_prompt(region: str, ftype: ForgeryType) -> Prompt:
    if region not in REGION_NAMES:
        raise ValueError(f"unknown region {region!r}")
    ftype = ForgeryType(ftype)
    return Prompt(FINE_TEMPLATE.format(region=region, ftype=ftype.phrase), "fine", region, ftype)


def parse_prompt(text: str) -> Prompt:
    """Inverse of :func:`coarse_prompt` and :func:`fine_prompt`."""
    if text == REAL_PROMPT:
        return coarse_prompt("real")
    if text == FAKE_PROMPT:
        return coarse_prompt("fake")
    m = _FINE_RE.match(text)
    if m is None or m["region"] not in REGION_NAMES:
        raise ValueError(f"not a prompt from the template: {text!r}")
    try:
        ftype = ForgeryType.from_phrase(m["ftype"])
    except ValueError:
        raise ValueError(f"unknown forgery type in prompt: {text!r}") from None
    return fine_prompt(m["region"], ftype)


def vocabulary() -> list[Prompt]:
    """2 coarse prompts, then 20 fine prompts (region-major)."""
    vocab = [coarse_prompt("real"), coarse_prompt("fake")]
    vocab += [fine_prompt(region, ftype) for region in REGION_NAMES for ftype in TYPE_ORDER]
    return vocab


COARSE_ROWS = slice(0, 2)
FINE_ROWS = slice(2, 22)
