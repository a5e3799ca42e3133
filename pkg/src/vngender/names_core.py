"""Normalization and family / middle / given segmentation of Vietnamese full names.

Vietnamese names put the family name first and the given name last; everything
in between is the middle name. Segmentation here is strictly positional.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

from .errors import EmptyNameError


@dataclass(frozen=True)
class NameComponents:
    """A normalized full name split into its positional components."""

    family: str | None
    middle: tuple[str, ...]
    given: str

    def tokens(self) -> list[str]:
        out = [self.family] if self.family else []
        out.extend(self.middle)
        out.append(self.given)
        return out


@dataclass(frozen=True)
class ComponentMask:
    """Which name components feed the feature pipeline."""

    use_family: bool = True
    use_middle: bool = True
    use_given: bool = True

    def __post_init__(self):
        if not (self.use_family or self.use_middle or self.use_given):
            raise ValueError("component mask must keep at least one component")

    @property
    def label(self) -> str:
        if self.use_family and self.use_middle and self.use_given:
            return "full"
        parts = []
        if self.use_family:
            parts.append("fan")
        if self.use_middle:
            parts.append("mn")
        if self.use_given:
            parts.append("fin")
        return "+".join(parts)


MASKS: dict[str, ComponentMask] = {
    "fan": ComponentMask(True, False, False),
    "mn": ComponentMask(False, True, False),
    "fin": ComponentMask(False, False, True),
    "fan+mn": ComponentMask(True, True, False),
    "fan+fin": ComponentMask(True, False, True),
    "mn+fin": ComponentMask(False, True, True),
    "full": ComponentMask(True, True, True),
}

# All seven non-empty component subsets, in ablation-report order.
ALL_MASKS: tuple[ComponentMask, ...] = tuple(MASKS.values())


def parse_mask(label: str) -> ComponentMask:
    try:
        return MASKS[label.strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown component mask {label!r}; expected one of {', '.join(MASKS)}"
        ) from None


def normalize(raw: str) -> str:
    """Canonically compose, trim, collapse inner whitespace, and lowercase."""
    text = unicodedata.normalize("NFC", raw)
    text = " ".join(text.split())
    if not text:
        raise EmptyNameError("name is empty after trimming")
    return text.lower()


def segment(normalized: str) -> NameComponents:
    """Split a normalized name: first token family, last given, rest middle.

    Single-token names have only a given name; two-token names have no middle.
    """
    tokens = normalized.split()
    if not tokens:
        raise EmptyNameError("cannot segment an empty name")
    if len(tokens) == 1:
        return NameComponents(None, (), tokens[0])
    return NameComponents(tokens[0], tuple(tokens[1:-1]), tokens[-1])


def select_components(components: NameComponents, mask: ComponentMask) -> list[str]:
    """Tokens of the selected components, in original order.

    May be empty (e.g. a family-only mask on a single-token name); callers
    decide whether to skip or score such records.
    """
    out: list[str] = []
    if mask.use_family and components.family:
        out.append(components.family)
    if mask.use_middle:
        out.extend(components.middle)
    if mask.use_given:
        out.append(components.given)
    return out
