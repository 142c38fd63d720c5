"""Word resources: subgroup term lists, swap pairs, gazetteer, counterfactual templates.

All resources are immutable after load and safe to share across threads.
File formats: lexicon is JSON ``{attribute: {subgroup: [terms]}}``, the
gazetteer is JSON ``{term: [attribute, subgroup]}``, templates are a JSON
list of ``{pattern, label}``, and word lists are one term per line with
``#`` comments. Built-in defaults ship with the package.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import LexiconError

IDENTITY_SLOT = "[Identity]"


def _read_resource(name: str) -> str:
    return resources.files("textaudit").joinpath(f"data/{name}").read_text(encoding="utf-8")


def _read_path(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise LexiconError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise LexiconError(f"{path} is not valid UTF-8: {exc}") from exc


@dataclass(frozen=True)
class AttributeLexicon:
    """Protected attribute -> subgroup -> ordered term list.

    Term lists keep their file order and duplicates: swap-pair alignment is
    positional. Every attribute must have at least two non-empty subgroups
    and terms are stored lowercase.
    """

    attributes: dict[str, dict[str, tuple[str, ...]]]

    def __post_init__(self):
        for attribute, subgroups in self.attributes.items():
            if len(subgroups) < 2:
                raise LexiconError(
                    f"attribute {attribute!r} needs at least 2 subgroups, has {len(subgroups)}"
                )
            for subgroup, terms in subgroups.items():
                if not terms:
                    raise LexiconError(f"subgroup {attribute}.{subgroup} has no terms")
                for term in terms:
                    if not term or term != term.lower():
                        raise LexiconError(
                            f"subgroup {attribute}.{subgroup}: invalid term {term!r}"
                        )

    def subgroups(self, attribute: str) -> list[str]:
        if attribute not in self.attributes:
            raise LexiconError(f"unknown attribute {attribute!r}")
        return list(self.attributes[attribute])

    def terms(self, attribute: str, subgroup: str) -> tuple[str, ...]:
        subgroups = self.attributes.get(attribute)
        if subgroups is None:
            raise LexiconError(f"unknown attribute {attribute!r}")
        if subgroup not in subgroups:
            raise LexiconError(f"unknown subgroup {attribute}.{subgroup}")
        return subgroups[subgroup]

    def abbreviations(self) -> frozenset[str]:
        """Terms ending in a period; fed to the tokenizer so they survive intact."""
        return frozenset(
            term
            for subgroups in self.attributes.values()
            for terms in subgroups.values()
            for term in terms
            if term.endswith(".")
        )

    def serialize(self) -> str:
        payload = {
            attribute: {subgroup: list(terms) for subgroup, terms in subgroups.items()}
            for attribute, subgroups in self.attributes.items()
        }
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def _lexicon_from_obj(obj) -> AttributeLexicon:
    if not isinstance(obj, dict):
        raise LexiconError("lexicon must be a JSON object {attribute: {subgroup: [terms]}}")
    attributes: dict[str, dict[str, tuple[str, ...]]] = {}
    for attribute, subgroups in obj.items():
        if not isinstance(subgroups, dict):
            raise LexiconError(f"attribute {attribute!r} must map to an object of subgroups")
        parsed: dict[str, tuple[str, ...]] = {}
        for subgroup, terms in subgroups.items():
            if not isinstance(terms, list) or not all(isinstance(t, str) for t in terms):
                raise LexiconError(f"subgroup {attribute}.{subgroup} must be a list of strings")
            parsed[subgroup] = tuple(t.strip().lower() for t in terms)
        attributes[attribute] = parsed
    return AttributeLexicon(attributes=attributes)


def load_lexicon(path: str | Path) -> AttributeLexicon:
    try:
        obj = json.loads(_read_path(path))
    except json.JSONDecodeError as exc:
        raise LexiconError(f"{path}: invalid JSON: {exc.msg}") from exc
    return _lexicon_from_obj(obj)


def default_lexicon() -> AttributeLexicon:
    return _lexicon_from_obj(json.loads(_read_resource("default_lexicon.json")))


@dataclass(frozen=True)
class SwapTable:
    """Bidirectional aligned term pairs for one attribute."""

    attribute: str
    pairs: tuple[tuple[str, str], ...]
    _partner: dict[str, str] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        mapping: dict[str, str] = {}
        for a, b in self.pairs:
            if a in mapping or (b in mapping and b != a):
                raise LexiconError(f"term appears in more than one swap pair: {a!r}/{b!r}")
            mapping[a] = b
            mapping[b] = a
        object.__setattr__(self, "_partner", mapping)

    def partner(self, term: str) -> str | None:
        return self._partner.get(term)

    def terms(self) -> frozenset[str]:
        return frozenset(self._partner)

    def abbreviations(self) -> frozenset[str]:
        return frozenset(t for t in self._partner if t.endswith("."))


def aligned_swap_pairs(
    lexicon: AttributeLexicon, attribute: str, sub_a: str, sub_b: str
) -> SwapTable:
    """Pair up two subgroups' term lists by position.

    Requires equally long lists. A term already claimed by an earlier pair
    collapses to that first pairing; the dropped pair is reported with a
    warning.
    """
    terms_a = lexicon.terms(attribute, sub_a)
    terms_b = lexicon.terms(attribute, sub_b)
    if len(terms_a) != len(terms_b):
        raise LexiconError(
            f"cannot align {attribute}.{sub_a} with {attribute}.{sub_b}: "
            f"list lengths differ ({len(terms_a)} vs {len(terms_b)})"
        )
    pairs: list[tuple[str, str]] = []
    used: set[str] = set()
    for a, b in zip(terms_a, terms_b):
        if a in used or b in used:
            warnings.warn(
                f"swap pair ({a!r}, {b!r}) dropped: term already paired", stacklevel=2
            )
            continue
        pairs.append((a, b))
        used.add(a)
        used.add(b)
    return SwapTable(attribute=attribute, pairs=tuple(pairs))


@dataclass(frozen=True)
class NeutralWordList:
    words: tuple[str, ...]

    def __post_init__(self):
        if not self.words:
            raise LexiconError("neutral word list is empty")
        for word in self.words:
            if not word or word != word.lower():
                raise LexiconError(f"invalid neutral word {word!r}")


@dataclass(frozen=True)
class IdentityTermList:
    terms: tuple[str, ...]

    def __post_init__(self):
        if not self.terms:
            raise LexiconError("identity term list is empty")
        if len(set(self.terms)) != len(self.terms):
            raise LexiconError("identity term list contains duplicates")
        for term in self.terms:
            if not term or term != term.lower():
                raise LexiconError(f"invalid identity term {term!r}")


def _parse_word_list(text: str) -> list[str]:
    words: list[str] = []
    for line in text.splitlines():
        word = line.split("#", 1)[0].strip().lower()
        if word:
            words.append(word)
    return words


def load_neutral_words(path: str | Path) -> NeutralWordList:
    return NeutralWordList(words=tuple(_parse_word_list(_read_path(path))))


def default_neutral_words() -> NeutralWordList:
    return NeutralWordList(words=tuple(_parse_word_list(_read_resource("default_neutral_words.txt"))))


def load_identity_terms(path: str | Path) -> IdentityTermList:
    seen: list[str] = []
    for word in _parse_word_list(_read_path(path)):
        if word not in seen:
            seen.append(word)
    return IdentityTermList(terms=tuple(seen))


def default_identity_terms() -> IdentityTermList:
    return IdentityTermList(terms=tuple(_parse_word_list(_read_resource("default_identity_terms.txt"))))


@dataclass(frozen=True)
class Gazetteer:
    """Deterministic term -> (attribute, subgroup) map standing in for NER.

    Covers nationality/religion/political group mentions; every entry is
    tagged NORP.
    """

    entries: dict[str, tuple[str, str]]
    tag: str = "NORP"

    def __post_init__(self):
        for term, target in self.entries.items():
            if not term or term != term.lower():
                raise LexiconError(f"invalid gazetteer term {term!r}")
            if len(target) != 2:
                raise LexiconError(f"gazetteer entry {term!r} must map to [attribute, subgroup]")


def _gazetteer_from_obj(obj) -> Gazetteer:
    if not isinstance(obj, dict):
        raise LexiconError("gazetteer must be a JSON object {term: [attribute, subgroup]}")
    entries: dict[str, tuple[str, str]] = {}
    for term, target in obj.items():
        if not isinstance(target, list) or len(target) != 2:
            raise LexiconError(f"gazetteer entry {term!r} must map to [attribute, subgroup]")
        entries[term.strip().lower()] = (str(target[0]), str(target[1]))
    return Gazetteer(entries=entries)


def load_gazetteer(path: str | Path) -> Gazetteer:
    try:
        obj = json.loads(_read_path(path))
    except json.JSONDecodeError as exc:
        raise LexiconError(f"{path}: invalid JSON: {exc.msg}") from exc
    return _gazetteer_from_obj(obj)


def default_gazetteer() -> Gazetteer:
    return _gazetteer_from_obj(json.loads(_read_resource("default_gazetteer.json")))


@dataclass(frozen=True)
class TemplateSet:
    """Counterfactual sentence templates, each with one identity slot and a label."""

    templates: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if not self.templates:
            raise LexiconError("template set is empty")
        for pattern, label in self.templates:
            if pattern.count(IDENTITY_SLOT) != 1:
                raise LexiconError(
                    f"template must contain {IDENTITY_SLOT} exactly once: {pattern!r}"
                )
            if label not in (0, 1):
                raise LexiconError(f"template label must be 0 or 1: {pattern!r}")


def _templates_from_obj(obj) -> TemplateSet:
    if not isinstance(obj, list):
        raise LexiconError("template file must be a JSON list of {pattern, label}")
    templates: list[tuple[str, int]] = []
    for item in obj:
        if not isinstance(item, dict) or "pattern" not in item or "label" not in item:
            raise LexiconError(f"template entry must have pattern and label: {item!r}")
        templates.append((str(item["pattern"]), int(item["label"])))
    return TemplateSet(templates=tuple(templates))


def load_templates(path: str | Path) -> TemplateSet:
    try:
        obj = json.loads(_read_path(path))
    except json.JSONDecodeError as exc:
        raise LexiconError(f"{path}: invalid JSON: {exc.msg}") from exc
    return _templates_from_obj(obj)


def default_templates() -> TemplateSet:
    return _templates_from_obj(json.loads(_read_resource("default_templates.json")))
