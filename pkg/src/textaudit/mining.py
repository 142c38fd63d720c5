"""Protected-attribute mining: find subgroup references in comments.

Two deterministic extractors feed every bias assessment: a look-up over the
attribute lexicon and a gazetteer matcher for nationality/religion/political
group mentions. Matching is whole-token only (multi-token terms match as
contiguous token runs); "gayety" never matches "gay".
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .corpus import Comment, LabeledCorpus, TokenSpan, tokenize
from .lexicon import AttributeLexicon, Gazetteer

METHOD_LOOKUP = "lookup"
METHOD_GAZETTEER = "gazetteer"


@dataclass(frozen=True)
class SubgroupRef:
    """One subgroup referenced by a comment, with the matching term spans."""

    attribute: str
    subgroup: str
    matched_terms: tuple[tuple[str, TokenSpan], ...]
    method: str


@dataclass(frozen=True)
class AnnotatedCorpus:
    """Corpus plus per-comment subgroup references (the join for all bias stats)."""

    corpus: LabeledCorpus
    annotations: dict[str, tuple[SubgroupRef, ...]]

    def refs(self, comment_id: str) -> tuple[SubgroupRef, ...]:
        return self.annotations.get(comment_id, ())

    def subgroups_referenced(self, comment_id: str, attribute: str) -> set[str]:
        return {r.subgroup for r in self.refs(comment_id) if r.attribute == attribute}

    def comments_referencing(self, attribute: str, subgroup: str) -> list[Comment]:
        return [
            c
            for c in self.corpus
            if any(
                r.attribute == attribute and r.subgroup == subgroup for r in self.refs(c.id)
            )
        ]


def term_occurrences(tokens: list[TokenSpan], term: str) -> list[TokenSpan]:
    """Whole-token occurrences of a (possibly multi-token) term.

    Multi-token terms match contiguous token sequences; the returned span
    covers the whole run.
    """
    parts = term.split()
    if not parts:
        return []
    hits: list[TokenSpan] = []
    if len(parts) == 1:
        for span in tokens:
            if span.token == term:
                hits.append(span)
        return hits
    for i in range(len(tokens) - len(parts) + 1):
        if all(tokens[i + j].token == parts[j] for j in range(len(parts))):
            hits.append(
                TokenSpan(token=" ".join(parts), start=tokens[i].start, end=tokens[i + len(parts) - 1].end)
            )
    return hits


def _mine(
    tokens: list[TokenSpan],
    targets: list[tuple[str, str, str]],
    method: str,
) -> list[SubgroupRef]:
    # targets: (attribute, subgroup, term) triples in deterministic order
    grouped: dict[tuple[str, str], dict[tuple[int, int], tuple[str, TokenSpan]]] = {}
    for attribute, subgroup, term in targets:
        for span in term_occurrences(tokens, term):
            key = (attribute, subgroup)
            grouped.setdefault(key, {}).setdefault((span.start, span.end), (term, span))
    refs: list[SubgroupRef] = []
    for (attribute, subgroup) in sorted(grouped):
        matches = [grouped[(attribute, subgroup)][k] for k in sorted(grouped[(attribute, subgroup)])]
        refs.append(
            SubgroupRef(
                attribute=attribute,
                subgroup=subgroup,
                matched_terms=tuple(matches),
                method=method,
            )
        )
    return refs


def mine_lookup(comment: Comment, lexicon: AttributeLexicon) -> list[SubgroupRef]:
    """Look-up extraction: one ref per (attribute, subgroup) with >= 1 term match."""
    tokens = tokenize(comment.text, lexicon.abbreviations())
    targets = [
        (attribute, subgroup, term)
        for attribute, subgroups in lexicon.attributes.items()
        for subgroup, terms in subgroups.items()
        for term in dict.fromkeys(terms)
    ]
    return _mine(tokens, targets, METHOD_LOOKUP)


def mine_gazetteer(comment: Comment, gaz: Gazetteer) -> list[SubgroupRef]:
    """Gazetteer extraction: whole-token matches against NORP-style entries."""
    abbreviations = frozenset(t for t in gaz.entries if t.endswith("."))
    tokens = tokenize(comment.text, abbreviations)
    targets = [
        (attribute, subgroup, term) for term, (attribute, subgroup) in gaz.entries.items()
    ]
    return _mine(tokens, targets, METHOD_GAZETTEER)


def annotate_corpus(
    corpus: LabeledCorpus, lexicon: AttributeLexicon, gaz: Gazetteer
) -> AnnotatedCorpus:
    """Union of look-up and gazetteer references per comment.

    Matches are deduplicated on (attribute, subgroup, span) with the look-up
    path taking precedence; output order is deterministic.
    """
    annotations: dict[str, tuple[SubgroupRef, ...]] = {}
    for comment in corpus:
        refs: list[SubgroupRef] = []
        claimed: set[tuple[str, str, int, int]] = set()
        for ref in mine_lookup(comment, lexicon):
            for term, span in ref.matched_terms:
                claimed.add((ref.attribute, ref.subgroup, span.start, span.end))
            refs.append(ref)
        for ref in mine_gazetteer(comment, gaz):
            fresh = tuple(
                (term, span)
                for term, span in ref.matched_terms
                if (ref.attribute, ref.subgroup, span.start, span.end) not in claimed
            )
            if fresh:
                refs.append(
                    SubgroupRef(
                        attribute=ref.attribute,
                        subgroup=ref.subgroup,
                        matched_terms=fresh,
                        method=ref.method,
                    )
                )
        if refs:
            refs.sort(key=lambda r: (r.attribute, r.subgroup, r.method != METHOD_LOOKUP))
            annotations[comment.id] = tuple(refs)
    return AnnotatedCorpus(corpus=corpus, annotations=annotations)


def annotations_to_jsonl(annotated: AnnotatedCorpus) -> str:
    """Serialize annotations as JSONL: {id, attribute, subgroup, terms, method}."""
    lines = []
    for comment in annotated.corpus:
        for ref in annotated.refs(comment.id):
            lines.append(
                json.dumps(
                    {
                        "id": comment.id,
                        "attribute": ref.attribute,
                        "subgroup": ref.subgroup,
                        "terms": [term for term, _ in ref.matched_terms],
                        "method": ref.method,
                    },
                    ensure_ascii=False,
                )
            )
    return "\n".join(lines) + ("\n" if lines else "")
