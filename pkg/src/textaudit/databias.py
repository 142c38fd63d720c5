"""Data-bias frequency tables over hateful / not-hateful / overall partitions.

Both approaches count comment presence (a comment counts once no matter how
often a term repeats), reported as percentages alongside the raw counts.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass

from .corpus import LabeledCorpus, tokenize
from .errors import EmptyPartitionError
from .lexicon import IdentityTermList
from .mining import AnnotatedCorpus, term_occurrences


@dataclass(frozen=True)
class FrequencyRow:
    """Prevalence of one key (term or attribute/subgroup) per label partition."""

    key: str
    hateful_pct: float
    nothateful_pct: float
    overall_pct: float
    hateful_n: int
    nothateful_n: int
    overall_n: int

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "hateful_pct": self.hateful_pct,
            "nothateful_pct": self.nothateful_pct,
            "overall_pct": self.overall_pct,
            "hateful_n": self.hateful_n,
            "nothateful_n": self.nothateful_n,
            "overall_n": self.overall_n,
        }


def _check_partitions(corpus: LabeledCorpus) -> tuple[int, int]:
    n_hateful = corpus.counts[1]
    n_nothateful = corpus.counts[0]
    if n_hateful == 0:
        raise EmptyPartitionError("hateful")
    if n_nothateful == 0:
        raise EmptyPartitionError("not-hateful")
    return n_hateful, n_nothateful


def _row(key: str, hateful_n: int, nothateful_n: int, n_h: int, n_nh: int) -> FrequencyRow:
    overall_n = hateful_n + nothateful_n
    return FrequencyRow(
        key=key,
        hateful_pct=100.0 * hateful_n / n_h,
        nothateful_pct=100.0 * nothateful_n / n_nh,
        overall_pct=100.0 * overall_n / (n_h + n_nh),
        hateful_n=hateful_n,
        nothateful_n=nothateful_n,
        overall_n=overall_n,
    )


def identity_term_frequencies(
    corpus: LabeledCorpus, terms: IdentityTermList
) -> list[FrequencyRow]:
    """Per identity term, the share of comments containing it, per partition.

    Containment is whole-token; rows follow the input term order.
    """
    n_h, n_nh = _check_partitions(corpus)
    abbreviations = frozenset(t for t in terms.terms if t.endswith("."))
    counts = {term: [0, 0] for term in terms.terms}  # [hateful, not-hateful]
    for comment in corpus:
        tokens = tokenize(comment.text, abbreviations)
        for term in terms.terms:
            if term_occurrences(tokens, term):
                counts[term][0 if comment.label == 1 else 1] += 1
    return [_row(term, counts[term][0], counts[term][1], n_h, n_nh) for term in terms.terms]


def subgroup_reference_frequencies(annotated: AnnotatedCorpus) -> list[FrequencyRow]:
    """Per (attribute, subgroup), the share of comments referencing it, per partition.

    Rows are ordered lexicographically by attribute then subgroup; keys are
    "attribute/subgroup". A comment referencing several subgroups counts
    toward each.
    """
    n_h, n_nh = _check_partitions(annotated.corpus)
    counts: dict[tuple[str, str], list[int]] = {}
    for comment in annotated.corpus:
        seen = {(r.attribute, r.subgroup) for r in annotated.refs(comment.id)}
        for key in seen:
            counts.setdefault(key, [0, 0])[0 if comment.label == 1 else 1] += 1
    return [
        _row(f"{attribute}/{subgroup}", counts[(attribute, subgroup)][0], counts[(attribute, subgroup)][1], n_h, n_nh)
        for attribute, subgroup in sorted(counts)
    ]


def frequency_table_csv(rows: list[FrequencyRow]) -> str:
    """CSV with columns Term, Hateful %, Not-hateful %, Overall %."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["Term", "Hateful %", "Not-hateful %", "Overall %"])
    for row in rows:
        writer.writerow(
            [row.key, f"{row.hateful_pct:.4f}", f"{row.nothateful_pct:.4f}", f"{row.overall_pct:.4f}"]
        )
    return out.getvalue()


def frequency_table_json(rows: list[FrequencyRow]) -> list[dict]:
    return [row.to_dict() for row in rows]
