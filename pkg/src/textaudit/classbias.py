"""Classification-level assessments.

Covers the technical performance report, per-subgroup probability
statistics, swapped-identity favor analysis, counterfactual template
expansion with the threshold-insensitive counterfactual bias (CB) score,
and the seven classification fairness metrics. The classification
threshold defaults to 0.5 and is a parameter everywhere it matters; the CB
score needs no threshold at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import LabeledCorpus, tokenize
from .errors import AuditError, CoverageError, LexiconError
from .lexicon import IDENTITY_SLOT, AttributeLexicon, SwapTable, TemplateSet
from .mining import AnnotatedCorpus
from .modeliface import Adapter, PredictionCache, PredictionRecord, predict_batch

CLASS_NAMES = {0: "not-hateful", 1: "hateful"}


def predictions_by_id(preds: list[PredictionRecord]) -> dict[str, float]:
    return {record.comment_id: record.p_hateful for record in preds}


# ---------------------------------------------------------------------------
# Technical performance report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
        }


@dataclass(frozen=True)
class ClassReport:
    """Per-class precision/recall/F1/support plus macro and weighted averages."""

    per_class: dict[int, ClassMetrics]
    macro: ClassMetrics
    weighted: ClassMetrics
    accuracy: float
    threshold: float
    zero_division_flags: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "per_class": {CLASS_NAMES[c]: m.to_dict() for c, m in self.per_class.items()},
            "macro": self.macro.to_dict(),
            "weighted": self.weighted.to_dict(),
            "accuracy": self.accuracy,
            "threshold": self.threshold,
            "zero_division_flags": list(self.zero_division_flags),
        }

    def render_text(self) -> str:
        """Fixed-width table in the conventional classification-report layout."""
        rows = [
            ("Not-hateful", self.per_class[0]),
            ("Hateful", self.per_class[1]),
            ("Macro Avg.", self.macro),
            ("Weighted Avg.", self.weighted),
        ]
        lines = [f"{'':<14}{'Precision':>10}{'Recall':>8}{'F1-Score':>10}{'Support':>9}"]
        for name, m in rows:
            lines.append(
                f"{name:<14}{m.precision:>10.2f}{m.recall:>8.2f}{m.f1:>10.2f}{m.support:>9d}"
            )
        lines.append(f"Accuracy: {self.accuracy:.2f}  (threshold {self.threshold:.2f})")
        return "\n".join(lines)


def _safe_ratio(numerator: int, denominator: int, flag: str, flags: list[str]) -> float:
    if denominator == 0:
        flags.append(flag)
        return 0.0
    return numerator / denominator


def performance_report(
    corpus: LabeledCorpus, preds: list[PredictionRecord], threshold: float = 0.5
) -> ClassReport:
    """Confusion-matrix metrics with predicted class 1 iff p >= threshold.

    Macro averages are unweighted means over the two classes, weighted
    averages are support-weighted. Zero-denominator metrics come back as 0
    and are named in ``zero_division_flags``.
    """
    if not 0.0 < threshold < 1.0:
        raise AuditError(f"threshold must lie strictly between 0 and 1, got {threshold}")
    p_by_id = predictions_by_id(preds)
    missing = [c.id for c in corpus if c.id not in p_by_id]
    if missing:
        raise CoverageError(f"predictions missing for {len(missing)} comment(s): {missing}")

    confusion = {(actual, predicted): 0 for actual in (0, 1) for predicted in (0, 1)}
    for comment in corpus:
        predicted = 1 if p_by_id[comment.id] >= threshold else 0
        confusion[(comment.label, predicted)] += 1

    total = len(corpus)
    flags: list[str] = []
    per_class: dict[int, ClassMetrics] = {}
    for cls in (0, 1):
        tp = confusion[(cls, cls)]
        fp = confusion[(1 - cls, cls)]
        fn = confusion[(cls, 1 - cls)]
        support = tp + fn
        precision = _safe_ratio(tp, tp + fp, f"precision[{CLASS_NAMES[cls]}]", flags)
        recall = _safe_ratio(tp, support, f"recall[{CLASS_NAMES[cls]}]", flags)
        if precision + recall == 0.0:
            flags.append(f"f1[{CLASS_NAMES[cls]}]")
            f1 = 0.0
        else:
            f1 = 2 * precision * recall / (precision + recall)
        per_class[cls] = ClassMetrics(precision=precision, recall=recall, f1=f1, support=support)

    macro = ClassMetrics(
        precision=sum(m.precision for m in per_class.values()) / 2,
        recall=sum(m.recall for m in per_class.values()) / 2,
        f1=sum(m.f1 for m in per_class.values()) / 2,
        support=total,
    )
    weighted = ClassMetrics(
        precision=sum(m.precision * m.support for m in per_class.values()) / total,
        recall=sum(m.recall * m.support for m in per_class.values()) / total,
        f1=sum(m.f1 * m.support for m in per_class.values()) / total,
        support=total,
    )
    accuracy = (confusion[(0, 0)] + confusion[(1, 1)]) / total
    return ClassReport(
        per_class=per_class,
        macro=macro,
        weighted=weighted,
        accuracy=accuracy,
        threshold=threshold,
        zero_division_flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# Per-subgroup probability statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubgroupStatsRow:
    label: int
    subgroup: str
    mean_p: float | None  # None when no comment falls in the cell
    n: int

    def to_dict(self) -> dict:
        return {
            "actual": CLASS_NAMES[self.label],
            "subgroup": self.subgroup,
            "mean_p_hateful": self.mean_p,
            "n": self.n,
        }


@dataclass(frozen=True)
class SubgroupProbabilityStats:
    attribute: str
    rows: tuple[SubgroupStatsRow, ...]

    def to_dict(self) -> dict:
        return {"attribute": self.attribute, "rows": [r.to_dict() for r in self.rows]}


def subgroup_probability_stats(
    annotated: AnnotatedCorpus, preds: list[PredictionRecord], attribute: str
) -> SubgroupProbabilityStats:
    """Mean predicted probability per (actual label, referenced subgroup).

    Comments referencing several subgroups contribute to each. Empty cells
    carry a None mean, never 0.
    """
    p_by_id = predictions_by_id(preds)
    cells: dict[tuple[int, str], list[float]] = {}
    subgroups: set[str] = set()
    for comment in annotated.corpus:
        referenced = annotated.subgroups_referenced(comment.id, attribute)
        for subgroup in referenced:
            if comment.id not in p_by_id:
                raise CoverageError(f"prediction missing for annotated comment {comment.id!r}")
            subgroups.add(subgroup)
            cells.setdefault((comment.label, subgroup), []).append(p_by_id[comment.id])
    rows = []
    for subgroup in sorted(subgroups):
        for label in (0, 1):
            values = cells.get((label, subgroup), [])
            rows.append(
                SubgroupStatsRow(
                    label=label,
                    subgroup=subgroup,
                    mean_p=(sum(values) / len(values)) if values else None,
                    n=len(values),
                )
            )
    return SubgroupProbabilityStats(attribute=attribute, rows=tuple(rows))


# ---------------------------------------------------------------------------
# Identity swapping
# ---------------------------------------------------------------------------

def _mirror_casing(original: str, replacement: str) -> str:
    if original.isupper():
        return replacement.upper()
    if original[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


def swap_text(text: str, table: SwapTable) -> str:
    """Replace every whole-token paired term by its partner, all at once.

    The pass is simultaneous (a replacement is never re-swapped). Initial
    capitals and all-caps tokens keep their casing pattern; everything else
    is emitted lowercase.
    """
    data = text.encode("utf-8")
    pieces: list[bytes] = []
    cursor = 0
    for span in tokenize(text, table.abbreviations()):
        partner = table.partner(span.token)
        if partner is None or partner == span.token:
            continue
        original = data[span.start : span.end].decode("utf-8")
        pieces.append(data[cursor : span.start])
        pieces.append(_mirror_casing(original, partner).encode("utf-8"))
        cursor = span.end
    pieces.append(data[cursor:])
    return b"".join(pieces).decode("utf-8")


# ---------------------------------------------------------------------------
# Swapped-identity favor analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FavorReport:
    """Which identity the model favors when the pair is swapped in-place.

    For not-hateful comments the identity present in the lower-probability
    version is favored; for hateful comments, the higher. Probabilities are
    rounded to ``rounding_decimals`` before comparison, equal means
    no_change. ``by_label`` carries the same tallies split by actual label.
    """

    attribute: str
    sub_a: str
    sub_b: str
    fraction_favor_a: float
    fraction_favor_b: float
    fraction_no_change: float
    n_swapped: int
    rounding_decimals: int
    by_label: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "attribute": self.attribute,
            "sub_a": self.sub_a,
            "sub_b": self.sub_b,
            "fraction_favor_a": self.fraction_favor_a,
            "fraction_favor_b": self.fraction_favor_b,
            "fraction_no_change": self.fraction_no_change,
            "n_swapped": self.n_swapped,
            "rounding_decimals": self.rounding_decimals,
            "by_label": self.by_label,
        }


def swap_favor_analysis(
    annotated: AnnotatedCorpus,
    adapter: Adapter,
    table: SwapTable,
    attribute: str,
    sub_a: str,
    sub_b: str,
    rounding_decimals: int = 4,
    cache: PredictionCache | None = None,
) -> FavorReport:
    """Score original vs swapped text for every eligible comment.

    Eligible comments reference exactly one of the two subgroups; comments
    referencing both are excluded because a simultaneous bidirectional swap
    makes "favor" ill-defined.
    """
    eligible: list[tuple[str, int, str]] = []  # (comment id, label, referenced subgroup)
    for comment in annotated.corpus:
        referenced = annotated.subgroups_referenced(comment.id, attribute) & {sub_a, sub_b}
        if len(referenced) == 1:
            eligible.append((comment.id, comment.label, referenced.pop()))
    if not eligible:
        raise AuditError(
            f"no comment references exactly one of {sub_a!r}/{sub_b!r} for attribute {attribute!r}"
        )

    originals = [annotated.corpus.get(cid).text for cid, _, _ in eligible]
    swapped = [swap_text(text, table) for text in originals]
    p_orig = predict_batch(originals, adapter, cache)
    p_swap = predict_batch(swapped, adapter, cache)

    tallies = {sub_a: 0, sub_b: 0, "no_change": 0}
    by_label = {CLASS_NAMES[0]: {sub_a: 0, sub_b: 0, "no_change": 0},
                CLASS_NAMES[1]: {sub_a: 0, sub_b: 0, "no_change": 0}}
    for (cid, label, referenced), po, ps in zip(eligible, p_orig, p_swap):
        ro = round(po, rounding_decimals)
        rs = round(ps, rounding_decimals)
        other = sub_b if referenced == sub_a else sub_a
        if ro == rs:
            outcome = "no_change"
        elif label == 0:
            outcome = referenced if ro < rs else other
        else:
            outcome = referenced if ro > rs else other
        tallies[outcome] += 1
        by_label[CLASS_NAMES[label]][outcome] += 1

    n = len(eligible)
    return FavorReport(
        attribute=attribute,
        sub_a=sub_a,
        sub_b=sub_b,
        fraction_favor_a=tallies[sub_a] / n,
        fraction_favor_b=tallies[sub_b] / n,
        fraction_no_change=tallies["no_change"] / n,
        n_swapped=n,
        rounding_decimals=rounding_decimals,
        by_label=by_label,
    )


# ---------------------------------------------------------------------------
# Counterfactual templates and the CB metric
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CounterfactualRow:
    template_index: int
    group_index: int
    subgroup: str
    fill_term: str
    text: str
    label: int

    def to_dict(self) -> dict:
        return {
            "template_index": self.template_index,
            "group_index": self.group_index,
            "subgroup": self.subgroup,
            "fill_term": self.fill_term,
            "text": self.text,
            "label": self.label,
        }


@dataclass(frozen=True)
class CounterfactualCorpus:
    """Template realizations, grouped so each group spans all subgroups."""

    rows: tuple[CounterfactualRow, ...]
    n_groups: int

    def groups(self) -> list[list[CounterfactualRow]]:
        grouped: dict[int, list[CounterfactualRow]] = {}
        for row in self.rows:
            grouped.setdefault(row.group_index, []).append(row)
        return [grouped[g] for g in sorted(grouped)]


def expand_templates(
    templates: TemplateSet,
    lexicon: AttributeLexicon,
    attribute: str,
    identity_terms_per_subgroup: dict[str, list[str]],
) -> CounterfactualCorpus:
    """Realize every template for every subgroup fill.

    Fill lists are aligned positionally across subgroups and must have equal
    lengths; group i of a template holds the i-th fill of every subgroup, so
    texts within a group differ only in the identity slot.
    """
    if not identity_terms_per_subgroup:
        raise LexiconError("no identity fill terms supplied")
    known = set(lexicon.subgroups(attribute))
    subgroups = sorted(identity_terms_per_subgroup)
    for subgroup in subgroups:
        if subgroup not in known:
            raise LexiconError(f"unknown subgroup {attribute}.{subgroup}")
        if not identity_terms_per_subgroup[subgroup]:
            raise LexiconError(f"subgroup {subgroup!r} has no identity fill terms")
    lengths = {s: len(identity_terms_per_subgroup[s]) for s in subgroups}
    if len(set(lengths.values())) != 1:
        raise LexiconError(f"fill lists must have equal lengths, got {lengths}")
    n_fills = lengths[subgroups[0]]

    rows: list[CounterfactualRow] = []
    group_index = 0
    for template_index, (pattern, label) in enumerate(templates.templates):
        if pattern.count(IDENTITY_SLOT) != 1:
            raise LexiconError(f"template must contain {IDENTITY_SLOT} exactly once: {pattern!r}")
        for slot in range(n_fills):
            for subgroup in subgroups:
                term = identity_terms_per_subgroup[subgroup][slot]
                rows.append(
                    CounterfactualRow(
                        template_index=template_index,
                        group_index=group_index,
                        subgroup=subgroup,
                        fill_term=term,
                        text=pattern.replace(IDENTITY_SLOT, term),
                        label=label,
                    )
                )
            group_index += 1
    return CounterfactualCorpus(rows=tuple(rows), n_groups=group_index)


@dataclass(frozen=True)
class CBResult:
    """Counterfactual bias for one reference subgroup; positive favors it."""

    reference: str
    cb_total: float
    cb_mean: float
    n_examples: int

    def to_dict(self) -> dict:
        return {
            "reference": self.reference,
            "cb_total": self.cb_total,
            "cb_mean": self.cb_mean,
            "n_examples": self.n_examples,
        }


def counterfactual_bias(
    corpus: CounterfactualCorpus, probabilities: list[float], reference: str
) -> CBResult:
    """Sum over groups of (p_reference - mean p_counterfactual), sign-corrected.

    The signed gap is multiplied by +1 for hateful groups and -1 for
    not-hateful groups, so a positive total always means the model favors
    the reference subgroup. ``probabilities`` aligns with ``corpus.rows``.
    """
    if len(probabilities) != len(corpus.rows):
        raise AuditError(
            f"need one probability per row: {len(corpus.rows)} rows, {len(probabilities)} probabilities"
        )
    p_by_row = dict(zip(corpus.rows, probabilities))
    total = 0.0
    groups = corpus.groups()
    for group in groups:
        reference_rows = [row for row in group if row.subgroup == reference]
        if len(reference_rows) != 1:
            raise AuditError(
                f"group {group[0].group_index} needs exactly one {reference!r} realization, "
                f"found {len(reference_rows)}"
            )
        counterfactuals = [row for row in group if row.subgroup != reference]
        if not counterfactuals:
            raise AuditError(f"group {group[0].group_index} has no counterfactual realization")
        p_ref = p_by_row[reference_rows[0]]
        p_cf = sum(p_by_row[row] for row in counterfactuals) / len(counterfactuals)
        sign = 1.0 if group[0].label == 1 else -1.0
        total += (p_ref - p_cf) * sign
    return CBResult(
        reference=reference,
        cb_total=total,
        cb_mean=total / len(groups),
        n_examples=len(groups),
    )


def counterfactual_probability_stats(
    corpus: CounterfactualCorpus, probabilities: list[float]
) -> list[SubgroupStatsRow]:
    """Mean predicted probability per (label, subgroup) over the synthetic rows."""
    if len(probabilities) != len(corpus.rows):
        raise AuditError("need one probability per counterfactual row")
    cells: dict[tuple[int, str], list[float]] = {}
    for row, p in zip(corpus.rows, probabilities):
        cells.setdefault((row.label, row.subgroup), []).append(p)
    rows = []
    for subgroup in sorted({row.subgroup for row in corpus.rows}):
        for label in (0, 1):
            values = cells.get((label, subgroup), [])
            rows.append(
                SubgroupStatsRow(
                    label=label,
                    subgroup=subgroup,
                    mean_p=(sum(values) / len(values)) if values else None,
                    n=len(values),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Classification fairness metrics
# ---------------------------------------------------------------------------

FAIRNESS_METRIC_NAMES = (
    "equal_opportunity",
    "gini_equality",
    "normalized_treatment_equality",
    "overall_accuracy_equality",
    "positive_predictive_value",
    "positive_class_balance",
    "statistical_parity",
)


def gini_coefficient(values: list[float]) -> float:
    """Standard mean-absolute-difference Gini; 0 for constant or singleton lists."""
    n = len(values)
    if n <= 1:
        return 0.0
    total = sum(values)
    if total == 0.0:
        return 0.0
    ordered = sorted(values)
    weighted = sum((i + 1) * v for i, v in enumerate(ordered))
    return (2.0 * weighted) / (n * total) - (n + 1.0) / n


@dataclass(frozen=True)
class FairnessMetrics:
    """Seven signed differences (reference - protected) at a fixed threshold.

    A metric whose components are undefined for either group carries None in
    ``values`` and an explanation in ``not_computable``, never a silent 0.
    """

    attribute: str
    reference: str
    protected: str
    threshold: float
    values: dict[str, float | None]
    not_computable: dict[str, str]

    def to_dict(self) -> dict:
        return {
            "attribute": self.attribute,
            "reference": self.reference,
            "protected": self.protected,
            "threshold": self.threshold,
            "values": dict(self.values),
            "not_computable": dict(self.not_computable),
        }


def _group_components(labels: list[int], probs: list[float], threshold: float) -> dict:
    tp = fp = fn = tn = 0
    for y, p in zip(labels, probs):
        predicted = 1 if p >= threshold else 0
        if predicted == 1 and y == 1:
            tp += 1
        elif predicted == 1 and y == 0:
            fp += 1
        elif predicted == 0 and y == 1:
            fn += 1
        else:
            tn += 1
    n = len(labels)
    positives_predicted = [p for p in probs if p >= threshold]
    out: dict[str, float | None] = {}
    out["equal_opportunity"] = tp / (tp + fn) if (tp + fn) > 0 else None
    out["gini_equality"] = gini_coefficient([p - y + 1.0 for y, p in zip(labels, probs)])
    out["normalized_treatment_equality"] = fn / (fn + fp) if (fn + fp) > 0 else None
    out["overall_accuracy_equality"] = (tp + tn) / n
    out["positive_predictive_value"] = tp / (tp + fp) if (tp + fp) > 0 else None
    out["positive_class_balance"] = (
        sum(positives_predicted) / len(positives_predicted) if positives_predicted else None
    )
    out["statistical_parity"] = (tp + fp) / n
    return out


_NC_REASONS = {
    "equal_opportunity": "no actual positives",
    "normalized_treatment_equality": "no classification errors (FN + FP = 0)",
    "positive_predictive_value": "no predicted positives",
    "positive_class_balance": "no predicted positives",
}


def fairness_metrics(
    annotated: AnnotatedCorpus,
    preds: list[PredictionRecord],
    attribute: str,
    reference: str,
    protected: str,
    threshold: float = 0.5,
) -> FairnessMetrics:
    """The seven bias metrics over comments referencing each subgroup."""
    if not 0.0 < threshold < 1.0:
        raise AuditError(f"threshold must lie strictly between 0 and 1, got {threshold}")
    p_by_id = predictions_by_id(preds)
    groups: dict[str, tuple[list[int], list[float]]] = {}
    for name in (reference, protected):
        members = annotated.comments_referencing(attribute, name)
        if not members:
            raise AuditError(f"no annotated comment references {attribute}.{name}")
        missing = [c.id for c in members if c.id not in p_by_id]
        if missing:
            raise CoverageError(f"predictions missing for {len(missing)} comment(s): {missing}")
        groups[name] = ([c.label for c in members], [p_by_id[c.id] for c in members])

    ref_parts = _group_components(*groups[reference], threshold)
    prot_parts = _group_components(*groups[protected], threshold)
    values: dict[str, float | None] = {}
    not_computable: dict[str, str] = {}
    for name in FAIRNESS_METRIC_NAMES:
        r, p = ref_parts[name], prot_parts[name]
        if r is None or p is None:
            sides = []
            if r is None:
                sides.append(f"{reference}: {_NC_REASONS[name]}")
            if p is None:
                sides.append(f"{protected}: {_NC_REASONS[name]}")
            values[name] = None
            not_computable[name] = "; ".join(sides)
        else:
            values[name] = r - p
    return FairnessMetrics(
        attribute=attribute,
        reference=reference,
        protected=protected,
        threshold=threshold,
        values=values,
        not_computable=not_computable,
    )
