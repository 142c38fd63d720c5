"""Embedding-bias metrics: neutral-word similarity profiles and their pairwise gaps.

For each subgroup, the profile holds the cosine similarity between every
neutral word and the subgroup's term set, averaged over the terms. Pairwise
MAE/RMSE of those profiles, and their means over all subgroup pairs
(AMAE/ARMSE), quantify how unevenly neutral words associate across
subgroups. Out-of-vocabulary and multi-token terms are skipped and
reported, never imputed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmbeddingError
from .lexicon import AttributeLexicon, NeutralWordList


class EmbeddingTable:
    """Term -> d-dimensional vector store loaded from a text embedding file."""

    def __init__(self, dimension: int, vectors: dict[str, np.ndarray]):
        self.dimension = dimension
        self.vectors = vectors

    def __contains__(self, term: str) -> bool:
        return term in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, term: str) -> np.ndarray:
        return self.vectors[term]


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Parse a "term v1 ... vd" per line embedding file (no header).

    The dimension is inferred from the first line and must stay constant.
    Duplicate terms keep their first vector with a warning.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise EmbeddingError(f"cannot read embeddings {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise EmbeddingError(f"embeddings {path} are not valid UTF-8: {exc}") from exc

    vectors: dict[str, np.ndarray] = {}
    dimension: int | None = None
    duplicates = 0
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < 2:
            raise EmbeddingError("expected a term followed by numbers", line_no)
        term = parts[0].lower()
        try:
            values = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise EmbeddingError(f"unparseable number: {exc}", line_no) from exc
        if any(math.isnan(v) or math.isinf(v) for v in values):
            raise EmbeddingError("vector contains NaN or Inf", line_no)
        if dimension is None:
            dimension = len(values)
        elif len(values) != dimension:
            raise EmbeddingError(
                f"dimension mismatch: expected {dimension}, got {len(values)}", line_no
            )
        if term in vectors:
            duplicates += 1
            continue
        vectors[term] = np.asarray(values, dtype=np.float64)
    if dimension is None:
        raise EmbeddingError(f"embedding file {path} is empty")
    if duplicates:
        warnings.warn(f"{duplicates} duplicate embedding term(s) ignored (first kept)", stacklevel=2)
    return EmbeddingTable(dimension=dimension, vectors=vectors)


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise EmbeddingError(f"vector length mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise EmbeddingError("cosine similarity undefined for zero-norm vector")
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class SimilarityProfile:
    """Averaged neutral-word/subgroup-term cosine similarities for one subgroup."""

    subgroup: str
    x: tuple[float, ...]
    covered_neutral_terms: tuple[str, ...]


def subgroup_similarity_profile(
    neutrals: NeutralWordList,
    subgroup_terms: list[str] | tuple[str, ...],
    table: EmbeddingTable,
    subgroup: str = "",
) -> SimilarityProfile:
    """Profile entry j = mean over in-vocabulary subgroup terms of cos(neutral_j, term).

    Only single-token, in-vocabulary terms contribute; neutral words missing
    from the table are dropped from the profile (and from
    ``covered_neutral_terms``).
    """
    usable_terms = [t for t in subgroup_terms if " " not in t and t in table]
    if not usable_terms:
        missing = [t for t in subgroup_terms]
        raise EmbeddingError(
            f"no in-vocabulary subgroup terms for {subgroup or 'subgroup'}: {missing}"
        )
    covered = [w for w in neutrals.words if w in table]
    if not covered:
        raise EmbeddingError("no neutral word has an embedding")
    term_matrix = np.stack([table.get(t) for t in usable_terms])
    term_norms = np.linalg.norm(term_matrix, axis=1)
    if np.any(term_norms == 0.0):
        bad = [t for t, n in zip(usable_terms, term_norms) if n == 0.0]
        raise EmbeddingError(f"zero-norm embedding for term(s): {bad}")
    neutral_matrix = np.stack([table.get(w) for w in covered])
    neutral_norms = np.linalg.norm(neutral_matrix, axis=1)
    if np.any(neutral_norms == 0.0):
        bad = [w for w, n in zip(covered, neutral_norms) if n == 0.0]
        raise EmbeddingError(f"zero-norm embedding for neutral word(s): {bad}")
    sims = (neutral_matrix / neutral_norms[:, None]) @ (term_matrix / term_norms[:, None]).T
    x = sims.mean(axis=1)
    return SimilarityProfile(subgroup=subgroup, x=tuple(float(v) for v in x), covered_neutral_terms=tuple(covered))


@dataclass(frozen=True)
class EmbeddingBiasResult:
    """Pairwise and aggregate neutral-word association gaps for one attribute."""

    attribute: str
    pairwise: dict[tuple[str, str], tuple[float, float]]  # (mae, rmse)
    amae: float
    armse: float
    skipped_terms: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "attribute": self.attribute,
            "pairwise": [
                {"subgroup_a": a, "subgroup_b": b, "mae": mae, "rmse": rmse}
                for (a, b), (mae, rmse) in sorted(self.pairwise.items())
            ],
            "amae": self.amae,
            "armse": self.armse,
            "skipped_terms": list(self.skipped_terms),
        }


def embedding_bias(
    neutrals: NeutralWordList,
    lexicon: AttributeLexicon,
    attribute: str,
    table: EmbeddingTable,
) -> EmbeddingBiasResult:
    """MAE/RMSE between subgroup similarity profiles plus their AMAE/ARMSE means.

    All profiles are computed over the same covered neutral set. Neutral
    words that collide with a subgroup term of the attribute are excluded
    with a warning (they cannot be neutral for this attribute).
    """
    attribute_terms = {
        term for terms in lexicon.attributes.get(attribute, {}).values() for term in terms
    }
    if not attribute_terms:
        raise EmbeddingError(f"unknown attribute {attribute!r}")
    clashing = [w for w in neutrals.words if w in attribute_terms]
    if clashing:
        warnings.warn(
            f"{len(clashing)} neutral word(s) overlap {attribute} subgroup terms and were excluded: "
            f"{clashing[:10]}",
            stacklevel=2,
        )
    usable_neutrals = [w for w in neutrals.words if w not in attribute_terms]
    if not usable_neutrals:
        raise EmbeddingError("no usable neutral words after removing subgroup-term overlaps")
    filtered = NeutralWordList(words=tuple(usable_neutrals))

    skipped: list[str] = []
    profiles: dict[str, SimilarityProfile] = {}
    for subgroup in sorted(lexicon.subgroups(attribute)):
        terms = lexicon.terms(attribute, subgroup)
        skipped.extend(t for t in dict.fromkeys(terms) if " " in t or t not in table)
        try:
            profiles[subgroup] = subgroup_similarity_profile(filtered, terms, table, subgroup)
        except EmbeddingError:
            continue
    if len(profiles) < 2:
        raise EmbeddingError(
            f"attribute {attribute!r}: need at least 2 subgroups with in-vocabulary terms, "
            f"got {len(profiles)}"
        )

    common = set.intersection(*(set(p.covered_neutral_terms) for p in profiles.values()))
    order = [w for w in filtered.words if w in common]
    if not order:
        raise EmbeddingError("no neutral word is covered for every subgroup")
    arrays: dict[str, np.ndarray] = {}
    for subgroup, profile in profiles.items():
        index = {w: i for i, w in enumerate(profile.covered_neutral_terms)}
        arrays[subgroup] = np.asarray([profile.x[index[w]] for w in order])

    names = sorted(profiles)
    pairwise: dict[tuple[str, str], tuple[float, float]] = {}
    maes: list[float] = []
    rmses: list[float] = []
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            diff = arrays[a] - arrays[b]
            mae = float(np.mean(np.abs(diff)))
            rmse = float(np.sqrt(np.mean(diff**2)))
            pairwise[(a, b)] = (mae, rmse)
            maes.append(mae)
            rmses.append(rmse)
    return EmbeddingBiasResult(
        attribute=attribute,
        pairwise=pairwise,
        amae=float(np.mean(maes)),
        armse=float(np.mean(rmses)),
        skipped_terms=tuple(skipped),
    )


def embedding_bias_csv(results: list[EmbeddingBiasResult]) -> str:
    """Flat CSV of pairwise and aggregate values, one attribute per block."""
    lines = ["attribute,subgroup_a,subgroup_b,mae,rmse"]
    for result in results:
        for (a, b), (mae, rmse) in sorted(result.pairwise.items()):
            lines.append(f"{result.attribute},{a},{b},{mae:.6g},{rmse:.6g}")
        lines.append(f"{result.attribute},ALL,ALL,{result.amae:.6g},{result.armse:.6g}")
    return "\n".join(lines) + "\n"
