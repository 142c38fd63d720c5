"""Perturbation-based interpretability for black-box text classifiers.

Local explanations fit an L2-regularized weighted linear surrogate to the
model's behaviour on token-deletion perturbations of one comment. Global
importances aggregate per-token occlusion effects or sampled Shapley values
across a corpus. Features are a comment's unique tokens with all
occurrences tied; a masked-out token is deleted from the text (no
placeholder), because the audited model consumes raw text and placeholder
tokens would be artifacts of the auditor.

All randomness flows from one recorded seed; per-comment streams are seeded
by (seed, comment id) so parallel execution cannot change results.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .corpus import Comment, LabeledCorpus, TokenSpan, tokenize
from .errors import ExplainError
from .modeliface import Adapter, PredictionCache, predict_batch

EXACT_SHAPLEY_MAX_TOKENS = 12

DEFAULT_KERNEL_WIDTH = 0.75
DEFAULT_L2_LAMBDA = 1e-3


def _comment_rng(rng_seed: int, comment_id: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{rng_seed}:{comment_id}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def _unique_tokens(text: str) -> tuple[list[str], dict[str, list[TokenSpan]]]:
    spans_by_token: dict[str, list[TokenSpan]] = {}
    order: list[str] = []
    for span in tokenize(text):
        if span.token not in spans_by_token:
            spans_by_token[span.token] = []
            order.append(span.token)
        spans_by_token[span.token].append(span)
    return order, spans_by_token


def _delete_spans(text: str, spans: list[TokenSpan]) -> str:
    data = text.encode("utf-8")
    pieces: list[bytes] = []
    cursor = 0
    for span in sorted(spans, key=lambda s: s.start):
        pieces.append(data[cursor : span.start])
        cursor = span.end
    pieces.append(data[cursor:])
    return " ".join(b"".join(pieces).decode("utf-8").split())


def _realize_mask(
    text: str, tokens: list[str], spans_by_token: dict[str, list[TokenSpan]], mask
) -> str:
    doomed: list[TokenSpan] = []
    for token, keep in zip(tokens, mask):
        if not keep:
            doomed.extend(spans_by_token[token])
    if not doomed:
        return text
    return _delete_spans(text, doomed)


@dataclass(frozen=True)
class LocalExplanation:
    """Linear surrogate weights for one prediction; positive pushes toward hateful."""

    comment_id: str
    token_weights: tuple[tuple[str, float], ...]
    intercept: float
    surrogate_fit_r2: float
    n_samples: int
    kernel_width: float
    l2_lambda: float
    rng_seed: int

    def to_dict(self) -> dict:
        return {
            "comment_id": self.comment_id,
            "token_weights": [[t, w] for t, w in self.token_weights],
            "intercept": self.intercept,
            "surrogate_fit_r2": self.surrogate_fit_r2,
            "n_samples": self.n_samples,
            "kernel_width": self.kernel_width,
            "l2_lambda": self.l2_lambda,
            "rng_seed": self.rng_seed,
        }


def _mask_weights(masks: np.ndarray, kernel_width: float) -> np.ndarray:
    # Cosine distance between each binary mask and the all-ones mask is
    # 1 - sqrt(kept fraction); the empty mask gets the maximum distance 1.
    k = masks.shape[1]
    kept = masks.sum(axis=1)
    distance = np.where(kept > 0, 1.0 - np.sqrt(kept / k), 1.0)
    return np.exp(-(distance**2) / (kernel_width**2))


def local_explain(
    comment: Comment,
    adapter: Adapter,
    n_samples: int | None = None,
    kernel_width: float = DEFAULT_KERNEL_WIDTH,
    l2_lambda: float = DEFAULT_L2_LAMBDA,
    rng_seed: int = 0,
    cache: PredictionCache | None = None,
) -> LocalExplanation:
    """Fit a weighted ridge surrogate of the model around one comment.

    Masks keep each unique token with probability 0.5 (the all-ones mask is
    always included); when 2^k masks fit within ``n_samples`` the full mask
    space is enumerated instead, which makes the fit exact for linear
    models. Sample weights decay with cosine distance from the unperturbed
    mask. The intercept is not penalized.
    """
    tokens, spans_by_token = _unique_tokens(comment.text)
    k = len(tokens)
    if k == 0:
        raise ExplainError(f"comment {comment.id!r} has no tokens")
    if n_samples is None:
        n_samples = max(512, 8 * k)
    if n_samples < k + 1:
        raise ExplainError(
            f"n_samples must be at least unique tokens + 1 ({k + 1}), got {n_samples}"
        )

    if k <= 20 and 2**k <= n_samples:
        masks = np.array(
            [[(i >> j) & 1 for j in range(k)] for i in range(2**k)], dtype=np.float64
        )
    else:
        rng = _comment_rng(rng_seed, comment.id)
        random_masks = rng.integers(0, 2, size=(n_samples - 1, k)).astype(np.float64)
        masks = np.vstack([np.ones((1, k)), random_masks])

    texts = [_realize_mask(comment.text, tokens, spans_by_token, mask) for mask in masks]
    y = np.asarray(predict_batch(texts, adapter, cache), dtype=np.float64)
    w = _mask_weights(masks, kernel_width)

    # Weighted ridge with unpenalized intercept column.
    X = np.hstack([masks, np.ones((masks.shape[0], 1))])
    gram = X.T @ (X * w[:, None])
    ridge = l2_lambda * np.eye(k + 1)
    ridge[k, k] = 0.0
    try:
        beta = np.linalg.solve(gram + ridge, X.T @ (w * y))
    except np.linalg.LinAlgError as exc:
        raise ExplainError(f"degenerate design matrix for comment {comment.id!r}") from exc

    fitted = X @ beta
    ss_res = float(np.sum(w * (y - fitted) ** 2))
    y_bar = float(np.sum(w * y) / np.sum(w))
    ss_tot = float(np.sum(w * (y - y_bar) ** 2))
    if ss_tot > 1e-30:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res <= 1e-30 else 0.0

    return LocalExplanation(
        comment_id=comment.id,
        token_weights=tuple((t, float(b)) for t, b in zip(tokens, beta[:k])),
        intercept=float(beta[k]),
        surrogate_fit_r2=r2,
        n_samples=int(masks.shape[0]),
        kernel_width=kernel_width,
        l2_lambda=l2_lambda,
        rng_seed=rng_seed,
    )


@dataclass(frozen=True)
class ImportanceRow:
    token: str
    mean_effect: float
    mean_abs_effect: float
    support: int

    def to_dict(self) -> dict:
        return {
            "token": self.token,
            "mean_effect": self.mean_effect,
            "mean_abs_effect": self.mean_abs_effect,
            "support": self.support,
        }


@dataclass(frozen=True)
class GlobalImportance:
    """Corpus-level token effects, sorted by mean |effect| descending."""

    rows: tuple[ImportanceRow, ...]
    method: str
    rng_seed: int

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "rng_seed": self.rng_seed,
            "rows": [r.to_dict() for r in self.rows],
        }

    def to_csv(self) -> str:
        lines = ["token,mean_effect,mean_abs_effect,support"]
        for row in self.rows:
            lines.append(
                f"{row.token},{row.mean_effect:.6g},{row.mean_abs_effect:.6g},{row.support}"
            )
        return "\n".join(lines) + "\n"


def _capped_tokens(text: str, max_tokens: int) -> tuple[list[str], dict[str, list[TokenSpan]]]:
    tokens, spans_by_token = _unique_tokens(text)
    if max_tokens and len(tokens) > max_tokens:
        tokens = tokens[:max_tokens]  # first-appearance order keeps this deterministic
    return tokens, spans_by_token


def _occlusion_effects(
    corpus: LabeledCorpus,
    adapter: Adapter,
    max_tokens_per_comment: int,
    cache: PredictionCache,
) -> dict[str, list[float]]:
    jobs: list[tuple[str, str]] = []  # (token, realized text) per comment in order
    full_texts: list[str] = []
    per_comment: list[tuple[list[str], list[str]]] = []
    for comment in corpus:
        tokens, spans_by_token = _capped_tokens(comment.text, max_tokens_per_comment)
        realized = [_delete_spans(comment.text, spans_by_token[t]) for t in tokens]
        per_comment.append((tokens, realized))
        full_texts.append(comment.text)
        jobs.extend(zip(tokens, realized))

    all_texts = full_texts + [text for _, text in jobs]
    probs = predict_batch(all_texts, adapter, cache)
    full_probs = probs[: len(full_texts)]
    deletion_probs = probs[len(full_texts) :]

    effects: dict[str, list[float]] = {}
    cursor = 0
    for (tokens, realized), p_full in zip(per_comment, full_probs):
        for token in tokens:
            effect = p_full - deletion_probs[cursor]
            cursor += 1
            effects.setdefault(token, []).append(effect)
    return effects


def _sampled_shapley_effects(
    corpus: LabeledCorpus,
    adapter: Adapter,
    m_permutations: int,
    max_tokens_per_comment: int,
    rng_seed: int,
    cache: PredictionCache,
) -> dict[str, list[float]]:
    if m_permutations < 1:
        raise ExplainError(f"m_permutations must be positive, got {m_permutations}")
    effects: dict[str, list[float]] = {}
    for comment in corpus:
        tokens, spans_by_token = _capped_tokens(comment.text, max_tokens_per_comment)
        k = len(tokens)
        if k == 0:
            continue
        rng = _comment_rng(rng_seed, comment.id)
        value_memo: dict[int, float] = {}

        def coalition_text(bits: int) -> str:
            mask = [(bits >> j) & 1 for j in range(k)]
            return _realize_mask(comment.text, tokens, spans_by_token, mask)

        def ensure_values(bit_sets: list[int]) -> None:
            missing = [b for b in dict.fromkeys(bit_sets) if b not in value_memo]
            if not missing:
                return
            texts = [coalition_text(b) for b in missing]
            for b, p in zip(missing, predict_batch(texts, adapter, cache)):
                value_memo[b] = p

        marginals = np.zeros(k)
        ensure_values([0])
        for _ in range(m_permutations):
            order = rng.permutation(k)
            states = [0]
            bits = 0
            for j in order:
                bits |= 1 << int(j)
                states.append(bits)
            ensure_values(states)
            previous = value_memo[0]
            bits = 0
            for j in order:
                bits |= 1 << int(j)
                current = value_memo[bits]
                marginals[int(j)] += current - previous
                previous = current
        for token, total in zip(tokens, marginals):
            effects.setdefault(token, []).append(float(total) / m_permutations)
    return effects


def global_importance(
    corpus: LabeledCorpus,
    adapter: Adapter,
    method: str = "occlusion",
    m_permutations: int = 200,
    max_tokens_per_comment: int = 12,
    rng_seed: int = 0,
    cache: PredictionCache | None = None,
) -> GlobalImportance:
    """Aggregate per-token effects over every comment containing the token.

    occlusion: effect = p(full text) - p(text with all occurrences of the
    token deleted). sampled_shapley: the token's marginal contribution
    averaged over random insertion orders, coalitions realized by deleting
    the complement. Support counts the comments where the token was an
    explained feature (comments beyond ``max_tokens_per_comment`` unique
    tokens only expose their first ones).
    """
    if method not in ("occlusion", "sampled_shapley"):
        raise ExplainError(f"unknown importance method {method!r}")
    if len(corpus) == 0:
        raise ExplainError("corpus is empty")
    if cache is None:
        cache = PredictionCache()
    if method == "occlusion":
        effects = _occlusion_effects(corpus, adapter, max_tokens_per_comment, cache)
    else:
        effects = _sampled_shapley_effects(
            corpus, adapter, m_permutations, max_tokens_per_comment, rng_seed, cache
        )
    rows = [
        ImportanceRow(
            token=token,
            mean_effect=sum(values) / len(values),
            mean_abs_effect=sum(abs(v) for v in values) / len(values),
            support=len(values),
        )
        for token, values in effects.items()
    ]
    rows.sort(key=lambda r: (-r.mean_abs_effect, r.token))
    return GlobalImportance(rows=tuple(rows), method=method, rng_seed=rng_seed)


def exact_shapley(
    comment: Comment, adapter: Adapter, cache: PredictionCache | None = None
) -> list[tuple[str, float]]:
    """Exact Shapley values by full coalition enumeration (<= 12 unique tokens).

    The value of a coalition is the model's probability on the text with the
    complement deleted. Serves as the oracle for the sampled estimator.
    """
    tokens, spans_by_token = _unique_tokens(comment.text)
    k = len(tokens)
    if k == 0:
        raise ExplainError(f"comment {comment.id!r} has no tokens")
    if k > EXACT_SHAPLEY_MAX_TOKENS:
        raise ExplainError(
            f"exact Shapley enumeration is limited to {EXACT_SHAPLEY_MAX_TOKENS} unique tokens, "
            f"comment {comment.id!r} has {k}"
        )
    if cache is None:
        cache = PredictionCache()
    texts = []
    for bits in range(2**k):
        mask = [(bits >> j) & 1 for j in range(k)]
        texts.append(_realize_mask(comment.text, tokens, spans_by_token, mask))
    values = predict_batch(texts, adapter, cache)

    size_weight = [
        math.factorial(s) * math.factorial(k - 1 - s) / math.factorial(k) for s in range(k)
    ]
    shapley = [0.0] * k
    for bits in range(2**k):
        size = bin(bits).count("1")
        for j in range(k):
            if bits & (1 << j):
                continue
            shapley[j] += size_weight[size] * (values[bits | (1 << j)] - values[bits])
    return list(zip(tokens, shapley))
