"""Labeled comment datasets and the tokenizer shared by every assessment.

Tokenization is deliberately simple and deterministic: lowercase, NFKC,
whole-word segmentation with byte spans back into the original text.
Hashtags, @-mentions and URLs are kept as ordinary tokens; there is no
stemming, sentence splitting or emoji normalization.
"""

from __future__ import annotations

import csv
import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DatasetError

SPLITS = ("train", "test", "unsplit")

# Periods kept when they terminate one of these tokens; derived from the
# built-in lexicon (terms such as "mr." would otherwise lose their period).
DEFAULT_ABBREVIATIONS = frozenset({"mr.", "mrs.", "ms."})

_RUN_EXTRA = {"'", "."}


@dataclass(frozen=True)
class TokenSpan:
    """A lowercased token plus its byte span in the original UTF-8 text."""

    token: str
    start: int
    end: int


@dataclass(frozen=True)
class Comment:
    id: str
    text: str
    label: int
    split: str = "unsplit"

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DatasetError(f"comment {self.id!r}: label must be 0 or 1, got {self.label!r}")
        if not self.text.strip():
            raise DatasetError(f"comment {self.id!r}: text is empty after whitespace trim")
        if self.split not in SPLITS:
            raise DatasetError(f"comment {self.id!r}: unknown split {self.split!r}")


class LabeledCorpus:
    """Ordered collection of labeled comments with cached per-label totals."""

    def __init__(self, comments: Iterable[Comment]):
        self.comments: list[Comment] = list(comments)
        self._by_id: dict[str, Comment] = {}
        for comment in self.comments:
            if comment.id in self._by_id:
                raise DatasetError(f"duplicate comment id {comment.id!r}")
            self._by_id[comment.id] = comment
        self.counts: dict[int, int] = {
            0: sum(1 for c in self.comments if c.label == 0),
            1: sum(1 for c in self.comments if c.label == 1),
        }

    def __len__(self) -> int:
        return len(self.comments)

    def __iter__(self) -> Iterator[Comment]:
        return iter(self.comments)

    def get(self, comment_id: str) -> Comment:
        return self._by_id[comment_id]

    def __contains__(self, comment_id: str) -> bool:
        return comment_id in self._by_id

    def partition(self, label: int) -> list[Comment]:
        return [c for c in self.comments if c.label == label]


def _parse_label(raw, line: int) -> int:
    if isinstance(raw, bool):
        raise DatasetError(f"label must be 0/1 or hateful/not-hateful, got {raw!r}", line)
    if isinstance(raw, int):
        if raw in (0, 1):
            return raw
        raise DatasetError(f"label must be 0 or 1, got {raw!r}", line)
    if isinstance(raw, str):
        value = raw.strip().lower()
        if value in ("0", "1"):
            return int(value)
        if value == "hateful":
            return 1
        if value == "not-hateful":
            return 0
    raise DatasetError(f"unknown label {raw!r}", line)


def _parse_split(raw, line: int) -> str:
    if raw is None or raw == "":
        return "unsplit"
    value = str(raw).strip().lower()
    if value not in SPLITS:
        raise DatasetError(f"unknown split {raw!r}", line)
    return value


def _build_comment(record: dict, line: int, ordinal: int, has_ids: bool) -> Comment:
    text = record.get("text")
    if text is None:
        raise DatasetError("missing text field", line)
    if not isinstance(text, str):
        raise DatasetError(f"text must be a string, got {type(text).__name__}", line)
    if not text.strip():
        raise DatasetError("empty text", line)
    if "label" not in record or record["label"] is None:
        raise DatasetError("missing label field", line)
    label = _parse_label(record["label"], line)
    split = _parse_split(record.get("split"), line)
    if has_ids:
        comment_id = record.get("id")
        if comment_id is None or str(comment_id).strip() == "":
            raise DatasetError("missing id value", line)
        comment_id = str(comment_id)
    else:
        comment_id = f"row-{ordinal}"
    return Comment(id=comment_id, text=text, label=label, split=split)


def load_dataset(path: str | Path, format: str = "csv") -> LabeledCorpus:
    """Load a labeled comment dataset from CSV or JSONL.

    CSV needs a header with columns ``text`` and ``label`` (``id`` and
    ``split`` optional, RFC-4180 quoting). JSONL is one object per line with
    the same keys. Labels are 0/1 or "hateful"/"not-hateful"
    (case-insensitive). Records without an id column get ids "row-<n>"
    (1-based). Loading is deterministic: identical bytes yield an identical
    corpus.
    """
    path = Path(path)
    if format not in ("csv", "jsonl"):
        raise DatasetError(f"unknown dataset format {format!r}")
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DatasetError(f"dataset {path} is not valid UTF-8: {exc}") from exc

    comments: list[Comment] = []
    seen_ids: dict[str, int] = {}
    if format == "csv":
        reader = csv.DictReader(raw.splitlines(keepends=True))
        if reader.fieldnames is None:
            raise DatasetError("CSV file is empty (header row required)")
        fields = [f.strip() for f in reader.fieldnames]
        for required in ("text", "label"):
            if required not in fields:
                raise DatasetError(f"CSV header is missing the {required!r} column")
        has_ids = "id" in fields
        for ordinal, row in enumerate(reader, start=1):
            line = reader.line_num
            if None in row:
                raise DatasetError("row has more fields than the header", line)
            comment = _build_comment(row, line, ordinal, has_ids)
            _check_duplicate(comment.id, seen_ids, line)
            comments.append(comment)
    else:
        ordinal = 0
        for line, text_line in enumerate(raw.splitlines(), start=1):
            if not text_line.strip():
                continue
            ordinal += 1
            try:
                record = json.loads(text_line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON: {exc.msg}", line) from exc
            if not isinstance(record, dict):
                raise DatasetError("record must be a JSON object", line)
            comment = _build_comment(record, line, ordinal, has_ids="id" in record)
            _check_duplicate(comment.id, seen_ids, line)
            comments.append(comment)
    return LabeledCorpus(comments)


def _check_duplicate(comment_id: str, seen: dict[str, int], line: int) -> None:
    if comment_id in seen:
        raise DatasetError(
            f"duplicate id {comment_id!r} (first seen at line {seen[comment_id]})", line
        )
    seen[comment_id] = line


def tokenize(text: str, abbreviations: frozenset[str] | None = None) -> list[TokenSpan]:
    """Segment text into lowercased word tokens with byte spans.

    A token is a maximal run of Unicode letters/digits plus internal
    apostrophes and periods. Leading and trailing apostrophes/periods are
    stripped, except a trailing period kept when the token is a known
    abbreviation (e.g. "mr."). Spans are byte offsets into the UTF-8
    encoding of ``text``; lowercasing ``text[start:end]`` reproduces the
    token for plain ASCII input.
    """
    if abbreviations is None:
        abbreviations = DEFAULT_ABBREVIATIONS
    spans: list[TokenSpan] = []
    n = len(text)
    byte_at = [0] * (n + 1)
    pos = 0
    for i, ch in enumerate(text):
        byte_at[i] = pos
        pos += len(ch.encode("utf-8"))
    byte_at[n] = pos

    i = 0
    while i < n:
        if text[i].isalnum() or text[i] in _RUN_EXTRA:
            j = i
            while j < n and (text[j].isalnum() or text[j] in _RUN_EXTRA):
                j += 1
            trimmed = _trim_run(text, i, j, abbreviations)
            if trimmed is not None:
                s, e = trimmed
                token = unicodedata.normalize("NFKC", text[s:e].lower())
                spans.append(TokenSpan(token=token, start=byte_at[s], end=byte_at[e]))
            i = j
        else:
            i += 1
    return spans


def _trim_run(text: str, i: int, j: int, abbreviations: frozenset[str]) -> tuple[int, int] | None:
    while i < j and text[i] in _RUN_EXTRA:
        i += 1
    while j > i and text[j - 1] in _RUN_EXTRA:
        if text[j - 1] == "." and text[i:j].lower() in abbreviations:
            break
        j -= 1
    if j <= i or not any(text[k].isalnum() for k in range(i, j)):
        return None
    return i, j


def token_strings(text: str, abbreviations: frozenset[str] | None = None) -> list[str]:
    """Convenience wrapper returning only the token strings."""
    return [span.token for span in tokenize(text, abbreviations)]
