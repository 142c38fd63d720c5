"""Black-box access to the classifier under audit.

The auditor never loads the model itself; it talks to it through one of
three adapters: an offline predictions file (per-comment probabilities), a
subprocess speaking a line protocol (one JSON-encoded text in, one decimal
probability out), or an HTTP endpoint (POST /predict). A normalized-text
cache keeps swap/counterfactual/explanation workloads affordable.
Probabilities outside [0, 1] are rejected, never clamped: they signal a
broken adapter and clamping would corrupt every downstream metric.
"""

from __future__ import annotations

import csv
import json
import shlex
import subprocess
import threading
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import requests

from .corpus import LabeledCorpus
from .errors import (
    AdapterError,
    AdapterProtocolError,
    AdapterUnavailableError,
    CoverageError,
    DatasetError,
)

ADAPTER_KINDS = ("predictions_file", "subprocess", "http")


@dataclass(frozen=True)
class PredictionRecord:
    comment_id: str
    p_hateful: float

    def __post_init__(self):
        if not 0.0 <= self.p_hateful <= 1.0:
            raise AdapterProtocolError(
                f"probability for {self.comment_id!r} outside [0, 1]: {self.p_hateful!r}"
            )


@dataclass(frozen=True)
class AdapterConfig:
    kind: str
    location: str
    batch_size: int = 32
    timeout: float = 30.0
    max_retries: int = 2

    def __post_init__(self):
        if self.kind not in ADAPTER_KINDS:
            raise AdapterError(f"unknown adapter kind {self.kind!r} (expected one of {ADAPTER_KINDS})")
        if self.batch_size < 1:
            raise AdapterError(f"batch_size must be positive, got {self.batch_size}")
        if self.max_retries < 0:
            raise AdapterError(f"max_retries must be >= 0, got {self.max_retries}")

    @property
    def is_live(self) -> bool:
        """Whether the adapter can score novel texts (swap/counterfactual/explain)."""
        return self.kind != "predictions_file"


class PredictionCache:
    """Text -> probability cache keyed by NFC-normalized text.

    Reads are lock-free; writes are serialized. Hit/miss counters cover
    lookups made through :func:`predict_batch`.
    """

    def __init__(self):
        self._store: dict[str, float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(text: str) -> str:
        return unicodedata.normalize("NFC", text)

    def lookup(self, text: str) -> float | None:
        value = self._store.get(self.key(text))
        if value is None:
            self.misses += 1
        else:
            self.hits += 1
        return value

    def store(self, text: str, probability: float) -> None:
        with self._lock:
            self._store[self.key(text)] = probability

    def __len__(self) -> int:
        return len(self._store)


class Adapter(Protocol):
    """Anything that can score one batch of texts (single attempt, no retry)."""

    config: AdapterConfig

    def score_batch(self, texts: Sequence[str]) -> list[float]: ...


class SubprocessAdapter:
    """Spawns the scoring command per batch and speaks the line protocol.

    One JSON string per line on stdin; one decimal probability per line on
    stdout; EOF terminates the child.
    """

    def __init__(self, config: AdapterConfig):
        self.config = config
        self._argv = shlex.split(config.location)
        if not self._argv:
            raise AdapterError("subprocess adapter needs a non-empty command")

    def score_batch(self, texts: Sequence[str]) -> list[float]:
        payload = "".join(json.dumps(t, ensure_ascii=False) + "\n" for t in texts)
        try:
            proc = subprocess.run(
                self._argv,
                input=payload,
                capture_output=True,
                text=True,
                timeout=self.config.timeout,
            )
        except FileNotFoundError as exc:
            raise AdapterUnavailableError(f"cannot start {self._argv[0]!r}: {exc}") from exc
        except subprocess.TimeoutExpired as exc:
            raise AdapterUnavailableError(
                f"scoring command timed out after {self.config.timeout}s"
            ) from exc
        if proc.returncode != 0:
            raise AdapterUnavailableError(
                f"scoring command exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        lines = [line for line in proc.stdout.splitlines() if line.strip()]
        if len(lines) != len(texts):
            raise AdapterProtocolError(
                f"response count mismatch: sent {len(texts)} texts, got {len(lines)} lines"
            )
        probabilities = []
        for line in lines:
            try:
                probabilities.append(float(line.strip()))
            except ValueError as exc:
                raise AdapterProtocolError(f"non-numeric response line: {line!r}") from exc
        return probabilities


class HttpAdapter:
    """POSTs {"texts": [...]} to <location>/predict and reads {"probabilities": [...]}."""

    def __init__(self, config: AdapterConfig):
        self.config = config
        self._url = config.location.rstrip("/") + "/predict"

    def score_batch(self, texts: Sequence[str]) -> list[float]:
        try:
            response = requests.post(
                self._url, json={"texts": list(texts)}, timeout=self.config.timeout
            )
        except requests.RequestException as exc:
            raise AdapterUnavailableError(f"cannot reach {self._url}: {exc}") from exc
        if response.status_code != 200:
            raise AdapterUnavailableError(
                f"{self._url} answered with status {response.status_code}"
            )
        try:
            body = response.json()
        except ValueError as exc:
            raise AdapterProtocolError(f"{self._url} returned non-JSON body") from exc
        probabilities = body.get("probabilities")
        if not isinstance(probabilities, list):
            raise AdapterProtocolError('response is missing the "probabilities" array')
        if len(probabilities) != len(texts):
            raise AdapterProtocolError(
                f"response count mismatch: sent {len(texts)} texts, got {len(probabilities)}"
            )
        try:
            return [float(p) for p in probabilities]
        except (TypeError, ValueError) as exc:
            raise AdapterProtocolError(f"non-numeric probability in response: {exc}") from exc


class PredictionsFileAdapter:
    """Placeholder for the offline kind; cannot score novel texts."""

    def __init__(self, config: AdapterConfig):
        self.config = config

    def score_batch(self, texts: Sequence[str]) -> list[float]:
        raise AdapterError(
            "a predictions file cannot score novel texts; "
            "swap/counterfactual/explanation assessments need a subprocess or http adapter"
        )


def open_adapter(config: AdapterConfig):
    if config.kind == "subprocess":
        return SubprocessAdapter(config)
    if config.kind == "http":
        return HttpAdapter(config)
    return PredictionsFileAdapter(config)


def _score_with_retry(adapter: Adapter, texts: Sequence[str]) -> list[float]:
    attempts = adapter.config.max_retries + 1
    last_error: AdapterUnavailableError | None = None
    for _ in range(attempts):
        try:
            return adapter.score_batch(texts)
        except AdapterUnavailableError as exc:
            last_error = exc
    raise AdapterUnavailableError(
        f"batch failed after {attempts} attempt(s): {last_error}"
    ) from last_error


def predict_batch(
    texts: Sequence[str],
    adapter: Adapter,
    cache: PredictionCache | None = None,
) -> list[float]:
    """Probabilities for ``texts``, in input order.

    The cache is consulted first; duplicate texts trigger a single adapter
    call. Requests go out in batches of at most ``batch_size``, each retried
    up to ``max_retries`` times on transport failures. Protocol violations
    (count mismatch, non-numeric lines, probabilities outside [0, 1]) fail
    immediately.
    """
    if not texts:
        return []
    keys = [PredictionCache.key(t) for t in texts]
    resolved: dict[str, float] = {}
    pending: list[tuple[str, str]] = []  # (key, original text)
    seen: set[str] = set()
    for key, text in zip(keys, texts):
        if key in seen:
            continue
        seen.add(key)
        if cache is not None:
            hit = cache.lookup(text)
            if hit is not None:
                resolved[key] = hit
                continue
        pending.append((key, text))

    batch_size = adapter.config.batch_size
    for start in range(0, len(pending), batch_size):
        batch = pending[start : start + batch_size]
        batch_texts = [text for _, text in batch]
        probabilities = _score_with_retry(adapter, batch_texts)
        if len(probabilities) != len(batch_texts):
            raise AdapterProtocolError(
                f"response count mismatch: sent {len(batch_texts)}, got {len(probabilities)}"
            )
        for index, ((key, text), p) in enumerate(zip(batch, probabilities)):
            if not 0.0 <= p <= 1.0:
                raise AdapterProtocolError(
                    f"probability outside [0, 1] at batch index {index} for text {text!r}: {p!r}"
                )
            resolved[key] = p
            if cache is not None:
                cache.store(text, p)
    return [resolved[key] for key in keys]


def load_predictions(path: str | Path, corpus: LabeledCorpus) -> list[PredictionRecord]:
    """Read a "id,p_hateful" CSV covering the whole corpus.

    Records come back in corpus order. Unknown ids, duplicate ids, missing
    ids and out-of-range probabilities are all hard errors.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read predictions {path}: {exc}") from exc
    reader = csv.DictReader(text.splitlines(keepends=True))
    if reader.fieldnames is None:
        raise DatasetError(f"predictions file {path} is empty")
    fields = [f.strip() for f in reader.fieldnames]
    for required in ("id", "p_hateful"):
        if required not in fields:
            raise DatasetError(f"predictions header is missing the {required!r} column")
    by_id: dict[str, float] = {}
    for row in reader:
        line = reader.line_num
        comment_id = (row.get("id") or "").strip()
        if not comment_id:
            raise DatasetError("missing id value", line)
        if comment_id not in corpus:
            raise DatasetError(f"unknown comment id {comment_id!r}", line)
        if comment_id in by_id:
            raise DatasetError(f"duplicate prediction for id {comment_id!r}", line)
        raw = (row.get("p_hateful") or "").strip()
        try:
            p = float(raw)
        except ValueError as exc:
            raise DatasetError(f"unparseable probability {raw!r}", line) from exc
        if not 0.0 <= p <= 1.0:
            raise DatasetError(f"probability outside [0, 1] for id {comment_id!r}: {p}", line)
        by_id[comment_id] = p
    missing = [c.id for c in corpus if c.id not in by_id]
    if missing:
        raise CoverageError(f"predictions missing for {len(missing)} comment(s): {missing}")
    return [PredictionRecord(comment_id=c.id, p_hateful=by_id[c.id]) for c in corpus]
