"""Audit orchestration: configuration, the full audit run, report rendering.

A single JSON config document drives the whole audit; every section runs in
isolation and records a computed / skipped(reason) / failed(error) status,
so one broken axis never hides the others. Reports render to canonical JSON
(sorted keys, 6 significant digits) so identical config + seed + inputs
yield byte-identical files, and to markdown for humans. The report carries
a content hash for every input so the audit is self-contained evidence.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from . import __version__
from .classbias import (
    counterfactual_bias,
    counterfactual_probability_stats,
    expand_templates,
    fairness_metrics,
    performance_report,
    subgroup_probability_stats,
    swap_favor_analysis,
)
from .corpus import load_dataset
from .databias import (
    frequency_table_csv,
    frequency_table_json,
    identity_term_frequencies,
    subgroup_reference_frequencies,
)
from .embedbias import embedding_bias, embedding_bias_csv, load_embeddings
from .errors import AuditError, ConfigError
from .explain import global_importance, local_explain
from .lexicon import (
    aligned_swap_pairs,
    default_gazetteer,
    default_identity_terms,
    default_lexicon,
    default_neutral_words,
    default_templates,
    load_gazetteer,
    load_identity_terms,
    load_lexicon,
    load_neutral_words,
    load_templates,
)
from .mining import annotate_corpus, annotations_to_jsonl
from .modeliface import (
    AdapterConfig,
    PredictionCache,
    PredictionRecord,
    load_predictions,
    open_adapter,
    predict_batch,
)

SECTIONS = (
    "performance",
    "data_bias",
    "embedding_bias",
    "subgroup_stats",
    "swap_favor",
    "counterfactual",
    "fairness_metrics",
    "explanations",
    "emissions",
)

DEFAULT_COUNTERFACTUAL_FILLS = {
    "religion": {"islam": ["Muslim"], "christianity": ["Christian"]},
    "gender": {"male": ["man"], "female": ["woman"]},
}


# ---------------------------------------------------------------------------
# Emissions estimate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmissionsEstimate:
    power_draw_kw: float
    hours: float
    pue: float
    carbon_intensity_kg_per_kwh: float
    co2eq_kg: float

    def to_dict(self) -> dict:
        return {
            "power_draw_kw": self.power_draw_kw,
            "hours": self.hours,
            "pue": self.pue,
            "carbon_intensity_kg_per_kwh": self.carbon_intensity_kg_per_kwh,
            "co2eq_kg": self.co2eq_kg,
        }


def estimate_emissions(
    power_draw_kw: float, hours: float, pue: float, carbon_intensity_kg_per_kwh: float
) -> EmissionsEstimate:
    """Closed-form training emissions: power x time x PUE x grid intensity."""
    for name, value in (
        ("power_draw_kw", power_draw_kw),
        ("hours", hours),
        ("pue", pue),
        ("carbon_intensity_kg_per_kwh", carbon_intensity_kg_per_kwh),
    ):
        if value < 0:
            raise AuditError(f"{name} must be >= 0, got {value}")
    return EmissionsEstimate(
        power_draw_kw=power_draw_kw,
        hours=hours,
        pue=pue,
        carbon_intensity_kg_per_kwh=carbon_intensity_kg_per_kwh,
        co2eq_kg=power_draw_kw * hours * pue * carbon_intensity_kg_per_kwh,
    )


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _check_keys(obj: dict, allowed: set[str], context: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{context}: unknown key(s) {sorted(unknown)}")


@dataclass(frozen=True)
class SwapSpec:
    attribute: str = "gender"
    sub_a: str = "male"
    sub_b: str = "female"
    rounding_decimals: int = 4

    def __post_init__(self):
        if self.rounding_decimals < 0:
            raise ConfigError(f"swap.rounding_decimals must be >= 0, got {self.rounding_decimals}")


@dataclass(frozen=True)
class FairnessSpec:
    attribute: str = "gender"
    reference: str = "male"
    protected: str = "female"


@dataclass(frozen=True)
class ExplanationSpec:
    mode: str = "both"  # local | global | both
    n_samples: int | None = None  # None: max(512, 8 x unique tokens)
    kernel_width: float = 0.75
    l2_lambda: float = 1e-3
    method: str = "occlusion"  # occlusion | sampled_shapley
    m_permutations: int = 200
    max_tokens_per_comment: int = 12
    local_comment_ids: tuple[str, ...] = ()
    max_local_comments: int = 2

    def __post_init__(self):
        if self.mode not in ("local", "global", "both"):
            raise ConfigError(f"explanation.mode must be local, global or both, got {self.mode!r}")
        if self.method not in ("occlusion", "sampled_shapley"):
            raise ConfigError(
                f"explanation.method must be occlusion or sampled_shapley, got {self.method!r}"
            )
        if self.m_permutations < 1:
            raise ConfigError("explanation.m_permutations must be positive")


@dataclass(frozen=True)
class EmissionsSpec:
    power_draw_kw: float = 0.0
    hours: float = 0.0
    pue: float = 1.0
    carbon_intensity_kg_per_kwh: float = 0.0


def _spec_from_dict(cls, obj, context):
    if obj is None:
        return cls()
    if not isinstance(obj, dict):
        raise ConfigError(f"{context} must be an object")
    allowed = {f.name for f in fields(cls)}
    _check_keys(obj, allowed, context)
    values = dict(obj)
    for key in ("local_comment_ids",):
        if key in values and isinstance(values[key], list):
            values[key] = tuple(values[key])
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"{context}: {exc}") from exc


@dataclass(frozen=True)
class AuditConfig:
    """One self-describing document configuring the whole audit."""

    dataset_path: str | None = None
    dataset_format: str = "csv"
    lexicon_path: str | None = None
    gazetteer_path: str | None = None
    neutral_words_path: str | None = None
    identity_terms_path: str | None = None
    templates_path: str | None = None
    embeddings_path: str | None = None
    adapter: AdapterConfig | None = None
    threshold: float = 0.5
    attributes: tuple[str, ...] = ("gender", "religion")
    swap: SwapSpec = field(default_factory=SwapSpec)
    fairness: FairnessSpec = field(default_factory=FairnessSpec)
    counterfactual_fills: dict = field(
        default_factory=lambda: json.loads(json.dumps(DEFAULT_COUNTERFACTUAL_FILLS))
    )
    explanation: ExplanationSpec = field(default_factory=ExplanationSpec)
    emissions: EmissionsSpec = field(default_factory=EmissionsSpec)
    rng_seed: int = 0
    sections: tuple[str, ...] = SECTIONS
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, obj: dict) -> "AuditConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        allowed = {
            "dataset", "lexicon", "gazetteer", "neutral_words", "identity_terms",
            "templates", "embeddings", "adapter", "threshold", "attributes", "swap",
            "fairness", "counterfactual_fills", "explanation", "emissions",
            "rng_seed", "sections", "output_dir",
        }
        _check_keys(obj, allowed, "config")

        dataset_path = None
        dataset_format = "csv"
        dataset = obj.get("dataset")
        if dataset is not None:
            if isinstance(dataset, str):
                dataset_path = dataset
            elif isinstance(dataset, dict):
                _check_keys(dataset, {"path", "format"}, "config.dataset")
                dataset_path = dataset.get("path")
                dataset_format = dataset.get("format", "csv")
            else:
                raise ConfigError("config.dataset must be a path or {path, format}")
        if dataset_format not in ("csv", "jsonl"):
            raise ConfigError(f"unknown dataset format {dataset_format!r}")

        adapter = None
        adapter_obj = obj.get("adapter")
        if adapter_obj is not None:
            if not isinstance(adapter_obj, dict):
                raise ConfigError("config.adapter must be an object")
            _check_keys(
                adapter_obj,
                {"kind", "location", "batch_size", "timeout", "max_retries"},
                "config.adapter",
            )
            try:
                adapter = AdapterConfig(**adapter_obj)
            except (AuditError, TypeError) as exc:
                raise ConfigError(f"config.adapter: {exc}") from exc

        sections = tuple(obj.get("sections", SECTIONS))
        for name in sections:
            if name not in SECTIONS:
                raise ConfigError(f"unknown section {name!r} (expected one of {SECTIONS})")

        threshold = float(obj.get("threshold", 0.5))
        if not 0.0 < threshold < 1.0:
            raise ConfigError(f"threshold must lie strictly between 0 and 1, got {threshold}")

        fills = obj.get("counterfactual_fills")
        if fills is None:
            fills = json.loads(json.dumps(DEFAULT_COUNTERFACTUAL_FILLS))
        elif not isinstance(fills, dict):
            raise ConfigError("config.counterfactual_fills must be an object")

        return cls(
            dataset_path=dataset_path,
            dataset_format=dataset_format,
            lexicon_path=obj.get("lexicon"),
            gazetteer_path=obj.get("gazetteer"),
            neutral_words_path=obj.get("neutral_words"),
            identity_terms_path=obj.get("identity_terms"),
            templates_path=obj.get("templates"),
            embeddings_path=obj.get("embeddings"),
            adapter=adapter,
            threshold=threshold,
            attributes=tuple(obj.get("attributes", ("gender", "religion"))),
            swap=_spec_from_dict(SwapSpec, obj.get("swap"), "config.swap"),
            fairness=_spec_from_dict(FairnessSpec, obj.get("fairness"), "config.fairness"),
            counterfactual_fills=fills,
            explanation=_spec_from_dict(
                ExplanationSpec, obj.get("explanation"), "config.explanation"
            ),
            emissions=_spec_from_dict(EmissionsSpec, obj.get("emissions"), "config.emissions"),
            rng_seed=int(obj.get("rng_seed", 0)),
            sections=sections,
            output_dir=obj.get("output_dir"),
        )

    def to_dict(self) -> dict:
        """Config echo embedded in the report; omits the output location."""
        return {
            "dataset": {"path": self.dataset_path, "format": self.dataset_format},
            "lexicon": self.lexicon_path,
            "gazetteer": self.gazetteer_path,
            "neutral_words": self.neutral_words_path,
            "identity_terms": self.identity_terms_path,
            "templates": self.templates_path,
            "embeddings": self.embeddings_path,
            "adapter": (
                None
                if self.adapter is None
                else {
                    "kind": self.adapter.kind,
                    "location": self.adapter.location,
                    "batch_size": self.adapter.batch_size,
                    "timeout": self.adapter.timeout,
                    "max_retries": self.adapter.max_retries,
                }
            ),
            "threshold": self.threshold,
            "attributes": list(self.attributes),
            "swap": {
                "attribute": self.swap.attribute,
                "sub_a": self.swap.sub_a,
                "sub_b": self.swap.sub_b,
                "rounding_decimals": self.swap.rounding_decimals,
            },
            "fairness": {
                "attribute": self.fairness.attribute,
                "reference": self.fairness.reference,
                "protected": self.fairness.protected,
            },
            "counterfactual_fills": self.counterfactual_fills,
            "explanation": {
                "mode": self.explanation.mode,
                "n_samples": self.explanation.n_samples,
                "kernel_width": self.explanation.kernel_width,
                "l2_lambda": self.explanation.l2_lambda,
                "method": self.explanation.method,
                "m_permutations": self.explanation.m_permutations,
                "max_tokens_per_comment": self.explanation.max_tokens_per_comment,
                "local_comment_ids": list(self.explanation.local_comment_ids),
                "max_local_comments": self.explanation.max_local_comments,
            },
            "emissions": {
                "power_draw_kw": self.emissions.power_draw_kw,
                "hours": self.emissions.hours,
                "pue": self.emissions.pue,
                "carbon_intensity_kg_per_kwh": self.emissions.carbon_intensity_kg_per_kwh,
            },
            "rng_seed": self.rng_seed,
            "sections": list(self.sections),
        }


def load_config(path: str | Path) -> AuditConfig:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: invalid JSON: {exc.msg}") from exc
    return AuditConfig.from_dict(obj)


# ---------------------------------------------------------------------------
# Canonical rendering
# ---------------------------------------------------------------------------

def _canonical(value):
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise ValueError("non-finite float in report")
        if value == 0:
            return 0.0
        return float(f"{value:.6g}")
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    raise TypeError(f"cannot canonicalize {type(value).__name__}")


def canonical_json(obj) -> str:
    """Sorted keys, floats at 6 significant digits: byte-stable across runs."""
    return json.dumps(_canonical(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _sha256_file(path: Path) -> str | None:
    try:
        return hashlib.sha256(path.read_bytes()).hexdigest()
    except OSError:
        return None


def _sha256_builtin(name: str) -> str:
    data = resources.files("textaudit").joinpath(f"data/{name}").read_bytes()
    return hashlib.sha256(data).hexdigest()


# ---------------------------------------------------------------------------
# The audit run
# ---------------------------------------------------------------------------

@dataclass
class AuditReport:
    version: str
    config: dict
    inputs: list[dict]
    sections: dict[str, dict]

    @property
    def any_failed(self) -> bool:
        return any(s.get("status") == "failed" for s in self.sections.values())

    def to_dict(self) -> dict:
        return {
            "tool": "textaudit",
            "version": self.version,
            "config": self.config,
            "inputs": self.inputs,
            "sections": self.sections,
        }


class _Skip(Exception):
    """Raised inside a section to record a skipped(reason) status."""


class _AuditRun:
    def __init__(self, config: AuditConfig):
        self.config = config
        self.cache = PredictionCache()
        self._memo: dict[str, object] = {}
        needs_corpus = any(s != "emissions" for s in config.sections)
        if needs_corpus and config.dataset_path is None:
            raise ConfigError("config.dataset is required for the requested sections")
        try:
            self.corpus = (
                load_dataset(config.dataset_path, config.dataset_format)
                if needs_corpus
                else None
            )
        except AuditError as exc:
            raise ConfigError(f"dataset: {exc}") from exc
        try:
            self.lexicon = (
                load_lexicon(config.lexicon_path) if config.lexicon_path else default_lexicon()
            )
            self.gazetteer = (
                load_gazetteer(config.gazetteer_path)
                if config.gazetteer_path
                else default_gazetteer()
            )
        except AuditError as exc:
            raise ConfigError(str(exc)) from exc
        self.adapter = open_adapter(config.adapter) if config.adapter else None

    # -- shared lazy resources ------------------------------------------------

    def annotated(self):
        if "annotated" not in self._memo:
            self._memo["annotated"] = annotate_corpus(self.corpus, self.lexicon, self.gazetteer)
        return self._memo["annotated"]

    def records(self) -> list[PredictionRecord]:
        if "records" not in self._memo:
            if self.adapter is None:
                raise _Skip("no adapter or predictions file configured")
            if not self.config.adapter.is_live:
                self._memo["records"] = load_predictions(
                    self.config.adapter.location, self.corpus
                )
            else:
                probs = predict_batch(
                    [c.text for c in self.corpus], self.adapter, self.cache
                )
                self._memo["records"] = [
                    PredictionRecord(comment_id=c.id, p_hateful=p)
                    for c, p in zip(self.corpus, probs)
                ]
        return self._memo["records"]

    def live_adapter(self):
        if self.adapter is None or not self.config.adapter.is_live:
            raise _Skip("live adapter required (subprocess or http)")
        return self.adapter

    def identity_terms(self):
        if self.config.identity_terms_path:
            return load_identity_terms(self.config.identity_terms_path)
        return default_identity_terms()

    def neutral_words(self):
        if self.config.neutral_words_path:
            return load_neutral_words(self.config.neutral_words_path)
        return default_neutral_words()

    def templates(self):
        if self.config.templates_path:
            return load_templates(self.config.templates_path)
        return default_templates()

    # -- sections --------------------------------------------------------------

    def section_performance(self) -> dict:
        report = performance_report(self.corpus, self.records(), self.config.threshold)
        return report.to_dict()

    def section_data_bias(self) -> dict:
        identity_rows = identity_term_frequencies(self.corpus, self.identity_terms())
        subgroup_rows = subgroup_reference_frequencies(self.annotated())
        self._memo["data_bias_rows"] = (identity_rows, subgroup_rows)
        return {
            "identity_terms": frequency_table_json(identity_rows),
            "subgroup_references": frequency_table_json(subgroup_rows),
        }

    def section_embedding_bias(self) -> dict:
        if not self.config.embeddings_path:
            raise _Skip("no embedding file")
        table = load_embeddings(self.config.embeddings_path)
        neutrals = self.neutral_words()
        results = [
            embedding_bias(neutrals, self.lexicon, attribute, table)
            for attribute in self.config.attributes
        ]
        self._memo["embedding_results"] = results
        return {"results": [r.to_dict() for r in results]}

    def section_subgroup_stats(self) -> dict:
        records = self.records()
        return {
            "per_attribute": [
                subgroup_probability_stats(self.annotated(), records, attribute).to_dict()
                for attribute in self.config.attributes
            ]
        }

    def section_swap_favor(self) -> dict:
        adapter = self.live_adapter()
        spec = self.config.swap
        table = aligned_swap_pairs(self.lexicon, spec.attribute, spec.sub_a, spec.sub_b)
        report = swap_favor_analysis(
            self.annotated(),
            adapter,
            table,
            spec.attribute,
            spec.sub_a,
            spec.sub_b,
            rounding_decimals=spec.rounding_decimals,
            cache=self.cache,
        )
        return report.to_dict()

    def section_counterfactual(self) -> dict:
        adapter = self.live_adapter()
        fills = self.config.counterfactual_fills
        if not fills:
            raise _Skip("no counterfactual fills configured")
        payload = []
        for attribute in sorted(fills):
            corpus = expand_templates(self.templates(), self.lexicon, attribute, fills[attribute])
            probs = predict_batch([row.text for row in corpus.rows], adapter, self.cache)
            stats = counterfactual_probability_stats(corpus, probs)
            cb = [
                counterfactual_bias(corpus, probs, reference).to_dict()
                for reference in sorted(fills[attribute])
            ]
            payload.append(
                {
                    "attribute": attribute,
                    "rows": [
                        {**row.to_dict(), "p_hateful": p}
                        for row, p in zip(corpus.rows, probs)
                    ],
                    "stats": [row.to_dict() for row in stats],
                    "cb": cb,
                }
            )
        return {"per_attribute": payload}

    def section_fairness_metrics(self) -> dict:
        spec = self.config.fairness
        metrics = fairness_metrics(
            self.annotated(),
            self.records(),
            spec.attribute,
            spec.reference,
            spec.protected,
            threshold=self.config.threshold,
        )
        return metrics.to_dict()

    def section_explanations(self) -> dict:
        adapter = self.live_adapter()
        spec = self.config.explanation
        payload: dict = {"mode": spec.mode}
        if spec.mode in ("local", "both"):
            ids = list(spec.local_comment_ids)
            if not ids:
                ids = [c.id for c in self.corpus][: spec.max_local_comments]
            locals_out = []
            for comment_id in ids:
                if comment_id not in self.corpus:
                    raise AuditError(f"unknown comment id for local explanation: {comment_id!r}")
                explanation = local_explain(
                    self.corpus.get(comment_id),
                    adapter,
                    n_samples=spec.n_samples,
                    kernel_width=spec.kernel_width,
                    l2_lambda=spec.l2_lambda,
                    rng_seed=self.config.rng_seed,
                    cache=self.cache,
                )
                locals_out.append(explanation.to_dict())
            payload["local"] = locals_out
        if spec.mode in ("global", "both"):
            importance = global_importance(
                self.corpus,
                adapter,
                method=spec.method,
                m_permutations=spec.m_permutations,
                max_tokens_per_comment=spec.max_tokens_per_comment,
                rng_seed=self.config.rng_seed,
                cache=self.cache,
            )
            self._memo["global_importance"] = importance
            payload["global"] = importance.to_dict()
        return payload

    def section_emissions(self) -> dict:
        spec = self.config.emissions
        return estimate_emissions(
            spec.power_draw_kw, spec.hours, spec.pue, spec.carbon_intensity_kg_per_kwh
        ).to_dict()

    # -- assembly ---------------------------------------------------------------

    def input_manifest(self) -> list[dict]:
        entries = []

        def add(name: str, path: str | None, builtin: str | None):
            if path is not None:
                entries.append(
                    {"name": name, "path": path, "sha256": _sha256_file(Path(path))}
                )
            elif builtin is not None:
                entries.append(
                    {
                        "name": name,
                        "path": f"builtin:{builtin}",
                        "sha256": _sha256_builtin(builtin),
                    }
                )

        config = self.config
        add("dataset", config.dataset_path, None)
        add("lexicon", config.lexicon_path, "default_lexicon.json")
        add("gazetteer", config.gazetteer_path, "default_gazetteer.json")
        add("identity_terms", config.identity_terms_path, "default_identity_terms.txt")
        add("neutral_words", config.neutral_words_path, "default_neutral_words.txt")
        add("templates", config.templates_path, "default_templates.json")
        add("embeddings", config.embeddings_path, None)
        if config.adapter is not None and config.adapter.kind == "predictions_file":
            add("predictions", config.adapter.location, None)
        return entries

    def run(self) -> AuditReport:
        handlers = {
            "performance": self.section_performance,
            "data_bias": self.section_data_bias,
            "embedding_bias": self.section_embedding_bias,
            "subgroup_stats": self.section_subgroup_stats,
            "swap_favor": self.section_swap_favor,
            "counterfactual": self.section_counterfactual,
            "fairness_metrics": self.section_fairness_metrics,
            "explanations": self.section_explanations,
            "emissions": self.section_emissions,
        }
        sections: dict[str, dict] = {}
        for name in SECTIONS:
            if name not in self.config.sections:
                continue
            try:
                sections[name] = {"status": "computed", "data": handlers[name]()}
            except _Skip as skip:
                sections[name] = {"status": "skipped", "reason": str(skip)}
            except Exception as exc:  # section isolation: never abort the run
                sections[name] = {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
        return AuditReport(
            version=__version__,
            config=self.config.to_dict(),
            inputs=self.input_manifest(),
            sections=sections,
        )

    def write_outputs(self, report: AuditReport, out_dir: str | Path) -> None:
        out = Path(out_dir)
        _atomic_write(out / "report.json", render_report(report, "json"))
        _atomic_write(out / "report.md", render_report(report, "markdown"))
        if self.corpus is not None and "annotated" in self._memo:
            _atomic_write(out / "annotations.jsonl", annotations_to_jsonl(self.annotated()))
        if "data_bias_rows" in self._memo:
            identity_rows, subgroup_rows = self._memo["data_bias_rows"]
            _atomic_write(out / "data_bias_identity_terms.csv", frequency_table_csv(identity_rows))
            _atomic_write(
                out / "data_bias_subgroup_references.csv", frequency_table_csv(subgroup_rows)
            )
        if "embedding_results" in self._memo:
            _atomic_write(
                out / "embedding_bias.csv", embedding_bias_csv(self._memo["embedding_results"])
            )
        if "global_importance" in self._memo:
            _atomic_write(out / "global_importance.csv", self._memo["global_importance"].to_csv())


def run_audit(config: AuditConfig) -> AuditReport:
    """Execute every requested section and (if configured) write the outputs.

    Only configuration problems raise; anything that goes wrong inside a
    section is captured as that section's failed(error) status. Output files
    are written atomically into ``config.output_dir``.
    """
    run = _AuditRun(config)
    report = run.run()
    if config.output_dir:
        run.write_outputs(report, config.output_dir)
    return report


# ---------------------------------------------------------------------------
# Markdown rendering
# ---------------------------------------------------------------------------

def _md_table(headers: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(headers) + " |", "|" + "---|" * len(headers)]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return lines


def _fmt(value, digits: int = 4) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def _pct(value) -> str:
    return "n/a" if value is None else f"{100.0 * value:.1f}%"


def _md_performance(data: dict) -> list[str]:
    rows = []
    for name, key in (("Not-hateful", "not-hateful"), ("Hateful", "hateful")):
        m = data["per_class"][key]
        rows.append([name, _fmt(m["precision"], 2), _fmt(m["recall"], 2), _fmt(m["f1"], 2), str(m["support"])])
    for name, key in (("Macro Avg.", "macro"), ("Weighted Avg.", "weighted")):
        m = data[key]
        rows.append([name, _fmt(m["precision"], 2), _fmt(m["recall"], 2), _fmt(m["f1"], 2), str(m["support"])])
    lines = _md_table(["", "Precision", "Recall", "F1-Score", "Support"], rows)
    lines.append("")
    lines.append(f"Accuracy: {data['accuracy']:.2f} at threshold {data['threshold']:.2f}.")
    if data["zero_division_flags"]:
        lines.append(f"Zero-denominator metrics reported as 0: {', '.join(data['zero_division_flags'])}.")
    return lines


def _md_frequency_table(rows: list[dict], key_header: str) -> list[str]:
    return _md_table(
        [key_header, "Hateful %", "Not-hateful %", "Overall %"],
        [
            [r["key"], _fmt(r["hateful_pct"]), _fmt(r["nothateful_pct"]), _fmt(r["overall_pct"])]
            for r in rows
        ],
    )


def _md_data_bias(data: dict) -> list[str]:
    lines = ["### Identity term frequency", ""]
    lines += _md_frequency_table(data["identity_terms"], "Term")
    lines += ["", "### Protected attribute reference frequency", ""]
    if data["subgroup_references"]:
        lines += _md_frequency_table(data["subgroup_references"], "Attribute/Subgroup")
    else:
        lines.append("No subgroup references found.")
    return lines


def _md_embedding_bias(data: dict) -> list[str]:
    lines = []
    for result in data["results"]:
        lines.append(f"### {result['attribute']}")
        lines.append("")
        lines += _md_table(
            ["Subgroup A", "Subgroup B", "MAE", "RMSE"],
            [
                [p["subgroup_a"], p["subgroup_b"], _fmt(p["mae"]), _fmt(p["rmse"])]
                for p in result["pairwise"]
            ],
        )
        lines.append("")
        lines.append(f"AMAE = {_fmt(result['amae'])}, ARMSE = {_fmt(result['armse'])}.")
        if result["skipped_terms"]:
            lines.append(f"Skipped terms (OOV or multi-token): {len(result['skipped_terms'])}.")
        lines.append("")
    return lines


def _md_stats_rows(rows: list[dict]) -> list[str]:
    return _md_table(
        ["Actual Comment Type", "Subgroup", "Avg. Predicted Probability", "N"],
        [
            [r["actual"].capitalize(), r["subgroup"].capitalize(), _pct(r["mean_p_hateful"]), str(r["n"])]
            for r in rows
        ],
    )


def _md_subgroup_stats(data: dict) -> list[str]:
    lines = []
    for block in data["per_attribute"]:
        lines.append(f"### {block['attribute']}")
        lines.append("")
        lines += _md_stats_rows(block["rows"])
        lines.append("")
    return lines


def _md_swap_favor(data: dict) -> list[str]:
    lines = _md_table(
        ["Outcome", "Fraction"],
        [
            [f"favors {data['sub_a']}", _fmt(data["fraction_favor_a"])],
            [f"favors {data['sub_b']}", _fmt(data["fraction_favor_b"])],
            ["no change", _fmt(data["fraction_no_change"])],
        ],
    )
    lines.append("")
    lines.append(
        f"{data['n_swapped']} comments swapped on attribute {data['attribute']} "
        f"({data['sub_a']} vs {data['sub_b']}), probabilities rounded to "
        f"{data['rounding_decimals']} decimal places."
    )
    return lines


def _md_counterfactual(data: dict) -> list[str]:
    lines = []
    for block in data["per_attribute"]:
        lines.append(f"### {block['attribute']}")
        lines.append("")
        lines += _md_stats_rows(block["stats"])
        lines.append("")
        lines += _md_table(
            ["Reference Subgroup", "CB total", "CB mean", "Groups"],
            [
                [cb["reference"], f"{cb['cb_total']:.4f}", f"{cb['cb_mean']:.4f}", str(cb["n_examples"])]
                for cb in block["cb"]
            ],
        )
        lines.append("")
        lines.append("Positive CB favors the reference subgroup.")
        lines.append("")
    return lines


def _md_fairness(data: dict) -> list[str]:
    rows = []
    for name, value in data["values"].items():
        note = data["not_computable"].get(name, "")
        rows.append([name, _fmt(value), note])
    lines = _md_table(["Metric", "Reference - Protected", "Notes"], rows)
    lines.append("")
    lines.append(
        f"Attribute {data['attribute']}: reference {data['reference']}, protected "
        f"{data['protected']}, threshold {data['threshold']:.2f}."
    )
    return lines


def _md_explanations(data: dict) -> list[str]:
    lines = []
    if "global" in data:
        lines.append(f"### Global token importance ({data['global']['method']})")
        lines.append("")
        top = data["global"]["rows"][:15]
        lines += _md_table(
            ["Token", "Mean effect", "Mean |effect|", "Support"],
            [
                [r["token"], _fmt(r["mean_effect"]), _fmt(r["mean_abs_effect"]), str(r["support"])]
                for r in top
            ],
        )
        lines.append("")
    if "local" in data:
        lines.append("### Local explanations")
        lines.append("")
        for item in data["local"]:
            weights = sorted(item["token_weights"], key=lambda tw: -abs(tw[1]))[:5]
            rendered = ", ".join(f"{t}: {w:+.3f}" for t, w in weights)
            lines.append(
                f"- `{item['comment_id']}` (R2 {item['surrogate_fit_r2']:.3f}): {rendered}"
            )
        lines.append("")
    return lines


def _md_emissions(data: dict) -> list[str]:
    return [
        f"{data['power_draw_kw']} kW x {data['hours']} h x PUE {data['pue']} x "
        f"{data['carbon_intensity_kg_per_kwh']} kgCO2eq/kWh = "
        f"**{data['co2eq_kg']:.4f} kg CO2eq**."
    ]


_SECTION_TITLES = {
    "performance": "Technical Performance",
    "data_bias": "Data Bias",
    "embedding_bias": "Embedding Bias",
    "subgroup_stats": "Subgroup Probability Statistics",
    "swap_favor": "Swapped-Identity Favor Analysis",
    "counterfactual": "Counterfactual Assessment",
    "fairness_metrics": "Classification Fairness Metrics",
    "explanations": "Explanations",
    "emissions": "Training Emissions Estimate",
}

_SECTION_RENDERERS = {
    "performance": _md_performance,
    "data_bias": _md_data_bias,
    "embedding_bias": _md_embedding_bias,
    "subgroup_stats": _md_subgroup_stats,
    "swap_favor": _md_swap_favor,
    "counterfactual": _md_counterfactual,
    "fairness_metrics": _md_fairness,
    "explanations": _md_explanations,
    "emissions": _md_emissions,
}


def render_report(report: AuditReport, format: str = "json") -> str:
    if format == "json":
        return canonical_json(report.to_dict())
    if format != "markdown":
        raise AuditError(f"unknown report format {format!r}")

    lines = ["# Classifier Audit Report", ""]
    lines.append(f"textaudit {report.version}")
    lines.append("")
    lines.append("## Inputs")
    lines.append("")
    lines += _md_table(
        ["Input", "Path", "SHA-256"],
        [
            [entry["name"], entry["path"], (entry["sha256"] or "missing")[:16]]
            for entry in report.inputs
        ],
    )
    lines.append("")
    for name in SECTIONS:
        if name not in report.sections:
            continue
        section = report.sections[name]
        lines.append(f"## {_SECTION_TITLES[name]}")
        lines.append("")
        if section["status"] == "skipped":
            lines.append(f"_Skipped: {section['reason']}_")
        elif section["status"] == "failed":
            lines.append(f"_Failed: {section['error']}_")
        else:
            lines += _SECTION_RENDERERS[name](section["data"])
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"
