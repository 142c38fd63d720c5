"""Command line entry point.

`textaudit audit --config audit.json --out results/` runs the full audit;
every assessment is also its own subcommand so an assessor can iterate on
one axis at a time. Flags override the matching config fields. Exit codes:
0 success, 1 configuration error, 2 at least one section failed.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError
from .report import SECTIONS, AuditConfig, run_audit

COMMAND_SECTIONS = {
    "audit": list(SECTIONS),
    "perf": ["performance"],
    "data-bias": ["data_bias"],
    "embed-bias": ["embedding_bias"],
    "class-bias": ["subgroup_stats", "fairness_metrics"],
    "swap": ["swap_favor"],
    "counterfactual": ["counterfactual"],
    "explain-local": ["explanations"],
    "explain-global": ["explanations"],
    "emissions": ["emissions"],
}


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (flags override its fields)")
    parser.add_argument("--out", help="output directory for report.json/report.md/CSVs")
    parser.add_argument("--dataset", help="labeled comments file")
    parser.add_argument("--dataset-format", choices=["csv", "jsonl"])
    parser.add_argument("--lexicon", help="attribute lexicon JSON (default: built-in)")
    parser.add_argument("--gazetteer", help="gazetteer JSON (default: built-in)")
    parser.add_argument("--neutral-words", help="neutral word list (default: built-in)")
    parser.add_argument("--identity-terms", help="identity term list (default: built-in)")
    parser.add_argument("--templates", help="counterfactual template JSON (default: built-in)")
    parser.add_argument("--embeddings", help="embedding text file")
    parser.add_argument("--adapter-kind", choices=["predictions_file", "subprocess", "http"])
    parser.add_argument("--adapter-location", help="path, command line, or base URL")
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--timeout", type=float)
    parser.add_argument("--max-retries", type=int)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--attributes", help="comma-separated protected attributes")
    parser.add_argument("--seed", type=int, dest="rng_seed")
    parser.add_argument("--swap-attribute")
    parser.add_argument("--swap-a")
    parser.add_argument("--swap-b")
    parser.add_argument("--rounding-decimals", type=int)
    parser.add_argument("--fair-attribute")
    parser.add_argument("--reference")
    parser.add_argument("--protected")
    parser.add_argument("--method", choices=["occlusion", "sampled_shapley"])
    parser.add_argument("--n-samples", type=int)
    parser.add_argument("--kernel-width", type=float)
    parser.add_argument("--l2-lambda", type=float)
    parser.add_argument("--m-permutations", type=int)
    parser.add_argument("--max-tokens-per-comment", type=int)
    parser.add_argument(
        "--comment-id", action="append", help="comment to explain locally (repeatable)"
    )
    parser.add_argument("--power-draw-kw", type=float)
    parser.add_argument("--hours", type=float)
    parser.add_argument("--pue", type=float)
    parser.add_argument("--carbon-intensity", type=float)


def _set(data: dict, path: tuple[str, ...], value) -> None:
    if value is None:
        return
    here = data
    for key in path[:-1]:
        node = here.get(key)
        if not isinstance(node, dict):
            node = {}
            here[key] = node
        here = node
    here[path[-1]] = value


def build_config(args: argparse.Namespace) -> AuditConfig:
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config}: invalid JSON: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    else:
        data = {}

    _set(data, ("dataset", "path"), args.dataset)
    _set(data, ("dataset", "format"), args.dataset_format)
    for flag, key in (
        ("lexicon", "lexicon"),
        ("gazetteer", "gazetteer"),
        ("neutral_words", "neutral_words"),
        ("identity_terms", "identity_terms"),
        ("templates", "templates"),
        ("embeddings", "embeddings"),
    ):
        _set(data, (key,), getattr(args, flag))
    _set(data, ("adapter", "kind"), args.adapter_kind)
    _set(data, ("adapter", "location"), args.adapter_location)
    _set(data, ("adapter", "batch_size"), args.batch_size)
    _set(data, ("adapter", "timeout"), args.timeout)
    _set(data, ("adapter", "max_retries"), args.max_retries)
    _set(data, ("threshold",), args.threshold)
    if args.attributes:
        _set(data, ("attributes",), [a.strip() for a in args.attributes.split(",") if a.strip()])
    _set(data, ("rng_seed",), args.rng_seed)
    _set(data, ("swap", "attribute"), args.swap_attribute)
    _set(data, ("swap", "sub_a"), args.swap_a)
    _set(data, ("swap", "sub_b"), args.swap_b)
    _set(data, ("swap", "rounding_decimals"), args.rounding_decimals)
    _set(data, ("fairness", "attribute"), args.fair_attribute)
    _set(data, ("fairness", "reference"), args.reference)
    _set(data, ("fairness", "protected"), args.protected)
    _set(data, ("explanation", "method"), args.method)
    _set(data, ("explanation", "n_samples"), args.n_samples)
    _set(data, ("explanation", "kernel_width"), args.kernel_width)
    _set(data, ("explanation", "l2_lambda"), args.l2_lambda)
    _set(data, ("explanation", "m_permutations"), args.m_permutations)
    _set(data, ("explanation", "max_tokens_per_comment"), args.max_tokens_per_comment)
    _set(data, ("explanation", "local_comment_ids"), args.comment_id)
    _set(data, ("emissions", "power_draw_kw"), args.power_draw_kw)
    _set(data, ("emissions", "hours"), args.hours)
    _set(data, ("emissions", "pue"), args.pue)
    _set(data, ("emissions", "carbon_intensity_kg_per_kwh"), args.carbon_intensity)

    data["sections"] = COMMAND_SECTIONS[args.command]
    if args.command == "explain-local":
        _set(data, ("explanation", "mode"), "local")
    elif args.command == "explain-global":
        _set(data, ("explanation", "mode"), "global")
    _set(data, ("output_dir",), args.out)
    return AuditConfig.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="textaudit",
        description="Black-box fairness and explainability audit for binary text classifiers.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "audit": "run every assessment and write the full report",
        "perf": "technical performance report",
        "data-bias": "identity-term and subgroup-reference frequency tables",
        "embed-bias": "embedding-bias AMAE/ARMSE",
        "class-bias": "subgroup probability statistics and fairness metrics",
        "swap": "swapped-identity favor analysis",
        "counterfactual": "counterfactual templates and CB score",
        "explain-local": "local surrogate explanations",
        "explain-global": "global token importance",
        "emissions": "training emissions estimate",
    }
    for command, help_text in descriptions.items():
        sub = subparsers.add_parser(command, help=help_text)
        _add_common_options(sub)

    args = parser.parse_args(argv)
    try:
        config = build_config(args)
        report = run_audit(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    for name, section in report.sections.items():
        status = section["status"]
        detail = section.get("reason") or section.get("error") or ""
        suffix = f" ({detail})" if detail else ""
        print(f"{name}: {status}{suffix}")
    if config.output_dir:
        print(f"report written to {config.output_dir}/report.json")
    return 2 if report.any_failed else 0


if __name__ == "__main__":
    sys.exit(main())
