"""Audit report assembly: one deterministic JSON document, rendered to Markdown.

The report body is a pure function of (dataset, model, options); timestamps
and the config digest live in the metadata envelope so re-running with the
same inputs and seed reproduces the body byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

from . import __version__
from .counterfactuals import config_for_dataset, counterfactual_fairness
from .density import fit_density, flag_sparse_rows
from .errors import ArgumentError, AuditError
from .fairness import (FAIRNESS_CRITERIA, PERFORMANCE_METRICS, group_fairness,
                       performance_disparity, systemic_bias)
from .grouping import partition, representation_audit
from .models import predict_labels
from .surrogates import SurrogateConfig, explain, quartile_bins
from .tabular import Dataset, summarize

SECTIONS = ("data_summary", "representation", "systemic_bias", "fairness",
            "performance", "density", "counterfactual_fairness", "surrogates")


@dataclass(frozen=True)
class AuditOptions:
    """Everything that parametrises an audit run, digestible and serialisable."""

    seed: int = 42
    tolerance: float = 0.2
    positive_class: str | None = None
    sections: tuple[str, ...] = SECTIONS
    min_group_fraction: float = 0.05
    imbalance_ratio: float = 3.0
    density_n: int = 7
    density_threshold: float = 0.5
    cf_instances: int = 3
    cf_k: int = 2
    cf_max_results: int = 5
    model_spec: str = "tree:max_depth=8"
    data_path: str = ""

    def __post_init__(self):
        unknown = set(self.sections) - set(SECTIONS)
        if unknown:
            raise ArgumentError(f"unknown sections: {sorted(unknown)}")

    def digest(self) -> str:
        blob = json.dumps(
            {"version": __version__, **self.__dict__,
             "sections": list(self.sections)},
            sort_keys=True, separators=(",", ":"),
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _positive_class(dataset: Dataset, options: AuditOptions) -> str:
    if options.positive_class is not None:
        if options.positive_class not in dataset.classes:
            raise ArgumentError(
                f"positive class {options.positive_class!r} not among {dataset.classes}"
            )
        return options.positive_class
    return dataset.classes[-1]


def _protected_partitions(dataset: Dataset):
    """Partition each protected feature; numeric ones bin at their quartiles."""
    parts = []
    for name in sorted(dataset.schema.protected):
        column = dataset.schema.column(name)
        if column.is_numeric:
            cuts = sorted(set(quartile_bins(dataset, name)))
            parts.append(partition(dataset, name, cuts))
        else:
            parts.append(partition(dataset, name))
    return parts


def build_audit_report(dataset: Dataset, model, options: AuditOptions) -> dict:
    """Run the selected sections and assemble the full report document."""
    selected = set(options.sections)
    protected = sorted(dataset.schema.protected)
    predictions = None

    def need_predictions():
        nonlocal predictions
        if predictions is None:
            predictions = predict_labels(model, dataset.rows)
        return predictions

    def skipped(reason):
        return {"skipped": reason}

    sections = {}
    gate_flags = {"fairness": 0, "performance": 0, "systemic_bias": 0}

    if "data_summary" in selected:
        sections["data_summary"] = summarize(dataset)
    else:
        sections["data_summary"] = skipped("not selected")

    if "representation" not in selected:
        sections["representation"] = skipped("not selected")
    elif not protected:
        sections["representation"] = skipped("no protected features configured")
    else:
        features = []
        for part in _protected_partitions(dataset):
            records = representation_audit(part, dataset.labels,
                                           options.min_group_fraction,
                                           options.imbalance_ratio)
            features.append({**part.to_json(), "groups": records})
        sections["representation"] = {
            "min_group_fraction": options.min_group_fraction,
            "imbalance_ratio": options.imbalance_ratio,
            "features": features,
        }

    if "systemic_bias" not in selected:
        sections["systemic_bias"] = skipped("not selected")
    elif not protected:
        sections["systemic_bias"] = skipped("no protected features configured")
    elif len(protected) >= len(dataset.schema.columns):
        sections["systemic_bias"] = skipped("every feature is protected")
    else:
        pairs = systemic_bias(dataset, protected)
        gate_flags["systemic_bias"] = len(pairs)
        sections["systemic_bias"] = {
            "protected": protected,
            "pairs": [list(p) for p in pairs],
            "count": len(pairs),
        }

    if "fairness" not in selected:
        sections["fairness"] = skipped("not selected")
    elif not protected:
        sections["fairness"] = skipped("no protected features configured")
    else:
        positive = _positive_class(dataset, options)
        features = []
        for part in _protected_partitions(dataset):
            criteria = {}
            for criterion in FAIRNESS_CRITERIA:
                matrix = group_fairness(part, dataset.labels, need_predictions(),
                                        criterion, positive, options.tolerance)
                gate_flags["fairness"] += matrix.flag_count
                criteria[criterion] = matrix.to_json()
            features.append({"feature": part.feature, "criteria": criteria})
        sections["fairness"] = {
            "tolerance": options.tolerance,
            "positive_class": positive,
            "features": features,
        }

    if "performance" not in selected:
        sections["performance"] = skipped("not selected")
    elif not protected:
        sections["performance"] = skipped("no protected features configured")
    else:
        positive = _positive_class(dataset, options)
        features = []
        for part in _protected_partitions(dataset):
            metrics = {}
            for metric in PERFORMANCE_METRICS:
                matrix = performance_disparity(part, dataset.labels, need_predictions(),
                                               metric, positive, options.tolerance)
                gate_flags["performance"] += matrix.flag_count
                metrics[metric] = matrix.to_json()
            features.append({"feature": part.feature, "metrics": metrics})
        sections["performance"] = {
            "tolerance": options.tolerance,
            "positive_class": positive,
            "features": features,
        }

    estimator = None
    if "density" not in selected:
        sections["density"] = skipped("not selected")
    elif len(dataset) <= options.density_n:
        sections["density"] = skipped(
            f"needs more than n={options.density_n} rows, dataset has {len(dataset)}"
        )
    else:
        estimator = fit_density(dataset, options.density_n)
        flagged = flag_sparse_rows(estimator, dataset.rows, options.density_threshold)
        sections["density"] = {
            "n": options.density_n,
            "threshold": options.density_threshold,
            "reference_size": len(dataset),
            "flagged": flagged,
        }

    if "counterfactual_fairness" not in selected:
        sections["counterfactual_fairness"] = skipped("not selected")
    elif not protected:
        sections["counterfactual_fairness"] = skipped("no protected features configured")
    elif len(dataset) == 0:
        sections["counterfactual_fairness"] = skipped("empty dataset")
    else:
        config = config_for_dataset(dataset, k=options.cf_k,
                                    max_results=options.cf_max_results)
        instances = []
        for i in range(min(options.cf_instances, len(dataset))):
            verdict = counterfactual_fairness(model, list(dataset.rows[i]),
                                              protected, config)
            instances.append({
                "row": i,
                **verdict.to_json(),
                "sentences": [c.sentence() for c in verdict.counterfactuals],
            })
        sections["counterfactual_fairness"] = {
            "k": options.cf_k,
            "protected": protected,
            "instances": instances,
        }

    if "surrogates" not in selected:
        sections["surrogates"] = skipped("not selected")
    elif len(dataset) == 0:
        sections["surrogates"] = skipped("empty dataset")
    else:
        instance = list(dataset.rows[0])
        entries = {}
        for kind in ("ridge", "tree"):
            config = SurrogateConfig(kind=kind, seed=options.seed)
            entries[kind] = explain(model, dataset, instance, config).to_json()
        sections["surrogates"] = {"row": 0, "explanations": entries}

    total_flags = sum(gate_flags.values())
    body = {
        "dataset": {
            "rows": len(dataset),
            "features": len(dataset.schema.columns),
            "target": dataset.schema.target,
            "protected": protected,
            "classes": dataset.classes,
        },
        "sections": sections,
        "gate": {"flags": total_flags, "details": gate_flags,
                 "raised": total_flags > 0},
    }
    metadata = {
        "toolkit_version": __version__,
        "seed": options.seed,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "config_digest": options.digest(),
        "model_spec": options.model_spec,
        "data_path": options.data_path,
    }
    return {"metadata": metadata, "body": body}


def _markdown_matrix(matrix: dict) -> list[str]:
    groups = matrix["groups"]
    lines = ["| | " + " | ".join(groups) + " |",
             "|---" * (len(groups) + 1) + "|"]
    for i, g in enumerate(groups):
        cells = []
        for j in range(len(groups)):
            value = matrix["values"][i][j]
            if matrix["undefined"][i][j]:
                cells.append("n/a")
            elif matrix["flags"][i][j]:
                cells.append(f"**{value:.3f}**")
            else:
                cells.append(f"{value:.3f}")
        lines.append(f"| {g} | " + " | ".join(cells) + " |")
    return lines


def render_markdown(report: dict) -> str:
    """Markdown view generated purely from the JSON report document."""
    meta = report["metadata"]
    body = report["body"]
    out = ["# Audit report", "",
           f"- toolkit version: {meta['toolkit_version']}",
           f"- generated at: {meta['generated_at']}",
           f"- seed: {meta['seed']}",
           f"- config digest: `{meta['config_digest']}`",
           f"- model: `{meta['model_spec']}`",
           f"- dataset: `{meta['data_path']}` "
           f"({body['dataset']['rows']} rows, {body['dataset']['features']} features)",
           ""]
    gate = body["gate"]
    state = "RAISED" if gate["raised"] else "clear"
    out += [f"## Gate: {state} ({gate['flags']} flags)", ""]

    for name in SECTIONS:
        section = body["sections"][name]
        out.append(f"## {name.replace('_', ' ').title()}")
        out.append("")
        if "skipped" in section:
            out += [f"_Skipped: {section['skipped']}_", ""]
            continue
        if name == "data_summary":
            out.append(f"- rows: {section['rows']}")
            dist = ", ".join(f"{k}: {v:.3f}"
                             for k, v in section["class_distribution"].items())
            out += [f"- class distribution: {dist}", ""]
        elif name == "representation":
            for feat in section["features"]:
                out.append(f"### {feat['feature']}")
                for g in feat["groups"]:
                    flags = []
                    if g["sampling_bias"]:
                        flags.append("sampling-bias")
                    if g["class_imbalance"]:
                        flags.append("class-imbalance")
                    note = f" [{', '.join(flags)}]" if flags else ""
                    out.append(f"- {g['label']}: {g['count']} rows{note}")
                out.append("")
        elif name == "systemic_bias":
            out += [f"- conflicting pairs: {section['count']}", ""]
        elif name in ("fairness", "performance"):
            key = "criteria" if name == "fairness" else "metrics"
            for feat in section["features"]:
                for crit, matrix in feat[key].items():
                    out.append(f"### {feat['feature']} / {crit}")
                    out += _markdown_matrix(matrix)
                    out.append("")
        elif name == "density":
            out.append(f"- n = {section['n']}, threshold = {section['threshold']}")
            for f in section["flagged"]:
                out.append(f"- row {f['row']}: score {f['score']:.3f}")
            out.append("")
        elif name == "counterfactual_fairness":
            for inst in section["instances"]:
                out.append(f"### row {inst['row']}: {inst['verdict']}")
                for sentence in inst["sentences"]:
                    out.append(f"- {sentence}")
                out.append("")
        elif name == "surrogates":
            for kind, exp in section["explanations"].items():
                out.append(f"### {kind} (fidelity {exp['fidelity']:.3f})")
                if exp.get("linear"):
                    weights = sorted(exp["linear"]["weights"].items(),
                                     key=lambda kv: -abs(kv[1]))
                    for fname, weight in weights[:8]:
                        out.append(f"- {fname}: {weight:+.4f}")
                if exp.get("tree"):
                    for pred in exp["tree"]["rule"]:
                        out.append(f"- {pred['feature']} {pred['op']} {pred['value']}")
                out.append("")
    return "\n".join(out).rstrip() + "\n"
