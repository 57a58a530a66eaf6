"""Command-line entry points: audit, explain and serve.

``audit`` is the deployment-mode path (data in, report out) with CI-gate
exit codes: 0 clean, 2 when any disparity or systemic-bias flag is raised,
1 on errors. ``explain`` emits plot-ready JSON for one instance or feature;
``serve`` starts the interactive what-if service.
"""

from __future__ import annotations

import argparse
import json
import sys

from .counterfactuals import config_for_dataset, find_counterfactuals
from .density import fit_density, prediction_confidence
from .errors import ArgumentError, AuditError
from .models import RemoteModel, make_model, predict_labels
from .report import SECTIONS, AuditOptions, build_audit_report, render_markdown
from .surrogates import SurrogateConfig, explain, ice_pd
from .tabular import Dataset, FeatureSchema, load_csv, load_schema_file

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FLAGGED = 2


def _add_data_arguments(parser):
    parser.add_argument("--data", required=True, help="dataset CSV path")
    parser.add_argument("--schema", help="schema JSON path (default: inferred)")
    parser.add_argument("--target", help="target column (required when inferring)")
    parser.add_argument("--protected", default="",
                        help="comma-separated protected feature names")
    parser.add_argument("--model", default="tree:max_depth=8",
                        help="builtin model spec, e.g. tree:max_depth=8 or knn:k=3")
    parser.add_argument("--remote-url", help="remote model endpoint (overrides --model)")
    parser.add_argument("--seed", type=int, default=42)


def _load(args) -> tuple[Dataset, object]:
    protected = tuple(p for p in args.protected.split(",") if p)
    if args.schema:
        schema = load_schema_file(args.schema)
        if protected:  # command line overrides the schema file
            schema = FeatureSchema(schema.columns, schema.target, frozenset(protected))
        dataset = load_csv(args.data, schema=schema)
    else:
        if not args.target:
            raise ArgumentError("--target is required when no --schema is given")
        dataset = load_csv(args.data, target=args.target, protected=protected)

    if args.remote_url:
        model = RemoteModel(args.remote_url, class_list=dataset.classes)
    else:
        model = make_model(args.model, seed=args.seed).fit(dataset)
    return dataset, model


def _emit(payload: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(payload)
    else:
        sys.stdout.write(payload)


def cmd_audit(args) -> int:
    dataset, model = _load(args)
    sections = tuple(args.section) if args.section else SECTIONS
    options = AuditOptions(
        seed=args.seed,
        tolerance=args.tolerance,
        positive_class=args.positive_class,
        sections=sections,
        model_spec="remote" if args.remote_url else args.model,
        data_path=args.data,
    )
    report = build_audit_report(dataset, model, options)
    if args.format == "md":
        _emit(render_markdown(report), args.out)
    else:
        _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_FLAGGED if report["body"]["gate"]["raised"] else EXIT_OK


def _instance_row(args, dataset: Dataset):
    if args.row is not None:
        row = json.loads(args.row)
        if not isinstance(row, list):
            raise ArgumentError("--row must be a JSON array of cell values")
        return dataset.schema.validate_row(row)
    index = args.instance if args.instance is not None else 0
    if not 0 <= index < len(dataset):
        raise ArgumentError(f"instance index {index} out of range [0, {len(dataset)})")
    return list(dataset.rows[index])


def _parse_grid(text, column):
    values = [v for v in text.split(",") if v != ""]
    if column.is_numeric:
        return [float(v) for v in values]
    return values


def cmd_explain(args) -> int:
    dataset, model = _load(args)

    if args.method == "counterfactual":
        instance = _instance_row(args, dataset)
        mode = "explicit" if args.target_class else "implicit"
        config = config_for_dataset(dataset, k=args.k, mode=mode,
                                    target_class=args.target_class,
                                    max_results=args.max_results)
        search = find_counterfactuals(model, instance, config)
        payload = {
            "method": "counterfactual",
            "instance": instance,
            "instance_class": predict_labels(model, [instance])[0],
            **search.to_json(),
            "sentences": [c.sentence() for c in search],
        }
    elif args.method == "surrogate":
        instance = _instance_row(args, dataset)
        config = SurrogateConfig(kind=args.kind, seed=args.seed,
                                 discretize=not args.no_discretize)
        explanation = explain(model, dataset, instance, config)
        payload = {"method": "surrogate", "instance": instance,
                   **explanation.to_json()}
    elif args.method == "ice-pd":
        if not args.feature:
            raise ArgumentError("--feature is required for ice-pd")
        column = dataset.schema.column(args.feature)
        if args.grid:
            grid = _parse_grid(args.grid, column)
        elif column.is_numeric:
            from .counterfactuals import default_grids
            grid = list(default_grids(dataset, [args.feature])[args.feature])
        else:
            grid = list(column.values)
        payload = {"method": "ice-pd",
                   **ice_pd(model, dataset, args.feature, grid).to_json()}
    elif args.method == "density":
        instance = _instance_row(args, dataset)
        estimator = fit_density(dataset, args.n)
        record = prediction_confidence(estimator, model, instance, args.threshold)
        payload = {"method": "density", "instance": instance, **record}
    else:
        raise ArgumentError(f"unknown method {args.method!r}")

    if args.format == "md" and args.method == "counterfactual":
        lines = [f"- {s}" for s in payload["sentences"]] or ["(no counterfactuals found)"]
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve
    config = ServiceConfig(
        host=args.host, port=args.port, data_path=args.data,
        schema_path=args.schema, target=args.target,
        protected=tuple(p for p in args.protected.split(",") if p),
        model_spec=args.model, remote_url=args.remote_url, seed=args.seed,
    )
    serve(config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fataudit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    audit = sub.add_parser("audit", help="run an audit and emit the report")
    _add_data_arguments(audit)
    audit.add_argument("--format", choices=("json", "md"), default="json")
    audit.add_argument("--tolerance", type=float, default=0.2)
    audit.add_argument("--positive-class")
    audit.add_argument("--section", action="append", choices=SECTIONS,
                       help="run only these sections (repeatable)")
    audit.add_argument("--out", help="write the report here instead of stdout")
    audit.set_defaults(func=cmd_audit)

    explain_cmd = sub.add_parser("explain", help="explain one instance or feature")
    _add_data_arguments(explain_cmd)
    explain_cmd.add_argument("--method", required=True,
                             choices=("counterfactual", "surrogate", "ice-pd", "density"))
    explain_cmd.add_argument("--instance", type=int, help="dataset row index")
    explain_cmd.add_argument("--row", help="inline JSON array of feature values")
    explain_cmd.add_argument("--feature", help="feature name (ice-pd)")
    explain_cmd.add_argument("--grid", help="comma-separated grid values (ice-pd)")
    explain_cmd.add_argument("--target-class", help="explicit counterfactual class")
    explain_cmd.add_argument("--k", type=int, default=2,
                             help="max changed features (counterfactual)")
    explain_cmd.add_argument("--max-results", type=int, default=10)
    explain_cmd.add_argument("--kind", choices=("ridge", "tree"), default="ridge")
    explain_cmd.add_argument("--no-discretize", action="store_true")
    explain_cmd.add_argument("--n", type=int, default=7, help="density neighbour index")
    explain_cmd.add_argument("--threshold", type=float, default=0.5)
    explain_cmd.add_argument("--format", choices=("json", "md"), default="json")
    explain_cmd.add_argument("--out")
    explain_cmd.set_defaults(func=cmd_explain)

    serve_cmd = sub.add_parser("serve", help="start the what-if HTTP service")
    _add_data_arguments(serve_cmd)
    serve_cmd.add_argument("--host", default="127.0.0.1")
    serve_cmd.add_argument("--port", type=int, default=8080)
    serve_cmd.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
