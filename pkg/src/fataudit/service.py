"""HTTP what-if service over one immutable dataset + model pair.

Thin adapters only: every endpoint delegates to the library and returns its
JSON form plus the process-wide config digest, so payloads are directly
comparable with direct library calls.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import __version__
from .counterfactuals import (CounterfactualConfig, default_grids,
                              find_counterfactuals, score_feasibility)
from .density import fit_density, prediction_confidence
from .errors import ArgumentError, AuditError
from .fairness import group_fairness, performance_disparity
from .grouping import partition
from .models import RemoteModel, make_model, predict_labels, try_predict_proba
from .surrogates import SurrogateConfig, explain, ice_pd, quartile_bins
from .tabular import Dataset, FeatureSchema, load_csv, load_schema_file, summarize

STATIC_DIR = Path(__file__).parent / "static"


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    data_path: str = ""
    schema_path: str | None = None
    target: str | None = None
    protected: tuple[str, ...] = ()
    model_spec: str = "tree:max_depth=8"
    remote_url: str | None = None
    seed: int = 42
    density_n: int = 7

    def digest(self) -> str:
        blob = json.dumps({"version": __version__, **self.__dict__,
                           "protected": list(self.protected)},
                          sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _load_artifacts(config: ServiceConfig):
    if config.schema_path:
        schema = load_schema_file(config.schema_path)
        if config.protected:
            schema = FeatureSchema(schema.columns, schema.target,
                                   frozenset(config.protected))
        dataset = load_csv(config.data_path, schema=schema)
    else:
        if not config.target:
            raise ArgumentError("service needs a schema file or a target column")
        dataset = load_csv(config.data_path, target=config.target,
                           protected=config.protected)
    if config.remote_url:
        model = RemoteModel(config.remote_url, class_list=dataset.classes)
    else:
        model = make_model(config.model_spec, seed=config.seed).fit(dataset)
    return dataset, model


def _counterfactual_config(dataset: Dataset, spec: dict | None) -> CounterfactualConfig:
    spec = dict(spec or {})
    searchable = tuple(spec.get("searchable") or dataset.schema.names)
    grids = {name: tuple(values)
             for name, values in (spec.get("grids") or {}).items()}
    defaults = default_grids(dataset, searchable)
    for name in searchable:
        grids.setdefault(name, defaults[name])
    return CounterfactualConfig(
        schema=dataset.schema,
        grids=grids,
        searchable=searchable,
        required=tuple(spec.get("required") or ()),
        k=int(spec.get("k", 2)),
        mode=spec.get("mode", "implicit"),
        target_class=spec.get("target_class"),
        max_results=int(spec.get("max_results", 10)),
    )


def _surrogate_config(spec: dict | None, seed: int) -> SurrogateConfig:
    spec = dict(spec or {})
    # absent kernel_width keeps the library default; explicit null disables it
    if "kernel_width" in spec:
        width = None if spec["kernel_width"] is None else float(spec["kernel_width"])
    else:
        width = SurrogateConfig.kernel_width
    return SurrogateConfig(
        kind=spec.get("kind", "ridge"),
        ridge_lambda=float(spec.get("ridge_lambda", 1.0)),
        max_depth=int(spec.get("max_depth", 3)),
        sampler=spec.get("sampler", "normal"),
        n_samples=int(spec.get("n_samples", 1000)),
        scale=float(spec.get("scale", 1.0)),
        alpha=float(spec.get("alpha", 1.0)),
        kernel_width=width,
        discretize=bool(spec.get("discretize", True)),
        top_m=(None if spec.get("top_m") is None else int(spec["top_m"])),
        seed=int(spec.get("seed", seed)),
        locality=spec.get("locality", "local"),
    )


def _feature_partition(dataset: Dataset, feature: str):
    column = dataset.schema.column(feature)
    if column.is_numeric:
        return partition(dataset, feature, sorted(set(quartile_bins(dataset, feature))))
    return partition(dataset, feature)


def create_app(dataset: Dataset, model, *, digest: str, seed: int = 42,
               density_n: int = 7) -> FastAPI:
    """Build the FastAPI app over already-loaded immutable artifacts."""
    app = FastAPI(title="fataudit what-if service", version=__version__)
    predictions = predict_labels(model, dataset.rows) if len(dataset) else []
    estimator = fit_density(dataset, density_n) if len(dataset) > density_n else None

    @app.exception_handler(AuditError)
    async def _audit_error(request: Request, exc: AuditError):
        return JSONResponse(status_code=400,
                            content={"error": str(exc), "digest": digest})

    def reply(payload: dict) -> dict:
        return {**payload, "digest": digest}

    @app.get("/api/health")
    def health():
        return reply({"status": "ok", "version": __version__})

    @app.get("/api/dataset/summary")
    def dataset_summary():
        return reply({
            "summary": summarize(dataset),
            "schema": dataset.schema.to_json(),
            "classes": dataset.classes,
        })

    @app.get("/api/instance/{index}")
    def instance(index: int):
        if not 0 <= index < len(dataset):
            raise ArgumentError(f"instance index {index} out of range")
        return reply({
            "index": index,
            "row": list(dataset.rows[index]),
            "label": dataset.labels[index],
            "prediction": predictions[index],
        })

    @app.post("/api/predict")
    def predict(payload: dict = Body(...)):
        row = dataset.schema.validate_row(payload.get("row", []))
        result = {"prediction": predict_labels(model, [row])[0]}
        proba = try_predict_proba(model, [row])
        if proba is not None:
            classes, matrix = proba
            result["probabilities"] = dict(zip(classes, matrix[0]))
        if estimator is not None:
            record = prediction_confidence(estimator, model, row)
            result["density_score"] = record["density_score"]
            result["robust"] = record["robust"]
        return reply(result)

    @app.post("/api/counterfactuals")
    def counterfactuals(payload: dict = Body(...)):
        row = dataset.schema.validate_row(payload.get("row", []))
        config = _counterfactual_config(dataset, payload.get("config"))
        search = find_counterfactuals(model, row, config)
        results = list(search.counterfactuals)
        if estimator is not None:
            results = score_feasibility(results, estimator)
        return reply({
            "instance_class": predict_labels(model, [row])[0],
            "counterfactuals": [c.to_json() for c in results],
            "sentences": [c.sentence() for c in results],
            "diagnostic": search.diagnostic,
        })

    @app.post("/api/fairness")
    def fairness(payload: dict = Body(...)):
        feature = payload.get("feature")
        criterion = payload.get("criterion", "demographic_parity")
        tolerance = float(payload.get("tolerance", 0.2))
        positive = payload.get("positive_class", dataset.classes[-1])
        part = _feature_partition(dataset, feature)
        matrix = group_fairness(part, dataset.labels, predictions, criterion,
                                positive, tolerance)
        return reply({"matrix": matrix.to_json(), "positive_class": positive})

    @app.post("/api/performance")
    def performance(payload: dict = Body(...)):
        feature = payload.get("feature")
        metric = payload.get("metric", "accuracy")
        tolerance = float(payload.get("tolerance", 0.2))
        positive = payload.get("positive_class", dataset.classes[-1])
        part = _feature_partition(dataset, feature)
        matrix = performance_disparity(part, dataset.labels, predictions, metric,
                                       positive, tolerance)
        return reply({"matrix": matrix.to_json(), "positive_class": positive})

    @app.post("/api/surrogate")
    def surrogate(payload: dict = Body(...)):
        config = _surrogate_config(payload.get("config"), seed)
        row = payload.get("row")
        if row is not None:
            row = dataset.schema.validate_row(row)
        explanation = explain(model, dataset, row, config)
        return reply({"explanation": explanation.to_json()})

    @app.post("/api/ice-pd")
    def ice_pd_endpoint(payload: dict = Body(...)):
        feature = payload.get("feature")
        grid = payload.get("grid")
        if not grid:
            column = dataset.schema.column(feature)
            grid = (list(default_grids(dataset, [feature])[feature])
                    if column.is_numeric else list(column.values))
        return reply(ice_pd(model, dataset, feature, grid).to_json())

    @app.post("/api/density")
    def density(payload: dict = Body(...)):
        if estimator is None:
            raise ArgumentError("dataset too small for the density estimator")
        row = dataset.schema.validate_row(payload.get("row", []))
        return reply(prediction_confidence(estimator, model, row))

    if STATIC_DIR.is_dir() and any(STATIC_DIR.iterdir()):
        app.mount("/", StaticFiles(directory=STATIC_DIR, html=True), name="ui")
    return app


def serve(config: ServiceConfig) -> None:
    """Load artifacts, build the app and block serving it."""
    import uvicorn

    dataset, model = _load_artifacts(config)
    app = create_app(dataset, model, digest=config.digest(), seed=config.seed,
                     density_n=config.density_n)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
