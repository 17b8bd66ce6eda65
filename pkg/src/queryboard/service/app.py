"""HTTP service wrapping the generation pipeline.

The service is dataset-scoped at startup: every subdirectory of the data
root holding CSV files becomes a dataset (a directory of CSVs given
directly also works). Generated interfaces are stored as immutable
versions V1, V2, ... with a byte-identical snapshot of the input query
log; only the last bindings of a version may change afterwards.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import difftree as dt
from ..cost import CostParams
from ..errors import (
    BindingError,
    EngineError,
    SqlSyntaxError,
    UnsupportedFeatureError,
)
from ..executor import execute
from ..mapping import InterfaceSpec
from ..pipeline import GenerationOutput, generate
from ..relation import TableCatalog, load_dataset
from ..search import SearchConfig
from ..sqlast import render_sql
from .models import (
    ColumnModel,
    ErrorBody,
    ExecuteRequest,
    ExecuteResponse,
    ExportRequest,
    ExportResponse,
    GenerateRequest,
    GenerateResponse,
    VersionDetail,
    VersionSummary,
)


class UnknownDatasetError(EngineError):
    code = "unknown_dataset"


class UnknownVersionError(EngineError):
    code = "unknown_version"


@dataclass
class InterfaceVersion:
    version_id: str
    dataset: str
    spec: InterfaceSpec
    spec_json: dict
    query_log_snapshot: list[str]
    created_at: str
    last_bindings: dict[str, dict] = field(default_factory=dict)


class VersionStore:
    """In-memory version registry with optional JSON-lines persistence.

    A single writer lock serializes generation so version numbering stays
    gap-free; reads are lock-free on immutable version data.
    """

    def __init__(self, state_file: Optional[Path] = None):
        self.versions: dict[str, InterfaceVersion] = {}
        self.lock = threading.Lock()
        self.state_file = state_file

    def next_id(self) -> str:
        return f"V{len(self.versions) + 1}"

    def add(self, version: InterfaceVersion) -> None:
        self.versions[version.version_id] = version
        self._persist(
            {
                "type": "version",
                "version_id": version.version_id,
                "dataset": version.dataset,
                "queries": version.query_log_snapshot,
                "created_at": version.created_at,
                "search": version.spec_json.get("search"),
                "screen": version.spec_json.get("cost", {}).get("params", {}).get("screen"),
            }
        )

    def get(self, version_id: str) -> InterfaceVersion:
        version = self.versions.get(version_id)
        if version is None:
            raise UnknownVersionError(f"no version {version_id!r}")
        return version

    def record_bindings(self, version_id: str, tree_id: str, bindings: dict) -> None:
        self._persist(
            {
                "type": "bindings",
                "version_id": version_id,
                "tree_id": tree_id,
                "bindings": bindings,
            }
        )

    def _persist(self, event: dict) -> None:
        if self.state_file is None:
            return
        with self.state_file.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")


def discover_datasets(data_root: Path) -> dict[str, TableCatalog]:
    datasets: dict[str, TableCatalog] = {}
    if any(data_root.glob("*.csv")):
        datasets[data_root.name] = load_dataset(data_root)
    for child in sorted(data_root.iterdir()):
        if child.is_dir() and any(child.glob("*.csv")):
            datasets[child.name] = load_dataset(child)
    return datasets


def _json_bindings(raw: dict[str, Any]) -> dict:
    """Normalize wire bindings: JSON lists become the tuples bind() expects."""
    out: dict[str, Any] = {}
    for node_id, sel in raw.items():
        if isinstance(sel, list) and sel and all(isinstance(x, int) for x in sel):
            out[node_id] = tuple(sel)
        else:
            out[node_id] = sel
    return out


def create_app(
    data_root: str | Path,
    state_file: Optional[str | Path] = None,
    cost_config: Optional[str | Path] = None,
    frontend_dir: Optional[str | Path] = None,
) -> FastAPI:
    data_root = Path(data_root)
    datasets = discover_datasets(data_root)
    base_params = (
        CostParams.from_file(cost_config) if cost_config else CostParams()
    )
    store = VersionStore(Path(state_file) if state_file else None)

    app = FastAPI(title="queryboard", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.datasets = datasets

    def run_generation(req: GenerateRequest) -> GenerationOutput:
        if req.dataset not in datasets:
            raise UnknownDatasetError(f"no dataset {req.dataset!r}")
        screen = (req.screen.w, req.screen.h)
        config = SearchConfig(
            seed=req.seed if req.seed is not None else 0,
            iterations=req.iterations if req.iterations is not None else 200,
        )
        params = CostParams(
            manipulation=dict(base_params.manipulation),
            nav_unit=base_params.nav_unit,
            overflow_weight=base_params.overflow_weight,
            screen=screen,
        )
        return generate(req.queries, datasets[req.dataset], screen, config, params)

    @app.post("/generate", response_model=GenerateResponse)
    def post_generate(req: GenerateRequest) -> GenerateResponse:
        with store.lock:
            output = run_generation(req)
            version = InterfaceVersion(
                version_id=store.next_id(),
                dataset=req.dataset,
                spec=output.spec,
                spec_json=output.spec_json,
                query_log_snapshot=list(req.queries),
                created_at=datetime.now(timezone.utc).isoformat(),
            )
            store.add(version)
        return GenerateResponse(version_id=version.version_id, spec=version.spec_json)

    @app.post("/execute", response_model=ExecuteResponse)
    def post_execute(req: ExecuteRequest) -> ExecuteResponse:
        version = store.get(req.version_id)
        tree = version.spec.forest.find_tree(req.tree_id)
        if tree is None:
            raise BindingError(f"no tree {req.tree_id!r} in version {req.version_id}")
        base = dict(version.spec.defaults.get(req.tree_id, {}))
        base.update(version.last_bindings.get(req.tree_id, {}))
        base.update(_json_bindings(req.bindings))
        query = dt.bind(tree, base)
        catalog = datasets[version.dataset]
        result = execute(query, catalog)
        with store.lock:
            version.last_bindings[req.tree_id] = base
            store.record_bindings(req.version_id, req.tree_id, _wire_binding(base))
        return ExecuteResponse(
            columns=[ColumnModel(name=n, type=str(t)) for n, t in result.columns],
            rows=[list(row) for row in result.rows],
            sql=render_sql(query),
        )

    @app.post("/export", response_model=ExportResponse)
    def post_export(req: ExportRequest) -> ExportResponse:
        version = store.get(req.version_id)
        statements = []
        for tree in version.spec.forest.trees:
            binding = dict(version.spec.defaults.get(tree.tree_id, {}))
            binding.update(version.last_bindings.get(tree.tree_id, {}))
            statements.append(render_sql(dt.bind(tree, binding)))
        return ExportResponse(sql="\n".join(statements))

    @app.get("/versions", response_model=list[VersionSummary])
    def get_versions() -> list[VersionSummary]:
        return [
            VersionSummary(
                version_id=v.version_id, created_at=v.created_at, dataset=v.dataset
            )
            for v in store.versions.values()
        ]

    @app.get("/versions/{version_id}", response_model=VersionDetail)
    def get_version(version_id: str) -> VersionDetail:
        v = store.get(version_id)
        return VersionDetail(
            version_id=v.version_id,
            created_at=v.created_at,
            dataset=v.dataset,
            query_log_snapshot=list(v.query_log_snapshot),
            spec=v.spec_json,
            last_bindings={t: _wire_binding(b) for t, b in v.last_bindings.items()},
        )

    @app.get("/datasets")
    def get_datasets() -> dict:
        return {
            name: {
                table: [
                    {"name": c.name, "type": str(c.ctype)} for c in cat.tables[table].columns
                ]
                for table in sorted(cat.tables)
            }
            for name, cat in datasets.items()
        }

    _register_error_handlers(app)

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/app", StaticFiles(directory=str(frontend_dir), html=True), name="app")

    if store.state_file is not None and store.state_file.exists():
        _replay_state(store, datasets, run_generation)

    return app


def _wire_binding(binding: dict) -> dict:
    out = {}
    for key, value in binding.items():
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


def _replay_state(store: VersionStore, datasets, run_generation) -> None:
    """Rebuild versions from the JSON-lines state file.

    Generation is deterministic per (queries, seed, iterations), so replaying
    the recorded requests reconstructs byte-identical specs.
    """
    events = []
    with store.state_file.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                events.append(json.loads(line))
    path = store.state_file
    store.state_file = None  # do not re-append while replaying
    for event in events:
        if event["type"] == "version":
            search_cfg = event.get("search") or {}
            screen = event.get("screen") or [1280, 800]
            req = GenerateRequest(
                queries=event["queries"],
                dataset=event["dataset"],
                screen={"w": screen[0], "h": screen[1]},
                seed=search_cfg.get("seed", 0),
                iterations=search_cfg.get("iterations", 200),
            )
            output = run_generation(req)
            store.versions[event["version_id"]] = InterfaceVersion(
                version_id=event["version_id"],
                dataset=event["dataset"],
                spec=output.spec,
                spec_json=output.spec_json,
                query_log_snapshot=list(event["queries"]),
                created_at=event["created_at"],
            )
        elif event["type"] == "bindings":
            version = store.versions.get(event["version_id"])
            if version is not None:
                version.last_bindings[event["tree_id"]] = _json_bindings(
                    event["bindings"]
                )
    store.state_file = path


def _register_error_handlers(app: FastAPI) -> None:
    status_by_code = {
        "parse_error": 400,
        "unsupported_feature": 422,
        "unknown_dataset": 404,
        "unknown_version": 404,
        "binding_error": 400,
        "incomplete_binding": 400,
        "index_out_of_range": 400,
        "unknown_table": 404,
    }

    @app.exception_handler(EngineError)
    def engine_error_handler(request: Request, exc: EngineError) -> JSONResponse:
        status = status_by_code.get(exc.code, 400)
        detail = None
        if isinstance(exc, SqlSyntaxError):
            detail = f"line {exc.line}, column {exc.column}"
        elif isinstance(exc, UnsupportedFeatureError):
            detail = exc.feature
        body = ErrorBody(code=exc.code, message=str(exc), detail=detail)
        return JSONResponse(status_code=status, content=body.model_dump())
