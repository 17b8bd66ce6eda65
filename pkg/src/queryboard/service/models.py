"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ScreenModel(BaseModel):
    w: int = 1280
    h: int = 800


class GenerateRequest(BaseModel):
    queries: list[str] = Field(min_length=1)
    dataset: str
    screen: ScreenModel = Field(default_factory=ScreenModel)
    seed: Optional[int] = None
    iterations: Optional[int] = None


class GenerateResponse(BaseModel):
    version_id: str
    spec: dict[str, Any]


class ExecuteRequest(BaseModel):
    version_id: str
    tree_id: str
    bindings: dict[str, Any]


class ColumnModel(BaseModel):
    name: str
    type: str


class ExecuteResponse(BaseModel):
    columns: list[ColumnModel]
    rows: list[list[Any]]
    sql: str


class ExportRequest(BaseModel):
    version_id: str


class ExportResponse(BaseModel):
    sql: str


class VersionSummary(BaseModel):
    version_id: str
    created_at: str
    dataset: str


class VersionDetail(BaseModel):
    version_id: str
    created_at: str
    dataset: str
    query_log_snapshot: list[str]
    spec: dict[str, Any]
    last_bindings: dict[str, Any]


class ErrorBody(BaseModel):
    code: str
    message: str
    detail: Optional[str] = None
