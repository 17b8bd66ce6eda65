"""End-to-end generation pipeline shared by the HTTP service and the CLI."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import difftree as dt
from .cost import CostBreakdown, CostParams
from .errors import NotExpressiveError
from .mapping import InterfaceSpec, spec_to_json, validate_spec
from .relation import TableCatalog
from .search import SearchConfig, SearchResult, search
from .sqlast import Query, parse_log, parse_query


@dataclass
class GenerationOutput:
    queries: list[str]
    asts: list[Query]
    result: SearchResult
    spec_json: dict

    @property
    def spec(self) -> InterfaceSpec:
        return self.result.spec

    @property
    def breakdown(self) -> CostBreakdown:
        return self.result.breakdown


def generate(
    query_texts: list[str],
    catalog: TableCatalog,
    screen: tuple[int, int] = (1280, 800),
    config: Optional[SearchConfig] = None,
    params: Optional[CostParams] = None,
    collect_trace: bool = False,
) -> GenerationOutput:
    """Parse, search, complete-map, and validate; returns the spec JSON.

    The returned interface is guaranteed to express every input query and to
    pass the full re-validation pass.
    """
    asts = [parse_query(text) for text in query_texts]
    params = params or CostParams(screen=screen)
    result = search(asts, catalog, screen, config, params, collect_trace)

    for text, ast in zip(query_texts, asts):
        if all(dt.expresses(tree, ast) is None for tree in result.state.trees):
            raise NotExpressiveError(text)
    problems = validate_spec(result.spec, catalog, screen)
    if problems:
        raise NotExpressiveError("; ".join(problems))

    spec_json = spec_to_json(result.spec)
    spec_json["search"] = result.config.to_dict()
    spec_json["cost"] = result.breakdown.to_dict()
    return GenerationOutput(list(query_texts), asts, result, spec_json)


def read_log_file(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [text for text, _ in parse_log(fh.read())]
