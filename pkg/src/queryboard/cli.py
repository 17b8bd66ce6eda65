"""Command line interface.

Exit codes: 0 success, 1 query parse/unsupported-feature errors, 2 I/O
errors (missing files, unreadable CSVs).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cost import CostParams
from .difftree import enumerate_queries, initial_forest
from .errors import EngineError, SqlSyntaxError, UnsupportedFeatureError
from .pipeline import generate, read_log_file
from .relation import load_dataset
from .search import SearchConfig, search
from .sqlast import parse_query, render_sql

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_IO = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="queryboard",
        description="Generate interactive visualization interfaces from SQL query logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate an interface spec from a query log")
    gen.add_argument("--log", required=True, help="query log file (one query per line or ;-separated)")
    gen.add_argument("--data", required=True, help="directory of CSV tables")
    gen.add_argument("--width", type=int, default=1280)
    gen.add_argument("--height", type=int, default=800)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--iterations", type=int, default=200)
    gen.add_argument("--trace", help="write a line-delimited JSON search trace to FILE")
    gen.add_argument("--cost-config", help="key=value cost constant overrides")
    gen.add_argument("--out", default="spec.json", help="output spec path (default spec.json)")
    gen.add_argument(
        "--complete-all",
        action="store_true",
        help="complete-search the top 5 states instead of only the best one",
    )

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--data", required=True, help="data root; each CSV subdirectory is a dataset")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--state", help="JSON-lines persistence file for versions")
    srv.add_argument("--cost-config")
    srv.add_argument("--frontend", help="static directory to mount at /app")

    enum = sub.add_parser(
        "enumerate", help="print the expressible queries of the initial and searched states"
    )
    enum.add_argument("--log", required=True)
    enum.add_argument("--data", required=True, help="directory of CSV tables (for column types)")
    enum.add_argument("--seed", type=int, default=0)
    enum.add_argument("--iterations", type=int, default=200)
    enum.add_argument("--cap", type=int, default=200)
    return parser


def cmd_generate(args) -> int:
    texts = read_log_file(args.log)
    catalog = load_dataset(args.data)
    params = CostParams.from_file(args.cost_config) if args.cost_config else CostParams()
    params.screen = (args.width, args.height)
    config = SearchConfig(
        seed=args.seed,
        iterations=args.iterations,
        complete_top=5 if args.complete_all else 1,
    )
    output = generate(
        texts,
        catalog,
        screen=(args.width, args.height),
        config=config,
        params=params,
        collect_trace=bool(args.trace),
    )
    Path(args.out).write_text(json.dumps(output.spec_json, indent=2, sort_keys=True))
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for entry in output.result.trace:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
    print(output.breakdown)
    print(f"spec written to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    texts = read_log_file(args.log)
    catalog = load_dataset(args.data)
    asts = [parse_query(t) for t in texts]
    initial = initial_forest(asts, catalog)
    print(f"initial state: {len(initial.trees)} tree(s)")
    for tree in initial.trees:
        result = enumerate_queries(tree, cap=args.cap)
        suffix = " (truncated)" if result.truncated else ""
        print(f"  {tree.tree_id}: {len(result.queries)} queries{suffix}")
        for query in result.queries:
            print(f"    {render_sql(query)}")
    config = SearchConfig(seed=args.seed, iterations=args.iterations)
    result = search(asts, catalog, (1280, 800), config)
    print(f"searched state: {len(result.state.trees)} tree(s), cost {result.breakdown.total:g}")
    for tree in result.state.trees:
        enum = enumerate_queries(tree, cap=args.cap)
        suffix = " (truncated)" if enum.truncated else ""
        print(f"  {tree.tree_id}: {len(enum.queries)} queries{suffix}")
        for query in enum.queries:
            print(f"    {render_sql(query)}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        args.data,
        state_file=args.state,
        cost_config=args.cost_config,
        frontend_dir=args.frontend,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "enumerate":
            return cmd_enumerate(args)
        return cmd_serve(args)
    except (SqlSyntaxError, UnsupportedFeatureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
