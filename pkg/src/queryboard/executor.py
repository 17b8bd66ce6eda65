"""Executes concrete subset queries against the in-memory catalog.

Row order contract: deterministic under ORDER BY; otherwise the result is a
row multiset (implementation preserves input/group-encounter order).
"""

from __future__ import annotations

from typing import Union

from .errors import TypeMismatchError, UnknownColumnError
from .relation import ColumnType, ResultTable, Table, TableCatalog
from .sqlast import (
    AggCall,
    And,
    Between,
    Cmp,
    ColumnRef,
    InList,
    Literal,
    Or,
    Predicate,
    Query,
    infer_result_schema,
)

_ORDERING_OPS = ("<", ">", "<=", ">=")


def _operand(table: Table, row: tuple, operand: Union[ColumnRef, Literal]):
    if isinstance(operand, ColumnRef):
        idx = table.column_index(operand.name)
        return table.columns[idx].ctype, row[idx]
    return operand.kind, operand.value


def _eval_predicate(pred: Predicate, table: Table, row: tuple) -> bool:
    if isinstance(pred, Cmp):
        lt, lv = _operand(table, row, pred.lhs)
        rt, rv = _operand(table, row, pred.rhs)
        if lt is not rt:
            raise TypeMismatchError(f"cannot compare {lt} with {rt}")
        if pred.op in _ORDERING_OPS and lt is not ColumnType.NUM:
            raise TypeMismatchError(f"ordering comparison {pred.op!r} requires num values")
        if pred.op == "=":
            return lv == rv
        if pred.op == "!=":
            return lv != rv
        if pred.op == "<":
            return lv < rv
        if pred.op == ">":
            return lv > rv
        if pred.op == "<=":
            return lv <= rv
        return lv >= rv
    if isinstance(pred, And):
        return _eval_predicate(pred.lhs, table, row) and _eval_predicate(pred.rhs, table, row)
    if isinstance(pred, Or):
        return _eval_predicate(pred.lhs, table, row) or _eval_predicate(pred.rhs, table, row)
    if isinstance(pred, Between):
        ct, cv = _operand(table, row, pred.col)
        if ct is not ColumnType.NUM or pred.lo.kind is not ColumnType.NUM or pred.hi.kind is not ColumnType.NUM:
            raise TypeMismatchError("BETWEEN requires num operands")
        return pred.lo.value <= cv <= pred.hi.value
    if isinstance(pred, InList):
        ct, cv = _operand(table, row, pred.col)
        for item in pred.items:
            if item.kind is not ct:
                raise TypeMismatchError(f"IN list item type {item.kind} does not match column ({ct})")
        return any(cv == item.value for item in pred.items)
    raise TypeError(f"not a predicate: {pred!r}")


def _aggregate(call: AggCall, table: Table, rows: list[tuple]):
    if call.fn == "count":
        return len(rows)
    arg = call.arg
    assert isinstance(arg, ColumnRef)
    idx = table.column_index(arg.name)
    if table.columns[idx].ctype is not ColumnType.NUM:
        raise TypeMismatchError(f"{call.fn}() requires a num column, got {arg.name!r}")
    values = [row[idx] for row in rows]
    if call.fn == "sum":
        return sum(values)
    if call.fn == "avg":
        return sum(values) / len(values)
    if call.fn == "min":
        return min(values)
    return max(values)


def execute(query: Query, catalog: TableCatalog) -> ResultTable:
    """Evaluate a fully concrete query; see sqlast for the supported subset."""
    schema = infer_result_schema(query, catalog)
    table = catalog.table(query.table)

    rows = table.rows
    if query.where is not None:
        rows = [row for row in rows if _eval_predicate(query.where, table, row)]

    has_agg = any(isinstance(i.expr, AggCall) for i in query.select)

    if query.group_by:
        key_idx = [table.column_index(c.name) for c in query.group_by]
        groups: dict[tuple, list[tuple]] = {}
        for row in rows:
            groups.setdefault(tuple(row[i] for i in key_idx), []).append(row)
        out_rows = []
        for key, members in groups.items():
            out = []
            for item in query.select:
                expr = item.expr
                if isinstance(expr, AggCall):
                    out.append(_aggregate(expr, table, members))
                elif isinstance(expr, ColumnRef):
                    out.append(members[0][table.column_index(expr.name)])
                else:
                    out.append(expr.value)
            out_rows.append(tuple(out))
    elif has_agg:
        # whole-table aggregation; zero input rows yield zero output rows
        # because the subset has no NULL to put in sum/min/max
        if rows:
            out = []
            for item in query.select:
                if isinstance(item.expr, AggCall):
                    out.append(_aggregate(item.expr, table, rows))
                else:
                    assert isinstance(item.expr, Literal)
                    out.append(item.expr.value)
            out_rows = [tuple(out)]
        else:
            out_rows = []
    else:
        out_rows = []
        for row in rows:
            out = []
            for item in query.select:
                expr = item.expr
                if isinstance(expr, ColumnRef):
                    out.append(row[table.column_index(expr.name)])
                else:
                    assert isinstance(expr, Literal)
                    out.append(expr.value)
            out_rows.append(tuple(out))

    if query.order_by:
        out_names = [name for name, _ in schema.columns]
        for item in reversed(query.order_by):
            if item.col.name not in out_names:
                raise UnknownColumnError(
                    f"ORDER BY column {item.col.name!r} is not in the result; "
                    "sort keys must be selected"
                )
            pos = out_names.index(item.col.name)
            out_rows.sort(key=lambda r, p=pos: r[p], reverse=item.desc)

    if query.limit is not None:
        out_rows = out_rows[: query.limit]

    return ResultTable(columns=[(n or "", t) for n, t in schema.columns], rows=out_rows)
