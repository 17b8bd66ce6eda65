"""SQL subset: AST types, parser, canonical renderer, result-schema inference.

Supported grammar (keywords case-insensitive):

    SELECT item [, item]* FROM table
        [WHERE predicate]
        [GROUP BY col [, col]*]
        [ORDER BY col [ASC|DESC] [, ...]]
        [LIMIT n]

    item      := expr [AS name | name]
    expr      := column | literal | agg(column) | count(*)
    predicate := disjunction of conjunctions of comparisons,
                 comparison ops = != < > <= >=, plus BETWEEN and IN (list)

Anything else (JOIN, subqueries, HAVING, DISTINCT, ...) raises
UnsupportedFeatureError so callers can reject it with a precise message.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .errors import (
    SqlSyntaxError,
    TypeMismatchError,
    UnsupportedFeatureError,
)
from .relation import ColumnType, TableCatalog, parse_number

# --- AST nodes -----------------------------------------------------------


@dataclass(frozen=True)
class ColumnRef:
    name: str
    table: Optional[str] = None


@dataclass(frozen=True)
class Literal:
    kind: ColumnType
    value: Union[int, float, str]


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class AggCall:
    fn: str  # count | sum | avg | min | max
    arg: Union[ColumnRef, Star]


Expr = Union[ColumnRef, Literal, AggCall]


@dataclass(frozen=True)
class Cmp:
    op: str  # = != < > <= >=
    lhs: Union[ColumnRef, Literal]
    rhs: Union[ColumnRef, Literal]


@dataclass(frozen=True)
class And:
    lhs: "Predicate"
    rhs: "Predicate"


@dataclass(frozen=True)
class Or:
    lhs: "Predicate"
    rhs: "Predicate"


@dataclass(frozen=True)
class Between:
    col: ColumnRef
    lo: Literal
    hi: Literal


@dataclass(frozen=True)
class InList:
    col: ColumnRef
    items: tuple[Literal, ...]


Predicate = Union[Cmp, And, Or, Between, InList]


@dataclass(frozen=True)
class SelectItem:
    expr: Expr
    alias: Optional[str] = None


@dataclass(frozen=True)
class OrderItem:
    col: ColumnRef
    desc: bool = False


@dataclass(frozen=True)
class Query:
    select: tuple[SelectItem, ...]
    table: str
    where: Optional[Predicate] = None
    group_by: tuple[ColumnRef, ...] = ()
    order_by: tuple[OrderItem, ...] = ()
    limit: Optional[int] = None


AGG_FUNCTIONS = ("count", "sum", "avg", "min", "max")


@dataclass(frozen=True)
class ResultSchema:
    """Ordered (name, type) list; union compatibility ignores names."""

    columns: tuple[tuple[Optional[str], ColumnType], ...]

    def types(self) -> tuple[ColumnType, ...]:
        return tuple(t for _, t in self.columns)

    def union_compatible(self, other: "ResultSchema") -> bool:
        return self.types() == other.types()

    def types_str(self) -> str:
        return "<" + ",".join(str(t) for _, t in self.columns) + ">"

    def __str__(self) -> str:
        parts = []
        for name, ctype in self.columns:
            parts.append(f"{name}:{ctype}" if name else str(ctype))
        return "<" + ",".join(parts) + ">"


# --- tokenizer -----------------------------------------------------------

_KEYWORDS = {
    "select", "from", "where", "group", "order", "by", "limit", "and", "or",
    "between", "in", "as", "asc", "desc",
}

_UNSUPPORTED_KEYWORDS = {
    "join", "inner", "left", "right", "outer", "cross", "union", "having",
    "distinct", "offset", "not", "like", "exists", "case", "with", "null",
    "is", "insert", "update", "delete", "create", "drop",
}

_TWO_CHAR_OPS = ("<=", ">=", "!=", "<>")
_ONE_CHAR_OPS = "=<>(),*."


@dataclass(frozen=True)
class _Token:
    kind: str  # kw | ident | num | str | op | eof
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch == "'":
            j = i + 1
            buf = []
            while j < n:
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    break
                if text[j] == "\n":
                    raise SqlSyntaxError("unterminated string literal", start_line, start_col)
                buf.append(text[j])
                j += 1
            else:
                raise SqlSyntaxError("unterminated string literal", start_line, start_col)
            tokens.append(_Token("str", "".join(buf), start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] in ".eE+-"):
                if text[j] in "+-" and text[j - 1] not in "eE":
                    break
                j += 1
            tokens.append(_Token("num", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            low = word.lower()
            if low in _KEYWORDS:
                tokens.append(_Token("kw", low, start_line, start_col))
            elif low in _UNSUPPORTED_KEYWORDS:
                raise UnsupportedFeatureError(word, start_line, start_col)
            else:
                tokens.append(_Token("ident", word, start_line, start_col))
            col += j - i
            i = j
            continue
        two = text[i : i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(_Token("op", "!=" if two == "<>" else two, start_line, start_col))
            i += 2
            col += 2
            continue
        if ch in _ONE_CHAR_OPS:
            tokens.append(_Token("op", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        raise SqlSyntaxError(f"unexpected character {ch!r}", start_line, start_col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


# --- parser --------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def match_kw(self, *words: str) -> Optional[_Token]:
        tok = self.peek()
        if tok.kind == "kw" and tok.text in words:
            return self.advance()
        return None

    def match_op(self, *ops: str) -> Optional[_Token]:
        tok = self.peek()
        if tok.kind == "op" and tok.text in ops:
            return self.advance()
        return None

    def expect_kw(self, word: str) -> _Token:
        tok = self.match_kw(word)
        if tok is None:
            got = self.peek()
            raise SqlSyntaxError(f"expected {word.upper()}, got {got.text!r}", got.line, got.col)
        return tok

    def expect_op(self, op: str) -> _Token:
        tok = self.match_op(op)
        if tok is None:
            got = self.peek()
            raise SqlSyntaxError(f"expected {op!r}, got {got.text!r}", got.line, got.col)
        return tok

    def expect_ident(self) -> _Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise SqlSyntaxError(f"expected identifier, got {tok.text!r}", tok.line, tok.col)
        return self.advance()

    def parse_query(self) -> Query:
        self.expect_kw("select")
        items = [self.parse_select_item()]
        while self.match_op(","):
            items.append(self.parse_select_item())
        self.expect_kw("from")
        tok = self.peek()
        if tok.kind == "op" and tok.text == "(":
            raise UnsupportedFeatureError("subquery in FROM", tok.line, tok.col)
        table = self.expect_ident().text
        if self.match_op(","):
            tok = self.peek()
            raise UnsupportedFeatureError("multiple FROM tables", tok.line, tok.col)

        where = None
        if self.match_kw("where"):
            where = self.parse_or()

        group_by: tuple[ColumnRef, ...] = ()
        if self.match_kw("group"):
            self.expect_kw("by")
            cols = [self.parse_column_ref()]
            while self.match_op(","):
                cols.append(self.parse_column_ref())
            group_by = tuple(cols)

        order_by: tuple[OrderItem, ...] = ()
        if self.match_kw("order"):
            self.expect_kw("by")
            orders = [self.parse_order_item()]
            while self.match_op(","):
                orders.append(self.parse_order_item())
            order_by = tuple(orders)

        limit = None
        if self.match_kw("limit"):
            tok = self.peek()
            if tok.kind != "num":
                raise SqlSyntaxError("LIMIT requires a number", tok.line, tok.col)
            self.advance()
            value = parse_number(tok.text)
            if not isinstance(value, int) or value < 0:
                raise SqlSyntaxError("LIMIT requires a non-negative integer", tok.line, tok.col)
            limit = value

        tok = self.peek()
        if tok.kind != "eof":
            raise SqlSyntaxError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)

        query = Query(tuple(items), table, where, group_by, order_by, limit)
        _validate(query, self.tokens[0])
        return query

    def parse_select_item(self) -> SelectItem:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "*":
            raise UnsupportedFeatureError("* projection", tok.line, tok.col)
        expr = self.parse_expr()
        alias = None
        if self.match_kw("as"):
            alias = self.expect_ident().text
        elif self.peek().kind == "ident":
            alias = self.advance().text
        if alias == default_name(expr):
            alias = None
        return SelectItem(expr, alias)

    def parse_expr(self) -> Expr:
        tok = self.peek()
        if tok.kind == "ident" and tok.text.lower() in AGG_FUNCTIONS:
            nxt = self.tokens[self.pos + 1]
            if nxt.kind == "op" and nxt.text == "(":
                fn = self.advance().text.lower()
                self.expect_op("(")
                if self.match_op("*"):
                    if fn != "count":
                        raise SqlSyntaxError(f"{fn}(*) is not valid", tok.line, tok.col)
                    arg: Union[ColumnRef, Star] = Star()
                else:
                    arg = self.parse_column_ref()
                self.expect_op(")")
                return AggCall(fn, arg)
        if tok.kind in ("num", "str"):
            return self.parse_literal()
        return self.parse_column_ref()

    def parse_column_ref(self) -> ColumnRef:
        first = self.expect_ident()
        if self.match_op("."):
            name = self.expect_ident()
            return ColumnRef(name.text, first.text)
        return ColumnRef(first.text)

    def parse_literal(self) -> Literal:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Literal(ColumnType.NUM, parse_number(tok.text))
        if tok.kind == "str":
            self.advance()
            return Literal(ColumnType.STR, tok.text)
        if tok.kind == "op" and tok.text == "-":
            raise SqlSyntaxError("unexpected '-'", tok.line, tok.col)
        raise SqlSyntaxError(f"expected literal, got {tok.text!r}", tok.line, tok.col)

    def parse_order_item(self) -> OrderItem:
        col = self.parse_column_ref()
        desc = False
        if self.match_kw("desc"):
            desc = True
        elif self.match_kw("asc"):
            desc = False
        return OrderItem(col, desc)

    def parse_or(self) -> Predicate:
        left = self.parse_and()
        while self.match_kw("or"):
            right = self.parse_and()
            left = Or(left, right)
        return left

    def parse_and(self) -> Predicate:
        left = self.parse_condition()
        while self.match_kw("and"):
            right = self.parse_condition()
            left = And(left, right)
        return left

    def parse_condition(self) -> Predicate:
        if self.match_op("("):
            inner = self.parse_or()
            self.expect_op(")")
            return inner
        operand = self.parse_operand()
        tok = self.peek()
        if tok.kind == "kw" and tok.text == "between":
            if not isinstance(operand, ColumnRef):
                raise SqlSyntaxError("BETWEEN requires a column", tok.line, tok.col)
            self.advance()
            lo = self.parse_literal()
            self.expect_kw("and")
            hi = self.parse_literal()
            if (
                lo.kind is ColumnType.NUM
                and hi.kind is ColumnType.NUM
                and lo.value > hi.value
            ):
                raise SqlSyntaxError("BETWEEN bounds out of order", tok.line, tok.col)
            return Between(operand, lo, hi)
        if tok.kind == "kw" and tok.text == "in":
            if not isinstance(operand, ColumnRef):
                raise SqlSyntaxError("IN requires a column", tok.line, tok.col)
            self.advance()
            self.expect_op("(")
            items = [self.parse_literal()]
            while self.match_op(","):
                items.append(self.parse_literal())
            self.expect_op(")")
            return InList(operand, tuple(items))
        op_tok = self.match_op("=", "!=", "<", ">", "<=", ">=")
        if op_tok is None:
            got = self.peek()
            raise SqlSyntaxError(f"expected comparison, got {got.text!r}", got.line, got.col)
        rhs = self.parse_operand()
        return Cmp(op_tok.text, operand, rhs)

    def parse_operand(self) -> Union[ColumnRef, Literal]:
        tok = self.peek()
        if tok.kind in ("num", "str"):
            return self.parse_literal()
        return self.parse_column_ref()


def _validate(query: Query, origin: _Token) -> None:
    if query.group_by:
        grouped = {c.name for c in query.group_by}
        for item in query.select:
            if isinstance(item.expr, AggCall):
                continue
            if isinstance(item.expr, ColumnRef) and item.expr.name in grouped:
                continue
            raise SqlSyntaxError(
                "select items must be grouped columns or aggregates under GROUP BY",
                origin.line,
                origin.col,
            )
    else:
        has_agg = any(isinstance(i.expr, AggCall) for i in query.select)
        has_plain = any(isinstance(i.expr, ColumnRef) for i in query.select)
        if has_agg and has_plain:
            raise SqlSyntaxError(
                "cannot mix aggregates and plain columns without GROUP BY",
                origin.line,
                origin.col,
            )


def parse_query(text: str) -> Query:
    """Parse one query of the supported subset into its AST."""
    tokens = _tokenize(text)
    if tokens[0].kind == "eof":
        raise SqlSyntaxError("empty query", 1, 1)
    return _Parser(tokens).parse_query()


def parse_log(text: str) -> list[tuple[str, Query]]:
    """Parse a query-log file: one query per line, or semicolon separated.

    Returns (original text, ast) pairs; "--" line comments are dropped.
    """
    stripped = "\n".join(
        line for line in text.splitlines() if not line.lstrip().startswith("--")
    )
    if ";" in stripped:
        chunks = stripped.split(";")
    else:
        chunks = stripped.splitlines()
    out = []
    for chunk in chunks:
        sql = chunk.strip()
        if sql:
            out.append((sql, parse_query(sql)))
    return out


# --- rendering -----------------------------------------------------------


def default_name(expr: Expr) -> str:
    if isinstance(expr, ColumnRef):
        return expr.name
    if isinstance(expr, AggCall):
        return expr.fn
    return render_expr(expr)


def render_literal(lit: Literal) -> str:
    if lit.kind is ColumnType.STR:
        escaped = str(lit.value).replace("'", "''")
        return f"'{escaped}'"
    return repr(lit.value) if isinstance(lit.value, float) else str(lit.value)


def render_expr(expr: Expr) -> str:
    if isinstance(expr, ColumnRef):
        return f"{expr.table}.{expr.name}" if expr.table else expr.name
    if isinstance(expr, Literal):
        return render_literal(expr)
    if isinstance(expr, AggCall):
        arg = "*" if isinstance(expr.arg, Star) else render_expr(expr.arg)
        return f"{expr.fn}({arg})"
    raise TypeError(f"not an expression: {expr!r}")


def render_predicate(pred: Predicate, parent: str = "") -> str:
    if isinstance(pred, Cmp):
        return f"{render_expr(pred.lhs)} {pred.op} {render_expr(pred.rhs)}"
    if isinstance(pred, Between):
        return (
            f"{render_expr(pred.col)} BETWEEN "
            f"{render_literal(pred.lo)} AND {render_literal(pred.hi)}"
        )
    if isinstance(pred, InList):
        items = ", ".join(render_literal(i) for i in pred.items)
        return f"{render_expr(pred.col)} IN ({items})"
    if isinstance(pred, And):
        text = f"{render_predicate(pred.lhs, 'and')} AND {render_predicate(pred.rhs, 'and')}"
        return text
    if isinstance(pred, Or):
        text = f"{render_predicate(pred.lhs, 'or')} OR {render_predicate(pred.rhs, 'or')}"
        # preserve precedence: OR nested under AND needs parentheses
        return f"({text})" if parent == "and" else text
    raise TypeError(f"not a predicate: {pred!r}")


def render_sql(query: Query) -> str:
    """Canonical single-line SQL: parse_query(render_sql(q)) == q."""
    parts = ["SELECT"]
    items = []
    for item in query.select:
        text = render_expr(item.expr)
        if item.alias:
            text += f" AS {item.alias}"
        items.append(text)
    parts.append(", ".join(items))
    parts.append("FROM")
    parts.append(query.table)
    if query.where is not None:
        parts.append("WHERE")
        parts.append(render_predicate(query.where))
    if query.group_by:
        parts.append("GROUP BY")
        parts.append(", ".join(render_expr(c) for c in query.group_by))
    if query.order_by:
        parts.append("ORDER BY")
        rendered = []
        for item in query.order_by:
            rendered.append(render_expr(item.col) + (" DESC" if item.desc else ""))
        parts.append(", ".join(rendered))
    if query.limit is not None:
        parts.append(f"LIMIT {query.limit}")
    return " ".join(parts)


# --- schema inference ----------------------------------------------------


def infer_result_schema(query: Query, catalog: TableCatalog) -> ResultSchema:
    table = catalog.table(query.table)
    columns: list[tuple[Optional[str], ColumnType]] = []
    for item in query.select:
        expr = item.expr
        name = item.alias or default_name(expr)
        if isinstance(expr, ColumnRef):
            ctype = table.column(expr.name).ctype
        elif isinstance(expr, Literal):
            ctype = expr.kind
        elif isinstance(expr, AggCall):
            if expr.fn == "count":
                ctype = ColumnType.NUM
            else:
                arg = expr.arg
                assert isinstance(arg, ColumnRef)
                arg_type = table.column(arg.name).ctype
                if arg_type is not ColumnType.NUM:
                    raise TypeMismatchError(
                        f"{expr.fn}() requires a num column, got {arg.name!r} ({arg_type})"
                    )
                ctype = ColumnType.NUM
        else:
            raise TypeError(f"unexpected select expression {expr!r}")
        columns.append((name, ctype))
    # validate remaining column references eagerly
    for pred_col in _referenced_columns(query):
        table.column(pred_col.name)
    return ResultSchema(tuple(columns))


def _referenced_columns(query: Query):
    def walk(pred):
        if isinstance(pred, Cmp):
            for side in (pred.lhs, pred.rhs):
                if isinstance(side, ColumnRef):
                    yield side
        elif isinstance(pred, (And, Or)):
            yield from walk(pred.lhs)
            yield from walk(pred.rhs)
        elif isinstance(pred, Between):
            yield pred.col
        elif isinstance(pred, InList):
            yield pred.col

    if query.where is not None:
        yield from walk(query.where)
    yield from query.group_by
    for item in query.order_by:
        yield item.col
